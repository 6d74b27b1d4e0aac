#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace ncfam {

// The five built-in nonlinearity pairs. Each pair (g1, g2) of increasing
// functions on (0, inf) with g2'(q)/g1'(q) = q defines one estimator.
enum class Kind { IS, PO, NC, InvPO, InvIS };

inline constexpr Kind kAllKinds[] = {Kind::IS, Kind::PO, Kind::NC, Kind::InvPO,
                                     Kind::InvIS};

const char* kind_name(Kind k);
std::optional<Kind> parse_kind(std::string_view name);

struct GPair {
  double g1;
  double g2;
};

// Per-sample gradient weights. The data side carries g1'(q)*q (which equals
// g2'(q) under the pairing identity) and the noise side g2'(q)*q.
struct WeightPair {
  double data_weight;
  double noise_weight;
};

// Evaluates (g1(q), g2(q)) at q = exp(logratio) without forming exp(logratio)
// where the closed form allows it:
//   IS    (log q, q)            -> (l, e^l)
//   PO    (q, q^2/2)            -> (e^l, e^{2l}/2)
//   NC    (log(q/(1+q)), log(1+q)) -> (-softplus(-l), softplus(l))
//   InvPO (-1/(2q^2), -1/q)     -> (-e^{-2l}/2, -e^{-l})
//   InvIS (-1/q, log q)         -> (-e^{-l}, l)
// Exponentials saturate to +inf past the representable range; the caller is
// responsible for flagging such samples.
// Note the InvPO g2 is -1/q: that is the sign that keeps g2 increasing and
// the derivative ratio g2'/g1' equal to q.
GPair g_values(Kind k, double logratio);

// (g1'(q)q, g2'(q)q) at q = exp(logratio), in saturating form:
//   IS (1, e^l), PO (e^l, e^{2l}), NC (sigmoid(-l), sigmoid(l)),
//   InvPO (e^{-2l}, e^{-l}), InvIS (e^{-l}, 1).
WeightPair weights_from_logratio(Kind k, double logratio);

// Central-difference check of g2'(q)/g1'(q) = q at a single q.
// h is the absolute step; requires q - h > 0.
bool check_pairing(Kind k, double q, double h, double tol);

// A user-supplied pair, registered through its g2' on the log-ratio scale.
// g1' follows from the pairing identity, so gradient weights are available
// in closed form; g1/g2 values themselves are not (reconstruct them by
// quadrature in tests if needed; the estimation path never does).
struct CustomPair {
  std::string name;
  std::function<double(double)> g2prime_of_logratio;

  WeightPair weights(double logratio) const;
};

}  // namespace ncfam
