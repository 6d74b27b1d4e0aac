#include "family.hpp"

#include <cmath>
#include <stdexcept>

#include "numeric.hpp"

namespace ncfam {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::IS: return "is";
    case Kind::PO: return "po";
    case Kind::NC: return "nc";
    case Kind::InvPO: return "invpo";
    case Kind::InvIS: return "invis";
  }
  return "?";
}

std::optional<Kind> parse_kind(std::string_view name) {
  for (Kind k : kAllKinds)
    if (name == kind_name(k)) return k;
  return std::nullopt;
}

namespace {

void require_finite(double logratio) {
  if (!std::isfinite(logratio))
    throw std::invalid_argument("nonlinearity: log-ratio must be finite");
}

}  // namespace

GPair g_values(Kind k, double logratio) {
  require_finite(logratio);
  const double l = logratio;
  switch (k) {
    case Kind::IS: return {l, std::exp(l)};
    case Kind::PO: return {std::exp(l), 0.5 * std::exp(2.0 * l)};
    case Kind::NC: return {-softplus(-l), softplus(l)};
    case Kind::InvPO: return {-0.5 * std::exp(-2.0 * l), -std::exp(-l)};
    case Kind::InvIS: return {-std::exp(-l), l};
  }
  throw std::logic_error("unreachable");
}

WeightPair weights_from_logratio(Kind k, double logratio) {
  require_finite(logratio);
  const double l = logratio;
  switch (k) {
    case Kind::IS: return {1.0, std::exp(l)};
    case Kind::PO: return {std::exp(l), std::exp(2.0 * l)};
    case Kind::NC: return {sigmoid(-l), sigmoid(l)};
    case Kind::InvPO: return {std::exp(-2.0 * l), std::exp(-l)};
    case Kind::InvIS: return {std::exp(-l), 1.0};
  }
  throw std::logic_error("unreachable");
}

bool check_pairing(Kind k, double q, double h, double tol) {
  if (!(q > 0.0)) throw std::domain_error("check_pairing: q must be positive");
  if (!(h > 0.0) || !(q - h > 0.0))
    throw std::invalid_argument("check_pairing: need 0 < h < q");
  const GPair hi = g_values(k, std::log(q + h));
  const GPair lo = g_values(k, std::log(q - h));
  const double dg1 = hi.g1 - lo.g1;
  const double dg2 = hi.g2 - lo.g2;
  if (dg1 == 0.0 || !std::isfinite(dg1) || !std::isfinite(dg2)) return false;
  return std::abs(dg2 / dg1 - q) <= tol * q;
}

WeightPair CustomPair::weights(double logratio) const {
  require_finite(logratio);
  const double g2p = g2prime_of_logratio(logratio);
  // g1'(q)q = g2'(q) by the pairing identity; g2'(q)q on the noise side.
  return {g2p, g2p * std::exp(logratio)};
}

}  // namespace ncfam
