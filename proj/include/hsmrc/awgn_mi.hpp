#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hsmrc/quadrature.hpp"

// BPSK/QPSK input-output mutual information over static AWGN as a function of
// instantaneous SNR.  The BPSK value is
//   I(g) = ln2 - E_U[ ln(1 + exp(-2 sqrt(g) U - 2 g)) ],  U ~ N(0,1),
// evaluated by Gauss-Hermite quadrature after u = sqrt(2) t.  All values are
// nats; bits are a presentation-layer conversion.

namespace hsmrc::awgn {

enum class Modulation { bpsk, qpsk };

using MiValue = double;  // nats

inline constexpr double ln2 = 0.69314718055994530942;

namespace detail {

// ln(1 + exp(-s)) for any real s without overflow:
// large s -> exp(-s) (leading term, underflows to 0 past ~745),
// very negative s -> -s + exp(s).
inline double log1p_exp_neg(double s) {
  if (s > 36.0) return std::exp(-s);
  if (s < -36.0) return -s + std::exp(s);
  return std::log1p(std::exp(-s));
}

// E_U[ln(1+exp(-2 sqrt(g) U - 2 g))]: the gap between ln2 and the BPSK MI.
// Kept separate so large-SNR tails retain full relative precision instead of
// being rounded away inside ln2 - I.
inline double mi_deficit(double gamma, const quadrature::QuadratureRule& rule) {
  const double a = 2.0 * std::sqrt(2.0 * gamma);  // u = sqrt(2) t substitution
  const double b = 2.0 * gamma;
  double acc = 0.0;
  const int n = rule.order();
  for (int i = 0; i < n; ++i)
    acc += rule.weights[i] * log1p_exp_neg(a * rule.nodes[i] + b);
  constexpr double inv_sqrt_pi = 0.56418958354775628695;
  return acc * inv_sqrt_pi;
}

inline const quadrature::QuadratureRule& default_hermite() {
  static const quadrature::QuadratureRule rule = quadrature::gauss_hermite(64);
  return rule;
}

}  // namespace detail

inline MiValue bpsk_mi(double gamma, const quadrature::QuadratureRule& rule) {
  if (!(gamma >= 0.0)) throw std::domain_error("bpsk_mi: gamma must be nonnegative");
  if (rule.kind != quadrature::WeightKind::hermite)
    throw std::invalid_argument("bpsk_mi: rule must be Hermite kind");
  if (gamma == 0.0) return 0.0;  // integrand is the constant ln2
  const double v = ln2 - detail::mi_deficit(gamma, rule);
  return std::clamp(v, 0.0, ln2);
}

inline MiValue bpsk_mi(double gamma) { return bpsk_mi(gamma, detail::default_hermite()); }

// QPSK = two orthogonal unit-total-power BPSK dimensions, each at half the
// per-symbol SNR.
inline MiValue constellation_mi(double gamma, Modulation mod,
                                const quadrature::QuadratureRule& rule) {
  if (!(gamma >= 0.0))
    throw std::domain_error("constellation_mi: gamma must be nonnegative");
  if (mod == Modulation::bpsk) return bpsk_mi(gamma, rule);
  return 2.0 * bpsk_mi(0.5 * gamma, rule);
}

inline MiValue constellation_mi(double gamma, Modulation mod) {
  return constellation_mi(gamma, mod, detail::default_hermite());
}

}  // namespace hsmrc::awgn
