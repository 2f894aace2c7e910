#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hsmrc/awgn_mi.hpp"
#include "hsmrc/compensated.hpp"
#include "hsmrc/errors.hpp"
#include "hsmrc/nakagami_mi.hpp"
#include "hsmrc/pfd.hpp"
#include "hsmrc/quadrature.hpp"
#include "hsmrc/special_functions.hpp"

// Ergodic mutual information of the H-S/MRC receiver: the partial-fraction
// weights turn E[I(Gamma)] into a weighted sum of single-branch Nakagami
// averages,
//   C = sum_{k=1}^{L} A_{1,k} I_B(k, k gbar)
//     + sum_{n=2}^{N_r-L+1} A_{n,1} I_B(1, gbar L/(L+n-1)),
// served by three interchangeable engines (general analytic recursion,
// accelerated closed forms for L <= 2, Laguerre quadrature reference) plus the
// Monte-Carlo simulator in its own module.  QPSK values compose as two BPSK
// dimensions at half the per-symbol SNR.
//
// Weighted assemblies run in __float128: the A_{n,k} alternate and grow fast,
// and the final value is O(1), so the accumulator must not add its own
// cancellation to the intrinsic one.

namespace hsmrc {

using Engine = nakagami::Engine;
using MiEstimate = nakagami::MiEstimate;

namespace detail {

inline MiEstimate finish_bpsk(__float128 acc, Engine engine, int k_terms, double diag) {
  const double raw = (double)acc;
  const double clamped = std::clamp(raw, 0.0, awgn::ln2);
  return {clamped, engine, k_terms, std::max(diag, std::fabs(raw - clamped))};
}

inline MiEstimate compose_qpsk(MiEstimate e) {
  e.nats *= 2.0;
  e.diagnostic *= 2.0;
  return e;
}

inline pfd::SystemConfig bpsk_half(const pfd::SystemConfig& cfg) {
  pfd::SystemConfig h = cfg;
  h.gamma_bar *= 0.5;
  h.modulation = awgn::Modulation::bpsk;
  return h;
}

}  // namespace detail

// General engine: every component through the analytic recursion chain.
inline MiEstimate ergodic_mi_general(const pfd::SystemConfig& cfg, int k_terms = 10) {
  cfg.validate();
  if (cfg.modulation == awgn::Modulation::qpsk)
    return detail::compose_qpsk(ergodic_mi_general(detail::bpsk_half(cfg), k_terms));
  const auto ex = pfd::pfd_coefficients(cfg);
  StableSum<__float128> acc;
  double diag = 0.0;
  for (int k = 1; k <= cfg.l; ++k) {
    nakagami::RecursionParams p{k, k, k * cfg.gamma_bar, k_terms};
    const double ib = awgn::ln2 - nakagami::detail::f_chain(p, &diag);
    acc.add(ex.weights_q[0][k - 1] * (__float128)ib);
  }
  for (std::size_t n = 1; n < ex.poles.size(); ++n) {
    const double mean_n = -1.0 / ex.poles[n].c;
    nakagami::RecursionParams p{1, 1, mean_n, k_terms};
    const double ib = awgn::ln2 - nakagami::detail::f_chain(p, &diag);
    acc.add(ex.weights_q[n][0] * (__float128)ib);
  }
  return detail::finish_bpsk(acc.value(), Engine::recursive, k_terms, diag);
}

// Selection combining (L = 1) accelerated closed form.
inline MiEstimate ergodic_mi_sc(int n_r, double gamma_bar, int k_terms = 10) {
  if (n_r < 1) throw std::invalid_argument("ergodic_mi_sc: n_r must be >= 1");
  if (!(gamma_bar > 0.0)) throw std::invalid_argument("ergodic_mi_sc: gamma_bar must be positive");
  if (k_terms < 1) throw std::invalid_argument("ergodic_mi_sc: k_terms must be >= 1");
  const auto a = pfd::detail::sc_coefficients_q(n_r);
  StableSum<__float128> acc;
  double diag = 0.0;
  for (int n = 1; n <= n_r; ++n) {
    const double gb = gamma_bar / n;
    const double pref = std::sqrt(gb / (2.0 + gb));
    const auto b = special::detail::beta_accel(special::t_factor(1, gb), k_terms);
    acc.add(a[n - 1] * (__float128)(pref * b.value));
    diag = std::max(diag, std::fabs((double)a[n - 1]) * pref * b.tail);
  }
  return detail::finish_bpsk(acc.value(), Engine::closed_form, k_terms, diag);
}

namespace detail {

// L = 2 accelerated closed form.  The double-pole bracket is the exact m = 2
// single-branch value at mean 2 gbar,
//   I_B(2, 2g) = sqrt(g/(2+g)) (3+g)/(2+g) beta(T) + 1/(4+2g) beta'2(T),
// T = t_factor(2, 2g); the remaining terms are m = 1 values at the simple-pole
// component means 2g/(n+1).  Their pole argument is t_factor(1, mean); the
// t_factor(2, mean) variant is kept behind a flag purely as a diagnostic of
// how far that (wrong) argument drifts from the quadrature oracle.
inline MiEstimate l2_impl(int n_r, double gamma_bar, int k_terms, bool simple_terms_use_t1) {
  if (n_r < 2) throw std::invalid_argument("ergodic_mi_l2: n_r must be >= 2");
  if (!(gamma_bar > 0.0)) throw std::invalid_argument("ergodic_mi_l2: gamma_bar must be positive");
  if (k_terms < 1) throw std::invalid_argument("ergodic_mi_l2: k_terms must be >= 1");
  const auto co = pfd::detail::l2_coefficients_q(n_r);
  StableSum<__float128> acc;
  double diag = 0.0;

  const double g2 = 2.0 * gamma_bar;
  const double t2 = special::t_factor(2, g2);
  const auto b = special::detail::beta_accel(t2, k_terms);
  const auto bp = special::detail::beta_prime2_accel(t2, k_terms);
  const double c_beta = std::sqrt(gamma_bar / (2.0 + gamma_bar)) * (3.0 + gamma_bar) / (2.0 + gamma_bar);
  const double c_bp = 1.0 / (4.0 + g2);
  acc.add(co.a12 * (__float128)(c_beta * b.value + c_bp * bp.value));
  diag = std::max(diag, std::fabs((double)co.a12) * (c_beta * b.tail + c_bp * bp.tail));

  for (int n = 1; n <= n_r - 1; ++n) {
    const double mean_n = 2.0 * gamma_bar / (n + 1);
    const double pref = std::sqrt(mean_n / (2.0 + mean_n));
    const double t = special::t_factor(simple_terms_use_t1 ? 1 : 2, mean_n);
    const auto bn = special::detail::beta_accel(t, k_terms);
    acc.add(co.an1[n - 1] * (__float128)(pref * bn.value));
    diag = std::max(diag, std::fabs((double)co.an1[n - 1]) * pref * bn.tail);
  }
  return finish_bpsk(acc.value(), Engine::closed_form, k_terms, diag);
}

}  // namespace detail

inline MiEstimate ergodic_mi_l2(int n_r, double gamma_bar, int k_terms = 10) {
  return detail::l2_impl(n_r, gamma_bar, k_terms, true);
}

// Diagnostic-only variant with the drifted pole argument in the simple-pole
// terms; disagrees with the quadrature oracle by design.
inline MiEstimate ergodic_mi_l2_t2(int n_r, double gamma_bar, int k_terms = 10) {
  return detail::l2_impl(n_r, gamma_bar, k_terms, false);
}

// Reference engine: same weighted assembly with every component through the
// deficit-form Laguerre average.  The passed rule fixes the order; components
// whose Gamma shape differs from rule.alpha + 1 use a cached rule of the same
// order with the matching alpha.
inline MiEstimate ergodic_mi_quadrature(const pfd::SystemConfig& cfg,
                                        const quadrature::QuadratureRule& rule) {
  cfg.validate();
  if (rule.kind != quadrature::WeightKind::generalized_laguerre)
    throw std::invalid_argument("ergodic_mi_quadrature: rule must be generalized-Laguerre");
  if (cfg.modulation == awgn::Modulation::qpsk)
    return detail::compose_qpsk(ergodic_mi_quadrature(detail::bpsk_half(cfg), rule));
  const auto ex = pfd::pfd_coefficients(cfg);
  const int order = rule.order();
  StableSum<__float128> acc;
  StableSum<__float128> diag_acc;
  auto component = [&](int m, double mean, __float128 weight) {
    const auto& r = (rule.alpha == static_cast<double>(m - 1))
                        ? rule
                        : nakagami::detail::cached_laguerre(order, m - 1);
    const auto e = nakagami::nakagami_mi_quadrature(m, mean, r);
    acc.add(weight * (__float128)e.nats);
    const __float128 aw = weight < 0 ? -weight : weight;
    diag_acc.add(aw * (__float128)e.diagnostic);
  };
  for (int k = 1; k <= cfg.l; ++k) component(k, k * cfg.gamma_bar, ex.weights_q[0][k - 1]);
  for (std::size_t n = 1; n < ex.poles.size(); ++n)
    component(1, -1.0 / ex.poles[n].c, ex.weights_q[n][0]);
  return detail::finish_bpsk(acc.value(), Engine::quadrature, 0, (double)diag_acc.value());
}

inline MiEstimate ergodic_mi_quadrature(const pfd::SystemConfig& cfg) {
  return ergodic_mi_quadrature(cfg, nakagami::detail::cached_laguerre(128, 0));
}

inline Engine default_engine(const pfd::SystemConfig& cfg) {
  return cfg.l <= 2 ? Engine::closed_form : Engine::recursive;
}

// Engine dispatcher.  closed_form serves L <= 2 only; recursive and
// closed_form fall back to quadrature on SingularFactor unless the caller
// forbids it.  Monte-Carlo lives in the simulator module and is routed there
// by the CLI, not here.
inline MiEstimate ergodic_mi(const pfd::SystemConfig& cfg, Engine engine, int k_terms = 10,
                             bool allow_fallback = true) {
  cfg.validate();
  switch (engine) {
    case Engine::closed_form: {
      if (cfg.l > 2)
        throw std::invalid_argument("closed-form engine requires L in {1, 2}");
      if (cfg.modulation == awgn::Modulation::qpsk)
        return detail::compose_qpsk(
            ergodic_mi(detail::bpsk_half(cfg), Engine::closed_form, k_terms, allow_fallback));
      try {
        return cfg.l == 1 ? ergodic_mi_sc(cfg.n_r, cfg.gamma_bar, k_terms)
                          : ergodic_mi_l2(cfg.n_r, cfg.gamma_bar, k_terms);
      } catch (const SingularFactor&) {
        if (!allow_fallback) throw;
        return ergodic_mi_quadrature(cfg);
      }
    }
    case Engine::recursive: {
      try {
        return ergodic_mi_general(cfg, k_terms);
      } catch (const SingularFactor&) {
        if (!allow_fallback) throw;
        return ergodic_mi_quadrature(cfg);
      }
    }
    case Engine::quadrature:
      return ergodic_mi_quadrature(cfg);
    case Engine::monte_carlo:
      throw std::invalid_argument("monte-carlo engine is provided by the simulator module");
  }
  throw std::logic_error("ergodic_mi: unknown engine");
}

inline MiEstimate ergodic_mi(const pfd::SystemConfig& cfg, int k_terms = 10) {
  return ergodic_mi(cfg, default_engine(cfg), k_terms);
}

}  // namespace hsmrc
