#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

// Gaussian quadrature rules for the two weight functions the library needs:
// exp(-u^2) on the whole line (Hermite) and x^alpha exp(-x) on the half line
// (generalized Laguerre).  Nodes are located by Sturm-count bisection on the
// Jacobi matrix -- which brackets every root unconditionally, including
// order 256 with alpha in the tens, where the textbook initial-guess Newton
// recipes skip or scramble roots -- and then polished by Newton iteration to
// relative tolerance 1e-14.  Weights are Christoffel numbers accumulated with
// overflow-safe rescaling.

namespace hsmrc::quadrature {

enum class WeightKind { hermite, generalized_laguerre };

struct QuadratureRule {
  WeightKind kind = WeightKind::hermite;
  double alpha = 0.0;  // Laguerre exponent; unused for Hermite
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const noexcept { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Symmetric tridiagonal Jacobi matrix in recurrence form.  off[j] couples
// rows j and j+1; off[n-1] is the closing coefficient sqrt(beta_n) used only
// to extend the polynomial recurrence one step past the matrix.
struct JacobiMatrix {
  std::vector<double> diag;
  std::vector<double> off;
};

inline JacobiMatrix hermite_jacobi(int n) {
  JacobiMatrix J;
  J.diag.assign(n, 0.0);
  J.off.resize(n);
  for (int j = 1; j <= n; ++j) J.off[j - 1] = std::sqrt(0.5 * j);
  return J;
}

inline JacobiMatrix laguerre_jacobi(int n, double alpha) {
  JacobiMatrix J;
  J.diag.resize(n);
  J.off.resize(n);
  for (int j = 0; j < n; ++j) J.diag[j] = 2.0 * j + alpha + 1.0;
  for (int j = 1; j <= n; ++j) J.off[j - 1] = std::sqrt(j * (j + alpha));
  return J;
}

// Number of eigenvalues strictly below x (LDL^T pivot count).
inline int sturm_count(const JacobiMatrix& J, int n, double x, double pivmin) {
  int count = 0;
  double d = 1.0;
  for (int j = 0; j < n; ++j) {
    const double off2 = (j > 0) ? J.off[j - 1] * J.off[j - 1] : 0.0;
    d = (J.diag[j] - x) - off2 / d;
    if (std::fabs(d) < pivmin) d = -pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

// Newton correction p_n(x)/p_n'(x) from the scaled orthonormal recurrence.
inline double newton_step(const JacobiMatrix& J, int n, double x) {
  double pm = 0.0, p = 1.0;
  double dpm = 0.0, dp = 0.0;
  for (int j = 0; j < n; ++j) {
    const double inv = 1.0 / J.off[j];
    const double back = (j > 0) ? J.off[j - 1] : 0.0;
    const double pn = ((x - J.diag[j]) * p - back * pm) * inv;
    const double dpn = (p + (x - J.diag[j]) * dp - back * dpm) * inv;
    pm = p;
    p = pn;
    dpm = dp;
    dp = dpn;
    if (std::fabs(p) > 1e250 || std::fabs(dp) > 1e250) {
      constexpr double c = 1e-250;
      pm *= c;
      p *= c;
      dpm *= c;
      dp *= c;
    }
  }
  return p / dp;
}

// ln and linear pieces of 1/sum_{j<n} p_j(x)^2 with p_0 = 1.
struct ChristoffelParts {
  double sum;       // scaled sum of squares
  double logscale;  // true sum = sum * exp(2*logscale)
};

inline ChristoffelParts christoffel_parts(const JacobiMatrix& J, int n, double x) {
  double pm = 0.0, p = 1.0;
  double S = 1.0;
  double logscale = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double back = (j > 0) ? J.off[j - 1] : 0.0;
    const double pn = ((x - J.diag[j]) * p - back * pm) / J.off[j];
    pm = p;
    p = pn;
    S += p * p;
    if (std::fabs(p) > 1e200) {
      constexpr double c = 1e-200;
      pm *= c;
      p *= c;
      S *= c * c;
      logscale += 460.51701859880913680;  // ln(1e200)
    }
  }
  return {S, logscale};
}

inline QuadratureRule build_rule(WeightKind kind, int n, double alpha, double mu0) {
  const JacobiMatrix J =
      (kind == WeightKind::hermite) ? hermite_jacobi(n) : laguerre_jacobi(n, alpha);

  // Gershgorin enclosure of the spectrum.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double off2max = 1.0;
  for (int j = 0; j < n; ++j) {
    const double r = ((j > 0) ? J.off[j - 1] : 0.0) + ((j + 1 < n) ? J.off[j] : 0.0);
    lo = std::min(lo, J.diag[j] - r);
    hi = std::max(hi, J.diag[j] + r);
    off2max = std::max(off2max, J.off[j] * J.off[j]);
  }
  lo -= 1.0;
  hi += 1.0;
  const double pivmin = std::sqrt(std::numeric_limits<double>::min()) * off2max;

  QuadratureRule rule;
  rule.kind = kind;
  rule.alpha = (kind == WeightKind::hermite) ? 0.0 : alpha;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  for (int i = 1; i <= n; ++i) {
    // Bisect for the leftmost x with count(x) >= i.
    double a = lo, b = hi;
    while (b - a > 1e-10 * std::max({1.0, std::fabs(a), std::fabs(b)})) {
      const double mid = 0.5 * (a + b);
      if (sturm_count(J, n, mid, pivmin) >= i)
        b = mid;
      else
        a = mid;
    }
    // Newton polish inside the bracket.
    double x = 0.5 * (a + b);
    for (int it = 0; it < 100; ++it) {
      double xn = x - newton_step(J, n, x);
      if (xn < a) xn = 0.5 * (x + a);
      if (xn > b) xn = 0.5 * (x + b);
      const bool done = std::fabs(xn - x) <= 1e-14 * std::max(1.0, std::fabs(xn));
      x = xn;
      if (done) {
        x -= newton_step(J, n, x);  // one final full-precision step
        break;
      }
    }
    rule.nodes[i - 1] = x;

    const ChristoffelParts cp = christoffel_parts(J, n, x);
    if (cp.logscale == 0.0)
      rule.weights[i - 1] = mu0 / cp.sum;
    else
      // May underflow to zero for extreme-tail nodes of very-high-order
      // Laguerre rules whose true weights sit below the double subnormal
      // range; those contribute nothing to any double-precision integral.
      rule.weights[i - 1] = mu0 * std::exp(-(std::log(cp.sum) + 2.0 * cp.logscale));
  }

  if (kind == WeightKind::hermite) {
    // Enforce the exact symmetry of the weight function.
    std::vector<double> xs(n), ws(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = 0.5 * (rule.nodes[i] - rule.nodes[n - 1 - i]);
      ws[i] = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    }
    rule.nodes = std::move(xs);
    rule.weights = std::move(ws);
  }
  return rule;
}

}  // namespace detail

inline QuadratureRule gauss_hermite(int order) {
  if (order < 1 || order > 256)
    throw std::domain_error("gauss_hermite: order must be in [1, 256]");
  constexpr double sqrt_pi = 1.7724538509055160273;
  return detail::build_rule(WeightKind::hermite, order, 0.0, sqrt_pi);
}

inline QuadratureRule gauss_laguerre(int order, double alpha = 0.0) {
  if (order < 1 || order > 256)
    throw std::domain_error("gauss_laguerre: order must be in [1, 256]");
  if (!(alpha > -1.0))
    throw std::domain_error("gauss_laguerre: alpha must exceed -1");
  if (alpha > 170.0)
    throw std::domain_error("gauss_laguerre: total weight overflows for alpha > 170");
  return detail::build_rule(WeightKind::generalized_laguerre, order, alpha,
                            std::tgamma(alpha + 1.0));
}

}  // namespace hsmrc::quadrature
