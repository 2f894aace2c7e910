#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace hsmrc {

namespace detail {
// std::to_string renders doubles in fixed point, which turns the residuals and
// thresholds below (often ~1e-9) into "0.000000"; format them as %g instead.
inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}
}  // namespace detail

// Raised when the B-recursion divisor 1 - (2k+1)^2*g/(2m+g) falls inside the
// guard band |.| <= 1e-8.  The value is a removable-singularity artifact of the
// analytic recursion; callers are expected to re-evaluate with the quadrature
// engine.
class SingularFactor : public std::runtime_error {
public:
  SingularFactor(int k, double gamma_bar)
      : std::runtime_error("singular recursion factor at k=" + std::to_string(k) +
                           ", gamma_bar=" + detail::num(gamma_bar) +
                           "; re-evaluate with the quadrature engine"),
        k_(k),
        gamma_bar_(gamma_bar) {}

  int k() const noexcept { return k_; }
  double gamma_bar() const noexcept { return gamma_bar_; }

private:
  int k_;
  double gamma_bar_;
};

// Raised when a partial-fraction expansion fails its reconstruction-residual
// self-check at construction.  The weight table would be silently wrong, so the
// failure is surfaced instead.
class IllConditionedExpansion : public std::runtime_error {
public:
  IllConditionedExpansion(int n_r, int l, double residual)
      : std::runtime_error("ill-conditioned partial-fraction expansion at N_r=" +
                           std::to_string(n_r) + ", L=" + std::to_string(l) +
                           ", reconstruction residual=" + detail::num(residual)),
        n_r_(n_r),
        l_(l),
        residual_(residual) {}

  int n_r() const noexcept { return n_r_; }
  int l() const noexcept { return l_; }
  double residual() const noexcept { return residual_; }

private:
  int n_r_;
  int l_;
  double residual_;
};

}  // namespace hsmrc
