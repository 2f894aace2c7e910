#pragma once

namespace hsmrc {

// Kahan-Neumaier compensated accumulator.  Works for any floating type with
// IEEE-style rounding, including __float128.
template <typename Real = double>
class StableSum {
public:
  StableSum() = default;

  void add(Real x) noexcept {
    Real t = sum_ + x;
    if (abs_(sum_) >= abs_(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  Real value() const noexcept { return sum_ + comp_; }

private:
  static Real abs_(Real x) noexcept { return x < Real(0) ? -x : x; }

  Real sum_{0};
  Real comp_{0};
};

}  // namespace hsmrc
