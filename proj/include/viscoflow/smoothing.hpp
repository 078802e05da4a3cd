#pragma once

namespace viscoflow {

/// Width of the C² smoothing of |v|. Strictly positive; same units as v.
class SmoothingParam {
 public:
  /// Throws std::domain_error unless rho is finite and > 0.
  explicit SmoothingParam(double rho);

  double rho() const noexcept { return rho_; }

 private:
  double rho_;
};

namespace smoothing {

// The smoothed absolute value
//
//   |v|_ρ = |v|                              for |v| ≥ ρ
//         = ρ/3 + v²(ρ − |v|/3)/ρ²           for |v| < ρ
//
// and its first two derivatives. The outer branch is taken at |v| = ρ.
// All three throw std::domain_error for non-finite v.

double value(double v, SmoothingParam p);
double deriv(double v, SmoothingParam p);
double second(double v, SmoothingParam p);

}  // namespace smoothing
}  // namespace viscoflow
