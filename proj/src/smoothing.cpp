#include "viscoflow/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace viscoflow {

SmoothingParam::SmoothingParam(double rho) : rho_(rho) {
  if (!std::isfinite(rho) || rho <= 0.0)
    throw std::domain_error("smoothing parameter rho must be finite and positive");
}

namespace smoothing {
namespace {

void check_finite(double v) {
  if (!std::isfinite(v)) throw std::domain_error("smoothing: argument is not finite");
}

}  // namespace

double value(double v, SmoothingParam p) {
  check_finite(v);
  const double rho = p.rho();
  const double a = std::abs(v);
  if (a >= rho) return a;
  return rho / 3.0 + v * v * (rho - a / 3.0) / (rho * rho);
}

double deriv(double v, SmoothingParam p) {
  check_finite(v);
  const double rho = p.rho();
  const double a = std::abs(v);
  const double s = std::copysign(1.0, v);
  if (a >= rho) return s;
  const double r = a / rho;
  return v == 0.0 ? 0.0 : s * r * (2.0 - r);
}

double second(double v, SmoothingParam p) {
  check_finite(v);
  const double rho = p.rho();
  const double a = std::abs(v);
  if (a >= rho) return 0.0;
  return 2.0 * (rho - a) / (rho * rho);
}

}  // namespace smoothing
}  // namespace viscoflow
