#include "viscoflow/fem1d.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace viscoflow {

Vector SymTridiag::apply(const Vector& x) const {
  const Eigen::Index n = diag.size();
  Vector y = diag.cwiseProduct(x);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    y[i] += off[i] * x[i + 1];
    y[i + 1] += off[i] * x[i];
  }
  return y;
}

Vector SymTridiag::solve(const Vector& rhs) const {
  const Eigen::Index n = diag.size();
  if (rhs.size() != n) throw std::invalid_argument("SymTridiag::solve: size mismatch");
  Vector c(n), d(n);
  double denom = diag[0];
  if (denom == 0.0) throw std::runtime_error("SymTridiag::solve: zero pivot");
  c[0] = n > 1 ? off[0] / denom : 0.0;
  d[0] = rhs[0] / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag[i] - off[i - 1] * c[i - 1];
    if (denom == 0.0) throw std::runtime_error("SymTridiag::solve: zero pivot");
    c[i] = i + 1 < n ? off[i] / denom : 0.0;
    d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) d[i] -= c[i] * d[i + 1];
  return d;
}

Mesh::Mesh(int n_el) : n_el_(n_el), h_(0.0) {
  if (n_el < 2)
    throw std::invalid_argument("mesh needs at least 2 elements (got " + std::to_string(n_el) + ")");
  h_ = 1.0 / n_el;
  const int n = n_el - 1;
  stiffness_.diag = Vector::Constant(n, 2.0 / h_);
  stiffness_.off = Vector::Constant(n - 1, -1.0 / h_);
  mass_.diag = Vector::Constant(n, 4.0 * h_ / 6.0);
  mass_.off = Vector::Constant(n - 1, h_ / 6.0);
}

void Mesh::check(const Vector& u) const {
  if (u.size() != nodes())
    throw std::invalid_argument("field has " + std::to_string(u.size()) + " entries, mesh has " +
                                std::to_string(nodes()) + " interior nodes");
}

Mesh build_mesh(int n_el) { return Mesh(n_el); }

double norm_V(const Vector& u, const Mesh& m) {
  m.check(u);
  return std::sqrt(std::max(0.0, u.dot(m.apply_stiffness(u))));
}

double norm_H(const Vector& u, const Mesh& m) {
  m.check(u);
  return std::sqrt(std::max(0.0, u.dot(m.apply_mass(u))));
}

double norm_H_lumped(const Vector& u, const Mesh& m) {
  m.check(u);
  return std::sqrt(m.lumped() * u.squaredNorm());
}

double norm_Vstar(const Vector& f, const Mesh& m) {
  m.check(f);
  return std::sqrt(std::max(0.0, f.dot(m.stiffness().solve(f))));
}

Vector poisson_solve(const Vector& f, const Mesh& m) {
  m.check(f);
  return m.stiffness().solve(f);
}

}  // namespace viscoflow
