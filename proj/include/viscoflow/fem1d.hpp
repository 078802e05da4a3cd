#pragma once

#include <Eigen/Core>

namespace viscoflow {

using Vector = Eigen::VectorXd;

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
struct SymTridiag {
  Vector diag;
  Vector off;  // size diag.size() - 1

  Eigen::Index size() const noexcept { return diag.size(); }

  Vector apply(const Vector& x) const;

  /// Thomas algorithm. The matrix must be nonsingular without pivoting
  /// (true for every SPD matrix produced in this library).
  Vector solve(const Vector& rhs) const;
};

/// Uniform P1 finite elements on (0,1) with homogeneous Dirichlet conditions.
/// Fields are vectors of interior nodal values (n = n_el - 1 entries). A field
/// is read either as a function (V-element) or as a load vector, i.e. the
/// integrals against the hat functions (V*-element); the duality pairing is
/// the dot product.
class Mesh {
 public:
  /// Throws std::invalid_argument if n_el < 2.
  explicit Mesh(int n_el);

  int elements() const noexcept { return n_el_; }
  int nodes() const noexcept { return n_el_ - 1; }
  double h() const noexcept { return h_; }
  double x(int node) const noexcept { return (node + 1) * h_; }

  /// K = (1/h) tridiag(-1, 2, -1), the discrete -Δ.
  const SymTridiag& stiffness() const noexcept { return stiffness_; }
  /// M = (h/6) tridiag(1, 4, 1).
  const SymTridiag& mass() const noexcept { return mass_; }
  /// Diagonal entry of the lumped mass M_L = h·I.
  double lumped() const noexcept { return h_; }

  Vector apply_stiffness(const Vector& u) const { return stiffness_.apply(u); }
  Vector apply_mass(const Vector& u) const { return mass_.apply(u); }
  Vector apply_lumped(const Vector& u) const { return h_ * u; }

  /// Returns the nodal values of a function evaluated at the interior nodes.
  template <class F>
  Vector interpolate(F&& f) const {
    Vector u(nodes());
    for (int i = 0; i < nodes(); ++i) u[i] = f(x(i));
    return u;
  }

  /// Throws std::invalid_argument if the field length does not match.
  void check(const Vector& u) const;

 private:
  int n_el_;
  double h_;
  SymTridiag stiffness_;
  SymTridiag mass_;
};

Mesh build_mesh(int n_el);

/// ‖u‖_V = sqrt(uᵀKu).
double norm_V(const Vector& u, const Mesh& m);
/// ‖u‖_H = sqrt(uᵀMu).
double norm_H(const Vector& u, const Mesh& m);
/// Lumped H-norm sqrt(h·uᵀu), used for nodal (mass-lumped) quantities.
double norm_H_lumped(const Vector& u, const Mesh& m);
/// ‖f‖_V* = sqrt(fᵀK⁻¹f) for a load vector f.
double norm_Vstar(const Vector& f, const Mesh& m);
/// Solves K u = f.
Vector poisson_solve(const Vector& f, const Mesh& m);

}  // namespace viscoflow
