#pragma once

#include <string>

#include <Eigen/Dense>

#include "mra/tensor.hpp"

namespace mra {

enum class EigenMode { largest_algebraic, largest_absolute };

enum class EigenMethod {
  automatic,          ///< dense below `dense_limit`, power iteration above
  dense,              ///< full symmetric decomposition
  power_iteration,    ///< shifted power iteration, single vector
};

struct EigenOptions {
  EigenMethod method = EigenMethod::automatic;
  Eigen::Index dense_limit = 1024;
  double tolerance = 1e-10;        ///< relative eigenvalue change
  int max_iterations = 10000;
  double symmetry_tolerance = 1e-9;  ///< relative to max |entry|
  /// When false, power iteration returns its last iterate (converged = false)
  /// instead of throwing.
  bool require_convergence = true;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  bool converged = true;
  double residual = 0.0;  ///< ‖Mv - λv‖
};

/// Leading eigenpair of a real symmetric matrix. The returned vector has unit
/// norm and a deterministic sign (largest-magnitude entry positive, earliest
/// index on ties).
EigenPair leading_eigenvector(const Eigen::MatrixXd& m, EigenMode mode,
                              const EigenOptions& options = {});

/// (M + Mᵀ)/2.
template <typename Derived>
typename Derived::PlainObject symmetrize(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw InvalidInput("symmetrize needs a square matrix");
  typename Derived::PlainObject out = m;
  out = (0.5 * (m + m.transpose())).eval();
  return out;
}

/// ({a,b},{c,d}) flattening: row pos(a)*p + pos(b), column pos(c)*p + pos(d).
Eigen::MatrixXcd flatten4(const ComplexTensor& t);
Eigen::MatrixXd flatten4(const RealTensor& t);
ComplexTensor unflatten4(const Eigen::MatrixXcd& m, std::size_t p);
RealTensor unflatten4(const Eigen::MatrixXd& m, std::size_t p);

/// Reshape a length-p² vector v_{ab} into the p × p matrix V(a, b).
Eigen::MatrixXd reshape_square(const Eigen::VectorXd& v);

/// Spectral norm of a real matrix.
double spectral_norm(const Eigen::MatrixXd& m);

/// Flip `v` so that its largest-magnitude entry is positive.
void canonicalize_sign(Eigen::VectorXd& v);

}  // namespace mra
