#include "mra/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace mra {

void canonicalize_sign(Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best)) + 1e-14) best = i;
  }
  if (v.size() > 0 && v(best) < 0) v = -v;
}

namespace {

void check_symmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) throw InvalidInput("leading_eigenvector: matrix is not square");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * std::max(scale, 1e-300)) {
    throw InvalidInput("leading_eigenvector: matrix is not symmetric (max |M - Mᵀ| = " +
                       std::to_string(asym) + ")");
  }
}

EigenPair dense_leading(const Eigen::MatrixXd& m, EigenMode mode) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  const auto& vals = solver.eigenvalues();
  const Eigen::Index last = vals.size() - 1;
  Eigen::Index pick = last;
  if (mode == EigenMode::largest_absolute && std::abs(vals(0)) > std::abs(vals(last))) pick = 0;
  EigenPair out;
  out.value = vals(pick);
  out.vector = solver.eigenvectors().col(pick);
  return out;
}

EigenPair power_leading(const Eigen::MatrixXd& m, EigenMode mode, const EigenOptions& opt) {
  const Eigen::Index n = m.rows();
  // Shift by the max absolute column sum so M + cI is positive semidefinite.
  const double shift =
      mode == EigenMode::largest_algebraic ? m.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  // Deterministic start that is unlikely to be orthogonal to the target.
  for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(1.0 + 0.37 * static_cast<double>(i));
  v.normalize();
  // Stop on the residual ‖Mv − λv‖ rather than on the eigenvalue alone: with a
  // large shift the eigenvalue settles long before the vector does.
  const double scale = std::max(m.norm(), 1e-300);
  EigenPair out;
  out.converged = false;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::VectorXd w = m * v + shift * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      out.value = 0.0;
      out.vector = v;
      out.iterations = it;
      out.converged = true;
      return out;
    }
    const double lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    v = w / norm;
    out.iterations = it;
    if (residual <= opt.tolerance * scale) {
      out.converged = true;
      break;
    }
  }
  out.vector = v;
  out.value = v.dot(m * v);
  if (!out.converged && opt.require_convergence) {
    throw NumericalError("power iteration did not converge after " +
                         std::to_string(out.iterations) + " iterations");
  }
  return out;
}

}  // namespace

EigenPair leading_eigenvector(const Eigen::MatrixXd& m, EigenMode mode, const EigenOptions& opt) {
  check_symmetric(m, opt.symmetry_tolerance);
  const bool dense = opt.method == EigenMethod::dense ||
                     (opt.method == EigenMethod::automatic && m.rows() <= opt.dense_limit);
  EigenPair out = dense ? dense_leading(m, mode) : power_leading(m, mode, opt);
  out.vector.normalize();
  canonicalize_sign(out.vector);
  out.residual = (m * out.vector - out.value * out.vector).norm();
  if (out.converged && out.residual > 1e-8 * std::max(m.norm(), 1e-300) && opt.require_convergence) {
    throw NumericalError("leading_eigenvector: residual " + std::to_string(out.residual) +
                         " above tolerance after " + std::to_string(out.iterations) +
                         " iterations");
  }
  return out;
}

namespace {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> flatten4_impl(const DenseTensor<Scalar>& t) {
  if (t.order() != 4) throw InvalidInput("flatten4 needs an order-4 tensor");
  const auto p = t.extent(0);
  for (std::size_t k = 1; k < 4; ++k) {
    if (t.extent(k) != p) throw InvalidInput("flatten4 needs equal extents");
  }
  const auto pp = static_cast<Eigen::Index>(p * p);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(pp, pp);
  // Row-major (a,b,c,d) storage is exactly row (a,b), column (c,d).
  for (Eigen::Index r = 0; r < pp; ++r) {
    for (Eigen::Index c = 0; c < pp; ++c) m(r, c) = t[static_cast<std::size_t>(r * pp + c)];
  }
  return m;
}

template <typename Scalar>
DenseTensor<Scalar> unflatten4_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
                                    std::size_t p) {
  const auto pp = static_cast<Eigen::Index>(p * p);
  if (m.rows() != pp || m.cols() != pp) throw InvalidInput("unflatten4: expected p² × p² matrix");
  auto t = DenseTensor<Scalar>::cube(4, p);
  for (Eigen::Index r = 0; r < pp; ++r) {
    for (Eigen::Index c = 0; c < pp; ++c) t[static_cast<std::size_t>(r * pp + c)] = m(r, c);
  }
  return t;
}

}  // namespace

Eigen::MatrixXcd flatten4(const ComplexTensor& t) { return flatten4_impl(t); }
Eigen::MatrixXd flatten4(const RealTensor& t) { return flatten4_impl(t); }
ComplexTensor unflatten4(const Eigen::MatrixXcd& m, std::size_t p) { return unflatten4_impl(m, p); }
RealTensor unflatten4(const Eigen::MatrixXd& m, std::size_t p) { return unflatten4_impl(m, p); }

Eigen::MatrixXd reshape_square(const Eigen::VectorXd& v) {
  const auto p = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (p * p != v.size()) throw InvalidInput("reshape_square: length is not a perfect square");
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) out(a, b) = v(a * p + b);
  }
  return out;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace mra
