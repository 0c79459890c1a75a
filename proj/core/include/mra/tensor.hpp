#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mra/errors.hpp"
#include "mra/frequency.hpp"

namespace mra {

using cplx = std::complex<double>;
using RealVector = Eigen::VectorXd;

/// Row-major dense tensor. Every mode of the tensors in this library has
/// extent p and is indexed by position in the canonical frequency order
/// (or by plain index for the real-basis PCA tensors).
template <typename Scalar>
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> extents)
      : extents_(std::move(extents)) {
    std::size_t n = 1;
    for (auto e : extents_) n *= e;
    data_.assign(n, Scalar{});
    compute_strides();
  }

  static DenseTensor cube(std::size_t order, std::size_t p) {
    return DenseTensor(std::vector<std::size_t>(order, p));
  }

  std::size_t order() const noexcept { return extents_.size(); }
  std::size_t extent(std::size_t mode) const { return extents_.at(mode); }
  const std::vector<std::size_t>& extents() const noexcept { return extents_; }
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  std::size_t size() const noexcept { return data_.size(); }

  Scalar& operator[](std::size_t flat) { return data_[flat]; }
  const Scalar& operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) f += idx[k] * strides_[k];
    return f;
  }
  Scalar& at(std::initializer_list<std::size_t> idx) {
    return data_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
  }
  const Scalar& at(std::initializer_list<std::size_t> idx) const {
    return data_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
  }
  Scalar& at(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }
  const Scalar& at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }

  std::vector<Scalar>& data() noexcept { return data_; }
  const std::vector<Scalar>& data() const noexcept { return data_; }

  /// Decode a flat index into per-mode indices.
  void unravel(std::size_t flat, std::span<std::size_t> idx) const {
    for (std::size_t k = 0; k < extents_.size(); ++k) {
      idx[k] = flat / strides_[k];
      flat %= strides_[k];
    }
  }

 private:
  void compute_strides() {
    strides_.assign(extents_.size(), 1);
    for (std::size_t k = extents_.size(); k-- > 1;) strides_[k - 1] = strides_[k] * extents_[k];
  }

  std::vector<std::size_t> extents_;
  std::vector<std::size_t> strides_;
  std::vector<Scalar> data_;
};

using ComplexTensor = DenseTensor<cplx>;
using RealTensor = DenseTensor<double>;

ComplexTensor to_complex(const RealTensor& t);

/// Fourier coefficients of a real signal, stored in canonical frequency order.
class FourierVector {
 public:
  FourierVector() = default;
  explicit FourierVector(Eigen::VectorXcd coeffs);

  int p() const noexcept { return static_cast<int>(coeffs_.size()); }
  const Eigen::VectorXcd& coeffs() const noexcept { return coeffs_; }
  Eigen::VectorXcd& coeffs() noexcept { return coeffs_; }

  cplx at(int freq) const { return coeffs_(Frequencies(p()).position(freq)); }

  /// max_j |v_{-j} - conj(v_j)|.
  double symmetry_defect() const;
  double norm() const { return coeffs_.norm(); }

 private:
  Eigen::VectorXcd coeffs_;
};

/// Real basis -> Fourier basis: v̂_j = (v_j + i v_{-j})/√2, v̂_{-j} = (v_j - i v_{-j})/√2.
FourierVector to_fourier(const RealVector& v);

/// Inverse of to_fourier. Throws InvalidInput when conjugate symmetry is
/// violated beyond `tol` (relative to the vector norm, floor 1e-300).
RealVector from_fourier(const FourierVector& v, double tol = 1e-9);

/// g acts on frequency j by exp(i j g).
FourierVector apply_rotation(const FourierVector& v, double angle);

/// The unitary Δ with θ = Δ θ̂, as a dense p × p matrix.
Eigen::MatrixXcd delta_matrix(int p);

/// Multiply every mode of `t` by the p × p matrix `m`: out_{i..} = Σ m_{i j} t_{j..}.
ComplexTensor apply_each_mode(const ComplexTensor& t, const Eigen::MatrixXcd& m);

/// T̂ = (Δ^H)^{⊗d} T.
ComplexTensor tensor_to_fourier(const RealTensor& t);
/// T = Δ^{⊗d} T̂. Throws NumericalError when the imaginary residue exceeds
/// `tol` relative to the largest entry.
RealTensor tensor_from_fourier(const ComplexTensor& t, double tol = 1e-9);

/// Largest |imag| / max(1e-300, largest |entry|).
double relative_imag_residue(const ComplexTensor& t);

/// max over entries |t(-idx) - conj(t(idx))|, with negation applied to every mode.
double conjugate_symmetry_defect(const ComplexTensor& t);

/// Tensor product v^{⊗order}.
RealTensor outer_power(const RealVector& v, std::size_t order);
ComplexTensor outer_power(const Eigen::VectorXcd& v, std::size_t order);

double max_abs_difference(const RealTensor& a, const RealTensor& b);
double max_abs_difference(const ComplexTensor& a, const ComplexTensor& b);
double frobenius_norm(const ComplexTensor& t);

}  // namespace mra
