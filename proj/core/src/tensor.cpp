#include "mra/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mra {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

struct SparseRow {
  std::vector<std::pair<std::size_t, cplx>> entries;
};

std::vector<SparseRow> sparse_rows(const Eigen::MatrixXcd& m) {
  std::vector<SparseRow> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != cplx{}) rows[i].entries.emplace_back(static_cast<std::size_t>(j), m(i, j));
    }
  }
  return rows;
}

}  // namespace

ComplexTensor to_complex(const RealTensor& t) {
  ComplexTensor out(t.extents());
  for (std::size_t f = 0; f < t.size(); ++f) out[f] = t[f];
  return out;
}

FourierVector::FourierVector(Eigen::VectorXcd coeffs) : coeffs_(std::move(coeffs)) {
  Frequencies{static_cast<int>(coeffs_.size())};  // validates p
}

double FourierVector::symmetry_defect() const {
  const auto n = coeffs_.size();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    worst = std::max(worst, std::abs(coeffs_(n - 1 - k) - std::conj(coeffs_(k))));
  }
  return worst;
}

FourierVector to_fourier(const RealVector& v) {
  const Frequencies freqs(static_cast<int>(v.size()));
  Eigen::VectorXcd out(v.size());
  for (int j = 1; j <= freqs.half(); ++j) {
    const double pos = v(freqs.position(j));
    const double neg = v(freqs.position(-j));
    out(freqs.position(j)) = kInvSqrt2 * cplx(pos, neg);
    out(freqs.position(-j)) = kInvSqrt2 * cplx(pos, -neg);
  }
  return FourierVector(std::move(out));
}

RealVector from_fourier(const FourierVector& v, double tol) {
  const double defect = v.symmetry_defect();
  if (defect > tol * std::max(1.0, v.norm())) {
    throw InvalidInput("Fourier vector violates conjugate symmetry (defect " +
                       std::to_string(defect) + ")");
  }
  const Frequencies freqs(v.p());
  RealVector out(v.p());
  for (int j = 1; j <= freqs.half(); ++j) {
    const cplx pos = v.coeffs()(freqs.position(j));
    const cplx neg = v.coeffs()(freqs.position(-j));
    out(freqs.position(j)) = kInvSqrt2 * (pos + neg).real();
    out(freqs.position(-j)) = kInvSqrt2 * ((pos - neg) / cplx(0.0, 1.0)).real();
  }
  return out;
}

FourierVector apply_rotation(const FourierVector& v, double angle) {
  const Frequencies freqs(v.p());
  Eigen::VectorXcd out(v.p());
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    out(k) = std::polar(1.0, freqs.value(k) * angle) * v.coeffs()(k);
  }
  return FourierVector(std::move(out));
}

Eigen::MatrixXcd delta_matrix(int p) {
  const Frequencies freqs(p);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(p, p);
  for (int j = 1; j <= freqs.half(); ++j) {
    const auto jp = freqs.position(j);
    const auto jn = freqs.position(-j);
    d(jp, jp) = kInvSqrt2;
    d(jp, jn) = kInvSqrt2;
    d(jn, jp) = cplx(0.0, -kInvSqrt2);
    d(jn, jn) = cplx(0.0, kInvSqrt2);
  }
  return d;
}

ComplexTensor apply_each_mode(const ComplexTensor& t, const Eigen::MatrixXcd& m) {
  const auto rows = sparse_rows(m);
  ComplexTensor cur = t;
  ComplexTensor next(t.extents());
  for (std::size_t mode = 0; mode < t.order(); ++mode) {
    if (t.extent(mode) != static_cast<std::size_t>(m.cols())) {
      throw InvalidInput("apply_each_mode: extent mismatch");
    }
    const std::size_t stride = cur.strides()[mode];
    const std::size_t ext = cur.extent(mode);
    const std::size_t outer = cur.size() / (stride * ext);
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = o * stride * ext;
      for (std::size_t i = 0; i < ext; ++i) {
        cplx* dst = next.data().data() + base + i * stride;
        std::fill(dst, dst + stride, cplx{});
        for (const auto& [j, w] : rows[i].entries) {
          const cplx* src = cur.data().data() + base + j * stride;
          for (std::size_t s = 0; s < stride; ++s) dst[s] += w * src[s];
        }
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

ComplexTensor tensor_to_fourier(const RealTensor& t) {
  if (t.order() == 0) return to_complex(t);
  return apply_each_mode(to_complex(t), delta_matrix(static_cast<int>(t.extent(0))).adjoint());
}

double relative_imag_residue(const ComplexTensor& t) {
  double imag = 0.0;
  double scale = 0.0;
  for (const auto& z : t.data()) {
    imag = std::max(imag, std::abs(z.imag()));
    scale = std::max(scale, std::abs(z));
  }
  return imag / std::max(scale, 1e-300);
}

RealTensor tensor_from_fourier(const ComplexTensor& t, double tol) {
  const ComplexTensor real_basis =
      t.order() == 0 ? t : apply_each_mode(t, delta_matrix(static_cast<int>(t.extent(0))));
  const double residue = relative_imag_residue(real_basis);
  if (residue > tol) {
    throw NumericalError("tensor_from_fourier: imaginary residue " + std::to_string(residue) +
                         " exceeds tolerance");
  }
  RealTensor out(real_basis.extents());
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = real_basis[f].real();
  return out;
}

double conjugate_symmetry_defect(const ComplexTensor& t) {
  std::vector<std::size_t> idx(t.order());
  double worst = 0.0;
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unravel(f, idx);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = t.extent(k) - 1 - idx[k];
    worst = std::max(worst, std::abs(t.at(std::span<const std::size_t>(idx)) - std::conj(t[f])));
  }
  return worst;
}

namespace {

template <typename Vec, typename Scalar>
DenseTensor<Scalar> outer_power_impl(const Vec& v, std::size_t order) {
  const auto p = static_cast<std::size_t>(v.size());
  auto out = DenseTensor<Scalar>::cube(order, p);
  std::vector<std::size_t> idx(order);
  for (std::size_t f = 0; f < out.size(); ++f) {
    out.unravel(f, idx);
    Scalar prod{1};
    for (auto i : idx) prod *= v(static_cast<Eigen::Index>(i));
    out[f] = prod;
  }
  return out;
}

template <typename Scalar>
double max_abs_difference_impl(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b) {
  if (a.extents() != b.extents()) throw InvalidInput("tensor shape mismatch");
  double worst = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) worst = std::max(worst, std::abs(a[f] - b[f]));
  return worst;
}

}  // namespace

RealTensor outer_power(const RealVector& v, std::size_t order) {
  return outer_power_impl<RealVector, double>(v, order);
}

ComplexTensor outer_power(const Eigen::VectorXcd& v, std::size_t order) {
  return outer_power_impl<Eigen::VectorXcd, cplx>(v, order);
}

double max_abs_difference(const RealTensor& a, const RealTensor& b) {
  return max_abs_difference_impl(a, b);
}

double max_abs_difference(const ComplexTensor& a, const ComplexTensor& b) {
  return max_abs_difference_impl(a, b);
}

double frobenius_norm(const ComplexTensor& t) {
  double s = 0.0;
  for (const auto& z : t.data()) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace mra
