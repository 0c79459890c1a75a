#pragma once

#include <cstdint>
#include <vector>

#include "mra/tensor.hpp"

namespace mra {

struct SignalSet {
  int p = 0;
  std::vector<FourierVector> signals;

  int K() const noexcept { return static_cast<int>(signals.size()); }

  static SignalSet from_real(const std::vector<RealVector>& thetas);
  std::vector<RealVector> real() const;
  /// Throws InvalidInput on mixed p or broken conjugate symmetry.
  void validate(double tol = 1e-9) const;
};

/// θ ~ N(0, I/p) drawn from stream ("signal", index) of `seed`.
RealVector random_signal(int p, std::uint64_t seed, std::uint64_t index = 0);
SignalSet random_signals(int p, int K, std::uint64_t seed);

/// A third-order Fourier tensor supported on j₁+j₂+j₃ = 0, kept dense.
class ZeroSumTensor3 {
 public:
  ZeroSumTensor3() = default;
  explicit ZeroSumTensor3(int p);

  /// Keeps the zero-sum entries of `t`; the largest discarded magnitude is
  /// written to `off_support_max` when given.
  static ZeroSumTensor3 project(const ComplexTensor& t, double* off_support_max = nullptr);

  int p() const noexcept { return p_; }
  /// Entry at frequencies (j₁, j₂, j₃); zero off support.
  cplx operator()(int j1, int j2, int j3) const;
  const ComplexTensor& dense() const noexcept { return t_; }
  std::size_t support_size() const;

 private:
  int p_ = 0;
  ComplexTensor t_;
};

enum class Normalization { mean_over_K, sum_over_K };

/// (1/K or 1)·Σ_k 𝟙_{Σj=0} ∏ θ̂ᵏ_{j_m}, order d ∈ {1,2,3}.
ComplexTensor exact_moment(const SignalSet& signals, int d, Normalization norm);
ZeroSumTensor3 exact_third_moment(const SignalSet& signals, Normalization norm);

struct ObservationBatch {
  int p = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd samples;        ///< p × n, one observation per column
  std::vector<double> shifts;     ///< hidden g_i
  std::vector<int> classes;       ///< hidden k_i (0-based)

  std::size_t n() const noexcept { return static_cast<std::size_t>(samples.cols()); }
};

/// y_i = g_i·θ^{k_i} + ξ_i. Sample i draws from stream ("observation", i), so
/// the batch does not depend on the thread count.
ObservationBatch sample_observations(const SignalSet& signals, double sigma, std::size_t n,
                                     std::uint64_t seed, int threads = 1);

struct EmpiricalMoment {
  ZeroSumTensor3 fourier;     ///< zero-sum part of (1/n)Σ ŷ^⊗3
  ComplexTensor fourier_full; ///< all entries of (1/n)Σ ŷ^⊗3
  RealTensor real;            ///< (1/n)Σ y^⊗3
  double off_support_max = 0.0;
  std::size_t n = 0;
};

/// Averages in fixed blocks and sums blocks in index order (reproducible).
EmpiricalMoment empirical_third_moment(const ObservationBatch& batch, int threads = 1);

/// ‖est − exact‖_∞ over the real-basis tensor.
double moment_error(const RealTensor& est, const RealTensor& exact);
/// Same, for Fourier-basis inputs (both are mapped to the real basis first).
double moment_error(const ComplexTensor& est, const ComplexTensor& exact);

}  // namespace mra
