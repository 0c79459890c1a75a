#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mra/correction.hpp"
#include "mra/tensor.hpp"

namespace mra {

/// W[x][i] = T̂_{-i, x, i-x}, zero when i - x ∉ ±[p/2]. Rows are x positions,
/// columns i positions. Vertex m of the ring contributes W[x_m][i_m].
class VertexWeightTable {
 public:
  VertexWeightTable() = default;
  VertexWeightTable(int p, int K, Eigen::MatrixXcd w);

  /// From a third-moment tensor in the Fourier basis (entries off the
  /// zero-sum support are ignored).
  static VertexWeightTable from_moment(const ComplexTensor& t3, int K);
  /// From exact signals; cross-checks the product formula against the
  /// summed moment and throws NumericalError on disagreement.
  static VertexWeightTable from_signals(const std::vector<FourierVector>& signals);

  int p() const noexcept { return p_; }
  int K() const noexcept { return K_; }
  cplx operator()(std::size_t x, std::size_t i) const { return w_(static_cast<Eigen::Index>(x),
                                                                  static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXcd& matrix() const noexcept { return w_; }

 private:
  int p_ = 0;
  int K_ = 0;
  Eigen::MatrixXcd w_;
};

enum class RingMethod {
  automatic,   ///< factorized
  direct,      ///< per-entry loop over (i₁, j₁..j₄), O(p⁹)
  factorized,  ///< splits the ring into two half-chains, O(p⁸)
};

struct RingOptions {
  RingMethod method = RingMethod::automatic;
  int threads = 1;
};

/// Raw ring sums R_abcd = Σ ∏_m w[x_m][i_m] · u(-j₁,…,-j₅) over valid
/// chains, for every (a,b,c,d) with mask(a,b,c,d) != 0. Output is p⁴ in
/// canonical order. `u` is p⁵ row-major. Works for real or complex scalars.
template <typename Scalar>
std::vector<Scalar> ring_sums(int p, const std::vector<Scalar>& w, const std::vector<Scalar>& u,
                              const std::vector<double>* mask, const RingOptions& options);

/// M̂_{ab,cd} = S_abcd · Σ û_{-j₁…-j₅} ∏ (nine vertex factors), as a p²×p²
/// matrix with row pos(a)·p + pos(b) and column pos(c)·p + pos(d).
Eigen::MatrixXcd ring_contract(const VertexWeightTable& wt, const ComplexTensor& u_hat,
                               const CorrectionTable& S, const RingOptions& options = {});

/// u-independent trace factors G[(a,b,c,d)][(j₁..j₄)] = Σ_{i₁} ∏ vertex factors,
/// with j₅ = -(a+b+c+d+j₁+…+j₄). Dense, p⁸ complex entries.
class RingFactorCache {
 public:
  int p() const noexcept { return p_; }
  std::size_t bytes() const noexcept { return g_.size() * sizeof(cplx); }
  const std::vector<cplx>& data() const noexcept { return g_; }

 private:
  friend RingFactorCache precompute_G(const VertexWeightTable&, std::size_t, int);
  int p_ = 0;
  std::vector<cplx> g_;
};

/// Bytes a RingFactorCache for this p would occupy.
std::size_t ring_factor_cache_bytes(int p);

/// Throws BudgetExceeded (progress 0) when p⁸ complex entries exceed
/// `max_bytes`; the caller then falls back to ring_contract.
RingFactorCache precompute_G(const VertexWeightTable& wt, std::size_t max_bytes, int threads = 1);

Eigen::MatrixXcd ring_contract(const RingFactorCache& g, const ComplexTensor& u_hat,
                               const CorrectionTable& S, int threads = 1);

/// Overcomplete-decomposition matrix M_{ab,cd} = Σ_{ijk} T_acj T_bdk T_ijk u_i (real basis).
Eigen::MatrixXd hsss_matrix(const RealTensor& t, const RealVector& u);
/// Same matrix for T = Σ_t a_t^⊗3 written as Σ_{r,s} [Σ_t ⟨u,a_t⟩⟨a_t,a_r⟩⟨a_t,a_s⟩]
/// (a_r⊗a_s)(a_r⊗a_s)ᵀ.
Eigen::MatrixXd hsss_matrix_rank_form(const std::vector<RealVector>& components, const RealVector& u);

}  // namespace mra
