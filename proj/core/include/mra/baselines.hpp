#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mra/linalg.hpp"
#include "mra/tensor.hpp"

namespace mra {

/// Phase recovery from the second and third moments of a single signal.
/// Returns the representative whose frequency-1 phase is zero. Phases for
/// j ≥ 3 use the entries T̂₃(-1, -(j-1), j).
FourierVector frequency_marching(const ComplexTensor& t2_hat, const ComplexTensor& t3_hat,
                                 double min_magnitude = 1e-10);

/// T = λ x^⊗3 + W with ‖x‖ = 1 and W i.i.d. N(0, 1).
struct PcaInstance {
  int p = 0;
  double lambda = 0.0;
  RealVector x;
  RealTensor T;
};

/// Draw from streams ("pca-x", draw) and ("pca-noise", draw). `noise` = false gives W = 0.
PcaInstance make_pca_instance(int p, double lambda, std::uint64_t seed, std::uint64_t draw, bool noise = true);

enum class PcaMethod { unfolding, spectral_sos, partial_trace, homotopy_init };
enum class PcaPath { direct, network };

const char* to_string(PcaMethod m);
PcaMethod parse_pca_method(const std::string& name);
inline constexpr PcaMethod kAllPcaMethods[] = {PcaMethod::unfolding, PcaMethod::spectral_sos,
                                               PcaMethod::partial_trace, PcaMethod::homotopy_init};

/// T̃T̃ᵀ for the p × p² unfolding.
Eigen::MatrixXd unfolding_gram(const RealTensor& t, PcaPath path = PcaPath::direct);
/// Σ_i T_i ⊗ T_i, p² × p².
Eigen::MatrixXd slice_kron_sum(const RealTensor& t, PcaPath path = PcaPath::direct);
/// Σ_i Tr(T_i) T_i.
Eigen::MatrixXd partial_trace_matrix(const RealTensor& t, PcaPath path = PcaPath::direct);
/// z_j = Σ_i T_iij (unnormalized).
RealVector homotopy_vector(const RealTensor& t, PcaPath path = PcaPath::direct);

/// Unit-norm estimate of x, sign canonicalized.
RealVector pca_estimate(const RealTensor& t, PcaMethod method, PcaPath path = PcaPath::direct,
                        const EigenOptions& eigen = {});

struct PcaRecord {
  int draw = 0;
  int p = 0;
  double lambda = 0.0;
  PcaMethod method = PcaMethod::unfolding;
  double corr = 0.0;  ///< ⟨estimate, x⟩²
};

/// `draws` independent instances, each scored by all requested methods.
std::vector<PcaRecord> pca_sweep(int p, double lambda, int draws, std::uint64_t seed,
                                 const std::vector<PcaMethod>& methods, int threads = 1);

void write_pca_csv(const std::string& path, const std::vector<PcaRecord>& records);

}  // namespace mra
