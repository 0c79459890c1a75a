#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mra/config.hpp"
#include "mra/correction.hpp"
#include "mra/linalg.hpp"
#include "mra/moments.hpp"
#include "mra/ring.hpp"

namespace mra {

struct BuildOptions {
  RingOptions ring;
  const RingFactorCache* cache = nullptr;  ///< used instead of the ring kernel when set
};

/// M(𝒯, u) = (Δ⊗Δ) M̂ (Δ⊗Δ)ᵀ for a real order-5 u. Throws NumericalError when
/// the imaginary residue exceeds 1e-9 relative.
Eigen::MatrixXd build_M(const ZeroSumTensor3& t, const RealTensor& u, const CorrectionTable& S,
                        const BuildOptions& options = {}, double* imag_residue = nullptr);
/// Same with û already in the Fourier basis.
Eigen::MatrixXd build_M_fourier(const ZeroSumTensor3& t, const ComplexTensor& u_hat, const CorrectionTable& S,
                                const BuildOptions& options = {}, double* imag_residue = nullptr);

/// Δ⊗Δ conjugation of a Fourier-basis p²×p² matrix; returns the real part.
Eigen::MatrixXd to_real_basis(const Eigen::MatrixXcd& m_hat, double* imag_residue = nullptr);

struct Candidate {
  RealVector tau;                 ///< unit norm
  double stage1_value = 0.0;      ///< leading algebraic eigenvalue of sym(M)
  double stage2_value = 0.0;      ///< eigenvalue of ½(V+Vᵀ) picked by absolute value
  Eigen::VectorXd v;              ///< stage-1 eigenvector
  bool zero_matrix = false;       ///< M = 0, τ is arbitrary
  bool degenerate = false;        ///< |λ_max| and |λ_min| of ½(V+Vᵀ) within 1e-12
  RealVector alternative;         ///< the other extreme eigenvector when degenerate
};

Candidate extract_candidate(const Eigen::MatrixXd& m, const EigenOptions& eigen = {});

/// u := alpha·(θᵏ)^⊗5 + noise·G with G standard Gaussian. alpha = 1, noise = 0
/// plants the signal exactly.
struct PlantedU {
  int k = 0;
  double alpha = 1.0;
  double noise = 0.0;
};

struct TrialDiagnostics {
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<double> alpha_tilde;   ///< ⟨u, (θᵏ/‖θᵏ‖)^⊗5⟩ per signal (when known)
  double stage1_value = 0.0;
  double stage2_value = 0.0;
  bool zero_matrix = false;
  bool degenerate = false;
  double imag_residue = 0.0;
  std::vector<double> raw_corr;      ///< ⟨τ, θᵏ/‖θᵏ‖⟩² per signal
  std::vector<double> orbit_corr;    ///< max_g ⟨τ, g·θᵏ⟩²/‖θᵏ‖² per signal
  double seconds = 0.0;
};

struct TrialResult {
  RealVector tau;
  TrialDiagnostics diag;
};

struct RecoveryOptions {
  std::optional<PlantedU> planted;
  bool use_factor_cache = false;     ///< precompute G when it fits the memory cap
  EigenOptions eigen;
};

/// L independent trials; trial i draws u from stream ("trial-u", i) of the
/// config seed. `truth` (optional) only feeds diagnostics.
std::vector<TrialResult> list_recovery(const ZeroSumTensor3& t, const CorrectionTable& S,
                                       const ExperimentConfig& config, const SignalSet* truth = nullptr,
                                       const RecoveryOptions& options = {});

struct OrbitCorrelation {
  double orbit = 0.0;  ///< max over g of ⟨τ, g·θ⟩² / (‖τ‖²‖θ‖²)
  double raw = 0.0;    ///< ⟨τ, θ⟩² / (‖τ‖²‖θ‖²)
  double angle = 0.0;  ///< maximizing g in [0, 2π)
};

/// 1024-point grid over g, then golden-section refinement to 1e-8 in angle.
OrbitCorrelation orbit_correlation(const RealVector& tau, const RealVector& theta);

/// ‖M(T, (θᵏ)^⊗5) − M(Tᵏ, (θᵏ)^⊗5)‖_F.
double het_signal_gap(const ZeroSumTensor3& t, const ZeroSumTensor3& t_k, const RealVector& theta_k,
                      const CorrectionTable& S, const BuildOptions& options = {});

struct ScalingReport {
  std::vector<double> magnitudes;   ///< ‖E‖_∞ in the real basis
  std::vector<double> differences;  ///< ‖M(T+E,u) − M(T,u)‖ (spectral)
  double slope = 0.0;               ///< least-squares log-log slope
  double constant = 0.0;            ///< max difference / (K⁸ p⁴ ‖E‖_∞)
};

/// Perturbations live on the zero-sum support (the only entries M reads) and
/// keep the real-basis tensor real and symmetric.
ScalingReport error_term_scaling(const ZeroSumTensor3& t, int K, const std::vector<double>& magnitudes,
                                 const RealTensor& u, const CorrectionTable& S, std::uint64_t seed,
                                 const BuildOptions& options = {});

/// Checkable parts of the analysis predicate for one signal.
struct PredicateDiagnostics {
  double norm = 0.0;                 ///< ‖θ‖
  double norm_lower = 0.0;           ///< 1 − 1/√p
  double max_fourier_scaled = 0.0;   ///< max_j |θ̂_j|·√p
  double min_fourier_scaled = 0.0;   ///< min_j |θ̂_j|·√p
};
PredicateDiagnostics predicate_diagnostics(const RealVector& theta);

/// |S_abcd·s_abcd − 1| over entries with S ≠ 0, for one Gaussian draw of θ.
std::vector<double> correction_deviation(const CorrectionTable& S, const RealVector& theta, int threads = 1);

double median(std::vector<double> values);

void write_trials_json(const std::string& path, const ExperimentConfig& config,
                       const std::vector<TrialResult>& trials, const RecoveryOptions& options);
void write_trials_csv(const std::string& path, const std::vector<TrialResult>& trials);

}  // namespace mra
