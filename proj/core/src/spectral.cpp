#include "mra/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "mra/errors.hpp"
#include "mra/parallel.hpp"
#include "mra/rng.hpp"

namespace mra {

Eigen::MatrixXd to_real_basis(const Eigen::MatrixXcd& m_hat, double* imag_residue) {
  const auto n = m_hat.rows();
  const int p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (static_cast<Eigen::Index>(p) * p != n || m_hat.cols() != n) {
    throw InvalidInput("to_real_basis: expected a p²×p² matrix");
  }
  const auto d = delta_matrix(p);
  Eigen::MatrixXcd d2(n, n);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c)
        for (int e = 0; e < p; ++e) d2(a * p + b, c * p + e) = d(a, c) * d(b, e);
  const Eigen::MatrixXcd m = d2 * m_hat * d2.transpose();
  const double scale = m.cwiseAbs().maxCoeff();
  const double residue = scale > 0.0 ? m.imag().cwiseAbs().maxCoeff() / scale : 0.0;
  if (imag_residue) *imag_residue = residue;
  if (residue > 1e-9) {
    throw NumericalError("M has relative imaginary residue " + std::to_string(residue) +
                         " after Δ-conjugation (conjugate symmetry broken upstream)");
  }
  return m.real();
}

Eigen::MatrixXd build_M_fourier(const ZeroSumTensor3& t, const ComplexTensor& u_hat, const CorrectionTable& S,
                                const BuildOptions& options, double* imag_residue) {
  if (t.p() != S.p()) throw InvalidInput("build_M: moment and correction table differ in p");
  Eigen::MatrixXcd m_hat;
  if (options.cache) {
    m_hat = ring_contract(*options.cache, u_hat, S, options.ring.threads);
  } else {
    m_hat = ring_contract(VertexWeightTable::from_moment(t.dense(), 1), u_hat, S, options.ring);
  }
  return to_real_basis(m_hat, imag_residue);
}

Eigen::MatrixXd build_M(const ZeroSumTensor3& t, const RealTensor& u, const CorrectionTable& S,
                        const BuildOptions& options, double* imag_residue) {
  if (u.order() != 5 || u.extent(0) != static_cast<std::size_t>(t.p())) {
    throw InvalidInput("build_M: u must be an order-5 tensor with extent p");
  }
  return build_M_fourier(t, tensor_to_fourier(u), S, options, imag_residue);
}

Candidate extract_candidate(const Eigen::MatrixXd& m, const EigenOptions& eigen) {
  if (!m.allFinite()) throw NumericalError("extract_candidate: non-finite entries");
  const auto n = m.rows();
  const int p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (static_cast<Eigen::Index>(p) * p != n || m.cols() != n) throw InvalidInput("extract_candidate: expected p²×p²");
  Candidate out;
  if (m.cwiseAbs().maxCoeff() == 0.0) {
    out.zero_matrix = true;
    out.tau = RealVector::Unit(p, 0);
    out.v = Eigen::VectorXd::Unit(n, 0);
    return out;
  }
  const auto stage1 = leading_eigenvector(symmetrize(m), EigenMode::largest_algebraic, eigen);
  out.stage1_value = stage1.value;
  out.v = stage1.vector;
  const Eigen::MatrixXd v = reshape_square(stage1.vector);
  const Eigen::MatrixXd vs = 0.5 * (v + v.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(vs);
  if (solver.info() != Eigen::Success) throw NumericalError("extract_candidate: stage-2 eigensolver failed");
  const double lo = solver.eigenvalues()(0), hi = solver.eigenvalues()(p - 1);
  RealVector top = solver.eigenvectors().col(p - 1), bottom = solver.eigenvectors().col(0);
  canonicalize_sign(top);
  canonicalize_sign(bottom);
  if (std::abs(std::abs(hi) - std::abs(lo)) <= 1e-12) {
    out.degenerate = true;
    // Deterministic tie-break: the lexicographically larger vector.
    const bool top_wins = !std::lexicographical_compare(top.data(), top.data() + p, bottom.data(), bottom.data() + p);
    out.tau = top_wins ? top : bottom;
    out.alternative = top_wins ? bottom : top;
    out.stage2_value = top_wins ? hi : lo;
  } else if (std::abs(hi) > std::abs(lo)) {
    out.tau = top;
    out.stage2_value = hi;
  } else {
    out.tau = bottom;
    out.stage2_value = lo;
  }
  return out;
}

OrbitCorrelation orbit_correlation(const RealVector& tau, const RealVector& theta) {
  if (tau.size() != theta.size()) throw InvalidInput("orbit_correlation: length mismatch");
  const double nt = tau.norm(), nth = theta.norm();
  if (nth == 0.0) throw InvalidInput("orbit_correlation: θ is zero");
  if (nt == 0.0) throw InvalidInput("orbit_correlation: τ is zero");
  const auto th = to_fourier(tau).coeffs();
  const auto sh = to_fourier(theta).coeffs();
  const Frequencies f(static_cast<int>(tau.size()));
  // ⟨τ, g·θ⟩ = Σ_j conj(τ̂_j) e^{ijg} θ̂_j (real because both vectors are real).
  std::vector<cplx> coef(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) coef[k] = std::conj(th(static_cast<Eigen::Index>(k))) * sh(static_cast<Eigen::Index>(k));
  const double norm2 = nt * nt * nth * nth;
  auto corr = [&](double g) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += (coef[k] * std::exp(cplx(0.0, f.value(k) * g))).real();
    return s * s / norm2;
  };
  constexpr int kGrid = 1024;
  const double step = 2.0 * std::numbers::pi / kGrid;
  double best_g = 0.0, best = corr(0.0);
  for (int i = 1; i < kGrid; ++i) {
    const double v = corr(i * step);
    if (v > best) {
      best = v;
      best_g = i * step;
    }
  }
  // Golden-section refinement on the bracketing grid cells.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_g - step, hi = best_g + step;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = corr(x1), f2 = corr(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = corr(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = corr(x1);
    }
  }
  const double g = 0.5 * (lo + hi);
  const double refined = corr(g);
  OrbitCorrelation out;
  if (refined >= best) {
    out.orbit = refined;
    out.angle = g;
  } else {
    out.orbit = best;
    out.angle = best_g;
  }
  out.angle = std::fmod(out.angle + 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  out.raw = corr(0.0);
  return out;
}

namespace {

// ⟨u, (θ/‖θ‖)^⊗5⟩ for a real order-5 u.
double alpha_tilde(const RealTensor& u, const RealVector& theta) {
  const RealVector t = theta / theta.norm();
  const auto p = static_cast<std::size_t>(t.size());
  std::vector<double> cur(u.data());
  for (int mode = 0; mode < 5; ++mode) {
    std::vector<double> next(cur.size() / p, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i)
      for (std::size_t k = 0; k < p; ++k) next[i] += cur[i * p + k] * t(static_cast<Eigen::Index>(k));
    cur = std::move(next);
  }
  return cur[0];
}

}  // namespace

std::vector<TrialResult> list_recovery(const ZeroSumTensor3& t, const CorrectionTable& S,
                                       const ExperimentConfig& config, const SignalSet* truth,
                                       const RecoveryOptions& options) {
  config.validate();
  if (config.p != t.p()) throw InvalidInput("list_recovery: config p differs from the moment tensor");
  std::vector<RealVector> thetas;
  if (truth) thetas = truth->real();
  if (options.planted && (options.planted->k < 0 || static_cast<std::size_t>(options.planted->k) >= thetas.size())) {
    throw InvalidInput("list_recovery: planted mode needs the true signals and a valid k");
  }

  BuildOptions build;
  build.ring.threads = 1;
  std::optional<RingFactorCache> cache;
  if (options.use_factor_cache && ring_factor_cache_bytes(config.p) <= config.mem_cap) {
    cache = precompute_G(VertexWeightTable::from_moment(t.dense(), config.K), config.mem_cap, config.threads);
    build.cache = &*cache;
  }

  const auto p = static_cast<std::size_t>(config.p);
  std::vector<TrialResult> results(static_cast<std::size_t>(config.L));
  auto run_trial = [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    Stream rng(config.seed, "trial-u", i);
    auto u = RealTensor::cube(5, p);
    const bool gaussian = !options.planted || options.planted->noise != 0.0;
    if (gaussian) {
      const double scale = options.planted ? options.planted->noise : 1.0;
      for (auto& v : u.data()) v = scale * rng.normal();
    }
    if (options.planted) {
      const auto planted = outer_power(thetas[static_cast<std::size_t>(options.planted->k)], 5);
      for (std::size_t f = 0; f < u.size(); ++f) u[f] += options.planted->alpha * planted[f];
    }
    TrialResult& r = results[i];
    r.diag.trial = static_cast<int>(i);
    r.diag.seed = Stream::derive_key(config.seed, "trial-u", i);
    const auto m = build_M(t, u, S, build, &r.diag.imag_residue);
    const auto cand = extract_candidate(m, options.eigen);
    r.tau = cand.tau;
    r.diag.stage1_value = cand.stage1_value;
    r.diag.stage2_value = cand.stage2_value;
    r.diag.zero_matrix = cand.zero_matrix;
    r.diag.degenerate = cand.degenerate;
    for (const auto& theta : thetas) {
      r.diag.alpha_tilde.push_back(alpha_tilde(u, theta));
      const auto oc = orbit_correlation(cand.tau, theta);
      r.diag.raw_corr.push_back(oc.raw);
      r.diag.orbit_corr.push_back(oc.orbit);
    }
    r.diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  parallel_for(results.size(), config.threads, [&](std::size_t i) {
    const auto where = [i](const char* what) { return "trial " + std::to_string(i) + ": " + what; };
    try {
      run_trial(i);
    } catch (const NumericalError& e) {
      throw NumericalError(where(e.what()));
    } catch (const BudgetExceeded& e) {
      throw BudgetExceeded(where(e.what()), e.progress());
    } catch (const InvalidInput& e) {
      throw InvalidInput(where(e.what()));
    }
  });
  return results;
}

double het_signal_gap(const ZeroSumTensor3& t, const ZeroSumTensor3& t_k, const RealVector& theta_k,
                      const CorrectionTable& S, const BuildOptions& options) {
  const auto u_hat = outer_power(to_fourier(theta_k).coeffs(), 5);
  const auto a = build_M_fourier(t, u_hat, S, options);
  const auto b = build_M_fourier(t_k, u_hat, S, options);
  return (a - b).norm();
}

namespace {

double max_abs(const RealTensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

ScalingReport error_term_scaling(const ZeroSumTensor3& t, int K, const std::vector<double>& magnitudes,
                                 const RealTensor& u, const CorrectionTable& S, std::uint64_t seed,
                                 const BuildOptions& options) {
  const auto p = static_cast<std::size_t>(t.p());
  // Symmetric real noise, projected onto the zero-sum support.
  Stream rng(seed, "error-term");
  auto raw = RealTensor::cube(3, p);
  for (auto& v : raw.data()) v = rng.normal();
  auto sym = RealTensor::cube(3, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < p; ++k)
        sym.at({i, j, k}) = (raw.at({i, j, k}) + raw.at({i, k, j}) + raw.at({j, i, k}) + raw.at({j, k, i}) +
                             raw.at({k, i, j}) + raw.at({k, j, i})) / 6.0;
  const auto direction = ZeroSumTensor3::project(tensor_to_fourier(sym));
  const double unit = max_abs(tensor_from_fourier(direction.dense()));
  if (unit == 0.0) throw NumericalError("error_term_scaling: zero-sum support is empty at this p");

  const auto u_hat = tensor_to_fourier(u);
  const auto base = build_M_fourier(t, u_hat, S, options);
  ScalingReport out;
  std::vector<double> lx, ly;
  for (double m : magnitudes) {
    ComplexTensor perturbed = t.dense();
    for (std::size_t f = 0; f < perturbed.size(); ++f) perturbed[f] += (m / unit) * direction.dense()[f];
    const auto diff = spectral_norm(build_M_fourier(ZeroSumTensor3::project(perturbed), u_hat, S, options) - base);
    out.magnitudes.push_back(m);
    out.differences.push_back(diff);
    if (m > 0.0 && diff > 0.0) {
      lx.push_back(std::log(m));
      ly.push_back(std::log(diff));
      out.constant = std::max(out.constant, diff / (std::pow(K, 8.0) * std::pow(static_cast<double>(p), 4.0) * m));
    }
  }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

PredicateDiagnostics predicate_diagnostics(const RealVector& theta) {
  PredicateDiagnostics d;
  const auto th = to_fourier(theta).coeffs();
  const double sp = std::sqrt(static_cast<double>(theta.size()));
  d.norm = theta.norm();
  d.norm_lower = 1.0 - 1.0 / sp;
  d.max_fourier_scaled = th.cwiseAbs().maxCoeff() * sp;
  d.min_fourier_scaled = th.cwiseAbs().minCoeff() * sp;
  return d;
}

std::vector<double> correction_deviation(const CorrectionTable& S, const RealVector& theta, int threads) {
  if (theta.size() != S.p()) throw InvalidInput("correction_deviation: θ length differs from p");
  const auto th = to_fourier(theta).coeffs();
  std::vector<double> w(static_cast<std::size_t>(theta.size()));
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::norm(th(static_cast<Eigen::Index>(k)));
  const auto s = sampled_s_table(w, threads);
  std::vector<double> out;
  for (std::size_t e = 0; e < s.size(); ++e) {
    if (S.data()[e] != 0.0) out.push_back(std::abs(S.data()[e] * s[e] - 1.0));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of an empty list");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(values.begin(), values.begin() + static_cast<long>(mid)));
}

void write_trials_json(const std::string& path, const ExperimentConfig& config,
                       const std::vector<TrialResult>& trials, const RecoveryOptions& options) {
  using nlohmann::json;
  json doc;
  doc["config"] = {{"p", config.p}, {"K", config.K}, {"sigma", config.sigma}, {"n", config.n},
                   {"exact_moments", config.exact_moments}, {"L", config.L}, {"epsilon", config.epsilon},
                   {"seed", config.seed}, {"mem_cap", config.mem_cap}, {"threads", config.threads}};
  doc["eigen_modes"] = {{"stage1", "largest_algebraic"}, {"stage2", "largest_absolute"}};
  if (options.planted) {
    doc["planted"] = {{"k", options.planted->k}, {"alpha", options.planted->alpha}, {"noise", options.planted->noise}};
  } else {
    doc["planted"] = nullptr;
  }
  json list = json::array();
  for (const auto& t : trials) {
    std::vector<double> tau(t.tau.data(), t.tau.data() + t.tau.size());
    list.push_back({{"trial", t.diag.trial},
                    {"seed", t.diag.seed},
                    {"alpha_tilde", t.diag.alpha_tilde},
                    {"stage1_eigenvalue", t.diag.stage1_value},
                    {"stage2_eigenvalue", t.diag.stage2_value},
                    {"zero_matrix", t.diag.zero_matrix},
                    {"degenerate", t.diag.degenerate},
                    {"imag_residue", t.diag.imag_residue},
                    {"raw_corr", t.diag.raw_corr},
                    {"orbit_corr", t.diag.orbit_corr},
                    {"seconds", t.diag.seconds},
                    {"tau", tau}});
  }
  doc["trials"] = std::move(list);
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

void write_trials_csv(const std::string& path, const std::vector<TrialResult>& trials) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out.precision(17);
  const std::size_t K = trials.empty() ? 0 : trials.front().diag.raw_corr.size();
  out << "trial";
  for (std::size_t k = 0; k < K; ++k) out << ",raw_corr_" << k + 1;
  for (std::size_t k = 0; k < K; ++k) out << ",orbit_corr_" << k + 1;
  out << ",stage1_eigenvalue,stage2_eigenvalue,seconds\n";
  for (const auto& t : trials) {
    out << t.diag.trial;
    for (double v : t.diag.raw_corr) out << ',' << v;
    for (double v : t.diag.orbit_corr) out << ',' << v;
    out << ',' << t.diag.stage1_value << ',' << t.diag.stage2_value << ',' << t.diag.seconds << '\n';
  }
}

}  // namespace mra
