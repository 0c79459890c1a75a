// mra: experiment runner for the continuous-MRA spectral method.

#include <chrono>
#include <deque>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mra/baselines.hpp"
#include "mra/config.hpp"
#include "mra/correction.hpp"
#include "mra/errors.hpp"
#include "mra/io.hpp"
#include "mra/moments.hpp"
#include "mra/spectral.hpp"
#include "mra/trace_verifier.hpp"

#ifndef MRA_VERSION
#define MRA_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mra;

namespace {

enum Exit { ok = 0, config_error = 2, numerical_failure = 3, verification_violation = 4 };

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  std::uint64_t mem_cap = 0;
  std::string out_dir = ".";
  std::string cache_dir;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* mem_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Experiment config file (key = value lines)")->check(CLI::ExistingFile);
    seed_opt = app->add_option("--seed", seed, "Override the config seed");
    threads_opt = app->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    mem_opt = app->add_option("--mem-cap", mem_cap, "Memory cap in bytes for cached factors");
    app->add_option("--out-dir", out_dir, "Directory for all outputs")->capture_default_str();
    app->add_option("--cache-dir", cache_dir, "Directory for cached correction tables");
  }

  ExperimentConfig config() const {
    ExperimentConfig c;
    if (!config_path.empty()) c = load_config(config_path);
    if (seed_opt->count()) c.seed = seed;
    if (threads_opt->count()) c.threads = threads;
    if (mem_opt->count()) c.mem_cap = mem_cap;
    c.validate();
    return c;
  }

  std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
};

json config_json(const ExperimentConfig& c) {
  return {{"p", c.p},         {"K", c.K},         {"sigma", c.sigma},     {"n", c.n},
          {"exact_moments", c.exact_moments},     {"L", c.L},             {"epsilon", c.epsilon},
          {"seed", c.seed},   {"mem_cap", c.mem_cap}, {"threads", c.threads}};
}

// Every file named in the manifest must exist before it is written.
class Manifest {
 public:
  Manifest(std::string command, const Common& common) : common_(common), start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["version"] = MRA_VERSION;
    doc_["outputs"] = json::array();
  }
  json& operator[](const char* key) { return doc_[key]; }
  const std::string& output(const std::string& name) {
    paths_.push_back(common_.path(name));
    return paths_.back();
  }
  void write(const ExperimentConfig* config) {
    for (const auto& p : paths_) {
      if (!fs::exists(p)) throw std::runtime_error("manifest names missing output " + p);
      doc_["outputs"].push_back(p);
    }
    if (config) {
      doc_["config"] = config_json(*config);
      if (!doc_.contains("seeds")) doc_["seeds"] = {{"seed", config->seed}};
      doc_["environment"] = {{"threads", config->threads},
                             {"mem_cap", config->mem_cap},
                             {"hardware_concurrency", std::thread::hardware_concurrency()}};
    }
    doc_["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(common_.path("manifest.json"));
    if (!out) throw InvalidInput("cannot write manifest in " + common_.out_dir);
    out << doc_.dump(2) << '\n';
  }

 private:
  const Common& common_;
  std::chrono::steady_clock::time_point start_;
  json doc_;
  std::deque<std::string> paths_;
};

void prepare(const Common& common) { fs::create_directories(common.out_dir); }

CorrectionTable correction(int p, const Common& common, int threads) {
  CorrectionOptions opts;
  opts.threads = threads;
  if (common.cache_dir.empty()) return correction_table(p, opts);
  fs::create_directories(common.cache_dir);
  return cached_correction_table(p, opts, common.cache_dir);
}

// Reads .bin containers or CSV vector lists.
SignalSet load_signals(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return SignalSet::from_real(read_vectors_csv(path));
  return read_signals(path);
}

int cmd_generate(const Common& common) {
  const auto cfg = common.config();
  prepare(common);
  Manifest manifest("generate", common);
  const auto signals = random_signals(cfg.p, cfg.K, cfg.seed);
  const auto batch = sample_observations(signals, cfg.sigma, cfg.n, cfg.seed, cfg.threads);
  if (cfg.sigma == 0.0) {
    const auto thetas = signals.real();
    for (std::size_t i = 0; i < batch.n(); ++i) {
      const double want = thetas[static_cast<std::size_t>(batch.classes[i])].norm();
      const double got = batch.samples.col(static_cast<Eigen::Index>(i)).norm();
      if (std::abs(got - want) > 1e-9 * std::max(1.0, want)) {
        throw NumericalError("observation " + std::to_string(i) + " changed norm under a noiseless rotation");
      }
    }
  }
  const auto emp = empirical_third_moment(batch, cfg.threads);
  write_signals(manifest.output("signals.bin"), signals);
  write_vectors_csv(manifest.output("signals.csv"), signals.real());
  write_observations(manifest.output("observations.bin"), batch);
  write_tensor(manifest.output("moments.bin"), emp.fourier_full, cfg.K);
  manifest["norm_check"] = cfg.sigma == 0.0 ? "passed" : "skipped (sigma > 0)";
  manifest["seeds"] = {{"seed", cfg.seed}, {"streams", {"signal", "observation"}}};
  manifest.write(&cfg);
  std::cout << "wrote " << cfg.K << " signal(s) and " << batch.n() << " observations to " << common.out_dir << '\n';
  return ok;
}

struct RecoverArgs {
  std::string signals, observations, moments;
  bool exact = false;
  std::optional<int> planted;
  double planted_alpha = 1.0, planted_noise = 0.0;
  bool factor_cache = false;
};

int cmd_recover(const Common& common, const RecoverArgs& args) {
  auto cfg = common.config();
  if (args.exact) cfg.exact_moments = true;
  prepare(common);
  Manifest manifest("recover", common);

  std::optional<SignalSet> truth;
  if (!args.signals.empty()) truth = load_signals(args.signals);
  else if (args.moments.empty()) truth = random_signals(cfg.p, cfg.K, cfg.seed);
  if (truth && (truth->p != cfg.p || truth->K() != cfg.K)) {
    throw InvalidInput("signals file has p=" + std::to_string(truth->p) + ", K=" + std::to_string(truth->K()) +
                       " but the config says p=" + std::to_string(cfg.p) + ", K=" + std::to_string(cfg.K));
  }

  ZeroSumTensor3 t;
  std::string source;
  if (!args.moments.empty()) {
    t = ZeroSumTensor3::project(read_complex_tensor(args.moments));
    source = args.moments;
  } else if (cfg.exact_moments) {
    t = exact_third_moment(*truth, Normalization::mean_over_K);
    source = "exact";
  } else {
    const auto batch = args.observations.empty()
                           ? sample_observations(*truth, cfg.sigma, cfg.n, cfg.seed, cfg.threads)
                           : read_observations(args.observations);
    t = empirical_third_moment(batch, cfg.threads).fourier;
    source = args.observations.empty() ? "sampled" : args.observations;
  }
  if (t.p() != cfg.p) throw InvalidInput("moment tensor has p=" + std::to_string(t.p()));

  RecoveryOptions opts;
  opts.use_factor_cache = args.factor_cache;
  if (args.planted) {
    if (!truth) throw InvalidInput("--planted-u needs the true signals");
    if (*args.planted < 1 || *args.planted > cfg.K) throw InvalidInput("--planted-u index must be in 1..K");
    opts.planted = PlantedU{*args.planted - 1, args.planted_alpha, args.planted_noise};
    if (args.planted_noise == 0.0) cfg.L = 1;  // every trial would be identical
  }
  const auto S = correction(cfg.p, common, cfg.threads);
  const auto trials = list_recovery(t, S, cfg, truth ? &*truth : nullptr, opts);

  write_trials_json(manifest.output("trials.json"), cfg, trials, opts);
  write_trials_csv(manifest.output("trials.csv"), trials);
  std::vector<RealVector> taus;
  for (const auto& tr : trials) taus.push_back(tr.tau);
  write_vectors_csv(manifest.output("candidates.csv"), taus);
  manifest["moments"] = source;
  manifest["seeds"] = {{"seed", cfg.seed}, {"streams", {"trial-u"}}};
  manifest.write(&cfg);

  std::cout << "recovered " << trials.size() << " candidate(s)";
  if (truth) {
    for (int k = 0; k < cfg.K; ++k) {
      double best = 0.0;
      for (const auto& tr : trials) best = std::max(best, tr.diag.orbit_corr[static_cast<std::size_t>(k)]);
      std::cout << "; best orbit correlation with signal " << k + 1 << ": " << best;
    }
  }
  std::cout << '\n';
  return ok;
}

struct VerifyArgs {
  int p = 2, q = 1, K = 2;
  bool sampled = false;
  std::uint64_t samples = 1000, draws = 100000, budget = 200000000, region_budget = 4000000000;
  int tilt = 0;
  bool crosscheck = true;
};

int cmd_verify(const Common& common, const VerifyArgs& a) {
  ExperimentConfig cfg;
  if (!common.config_path.empty()) cfg = common.config();
  if (common.seed_opt->count()) cfg.seed = common.seed;
  if (common.threads_opt->count()) cfg.threads = common.threads;
  prepare(common);
  Manifest manifest("verify", common);
  const auto net = build_expanded(a.q);

  EnumerationOptions en;
  en.threads = cfg.threads;
  en.budget = a.budget;
  const auto c = census(net, a.p, en);

  RegionOptions ro;
  ro.exhaustive = !a.sampled;
  ro.samples = a.samples;
  ro.seed = cfg.seed;
  ro.threads = cfg.threads;
  ro.throw_on_violation = false;
  ro.budget = a.region_budget;
  const auto region = verify_region_lemma(net, a.p, a.K, ro);

  std::optional<CrosscheckResult> cross;
  if (a.crosscheck && a.q == 1) {
    CrosscheckOptions co;
    co.draws = a.draws;
    co.seed = cfg.seed;
    co.threads = cfg.threads;
    co.tilt = a.tilt;
    co.enumeration = en;
    cross = trace_crosscheck(a.p, a.K, correction(a.p, common, cfg.threads), co);
  }
  write_verify_json(manifest.output("verify.json"), c, region, cross ? &*cross : nullptr);
  manifest["verify"] = {{"p", a.p}, {"q", a.q}, {"K", a.K}, {"sampled", a.sampled}, {"tilt", a.tilt}};
  manifest.write(&cfg);

  std::cout << "labelings: " << c.total << " (within bounds: " << (c.within_bounds() ? "yes" : "NO") << ")\n";
  std::cout << "region lemma: " << region.violations.size() << " violations over " << region.valid_multi_region
            << " valid multi-region labelings\n";
  if (cross) {
    std::cout << "trace identity: lhs " << cross->lhs << " ± " << cross->stderr_ << ", rhs " << cross->rhs
              << (cross->agree() ? " (agree within 3 SE)" : " (DISAGREE)") << '\n';
  }
  const bool good = region.violations.empty() && c.within_bounds() && (!cross || cross->agree());
  return good ? ok : verification_violation;
}

int cmd_fm(const Common& common, const std::string& signals_path) {
  const auto cfg = common.config();
  prepare(common);
  Manifest manifest("baselines fm", common);
  const auto signals = signals_path.empty() ? random_signals(cfg.p, cfg.K, cfg.seed) : load_signals(signals_path);
  std::ofstream out(manifest.output("fm.csv"));
  out.precision(17);
  out << "signal,raw_corr,orbit_corr\n";
  std::vector<RealVector> estimates;
  const auto thetas = signals.real();
  for (int k = 0; k < signals.K(); ++k) {
    SignalSet one;
    one.p = signals.p;
    one.signals = {signals.signals[static_cast<std::size_t>(k)]};
    const auto est = from_fourier(frequency_marching(exact_moment(one, 2, Normalization::sum_over_K),
                                                     exact_moment(one, 3, Normalization::sum_over_K)));
    const auto oc = orbit_correlation(est, thetas[static_cast<std::size_t>(k)]);
    out << k + 1 << ',' << oc.raw << ',' << oc.orbit << '\n';
    estimates.push_back(est);
  }
  out.close();
  write_vectors_csv(manifest.output("fm_estimates.csv"), estimates);
  manifest.write(&cfg);
  std::cout << "frequency marching on " << signals.K() << " signal(s) written to fm.csv\n";
  return ok;
}

int cmd_pca(const Common& common, int p, std::optional<double> lambda, int draws,
            const std::vector<std::string>& method_names) {
  ExperimentConfig cfg;
  if (!common.config_path.empty()) cfg = common.config();
  if (common.seed_opt->count()) cfg.seed = common.seed;
  if (common.threads_opt->count()) cfg.threads = common.threads;
  prepare(common);
  Manifest manifest("baselines pca", common);
  std::vector<PcaMethod> methods;
  for (const auto& m : method_names) methods.push_back(parse_pca_method(m));
  if (methods.empty()) methods.assign(std::begin(kAllPcaMethods), std::end(kAllPcaMethods));
  const double lam = lambda.value_or(3.0 * std::pow(p, 0.75));
  const auto records = pca_sweep(p, lam, draws, cfg.seed, methods, cfg.threads);
  write_pca_csv(manifest.output("pca.csv"), records);
  manifest["pca"] = {{"p", p}, {"lambda", lam}, {"draws", draws}};
  manifest.write(&cfg);
  for (auto m : methods) {
    double mean = 0.0;
    for (const auto& r : records)
      if (r.method == m) mean += r.corr / draws;
    std::cout << to_string(m) << ": mean corr² " << mean << '\n';
  }
  return ok;
}

int cmd_eval(const Common& common, const std::string& candidates, const std::string& signals_path) {
  prepare(common);
  Manifest manifest("eval", common);
  const auto taus = read_vectors_csv(candidates);
  const auto thetas = load_signals(signals_path).real();
  std::ofstream out(manifest.output("eval.csv"));
  out.precision(17);
  out << "candidate,signal,raw_corr,orbit_corr,angle\n";
  for (std::size_t i = 0; i < taus.size(); ++i)
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      const auto oc = orbit_correlation(taus[i], thetas[k]);
      out << i + 1 << ',' << k + 1 << ',' << oc.raw << ',' << oc.orbit << ',' << oc.angle << '\n';
    }
  out.close();
  manifest.write(nullptr);
  std::cout << "evaluated " << taus.size() << " candidate(s) against " << thetas.size() << " signal(s)\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-network spectral method for heterogeneous continuous multi-reference alignment"};
  app.set_version_flag("--version", std::string("mra ") + MRA_VERSION);
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("generate", "Draw signals and observations; write the empirical third moment");
  common.attach(gen);

  RecoverArgs rec;
  auto* recover = app.add_subcommand("recover", "Run the spectral list-recovery trials");
  common.attach(recover);
  recover->add_option("--signals", rec.signals, "True signals (.bin or .csv) for diagnostics")->check(CLI::ExistingFile);
  recover->add_option("--observations", rec.observations, "Observation batch (.bin)")->check(CLI::ExistingFile);
  recover->add_option("--moments", rec.moments, "Fourier third-moment tensor (.bin)")->check(CLI::ExistingFile);
  recover->add_flag("--exact-moments", rec.exact, "Use the exact moment of the signals");
  recover->add_option("--planted-u", rec.planted, "Plant u = α θᵏ^⊗5 for signal k (1-based)");
  recover->add_option("--planted-alpha", rec.planted_alpha, "Scale α of the planted term")->capture_default_str();
  recover->add_option("--planted-noise", rec.planted_noise, "Gaussian noise added to the planted u")->capture_default_str();
  recover->add_flag("--factor-cache", rec.factor_cache, "Precompute ring factors when they fit under --mem-cap");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Check the labeling lemmas and the trace identity");
  common.attach(verify);
  verify->add_option("-p,--p", ver.p, "Band limit")->capture_default_str();
  verify->add_option("-q,--q", ver.q, "Number of layers")->capture_default_str();
  verify->add_option("-K,--K", ver.K, "Number of vertex labels")->capture_default_str();
  verify->add_flag("--sampled", ver.sampled, "Sample edge labelings instead of enumerating them");
  verify->add_option("--samples", ver.samples, "Edge labelings drawn in sampled mode")->capture_default_str();
  verify->add_option("--draws", ver.draws, "Monte Carlo draws for the trace identity")->capture_default_str();
  verify->add_option("--tilt", ver.tilt, "Gamma-mixture depth for the Monte Carlo side (0 = plain)")
      ->capture_default_str();
  verify->add_option("--budget", ver.budget, "Maximum edge labelings enumerated")->capture_default_str();
  verify->add_option("--region-budget", ver.region_budget, "Maximum edge-and-vertex labelings checked")
      ->capture_default_str();
  bool no_cross = false;
  verify->add_flag("--no-crosscheck", no_cross, "Skip the trace identity");

  auto* base = app.add_subcommand("baselines", "Frequency marching and tensor-PCA baselines");
  base->require_subcommand(1);
  std::string fm_signals;
  auto* fm = base->add_subcommand("fm", "Frequency marching from exact moments");
  common.attach(fm);
  fm->add_option("--signals", fm_signals, "Signals (.bin or .csv); default draws them from the config")
      ->check(CLI::ExistingFile);
  int pca_p = 50, pca_draws = 50;
  std::optional<double> pca_lambda;
  std::vector<std::string> pca_methods;
  auto* pca = base->add_subcommand("pca", "Tensor PCA spectral methods");
  common.attach(pca);
  pca->add_option("-p,--p", pca_p, "Dimension")->capture_default_str();
  pca->add_option("--lambda", pca_lambda, "Signal strength (default 3p^{3/4})");
  pca->add_option("--draws", pca_draws, "Independent instances")->capture_default_str();
  pca->add_option("--methods", pca_methods, "unfolding, spectral_sos, partial_trace, homotopy_init");

  std::string eval_candidates, eval_signals;
  auto* eval = app.add_subcommand("eval", "Correlate candidate vectors with true signals");
  common.attach(eval);
  eval->add_option("--candidates", eval_candidates, "Candidate vectors (.csv)")->required()->check(CLI::ExistingFile);
  eval->add_option("--signals", eval_signals, "True signals (.bin or .csv)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*gen) return cmd_generate(common);
    if (*recover) return cmd_recover(common, rec);
    if (*verify) {
      ver.crosscheck = !no_cross;
      return cmd_verify(common, ver);
    }
    if (*fm) return cmd_fm(common, fm_signals);
    if (*pca) return cmd_pca(common, pca_p, pca_lambda, pca_draws, pca_methods);
    if (*eval) return cmd_eval(common, eval_candidates, eval_signals);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failure: " << e.what() << '\n';
    return verification_violation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded after " << e.progress() << " steps: " << e.what() << '\n';
    return numerical_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return ok;
}
