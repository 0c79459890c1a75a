// Acceptance suite: one pass/fail line per criterion. Tolerances are pinned here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "mra/baselines.hpp"
#include "mra/correction.hpp"
#include "mra/errors.hpp"
#include "mra/linalg.hpp"
#include "mra/moments.hpp"
#include "mra/network.hpp"
#include "mra/ring.hpp"
#include "mra/rng.hpp"
#include "mra/spectral.hpp"
#include "mra/trace_verifier.hpp"

using namespace mra;

namespace {

struct Context {
  std::string cache_dir;
  int threads = 1;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Line {
 public:
  Line() { out_ << std::setprecision(4); }
  template <typename T>
  Line& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CorrectionTable table(const Context& ctx, int p) {
  CorrectionOptions opts;
  opts.threads = ctx.threads;
  return cached_correction_table(p, opts, ctx.cache_dir);
}

BuildOptions build_options(const Context& ctx) {
  BuildOptions b;
  b.ring.threads = ctx.threads;
  return b;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Planted instance: K = 1, exact moment, u = θ^⊗5.
struct Planted {
  double corr = 0.0;
  double norm = 0.0;
  double seconds = 0.0;
};

Planted planted(const Context& ctx, int p, std::uint64_t seed, const CorrectionTable& S) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto signals = random_signals(p, 1, seed);
  const auto t = exact_third_moment(signals, Normalization::sum_over_K);
  const auto theta = signals.real()[0];
  const auto m = build_M(t, outer_power(theta, 5), S, build_options(ctx));
  const auto cand = extract_candidate(m);
  const double c = cand.tau.dot(theta) / theta.norm();
  return {c * c, spectral_norm(m), seconds_since(t0)};
}

constexpr std::uint64_t kPlantedSeeds = 5;

// 1. Median raw correlation over five planted instances per p.
Verdict planted_fidelity(const Context& ctx) {
  std::map<int, double> med;
  double slowest = 0.0;
  for (int p : {8, 16}) {
    const auto S = table(ctx, p);
    std::vector<double> corr;
    for (std::uint64_t s = 1; s <= kPlantedSeeds; ++s) {
      const auto r = planted(ctx, p, s, S);
      corr.push_back(r.corr);
      if (p == 16) slowest = std::max(slowest, r.seconds);
    }
    med[p] = median(corr);
  }
  const bool pass = med[8] >= 0.80 && med[16] >= 0.90 && 1 - med[16] < 1 - med[8] && slowest <= 600.0;
  return {pass, (Line() << "median corr p=8 " << med[8] << " (>= 0.80), p=16 " << med[16]
                        << " (>= 0.90), gap " << 1 - med[8] << " -> " << 1 - med[16] << ", p=16 instance "
                        << slowest << " s (<= 600 s)")
                    .str()};
}

// 2. |S·s − 1| over nonzero entries, pooled over 20 Gaussian draws.
Verdict correction_concentration(const Context& ctx) {
  std::map<int, std::vector<double>> pooled;
  for (int p : {8, 16}) {
    const auto S = table(ctx, p);
    for (std::uint64_t d = 0; d < 20; ++d) {
      const auto dev = correction_deviation(S, random_signal(p, 2, d), ctx.threads);
      pooled[p].insert(pooled[p].end(), dev.begin(), dev.end());
    }
  }
  const auto& v16 = pooled[16];
  const double within =
      static_cast<double>(std::count_if(v16.begin(), v16.end(), [](double x) { return x <= 0.5; })) /
      static_cast<double>(v16.size());
  const double m8 = median(pooled[8]), m16 = median(pooled[16]);
  const bool pass = within >= 0.99 && m16 < m8;
  return {pass, (Line() << "p=16 fraction within 0.5: " << within << " (>= 0.99); median deviation p=8 "
                        << std::setprecision(8) << m8 << ", p=16 " << m16)
                    .str()};
}

// 3. Gaussian-u spectral norms at the first planted p=8 instance.
Verdict noise_term(const Context& ctx) {
  const int p = 8;
  const std::uint64_t seed = 1;
  const auto S = table(ctx, p);
  const auto signals = random_signals(p, 1, seed);
  const auto t = exact_third_moment(signals, Normalization::sum_over_K);
  std::vector<double> norms;
  for (std::uint64_t i = 0; i < 50; ++i) {
    Stream rng(seed, "trial-u", i);
    auto u = RealTensor::cube(5, p);
    for (auto& v : u.data()) v = rng.normal();
    norms.push_back(spectral_norm(build_M(t, u, S, build_options(ctx))) / std::sqrt(std::log(p)));
  }
  const double med = median(norms);
  const double mx = *std::max_element(norms.begin(), norms.end());
  const double planted_norm = planted(ctx, p, seed, S).norm / std::sqrt(std::log(p));
  const bool pass = mx <= 10 * med && planted_norm >= 3 * med;
  return {pass, (Line() << "max/median " << mx / med << " (<= 10); planted/median " << planted_norm / med
                        << " (>= 3); median norm/sqrt(log p) " << med)
                    .str()};
}

// 4. L = 500 trials against 500 random unit vectors, five seeds.
Verdict list_recovery_end_to_end(const Context& ctx) {
  const int p = 8;
  const auto S = table(ctx, p);
  int passed = 0;
  Line detail;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg;
    cfg.p = p;
    cfg.K = 1;
    cfg.L = 500;
    cfg.seed = seed;
    cfg.threads = ctx.threads;
    const auto signals = random_signals(p, 1, seed);
    const auto trials = list_recovery(exact_third_moment(signals, Normalization::sum_over_K), S, cfg, &signals);
    double best = 0.0;
    for (const auto& tr : trials) best = std::max(best, tr.diag.orbit_corr[0]);
    const auto theta = signals.real()[0];
    double random_best = 0.0;
    for (std::uint64_t i = 0; i < 500; ++i) {
      Stream rng(seed, "random-unit", i);
      RealVector v(p);
      for (int k = 0; k < p; ++k) v(k) = rng.normal();
      random_best = std::max(random_best, orbit_correlation(v, theta).orbit);
    }
    if (best >= 0.5 && best >= 2 * random_best) ++passed;
    detail << (seed > 1 ? ", " : "") << best << "/" << random_best;
  }
  const double secs = seconds_since(t0);
  return {passed >= 4 && secs <= 1800.0,
          (Line() << passed << "/5 seeds pass (>= 4); best list/best random: " << detail.str() << "; " << secs
                  << " s")
              .str()};
}

double het_median(const Context& ctx, int p, int K, const CorrectionTable& S, bool* all_zero = nullptr) {
  std::vector<double> gaps;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto signals = random_signals(p, K, seed);
    SignalSet one;
    one.p = p;
    one.signals = {signals.signals[0]};
    gaps.push_back(het_signal_gap(exact_third_moment(signals, Normalization::sum_over_K),
                                  exact_third_moment(one, Normalization::sum_over_K), signals.real()[0], S,
                                  build_options(ctx)));
  }
  if (all_zero) *all_zero = std::all_of(gaps.begin(), gaps.end(), [](double g) { return g == 0.0; });
  return median(gaps);
}

// 5. Median gap over 20 signal draws; T sums the K signal moments.
Verdict heterogeneous_gap(const Context& ctx) {
  std::map<int, double> by_p, by_k;
  for (int p : {8, 12, 16}) by_p[p] = het_median(ctx, p, 2, table(ctx, p));
  const auto S8 = table(ctx, 8);
  bool zero = false;
  by_k[1] = het_median(ctx, 8, 1, S8, &zero);
  by_k[2] = by_p[8];
  by_k[4] = het_median(ctx, 8, 4, S8);
  const bool over_p = by_p[8] > by_p[12] && by_p[12] > by_p[16];
  const bool over_k = zero && by_k[1] < by_k[2] && by_k[2] < by_k[4];
  return {over_p && over_k, (Line() << "K=2 median over p=8,12,16: " << by_p[8] << ", " << by_p[12] << ", "
                                    << by_p[16] << (over_p ? " (decreasing)" : " (not decreasing)")
                                    << "; p=8 over K=1,2,4: " << by_k[1] << ", " << by_k[2] << ", " << by_k[4]
                                    << (over_k ? " (zero then increasing)" : " (trend broken)"))
                                       .str()};
}

RealVector march(const RealVector& theta) {
  SignalSet s;
  s.p = static_cast<int>(theta.size());
  s.signals = {to_fourier(theta)};
  return from_fourier(frequency_marching(exact_moment(s, 2, Normalization::sum_over_K),
                                         exact_moment(s, 3, Normalization::sum_over_K)));
}

// 6. Spectra bounded below by 0.1/√p; a zeroed frequency must be named.
Verdict marching(const Context&) {
  double worst = 0.0;
  int rejected = 0;
  for (int p : {4, 8, 16}) {
    int kept = 0;
    for (std::uint64_t d = 0; kept < 100; ++d) {
      const auto theta = random_signal(p, 6, d);
      if (predicate_diagnostics(theta).min_fourier_scaled < 0.1) {
        ++rejected;
        continue;
      }
      ++kept;
      worst = std::max(worst, 1.0 - orbit_correlation(march(theta), theta).orbit);
    }
  }
  auto hat = to_fourier(random_signal(8, 6, 0));
  const Frequencies f(8);
  hat.coeffs()(static_cast<Eigen::Index>(f.position(3))) = 0.0;
  hat.coeffs()(static_cast<Eigen::Index>(f.position(-3))) = 0.0;
  bool graceful = false;
  std::string message;
  try {
    march(from_fourier(hat));
  } catch (const InvalidInput& e) {
    message = e.what();
    graceful = message.find("at frequency 3") != std::string::npos;
  }
  return {worst <= 1e-9 && graceful, (Line() << "300 draws, max 1 - orbit corr " << worst << " (<= 1e-9), "
                                             << rejected << " draws below the spectrum floor skipped; zeroed "
                                             << "frequency: " << (graceful ? "named" : "NOT named") << " (\""
                                             << message << "\")")
                                         .str()};
}

// 7. Loop form against the rank form of the same matrix.
Verdict hsss_equivalence(const Context&) {
  const int p = 5, r = 3;
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    Stream rng(7, "hsss", inst);
    std::vector<RealVector> comps;
    auto t = RealTensor::cube(3, p);
    for (int k = 0; k < r; ++k) {
      RealVector a(p);
      for (int i = 0; i < p; ++i) a(i) = rng.normal();
      const auto cube = outer_power(a, 3);
      for (std::size_t f = 0; f < t.size(); ++f) t[f] += cube[f];
      comps.push_back(a);
    }
    RealVector u(p);
    for (int i = 0; i < p; ++i) u(i) = rng.normal();
    worst = std::max(worst, (hsss_matrix(t, u) - hsss_matrix_rank_form(comps, u)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, (Line() << "20 instances, max entry difference " << worst << " (<= 1e-10)").str()};
}

// 8. Noiseless exactness, the planted regime and the null.
Verdict tensor_pca(const Context& ctx) {
  double noiseless = 1.0;
  for (std::uint64_t d = 0; d < 5; ++d) {
    const auto inst = make_pca_instance(12, 1.0, 8, d, false);
    for (auto m : kAllPcaMethods) {
      const double c = pca_estimate(inst.T, m).dot(inst.x);
      noiseless = std::min(noiseless, c * c);
    }
  }
  const int p = 50;
  const std::vector<PcaMethod> methods{PcaMethod::unfolding, PcaMethod::partial_trace};
  const auto planted = pca_sweep(p, 3.0 * std::pow(p, 0.75), 50, 8, methods, ctx.threads);
  const auto null = pca_sweep(p, 0.0, 50, 9, methods, ctx.threads);
  bool pass = noiseless >= 1 - 1e-10;
  Line detail;
  detail << "noiseless min corr² " << std::setprecision(12) << noiseless << std::setprecision(4);
  for (auto m : methods) {
    int ok = 0;
    double null_mean = 0.0;
    for (const auto& rec : planted)
      if (rec.method == m && rec.corr >= 0.8) ++ok;
    for (const auto& rec : null)
      if (rec.method == m) null_mean += rec.corr / 50.0;
    pass = pass && ok >= 45 && null_mean <= 3.0 / p;
    detail << "; " << to_string(m) << " " << ok << "/50 (>= 45), null mean " << null_mean << " (<= " << 3.0 / p
           << ")";
  }
  return {pass, detail.str()};
}

// 9. The literal p = 2 run plus nontrivial p = 6 supplements.
Verdict trace_verifier(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto net = build_expanded(1);
  EnumerationOptions en;
  en.threads = ctx.threads;
  RegionOptions ro;
  ro.throw_on_violation = false;
  ro.threads = ctx.threads;

  bool pass = true;
  Line detail;
  const auto c2 = census(net, 2, en);
  pass = pass && c2.within_bounds();
  std::size_t violations = 0;
  for (int K : {1, 2}) violations += verify_region_lemma(net, 2, K, ro).violations.size();
  CrosscheckOptions co;
  co.draws = 100000;
  co.threads = ctx.threads;
  const auto x2 = trace_crosscheck(2, 2, table(ctx, 2), co);
  pass = pass && violations == 0 && x2.agree();
  detail << "p=2: " << c2.total << " labelings, " << violations << " violations, lhs " << x2.lhs << " rhs "
         << x2.rhs;

  const auto c6 = census(net, 6, en);
  ro.exhaustive = false;
  ro.samples = 2000;
  const auto r6 = verify_region_lemma(net, 6, 2, ro);
  CrosscheckOptions c6o;
  c6o.draws = 2000;
  c6o.tilt = 20;
  c6o.seed = 1;
  c6o.threads = ctx.threads;
  const auto x6 = trace_crosscheck(6, 1, table(ctx, 6), c6o);
  pass = pass && c6.within_bounds() && r6.violations.empty() && x6.agree();
  const double secs = seconds_since(t0);
  pass = pass && secs <= 600.0;
  detail << "; p=6: " << c6.total << " labelings within bounds " << (c6.within_bounds() ? "yes" : "NO") << ", "
         << r6.violations.size() << " violations over " << r6.valid_multi_region
         << " sampled K=2 labelings, tilted lhs " << x6.lhs << " ± " << x6.stderr_ << " vs rhs " << x6.rhs
         << "; " << secs << " s";
  return {pass, detail.str()};
}

// 10. Average of five replicate batches per n.
Verdict moment_convergence(const Context& ctx) {
  const int p = 4;
  const auto signals = random_signals(p, 1, 10);
  const auto exact = tensor_from_fourier(exact_moment(signals, 3, Normalization::sum_over_K));
  std::vector<double> lx, ly;
  Line detail;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    double err = 0.0;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      const auto batch = sample_observations(signals, 0.5, n, 100 + rep, ctx.threads);
      err += moment_error(empirical_third_moment(batch, ctx.threads).real, exact) / 5.0;
    }
    lx.push_back(std::log10(static_cast<double>(n)));
    ly.push_back(std::log10(err));
    detail << "n=" << n << ": " << err << "; ";
  }
  const double slope = fit_slope(lx, ly);
  return {slope >= -0.6 && slope <= -0.4, (Line() << detail.str() << "slope " << slope << " (in [-0.6, -0.4])").str()};
}

// Naive ring oracle: i₁ and j₁..j₅ enumerated, the chain i_{m+1} = i_m − x_m checked by hand.
Eigen::MatrixXcd naive_ring(const ComplexTensor& t, const ComplexTensor& u_hat) {
  const int p = static_cast<int>(t.extent(0));
  const Frequencies f(p);
  const std::size_t P = static_cast<std::size_t>(p);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(p * p, p * p);
  std::size_t j[5];
  for (std::size_t a = 0; a < P; ++a)
    for (std::size_t b = 0; b < P; ++b)
      for (std::size_t c = 0; c < P; ++c)
        for (std::size_t d = 0; d < P; ++d) {
          cplx sum{};
          for (std::size_t i1 = 0; i1 < P; ++i1)
            for (std::size_t flat = 0; flat < P * P * P * P * P; ++flat) {
              std::size_t rest = flat;
              for (int k = 4; k >= 0; --k) {
                j[k] = rest % P;
                rest /= P;
              }
              const std::size_t x[9] = {a, j[0], c, j[1], b, j[2], d, j[3], j[4]};
              int i = f.value(i1);
              cplx prod = 1.0;
              for (int m = 0; m < 9 && prod != cplx{}; ++m) {
                const int next = i - f.value(x[m]);
                if (!f.contains(next)) {
                  prod = 0.0;
                  break;
                }
                prod *= t.at({f.position(-i), x[m], f.position(next)});
                i = next;
              }
              if (prod == cplx{} || i != f.value(i1)) continue;
              sum += prod * u_hat.at({f.negated(j[0]), f.negated(j[1]), f.negated(j[2]), f.negated(j[3]),
                                      f.negated(j[4])});
            }
          out(static_cast<Eigen::Index>(a * P + b), static_cast<Eigen::Index>(c * P + d)) = sum;
        }
  return out;
}

ComplexTensor random_complex(std::size_t order, std::size_t p, std::uint64_t seed) {
  Stream rng(seed, "oracle-tensor");
  auto t = ComplexTensor::cube(order, p);
  for (auto& v : t.data()) v = {rng.normal(), rng.normal()};
  return t;
}

double network_oracles() {
  const std::size_t p = 4;
  const auto t = random_complex(3, p, 1);
  const auto u = random_complex(1, p, 2);
  const auto pair = contract(networks::pair_contraction(), {{"T", t}});
  const auto hsss = contract(networks::hsss(), {{"T", t}, {"u", u}});
  const auto gram = contract(networks::unfolding_gram(), {{"T", t}});
  const auto kron = contract(networks::slice_kron_sum(), {{"T", t}});
  const auto ptr = contract(networks::partial_trace(), {{"T", t}});
  const auto z = contract(networks::homotopy_init(), {{"T", t}});
  double worst = 0.0;
  auto check = [&](cplx got, cplx want) { worst = std::max(worst, std::abs(got - want)); };
  for (std::size_t a = 0; a < p; ++a) {
    cplx zs{};
    for (std::size_t i = 0; i < p; ++i) zs += t.at({i, i, a});
    check(z.at({a}), zs);
    for (std::size_t b = 0; b < p; ++b) {
      cplx g{}, pt{};
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) g += t.at({a, j, k}) * t.at({b, j, k});
      for (std::size_t i = 0; i < p; ++i) {
        cplx tr{};
        for (std::size_t l = 0; l < p; ++l) tr += t.at({i, l, l});
        pt += tr * t.at({i, a, b});
      }
      check(gram.at({a, b}), g);
      check(ptr.at({a, b}), pt);
      for (std::size_t c = 0; c < p; ++c)
        for (std::size_t d = 0; d < p; ++d) {
          cplx s{}, kr{}, h{};
          for (std::size_t i = 0; i < p; ++i) {
            s += t.at({a, b, i}) * t.at({c, d, i});
            kr += t.at({i, a, c}) * t.at({i, b, d});
            for (std::size_t j = 0; j < p; ++j)
              for (std::size_t k = 0; k < p; ++k) h += t.at({a, c, j}) * t.at({b, d, k}) * t.at({i, j, k}) * u.at({i});
          }
          check(pair.at({a, b, c, d}), s);
          check(kron.at({a, b, c, d}), kr);
          check(hsss.at({a, b, c, d}), h);
        }
    }
  }
  return worst;
}

// Returns max relative difference between generic contraction, naive loops and ring_contract.
double ring_oracles(int p, double* generic_scale) {
  const auto signals = random_signals(p, 1, 11);
  const auto t = exact_moment(signals, 3, Normalization::sum_over_K);
  Stream rng(11, "oracle-u");
  auto u = RealTensor::cube(5, static_cast<std::size_t>(p));
  for (auto& v : u.data()) v = rng.normal();
  const auto u_hat = tensor_to_fourier(u);
  const auto generic = flatten4(contract(networks::ring9(), {{"T", t}, {"u", u_hat}}));
  const auto naive = naive_ring(t, u_hat);
  auto ones = CorrectionTable(p);
  std::fill(ones.data().begin(), ones.data().end(), 1.0);
  const auto fast = ring_contract(VertexWeightTable::from_moment(t, 1), u_hat, ones);
  const double scale = std::max(generic.cwiseAbs().maxCoeff(), 1e-300);
  *generic_scale = generic.cwiseAbs().maxCoeff();
  return std::max((generic - naive).cwiseAbs().maxCoeff(), (fast - generic).cwiseAbs().maxCoeff()) / scale;
}

struct McCheck {
  double mean = 0.0, se = 0.0, exact = 0.0;
  bool agree() const { return std::abs(mean - exact) <= 3 * se || (se == 0.0 && mean == exact); }
};

// E[s] by Monte Carlo. With tilt m > 0 each w_j = |θ̂_j|² comes from an equal mixture of
// Gamma(1+k, 1/p), k = 0..m, reweighted to the exponential law of a Gaussian signal.
std::vector<McCheck> expected_s_mc(int p, const std::vector<std::size_t>& entries, std::uint64_t draws, int tilt) {
  const auto exact = expected_s_table(p);
  const int h = p / 2;
  const Frequencies f(p);
  std::vector<double> sum(entries.size(), 0.0), sq(entries.size(), 0.0);
  for (std::uint64_t n = 0; n < draws; ++n) {
    Stream rng(12, "oracle-s", n);
    std::vector<double> w(static_cast<std::size_t>(p));
    double weight = 1.0;
    for (int j = 1; j <= h; ++j) {
      const int k = tilt > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(tilt) + 1)) : 0;
      const double x = std::gamma_distribution<double>(1.0 + k, 1.0 / p)(rng);
      if (tilt > 0) {
        double mix = 0.0, term = 1.0;
        for (int l = 0; l <= tilt; ++l) {
          mix += term;
          term *= p * x / (l + 1);
        }
        weight *= (tilt + 1) / mix;
      }
      w[f.position(j)] = w[f.position(-j)] = x;
    }
    const auto s = sampled_s_table(w);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double v = weight * s[entries[e]];
      sum[e] += v;
      sq[e] += v * v;
    }
  }
  std::vector<McCheck> out;
  const double n = static_cast<double>(draws);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const double mean = sum[e] / n;
    const double var = std::max(0.0, sq[e] / n - mean * mean);
    out.push_back({mean, std::sqrt(var / n), exact[entries[e]]});
  }
  return out;
}

// 11. Oracle equality suite; p = 4 is all zeros for the ring and E[s], so p = 6 is added.
Verdict oracle_suite(const Context&) {
  const double net = network_oracles();
  double scale4 = 0.0, scale6 = 0.0;
  const double ring4 = ring_oracles(4, &scale4);
  const double ring6 = ring_oracles(6, &scale6);

  const auto e4 = expected_s_mc(4, {0, 17, 200}, 20000, 0);
  const bool s4 = std::all_of(e4.begin(), e4.end(), [](const McCheck& c) { return c.agree(); });
  const auto table6 = expected_s_table(6);
  const auto top = static_cast<std::size_t>(std::max_element(table6.begin(), table6.end()) - table6.begin());
  std::vector<std::size_t> entries{top};
  for (std::size_t f = 1; f < table6.size() && entries.size() < 3; f += 397)
    if (table6[f] > 0) entries.push_back(f);
  const auto e6 = expected_s_mc(6, entries, 20000, 20);
  const bool s6 = std::all_of(e6.begin(), e6.end(), [](const McCheck& c) { return c.agree(); });
  double worst_z = 0.0;
  for (const auto& c : e6) worst_z = std::max(worst_z, std::abs(c.mean - c.exact) / c.se);

  const bool pass = net <= 1e-10 && ring4 <= 1e-10 && ring6 <= 1e-10 && s4 && s6 && scale6 > 0.0;
  return {pass, (Line() << "network vs loops " << net << " (<= 1e-10); ring vs generic vs naive p=4 " << ring4
                        << " (all zero: " << (scale4 == 0.0 ? "yes" : "no") << "), p=6 " << ring6
                        << " relative; E[s] vs MC p=4 " << (s4 ? "agree" : "DISAGREE") << " (exact 0), p=6 "
                        << (s6 ? "agree" : "DISAGREE") << " (max |z| " << worst_z << ")")
                    .str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Context ctx;
  std::vector<int> only;
  bool warm = false;
  app.add_option("--criterion", only, "Run only these criteria (1-11)");
  app.add_option("--cache-dir", ctx.cache_dir, "Correction-table cache");
  app.add_option("--threads", ctx.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--warm-cache", warm, "Compute the correction tables the suite needs and exit");
  CLI11_PARSE(app, argc, argv);

  if (warm) {
    for (int p : {2, 6, 8, 12, 16}) table(ctx, p);
    std::cout << "correction tables ready in " << (ctx.cache_dir.empty() ? "(no cache)" : ctx.cache_dir) << '\n';
    return 0;
  }

  const std::vector<Criterion> criteria{
      {1, "planted fidelity", planted_fidelity},
      {2, "correction concentration", correction_concentration},
      {3, "noise-term spectral bound", noise_term},
      {4, "end-to-end list recovery", list_recovery_end_to_end},
      {5, "heterogeneous diagnostic", heterogeneous_gap},
      {6, "frequency marching", marching},
      {7, "HSSS equivalence", hsss_equivalence},
      {8, "tensor PCA", tensor_pca},
      {9, "trace verifier", trace_verifier},
      {10, "moment convergence", moment_convergence},
      {11, "oracle suite", oracle_suite},
  };
  const std::set<int> selected(only.begin(), only.end());
  bool all = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << v.detail
              << "  [" << std::fixed << std::setprecision(1) << seconds_since(t0) << " s]" << std::defaultfloat
              << std::endl;
  }
  return all ? 0 : 1;
}
