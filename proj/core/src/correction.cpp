#include "mra/correction.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mra/errors.hpp"
#include "mra/io.hpp"
#include "mra/moments.hpp"
#include "mra/parallel.hpp"
#include "mra/ring.hpp"

namespace mra {

CorrectionTable::CorrectionTable(int p) : p_(p) {
  Frequencies{p};
  const auto n = static_cast<std::size_t>(p);
  data_.assign(n * n * n * n, 0.0);
}

CorrectionTable CorrectionTable::unit(int p) {
  CorrectionTable t(p);
  const auto n = static_cast<std::size_t>(p);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
          if (b != n - 1 - a && d != n - 1 - c) t(a, b, c, d) = 1.0;
  return t;
}

void CorrectionTable::validate(double tol) const {
  const auto n = static_cast<std::size_t>(p_);
  if (data_.size() != n * n * n * n) throw InvalidInput("CorrectionTable: wrong size");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
          const double v = (*this)(a, b, c, d);
          if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("CorrectionTable: negative or non-finite entry");
          if ((b == n - 1 - a || d == n - 1 - c) && v != 0.0) {
            throw InvalidInput("CorrectionTable: nonzero entry on an a=-b or c=-d slice");
          }
          const double m = (*this)(n - 1 - a, n - 1 - b, n - 1 - c, n - 1 - d);
          if (std::abs(v - m) > tol * std::max(v, m)) {
            throw InvalidInput("CorrectionTable: negation symmetry broken");
          }
        }
}

namespace {

// Depth-first walk over (i₁, j₁..j₄) with the chain-derived indices. Each
// accepted index of absolute value m multiplies the running ∏ k_m! by
// (k_m + 1), so leaves carry E[∏|θ̂|²]·p¹⁴ as an integer.
class ScaledExpectation {
 public:
  ScaledExpectation(int a, int b, int c, int d, int p)
      : p_(p), h_(p / 2), a_(a), b_(b), c_(c), d_(d), k_(static_cast<std::size_t>(p / 2 + 1), 0) {}

  std::uint64_t run() {
    total_ = 0;
    for (int i1 = -h_; i1 <= h_; ++i1) {
      if (i1 == 0) continue;
      push(i1);
      const int i2 = i1 - a_;
      if (valid(i2)) {
        push(i2);
        walk_j1(i1, i2);
        pop(i2);
      }
      pop(i1);
    }
    return total_;
  }

 private:
  bool valid(int f) const { return f != 0 && f >= -h_ && f <= h_; }
  void push(int f) { prod_ *= ++k_[static_cast<std::size_t>(std::abs(f))]; }
  void pop(int f) { prod_ /= k_[static_cast<std::size_t>(std::abs(f))]--; }

  // Try x, derive i_next = i - x, then i_after = i_next - fixed; recurse.
  template <typename Next>
  void step(int i, int fixed, Next&& next) {
    for (int x = -h_; x <= h_; ++x) {
      if (x == 0) continue;
      const int i_next = i - x;
      if (!valid(i_next)) continue;
      const int i_after = i_next - fixed;
      if (!valid(i_after)) continue;
      push(x);
      push(i_next);
      push(i_after);
      next(i_after);
      pop(i_after);
      pop(i_next);
      pop(x);
    }
  }

  void walk_j1(int i1, int i2) {
    step(i2, c_, [&](int i4) {
      step(i4, b_, [&](int i6) {
        step(i6, d_, [&](int i8) {
          for (int j4 = -h_; j4 <= h_; ++j4) {
            if (j4 == 0) continue;
            const int i9 = i8 - j4;
            if (!valid(i9)) continue;
            const int j5 = i9 - i1;
            if (!valid(j5)) continue;
            push(j4);
            push(i9);
            push(j5);
            total_ += prod_;
            pop(j5);
            pop(i9);
            pop(j4);
          }
        });
      });
    });
  }

  int p_, h_, a_, b_, c_, d_;
  std::vector<std::uint64_t> k_;
  std::uint64_t prod_ = 1;
  std::uint64_t total_ = 0;
};

}  // namespace

std::uint64_t expected_s_scaled(int a, int b, int c, int d, int p) {
  const Frequencies f(p);
  for (int x : {a, b, c, d}) {
    if (!f.contains(x)) throw InvalidInput("expected_s: index " + std::to_string(x) + " outside ±[p/2]");
  }
  return ScaledExpectation(a, b, c, d, p).run();
}

double expected_s(int a, int b, int c, int d, int p) {
  return static_cast<double>(expected_s_scaled(a, b, c, d, p)) * std::pow(static_cast<double>(p), -14.0);
}

std::vector<double> expected_s_table(int p, int threads) {
  const Frequencies f(p);
  const auto n = static_cast<std::size_t>(p);
  const std::size_t total = n * n * n * n;
  std::vector<double> out(total, 0.0);
  const double scale = std::pow(static_cast<double>(p), -14.0);
  // Entries e and its negation (total - 1 - e) coincide; compute the lower half.
  parallel_for(total / 2, threads, [&](std::size_t e) {
    const int a = f.value(e / (n * n * n)), b = f.value(e / (n * n) % n);
    const int c = f.value(e / n % n), d = f.value(e % n);
    const double v = static_cast<double>(ScaledExpectation(a, b, c, d, p).run()) * scale;
    out[e] = v;
    out[total - 1 - e] = v;
  });
  return out;
}

std::vector<double> sampled_s_table(const std::vector<double>& w, int threads) {
  const int p = static_cast<int>(w.size());
  const Frequencies f(p);
  const auto n = static_cast<std::size_t>(p);
  std::vector<double> weights(n * n, 0.0);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t i = 0; i < n; ++i)
      if (f.contains(f.value(i) - f.value(x))) weights[x * n + i] = w[i];
  std::vector<double> u(n * n * n * n * n);
  for (std::size_t e = 0; e < u.size(); ++e) {
    double prod = 1.0;
    for (std::size_t r = e, k = 0; k < 5; ++k, r /= n) prod *= w[r % n];
    u[e] = prod;
  }
  return ring_sums<double>(p, weights, u, nullptr, {RingMethod::factorized, threads});
}

namespace {

CorrectionTable invert(int p, const std::vector<double>& expectation) {
  CorrectionTable t(p);
  const auto n = static_cast<std::size_t>(p);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
          if (b == n - 1 - a || d == n - 1 - c) continue;
          const double e = expectation[t.flat(a, b, c, d)];
          // No admissible chain at all (only p = 2): the entry stays zero.
          if (e > 0.0) t(a, b, c, d) = 1.0 / e;
        }
  return t;
}

}  // namespace

CorrectionTable correction_table(int p, const CorrectionOptions& options) {
  Frequencies{p};
  if (options.mode == CorrectionMode::exact) return invert(p, expected_s_table(p, options.threads));
  if (options.samples == 0) throw InvalidInput("correction_table: Monte Carlo mode needs samples > 0");
  const auto n = static_cast<std::size_t>(p);
  std::vector<double> mean(n * n * n * n, 0.0);
  for (std::uint64_t draw = 0; draw < options.samples; ++draw) {
    const auto theta_hat = to_fourier(random_signal(p, options.seed, draw)).coeffs();
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = std::norm(theta_hat(static_cast<Eigen::Index>(k)));
    const auto s = sampled_s_table(w, options.threads);
    for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += s[e];
  }
  for (auto& v : mean) v /= static_cast<double>(options.samples);
  // Average the two halves of each negation pair so the invariant holds exactly.
  for (std::size_t e = 0; e < mean.size() / 2; ++e) {
    const double m = 0.5 * (mean[e] + mean[mean.size() - 1 - e]);
    mean[e] = m;
    mean[mean.size() - 1 - e] = m;
  }
  return invert(p, mean);
}

double max_relative_disagreement(const CorrectionTable& x, const CorrectionTable& y) {
  if (x.p() != y.p()) throw InvalidInput("max_relative_disagreement: tables differ in p");
  double worst = 0.0;
  for (std::size_t e = 0; e < x.data().size(); ++e) {
    if (x.data()[e] != 0.0 && y.data()[e] != 0.0) {
      worst = std::max(worst, std::abs(x.data()[e] - y.data()[e]) / std::abs(y.data()[e]));
    }
  }
  return worst;
}

namespace {
constexpr char kCorrMagic[8] = {'M', 'R', 'A', 'C', 'O', 'R', 'R', '\0'};
}

void save_correction_table(const CorrectionTable& table, const std::string& path,
                           const CorrectionOptions& options) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out.write(kCorrMagic, sizeof(kCorrMagic));
  binary::put_u32(out, 1);
  binary::put_u32(out, static_cast<std::uint32_t>(table.p()));
  binary::put_u32(out, static_cast<std::uint32_t>(options.mode));
  const bool mc = options.mode == CorrectionMode::monte_carlo;
  binary::put_u64(out, mc ? options.samples : 0);
  binary::put_u64(out, mc ? options.seed : 0);
  for (double v : table.data()) binary::put_f64(out, v);
}

bool load_correction_table(const std::string& path, int p, const CorrectionOptions& options,
                           CorrectionTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::string_view(magic, 8) != std::string_view(kCorrMagic, 8)) {
    throw InvalidInput("'" + path + "' is not a correction-table cache");
  }
  const bool mc = options.mode == CorrectionMode::monte_carlo;
  if (binary::get_u32(in) != 1) return false;
  if (binary::get_u32(in) != static_cast<std::uint32_t>(p)) return false;
  if (binary::get_u32(in) != static_cast<std::uint32_t>(options.mode)) return false;
  if (binary::get_u64(in) != (mc ? options.samples : 0)) return false;
  if (binary::get_u64(in) != (mc ? options.seed : 0)) return false;
  CorrectionTable loaded(p);
  for (auto& v : loaded.data()) v = binary::get_f64(in);
  loaded.validate();
  table = std::move(loaded);
  return true;
}

CorrectionTable cached_correction_table(int p, const CorrectionOptions& options, const std::string& cache_dir) {
  if (cache_dir.empty()) return correction_table(p, options);
  std::filesystem::create_directories(cache_dir);
  const bool mc = options.mode == CorrectionMode::monte_carlo;
  std::string name = "correction_p" + std::to_string(p) + (mc ? "_mc" + std::to_string(options.samples) +
                                                                    "_s" + std::to_string(options.seed)
                                                              : "_exact") + ".bin";
  const auto path = (std::filesystem::path(cache_dir) / name).string();
  CorrectionTable table;
  if (load_correction_table(path, p, options, table)) return table;
  table = correction_table(p, options);
  save_correction_table(table, path, options);
  return table;
}

}  // namespace mra
