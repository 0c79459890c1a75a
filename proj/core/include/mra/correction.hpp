#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mra/frequency.hpp"

namespace mra {

/// S_abcd over (±[p/2])⁴, stored densely in canonical position order
/// (flat index ((a·p + b)·p + c)·p + d over positions).
class CorrectionTable {
 public:
  CorrectionTable() = default;
  explicit CorrectionTable(int p);

  /// S ≡ 1 except on the a = -b and c = -d slices, which stay zero.
  static CorrectionTable unit(int p);

  int p() const noexcept { return p_; }
  double operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[flat(a, b, c, d)];
  }
  double& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[flat(a, b, c, d)];
  }
  std::size_t flat(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const noexcept {
    const auto p = static_cast<std::size_t>(p_);
    return ((a * p + b) * p + c) * p + d;
  }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  /// Throws InvalidInput on negative entries, nonzero a=-b / c=-d slices, or
  /// broken negation symmetry beyond `tol` (relative).
  void validate(double tol = 1e-12) const;

 private:
  int p_ = 0;
  std::vector<double> data_;
};

/// E[s_abcd]·p¹⁴ as an exact integer; a..d are frequencies, θ ~ N(0, I/p).
std::uint64_t expected_s_scaled(int a, int b, int c, int d, int p);
/// E[s_abcd].
double expected_s(int a, int b, int c, int d, int p);

/// E[s] for every entry (zero on the a=-b / c=-d slices is NOT applied here).
std::vector<double> expected_s_table(int p, int threads = 1);

/// s_abcd for one draw, given w_m = |θ̂_m|² indexed by position.
std::vector<double> sampled_s_table(const std::vector<double>& w, int threads = 1);

enum class CorrectionMode { exact, monte_carlo };

struct CorrectionOptions {
  CorrectionMode mode = CorrectionMode::exact;
  std::uint64_t samples = 100000;  ///< Monte Carlo draws
  std::uint64_t seed = 0;
  int threads = 1;
};

/// S_abcd = 0 if a = -b or c = -d, 1/E[s_abcd] otherwise.
CorrectionTable correction_table(int p, const CorrectionOptions& options = {});

/// Max over entries with both tables nonzero of |x - y| / |y|.
double max_relative_disagreement(const CorrectionTable& x, const CorrectionTable& y);

/// Binary cache: "MRACORR\0", u32 version, u32 p, u32 mode, u64 samples,
/// u64 seed, then p⁴ little-endian f64 in canonical order.
void save_correction_table(const CorrectionTable& table, const std::string& path,
                           const CorrectionOptions& options);
/// Returns false (leaving `table` untouched) when the file is missing or was
/// written for a different (p, mode, samples, seed).
bool load_correction_table(const std::string& path, int p, const CorrectionOptions& options,
                           CorrectionTable& table);

/// Loads from `cache_dir` when present, otherwise computes and stores.
/// An empty cache_dir disables caching.
CorrectionTable cached_correction_table(int p, const CorrectionOptions& options,
                                        const std::string& cache_dir);

}  // namespace mra
