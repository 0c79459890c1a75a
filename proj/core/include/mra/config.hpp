#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mra {

/// Experiment parameters. The text form is one `key = value` per line with
/// exactly these keys; `#` starts a comment.
struct ExperimentConfig {
  int p = 8;
  int K = 1;
  double sigma = 0.0;
  std::uint64_t n = 10000;       ///< observation count (ignored with exact_moments)
  bool exact_moments = true;
  int L = 1;                     ///< trial count
  double epsilon = 0.1;          ///< target accuracy; recorded, never used to derive L
  std::uint64_t seed = 1;
  std::uint64_t mem_cap = 1ull << 30;  ///< bytes
  int threads = 1;

  /// Throws InvalidInput when p is odd or non-positive, K < 1, L < 1, sigma < 0,
  /// or threads < 1.
  void validate() const;
};

/// Unknown keys, repeated keys and malformed values throw InvalidInput.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
std::string to_text(const ExperimentConfig& config);

}  // namespace mra
