#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mra/correction.hpp"
#include "mra/network.hpp"
#include "mra/tensor.hpp"

namespace mra {

/// Role of an edge inside its layer.
enum class EdgeRole { a, b, c, d, j1, j2, j3, j4, j5, ring_i, ring_itilde };

/// One end of an edge: the vertex sees `sign · label` on `port`.
struct EdgeEnd {
  int vertex = 0;
  int port = 0;
};

struct ExpandedEdge {
  EdgeEnd tail;  ///< sees +label
  EdgeEnd head;  ///< sees -label
  int layer = 0;
  EdgeRole role = EdgeRole::ring_i;
  int index = 0;  ///< ring position for cycle edges, 0 otherwise
  bool ab_class() const { return role == EdgeRole::a || role == EdgeRole::b; }
};

/// 2q copies of the nine-vertex ring, joined in a cycle. Copies 2ℓ and 2ℓ+1 form
/// layer ℓ and share their c, d, j legs; copy 2ℓ+1 meets copy 2ℓ+2 through the
/// a, b legs labeled a^(ℓ+1), b^(ℓ+1). Vertex m of every copy has ports
/// (0: incoming cycle edge, 1: external leg, 2: outgoing cycle edge).
struct ExpandedNetwork {
  int q = 0;
  std::vector<ExpandedEdge> edges;
  /// vertex -> port -> (edge, sign).
  std::vector<std::array<std::pair<int, int>, 3>> ports;

  int vertex_count() const { return static_cast<int>(ports.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  /// Edge id of a, b, c or d in layer ℓ.
  int layer_edge(int layer, EdgeRole role) const;
  /// Throws VerificationFailure when any structural invariant is broken.
  void validate() const;
};

ExpandedNetwork build_expanded(int q);

/// Same wiring as a generic network: every vertex in slot "T", all edges dotted, no legs.
NetworkGraph to_network_graph(const ExpandedNetwork& net);

enum class VariableOrder { natural, reversed, shuffled };

struct EnumerationOptions {
  VariableOrder order = VariableOrder::natural;
  std::uint64_t seed = 1;            ///< for the shuffled order
  std::uint64_t budget = 200000000;  ///< maximum number of labelings visited
  int threads = 1;
};

/// Σ_{i>0} max(0, #edges labeled ±i − 1).
int repeated_labels(std::span<const int> labels, int p);

/// Calls `fn` once per edge labeling satisfying the per-vertex zero sums and
/// a ≠ -b, c ≠ -d in every layer. Labels are the tail-end values. Single-threaded.
/// Returns the number of labelings; throws BudgetExceeded past the budget.
std::uint64_t for_each_edge_labeling(const ExpandedNetwork& net, int p, const EnumerationOptions& options,
                                     const std::function<void(std::span<const int>)>& fn);

struct CountBound {
  std::uint64_t count = 0;
  double bound = 0.0;  ///< 3·[2(27q)²]^c · p^{1+9q−c/25}
};

struct LabelingCensus {
  int p = 0;
  int q = 0;
  std::uint64_t total = 0;
  std::map<int, CountBound> by_repeats;  ///< keyed by c
  double free_label_bound = 0.0;         ///< (2p+1)·p^{9q}
  bool within_bounds() const;
};

/// Exhaustive census of valid edge labelings; parallel over the first two free labels.
LabelingCensus census(const ExpandedNetwork& net, int p, const EnumerationOptions& options = {});

double count_bound(int p, int q, int c);

struct RegionOptions {
  bool exhaustive = true;          ///< every edge labeling; otherwise random ones
  std::uint64_t samples = 1000;    ///< edge labelings drawn in sampled mode
  std::uint64_t seed = 1;
  std::uint64_t budget = 2000000000;  ///< full labelings (edge × vertex) examined
  bool throw_on_violation = true;
  int threads = 1;
};

struct RegionReport {
  int p = 0;
  int q = 0;
  int K = 0;
  bool exhaustive = true;
  std::uint64_t edge_labelings = 0;
  std::uint64_t vertex_labelings = 0;  ///< checked, counted before orbit reduction
  std::uint64_t valid_multi_region = 0;
  std::map<int, std::uint64_t> valid_by_regions;
  std::vector<std::string> violations;
};

/// For every valid labeling with more than one region, checks c ≥ r/2.
/// Vertex labelings are enumerated up to relabeling of the K values.
RegionReport verify_region_lemma(const ExpandedNetwork& net, int p, int K, const RegionOptions& options = {});

/// One valid edge labeling found by randomized depth-first search, or empty if none exists.
std::vector<int> random_edge_labeling(const ExpandedNetwork& net, int p, std::uint64_t seed, std::uint64_t index);

/// Rule (iii): for each region and each i, incident i and −i labels balance.
bool regions_balanced(const ExpandedNetwork& net, std::span<const int> labels, std::span<const int> vertex_labels,
                      int p);

/// ‖Ŵ‖_F² for the ring tensor Ŵ_{ab,cd j1..j5} = S_abcd Σ_i Π T̂, by a pair transfer matrix.
double w_frobenius_squared(const ComplexTensor& t3_hat, const CorrectionTable& S);
/// The same quantity by summing every entry of Ŵ.
double w_frobenius_squared_direct(const ComplexTensor& t3_hat, const CorrectionTable& S);
/// The real p² × p⁷ matrix W̃, built entrywise and mapped through Δ. Small p only.
Eigen::MatrixXd build_w_tilde(const ComplexTensor& t3_hat, const CorrectionTable& S);

/// Σ over valid labelings of S_𝓛 · E Π_v 𝓛(v) for Gaussian signals with E|θ̂_j|² = 1/p.
double labeling_expectation(const ExpandedNetwork& net, int p, int K, const CorrectionTable& S,
                            const EnumerationOptions& options = {});

/// Σ over valid labelings of S_𝓛 · Π_v T̂(incident labels) for a concrete moment
/// tensor. At q = 1 this equals ‖Ŵ‖_F² exactly.
double labeling_sum(const ExpandedNetwork& net, const ComplexTensor& t3_hat, const CorrectionTable& S,
                    const EnumerationOptions& options = {});

struct CrosscheckResult {
  double lhs = 0.0;     ///< Monte Carlo mean of ‖W̃‖_F²
  double stderr_ = 0.0;
  double rhs = 0.0;     ///< labeling sum
  std::uint64_t draws = 0;
  bool agree(double n_se = 3.0) const;
};

struct CrosscheckOptions {
  std::uint64_t draws = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// 0 draws θ as N(0, I/p). A positive m draws each |θ̂_j|² from an equal mixture of
  /// Gamma(1+k, 1/p), k = 0..m, with a uniform phase, and reweights by the density
  /// ratio. The estimator stays unbiased, weights are bounded by m+1, and the heavy
  /// tail of high-degree moments is sampled directly.
  int tilt = 0;
  EnumerationOptions enumeration;
};

/// q = 1 trace identity: E‖W̃‖_F² against the labeling sum.
CrosscheckResult trace_crosscheck(int p, int K, const CorrectionTable& S, const CrosscheckOptions& options = {});

void write_verify_json(const std::string& path, const LabelingCensus& census, const RegionReport& region,
                       const CrosscheckResult* crosscheck);

}  // namespace mra
