#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mra/tensor.hpp"

namespace mra {

/// plain: index i meets index i. dotted: index i meets index -i (the pairing
/// produced when two Δ factors meet; only meaningful on frequency-indexed modes).
enum class EdgeKind { plain, dotted };

struct Port {
  std::size_t node = 0;
  std::size_t port = 0;
  friend bool operator==(const Port&, const Port&) = default;
};

struct NetworkNode {
  std::string name;
  std::string slot;  ///< key into the tensor map passed to contract()
  std::size_t arity = 0;
};

struct NetworkEdge {
  Port a;
  Port b;
  EdgeKind kind = EdgeKind::plain;
};

struct ExternalLeg {
  std::string name;
  Port port;
};

class NetworkGraph {
 public:
  std::size_t add_node(std::string name, std::string slot, std::size_t arity);
  void connect(Port a, Port b, EdgeKind kind = EdgeKind::plain);
  void add_leg(std::string name, Port port);

  const std::vector<NetworkNode>& nodes() const noexcept { return nodes_; }
  const std::vector<NetworkEdge>& edges() const noexcept { return edges_; }
  const std::vector<ExternalLeg>& legs() const noexcept { return legs_; }

  std::size_t node_index(std::string_view name) const;

  /// Throws InvalidInput unless every port of every node is used exactly once.
  void validate() const;

 private:
  std::vector<NetworkNode> nodes_;
  std::vector<NetworkEdge> edges_;
  std::vector<ExternalLeg> legs_;
};

/// Line-oriented text format:
///
///     # comment
///     node <name> <slot> <arity>
///     edge <node>.<port> <node>.<port> [plain|dotted]
///     leg  <name> <node>.<port>
///
/// Legs are emitted by contract() in declaration order.
NetworkGraph parse_network(std::string_view text);
std::string to_text(const NetworkGraph& net);

struct ContractionStep {
  std::size_t left = 0;   ///< smallest node id in the left operand
  std::size_t right = 0;  ///< smallest node id in the right operand
  std::size_t result_size = 0;
};

/// Full multilinear contraction of `net`. Pairwise elimination picks, at every
/// step, the connected pair whose result has the fewest entries (ties go to
/// the lowest node ids). Each pairwise step iterates only the nonzero entries
/// of its sparser operand, so zero-sum-supported inputs cost their support.
ComplexTensor contract(const NetworkGraph& net, const std::map<std::string, ComplexTensor>& tensors,
                       std::vector<ContractionStep>* plan = nullptr);

/// Built-in networks used by the algorithms and their oracles.
namespace networks {

/// B_abcd = Σ_i T_abi T_cdi.
NetworkGraph pair_contraction();
/// C_abcd = Σ_{ijk} T_acj T_bdk T_ijk u_i; slots "T" and "u".
NetworkGraph hsss();
/// Nine-vertex ring in the Fourier domain: vertex m carries T̂_{-i_m, x_m, i_{m+1}}
/// with x = (a, j1, c, j2, b, j3, d, j4, j5); all edges dotted; û joined to the
/// five j legs; external legs a, b, c, d. Slots "T" and "u".
NetworkGraph ring9();
/// (T̃T̃ᵀ)_ab = Σ_{jk} T_ajk T_bjk.
NetworkGraph unfolding_gram();
/// C_abcd = Σ_i T_iac T_ibd, whose ({a,b},{c,d}) flattening is Σ_i T_i ⊗ T_i.
NetworkGraph slice_kron_sum();
/// P_ac = Σ_i (Σ_l T_ill) T_iac.
NetworkGraph partial_trace();
/// z_j = Σ_i T_iij.
NetworkGraph homotopy_init();

}  // namespace networks

}  // namespace mra
