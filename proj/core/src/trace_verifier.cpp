#include "mra/trace_verifier.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mra/errors.hpp"
#include "mra/moments.hpp"
#include "mra/parallel.hpp"
#include "mra/ring.hpp"
#include "mra/rng.hpp"

namespace mra {

namespace {

constexpr int kRingSize = 9;
// External leg at ring position m: a, j1, c, j2, b, j3, d, j4, j5.
constexpr EdgeRole kLegRole[kRingSize] = {EdgeRole::a, EdgeRole::j1, EdgeRole::c,  EdgeRole::j2, EdgeRole::b,
                                          EdgeRole::j3, EdgeRole::d, EdgeRole::j4, EdgeRole::j5};
constexpr int kEdgesPerLayer = 27;

const char* role_name(EdgeRole r) {
  switch (r) {
    case EdgeRole::a: return "a";
    case EdgeRole::b: return "b";
    case EdgeRole::c: return "c";
    case EdgeRole::d: return "d";
    case EdgeRole::j1: return "j1";
    case EdgeRole::j2: return "j2";
    case EdgeRole::j3: return "j3";
    case EdgeRole::j4: return "j4";
    case EdgeRole::j5: return "j5";
    case EdgeRole::ring_i: return "i";
    case EdgeRole::ring_itilde: return "itilde";
  }
  return "?";
}

}  // namespace

int ExpandedNetwork::layer_edge(int layer, EdgeRole role) const {
  // Per-layer order: a, b, c, d, j1..j5, nine i, nine ĩ.
  const int offset = role == EdgeRole::a   ? 0
                     : role == EdgeRole::b ? 1
                     : role == EdgeRole::c ? 2
                     : role == EdgeRole::d ? 3
                                           : -1;
  if (offset < 0 || layer < 0 || layer >= q) throw InvalidInput("layer_edge: only a, b, c, d in a valid layer");
  return layer * kEdgesPerLayer + offset;
}

ExpandedNetwork build_expanded(int q) {
  if (q < 1) throw InvalidInput("build_expanded: q must be at least 1");
  ExpandedNetwork net;
  net.q = q;
  const int copies = 2 * q;
  net.ports.assign(static_cast<std::size_t>(copies * kRingSize), {std::pair{-1, 0}, std::pair{-1, 0}, std::pair{-1, 0}});
  auto vertex = [](int copy, int m) { return copy * kRingSize + m; };
  auto add = [&](EdgeEnd tail, EdgeEnd head, int layer, EdgeRole role, int index) {
    const int id = static_cast<int>(net.edges.size());
    net.edges.push_back({tail, head, layer, role, index});
    net.ports[static_cast<std::size_t>(tail.vertex)][static_cast<std::size_t>(tail.port)] = {id, +1};
    net.ports[static_cast<std::size_t>(head.vertex)][static_cast<std::size_t>(head.port)] = {id, -1};
  };
  for (int layer = 0; layer < q; ++layer) {
    const int A = 2 * layer, B = 2 * layer + 1;
    const int prev = (2 * layer - 1 + copies) % copies;
    add({vertex(A, 0), 1}, {vertex(prev, 0), 1}, layer, EdgeRole::a, 0);
    add({vertex(A, 4), 1}, {vertex(prev, 4), 1}, layer, EdgeRole::b, 0);
    add({vertex(A, 2), 1}, {vertex(B, 2), 1}, layer, EdgeRole::c, 0);
    add({vertex(A, 6), 1}, {vertex(B, 6), 1}, layer, EdgeRole::d, 0);
    for (int m : {1, 3, 5, 7, 8}) add({vertex(A, m), 1}, {vertex(B, m), 1}, layer, kLegRole[m], 0);
    for (int copy : {A, B}) {
      const auto role = copy == A ? EdgeRole::ring_i : EdgeRole::ring_itilde;
      // Edge from vertex m to m+1 carries i_{m+2} in 1-based ring numbering.
      for (int m = 0; m < kRingSize; ++m) {
        add({vertex(copy, m), 2}, {vertex(copy, (m + 1) % kRingSize), 0}, layer, role, (m + 1) % kRingSize + 1);
      }
    }
  }
  net.validate();
  return net;
}

void ExpandedNetwork::validate() const {
  if (vertex_count() != 18 * q || edge_count() != 27 * q) {
    throw VerificationFailure("expanded network has " + std::to_string(vertex_count()) + " vertices and " +
                              std::to_string(edge_count()) + " edges for q = " + std::to_string(q));
  }
  int ab = 0;
  for (const auto& e : edges) ab += e.ab_class() ? 1 : 0;
  if (ab != 2 * q) throw VerificationFailure("expanded network: wrong {ab} class size");
  for (int v = 0; v < vertex_count(); ++v) {
    for (int port = 0; port < 3; ++port) {
      const auto [e, sign] = ports[static_cast<std::size_t>(v)][static_cast<std::size_t>(port)];
      if (e < 0) throw VerificationFailure("expanded network: vertex " + std::to_string(v) + " has a free port");
      const auto& end = sign > 0 ? edges[static_cast<std::size_t>(e)].tail : edges[static_cast<std::size_t>(e)].head;
      if (end.vertex != v || end.port != port) throw VerificationFailure("expanded network: port table mismatch");
    }
  }
}

NetworkGraph to_network_graph(const ExpandedNetwork& net) {
  NetworkGraph g;
  for (int v = 0; v < net.vertex_count(); ++v) g.add_node("v" + std::to_string(v), "T", 3);
  for (const auto& e : net.edges) {
    g.connect({static_cast<std::size_t>(e.tail.vertex), static_cast<std::size_t>(e.tail.port)},
              {static_cast<std::size_t>(e.head.vertex), static_cast<std::size_t>(e.head.port)}, EdgeKind::dotted);
  }
  g.validate();
  return g;
}

int repeated_labels(std::span<const int> labels, int p) {
  std::vector<int> count(static_cast<std::size_t>(p / 2) + 1, 0);
  for (int l : labels) ++count[static_cast<std::size_t>(std::abs(l))];
  int c = 0;
  for (std::size_t i = 1; i < count.size(); ++i) c += std::max(0, count[i] - 1);
  return c;
}

namespace {

// Depth-first search over edge labels with zero-sum propagation.
class Search {
 public:
  Search(const ExpandedNetwork& net, int p, std::vector<int> order)
      : net_(net), p_(p), half_(p / 2), order_(std::move(order)), label_(net.edges.size(), 0) {
    if (p < 2 || p % 2 != 0) throw InvalidInput("edge labelings need an even p >= 2");
    for (int v = -half_; v <= half_; ++v)
      if (v != 0) values_.push_back(v);
  }

  const std::vector<int>& values() const { return values_; }
  const std::vector<int>& labels() const { return label_; }
  std::size_t mark() const { return trail_.size(); }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      label_[static_cast<std::size_t>(trail_.back())] = 0;
      trail_.pop_back();
    }
  }

  bool assign(int e, int value) {
    auto& slot = label_[static_cast<std::size_t>(e)];
    if (slot != 0) return slot == value;
    if (value == 0 || std::abs(value) > half_) return false;
    slot = value;
    trail_.push_back(e);
    const auto& edge = net_.edges[static_cast<std::size_t>(e)];
    if (edge.role == EdgeRole::a || edge.role == EdgeRole::b) {
      if (!distinct_pair(edge.layer, EdgeRole::a, EdgeRole::b)) return false;
    } else if (edge.role == EdgeRole::c || edge.role == EdgeRole::d) {
      if (!distinct_pair(edge.layer, EdgeRole::c, EdgeRole::d)) return false;
    }
    return settle(edge.tail.vertex) && settle(edge.head.vertex);
  }

  /// Visits every completion of the current partial labeling.
  template <typename Leaf>
  void run(std::size_t from, Leaf& leaf) {
    while (from < order_.size() && label_[static_cast<std::size_t>(order_[from])] != 0) ++from;
    if (from == order_.size()) {
      leaf(label_);
      return;
    }
    const int e = order_[from];
    for (int v : values_) {
      const auto m = mark();
      if (assign(e, v)) run(from + 1, leaf);
      undo(m);
    }
  }

  /// First completion with values tried in a random order; false if none.
  bool run_random(std::size_t from, Stream& rng) {
    while (from < order_.size() && label_[static_cast<std::size_t>(order_[from])] != 0) ++from;
    if (from == order_.size()) return true;
    const int e = order_[from];
    auto vals = values_;
    std::shuffle(vals.begin(), vals.end(), rng);
    for (int v : vals) {
      const auto m = mark();
      if (assign(e, v) && run_random(from + 1, rng)) return true;
      undo(m);
    }
    return false;
  }

 private:
  bool distinct_pair(int layer, EdgeRole x, EdgeRole y) const {
    const int lx = label_[static_cast<std::size_t>(net_.layer_edge(layer, x))];
    const int ly = label_[static_cast<std::size_t>(net_.layer_edge(layer, y))];
    return lx == 0 || ly == 0 || lx + ly != 0;
  }

  bool settle(int v) {
    const auto& ports = net_.ports[static_cast<std::size_t>(v)];
    int sum = 0, missing = -1, assigned = 0;
    for (int k = 0; k < 3; ++k) {
      const auto [e, sign] = ports[static_cast<std::size_t>(k)];
      const int l = label_[static_cast<std::size_t>(e)];
      if (l != 0) {
        sum += sign * l;
        ++assigned;
      } else {
        missing = k;
      }
    }
    if (assigned == 3) return sum == 0;
    if (assigned == 2) {
      const auto [e, sign] = ports[static_cast<std::size_t>(missing)];
      return assign(e, -sum * sign);
    }
    return true;
  }

  const ExpandedNetwork& net_;
  int p_;
  int half_;
  std::vector<int> order_;
  std::vector<int> label_;
  std::vector<int> trail_;
  std::vector<int> values_;
};

std::vector<int> variable_order(const ExpandedNetwork& net, const EnumerationOptions& options) {
  std::vector<int> order(net.edges.size());
  std::iota(order.begin(), order.end(), 0);
  if (options.order == VariableOrder::reversed) std::reverse(order.begin(), order.end());
  if (options.order == VariableOrder::shuffled) {
    Stream rng(options.seed, "variable-order");
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

void check_layer_sums(const ExpandedNetwork& net, std::span<const int> labels) {
  // Summing the vertex constraints of a ring: a+b is the same in every layer.
  const auto sum = [&](int layer) {
    return labels[static_cast<std::size_t>(net.layer_edge(layer, EdgeRole::a))] +
           labels[static_cast<std::size_t>(net.layer_edge(layer, EdgeRole::b))];
  };
  for (int l = 1; l < net.q; ++l) {
    if (sum(l) != sum(0)) throw VerificationFailure("layer sums a+b differ between layers 0 and " + std::to_string(l));
  }
}

class BudgetGuard {
 public:
  explicit BudgetGuard(std::uint64_t budget) : budget_(budget) {}
  void tick() {
    const auto n = ++count_;
    if (n > budget_) {
      throw BudgetExceeded("labeling enumeration exceeded its budget of " + std::to_string(budget_), n - 1);
    }
  }
  std::uint64_t count() const { return count_.load(); }

 private:
  std::uint64_t budget_;
  std::atomic<std::uint64_t> count_{0};
};

// Runs one visitor per (first label, second label) task and returns them in task order.
template <typename Visitor>
std::vector<Visitor> run_tasks(const ExpandedNetwork& net, int p, const EnumerationOptions& options,
                               const Visitor& proto) {
  const auto order = variable_order(net, options);
  const std::size_t nv = static_cast<std::size_t>(p);
  std::vector<Visitor> visitors(nv * nv, proto);
  BudgetGuard guard(options.budget);
  parallel_for(visitors.size(), options.threads, [&](std::size_t t) {
    Search search(net, p, order);
    const int v0 = search.values()[t / nv], v1 = search.values()[t % nv];
    if (!search.assign(order[0], v0)) return;
    if (order.size() > 1 && !search.assign(order[1], v1)) return;
    auto leaf = [&](const std::vector<int>& labels) {
      guard.tick();
      check_layer_sums(net, labels);
      visitors[t](labels);
    };
    search.run(0, leaf);
  });
  return visitors;
}

// Restricted growth strings: vertex labelings up to relabeling of [K].
template <typename Fn>
void for_each_vertex_labeling(int V, int K, Fn&& fn) {
  std::vector<int> kv(static_cast<std::size_t>(V), 0);
  auto rec = [&](auto&& self, int v, int used) -> void {
    if (v == V) {
      fn(kv, used);
      return;
    }
    const int top = std::min(K, used + 1);
    for (int k = 0; k < top; ++k) {
      kv[static_cast<std::size_t>(v)] = k;
      self(self, v + 1, std::max(used, k + 1));
    }
  };
  if (V == 0) return;
  rec(rec, 1, 1);  // vertex 0 always carries label 0
}

// Number of labelings in the orbit of a canonical one with r distinct values: K!/(K−r)!.
std::uint64_t orbit_size(int K, int r) {
  std::uint64_t out = 1;
  for (int i = 0; i < r; ++i) out *= static_cast<std::uint64_t>(K - i);
  return out;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// E Π_v 𝓛(v) for independent circular Gaussians with E|θ̂_j|² = 1/p, given region labels.
double region_moment(const ExpandedNetwork& net, std::span<const int> labels, std::span<const int> kv, int regions,
                     int p) {
  const int half = p / 2;
  std::vector<int> plus(static_cast<std::size_t>(regions * (half + 1)), 0);
  std::vector<int> minus(plus.size(), 0);
  for (int v = 0; v < net.vertex_count(); ++v) {
    const int r = kv[static_cast<std::size_t>(v)];
    for (const auto& [e, sign] : net.ports[static_cast<std::size_t>(v)]) {
      const int l = sign * labels[static_cast<std::size_t>(e)];
      auto& slot = (l > 0 ? plus : minus)[static_cast<std::size_t>(r * (half + 1) + std::abs(l))];
      ++slot;
    }
  }
  double log_value = 0.0;
  for (std::size_t k = 0; k < plus.size(); ++k) {
    if (plus[k] != minus[k]) return 0.0;
    log_value += log_factorial(plus[k]) - plus[k] * std::log(static_cast<double>(p));
  }
  return std::exp(log_value);
}

double labeling_weight(const ExpandedNetwork& net, std::span<const int> labels, const CorrectionTable& S, int p) {
  const Frequencies f(p);
  auto L = [&](int layer, EdgeRole r) { return labels[static_cast<std::size_t>(net.layer_edge(layer, r))]; };
  double w = 1.0;
  for (int l = 0; l < net.q; ++l) {
    const int next = (l + 1) % net.q;
    w *= S(f.position(L(l, EdgeRole::a)), f.position(L(l, EdgeRole::b)), f.position(L(l, EdgeRole::c)),
           f.position(L(l, EdgeRole::d)));
    w *= S(f.position(-L(next, EdgeRole::a)), f.position(-L(next, EdgeRole::b)), f.position(-L(l, EdgeRole::c)),
           f.position(-L(l, EdgeRole::d)));
  }
  return w;
}

std::string dump_labeling(const ExpandedNetwork& net, std::span<const int> labels, std::span<const int> kv) {
  std::ostringstream out;
  out << "edges:";
  for (std::size_t e = 0; e < labels.size(); ++e) {
    const auto& edge = net.edges[e];
    out << ' ' << role_name(edge.role);
    if (edge.index) out << edge.index;
    out << '^' << edge.layer + 1 << '=' << labels[e];
  }
  out << " vertices:";
  for (int k : kv) out << ' ' << k;
  return out.str();
}

}  // namespace

std::uint64_t for_each_edge_labeling(const ExpandedNetwork& net, int p, const EnumerationOptions& options,
                                     const std::function<void(std::span<const int>)>& fn) {
  Search search(net, p, variable_order(net, options));
  BudgetGuard guard(options.budget);
  auto leaf = [&](const std::vector<int>& labels) {
    guard.tick();
    check_layer_sums(net, labels);
    fn(labels);
  };
  search.run(0, leaf);
  return guard.count();
}

double count_bound(int p, int q, int c) {
  const double n = 27.0 * q;
  return 3.0 * std::pow(2.0 * n * n, c) * std::pow(static_cast<double>(p), 1.0 + 9.0 * q - c / 25.0);
}

bool LabelingCensus::within_bounds() const {
  if (static_cast<double>(total) > free_label_bound) return false;
  for (const auto& [c, cb] : by_repeats)
    if (static_cast<double>(cb.count) > cb.bound) return false;
  return true;
}

LabelingCensus census(const ExpandedNetwork& net, int p, const EnumerationOptions& options) {
  struct Visitor {
    int p = 0;
    std::uint64_t total = 0;
    std::map<int, std::uint64_t> hist;
    void operator()(const std::vector<int>& labels) {
      ++total;
      ++hist[repeated_labels(labels, p)];
    }
  };
  const auto parts = run_tasks(net, p, options, Visitor{p, 0, {}});
  LabelingCensus out;
  out.p = p;
  out.q = net.q;
  for (const auto& v : parts) {
    out.total += v.total;
    for (const auto& [c, n] : v.hist) out.by_repeats[c].count += n;
  }
  for (auto& [c, cb] : out.by_repeats) cb.bound = count_bound(p, net.q, c);
  out.free_label_bound = (2.0 * p + 1.0) * std::pow(static_cast<double>(p), 9.0 * net.q);
  return out;
}

bool regions_balanced(const ExpandedNetwork& net, std::span<const int> labels, std::span<const int> kv, int p) {
  const int half = p / 2;
  const int regions = *std::max_element(kv.begin(), kv.end()) + 1;
  std::vector<int> balance(static_cast<std::size_t>(regions * (half + 1)), 0);
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& edge = net.edges[e];
    const int rt = kv[static_cast<std::size_t>(edge.tail.vertex)], rh = kv[static_cast<std::size_t>(edge.head.vertex)];
    if (rt == rh) continue;  // interior edges balance themselves
    const int l = labels[e];
    const int sign = l > 0 ? 1 : -1;
    balance[static_cast<std::size_t>(rt * (half + 1) + std::abs(l))] += sign;
    balance[static_cast<std::size_t>(rh * (half + 1) + std::abs(l))] -= sign;
  }
  return std::all_of(balance.begin(), balance.end(), [](int b) { return b == 0; });
}

std::vector<int> random_edge_labeling(const ExpandedNetwork& net, int p, std::uint64_t seed, std::uint64_t index) {
  Stream rng(seed, "trace-sample", index);
  // Variables stay in natural order so zero sums keep propagating; only the value order is random.
  std::vector<int> order(net.edges.size());
  std::iota(order.begin(), order.end(), 0);
  Search search(net, p, order);
  if (!search.run_random(0, rng)) return {};
  return search.labels();
}

RegionReport verify_region_lemma(const ExpandedNetwork& net, int p, int K, const RegionOptions& options) {
  if (K < 1) throw InvalidInput("verify_region_lemma: K must be at least 1");
  struct Visitor {
    const ExpandedNetwork* net = nullptr;
    int p = 0;
    int K = 0;
    BudgetGuard* guard = nullptr;
    std::uint64_t edge_labelings = 0;
    std::uint64_t vertex_labelings = 0;
    std::uint64_t valid_multi = 0;
    std::map<int, std::uint64_t> by_regions;
    std::vector<std::string> violations;
    void operator()(const std::vector<int>& labels) {
      ++edge_labelings;
      const int c = repeated_labels(labels, p);
      if (K == 2) {
        two_regions(labels, c);
        return;
      }
      for_each_vertex_labeling(net->vertex_count(), K, [&](const std::vector<int>& kv, int r) {
        guard->tick();
        const auto weight = orbit_size(K, r);
        vertex_labelings += weight;
        if (!regions_balanced(*net, labels, kv, p)) return;
        by_regions[r] += weight;
        if (r <= 1) return;
        valid_multi += weight;
        if (2 * c < r) record(labels, kv, c, r);
      });
    }

    void record(const std::vector<int>& labels, const std::vector<int>& kv, int c, int r) {
      if (violations.size() < 16) {
        violations.push_back("c=" + std::to_string(c) + " r=" + std::to_string(r) + " " +
                             dump_labeling(*net, labels, kv));
      }
    }

    // K = 2: walk the vertex labelings with vertex 0 fixed in region 0 in Gray-code
    // order, updating the boundary balance of region 0 through the flipped vertex only.
    // Region 1's balance is the negation, so one array decides rule (iii).
    void two_regions(const std::vector<int>& labels, int c) {
      const int V = net->vertex_count();
      const int half = p / 2;
      std::vector<int> kv(static_cast<std::size_t>(V), 0);
      std::vector<int> balance(static_cast<std::size_t>(half) + 1, 0);
      int nonzero = 0, in_one = 0;
      auto contribution = [&](int e, int sign_of_update) {
        const auto& edge = net->edges[static_cast<std::size_t>(e)];
        const int rt = kv[static_cast<std::size_t>(edge.tail.vertex)];
        const int rh = kv[static_cast<std::size_t>(edge.head.vertex)];
        if (rt == rh) return;
        const int l = labels[static_cast<std::size_t>(e)];
        // Region 0 sees +l when it holds the tail, -l when it holds the head.
        const int delta = (rt == 0 ? 1 : -1) * (l > 0 ? 1 : -1) * sign_of_update;
        auto& b = balance[static_cast<std::size_t>(std::abs(l))];
        nonzero -= b != 0;
        b += delta;
        nonzero += b != 0;
      };
      auto visit = [&] {
        guard->tick();
        const int r = in_one == 0 ? 1 : 2;
        vertex_labelings += 2;
        if (nonzero != 0) return;
        by_regions[r] += 2;
        if (r == 1) return;
        valid_multi += 2;
        if (2 * c < r) record(labels, kv, c, r);
      };
      visit();
      const std::uint64_t states = std::uint64_t{1} << (V - 1);
      for (std::uint64_t g = 1; g < states; ++g) {
        const int v = 1 + std::countr_zero(g);  // bit flipped between Gray codes g-1 and g
        const auto& ports = net->ports[static_cast<std::size_t>(v)];
        for (const auto& pe : ports) contribution(pe.first, -1);
        kv[static_cast<std::size_t>(v)] ^= 1;
        in_one += kv[static_cast<std::size_t>(v)] ? 1 : -1;
        for (const auto& pe : ports) contribution(pe.first, +1);
        visit();
      }
    }
  };
  BudgetGuard guard(options.budget);
  Visitor proto{&net, p, K, &guard, 0, 0, 0, {}, {}};
  std::vector<Visitor> parts;
  if (options.exhaustive) {
    EnumerationOptions en;
    en.threads = options.threads;
    en.budget = options.budget;
    parts = run_tasks(net, p, en, proto);
  } else {
    parts.assign(static_cast<std::size_t>(options.samples), proto);
    parallel_for(parts.size(), options.threads, [&](std::size_t i) {
      const auto labels = random_edge_labeling(net, p, options.seed, i);
      if (!labels.empty()) parts[i](labels);
    });
  }
  RegionReport out;
  out.p = p;
  out.q = net.q;
  out.K = K;
  out.exhaustive = options.exhaustive;
  for (const auto& v : parts) {
    out.edge_labelings += v.edge_labelings;
    out.vertex_labelings += v.vertex_labelings;
    out.valid_multi_region += v.valid_multi;
    for (const auto& [r, n] : v.by_regions) out.valid_by_regions[r] += n;
    for (const auto& s : v.violations) out.violations.push_back(s);
  }
  if (!out.violations.empty() && options.throw_on_violation) {
    throw VerificationFailure("c >= r/2 violated by " + std::to_string(out.violations.size()) +
                              " labeling(s); first: " + out.violations.front());
  }
  return out;
}

namespace {

void check_moment(const ComplexTensor& t3_hat, const CorrectionTable& S) {
  if (t3_hat.order() != 3) throw InvalidInput("expected an order-3 moment tensor");
  if (static_cast<int>(t3_hat.extent(0)) != S.p()) throw InvalidInput("moment and correction table differ in p");
}

}  // namespace

double w_frobenius_squared(const ComplexTensor& t3_hat, const CorrectionTable& S) {
  check_moment(t3_hat, S);
  const int p = S.p();
  const Frequencies f(p);
  const auto wt = VertexWeightTable::from_moment(t3_hat, 1);
  const Eigen::Index n = static_cast<Eigen::Index>(p) * p;
  // Pair transfer matrices on states (i, i'): one step of the chain and of its conjugate copy.
  std::vector<Eigen::MatrixXcd> A(static_cast<std::size_t>(p), Eigen::MatrixXcd::Zero(n, n));
  for (std::size_t x = 0; x < static_cast<std::size_t>(p); ++x)
    for (std::size_t i = 0; i < static_cast<std::size_t>(p); ++i) {
      const int ni = f.position_or_invalid(f.value(i) - f.value(x));
      if (ni < 0 || wt(x, i) == cplx{}) continue;
      for (std::size_t k = 0; k < static_cast<std::size_t>(p); ++k) {
        const int nk = f.position_or_invalid(f.value(k) - f.value(x));
        if (nk < 0) continue;
        A[x](static_cast<Eigen::Index>(i) * p + static_cast<Eigen::Index>(k), ni * p + nk) =
            wt(x, i) * std::conj(wt(x, k));
      }
    }
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& a : A) B += a;
  const Eigen::MatrixXcd BB = B * B;
  // Ring order a, j1, c, j2, b, j3, d, j4, j5: L_ac = A_a B A_c B and R_bd = A_b B A_d B B.
  Eigen::MatrixXcd Lflat(n * n, static_cast<Eigen::Index>(p) * p), Rflat(n * n, static_cast<Eigen::Index>(p) * p);
  for (int u = 0; u < p; ++u) {
    const Eigen::MatrixXcd BAB = B * A[static_cast<std::size_t>(u)] * B;
    const Eigen::MatrixXcd BABB = B * A[static_cast<std::size_t>(u)] * BB;
    for (int v = 0; v < p; ++v) {
      const Eigen::MatrixXcd L = A[static_cast<std::size_t>(v)] * BAB;    // (a = v, c = u)
      const Eigen::MatrixXcd R = A[static_cast<std::size_t>(v)] * BABB;   // (b = v, d = u)
      const Eigen::MatrixXcd Rt = R.transpose();
      Lflat.col(v * p + u) = Eigen::Map<const Eigen::VectorXcd>(L.data(), n * n);
      Rflat.col(v * p + u) = Eigen::Map<const Eigen::VectorXcd>(Rt.data(), n * n);
    }
  }
  // tr(L R) = Σ_st L_st R_ts.
  const Eigen::MatrixXcd G = Lflat.transpose() * Rflat;  // (ac, bd)
  double total = 0.0;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c)
        for (int d = 0; d < p; ++d) {
          const double s = S(static_cast<std::size_t>(a), static_cast<std::size_t>(b), static_cast<std::size_t>(c),
                             static_cast<std::size_t>(d));
          if (s != 0.0) total += s * s * G(a * p + c, b * p + d).real();
        }
  return total;
}

namespace {

// Calls fn(x positions in ring order, Ŵ entry without S) for every entry with closing chain.
template <typename Fn>
void for_each_w_entry(const ComplexTensor& t3_hat, int p, Fn&& fn) {
  const Frequencies f(p);
  const auto wt = VertexWeightTable::from_moment(t3_hat, 1);
  std::array<std::size_t, kRingSize> x{};  // ring order: a, j1, c, j2, b, j3, d, j4, j5
  const std::size_t np = static_cast<std::size_t>(p);
  const std::array<int, 8> free_slots = {0, 1, 2, 3, 4, 5, 6, 7};
  std::array<std::size_t, 8> idx{};
  const std::size_t total = [&] {
    std::size_t t = 1;
    for (int k = 0; k < 8; ++k) t *= np;
    return t;
  }();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    int sum = 0;
    for (int k = 7; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = r % np;
      r /= np;
    }
    for (int k = 0; k < 8; ++k) {
      x[static_cast<std::size_t>(free_slots[static_cast<std::size_t>(k)])] = idx[static_cast<std::size_t>(k)];
      sum += f.value(idx[static_cast<std::size_t>(k)]);
    }
    const int last = f.position_or_invalid(-sum);
    if (last < 0) continue;
    x[8] = static_cast<std::size_t>(last);
    cplx entry{};
    for (std::size_t i1 = 0; i1 < np; ++i1) {
      cplx prod = 1.0;
      int i = f.value(i1);
      for (int m = 0; m < kRingSize && prod != cplx{}; ++m) {
        const int next = i - f.value(x[static_cast<std::size_t>(m)]);
        if (!f.contains(next)) {
          prod = 0.0;
          break;
        }
        prod *= wt(x[static_cast<std::size_t>(m)], f.position(i));
        i = next;
      }
      entry += prod;
    }
    fn(x, entry);
  }
}

}  // namespace

double w_frobenius_squared_direct(const ComplexTensor& t3_hat, const CorrectionTable& S) {
  check_moment(t3_hat, S);
  double total = 0.0;
  for_each_w_entry(t3_hat, S.p(), [&](const std::array<std::size_t, kRingSize>& x, cplx entry) {
    const double s = S(x[0], x[4], x[2], x[6]);
    total += s * s * std::norm(entry);
  });
  return total;
}

Eigen::MatrixXd build_w_tilde(const ComplexTensor& t3_hat, const CorrectionTable& S) {
  check_moment(t3_hat, S);
  const int p = S.p();
  if (p > 4) throw BudgetExceeded("build_w_tilde stores p⁹ entries; limited to p <= 4", 0);
  const auto np = static_cast<std::size_t>(p);
  // Mode order (a, b, c, d, j1, ..., j5).
  auto w_hat = ComplexTensor::cube(9, np);
  for_each_w_entry(t3_hat, p, [&](const std::array<std::size_t, kRingSize>& x, cplx entry) {
    w_hat.at({x[0], x[4], x[2], x[6], x[1], x[3], x[5], x[7], x[8]}) = S(x[0], x[4], x[2], x[6]) * entry;
  });
  const auto w = tensor_from_fourier(w_hat);
  const auto rows = static_cast<Eigen::Index>(np * np);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      w.data().data(), rows, static_cast<Eigen::Index>(w.size()) / rows);
}

double labeling_expectation(const ExpandedNetwork& net, int p, int K, const CorrectionTable& S,
                            const EnumerationOptions& options) {
  if (S.p() != p) throw InvalidInput("labeling_expectation: correction table has the wrong p");
  if (K < 1) throw InvalidInput("labeling_expectation: K must be at least 1");
  struct Visitor {
    const ExpandedNetwork* net = nullptr;
    const CorrectionTable* S = nullptr;
    int p = 0;
    int K = 0;
    double sum = 0.0;
    void operator()(const std::vector<int>& labels) {
      const double w = labeling_weight(*net, labels, *S, p);
      if (w == 0.0) return;
      if (K == 1) {
        const std::vector<int> one(static_cast<std::size_t>(net->vertex_count()), 0);
        sum += w * region_moment(*net, labels, one, 1, p);
        return;
      }
      double inner = 0.0;
      for_each_vertex_labeling(net->vertex_count(), K, [&](const std::vector<int>& kv, int r) {
        const double m = region_moment(*net, labels, kv, r, p);
        if (m != 0.0) inner += static_cast<double>(orbit_size(K, r)) * m;
      });
      sum += w * inner;
    }
  };
  const auto parts = run_tasks(net, p, options, Visitor{&net, &S, p, K, 0.0});
  double total = 0.0;
  for (const auto& v : parts) total += v.sum;
  return total;
}

double labeling_sum(const ExpandedNetwork& net, const ComplexTensor& t3_hat, const CorrectionTable& S,
                    const EnumerationOptions& options) {
  check_moment(t3_hat, S);
  const int p = S.p();
  const Frequencies f(p);
  struct Visitor {
    const ExpandedNetwork* net = nullptr;
    const ComplexTensor* t = nullptr;
    const CorrectionTable* S = nullptr;
    const Frequencies* f = nullptr;
    cplx sum{};
    void operator()(const std::vector<int>& labels) {
      const double w = labeling_weight(*net, labels, *S, S->p());
      if (w == 0.0) return;
      cplx prod = w;
      for (const auto& ports : net->ports) {
        std::array<std::size_t, 3> idx{};
        for (std::size_t k = 0; k < 3; ++k) idx[k] = f->position(ports[k].second * labels[static_cast<std::size_t>(ports[k].first)]);
        prod *= t->at({idx[0], idx[1], idx[2]});
      }
      sum += prod;
    }
  };
  const auto parts = run_tasks(net, p, options, Visitor{&net, &t3_hat, &S, &f, {}});
  cplx total{};
  for (const auto& v : parts) total += v.sum;
  return total.real();
}

bool CrosscheckResult::agree(double n_se) const {
  const double tol = n_se * stderr_;
  return std::abs(lhs - rhs) <= tol || (lhs == 0.0 && rhs == 0.0);
}

CrosscheckResult trace_crosscheck(int p, int K, const CorrectionTable& S, const CrosscheckOptions& options) {
  if (options.draws < 2) throw InvalidInput("trace_crosscheck: need at least two draws");
  if (options.tilt < 0) throw InvalidInput("trace_crosscheck: tilt must be >= 0");
  CrosscheckResult out;
  out.rhs = labeling_expectation(build_expanded(1), p, K, S, options.enumeration);
  std::vector<double> values(options.draws);
  parallel_for(values.size(), options.threads, [&](std::size_t d) {
    SignalSet set;
    set.p = p;
    double weight = 1.0;
    for (int k = 0; k < K; ++k) {
      const auto index = d * static_cast<std::uint64_t>(K) + static_cast<std::uint64_t>(k);
      if (options.tilt == 0) {
        set.signals.push_back(to_fourier(random_signal(p, options.seed, index)));
        continue;
      }
      Stream rng(options.seed, "trace-tilted", index);
      const Frequencies f(p);
      Eigen::VectorXcd hat(p);
      for (int j = 1; j <= p / 2; ++j) {
        const auto shape = 1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(options.tilt) + 1));
        const double x = std::gamma_distribution<double>(shape, 1.0 / p)(rng);
        const cplx z = std::polar(std::sqrt(x), 2.0 * std::numbers::pi * rng.uniform());
        hat(static_cast<Eigen::Index>(f.position(j))) = z;
        hat(static_cast<Eigen::Index>(f.position(-j))) = std::conj(z);
        // Exponential density over the equal-weight Gamma mixture: (m+1) / Σ_k (px)^k / k!.
        double mix = 0.0, term = 1.0;
        for (int k = 0; k <= options.tilt; ++k) {
          mix += term;
          term *= p * x / (k + 1);
        }
        weight *= (options.tilt + 1) / mix;
      }
      set.signals.emplace_back(hat);
    }
    values[d] = weight * w_frobenius_squared(exact_moment(set, 3, Normalization::sum_over_K), S);
  });
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  out.lhs = mean;
  out.stderr_ = std::sqrt(var / n);
  out.draws = options.draws;
  return out;
}

void write_verify_json(const std::string& path, const LabelingCensus& c, const RegionReport& region,
                       const CrosscheckResult* crosscheck) {
  using nlohmann::json;
  json doc;
  json hist = json::array();
  for (const auto& [reps, cb] : c.by_repeats) {
    hist.push_back({{"c", reps}, {"count", cb.count}, {"bound", cb.bound}, {"within_bound", cb.count <= cb.bound}});
  }
  doc["census"] = {{"p", c.p},
                   {"q", c.q},
                   {"total", c.total},
                   {"free_label_bound", c.free_label_bound},
                   {"within_bounds", c.within_bounds()},
                   {"by_repeats", hist}};
  json regions = json::object();
  for (const auto& [r, n] : region.valid_by_regions) regions[std::to_string(r)] = n;
  doc["region_lemma"] = {{"p", region.p},
                         {"q", region.q},
                         {"K", region.K},
                         {"mode", region.exhaustive ? "exhaustive" : "sampled"},
                         {"edge_labelings", region.edge_labelings},
                         {"vertex_labelings", region.vertex_labelings},
                         {"valid_multi_region", region.valid_multi_region},
                         {"valid_by_regions", regions},
                         {"violations", region.violations}};
  if (crosscheck) {
    doc["trace_crosscheck"] = {{"lhs", crosscheck->lhs},
                               {"rhs", crosscheck->rhs},
                               {"stderr", crosscheck->stderr_},
                               {"draws", crosscheck->draws},
                               {"agree_3se", crosscheck->agree()}};
  } else {
    doc["trace_crosscheck"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

}  // namespace mra
