#include "mra/network.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace mra {

std::size_t NetworkGraph::add_node(std::string name, std::string slot, std::size_t arity) {
  for (const auto& n : nodes_) {
    if (n.name == name) throw InvalidInput("duplicate node name '" + name + "'");
  }
  nodes_.push_back({std::move(name), std::move(slot), arity});
  return nodes_.size() - 1;
}

void NetworkGraph::connect(Port a, Port b, EdgeKind kind) { edges_.push_back({a, b, kind}); }

void NetworkGraph::add_leg(std::string name, Port port) { legs_.push_back({std::move(name), port}); }

std::size_t NetworkGraph::node_index(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  throw InvalidInput("unknown node '" + std::string(name) + "'");
}

void NetworkGraph::validate() const {
  std::vector<std::vector<int>> uses(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) uses[i].assign(nodes_[i].arity, 0);
  auto mark = [&](const Port& p, const std::string& what) {
    if (p.node >= nodes_.size()) throw InvalidInput(what + " refers to a missing node");
    if (p.port >= nodes_[p.node].arity) {
      throw InvalidInput(what + " uses port " + std::to_string(p.port) + " of node '" +
                         nodes_[p.node].name + "' with arity " +
                         std::to_string(nodes_[p.node].arity));
    }
    ++uses[p.node][p.port];
  };
  for (const auto& e : edges_) {
    mark(e.a, "edge");
    mark(e.b, "edge");
  }
  for (const auto& l : legs_) mark(l.port, "leg '" + l.name + "'");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t k = 0; k < nodes_[i].arity; ++k) {
      if (uses[i][k] == 0) {
        throw InvalidInput("dangling port " + nodes_[i].name + "." + std::to_string(k));
      }
      if (uses[i][k] > 1) {
        throw InvalidInput("port " + nodes_[i].name + "." + std::to_string(k) + " used " +
                           std::to_string(uses[i][k]) + " times");
      }
    }
  }
}

namespace {

Port parse_port(const NetworkGraph& net, const std::string& token, std::size_t line) {
  const auto dot = token.rfind('.');
  if (dot == std::string::npos) {
    throw InvalidInput("line " + std::to_string(line) + ": expected <node>.<port>, got '" + token + "'");
  }
  Port p;
  p.node = net.node_index(token.substr(0, dot));
  try {
    p.port = std::stoul(token.substr(dot + 1));
  } catch (const std::exception&) {
    throw InvalidInput("line " + std::to_string(line) + ": bad port number in '" + token + "'");
  }
  return p;
}

}  // namespace

NetworkGraph parse_network(std::string_view text) {
  NetworkGraph net;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream line(raw);
    std::string kw;
    if (!(line >> kw)) continue;
    if (kw == "node") {
      std::string name, slot;
      std::size_t arity = 0;
      if (!(line >> name >> slot >> arity)) {
        throw InvalidInput("line " + std::to_string(line_no) + ": node <name> <slot> <arity>");
      }
      net.add_node(name, slot, arity);
    } else if (kw == "edge") {
      std::string a, b, kind = "plain";
      if (!(line >> a >> b)) {
        throw InvalidInput("line " + std::to_string(line_no) + ": edge <n>.<p> <n>.<p> [kind]");
      }
      line >> kind;
      if (kind != "plain" && kind != "dotted") {
        throw InvalidInput("line " + std::to_string(line_no) + ": unknown edge kind '" + kind + "'");
      }
      net.connect(parse_port(net, a, line_no), parse_port(net, b, line_no),
                  kind == "dotted" ? EdgeKind::dotted : EdgeKind::plain);
    } else if (kw == "leg") {
      std::string name, port;
      if (!(line >> name >> port)) {
        throw InvalidInput("line " + std::to_string(line_no) + ": leg <name> <n>.<p>");
      }
      net.add_leg(name, parse_port(net, port, line_no));
    } else {
      throw InvalidInput("line " + std::to_string(line_no) + ": unknown keyword '" + kw + "'");
    }
  }
  net.validate();
  return net;
}

std::string to_text(const NetworkGraph& net) {
  std::ostringstream out;
  auto port = [&](const Port& p) { return net.nodes()[p.node].name + "." + std::to_string(p.port); };
  for (const auto& n : net.nodes()) out << "node " << n.name << ' ' << n.slot << ' ' << n.arity << '\n';
  for (const auto& e : net.edges()) {
    out << "edge " << port(e.a) << ' ' << port(e.b)
        << (e.kind == EdgeKind::dotted ? " dotted" : " plain") << '\n';
  }
  for (const auto& l : net.legs()) out << "leg " << l.name << ' ' << port(l.port) << '\n';
  return out.str();
}

namespace {

// A partially contracted operand. labels[k] >= 0 is an edge id; a negative
// label -(l+1) marks external leg l.
struct Operand {
  ComplexTensor tensor;
  std::vector<long> labels;
  std::size_t id;  // smallest original node id merged into this operand
};

std::size_t nonzeros(const ComplexTensor& t) {
  return static_cast<std::size_t>(
      std::count_if(t.data().begin(), t.data().end(), [](const cplx& z) { return z != cplx{}; }));
}

ComplexTensor reverse_mode(const ComplexTensor& t, std::size_t mode) {
  ComplexTensor out(t.extents());
  std::vector<std::size_t> idx(t.order());
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unravel(f, idx);
    idx[mode] = t.extent(mode) - 1 - idx[mode];
    out.at(std::span<const std::size_t>(idx)) = t[f];
  }
  return out;
}

// Sum over the diagonal of every label that appears twice in one operand.
void trace_self_loops(Operand& op) {
  for (;;) {
    std::size_t first = 0, second = 0;
    bool found = false;
    for (std::size_t i = 0; i < op.labels.size() && !found; ++i) {
      for (std::size_t j = i + 1; j < op.labels.size(); ++j) {
        if (op.labels[i] >= 0 && op.labels[i] == op.labels[j]) {
          first = i;
          second = j;
          found = true;
          break;
        }
      }
    }
    if (!found) return;
    const auto& t = op.tensor;
    std::vector<std::size_t> ext;
    std::vector<long> labels;
    for (std::size_t k = 0; k < t.order(); ++k) {
      if (k != first && k != second) {
        ext.push_back(t.extent(k));
        labels.push_back(op.labels[k]);
      }
    }
    ComplexTensor out(ext);
    std::vector<std::size_t> idx(t.order()), oidx(ext.size());
    for (std::size_t f = 0; f < t.size(); ++f) {
      t.unravel(f, idx);
      if (idx[first] != idx[second]) continue;
      for (std::size_t k = 0, o = 0; k < t.order(); ++k) {
        if (k != first && k != second) oidx[o++] = idx[k];
      }
      out.at(std::span<const std::size_t>(oidx)) += t[f];
    }
    op.tensor = std::move(out);
    op.labels = std::move(labels);
  }
}

std::vector<long> shared_labels(const Operand& x, const Operand& y) {
  std::vector<long> out;
  for (long l : x.labels) {
    if (l >= 0 && std::find(y.labels.begin(), y.labels.end(), l) != y.labels.end()) out.push_back(l);
  }
  return out;
}

std::size_t result_size(const Operand& x, const Operand& y, const std::vector<long>& shared) {
  std::size_t size = 1;
  for (const Operand* op : {&x, &y}) {
    for (std::size_t k = 0; k < op->labels.size(); ++k) {
      if (std::find(shared.begin(), shared.end(), op->labels[k]) == shared.end()) {
        size *= op->tensor.extent(k);
      }
    }
  }
  return size;
}

Operand contract_pair(const Operand& x, const Operand& y, const std::vector<long>& shared) {
  // Iterate the sparser operand's nonzeros.
  const bool swap = nonzeros(y.tensor) < nonzeros(x.tensor);
  const Operand& a = swap ? y : x;
  const Operand& b = swap ? x : y;

  auto mode_of = [](const Operand& op, long label) {
    return static_cast<std::size_t>(
        std::find(op.labels.begin(), op.labels.end(), label) - op.labels.begin());
  };
  std::vector<std::size_t> a_shared, b_shared, a_free, b_free;
  for (long l : shared) {
    a_shared.push_back(mode_of(a, l));
    b_shared.push_back(mode_of(b, l));
  }
  for (std::size_t k = 0; k < a.labels.size(); ++k) {
    if (std::find(a_shared.begin(), a_shared.end(), k) == a_shared.end()) a_free.push_back(k);
  }
  for (std::size_t k = 0; k < b.labels.size(); ++k) {
    if (std::find(b_shared.begin(), b_shared.end(), k) == b_shared.end()) b_free.push_back(k);
  }
  std::size_t shared_size = 1, b_free_size = 1;
  for (std::size_t s = 0; s < a_shared.size(); ++s) {
    if (a.tensor.extent(a_shared[s]) != b.tensor.extent(b_shared[s])) {
      throw InvalidInput("contract: inconsistent extents across an edge");
    }
    shared_size *= a.tensor.extent(a_shared[s]);
  }
  for (auto k : b_free) b_free_size *= b.tensor.extent(k);

  // B as a (shared × b_free) matrix.
  std::vector<cplx> bm(shared_size * b_free_size);
  std::vector<std::size_t> idx(b.tensor.order());
  for (std::size_t f = 0; f < b.tensor.size(); ++f) {
    b.tensor.unravel(f, idx);
    std::size_t s = 0, r = 0;
    for (auto k : b_shared) s = s * b.tensor.extent(k) + idx[k];
    for (auto k : b_free) r = r * b.tensor.extent(k) + idx[k];
    bm[s * b_free_size + r] = b.tensor[f];
  }

  Operand out;
  std::vector<std::size_t> ext;
  for (auto k : a_free) {
    ext.push_back(a.tensor.extent(k));
    out.labels.push_back(a.labels[k]);
  }
  for (auto k : b_free) {
    ext.push_back(b.tensor.extent(k));
    out.labels.push_back(b.labels[k]);
  }
  out.tensor = ComplexTensor(ext);
  out.id = std::min(a.id, b.id);

  std::vector<std::size_t> aidx(a.tensor.order());
  for (std::size_t f = 0; f < a.tensor.size(); ++f) {
    const cplx v = a.tensor[f];
    if (v == cplx{}) continue;
    a.tensor.unravel(f, aidx);
    std::size_t s = 0, r = 0;
    for (auto k : a_shared) s = s * a.tensor.extent(k) + aidx[k];
    for (auto k : a_free) r = r * a.tensor.extent(k) + aidx[k];
    const cplx* src = bm.data() + s * b_free_size;
    cplx* dst = out.tensor.data().data() + r * b_free_size;
    for (std::size_t c = 0; c < b_free_size; ++c) dst[c] += v * src[c];
  }
  return out;
}

}  // namespace

ComplexTensor contract(const NetworkGraph& net, const std::map<std::string, ComplexTensor>& tensors,
                       std::vector<ContractionStep>* plan) {
  net.validate();
  std::vector<Operand> ops;
  ops.reserve(net.nodes().size());
  for (std::size_t n = 0; n < net.nodes().size(); ++n) {
    const auto& node = net.nodes()[n];
    auto it = tensors.find(node.slot);
    if (it == tensors.end()) throw InvalidInput("contract: no tensor for slot '" + node.slot + "'");
    if (it->second.order() != node.arity) {
      throw InvalidInput("contract: node '" + node.name + "' has arity " +
                         std::to_string(node.arity) + " but slot '" + node.slot + "' has order " +
                         std::to_string(it->second.order()));
    }
    ops.push_back({it->second, std::vector<long>(node.arity, 0), n});
  }
  for (std::size_t e = 0; e < net.edges().size(); ++e) {
    const auto& edge = net.edges()[e];
    ops[edge.a.node].labels[edge.a.port] = static_cast<long>(e);
    ops[edge.b.node].labels[edge.b.port] = static_cast<long>(e);
  }
  for (std::size_t l = 0; l < net.legs().size(); ++l) {
    const auto& leg = net.legs()[l];
    ops[leg.port.node].labels[leg.port.port] = -static_cast<long>(l) - 1;
  }
  for (const auto& edge : net.edges()) {
    if (edge.kind == EdgeKind::dotted) {
      ops[edge.b.node].tensor = reverse_mode(ops[edge.b.node].tensor, edge.b.port);
    }
  }
  for (auto& op : ops) trace_self_loops(op);

  while (ops.size() > 1) {
    std::size_t best_i = 0, best_j = 1;
    std::size_t best_size = std::numeric_limits<std::size_t>::max();
    bool connected = false;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      for (std::size_t j = i + 1; j < ops.size(); ++j) {
        const auto shared = shared_labels(ops[i], ops[j]);
        if (shared.empty()) continue;
        const auto size = result_size(ops[i], ops[j], shared);
        const auto key = std::minmax(ops[i].id, ops[j].id);
        const auto best_key = std::minmax(ops[best_i].id, ops[best_j].id);
        if (!connected || size < best_size || (size == best_size && key < best_key)) {
          best_i = i;
          best_j = j;
          best_size = size;
          connected = true;
        }
      }
    }
    if (!connected) {
      // Disconnected components: outer product of the two lowest ids.
      std::vector<std::size_t> order(ops.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto x, auto y) { return ops[x].id < ops[y].id; });
      best_i = std::min(order[0], order[1]);
      best_j = std::max(order[0], order[1]);
      best_size = result_size(ops[best_i], ops[best_j], {});
    }
    const auto shared = shared_labels(ops[best_i], ops[best_j]);
    Operand merged = contract_pair(ops[best_i], ops[best_j], shared);
    if (plan) plan->push_back({ops[best_i].id, ops[best_j].id, best_size});
    ops.erase(ops.begin() + static_cast<long>(best_j));
    ops[best_i] = std::move(merged);
  }

  // Permute remaining modes into leg declaration order.
  const Operand& last = ops.front();
  const std::size_t n_legs = net.legs().size();
  std::vector<std::size_t> src_mode(n_legs);
  std::vector<std::size_t> ext(n_legs);
  for (std::size_t k = 0; k < last.labels.size(); ++k) {
    const auto leg = static_cast<std::size_t>(-last.labels[k] - 1);
    src_mode[leg] = k;
    ext[leg] = last.tensor.extent(k);
  }
  ComplexTensor out(ext);
  std::vector<std::size_t> idx(last.tensor.order()), oidx(n_legs);
  for (std::size_t f = 0; f < last.tensor.size(); ++f) {
    last.tensor.unravel(f, idx);
    for (std::size_t l = 0; l < n_legs; ++l) oidx[l] = idx[src_mode[l]];
    out.at(std::span<const std::size_t>(oidx)) = last.tensor[f];
  }
  return out;
}

namespace networks {

NetworkGraph pair_contraction() {
  NetworkGraph net;
  const auto t1 = net.add_node("T1", "T", 3);
  const auto t2 = net.add_node("T2", "T", 3);
  net.connect({t1, 2}, {t2, 2});
  net.add_leg("a", {t1, 0});
  net.add_leg("b", {t1, 1});
  net.add_leg("c", {t2, 0});
  net.add_leg("d", {t2, 1});
  return net;
}

NetworkGraph hsss() {
  NetworkGraph net;
  const auto t1 = net.add_node("T1", "T", 3);  // (a, c, j)
  const auto t2 = net.add_node("T2", "T", 3);  // (b, d, k)
  const auto t3 = net.add_node("T3", "T", 3);  // (i, j, k)
  const auto u = net.add_node("U", "u", 1);
  net.connect({t1, 2}, {t3, 1});
  net.connect({t2, 2}, {t3, 2});
  net.connect({t3, 0}, {u, 0});
  net.add_leg("a", {t1, 0});
  net.add_leg("b", {t2, 0});
  net.add_leg("c", {t1, 1});
  net.add_leg("d", {t2, 1});
  return net;
}

NetworkGraph ring9() {
  NetworkGraph net;
  std::vector<std::size_t> v(9);
  for (std::size_t m = 0; m < 9; ++m) v[m] = net.add_node("V" + std::to_string(m + 1), "T", 3);
  const auto u = net.add_node("U", "u", 5);
  for (std::size_t m = 0; m < 9; ++m) net.connect({v[m], 2}, {v[(m + 1) % 9], 0}, EdgeKind::dotted);
  // Ring positions 2, 4, 6, 8, 9 carry j1..j5.
  const std::size_t j_pos[5] = {1, 3, 5, 7, 8};
  for (std::size_t k = 0; k < 5; ++k) net.connect({v[j_pos[k]], 1}, {u, k}, EdgeKind::dotted);
  net.add_leg("a", {v[0], 1});
  net.add_leg("b", {v[4], 1});
  net.add_leg("c", {v[2], 1});
  net.add_leg("d", {v[6], 1});
  return net;
}

NetworkGraph unfolding_gram() {
  NetworkGraph net;
  const auto t1 = net.add_node("T1", "T", 3);
  const auto t2 = net.add_node("T2", "T", 3);
  net.connect({t1, 1}, {t2, 1});
  net.connect({t1, 2}, {t2, 2});
  net.add_leg("a", {t1, 0});
  net.add_leg("b", {t2, 0});
  return net;
}

NetworkGraph slice_kron_sum() {
  NetworkGraph net;
  const auto t1 = net.add_node("T1", "T", 3);
  const auto t2 = net.add_node("T2", "T", 3);
  net.connect({t1, 0}, {t2, 0});
  net.add_leg("a", {t1, 1});
  net.add_leg("b", {t2, 1});
  net.add_leg("c", {t1, 2});
  net.add_leg("d", {t2, 2});
  return net;
}

NetworkGraph partial_trace() {
  NetworkGraph net;
  const auto t1 = net.add_node("T1", "T", 3);
  const auto t2 = net.add_node("T2", "T", 3);
  net.connect({t1, 0}, {t2, 0});
  net.connect({t2, 1}, {t2, 2});
  net.add_leg("a", {t1, 1});
  net.add_leg("c", {t1, 2});
  return net;
}

NetworkGraph homotopy_init() {
  NetworkGraph net;
  const auto t = net.add_node("T", "T", 3);
  net.connect({t, 0}, {t, 1});
  net.add_leg("j", {t, 2});
  return net;
}

}  // namespace networks

}  // namespace mra
