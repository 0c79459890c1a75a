#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mra/network.hpp"

using namespace mra;
using testing_util::random_complex;

namespace {

ComplexTensor run(const NetworkGraph& net, const ComplexTensor& t) { return contract(net, {{"T", t}}); }

}  // namespace

TEST(Network, SingleNodeIsIdentity) {
  NetworkGraph net;
  const auto n = net.add_node("A", "T", 3);
  net.add_leg("x", {n, 0});
  net.add_leg("y", {n, 1});
  net.add_leg("z", {n, 2});
  const auto t = random_complex(3, 3, 1);
  EXPECT_EQ(max_abs_difference(run(net, t), t), 0.0);
}

TEST(Network, LegOrderPermutesOutput) {
  NetworkGraph net;
  const auto n = net.add_node("A", "T", 3);
  net.add_leg("z", {n, 2});
  net.add_leg("x", {n, 0});
  net.add_leg("y", {n, 1});
  const auto t = random_complex(3, 3, 2);
  const auto out = run(net, t);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(out.at({k, i, j}), t.at({i, j, k}));
}

TEST(Network, PairContractionOnBasisTensor) {
  auto t = ComplexTensor::cube(3, 4);
  t.at({0, 0, 0}) = 1.0;
  const auto b = run(networks::pair_contraction(), t);
  for (std::size_t f = 0; f < b.size(); ++f) EXPECT_EQ(b[f], f == 0 ? cplx(1.0) : cplx(0.0));
}

TEST(Network, PairContractionMatchesLoops) {
  const std::size_t p = 4;
  const auto t = random_complex(3, p, 3);
  const auto out = run(networks::pair_contraction(), t);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      for (std::size_t c = 0; c < p; ++c)
        for (std::size_t d = 0; d < p; ++d) {
          cplx s{};
          for (std::size_t i = 0; i < p; ++i) s += t.at({a, b, i}) * t.at({c, d, i});
          EXPECT_NEAR(std::abs(out.at({a, b, c, d}) - s), 0.0, 1e-12);
        }
}

TEST(Network, HsssMatchesTripleLoop) {
  const std::size_t p = 4;
  const auto t = random_complex(3, p, 4);
  const auto u = random_complex(1, p, 5);
  const auto out = contract(networks::hsss(), {{"T", t}, {"u", u}});
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      for (std::size_t c = 0; c < p; ++c)
        for (std::size_t d = 0; d < p; ++d) {
          cplx s{};
          for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
              for (std::size_t k = 0; k < p; ++k)
                s += t.at({a, c, j}) * t.at({b, d, k}) * t.at({i, j, k}) * u.at({i});
          EXPECT_NEAR(std::abs(out.at({a, b, c, d}) - s), 0.0, 1e-12);
        }
}

TEST(Network, PcaNetworksMatchLoops) {
  const std::size_t p = 4;
  const auto t = random_complex(3, p, 6);
  const auto gram = run(networks::unfolding_gram(), t);
  const auto kron = run(networks::slice_kron_sum(), t);
  const auto ptr = run(networks::partial_trace(), t);
  const auto z = run(networks::homotopy_init(), t);
  for (std::size_t a = 0; a < p; ++a) {
    cplx zs{};
    for (std::size_t i = 0; i < p; ++i) zs += t.at({i, i, a});
    EXPECT_NEAR(std::abs(z.at({a}) - zs), 0.0, 1e-12);
    for (std::size_t b = 0; b < p; ++b) {
      cplx g{}, pt{};
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) g += t.at({a, j, k}) * t.at({b, j, k});
      for (std::size_t i = 0; i < p; ++i) {
        cplx tr{};
        for (std::size_t l = 0; l < p; ++l) tr += t.at({i, l, l});
        pt += tr * t.at({i, a, b});
      }
      EXPECT_NEAR(std::abs(gram.at({a, b}) - g), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(ptr.at({a, b}) - pt), 0.0, 1e-12);
      for (std::size_t c = 0; c < p; ++c)
        for (std::size_t d = 0; d < p; ++d) {
          cplx s{};
          for (std::size_t i = 0; i < p; ++i) s += t.at({i, a, c}) * t.at({i, b, d});
          EXPECT_NEAR(std::abs(kron.at({a, b, c, d}) - s), 0.0, 1e-12);
        }
    }
  }
}

TEST(Network, DottedEdgePairsNegatedIndices) {
  // v·w with a dotted edge is Σ_i v_i w_{-i}.
  NetworkGraph net;
  const auto v = net.add_node("V", "v", 1);
  const auto w = net.add_node("W", "w", 1);
  net.connect({v, 0}, {w, 0}, EdgeKind::dotted);
  const auto x = random_complex(1, 6, 7);
  const auto y = random_complex(1, 6, 8);
  const auto out = contract(net, {{"v", x}, {"w", y}});
  cplx s{};
  for (std::size_t i = 0; i < 6; ++i) s += x.at({i}) * y.at({5 - i});
  EXPECT_EQ(out.order(), 0u);
  EXPECT_NEAR(std::abs(out[0] - s), 0.0, 1e-13);
}

TEST(Network, DisconnectedComponentsGiveOuterProduct) {
  NetworkGraph net;
  const auto a = net.add_node("A", "v", 1);
  const auto b = net.add_node("B", "v", 1);
  net.add_leg("i", {a, 0});
  net.add_leg("j", {b, 0});
  const auto x = random_complex(1, 3, 9);
  const auto out = contract(net, {{"v", x}});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(std::abs(out.at({i, j}) - x.at({i}) * x.at({j})), 0.0, 1e-15);
}

TEST(Network, TextRoundTrip) {
  for (const auto& net : {networks::ring9(), networks::hsss(), networks::partial_trace()}) {
    const auto text = to_text(net);
    const auto back = parse_network(text);
    EXPECT_EQ(to_text(back), text);
  }
}

TEST(Network, ParsesDocumentedFormat) {
  const auto net = parse_network(R"(
    # T1 and T2 share their last index
    node T1 T 3
    node T2 T 3
    edge T1.2 T2.2
    leg a T1.0
    leg b T1.1
    leg c T2.0
    leg d T2.1
  )");
  const auto t = random_complex(3, 3, 10);
  EXPECT_LT(max_abs_difference(run(net, t), run(networks::pair_contraction(), t)), 1e-15);
}

TEST(Network, Errors) {
  EXPECT_THROW(parse_network("node A T 2\nleg x A.0\n"), InvalidInput);           // dangling port
  EXPECT_THROW(parse_network("node A T 1\nleg x A.0\nleg y A.0\n"), InvalidInput);  // port used twice
  EXPECT_THROW(parse_network("node A T 1\nleg x B.0\n"), InvalidInput);           // unknown node
  EXPECT_THROW(parse_network("vertex A T 1\n"), InvalidInput);                    // unknown keyword
  EXPECT_THROW(parse_network("node A T 1\nedge A.0 A.0 wavy\n"), InvalidInput);   // edge kind
  NetworkGraph net;
  const auto n = net.add_node("A", "T", 2);
  net.add_leg("x", {n, 0});
  net.add_leg("y", {n, 1});
  EXPECT_THROW(contract(net, {{"T", random_complex(3, 2, 1)}}), InvalidInput);  // arity mismatch
  EXPECT_THROW(contract(net, {{"S", random_complex(2, 2, 1)}}), InvalidInput);  // missing slot
  NetworkGraph mixed;
  const auto a = mixed.add_node("A", "x", 1);
  const auto b = mixed.add_node("B", "y", 1);
  mixed.connect({a, 0}, {b, 0});
  EXPECT_THROW(contract(mixed, {{"x", random_complex(1, 2, 1)}, {"y", random_complex(1, 3, 1)}}), InvalidInput);
}

TEST(Network, PlanIsDeterministic) {
  const auto t = random_complex(3, 4, 11);
  std::vector<ContractionStep> first, second;
  contract(networks::hsss(), {{"T", t}, {"u", random_complex(1, 4, 2)}}, &first);
  contract(networks::hsss(), {{"T", t}, {"u", random_complex(1, 4, 3)}}, &second);
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].left, second[i].left);
    EXPECT_EQ(first[i].right, second[i].right);
  }
}
