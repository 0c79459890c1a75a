#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mra/baselines.hpp"
#include "mra/errors.hpp"
#include "mra/moments.hpp"
#include "mra/spectral.hpp"

using namespace mra;

namespace {

RealVector march(const RealVector& theta, double perturb = 0.0, std::uint64_t seed = 0) {
  SignalSet s;
  s.p = static_cast<int>(theta.size());
  s.signals = {to_fourier(theta)};
  auto t2 = exact_moment(s, 2, Normalization::sum_over_K);
  auto t3 = exact_moment(s, 3, Normalization::sum_over_K);
  if (perturb > 0.0) {
    // Conjugate-symmetric perturbation: perturb the real-basis tensors.
    auto r2 = tensor_from_fourier(t2);
    auto r3 = tensor_from_fourier(t3);
    Stream rng(seed, "perturb");
    for (auto& v : r2.data()) v += perturb * (2 * rng.uniform() - 1);
    for (auto& v : r3.data()) v += perturb * (2 * rng.uniform() - 1);
    t2 = tensor_to_fourier(r2);
    t3 = tensor_to_fourier(r3);
  }
  return from_fourier(frequency_marching(t2, t3));
}

}  // namespace

TEST(FrequencyMarching, RecoversOrbitFromExactMoments) {
  for (int p : {4, 8, 16}) {
    for (std::uint64_t d = 0; d < 20; ++d) {
      const auto theta = random_signal(p, 11, d);
      const auto est = march(theta);
      EXPECT_NEAR(orbit_correlation(est, theta).orbit, 1.0, 1e-9) << "p=" << p << " draw " << d;
      EXPECT_NEAR(est.norm(), theta.norm(), 1e-9 * theta.norm());
      EXPECT_NEAR(std::arg(to_fourier(est).at(1)), 0.0, 1e-12);
    }
  }
}

TEST(FrequencyMarching, StableUnderSmallPerturbation) {
  const auto theta = random_signal(8, 12, 0);
  EXPECT_GE(orbit_correlation(march(theta, 1e-8, 3), theta).orbit, 1.0 - 1e-5);
}

TEST(FrequencyMarching, NamesVanishingFrequency) {
  auto hat = to_fourier(random_signal(8, 13, 0));
  hat.coeffs()(static_cast<Eigen::Index>(Frequencies(8).position(2))) = 0.0;
  hat.coeffs()(static_cast<Eigen::Index>(Frequencies(8).position(-2))) = 0.0;
  try {
    march(from_fourier(hat));
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("at frequency 2"), std::string::npos) << e.what();
  }
}

TEST(Pca, NoiselessRecoveryIsExact) {
  for (auto method : kAllPcaMethods) {
    for (auto path : {PcaPath::direct, PcaPath::network}) {
      const auto in = make_pca_instance(9, 1.0, 3, 0, false);
      const auto est = pca_estimate(in.T, method, path);
      EXPECT_NEAR(std::abs(est.dot(in.x)), 1.0, 1e-10) << to_string(method);
    }
  }
}

TEST(Pca, NetworkMatchesLoops) {
  for (int p : {3, 7, 12}) {
    const auto in = make_pca_instance(p, 2.0, 4, 1);
    EXPECT_LT((unfolding_gram(in.T) - unfolding_gram(in.T, PcaPath::network)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((slice_kron_sum(in.T) - slice_kron_sum(in.T, PcaPath::network)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((partial_trace_matrix(in.T) - partial_trace_matrix(in.T, PcaPath::network)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((homotopy_vector(in.T) - homotopy_vector(in.T, PcaPath::network)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Pca, LoopsMatchDefinitions) {
  // Independent formulas: unfolding Gram via slices, kron via Eigen's Kronecker layout.
  const auto in = make_pca_instance(5, 1.5, 5, 0);
  const int p = 5;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p), pt = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(p * p, p * p);
  for (int i = 0; i < p; ++i) {
    Eigen::MatrixXd ti(p, p), ui(p, p);
    for (int a = 0; a < p; ++a)
      for (int c = 0; c < p; ++c) {
        ti(a, c) = in.T.at({std::size_t(i), std::size_t(a), std::size_t(c)});
        ui(a, c) = in.T.at({std::size_t(a), std::size_t(i), std::size_t(c)});
      }
    gram += ui.transpose() * ui;  // Σ_j T_{a j k}: slice over the middle index
    pt += ti.trace() * ti;
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b)
        for (int c = 0; c < p; ++c)
          for (int d = 0; d < p; ++d) kron(a * p + b, c * p + d) += ti(a, c) * ti(b, d);
  }
  Eigen::MatrixXd g2 = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k)
          g2(a, b) += in.T.at({std::size_t(a), std::size_t(j), std::size_t(k)}) *
                      in.T.at({std::size_t(b), std::size_t(j), std::size_t(k)});
  EXPECT_LT((unfolding_gram(in.T) - g2).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((partial_trace_matrix(in.T) - pt).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((slice_kron_sum(in.T) - kron).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, HomotopyEdgeCases) {
  const auto in = make_pca_instance(6, 1.0, 6, 0, false);
  EXPECT_LT((homotopy_vector(in.T) - in.x).norm(), 1e-12);
  const auto zero = RealTensor::cube(3, 6);
  EXPECT_EQ(homotopy_vector(zero).norm(), 0.0);
  EXPECT_NEAR(pca_estimate(zero, PcaMethod::homotopy_init).norm(), 1.0, 1e-15);
}

TEST(Pca, SweepIsDeterministicAcrossThreads) {
  const std::vector<PcaMethod> all(std::begin(kAllPcaMethods), std::end(kAllPcaMethods));
  const auto a = pca_sweep(8, 5.0, 4, 1, all, 1);
  const auto b = pca_sweep(8, 5.0, 4, 1, all, 3);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].corr, b[i].corr);
  EXPECT_EQ(parse_pca_method("partial_trace"), PcaMethod::partial_trace);
  EXPECT_THROW(parse_pca_method("nope"), InvalidInput);
}
