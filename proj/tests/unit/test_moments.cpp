#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "mra/correction.hpp"
#include "mra/moments.hpp"

using namespace mra;
using testing_util::fp;
using testing_util::valid;

TEST(Moments, ParityKillsThirdMomentAtP2) {
  const auto m = exact_moment(random_signals(2, 3, 1), 3, Normalization::sum_over_K);
  for (const auto& v : m.data()) EXPECT_EQ(v, cplx{});
}

TEST(Moments, SecondMomentIsPowerSpectrum) {
  const int p = 6;
  const auto s = random_signals(p, 1, 2);
  const auto m = exact_moment(s, 2, Normalization::sum_over_K);
  const Frequencies f(p);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) {
      if (f.value(a) + f.value(b) == 0) {
        EXPECT_NEAR(std::abs(m.at({a, b}) - std::norm(s.signals[0].coeffs()(a))), 0.0, 1e-15);
      } else {
        EXPECT_EQ(m.at({a, b}), cplx{});
      }
    }
  const auto m1 = exact_moment(s, 1, Normalization::sum_over_K);
  for (const auto& v : m1.data()) EXPECT_EQ(v, cplx{});
}

TEST(Moments, ThirdMomentProductForm) {
  const auto s = random_signals(4, 1, 3);
  const auto m = exact_third_moment(s, Normalization::sum_over_K);
  const auto& v = s.signals[0];
  EXPECT_NEAR(std::abs(m(1, 1, -2) - v.at(1) * v.at(1) * v.at(-2)), 0.0, 1e-15);
  EXPECT_EQ(m(1, 1, 1), cplx{});
}

TEST(Moments, SymmetriesAndNormalization) {
  const auto s = random_signals(6, 3, 4);
  const auto sum = exact_moment(s, 3, Normalization::sum_over_K);
  const auto mean = exact_moment(s, 3, Normalization::mean_over_K);
  EXPECT_LT(conjugate_symmetry_defect(sum), 1e-14);
  std::vector<std::size_t> idx(3);
  for (std::size_t e = 0; e < sum.size(); ++e) {
    sum.unravel(e, idx);
    EXPECT_NEAR(std::abs(sum[e] - sum.at({idx[1], idx[0], idx[2]})), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sum[e] - sum.at({idx[2], idx[1], idx[0]})), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sum[e] - 3.0 * mean[e]), 0.0, 1e-14);
  }
}

TEST(Moments, NoiselessSamplesLieOnOrbit) {
  const auto s = random_signals(8, 2, 5);
  const auto batch = sample_observations(s, 0.0, 50, 9);
  const auto thetas = s.real();
  for (std::size_t i = 0; i < batch.n(); ++i) {
    EXPECT_NEAR(batch.samples.col(static_cast<Eigen::Index>(i)).norm(), thetas[batch.classes[i]].norm(), 1e-12);
  }
}

TEST(Moments, SamplingIsDeterministicAcrossThreads) {
  const auto s = random_signals(8, 2, 6);
  const auto a = sample_observations(s, 0.3, 200, 11, 1);
  const auto b = sample_observations(s, 0.3, 200, 11, 3);
  EXPECT_EQ((a.samples - b.samples).cwiseAbs().maxCoeff(), 0.0);
  const auto c = sample_observations(s, 0.3, 200, 12, 1);
  EXPECT_GT((a.samples - c.samples).cwiseAbs().maxCoeff(), 0.0);
  const auto ea = empirical_third_moment(a, 1);
  const auto eb = empirical_third_moment(a, 4);
  EXPECT_EQ(max_abs_difference(ea.real, eb.real), 0.0);
}

TEST(Moments, SingleNoiselessSample) {
  const auto s = random_signals(4, 1, 7);
  const auto batch = sample_observations(s, 0.0, 1, 3);
  const auto est = empirical_third_moment(batch);
  const auto yh = apply_rotation(s.signals[0], batch.shifts[0]).coeffs();
  EXPECT_LT(max_abs_difference(est.fourier_full, outer_power(yh, 3)), 1e-14);
  const RealVector y = batch.samples.col(0);
  EXPECT_LT(max_abs_difference(est.real, outer_power(y, 3)), 1e-14);
  EXPECT_THROW(empirical_third_moment(ObservationBatch{}), InvalidInput);
}

TEST(Moments, ErrorNorm) {
  const auto t = testing_util::random_real(3, 4, 8);
  EXPECT_EQ(moment_error(t, t), 0.0);
  auto u = t;
  u.at({1, 2, 3}) += 0.25;
  EXPECT_DOUBLE_EQ(moment_error(u, t), 0.25);
  // Fourier inputs are compared in the real basis.
  EXPECT_NEAR(moment_error(tensor_to_fourier(u), tensor_to_fourier(t)), 0.25, 1e-14);
}

namespace {

// Independent enumeration of the chain tuples for s_abcd: the 14 indices are
// grouped by absolute value, giving s as a polynomial in w_m = |θ̂_m|².
std::map<std::vector<int>, long> s_polynomial(int a, int b, int c, int d, int p) {
  std::map<std::vector<int>, long> poly;
  const int h = p / 2;
  std::vector<int> range;
  for (int x = -h; x <= h; ++x)
    if (x != 0) range.push_back(x);
  for (int i1 : range)
    for (int j1 : range)
      for (int j2 : range)
        for (int j3 : range)
          for (int j4 : range) {
            const int i2 = i1 - a, i3 = i2 - j1, i4 = i3 - c, i5 = i4 - j2, i6 = i5 - b;
            const int i7 = i6 - j3, i8 = i7 - d, i9 = i8 - j4, j5 = i9 - i1;
            const int idx[14] = {i1, i2, i3, i4, i5, i6, i7, i8, i9, j1, j2, j3, j4, j5};
            std::vector<int> k(static_cast<std::size_t>(h + 1), 0);
            bool ok = true;
            for (int x : idx) {
              if (!valid(p, x)) ok = false;
              else ++k[static_cast<std::size_t>(std::abs(x))];
            }
            if (ok) ++poly[k];
          }
  return poly;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

TEST(Correction, ExactMatchesIndependentEnumeration) {
  const int p = 6;
  for (int a : {-3, -1, 2})
    for (int b : {-2, 1})
      for (int c : {-1, 3})
        for (int d : {-2, 1, 3}) {
          double expect = 0.0;
          for (const auto& [k, count] : s_polynomial(a, b, c, d, p)) {
            double term = static_cast<double>(count);
            for (int m = 1; m <= p / 2; ++m) term *= factorial(k[static_cast<std::size_t>(m)]);
            expect += term;
          }
          EXPECT_EQ(static_cast<double>(expected_s_scaled(a, b, c, d, p)), expect);
        }
}

TEST(Correction, NegationSymmetryIsExact) {
  const int p = 6;
  for (int a : {-3, 1})
    for (int b : {-2, 3})
      for (int c : {-1, 2})
        for (int d : {1, 3}) EXPECT_EQ(expected_s_scaled(a, b, c, d, p), expected_s_scaled(-a, -b, -c, -d, p));
}

TEST(Correction, VanishesAtP4) {
  const auto t = correction_table(4);
  for (double v : t.data()) EXPECT_EQ(v, 0.0);
}

TEST(Correction, TableInvariants) {
  for (int p : {6, 8}) {
    const auto t = correction_table(p);
    t.validate();
    const auto n = static_cast<std::size_t>(p);
    const double p9 = std::pow(static_cast<double>(p), 9.0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          for (std::size_t d = 0; d < n; ++d) {
            const double s = t(a, b, c, d);
            if (b == n - 1 - a || d == n - 1 - c) {
              EXPECT_EQ(s, 0.0);
            } else {
              ASSERT_GT(s, 0.0);
              const double scaled = p9 / s;  // E[s]·p⁹
              EXPECT_LE(scaled, factorial(14));
            }
          }
  }
}

TEST(Correction, SampledMatchesPolynomial) {
  const int p = 6;
  const auto theta = to_fourier(random_signal(p, 3)).coeffs();
  std::vector<double> w(6);
  for (int k = 0; k < 6; ++k) w[static_cast<std::size_t>(k)] = std::norm(theta(k));
  const auto s = sampled_s_table(w);
  const Frequencies f(p);
  for (std::size_t e = 0; e < s.size(); e += 7) {
    const int a = f.value(e / 216), b = f.value(e / 36 % 6), c = f.value(e / 6 % 6), d = f.value(e % 6);
    double expect = 0.0;
    for (const auto& [k, count] : s_polynomial(a, b, c, d, p)) {
      double term = static_cast<double>(count);
      for (int m = 1; m <= 3; ++m) term *= std::pow(w[fp(p, m)], k[static_cast<std::size_t>(m)]);
      expect += term;
    }
    EXPECT_NEAR(s[e], expect, 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Correction, CacheRoundTrip) {
  const auto dir = ::testing::TempDir() + "/mra_corr_cache";
  const auto first = cached_correction_table(4, {}, dir);
  const auto second = cached_correction_table(4, {}, dir);
  EXPECT_EQ(first.data(), second.data());
  CorrectionTable loaded;
  CorrectionOptions mc;
  mc.mode = CorrectionMode::monte_carlo;
  EXPECT_FALSE(load_correction_table(dir + "/correction_p4_exact.bin", 4, mc, loaded));
  EXPECT_FALSE(load_correction_table(dir + "/missing.bin", 4, {}, loaded));
}

TEST(Correction, MonteCarloNeedsSamples) {
  CorrectionOptions mc;
  mc.mode = CorrectionMode::monte_carlo;
  mc.samples = 0;
  EXPECT_THROW(correction_table(4, mc), InvalidInput);
}
