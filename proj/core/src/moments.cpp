#include "mra/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mra/errors.hpp"
#include "mra/parallel.hpp"
#include "mra/rng.hpp"

namespace mra {

SignalSet SignalSet::from_real(const std::vector<RealVector>& thetas) {
  if (thetas.empty()) throw InvalidInput("SignalSet: no signals");
  SignalSet out;
  out.p = static_cast<int>(thetas.front().size());
  for (const auto& t : thetas) {
    if (t.size() != out.p) throw InvalidInput("SignalSet: signals differ in length");
    out.signals.push_back(to_fourier(t));
  }
  return out;
}

std::vector<RealVector> SignalSet::real() const {
  std::vector<RealVector> out;
  out.reserve(signals.size());
  for (const auto& s : signals) out.push_back(from_fourier(s));
  return out;
}

void SignalSet::validate(double tol) const {
  Frequencies{p};
  if (signals.empty()) throw InvalidInput("SignalSet: no signals");
  for (std::size_t k = 0; k < signals.size(); ++k) {
    if (signals[k].p() != p) throw InvalidInput("SignalSet: signal " + std::to_string(k) + " has wrong length");
    if (signals[k].symmetry_defect() > tol * std::max(1.0, signals[k].norm())) {
      throw InvalidInput("SignalSet: signal " + std::to_string(k) + " is not conjugate symmetric");
    }
  }
}

RealVector random_signal(int p, std::uint64_t seed, std::uint64_t index) {
  Frequencies{p};
  Stream rng(seed, "signal", index);
  RealVector v(p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  for (int i = 0; i < p; ++i) v(i) = scale * rng.normal();
  return v;
}

SignalSet random_signals(int p, int K, std::uint64_t seed) {
  if (K < 1) throw InvalidInput("random_signals: K must be at least 1");
  std::vector<RealVector> thetas;
  for (int k = 0; k < K; ++k) thetas.push_back(random_signal(p, seed, static_cast<std::uint64_t>(k)));
  return SignalSet::from_real(thetas);
}

ZeroSumTensor3::ZeroSumTensor3(int p) : p_(p), t_(ComplexTensor::cube(3, static_cast<std::size_t>(p))) {
  Frequencies{p};
}

ZeroSumTensor3 ZeroSumTensor3::project(const ComplexTensor& t, double* off_support_max) {
  if (t.order() != 3) throw InvalidInput("ZeroSumTensor3: expected an order-3 tensor");
  const int p = static_cast<int>(t.extent(0));
  ZeroSumTensor3 out(p);
  const Frequencies f(p);
  double off = 0.0;
  std::vector<std::size_t> idx(3);
  for (std::size_t k = 0; k < t.size(); ++k) {
    t.unravel(k, idx);
    if (f.value(idx[0]) + f.value(idx[1]) + f.value(idx[2]) == 0) {
      out.t_[k] = t[k];
    } else {
      off = std::max(off, std::abs(t[k]));
    }
  }
  if (off_support_max) *off_support_max = off;
  return out;
}

cplx ZeroSumTensor3::operator()(int j1, int j2, int j3) const {
  if (j1 + j2 + j3 != 0) return {};
  const Frequencies f(p_);
  return t_.at({f.position(j1), f.position(j2), f.position(j3)});
}

std::size_t ZeroSumTensor3::support_size() const {
  const Frequencies f(p_);
  std::size_t count = 0;
  for (int a = -f.half(); a <= f.half(); ++a)
    for (int b = -f.half(); b <= f.half(); ++b)
      if (f.contains(a) && f.contains(b) && f.contains(-a - b)) ++count;
  return count;
}

ComplexTensor exact_moment(const SignalSet& signals, int d, Normalization norm) {
  signals.validate();
  if (d < 1 || d > 3) throw InvalidInput("exact_moment: order must be 1, 2 or 3");
  const int p = signals.p;
  const Frequencies f(p);
  auto out = ComplexTensor::cube(static_cast<std::size_t>(d), static_cast<std::size_t>(p));
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  for (std::size_t e = 0; e < out.size(); ++e) {
    out.unravel(e, idx);
    int sum = 0;
    for (auto i : idx) sum += f.value(i);
    if (sum != 0) continue;
    cplx acc{};
    for (const auto& s : signals.signals) {
      cplx prod{1.0, 0.0};
      for (auto i : idx) prod *= s.coeffs()(static_cast<Eigen::Index>(i));
      acc += prod;
    }
    out[e] = norm == Normalization::mean_over_K ? acc / static_cast<double>(signals.K()) : acc;
  }
  return out;
}

ZeroSumTensor3 exact_third_moment(const SignalSet& signals, Normalization norm) {
  return ZeroSumTensor3::project(exact_moment(signals, 3, norm));
}

ObservationBatch sample_observations(const SignalSet& signals, double sigma, std::size_t n,
                                     std::uint64_t seed, int threads) {
  signals.validate();
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sample_observations: sigma must be finite and >= 0");
  ObservationBatch batch;
  batch.p = signals.p;
  batch.sigma = sigma;
  batch.seed = seed;
  batch.samples.resize(signals.p, static_cast<Eigen::Index>(n));
  batch.shifts.resize(n);
  batch.classes.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Stream rng(seed, "observation", i);
    const double g = 2.0 * std::numbers::pi * rng.uniform();
    const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(signals.K())));
    RealVector y = from_fourier(apply_rotation(signals.signals[static_cast<std::size_t>(k)], g));
    for (int r = 0; r < y.size(); ++r) y(r) += sigma * rng.normal();
    batch.samples.col(static_cast<Eigen::Index>(i)) = y;
    batch.shifts[i] = g;
    batch.classes[i] = k;
  });
  return batch;
}

EmpiricalMoment empirical_third_moment(const ObservationBatch& batch, int threads) {
  const std::size_t n = batch.n();
  if (n == 0) throw InvalidInput("empirical_third_moment: empty batch");
  const auto p = static_cast<std::size_t>(batch.p);
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<ComplexTensor> fourier(blocks);
  std::vector<RealTensor> real(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto fs = ComplexTensor::cube(3, p);
    auto rs = RealTensor::cube(3, p);
    for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) {
      const RealVector y = batch.samples.col(static_cast<Eigen::Index>(i));
      const auto yh = to_fourier(y).coeffs();
      std::size_t f = 0;
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t c = 0; c < p; ++c) {
          const cplx ac = yh(static_cast<Eigen::Index>(a)) * yh(static_cast<Eigen::Index>(c));
          const double rac = y(static_cast<Eigen::Index>(a)) * y(static_cast<Eigen::Index>(c));
          for (std::size_t d = 0; d < p; ++d, ++f) {
            fs[f] += ac * yh(static_cast<Eigen::Index>(d));
            rs[f] += rac * y(static_cast<Eigen::Index>(d));
          }
        }
    }
    fourier[b] = std::move(fs);
    real[b] = std::move(rs);
  });
  EmpiricalMoment out;
  out.n = n;
  out.fourier_full = ComplexTensor::cube(3, p);
  out.real = RealTensor::cube(3, p);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t f = 0; f < out.real.size(); ++f) {
      out.fourier_full[f] += fourier[b][f];
      out.real[f] += real[b][f];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : out.fourier_full.data()) v *= inv;
  for (auto& v : out.real.data()) v *= inv;
  out.fourier = ZeroSumTensor3::project(out.fourier_full, &out.off_support_max);
  return out;
}

double moment_error(const RealTensor& est, const RealTensor& exact) {
  if (est.extents() != exact.extents()) throw InvalidInput("moment_error: shape mismatch");
  return max_abs_difference(est, exact);
}

double moment_error(const ComplexTensor& est, const ComplexTensor& exact) {
  if (est.extents() != exact.extents()) throw InvalidInput("moment_error: shape mismatch");
  ComplexTensor diff(est.extents());
  for (std::size_t f = 0; f < diff.size(); ++f) diff[f] = est[f] - exact[f];
  const auto real = apply_each_mode(diff, delta_matrix(static_cast<int>(est.extent(0))));
  double worst = 0.0;
  for (const auto& v : real.data()) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace mra
