#include "mra/baselines.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mra/errors.hpp"
#include "mra/network.hpp"
#include "mra/parallel.hpp"
#include "mra/rng.hpp"

namespace mra {

FourierVector frequency_marching(const ComplexTensor& t2_hat, const ComplexTensor& t3_hat, double min_magnitude) {
  if (t2_hat.order() != 2 || t3_hat.order() != 3) throw InvalidInput("frequency_marching: expected T̂₂ and T̂₃");
  const int p = static_cast<int>(t2_hat.extent(0));
  if (t3_hat.extent(0) != t2_hat.extent(0)) throw InvalidInput("frequency_marching: moments differ in p");
  const Frequencies f(p);
  const int half = p / 2;
  std::vector<double> mag(static_cast<std::size_t>(half) + 1, 0.0);
  for (int j = 1; j <= half; ++j) {
    const double power = t2_hat.at({f.position(j), f.position(-j)}).real();
    mag[static_cast<std::size_t>(j)] = std::sqrt(std::max(power, 0.0));
    if (!(mag[static_cast<std::size_t>(j)] >= min_magnitude)) {
      std::ostringstream msg;
      msg << "frequency_marching: |θ̂_" << j << "| = " << std::scientific << std::setprecision(3)
          << mag[static_cast<std::size_t>(j)] << " is below " << min_magnitude << " at frequency " << j;
      throw InvalidInput(msg.str());
    }
  }
  std::vector<double> phase(static_cast<std::size_t>(half) + 1, 0.0);
  auto t3 = [&](int a, int b, int c) { return t3_hat.at({f.position(a), f.position(b), f.position(c)}); };
  if (half >= 2) phase[2] = std::arg(t3(-1, -1, 2)) + 2.0 * phase[1];
  for (int j = 3; j <= half; ++j) {
    phase[static_cast<std::size_t>(j)] =
        std::arg(t3(-1, -(j - 1), j)) + phase[1] + phase[static_cast<std::size_t>(j - 1)];
  }
  Eigen::VectorXcd out(p);
  for (int j = 1; j <= half; ++j) {
    const cplx v = std::polar(mag[static_cast<std::size_t>(j)], phase[static_cast<std::size_t>(j)]);
    out(static_cast<Eigen::Index>(f.position(j))) = v;
    out(static_cast<Eigen::Index>(f.position(-j))) = std::conj(v);
  }
  return FourierVector(out);
}

PcaInstance make_pca_instance(int p, double lambda, std::uint64_t seed, std::uint64_t draw, bool noise) {
  if (p < 1) throw InvalidInput("make_pca_instance: p must be positive");
  PcaInstance in{p, lambda, RealVector(p), RealTensor::cube(3, static_cast<std::size_t>(p))};
  Stream xs(seed, "pca-x", draw);
  for (int i = 0; i < p; ++i) in.x(i) = xs.normal();
  in.x.normalize();
  const auto planted = outer_power(in.x, 3);
  Stream ws(seed, "pca-noise", draw);
  for (std::size_t k = 0; k < in.T.size(); ++k) in.T[k] = lambda * planted[k] + (noise ? ws.normal() : 0.0);
  return in;
}

const char* to_string(PcaMethod m) {
  switch (m) {
    case PcaMethod::unfolding: return "unfolding";
    case PcaMethod::spectral_sos: return "spectral_sos";
    case PcaMethod::partial_trace: return "partial_trace";
    case PcaMethod::homotopy_init: return "homotopy_init";
  }
  return "?";
}

PcaMethod parse_pca_method(const std::string& name) {
  for (auto m : kAllPcaMethods)
    if (name == to_string(m)) return m;
  throw InvalidInput("unknown PCA method '" + name + "'");
}

namespace {

std::size_t extent3(const RealTensor& t) {
  if (t.order() != 3 || t.extent(1) != t.extent(0) || t.extent(2) != t.extent(0)) {
    throw InvalidInput("PCA methods need a cubic order-3 tensor");
  }
  return t.extent(0);
}

// Row-major p × p² unfolding; entry (a, j·p + k) = T_ajk.
Eigen::MatrixXd unfold(const RealTensor& t) {
  const auto p = static_cast<Eigen::Index>(extent3(t));
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(t.data().data(), p,
                                                                                                    p * p);
}

Eigen::MatrixXd real_matrix(const ComplexTensor& t) {
  const auto r = static_cast<Eigen::Index>(t.extent(0)), c = static_cast<Eigen::Index>(t.extent(1));
  Eigen::MatrixXd out(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out(i, j) = t[static_cast<std::size_t>(i * c + j)].real();
  return out;
}

}  // namespace

Eigen::MatrixXd unfolding_gram(const RealTensor& t, PcaPath path) {
  extent3(t);
  if (path == PcaPath::network) return real_matrix(contract(networks::unfolding_gram(), {{"T", to_complex(t)}}));
  const Eigen::MatrixXd u = unfold(t);
  return u * u.transpose();
}

Eigen::MatrixXd slice_kron_sum(const RealTensor& t, PcaPath path) {
  const auto p = extent3(t);
  if (path == PcaPath::network) return flatten4(contract(networks::slice_kron_sum(), {{"T", to_complex(t)}})).real();
  const auto n = static_cast<Eigen::Index>(p * p);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t c = 0; c < p; ++c) {
        const double tac = t.at({i, a, c});
        if (tac == 0.0) continue;
        for (std::size_t b = 0; b < p; ++b)
          for (std::size_t d = 0; d < p; ++d)
            out(static_cast<Eigen::Index>(a * p + b), static_cast<Eigen::Index>(c * p + d)) += tac * t.at({i, b, d});
      }
  return out;
}

Eigen::MatrixXd partial_trace_matrix(const RealTensor& t, PcaPath path) {
  const auto p = extent3(t);
  if (path == PcaPath::network) return real_matrix(contract(networks::partial_trace(), {{"T", to_complex(t)}}));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    double tr = 0.0;
    for (std::size_t l = 0; l < p; ++l) tr += t.at({i, l, l});
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t c = 0; c < p; ++c)
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) += tr * t.at({i, a, c});
  }
  return out;
}

RealVector homotopy_vector(const RealTensor& t, PcaPath path) {
  const auto p = extent3(t);
  if (path == PcaPath::network) {
    const auto z = contract(networks::homotopy_init(), {{"T", to_complex(t)}});
    RealVector out(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) out(static_cast<Eigen::Index>(j)) = z[j].real();
    return out;
  }
  RealVector z = RealVector::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) z(static_cast<Eigen::Index>(j)) += t.at({i, i, j});
  return z;
}

RealVector pca_estimate(const RealTensor& t, PcaMethod method, PcaPath path, const EigenOptions& eigen) {
  const auto p = static_cast<Eigen::Index>(extent3(t));
  RealVector est;
  switch (method) {
    case PcaMethod::unfolding:
      est = leading_eigenvector(symmetrize(unfolding_gram(t, path)), EigenMode::largest_algebraic, eigen).vector;
      break;
    case PcaMethod::spectral_sos: {
      const auto top =
          leading_eigenvector(symmetrize(slice_kron_sum(t, path)), EigenMode::largest_algebraic, eigen).vector;
      const Eigen::MatrixXd v = reshape_square(top);
      est = leading_eigenvector(symmetrize(v), EigenMode::largest_absolute, eigen).vector;
      break;
    }
    case PcaMethod::partial_trace:
      est = leading_eigenvector(symmetrize(partial_trace_matrix(t, path)), EigenMode::largest_absolute, eigen).vector;
      break;
    case PcaMethod::homotopy_init: {
      est = homotopy_vector(t, path);
      const double n = est.norm();
      if (n == 0.0) est = RealVector::Unit(p, 0);
      else est /= n;
      break;
    }
  }
  canonicalize_sign(est);
  return est;
}

std::vector<PcaRecord> pca_sweep(int p, double lambda, int draws, std::uint64_t seed,
                                 const std::vector<PcaMethod>& methods, int threads) {
  if (draws < 1) throw InvalidInput("pca_sweep: draws must be positive");
  std::vector<PcaRecord> out(static_cast<std::size_t>(draws) * methods.size());
  parallel_for(static_cast<std::size_t>(draws), threads, [&](std::size_t d) {
    const auto in = make_pca_instance(p, lambda, seed, d);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto est = pca_estimate(in.T, methods[m]);
      const double c = est.dot(in.x);
      out[d * methods.size() + m] = {static_cast<int>(d), p, lambda, methods[m], c * c};
    }
  });
  return out;
}

void write_pca_csv(const std::string& path, const std::vector<PcaRecord>& records) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "draw,lambda,p,method,correlation\n";
  for (const auto& r : records) out << r.draw << ',' << r.lambda << ',' << r.p << ',' << to_string(r.method) << ',' << r.corr << '\n';
}

}  // namespace mra
