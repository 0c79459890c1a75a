#include "mra/ring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mra/errors.hpp"
#include "mra/parallel.hpp"

namespace mra {

namespace {

// Position arithmetic on ±[p/2]: sub(i, x) is the position of value(i) - value(x),
// or -1 when that difference is 0 or out of range.
class Chain {
 public:
  explicit Chain(int p) : p_(p), freq_(p), table_(4 * static_cast<std::size_t>(p) + 1, -1) {
    for (int k = 0; k < p; ++k) value_.push_back(freq_.value(static_cast<std::size_t>(k)));
    for (int f = -2 * p; f <= 2 * p; ++f) table_[static_cast<std::size_t>(f + 2 * p)] = freq_.position_or_invalid(f);
  }
  int sub(int i, int x) const { return table_[static_cast<std::size_t>(value_[i] - value_[x] + 2 * p_)]; }
  int pos(int f) const {
    return (f < -2 * p_ || f > 2 * p_) ? -1 : table_[static_cast<std::size_t>(f + 2 * p_)];
  }
  int value(int k) const { return value_[static_cast<std::size_t>(k)]; }
  int neg(int k) const { return p_ - 1 - k; }

 private:
  int p_;
  Frequencies freq_;
  std::vector<int> value_;
  std::vector<int> table_;
};

template <typename Scalar>
bool is_zero(const Scalar& s) {
  return s == Scalar{};
}

template <typename Scalar>
void check_sizes(int p, const std::vector<Scalar>& w, const std::vector<Scalar>& u,
                 const std::vector<double>* mask) {
  const auto n = static_cast<std::size_t>(p);
  if (w.size() != n * n) throw InvalidInput("ring: weight table must be p×p");
  if (u.size() != n * n * n * n * n) throw InvalidInput("ring: u must have p⁵ entries");
  if (mask && mask->size() != n * n * n * n) throw InvalidInput("ring: mask must have p⁴ entries");
}

template <typename Scalar>
std::vector<Scalar> ring_direct(int p, const std::vector<Scalar>& w, const std::vector<Scalar>& u,
                                const std::vector<double>* mask, int threads) {
  const Chain ch(p);
  const auto n = static_cast<std::size_t>(p);
  std::vector<Scalar> out(n * n * n * n);
  auto W = [&](int x, int i) { return w[static_cast<std::size_t>(x) * n + static_cast<std::size_t>(i)]; };
  auto U = [&](int q1, int q2, int q3, int q4, int q5) {
    return u[(((static_cast<std::size_t>(q1) * n + q2) * n + q3) * n + q4) * n + q5];
  };
  parallel_for(n * n * n * n, threads, [&](std::size_t e) {
    if (mask && (*mask)[e] == 0.0) return;
    const int a = static_cast<int>(e / (n * n * n));
    const int b = static_cast<int>(e / (n * n) % n);
    const int c = static_cast<int>(e / n % n);
    const int d = static_cast<int>(e % n);
    Scalar acc{};
    for (int i1 = 0; i1 < p; ++i1) {
      const int i2 = ch.sub(i1, a);
      if (i2 < 0) continue;
      const Scalar f1 = W(a, i1);
      if (is_zero(f1)) continue;
      for (int j1 = 0; j1 < p; ++j1) {
        const int i3 = ch.sub(i2, j1);
        if (i3 < 0) continue;
        const int i4 = ch.sub(i3, c);
        if (i4 < 0) continue;
        const Scalar f3 = f1 * W(j1, i2) * W(c, i3);
        if (is_zero(f3)) continue;
        for (int j2 = 0; j2 < p; ++j2) {
          const int i5 = ch.sub(i4, j2);
          if (i5 < 0) continue;
          const int i6 = ch.sub(i5, b);
          if (i6 < 0) continue;
          const Scalar f5 = f3 * W(j2, i4) * W(b, i5);
          if (is_zero(f5)) continue;
          for (int j3 = 0; j3 < p; ++j3) {
            const int i7 = ch.sub(i6, j3);
            if (i7 < 0) continue;
            const int i8 = ch.sub(i7, d);
            if (i8 < 0) continue;
            const Scalar f7 = f5 * W(j3, i6) * W(d, i7);
            if (is_zero(f7)) continue;
            for (int j4 = 0; j4 < p; ++j4) {
              const int i9 = ch.sub(i8, j4);
              if (i9 < 0) continue;
              const int j5 = ch.sub(i9, i1);
              if (j5 < 0) continue;
              acc += f7 * W(j4, i8) * W(j5, i9) *
                     U(ch.neg(j1), ch.neg(j2), ch.neg(j3), ch.neg(j4), ch.neg(j5));
            }
          }
        }
      }
    }
    out[e] = acc;
  });
  return out;
}

template <typename Scalar>
struct HalfChain {
  int i1, q1, q2, i5;  // q = position of -j
  Scalar value;
};

template <typename Scalar>
std::vector<Scalar> ring_factorized(int p, const std::vector<Scalar>& w, const std::vector<Scalar>& u,
                                    const std::vector<double>* mask, int threads) {
  const Chain ch(p);
  const auto n = static_cast<std::size_t>(p);
  auto W = [&](int x, int i) { return w[static_cast<std::size_t>(x) * n + static_cast<std::size_t>(i)]; };

  // û permuted so that the (j₁, j₂) block is contiguous: U2[q3][q4][q5][q1][q2].
  std::vector<Scalar> u2(u.size());
  for (std::size_t f = 0; f < u.size(); ++f) {
    const std::size_t q5 = f % n, q4 = f / n % n, q3 = f / (n * n) % n;
    const std::size_t q2 = f / (n * n * n) % n, q1 = f / (n * n * n * n);
    u2[(((q3 * n + q4) * n + q5) * n + q1) * n + q2] = u[f];
  }

  // Left half: vertices 1–4 for each (a, c).
  std::vector<std::vector<HalfChain<Scalar>>> left(n * n);
  for (int a = 0; a < p; ++a) {
    for (int c = 0; c < p; ++c) {
      auto& list = left[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(c)];
      for (int i1 = 0; i1 < p; ++i1) {
        const int i2 = ch.sub(i1, a);
        if (i2 < 0 || is_zero(W(a, i1))) continue;
        for (int j1 = 0; j1 < p; ++j1) {
          const int i3 = ch.sub(i2, j1);
          if (i3 < 0) continue;
          const int i4 = ch.sub(i3, c);
          if (i4 < 0) continue;
          const Scalar f3 = W(a, i1) * W(j1, i2) * W(c, i3);
          if (is_zero(f3)) continue;
          for (int j2 = 0; j2 < p; ++j2) {
            const int i5 = ch.sub(i4, j2);
            if (i5 < 0) continue;
            const Scalar f4 = f3 * W(j2, i4);
            if (is_zero(f4)) continue;
            list.push_back({i1, ch.neg(j1), ch.neg(j2), i5, f4});
          }
        }
      }
    }
  }

  std::vector<Scalar> out(n * n * n * n);
  const std::size_t block = n * n;  // one (q1, q2) slab
  parallel_for(n * n, threads, [&](std::size_t bd) {
    const int b = static_cast<int>(bd / n);
    const int d = static_cast<int>(bd % n);
    if (mask) {
      bool any = false;
      for (std::size_t a = 0; a < n && !any; ++a) {
        for (std::size_t c = 0; c < n && !any; ++c) {
          any = (*mask)[((a * n + static_cast<std::size_t>(b)) * n + c) * n + static_cast<std::size_t>(d)] != 0.0;
        }
      }
      if (!any) return;
    }
    // X[i5][i1][q1][q2] = Σ_{j3,j4} (vertices 5–9) · û.
    std::vector<Scalar> x(n * n * block);
    for (int i5 = 0; i5 < p; ++i5) {
      const int i6 = ch.sub(i5, b);
      if (i6 < 0 || is_zero(W(b, i5))) continue;
      for (int j3 = 0; j3 < p; ++j3) {
        const int i7 = ch.sub(i6, j3);
        if (i7 < 0) continue;
        const int i8 = ch.sub(i7, d);
        if (i8 < 0) continue;
        const Scalar f7 = W(b, i5) * W(j3, i6) * W(d, i7);
        if (is_zero(f7)) continue;
        for (int j4 = 0; j4 < p; ++j4) {
          const int i9 = ch.sub(i8, j4);
          if (i9 < 0) continue;
          const Scalar f8 = f7 * W(j4, i8);
          if (is_zero(f8)) continue;
          for (int i1 = 0; i1 < p; ++i1) {
            const int j5 = ch.sub(i9, i1);
            if (j5 < 0) continue;
            const Scalar coef = f8 * W(j5, i9);
            if (is_zero(coef)) continue;
            const Scalar* src = u2.data() +
                (((static_cast<std::size_t>(ch.neg(j3)) * n + static_cast<std::size_t>(ch.neg(j4))) * n +
                  static_cast<std::size_t>(ch.neg(j5))) * block);
            Scalar* dst = x.data() + (static_cast<std::size_t>(i5) * n + static_cast<std::size_t>(i1)) * block;
            for (std::size_t k = 0; k < block; ++k) dst[k] += coef * src[k];
          }
        }
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t e = ((a * n + static_cast<std::size_t>(b)) * n + c) * n + static_cast<std::size_t>(d);
        if (mask && (*mask)[e] == 0.0) continue;
        Scalar acc{};
        for (const auto& h : left[a * n + c]) {
          acc += h.value * x[((static_cast<std::size_t>(h.i5) * n + static_cast<std::size_t>(h.i1)) * n +
                              static_cast<std::size_t>(h.q1)) * n + static_cast<std::size_t>(h.q2)];
        }
        out[e] = acc;
      }
    }
  });
  return out;
}

}  // namespace

template <typename Scalar>
std::vector<Scalar> ring_sums(int p, const std::vector<Scalar>& w, const std::vector<Scalar>& u,
                              const std::vector<double>* mask, const RingOptions& options) {
  Frequencies{p};
  check_sizes(p, w, u, mask);
  if (options.method == RingMethod::direct) return ring_direct(p, w, u, mask, options.threads);
  return ring_factorized(p, w, u, mask, options.threads);
}

template std::vector<double> ring_sums(int, const std::vector<double>&, const std::vector<double>&,
                                       const std::vector<double>*, const RingOptions&);
template std::vector<cplx> ring_sums(int, const std::vector<cplx>&, const std::vector<cplx>&,
                                     const std::vector<double>*, const RingOptions&);

VertexWeightTable::VertexWeightTable(int p, int K, Eigen::MatrixXcd w) : p_(p), K_(K), w_(std::move(w)) {
  Frequencies freq(p);
  if (w_.rows() != p || w_.cols() != p) throw InvalidInput("VertexWeightTable: expected a p×p table");
  for (int x = 0; x < p; ++x) {
    for (int i = 0; i < p; ++i) {
      if (!freq.contains(freq.value(static_cast<std::size_t>(i)) - freq.value(static_cast<std::size_t>(x))) &&
          w_(x, i) != cplx{}) {
        throw InvalidInput("VertexWeightTable: nonzero weight where i - x is not a frequency");
      }
    }
  }
}

VertexWeightTable VertexWeightTable::from_moment(const ComplexTensor& t3, int K) {
  if (t3.order() != 3) throw InvalidInput("VertexWeightTable: moment must have order 3");
  const int p = static_cast<int>(t3.extent(0));
  const Chain ch(p);
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(p, p);
  for (int x = 0; x < p; ++x) {
    for (int i = 0; i < p; ++i) {
      const int r = ch.sub(i, x);
      if (r < 0) continue;
      w(x, i) = t3.at({static_cast<std::size_t>(ch.neg(i)), static_cast<std::size_t>(x), static_cast<std::size_t>(r)});
    }
  }
  return VertexWeightTable(p, K, std::move(w));
}

VertexWeightTable VertexWeightTable::from_signals(const std::vector<FourierVector>& signals) {
  if (signals.empty()) throw InvalidInput("VertexWeightTable: no signals");
  const int p = signals.front().p();
  const Chain ch(p);
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(p, p);
  ComplexTensor t3 = ComplexTensor::cube(3, static_cast<std::size_t>(p));
  for (const auto& s : signals) {
    if (s.p() != p) throw InvalidInput("VertexWeightTable: signals differ in p");
    const auto& v = s.coeffs();
    for (int x = 0; x < p; ++x) {
      for (int i = 0; i < p; ++i) {
        const int r = ch.sub(i, x);
        if (r < 0) continue;
        w(x, i) += v(ch.neg(i)) * v(x) * v(r);
        t3.at({static_cast<std::size_t>(ch.neg(i)), static_cast<std::size_t>(x), static_cast<std::size_t>(r)}) +=
            v(ch.neg(i)) * v(x) * v(r);
      }
    }
  }
  VertexWeightTable out(p, static_cast<int>(signals.size()), std::move(w));
  const auto check = from_moment(t3, out.K());
  const double scale = std::max(1e-300, out.w_.cwiseAbs().maxCoeff());
  if ((check.w_ - out.w_).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NumericalError("VertexWeightTable: product formula disagrees with the summed moment");
  }
  return out;
}

namespace {

Eigen::MatrixXcd to_flat(int p, const std::vector<cplx>& entries, const CorrectionTable& S) {
  const auto n = static_cast<std::size_t>(p);
  Eigen::MatrixXcd m(p * p, p * p);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
          const auto e = S.flat(a, b, c, d);
          m(static_cast<Eigen::Index>(a * n + b), static_cast<Eigen::Index>(c * n + d)) = S.data()[e] * entries[e];
        }
  return m;
}

void check_inputs(int p, const ComplexTensor& u_hat, const CorrectionTable& S) {
  if (S.p() != p) throw InvalidInput("ring_contract: correction table has p=" + std::to_string(S.p()) +
                                     ", expected " + std::to_string(p));
  if (u_hat.order() != 5 || u_hat.extent(0) != static_cast<std::size_t>(p)) {
    throw InvalidInput("ring_contract: û must be an order-5 tensor with extent p");
  }
}

}  // namespace

Eigen::MatrixXcd ring_contract(const VertexWeightTable& wt, const ComplexTensor& u_hat,
                               const CorrectionTable& S, const RingOptions& options) {
  const int p = wt.p();
  check_inputs(p, u_hat, S);
  const auto n = static_cast<std::size_t>(p);
  std::vector<cplx> w(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t i = 0; i < n; ++i) w[x * n + i] = wt(x, i);
  const auto sums = ring_sums<cplx>(p, w, u_hat.data(), &S.data(), options);
  return to_flat(p, sums, S);
}

std::size_t ring_factor_cache_bytes(int p) {
  const auto n = static_cast<std::size_t>(p);
  const std::size_t p4 = n * n * n * n;
  if (p4 != 0 && p4 > std::numeric_limits<std::size_t>::max() / p4 / sizeof(cplx)) {
    return std::numeric_limits<std::size_t>::max();
  }
  return p4 * p4 * sizeof(cplx);
}

RingFactorCache precompute_G(const VertexWeightTable& wt, std::size_t max_bytes, int threads) {
  const int p = wt.p();
  const std::size_t need = ring_factor_cache_bytes(p);
  if (need > max_bytes) {
    throw BudgetExceeded("ring factor cache needs " + std::to_string(need) + " bytes, cap is " +
                             std::to_string(max_bytes),
                         0);
  }
  const Chain ch(p);
  const auto n = static_cast<std::size_t>(p);
  const std::size_t p4 = n * n * n * n;
  RingFactorCache cache;
  cache.p_ = p;
  cache.g_.assign(p4 * p4, cplx{});
  auto W = [&](int x, int i) { return wt(static_cast<std::size_t>(x), static_cast<std::size_t>(i)); };
  parallel_for(p4, threads, [&](std::size_t e) {
    const int a = static_cast<int>(e / (n * n * n));
    const int b = static_cast<int>(e / (n * n) % n);
    const int c = static_cast<int>(e / n % n);
    const int d = static_cast<int>(e % n);
    cplx* g = cache.g_.data() + e * p4;
    for (int i1 = 0; i1 < p; ++i1) {
      const int i2 = ch.sub(i1, a);
      if (i2 < 0) continue;
      for (int j1 = 0; j1 < p; ++j1) {
        const int i3 = ch.sub(i2, j1);
        if (i3 < 0) continue;
        const int i4 = ch.sub(i3, c);
        if (i4 < 0) continue;
        const cplx f3 = W(a, i1) * W(j1, i2) * W(c, i3);
        if (f3 == cplx{}) continue;
        for (int j2 = 0; j2 < p; ++j2) {
          const int i5 = ch.sub(i4, j2);
          if (i5 < 0) continue;
          const int i6 = ch.sub(i5, b);
          if (i6 < 0) continue;
          const cplx f5 = f3 * W(j2, i4) * W(b, i5);
          for (int j3 = 0; j3 < p; ++j3) {
            const int i7 = ch.sub(i6, j3);
            if (i7 < 0) continue;
            const int i8 = ch.sub(i7, d);
            if (i8 < 0) continue;
            const cplx f7 = f5 * W(j3, i6) * W(d, i7);
            for (int j4 = 0; j4 < p; ++j4) {
              const int i9 = ch.sub(i8, j4);
              if (i9 < 0) continue;
              const int j5 = ch.sub(i9, i1);
              if (j5 < 0) continue;
              g[((static_cast<std::size_t>(j1) * n + j2) * n + j3) * n + j4] += f7 * W(j4, i8) * W(j5, i9);
            }
          }
        }
      }
    }
  });
  return cache;
}

Eigen::MatrixXcd ring_contract(const RingFactorCache& g, const ComplexTensor& u_hat,
                               const CorrectionTable& S, int threads) {
  const int p = g.p();
  check_inputs(p, u_hat, S);
  const Chain ch(p);
  const auto n = static_cast<std::size_t>(p);
  const std::size_t p4 = n * n * n * n;
  std::vector<cplx> sums(p4);
  parallel_for(p4, threads, [&](std::size_t e) {
    if (S.data()[e] == 0.0) return;
    const int base = ch.value(static_cast<int>(e / (n * n * n))) + ch.value(static_cast<int>(e / (n * n) % n)) +
                     ch.value(static_cast<int>(e / n % n)) + ch.value(static_cast<int>(e % n));
    const cplx* row = g.data().data() + e * p4;
    cplx acc{};
    for (std::size_t f = 0; f < p4; ++f) {
      if (row[f] == cplx{}) continue;
      const int j1 = static_cast<int>(f / (n * n * n)), j2 = static_cast<int>(f / (n * n) % n);
      const int j3 = static_cast<int>(f / n % n), j4 = static_cast<int>(f % n);
      const int j5 = ch.pos(-(base + ch.value(j1) + ch.value(j2) + ch.value(j3) + ch.value(j4)));
      if (j5 < 0) continue;
      acc += row[f] * u_hat.at({static_cast<std::size_t>(ch.neg(j1)), static_cast<std::size_t>(ch.neg(j2)),
                                static_cast<std::size_t>(ch.neg(j3)), static_cast<std::size_t>(ch.neg(j4)),
                                static_cast<std::size_t>(ch.neg(j5))});
    }
    sums[e] = acc;
  });
  return to_flat(p, sums, S);
}

Eigen::MatrixXd hsss_matrix(const RealTensor& t, const RealVector& u) {
  if (t.order() != 3) throw InvalidInput("hsss_matrix: T must have order 3");
  const auto n = t.extent(0);
  if (t.extent(1) != n || t.extent(2) != n || static_cast<std::size_t>(u.size()) != n) {
    throw InvalidInput("hsss_matrix: dimension mismatch");
  }
  // Y_jk = Σ_i T_ijk u_i
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) y(j, k) += t.at({i, j, k}) * u(static_cast<Eigen::Index>(i));
  const auto nn = static_cast<Eigen::Index>(n * n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nn, nn);
  // Z_{bd,j} = Σ_k T_bdk Y_jk, then M_{ab,cd} = Σ_j T_acj Z_{bd,j}.
  Eigen::MatrixXd tf(nn, static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t j = 0; j < n; ++j) tf(static_cast<Eigen::Index>(a * n + c), j) = t.at({a, c, j});
  const Eigen::MatrixXd z = tf * y.transpose();
  const Eigen::MatrixXd ac_bd = tf * z.transpose();  // rows (a,c), cols (b,d)
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
          m(static_cast<Eigen::Index>(a * n + b), static_cast<Eigen::Index>(c * n + d)) =
              ac_bd(static_cast<Eigen::Index>(a * n + c), static_cast<Eigen::Index>(b * n + d));
  return m;
}

Eigen::MatrixXd hsss_matrix_rank_form(const std::vector<RealVector>& components, const RealVector& u) {
  if (components.empty()) throw InvalidInput("hsss_matrix_rank_form: no components");
  const auto n = u.size();
  for (const auto& a : components) {
    if (a.size() != n) throw InvalidInput("hsss_matrix_rank_form: dimension mismatch");
  }
  const auto r = components.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      double coef = 0.0;
      for (const auto& at : components) coef += u.dot(at) * at.dot(components[i]) * at.dot(components[j]);
      Eigen::VectorXd v(n * n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) v(a * n + b) = components[i](a) * components[j](b);
      m.noalias() += coef * v * v.transpose();
    }
  }
  return m;
}

}  // namespace mra
