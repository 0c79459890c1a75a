#include "mra/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mra/errors.hpp"

namespace mra {

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

namespace binary {

namespace {
template <typename T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}
template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw InvalidInput("binary file truncated");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}
}  // namespace

void put_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void put_f64(std::ostream& out, double v) { put(out, v); }
std::uint32_t get_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get<std::uint64_t>(in); }
double get_f64(std::istream& in) { return get<double>(in); }

}  // namespace binary

namespace {

constexpr char kMagic[8] = {'M', 'R', 'A', 'T', 'N', 'S', 'R', '\0'};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return in;
}

void write_header(std::ostream& out, const ContainerHeader& h) {
  out.write(kMagic, sizeof(kMagic));
  binary::put_u32(out, h.version);
  binary::put_u32(out, h.p);
  binary::put_u32(out, h.K);
  binary::put_u32(out, h.d);
  binary::put_u32(out, static_cast<std::uint32_t>(h.layout));
  binary::put_u64(out, h.count);
}

ContainerHeader parse_header(std::istream& in, const std::string& path) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InvalidInput("'" + path + "' is not a tensor container");
  }
  ContainerHeader h;
  h.version = binary::get_u32(in);
  if (h.version != 1) throw InvalidInput("'" + path + "': unsupported version " + std::to_string(h.version));
  h.p = binary::get_u32(in);
  h.K = binary::get_u32(in);
  h.d = binary::get_u32(in);
  const auto layout = binary::get_u32(in);
  if (layout > 3) throw InvalidInput("'" + path + "': unknown layout " + std::to_string(layout));
  h.layout = static_cast<Layout>(layout);
  h.count = binary::get_u64(in);
  return h;
}

std::uint64_t cube_size(std::uint32_t p, std::uint32_t d) {
  std::uint64_t n = 1;
  for (std::uint32_t k = 0; k < d; ++k) n *= p;
  return n;
}

void expect(const ContainerHeader& h, Layout layout, const std::string& path) {
  if (h.layout != layout) throw InvalidInput("'" + path + "' has a different layout");
}

}  // namespace

ContainerHeader read_header(const std::string& path) {
  auto in = open_in(path);
  return parse_header(in, path);
}

void write_tensor(const std::string& path, const RealTensor& t, int K) {
  auto out = open_out(path);
  write_header(out, {1, static_cast<std::uint32_t>(t.order() ? t.extent(0) : 0), static_cast<std::uint32_t>(K),
                     static_cast<std::uint32_t>(t.order()), Layout::real_dense, t.size()});
  for (double v : t.data()) binary::put_f64(out, v);
}

void write_tensor(const std::string& path, const ComplexTensor& t, int K) {
  auto out = open_out(path);
  write_header(out, {1, static_cast<std::uint32_t>(t.order() ? t.extent(0) : 0), static_cast<std::uint32_t>(K),
                     static_cast<std::uint32_t>(t.order()), Layout::complex_dense, t.size()});
  for (const cplx& v : t.data()) {
    binary::put_f64(out, v.real());
    binary::put_f64(out, v.imag());
  }
}

RealTensor read_real_tensor(const std::string& path, ContainerHeader* header) {
  auto in = open_in(path);
  const auto h = parse_header(in, path);
  expect(h, Layout::real_dense, path);
  if (h.count != cube_size(h.p, h.d)) throw InvalidInput("'" + path + "': count does not match p^d");
  auto t = RealTensor::cube(h.d, h.p);
  for (auto& v : t.data()) v = binary::get_f64(in);
  if (header) *header = h;
  return t;
}

ComplexTensor read_complex_tensor(const std::string& path, ContainerHeader* header) {
  auto in = open_in(path);
  const auto h = parse_header(in, path);
  expect(h, Layout::complex_dense, path);
  if (h.count != cube_size(h.p, h.d)) throw InvalidInput("'" + path + "': count does not match p^d");
  auto t = ComplexTensor::cube(h.d, h.p);
  for (auto& v : t.data()) {
    const double re = binary::get_f64(in);
    v = cplx(re, binary::get_f64(in));
  }
  if (header) *header = h;
  return t;
}

void write_signals(const std::string& path, const SignalSet& signals) {
  const auto thetas = signals.real();
  auto out = open_out(path);
  write_header(out, {1, static_cast<std::uint32_t>(signals.p), static_cast<std::uint32_t>(signals.K()), 1,
                     Layout::signals, static_cast<std::uint64_t>(signals.p) * thetas.size()});
  for (const auto& t : thetas)
    for (Eigen::Index i = 0; i < t.size(); ++i) binary::put_f64(out, t(i));
}

SignalSet read_signals(const std::string& path) {
  auto in = open_in(path);
  const auto h = parse_header(in, path);
  expect(h, Layout::signals, path);
  if (h.count != static_cast<std::uint64_t>(h.p) * h.K) throw InvalidInput("'" + path + "': count mismatch");
  std::vector<RealVector> thetas(h.K, RealVector(h.p));
  for (auto& t : thetas)
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = binary::get_f64(in);
  return SignalSet::from_real(thetas);
}

void write_observations(const std::string& path, const ObservationBatch& batch) {
  auto out = open_out(path);
  write_header(out, {1, static_cast<std::uint32_t>(batch.p), 0, 1, Layout::observations,
                     static_cast<std::uint64_t>(batch.samples.size())});
  for (Eigen::Index c = 0; c < batch.samples.cols(); ++c)
    for (Eigen::Index r = 0; r < batch.samples.rows(); ++r) binary::put_f64(out, batch.samples(r, c));
}

ObservationBatch read_observations(const std::string& path) {
  auto in = open_in(path);
  const auto h = parse_header(in, path);
  expect(h, Layout::observations, path);
  if (h.p == 0 || h.count % h.p != 0) throw InvalidInput("'" + path + "': count is not a multiple of p");
  ObservationBatch batch;
  batch.p = static_cast<int>(h.p);
  batch.samples.resize(h.p, static_cast<Eigen::Index>(h.count / h.p));
  for (Eigen::Index c = 0; c < batch.samples.cols(); ++c)
    for (Eigen::Index r = 0; r < batch.samples.rows(); ++r) batch.samples(r, c) = binary::get_f64(in);
  return batch;
}

void write_tensor_csv(const std::string& path, const RealTensor& t) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  for (std::size_t k = 0; k < t.order(); ++k) out << 'i' << k + 1 << ',';
  out << "value\n";
  std::vector<std::size_t> idx(t.order());
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unravel(f, idx);
    for (auto i : idx) out << i << ',';
    out << t[f] << '\n';
  }
}

void write_tensor_csv(const std::string& path, const ComplexTensor& t, bool frequency_labels) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  for (std::size_t k = 0; k < t.order(); ++k) out << 'j' << k + 1 << ',';
  out << "re,im\n";
  std::vector<std::size_t> idx(t.order());
  const Frequencies f(t.order() ? static_cast<int>(t.extent(0)) : 2);
  for (std::size_t e = 0; e < t.size(); ++e) {
    t.unravel(e, idx);
    for (auto i : idx) {
      if (frequency_labels) {
        out << f.value(i) << ',';
      } else {
        out << i << ',';
      }
    }
    out << t[e].real() << ',' << t[e].imag() << '\n';
  }
}

void write_vectors_csv(const std::string& path, const std::vector<RealVector>& vectors) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  for (const auto& v : vectors) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v(i);
    out << '\n';
  }
}

std::vector<RealVector> read_vectors_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::vector<RealVector> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInput("'" + path + "': bad number '" + cell + "'");
      }
    }
    if (!out.empty() && static_cast<std::size_t>(out.front().size()) != vals.size()) {
      throw InvalidInput("'" + path + "': rows differ in length");
    }
    out.push_back(Eigen::Map<RealVector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return out;
}

}  // namespace mra
