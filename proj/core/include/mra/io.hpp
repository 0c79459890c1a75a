#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mra/moments.hpp"
#include "mra/tensor.hpp"

namespace mra {

/// Binary container:
///   8 bytes  magic "MRATNSR\0"
///   u32      version (1)
///   u32      p
///   u32      K
///   u32      d       (tensor order, or 1 for vectors/observations)
///   u32      layout  (see Layout)
///   u64      count   (number of payload values, each one f64 or one f64 pair)
/// then the little-endian f64 payload in row-major canonical order.
enum class Layout : std::uint32_t {
  real_dense = 0,     ///< real tensor, extent p per mode
  complex_dense = 1,  ///< complex tensor as (re, im) pairs
  observations = 2,   ///< p × n real samples, one column after another
  signals = 3,        ///< K real signals of length p
};

struct ContainerHeader {
  std::uint32_t version = 1;
  std::uint32_t p = 0;
  std::uint32_t K = 0;
  std::uint32_t d = 0;
  Layout layout = Layout::real_dense;
  std::uint64_t count = 0;
};

namespace binary {
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
}  // namespace binary

void write_tensor(const std::string& path, const RealTensor& t, int K = 1);
void write_tensor(const std::string& path, const ComplexTensor& t, int K = 1);
RealTensor read_real_tensor(const std::string& path, ContainerHeader* header = nullptr);
ComplexTensor read_complex_tensor(const std::string& path, ContainerHeader* header = nullptr);

void write_signals(const std::string& path, const SignalSet& signals);
SignalSet read_signals(const std::string& path);

void write_observations(const std::string& path, const ObservationBatch& batch);
ObservationBatch read_observations(const std::string& path);

ContainerHeader read_header(const std::string& path);

/// One row per entry: index columns (frequencies for Fourier tensors,
/// coordinates for real ones), then value (re, im for complex).
void write_tensor_csv(const std::string& path, const RealTensor& t);
void write_tensor_csv(const std::string& path, const ComplexTensor& t, bool frequency_labels = true);
/// Columns: one row per vector, entries in order.
void write_vectors_csv(const std::string& path, const std::vector<RealVector>& vectors);
std::vector<RealVector> read_vectors_csv(const std::string& path);

}  // namespace mra
