#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mra/errors.hpp"
#include "mra/io.hpp"

using namespace mra;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mra-io-test";
  fs::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST(Io, RealAndComplexTensorsRoundTrip) {
  const auto r = testing_util::random_real(3, 6, 1);
  const auto c = testing_util::random_complex(3, 6, 2);
  write_tensor(scratch("r.bin"), r, 2);
  write_tensor(scratch("c.bin"), c, 3);
  ContainerHeader h;
  EXPECT_EQ(read_real_tensor(scratch("r.bin"), &h).data(), r.data());
  EXPECT_EQ(h.K, 2u);
  EXPECT_EQ(h.d, 3u);
  EXPECT_EQ(read_complex_tensor(scratch("c.bin"), &h).data(), c.data());
  EXPECT_EQ(h.layout, Layout::complex_dense);
}

TEST(Io, SignalsAndObservationsRoundTrip) {
  const auto signals = random_signals(8, 3, 4);
  write_signals(scratch("s.bin"), signals);
  const auto back = read_signals(scratch("s.bin"));
  ASSERT_EQ(back.K(), 3);
  for (int k = 0; k < 3; ++k)
    EXPECT_LT((back.real()[static_cast<std::size_t>(k)] - signals.real()[static_cast<std::size_t>(k)]).norm(), 1e-15);

  const auto batch = sample_observations(signals, 0.3, 25, 5);
  write_observations(scratch("o.bin"), batch);
  const auto obs = read_observations(scratch("o.bin"));
  EXPECT_EQ(obs.p, 8);
  EXPECT_EQ(obs.samples, batch.samples);
}

TEST(Io, VectorsCsvRoundTripsExactly) {
  const std::vector<RealVector> v{testing_util::random_vector(5, 1), testing_util::random_vector(5, 2)};
  write_vectors_csv(scratch("v.csv"), v);
  const auto back = read_vectors_csv(scratch("v.csv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], v[0]);
  EXPECT_EQ(back[1], v[1]);
}

TEST(Io, RejectsCorruptFiles) {
  {
    std::ofstream out(scratch("junk.bin"), std::ios::binary);
    out << "not a container at all";
  }
  EXPECT_THROW(read_real_tensor(scratch("junk.bin")), InvalidInput);
  EXPECT_THROW(read_real_tensor(scratch("missing.bin")), InvalidInput);

  write_tensor(scratch("t.bin"), testing_util::random_real(2, 4, 3));
  fs::resize_file(scratch("t.bin"), fs::file_size(scratch("t.bin")) - 8);
  EXPECT_THROW(read_real_tensor(scratch("t.bin")), InvalidInput);

  write_tensor(scratch("wrong.bin"), testing_util::random_complex(2, 4, 3));
  EXPECT_THROW(read_real_tensor(scratch("wrong.bin")), InvalidInput);

  {
    std::ofstream out(scratch("ragged.csv"));
    out << "1,2,3\n4,5\n";
  }
  EXPECT_THROW(read_vectors_csv(scratch("ragged.csv")), InvalidInput);
  {
    std::ofstream out(scratch("nan.csv"));
    out << "1,abc\n";
  }
  EXPECT_THROW(read_vectors_csv(scratch("nan.csv")), InvalidInput);
}
