#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "oracles.hpp"
#include "segfuse/error.hpp"
#include "segfuse/npy.hpp"

namespace segfuse {
namespace {

using testing::TempDir;

// Hand-rolled v1.0 file, independent of the encoder.
std::string npy_bytes(const std::string& dict, const std::string& payload, char major = 1) {
  std::string header = dict;
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string out("\x93NUMPY", 6);
  out.push_back(major);
  out.push_back(0);
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>(header.size() >> 8));
  return out + header + payload;
}

std::string float_payload(std::initializer_list<float> values) {
  std::string out;
  for (float v : values) out.append(reinterpret_cast<const char*>(&v), sizeof v);
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

TEST(Npy, SingleClassTensorFromHandWrittenFile) {
  TempDir dir("npy");
  write_file(dir / "one.npy",
             npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 1), }", float_payload({1.0f})));
  const ProbTensor t = read_prob_tensor(dir / "one.npy");
  EXPECT_EQ(t.height(), 1);
  EXPECT_EQ(t.width(), 1);
  EXPECT_EQ(t.classes(), 1);
  EXPECT_EQ(t.at(0, 0, 0), 1.0f);
}

TEST(Npy, MaskWithIgnorePixel) {
  TempDir dir("npy");
  write_file(dir / "m.npy", npy_bytes("{'descr': '|u1', 'fortran_order': False, 'shape': (2, 2), }",
                                      std::string("\x00\x01\xff\x00", 4)));
  const LabelMask m = read_label_mask(dir / "m.npy");
  EXPECT_EQ(m.at(0, 0), 0);
  EXPECT_EQ(m.at(0, 1), 1);
  EXPECT_EQ(m.at(1, 0), kIgnoreLabel);
  EXPECT_EQ(m.at(1, 1), 0);
}

TEST(Npy, EncodedHeaderLayout) {
  NpyArray a;
  a.shape = {2, 3};
  a.floats = {0, 1, 2, 3, 4, 5};
  const std::string bytes = encode_npy(a);
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(bytes.substr(0, 6), std::string("\x93NUMPY", 6));
  EXPECT_EQ(bytes[6], 1);
  EXPECT_EQ(bytes[7], 0);
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  EXPECT_EQ(bytes[10 + header_len - 1], '\n');
  EXPECT_EQ(bytes.size(), 10 + header_len + 6 * sizeof(float));
  const std::string header = bytes.substr(10, header_len);
  EXPECT_NE(header.find("'<f4'"), std::string::npos);
  EXPECT_NE(header.find("(2, 3)"), std::string::npos);
  float third = 0;
  std::memcpy(&third, bytes.data() + 10 + header_len + 2 * sizeof(float), sizeof third);
  EXPECT_EQ(third, 2.0f);
}

TEST(Npy, RandomTensorRoundTripKeepsPayloadBytes) {
  TempDir dir("npy");
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ProbTensor t = testing::random_probs(rng, 4, 4, 3);
    write_tensor(t, dir / "t.npy");
    const ProbTensor back = read_prob_tensor(dir / "t.npy");
    ASSERT_EQ(back, t);
    ASSERT_EQ(std::memcmp(back.data().data(), t.data().data(), t.data().size_bytes()), 0);
  }
}

TEST(Npy, RandomShapesRoundTripInMemory) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_int_distribution<int> byte(0, 255);
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 200; ++trial) {
    NpyArray a;
    a.dtype = trial % 2 ? NpyDtype::kUInt8 : NpyDtype::kFloat32;
    const std::size_t rank = 1 + trial % 4;
    for (std::size_t i = 0; i < rank; ++i) a.shape.push_back(dim(rng));
    for (std::size_t i = 0; i < a.element_count(); ++i) {
      if (a.dtype == NpyDtype::kUInt8) {
        a.bytes.push_back(static_cast<std::uint8_t>(byte(rng)));
      } else {
        a.floats.push_back(normal(rng));
      }
    }
    const NpyArray b = decode_npy(encode_npy(a));
    ASSERT_EQ(b.dtype, a.dtype);
    ASSERT_EQ(b.shape, a.shape);
    ASSERT_EQ(b.floats, a.floats);
    ASSERT_EQ(b.bytes, a.bytes);
  }
}

TEST(Npy, TwoClassTensorRoundTrip) {
  TempDir dir("npy");
  const ProbTensor t(1, 1, 2, {0.5f, 0.5f});
  write_tensor(t, dir / "t.npy");
  EXPECT_EQ(read_prob_tensor(dir / "t.npy"), t);
}

TEST(Npy, PriorFieldRoundTripBothModes) {
  TempDir dir("npy");
  const PriorField g = PriorField::global(3, {0.5f, 0.25f, 0.25f});
  write_tensor(g, dir / "g.npy");
  EXPECT_EQ(read_prior_field(dir / "g.npy"), g);
  const PriorField p = PriorField::positional(1, 2, 2, {1.0f, 0.0f, 0.5f, 0.5f});
  write_tensor(p, dir / "p.npy");
  EXPECT_EQ(read_prior_field(dir / "p.npy"), p);
}

TEST(Npy, RejectsEmptyMask) {
  TempDir dir("npy");
  EXPECT_THROW(write_tensor(LabelMask(0, 0, std::vector<ClassId>{}), dir / "e.npy"), ValidationError);
  write_file(dir / "e.npy", npy_bytes("{'descr': '|u1', 'fortran_order': False, 'shape': (0, 0), }", ""));
  EXPECT_THROW(read_label_mask(dir / "e.npy"), SchemaError);
}

TEST(Npy, RejectsNaN) {
  NpyArray a;
  a.shape = {1, 1, 2};
  a.floats = {std::numeric_limits<float>::quiet_NaN(), 0.5f};
  EXPECT_THROW(encode_npy(a), ValidationError);

  TempDir dir("npy");
  write_file(dir / "nan.npy",
             npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 2), }",
                       float_payload({std::numeric_limits<float>::quiet_NaN(), 0.5f})));
  EXPECT_THROW(read_prob_tensor(dir / "nan.npy"), ValidationError);
}

TEST(Npy, RejectsMalformedFiles) {
  const std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (1, 2), }";
  const std::string good = npy_bytes(dict, float_payload({0.25f, 0.75f}));
  EXPECT_NO_THROW(decode_npy(good));

  std::string bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_THROW(decode_npy(bad_magic), FormatError);
  EXPECT_THROW(decode_npy(npy_bytes(dict, float_payload({0.25f, 0.75f}), 2)), FormatError);
  EXPECT_THROW(decode_npy(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(decode_npy(good.substr(0, 20)), FormatError);
  EXPECT_THROW(decode_npy(npy_bytes("{'descr': '>f4', 'fortran_order': False, 'shape': (1, 2), }",
                                    float_payload({0.25f, 0.75f}))),
               SchemaError);
  EXPECT_THROW(decode_npy(npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2), }",
                                    std::string(16, '\0'))),
               SchemaError);
  EXPECT_THROW(decode_npy(npy_bytes("{'descr': '<f4', 'fortran_order': True, 'shape': (1, 2), }",
                                    float_payload({0.25f, 0.75f}))),
               SchemaError);
}

TEST(Npy, TypedReadersCheckShapeAndContent) {
  TempDir dir("npy");
  write_file(dir / "rank2.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 2), }",
                                          float_payload({0.5f, 0.5f})));
  EXPECT_THROW(read_prob_tensor(dir / "rank2.npy"), SchemaError);
  EXPECT_THROW(read_label_mask(dir / "rank2.npy"), SchemaError);

  write_file(dir / "sum.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 2), }",
                                        float_payload({0.5f, 0.6f})));
  EXPECT_THROW(read_prob_tensor(dir / "sum.npy"), ValidationError);

  write_file(dir / "prior.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }",
                                          float_payload({0.7f, 0.6f})));
  EXPECT_THROW(read_prior_field(dir / "prior.npy"), ValidationError);

  EXPECT_THROW(read_prob_tensor(dir / "missing.npy"), IoError);
}

}  // namespace
}  // namespace segfuse
