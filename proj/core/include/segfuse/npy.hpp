#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segfuse/tensor.hpp"

namespace segfuse {

// NPY v1.0 reader/writer restricted to what flows through the toolkit:
// little-endian float32 ('<f4') and uint8 ('|u1'), C order.

enum class NpyDtype { kFloat32, kUInt8 };

struct NpyArray {
  NpyDtype dtype = NpyDtype::kFloat32;
  std::vector<std::size_t> shape;
  std::vector<float> floats;         // payload when dtype == kFloat32
  std::vector<std::uint8_t> bytes;   // payload when dtype == kUInt8

  std::size_t element_count() const;
};

// In-memory encode/decode. decode throws FormatError on a malformed file and
// SchemaError on an unsupported dtype or memory order.
std::string encode_npy(const NpyArray& array);
NpyArray decode_npy(std::string_view file_bytes);

// write_npy rejects non-finite floats and zero-sized shapes (ValidationError).
NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const NpyArray& array);

// Typed readers. Expected layouts:
//   ProbTensor  float32, rank 3 (H, W, C)
//   LabelMask   uint8,   rank 2 (H, W)
//   PriorField  float32, rank 3 (H, W, C) positional or rank 1 (C) global
ProbTensor read_prob_tensor(const std::filesystem::path& path);
LabelMask read_label_mask(const std::filesystem::path& path);
PriorField read_prior_field(const std::filesystem::path& path);

void write_tensor(const ProbTensor& tensor, const std::filesystem::path& path);
void write_tensor(const LabelMask& mask, const std::filesystem::path& path);
void write_tensor(const PriorField& priors, const std::filesystem::path& path);

// H x W float32 heatmap dump.
void write_heatmap(const std::filesystem::path& path, int height, int width,
                   std::span<const double> values);

NpyArray to_npy(const ProbTensor& tensor);
NpyArray to_npy(const LabelMask& mask);
NpyArray to_npy(const PriorField& priors);
ProbTensor prob_tensor_from_npy(const NpyArray& array);
LabelMask label_mask_from_npy(const NpyArray& array);
PriorField prior_field_from_npy(const NpyArray& array);

}  // namespace segfuse
