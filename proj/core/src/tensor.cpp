#include "segfuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "segfuse/error.hpp"

namespace segfuse {

namespace {

void check_dims(int height, int width, int classes, std::size_t size, const char* what) {
  if (height < 0 || width < 0 || classes < 0) {
    throw ValidationError(std::string(what) + ": negative dimension");
  }
  const auto expected = static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                        static_cast<std::size_t>(classes);
  if (expected != size) {
    std::ostringstream msg;
    msg << what << ": shape " << height << "x" << width << "x" << classes << " needs " << expected
        << " values, got " << size;
    throw ValidationError(msg.str());
  }
}

template <typename T>
void check_unit_interval(std::span<const T> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T v = values[i];
    if (!std::isfinite(v) || v < T(0) || v > T(1)) {
      std::ostringstream msg;
      msg << what << ": value " << v << " at flat index " << i << " outside [0, 1]";
      throw ValidationError(msg.str());
    }
  }
}

}  // namespace

template <typename T>
ClassField<T>::ClassField(int height, int width, int classes, std::vector<T> data)
    : height_(height), width_(width), classes_(classes), data_(std::move(data)) {
  check_dims(height, width, classes, data_.size(), "class field");
}

template class ClassField<float>;
template class ClassField<double>;

ProbTensor::ProbTensor(int height, int width, int classes, std::vector<float> data)
    : ClassField<float>(height, width, classes, std::move(data)) {
  if (classes_ < 1) throw ValidationError("probability tensor needs at least one class");
  check_unit_interval(std::span<const float>(data_), "probability tensor");
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      double sum = 0.0;
      for (float v : pixel(r, c)) sum += v;
      if (std::abs(sum - 1.0) > kProbSumTolerance) {
        std::ostringstream msg;
        msg << "probability tensor: pixel (" << r << ", " << c << ") sums to " << sum;
        throw ValidationError(msg.str());
      }
    }
  }
}

LikelihoodField::LikelihoodField(int height, int width, int classes, std::vector<double> data)
    : ClassField<double>(height, width, classes, std::move(data)) {}

LabelMask::LabelMask(int height, int width, std::vector<ClassId> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width, 1, data_.size(), "label mask");
}

LabelMask::LabelMask(int height, int width, ClassId fill)
    : LabelMask(height, width,
                std::vector<ClassId>(static_cast<std::size_t>(std::max(height, 0)) *
                                         static_cast<std::size_t>(std::max(width, 0)),
                                     fill)) {}

PriorField PriorField::positional(int height, int width, int classes, std::vector<float> data) {
  check_dims(height, width, classes, data.size(), "positional priors");
  check_unit_interval(std::span<const float>(data), "positional priors");
  PriorField out;
  out.mode_ = PriorMode::kPositional;
  out.height_ = height;
  out.width_ = width;
  out.classes_ = classes;
  out.data_ = std::move(data);
  return out;
}

PriorField PriorField::global(int classes, std::vector<float> data) {
  check_dims(1, 1, classes, data.size(), "global priors");
  check_unit_interval(std::span<const float>(data), "global priors");
  PriorField out;
  out.mode_ = PriorMode::kGlobal;
  out.classes_ = classes;
  out.data_ = std::move(data);
  return out;
}

void PriorField::check_row_sums() const {
  if (mode_ == PriorMode::kGlobal) {
    double sum = 0.0;
    for (float v : data_) sum += v;
    if (sum > 1.0 + kProbSumTolerance) {
      throw ValidationError("global priors sum to " + std::to_string(sum));
    }
    return;
  }
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      double sum = 0.0;
      for (float v : row(r, c)) sum += v;
      if (sum > 1.0 + kProbSumTolerance) {
        std::ostringstream msg;
        msg << "positional priors: pixel (" << r << ", " << c << ") sums to " << sum;
        throw ValidationError(msg.str());
      }
    }
  }
}

std::span<const float> PriorField::row(int r, int c) const {
  const auto classes = static_cast<std::size_t>(classes_);
  if (mode_ == PriorMode::kGlobal) return {data_.data(), classes};
  const auto idx = static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(c);
  return {data_.data() + idx * classes, classes};
}

}  // namespace segfuse
