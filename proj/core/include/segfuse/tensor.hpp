#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace segfuse {

using ClassId = std::uint8_t;

inline constexpr ClassId kIgnoreLabel = 255;

// Tolerance on |sum_y p(y) - 1| for a single pixel of a probability tensor.
inline constexpr double kProbSumTolerance = 1e-4;

// Dense row-major H x W x C field, index order (row, col, class).
template <typename T>
class ClassField {
 public:
  ClassField() = default;
  ClassField(int height, int width, int classes, std::vector<T> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int classes() const { return classes_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  std::span<const T> pixel(int row, int col) const {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(classes_)};
  }
  T at(int row, int col, int cls) const { return data_[offset(row, col) + cls]; }
  std::span<const T> data() const { return data_; }

  bool operator==(const ClassField&) const = default;

 protected:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
           static_cast<std::size_t>(classes_);
  }

  int height_ = 0;
  int width_ = 0;
  int classes_ = 0;
  std::vector<T> data_;
};

extern template class ClassField<float>;
extern template class ClassField<double>;

// Per-pixel softmax output of the segmentation network.
class ProbTensor : public ClassField<float> {
 public:
  ProbTensor() = default;
  // Throws ValidationError when a value leaves [0, 1] or is not finite, or a
  // pixel sum is off by more than kProbSumTolerance; the message names the
  // first offending pixel.
  ProbTensor(int height, int width, int classes, std::vector<float> data);
};

// Prior-adjusted, per-pixel renormalized likelihoods. Values are kept in
// double so argmax relations computed from the ratios survive normalization.
class LikelihoodField : public ClassField<double> {
 public:
  LikelihoodField() = default;
  LikelihoodField(int height, int width, int classes, std::vector<double> data);
};

class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(int height, int width, std::vector<ClassId> data);
  LabelMask(int height, int width, ClassId fill);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const { return data_.empty(); }

  ClassId at(int row, int col) const { return data_[index(row, col)]; }
  void set(int row, int col, ClassId value) { data_[index(row, col)] = value; }
  bool in_bounds(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }
  std::span<const ClassId> data() const { return data_; }

  bool operator==(const LabelMask&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<ClassId> data_;
};

enum class PriorMode { kPositional, kGlobal };

// Estimated class priors: one C-vector per pixel (positional) or a single
// C-vector shared by all pixels (global). Global fields report height and
// width as 0.
class PriorField {
 public:
  PriorField() = default;
  static PriorField positional(int height, int width, int classes, std::vector<float> data);
  static PriorField global(int classes, std::vector<float> data);

  PriorMode mode() const { return mode_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int classes() const { return classes_; }

  // Prior row for a pixel; the coordinates are ignored in global mode.
  std::span<const float> row(int r, int c) const;
  std::span<const float> data() const { return data_; }

  // Estimated priors are (sub-)distributions: every row sums to at most one.
  // Interpolated priors are not, so the factories do not enforce this.
  void check_row_sums() const;

  bool operator==(const PriorField&) const = default;

 private:
  PriorMode mode_ = PriorMode::kGlobal;
  int height_ = 0;
  int width_ = 0;
  int classes_ = 0;
  std::vector<float> data_;
};

}  // namespace segfuse
