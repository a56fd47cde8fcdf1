#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segfuse {

// Row-major n x q matrix of segment features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  void append_row(std::span<const double> row);

  std::size_t rows() const { return cols_ == 0 ? 0 : values_.size() / cols_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

 private:
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct GbtConfig {
  int n_stages = 27;
  int max_depth = 3;
  std::optional<int> max_features;  // nullopt = consider every feature
  double learning_rate = 0.1;
  std::uint64_t seed = 0;

  void validate(std::size_t feature_count) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
  double impurity = 0.0;    // variance of the residual targets at the node
  double n_weighted = 0.0;  // fraction of the training samples reaching the node

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Node 0 is the root. Samples with x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double evaluate(std::span<const double> x) const;
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct GbtModel {
  double init_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  std::vector<std::string> feature_schema;

  // Additive score using only the first `n_trees` trees.
  double score(std::span<const double> x, std::size_t n_trees) const;
  double score(std::span<const double> x) const { return score(x, trees.size()); }

  bool operator==(const GbtModel&) const = default;
};

struct MetaPrediction {
  int label = 0;  // 1 = true positive (keep)
  double score = 0.0;
};

// Binary gradient boosting under exponential loss with labels in {0, 1}.
// `schema` names the columns; when empty, names f0..f{q-1} are generated.
GbtModel train_gbt(const FeatureMatrix& x, std::span<const int> labels, const GbtConfig& cfg,
                   std::vector<std::string> schema = {});

// Label 1 iff the score is strictly positive. Throws SchemaError when the
// feature count does not match the model schema.
MetaPrediction predict(const GbtModel& model, std::span<const double> features);

// Impurity-decrease importance per feature, normalized to sum to one. All
// zeros when no tree contains a split.
std::vector<double> feature_importance(const GbtModel& model);

// Sum of exp(-s_i F_i) over the training set using the first `n_trees` trees,
// with s_i = 2 * label - 1.
double exponential_loss(const GbtModel& model, const FeatureMatrix& x, std::span<const int> labels,
                        std::size_t n_trees);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const GbtModel& model);
GbtModel model_from_json(const std::string& text);
void save_model(const GbtModel& model, const std::filesystem::path& path);
GbtModel load_model(const std::filesystem::path& path);

}  // namespace segfuse
