#include "segfuse/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "segfuse/error.hpp"

namespace segfuse {

namespace {

constexpr double kInitClamp = 10.0;
// Splits whose variance reduction is below this fraction of the node's sum of
// squares are treated as rounding noise.
constexpr double kMinRelativeGain = 1e-12;

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const std::vector<double>& residuals,
              const std::vector<double>& weights, const std::vector<double>& signs,
              const GbtConfig& cfg, std::mt19937_64& rng)
      : x_(x), residuals_(residuals), weights_(weights), signs_(signs), cfg_(cfg), rng_(rng) {}

  RegressionTree build() {
    std::vector<std::size_t> all(x_.rows());
    std::iota(all.begin(), all.end(), 0);
    tree_.nodes.clear();
    grow(std::move(all), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> samples, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double sum = 0.0;
    double sum_sq = 0.0;
    double newton_num = 0.0;
    double newton_den = 0.0;
    for (std::size_t i : samples) {
      sum += residuals_[i];
      sum_sq += residuals_[i] * residuals_[i];
      newton_num += signs_[i] * weights_[i];
      newton_den += weights_[i];
    }
    const auto n = static_cast<double>(samples.size());
    const double sse = std::max(0.0, sum_sq - sum * sum / n);
    {
      TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
      node.impurity = sse / n;
      node.n_weighted = n / static_cast<double>(x_.rows());
      node.leaf_value = newton_den > 0.0 ? newton_num / newton_den : 0.0;
    }

    if (depth >= cfg_.max_depth || samples.size() < 2 || sse <= 0.0) return id;
    const SplitCandidate split = best_split(samples, sum, sse);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : samples) {
      (x_.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();

    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<std::size_t> sample_features() {
    const std::size_t q = x_.cols();
    const std::size_t k = cfg_.max_features ? static_cast<std::size_t>(*cfg_.max_features) : q;
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    if (k >= q) return order;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, q - 1);
      std::swap(order[i], order[pick(rng_)]);
    }
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
  }

  SplitCandidate best_split(const std::vector<std::size_t>& samples, double sum, double sse) {
    SplitCandidate best;
    const auto n = static_cast<double>(samples.size());
    const double parent_term = sum * sum / n;
    std::vector<std::size_t> sorted;

    for (std::size_t f : sample_features()) {
      sorted = samples;
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_.at(a, f) < x_.at(b, f);
      });
      double left_sum = 0.0;
      for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
        left_sum += residuals_[sorted[pos]];
        const double lo = x_.at(sorted[pos], f);
        const double hi = x_.at(sorted[pos + 1], f);
        if (!(lo < hi)) continue;
        const auto nl = static_cast<double>(pos + 1);
        const double nr = n - nl;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
        if (gain > best.gain && gain > kMinRelativeGain * sse) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  const std::vector<double>& residuals_;
  const std::vector<double>& weights_;
  const std::vector<double>& signs_;
  const GbtConfig& cfg_;
  std::mt19937_64& rng_;
  RegressionTree tree_;
};

void check_tree(const RegressionTree& tree, std::size_t q) {
  const auto count = static_cast<int>(tree.nodes.size());
  if (count == 0) throw FormatError("model: tree without nodes");
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) continue;
    if (q > 0 && static_cast<std::size_t>(node.feature) >= q) {
      throw FormatError("model: split feature index out of range");
    }
    if (node.left <= 0 || node.right <= 0 || node.left >= count || node.right >= count) {
      throw FormatError("model: child index out of range");
    }
  }
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : cols_(cols), values_(std::move(values)) {
  if (rows * cols != values_.size()) throw ValidationError("feature matrix: size does not match shape");
}

void FeatureMatrix::append_row(std::span<const double> row) {
  if (row.size() != cols_) throw SchemaError("feature matrix: row width does not match");
  values_.insert(values_.end(), row.begin(), row.end());
}

void GbtConfig::validate(std::size_t feature_count) const {
  if (n_stages < 1) throw ValidationError("gbt: n_stages must be >= 1");
  if (max_depth < 1) throw ValidationError("gbt: max_depth must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("gbt: learning_rate must be positive");
  }
  if (max_features &&
      (*max_features < 1 || static_cast<std::size_t>(*max_features) > feature_count)) {
    throw ValidationError("gbt: max_features must lie in [1, " + std::to_string(feature_count) + "]");
  }
}

double RegressionTree::evaluate(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                              : node.right);
  }
  return nodes[i].leaf_value;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (nodes[i].is_leaf()) continue;
    depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
  }
  return deepest;
}

double GbtModel::score(std::span<const double> x, std::size_t n_trees) const {
  double f = init_score;
  const std::size_t limit = std::min(n_trees, trees.size());
  for (std::size_t t = 0; t < limit; ++t) f += learning_rate * trees[t].evaluate(x);
  return f;
}

GbtModel train_gbt(const FeatureMatrix& x, std::span<const int> labels, const GbtConfig& cfg,
                   std::vector<std::string> schema) {
  const std::size_t n = x.rows();
  const std::size_t q = x.cols();
  if (n == 0 || q == 0) throw ValidationError("gbt: empty training matrix");
  if (labels.size() != n) throw ValidationError("gbt: label count does not match rows");
  cfg.validate(q);
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : x.row(i)) {
      if (!std::isfinite(v)) throw ValidationError("gbt: non-finite feature in row " + std::to_string(i));
    }
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("gbt: labels must be 0 or 1");
  }
  if (schema.empty()) {
    for (std::size_t j = 0; j < q; ++j) schema.push_back("f" + std::to_string(j));
  } else if (schema.size() != q) {
    throw SchemaError("gbt: schema has " + std::to_string(schema.size()) + " names for " +
                      std::to_string(q) + " columns");
  }

  GbtModel model;
  model.learning_rate = cfg.learning_rate;
  model.feature_schema = std::move(schema);

  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0) {
    model.init_score = -kInitClamp;
  } else if (negatives == 0.0) {
    model.init_score = kInitClamp;
  } else {
    model.init_score = std::clamp(0.5 * std::log(positives / negatives), -kInitClamp, kInitClamp);
  }

  std::vector<double> signs(n);
  for (std::size_t i = 0; i < n; ++i) signs[i] = labels[i] == 1 ? 1.0 : -1.0;
  std::vector<double> scores(n, model.init_score);
  std::vector<double> weights(n);
  std::vector<double> residuals(n);
  std::mt19937_64 rng(cfg.seed);

  for (int stage = 0; stage < cfg.n_stages; ++stage) {
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = std::exp(-signs[i] * scores[i]);
      residuals[i] = signs[i] * weights[i];
    }
    TreeBuilder builder(x, residuals, weights, signs, cfg, rng);
    RegressionTree tree = builder.build();
    for (std::size_t i = 0; i < n; ++i) scores[i] += cfg.learning_rate * tree.evaluate(x.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

MetaPrediction predict(const GbtModel& model, std::span<const double> features) {
  if (!model.feature_schema.empty() && features.size() != model.feature_schema.size()) {
    throw SchemaError("predict: got " + std::to_string(features.size()) + " features, model expects " +
                      std::to_string(model.feature_schema.size()));
  }
  MetaPrediction p;
  p.score = model.score(features);
  p.label = p.score > 0.0 ? 1 : 0;
  return p;
}

std::vector<double> feature_importance(const GbtModel& model) {
  std::vector<double> importance(model.feature_schema.size(), 0.0);
  double total = 0.0;
  for (const RegressionTree& tree : model.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
      const double decrease = node.n_weighted * node.impurity - l.n_weighted * l.impurity -
                              r.n_weighted * r.impurity;
      const auto f = static_cast<std::size_t>(node.feature);
      if (f >= importance.size()) importance.resize(f + 1, 0.0);
      importance[f] += decrease;
      total += decrease;
    }
  }
  if (total > 0.0) {
    for (double& v : importance) v /= total;
  } else {
    std::fill(importance.begin(), importance.end(), 0.0);
  }
  return importance;
}

double exponential_loss(const GbtModel& model, const FeatureMatrix& x, std::span<const int> labels,
                        std::size_t n_trees) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = labels[i] == 1 ? 1.0 : -1.0;
    loss += std::exp(-s * model.score(x.row(i), n_trees));
  }
  return loss;
}

std::string model_to_json(const GbtModel& model) {
  nlohmann::json doc;
  doc["version"] = kModelFormatVersion;
  doc["init_score"] = model.init_score;
  doc["learning_rate"] = model.learning_rate;
  doc["feature_schema"] = model.feature_schema;
  auto trees = nlohmann::json::array();
  for (const RegressionTree& tree : model.trees) {
    auto nodes = nlohmann::json::array();
    for (const TreeNode& node : tree.nodes) {
      nodes.push_back({{"feature", node.feature},
                       {"threshold", node.threshold},
                       {"left", node.left},
                       {"right", node.right},
                       {"leaf_value", node.leaf_value},
                       {"impurity", node.impurity},
                       {"n_weighted", node.n_weighted}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump(1);
}

GbtModel model_from_json(const std::string& text) {
  GbtModel model;
  try {
    const auto doc = nlohmann::json::parse(text);
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("model: unsupported version " + std::to_string(version));
    }
    model.init_score = doc.at("init_score").get<double>();
    model.learning_rate = doc.at("learning_rate").get<double>();
    model.feature_schema = doc.at("feature_schema").get<std::vector<std::string>>();
    for (const auto& t : doc.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.leaf_value = n.at("leaf_value").get<double>();
        node.impurity = n.at("impurity").get<double>();
        node.n_weighted = n.at("n_weighted").get<double>();
        tree.nodes.push_back(node);
      }
      check_tree(tree, model.feature_schema.size());
      model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: malformed JSON: ") + e.what());
  }
  return model;
}

void save_model(const GbtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << model_to_json(model) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

GbtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return model_from_json(text);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace segfuse
