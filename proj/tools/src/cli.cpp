#include "segfuse/cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "segfuse/cli/corpus.hpp"
#include "segfuse/decision.hpp"
#include "segfuse/dispersion.hpp"
#include "segfuse/error.hpp"
#include "segfuse/evaluation.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/gbt.hpp"
#include "segfuse/npy.hpp"
#include "segfuse/parallel.hpp"
#include "segfuse/pipeline.hpp"
#include "segfuse/synth.hpp"

namespace segfuse::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string subcommand;
  fs::path corpus;
  fs::path priors;
  fs::path out;
  fs::path config_out;
  fs::path candidates;
  fs::path model;
  fs::path verdicts;
  fs::path pred;
  fs::path base;
  fs::path dispersion_out;
  int classes = 0;
  int minority = 0;
  double alpha = 1.0;
  std::vector<double> alphas;
  std::string prior_mode = "positional";
  std::string rule = "adjusted";
  int stages = 27;
  int depth = 3;
  int max_features = 0;  // 0 = all features
  double learning_rate = 0.1;
  int folds = 5;
  std::uint64_t seed = 0;
  bool meta = false;
  int top = 0;
  int jobs = 1;
  int frames = 300;
  int scene_minority = 3;
  SceneSpec scene;
};

// ---------------------------------------------------------------------------
// helpers

void require_file(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw IoError("no such file: " + p.string());
}

void require_dir(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_directory(p, ec)) throw IoError("no such directory: " + p.string());
}

void prepare_output_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create directory: " + p.string());
}

void prepare_output_file(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (!parent.empty()) prepare_output_dir(parent);
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + p.string());
  return out;
}

void finish_output(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw IoError("write failed: " + p.string());
}

ClassId minority_of(const RunConfig& cfg, int classes) {
  if (cfg.minority < 0 || cfg.minority >= classes) {
    throw ValidationError("--minority " + std::to_string(cfg.minority) + " out of range for " +
                          std::to_string(classes) + " classes");
  }
  return static_cast<ClassId>(cfg.minority);
}

GbtConfig gbt_config(const RunConfig& cfg) {
  GbtConfig g;
  g.n_stages = cfg.stages;
  g.max_depth = cfg.depth;
  if (cfg.max_features > 0) g.max_features = cfg.max_features;
  g.learning_rate = cfg.learning_rate;
  g.seed = cfg.seed;
  return g;
}

DecisionConfig decision_config(const RunConfig& cfg, const PriorField& priors) {
  DecisionConfig d;
  d.alpha = cfg.alpha;
  d.prior_mode = priors.mode();
  d.validate();
  return d;
}

std::vector<LabeledFrame> load_labeled(const std::vector<CorpusEntry>& entries, int jobs) {
  for (const auto& e : entries) {
    if (!e.gt) throw IoError("missing ground truth for frame " + e.id);
  }
  std::vector<std::optional<LabeledFrame>> slots(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    slots[i].emplace(LabeledFrame{entries[i].id, read_prob_tensor(entries[i].probs), read_label_mask(*entries[i].gt)});
  });
  std::vector<LabeledFrame> frames;
  frames.reserve(entries.size());
  for (auto& s : slots) frames.push_back(std::move(*s));
  for (const auto& f : frames) {
    if (f.gt.height() != f.probs.height() || f.gt.width() != f.probs.width()) {
      throw SchemaError("frame " + f.id + ": ground truth shape differs from probabilities");
    }
    if (f.probs.classes() != frames.front().probs.classes()) {
      throw SchemaError("frame " + f.id + ": class count differs from the rest of the corpus");
    }
  }
  return frames;
}

std::vector<FrameAnalysis> analyze_corpus(const std::vector<CorpusEntry>& entries, const PriorField& priors,
                                          const DecisionConfig& decision, const RunConfig& cfg) {
  std::vector<FrameAnalysis> analyses(entries.size());
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const ProbTensor probs = read_prob_tensor(entries[i].probs);
    analyses[i] = analyze_frame(probs, priors, decision, minority_of(cfg, probs.classes()));
  });
  return analyses;
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_synth(const RunConfig& cfg) {
  SceneSpec spec = cfg.scene;
  if (cfg.scene_minority < 0 || cfg.scene_minority >= spec.classes) {
    throw ValidationError("--minority out of range");
  }
  spec.minority_class = static_cast<ClassId>(cfg.scene_minority);
  spec.validate();
  if (cfg.frames < 1) throw ValidationError("--frames must be positive");
  prepare_output_dir(cfg.out);

  json frames = json::array();
  for (int i = 0; i < cfg.frames; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%05d", i);
    frames.push_back({{"id", stem},
                      {"probs", std::string(stem) + kProbsSuffix},
                      {"gt", std::string(stem) + kGtSuffix}});
  }
  parallel_for(static_cast<std::size_t>(cfg.frames), cfg.jobs, [&](std::size_t i) {
    const SyntheticFrame frame = generate_scene(spec, i);
    const std::string id = frames[i]["id"];
    write_tensor(frame.probs, member_path(cfg.out, id, kProbsSuffix));
    write_tensor(frame.gt, member_path(cfg.out, id, kGtSuffix));
  });

  const SceneSpec& s = spec;
  json manifest = {
      {"spec",
       {{"height", s.height},
        {"width", s.width},
        {"classes", s.classes},
        {"minority_class", static_cast<int>(s.minority_class)},
        {"minority_pixel_fraction", s.minority_pixel_fraction},
        {"minority_confidence_deficit", s.minority_confidence_deficit},
        {"blob_count_range", {s.blob_count_range.first, s.blob_count_range.second}},
        {"noise_temperature", s.noise_temperature},
        {"logit_scale", s.logit_scale},
        {"seed", s.seed}}},
      {"frames", frames}};
  const fs::path path = cfg.out / "manifest.json";
  auto out = open_output(path);
  out << manifest.dump(2) << '\n';
  finish_output(out, path);
}

void cmd_estimate_priors(const RunConfig& cfg) {
  require_dir(cfg.corpus);
  prepare_output_file(cfg.out);
  const auto stems = list_gt_stems(cfg.corpus);
  std::vector<LabelMask> masks(stems.size());
  parallel_for(stems.size(), cfg.jobs,
               [&](std::size_t i) { masks[i] = read_label_mask(member_path(cfg.corpus, stems[i], kGtSuffix)); });
  const PriorMode mode = cfg.prior_mode == "global" ? PriorMode::kGlobal : PriorMode::kPositional;
  write_tensor(estimate_priors(masks, cfg.classes, mode), cfg.out);
}

void cmd_infer(const RunConfig& cfg) {
  require_dir(cfg.corpus);
  if (!cfg.priors.empty()) require_file(cfg.priors);
  const auto entries = list_corpus(cfg.corpus);
  prepare_output_dir(cfg.out);
  if (!cfg.dispersion_out.empty()) prepare_output_dir(cfg.dispersion_out);

  std::optional<PriorField> priors;
  DecisionConfig decision;
  if (!cfg.priors.empty()) {
    priors = read_prior_field(cfg.priors);
    decision = decision_config(cfg, *priors);
  }
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const ProbTensor probs = read_prob_tensor(entries[i].probs);
    const LabelMask mask = priors ? decide(probs, *priors, decision) : bayes_decision(probs);
    write_tensor(mask, member_path(cfg.out, entries[i].id, kMaskSuffix));
    if (cfg.dispersion_out.empty()) return;
    const LikelihoodField field = priors ? adjusted_likelihood(probs, *priors, decision)
                                         : LikelihoodField(probs.height(), probs.width(), probs.classes(),
                                                           std::vector<double>(probs.data().begin(),
                                                                               probs.data().end()));
    const DispersionMaps maps = dispersion_maps(field);
    const fs::path stem = cfg.dispersion_out / entries[i].id;
    write_heatmap(stem.string() + "_entropy.npy", maps.height, maps.width, maps.entropy);
    write_heatmap(stem.string() + "_margin.npy", maps.height, maps.width, maps.margin);
    write_heatmap(stem.string() + "_variation_ratio.npy", maps.height, maps.width, maps.variation_ratio);
  });
}

void cmd_features(const RunConfig& cfg) {
  require_dir(cfg.corpus);
  require_file(cfg.priors);
  const auto entries = list_corpus(cfg.corpus);
  prepare_output_file(cfg.out);

  const PriorField priors = read_prior_field(cfg.priors);
  const DecisionConfig decision = decision_config(cfg, priors);
  const bool labelled = std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.gt.has_value(); });

  const auto analyses = analyze_corpus(entries, priors, decision, cfg);
  std::vector<std::vector<int>> labels(entries.size());
  if (labelled) {
    parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
      const LabelMask gt = read_label_mask(*entries[i].gt);
      labels[i] = label_candidates(analyses[i].candidates, gt, minority_of(cfg, analyses[i].likelihood.classes()));
    });
  }
  CandidateTable table;
  for (std::size_t i = 0; i < entries.size(); ++i) table.append_frame(entries[i].id, analyses[i], labels[i]);
  if (table.schema.empty()) table.schema = feature_schema(analyses.front().likelihood.classes());
  write_candidate_csv(cfg.out, table);
}

CandidateTable load_labelled_table(const fs::path& path) {
  require_file(path);
  CandidateTable table = read_candidate_csv(path);
  if (table.rows() == 0) throw ValidationError("candidate table is empty: " + path.string());
  if (!table.has_labels()) throw ValidationError("candidate table has no label column: " + path.string());
  return table;
}

void cmd_train_meta(const RunConfig& cfg) {
  require_file(cfg.candidates);
  prepare_output_file(cfg.out);
  const CandidateTable table = load_labelled_table(cfg.candidates);
  save_model(train_gbt(table.features, table.labels, gbt_config(cfg), table.schema), cfg.out);
}

void cmd_crossval(const RunConfig& cfg) {
  require_file(cfg.candidates);
  prepare_output_file(cfg.out);
  const CandidateTable table = load_labelled_table(cfg.candidates);
  const auto verdicts = cross_validate(table, cfg.folds, gbt_config(cfg), cfg.seed);
  auto out = open_output(cfg.out);
  write_verdict_csv(out, verdicts);
  finish_output(out, cfg.out);
}

void cmd_importance(const RunConfig& cfg) {
  require_file(cfg.model);
  if (!cfg.out.empty()) prepare_output_file(cfg.out);
  const GbtModel model = load_model(cfg.model);
  const std::vector<double> scores = feature_importance(model);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (cfg.top > 0 && order.size() > static_cast<std::size_t>(cfg.top)) order.resize(static_cast<std::size_t>(cfg.top));

  std::ostringstream text;
  text << "feature,importance\n";
  char buf[32];
  for (std::size_t j : order) {
    std::snprintf(buf, sizeof(buf), "%.6f", scores[j]);
    text << model.feature_schema[j] << ',' << buf << '\n';
  }
  if (cfg.out.empty()) {
    std::cout << text.str();
    return;
  }
  auto out = open_output(cfg.out);
  out << text.str();
  finish_output(out, cfg.out);
}

void cmd_fuse(const RunConfig& cfg) {
  require_dir(cfg.corpus);
  require_file(cfg.priors);
  if (cfg.verdicts.empty() == cfg.model.empty()) {
    throw ValidationError("fuse needs exactly one of --verdicts or --model");
  }
  if (!cfg.verdicts.empty()) require_file(cfg.verdicts);
  if (!cfg.model.empty()) require_file(cfg.model);
  if (!cfg.base.empty()) require_dir(cfg.base);
  const auto entries = list_corpus(cfg.corpus);
  prepare_output_dir(cfg.out);

  if (!cfg.base.empty()) {
    std::cerr << "warning: fusing onto an existing mask; the result depends on the order in which "
                 "classes are fused\n";
  }

  const PriorField priors = read_prior_field(cfg.priors);
  const DecisionConfig decision = decision_config(cfg, priors);

  std::map<std::string, std::size_t> frame_index;
  for (std::size_t i = 0; i < entries.size(); ++i) frame_index[entries[i].id] = i;
  std::vector<std::vector<CandidateVerdict>> verdicts(entries.size());
  std::optional<GbtModel> model;
  if (!cfg.verdicts.empty()) {
    std::ifstream in(cfg.verdicts);
    if (!in) throw IoError("cannot open " + cfg.verdicts.string());
    for (const auto& v : read_verdict_csv(in)) {
      const auto it = frame_index.find(v.frame_id);
      if (it == frame_index.end()) throw ValidationError("verdict for unknown frame " + v.frame_id);
      verdicts[it->second].push_back({v.segment_id, v.keep, v.score});
    }
  } else {
    model = load_model(cfg.model);
  }

  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const ProbTensor probs = read_prob_tensor(entries[i].probs);
    const ClassId cls = minority_of(cfg, probs.classes());
    const FrameAnalysis a = analyze_frame(probs, priors, decision, cls);
    if (model) {
      if (model->feature_schema != feature_schema(probs.classes())) {
        throw SchemaError("model feature schema does not match " + std::to_string(probs.classes()) + " classes");
      }
      for (std::size_t k = 0; k < a.candidates.size(); ++k) {
        const MetaPrediction p = predict(*model, a.features[k].values);
        verdicts[i].push_back({k, p.label == 1, p.score});
      }
    }
    LabelMask base = a.bayes;
    if (!cfg.base.empty()) {
      base = read_label_mask(member_path(cfg.base, entries[i].id, kMaskSuffix));
      if (base.height() != probs.height() || base.width() != probs.width()) {
        throw SchemaError("frame " + entries[i].id + ": base mask shape differs from probabilities");
      }
    }
    write_tensor(fuse(base, a.candidates, verdicts[i], cls), member_path(cfg.out, entries[i].id, kMaskSuffix));
  });
}

void write_metrics(const fs::path& path, const std::vector<MetricsReport>& rows) {
  auto out = open_output(path);
  write_metrics_csv(out, rows);
  finish_output(out, path);
}

void cmd_evaluate(const RunConfig& cfg) {
  require_dir(cfg.corpus);
  require_dir(cfg.pred);
  const auto entries = list_corpus(cfg.corpus);
  for (const auto& e : entries) require_file(member_path(cfg.pred, e.id, kMaskSuffix));
  prepare_output_file(cfg.out);

  const auto frames = load_labeled(entries, cfg.jobs);
  const int classes = frames.front().probs.classes();
  const ClassId cls = minority_of(cfg, classes);
  std::vector<LabelMask> gts(frames.size());
  std::vector<LabelMask> bayes(frames.size());
  std::vector<LabelMask> preds(frames.size());
  parallel_for(frames.size(), cfg.jobs, [&](std::size_t i) {
    gts[i] = frames[i].gt;
    bayes[i] = bayes_decision(frames[i].probs);
    preds[i] = read_label_mask(member_path(cfg.pred, frames[i].id, kMaskSuffix));
    if (preds[i].height() != gts[i].height() || preds[i].width() != gts[i].width()) {
      throw SchemaError("frame " + frames[i].id + ": predicted mask shape differs from ground truth");
    }
  });
  std::vector<MetricsReport> rows;
  rows.push_back(evaluate_masks(bayes, gts, cls, classes, 0.0, "bayes", std::nullopt));
  rows.push_back(evaluate_masks(preds, gts, cls, classes, cfg.alpha, cfg.rule, rows.front().counts));
  write_metrics(cfg.out, rows);
}

void cmd_sweep(const RunConfig& cfg) {
  require_dir(cfg.corpus);
  require_file(cfg.priors);
  const auto entries = list_corpus(cfg.corpus);
  prepare_output_file(cfg.out);
  if (cfg.alphas.empty()) throw ValidationError("--alphas needs at least one value");

  const PriorField priors = read_prior_field(cfg.priors);
  const auto frames = load_labeled(entries, cfg.jobs);
  const ClassId cls = minority_of(cfg, frames.front().probs.classes());
  std::optional<MetaPipelineConfig> meta;
  if (cfg.meta) meta = MetaPipelineConfig{gbt_config(cfg), cfg.folds, cfg.seed};
  const SweepResult result = alpha_sweep(frames, priors, cfg.alphas, cls, meta, cfg.jobs);
  std::vector<MetricsReport> rows{result.bayes};
  rows.insert(rows.end(), result.rows.begin(), result.rows.end());
  write_metrics(cfg.out, rows);
}

// ---------------------------------------------------------------------------
// option wiring

void add_corpus(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--corpus", cfg.corpus, "Corpus directory (X_probs.npy, X_gt.npy)")->required();
}

void add_priors(CLI::App* sub, RunConfig& cfg, bool required) {
  auto* opt = sub->add_option("--priors", cfg.priors, "Prior field NPY");
  if (required) opt->required();
  sub->add_option("--alpha", cfg.alpha, "Prior interpolation weight in [0, 1]")->check(CLI::Range(0.0, 1.0));
}

void add_minority(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--minority", cfg.minority, "Minority class id")->required();
}

void add_gbt(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--stages", cfg.stages, "Boosting stages");
  sub->add_option("--depth", cfg.depth, "Maximum tree depth");
  sub->add_option("--max-features", cfg.max_features, "Features tried per split (0 = all)");
  sub->add_option("--learning-rate", cfg.learning_rate, "Shrinkage");
  sub->add_option("--seed", cfg.seed, "Random seed");
}

void add_common(CLI::App* sub, RunConfig& cfg, bool out_required = true) {
  auto* out = sub->add_option("--out", cfg.out, "Output path");
  if (out_required) out->required();
  sub->add_option("--config-out", cfg.config_out, "Resolved-config JSON (default <out>.config.json)");
  sub->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

json option_value(const CLI::Option* opt) {
  if (opt->get_items_expected_max() == 0) return opt->count() > 0;
  const std::string type = opt->get_type_name().substr(0, opt->get_type_name().find(':'));
  const bool numeric = type == "INT" || type == "UINT" || type == "FLOAT";
  auto convert = [&](const std::string& s) -> json {
    if (numeric) {
      try {
        return json::parse(s);
      } catch (const json::exception&) {
      }
    }
    return s;
  };
  const bool list = opt->get_expected_max() > 1;
  std::vector<std::string> values = opt->results();
  if (values.empty() && !list && !opt->get_default_str().empty()) values = {opt->get_default_str()};
  if (list) {
    json arr = json::array();
    for (const auto& v : values) arr.push_back(convert(v));
    return arr;
  }
  if (values.empty()) return nullptr;
  return convert(values.back());
}

json resolved_config(const CLI::App* sub) {
  json cfg = {{"subcommand", sub->get_name()}};
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    cfg[name] = option_value(opt);
  }
  return cfg;
}

void write_sidecar(const RunConfig& cfg, const CLI::App* sub) {
  fs::path path = cfg.config_out;
  if (path.empty()) {
    if (cfg.out.empty()) return;
    fs::path out = cfg.out;
    if (!out.has_filename()) out = out.parent_path();
    path = out.string() + ".config.json";
  }
  prepare_output_file(path);
  auto out = open_output(path);
  out << resolved_config(sub).dump(2) << '\n';
  finish_output(out, path);
}

}  // namespace

int run(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Post-processing toolkit for semantic segmentation: prior-adjusted decisions, "
               "segment meta-classification and mask fusion",
               "segfuse"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  using Handler = void (*)(const RunConfig&);
  std::map<std::string, Handler> handlers;
  auto subcommand = [&](const std::string& name, const std::string& help, Handler h) {
    handlers[name] = h;
    return app.add_subcommand(name, help);
  };

  {
    auto* sub = subcommand("synth", "Generate a synthetic corpus", cmd_synth);
    SceneSpec& s = cfg.scene;
    sub->add_option("--frames", cfg.frames, "Number of frames");
    sub->add_option("--height", s.height);
    sub->add_option("--width", s.width);
    sub->add_option("--classes", s.classes);
    sub->add_option("--minority", cfg.scene_minority);
    sub->add_option("--fraction", s.minority_pixel_fraction, "Expected minority pixel share");
    sub->add_option("--deficit", s.minority_confidence_deficit, "Minority logit deficit");
    sub->add_option("--blobs-min", s.blob_count_range.first);
    sub->add_option("--blobs-max", s.blob_count_range.second);
    sub->add_option("--temperature", s.noise_temperature, "Logit noise standard deviation");
    sub->add_option("--scale", s.logit_scale, "Logit gap of the true class");
    sub->add_option("--seed", s.seed);
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("estimate-priors", "Estimate class priors from ground-truth masks", cmd_estimate_priors);
    sub->add_option("--corpus", cfg.corpus, "Directory of X_gt.npy masks")->required();
    sub->add_option("--classes", cfg.classes, "Number of classes")->required();
    sub->add_option("--mode", cfg.prior_mode, "positional or global")
        ->check(CLI::IsMember({"positional", "global"}));
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("infer", "Write decision masks (Bayes without --priors)", cmd_infer);
    add_corpus(sub, cfg);
    add_priors(sub, cfg, false);
    sub->add_option("--dispersion-out", cfg.dispersion_out, "Directory for entropy/margin/variation heatmaps");
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("features", "Write the candidate feature table", cmd_features);
    add_corpus(sub, cfg);
    add_priors(sub, cfg, true);
    add_minority(sub, cfg);
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("train-meta", "Train the meta classifier on a labelled table", cmd_train_meta);
    sub->add_option("--candidates", cfg.candidates, "Candidate CSV with labels")->required();
    add_gbt(sub, cfg);
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("crossval", "Frame-grouped out-of-fold verdicts", cmd_crossval);
    sub->add_option("--candidates", cfg.candidates, "Candidate CSV with labels")->required();
    sub->add_option("--folds", cfg.folds, "Number of folds");
    add_gbt(sub, cfg);
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("importance", "Feature importance of a trained model", cmd_importance);
    sub->add_option("--model", cfg.model, "Model JSON")->required();
    sub->add_option("--top", cfg.top, "Keep only the N highest scores (0 = all)");
    add_common(sub, cfg, false);
  }
  {
    auto* sub = subcommand("fuse", "Fuse Bayes and adjusted masks using verdicts or a model", cmd_fuse);
    add_corpus(sub, cfg);
    add_priors(sub, cfg, true);
    add_minority(sub, cfg);
    sub->add_option("--verdicts", cfg.verdicts, "Verdict CSV");
    sub->add_option("--model", cfg.model, "Model JSON");
    sub->add_option("--base", cfg.base, "Directory of X_mask.npy to fuse onto instead of Bayes");
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("evaluate", "Segment and pixel metrics of predicted masks", cmd_evaluate);
    add_corpus(sub, cfg);
    sub->add_option("--pred", cfg.pred, "Directory of X_mask.npy predictions")->required();
    add_minority(sub, cfg);
    sub->add_option("--alpha", cfg.alpha, "Alpha reported in the metrics row");
    sub->add_option("--rule", cfg.rule, "Rule name reported in the metrics row");
    add_common(sub, cfg);
  }
  {
    auto* sub = subcommand("sweep", "Metrics over a list of alphas", cmd_sweep);
    add_corpus(sub, cfg);
    sub->add_option("--priors", cfg.priors, "Prior field NPY")->required();
    sub->add_option("--alphas", cfg.alphas, "Comma-separated alphas")->required()->delimiter(',')->check(
        CLI::Range(0.0, 1.0));
    add_minority(sub, cfg);
    sub->add_flag("--meta", cfg.meta, "Add cross-validated fusion rows");
    sub->add_option("--folds", cfg.folds, "Number of folds");
    add_gbt(sub, cfg);
    add_common(sub, cfg);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const auto parsed = app.get_subcommands();
    std::cerr << '\n' << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitInvalid;
  }

  const CLI::App* sub = app.get_subcommands().front();
  cfg.subcommand = sub->get_name();
  try {
    handlers.at(cfg.subcommand)(cfg);
    write_sidecar(cfg, sub);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("segfuse");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace segfuse::cli
