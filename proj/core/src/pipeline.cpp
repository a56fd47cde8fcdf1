#include "segfuse/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "segfuse/error.hpp"

namespace segfuse {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw FormatError("candidate csv line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return v;
}

}  // namespace

FrameAnalysis analyze_frame(const ProbTensor& probs, const PriorField& priors,
                            const DecisionConfig& cfg, ClassId minority_class) {
  if (minority_class >= probs.classes()) throw ValidationError("minority class out of range");
  FrameAnalysis a;
  a.bayes = bayes_decision(probs);
  a.adjusted = decide(probs, priors, cfg);
  a.likelihood = adjusted_likelihood(probs, priors, cfg);
  a.maps = dispersion_maps(a.likelihood);
  a.candidates = disagreement_set(a.adjusted, a.bayes, minority_class);
  a.features.reserve(a.candidates.size());
  for (const Segment& seg : a.candidates) {
    a.features.push_back(segment_features(seg, a.maps, a.likelihood, a.adjusted));
  }
  return a;
}

CandidateTable::CandidateTable(std::vector<std::string> names)
    : schema(std::move(names)), features(schema.size()) {}

void CandidateTable::append_frame(const std::string& frame_id, const FrameAnalysis& analysis,
                                  const std::vector<int>& frame_labels) {
  if (schema.empty()) {
    schema = feature_schema(analysis.likelihood.classes());
    features = FeatureMatrix(schema.size());
  }
  if (!frame_labels.empty() && frame_labels.size() != analysis.candidates.size()) {
    throw ValidationError("candidate table: label count does not match candidates");
  }
  const bool labelled_so_far = has_labels();
  if (!analysis.candidates.empty()) {
    if (frame_labels.empty() && !labels.empty()) {
      throw ValidationError("candidate table: cannot mix labelled and unlabelled frames");
    }
    if (!frame_labels.empty() && !labelled_so_far) {
      throw ValidationError("candidate table: cannot mix labelled and unlabelled frames");
    }
  }
  for (std::size_t k = 0; k < analysis.candidates.size(); ++k) {
    frame_ids.push_back(frame_id);
    segment_ids.push_back(k);
    class_ids.push_back(analysis.candidates[k].class_id);
    features.append_row(analysis.features[k].values);
    if (!frame_labels.empty()) labels.push_back(frame_labels[k]);
  }
}

void write_candidate_csv(std::ostream& out, const CandidateTable& table) {
  const bool labelled = table.has_labels() && table.rows() > 0;
  out << "frame_id,segment_id,class_id";
  for (const auto& name : table.schema) out << ',' << name;
  if (labelled) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << table.frame_ids[i] << ',' << table.segment_ids[i] << ','
        << static_cast<int>(table.class_ids[i]);
    for (double v : table.features.row(i)) out << ',' << format_double(v);
    if (labelled) out << ',' << table.labels[i];
    out << '\n';
  }
}

CandidateTable read_candidate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("candidate csv: missing header");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "frame_id" || header[1] != "segment_id" ||
      header[2] != "class_id") {
    throw FormatError("candidate csv: header must start with frame_id,segment_id,class_id");
  }
  const bool labelled = header.back() == "label";
  std::vector<std::string> schema(header.begin() + 3, header.end() - (labelled ? 1 : 0));
  if (schema.empty()) throw FormatError("candidate csv: no feature columns");
  CandidateTable table(schema);

  std::size_t line_no = 1;
  std::vector<double> row(schema.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw FormatError("candidate csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    table.frame_ids.push_back(fields[0]);
    table.segment_ids.push_back(static_cast<std::size_t>(parse_double(fields[1], line_no)));
    table.class_ids.push_back(static_cast<ClassId>(parse_double(fields[2], line_no)));
    for (std::size_t j = 0; j < schema.size(); ++j) row[j] = parse_double(fields[3 + j], line_no);
    table.features.append_row(row);
    if (labelled) {
      const double label = parse_double(fields.back(), line_no);
      if (label != 0.0 && label != 1.0) {
        throw FormatError("candidate csv line " + std::to_string(line_no) + ": label must be 0 or 1");
      }
      table.labels.push_back(static_cast<int>(label));
    }
  }
  return table;
}

void write_candidate_csv(const std::filesystem::path& path, const CandidateTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_candidate_csv(out, table);
  if (!out) throw IoError("write failed: " + path.string());
}

CandidateTable read_candidate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_candidate_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace segfuse
