#include "segfuse/cli/corpus.hpp"

#include <algorithm>

#include "segfuse/error.hpp"

namespace segfuse::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> stems_with_suffix(const fs::path& dir, const std::string& suffix) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

}  // namespace

fs::path member_path(const fs::path& dir, const std::string& id, const char* suffix) {
  return dir / (id + suffix);
}

std::vector<CorpusEntry> list_corpus(const fs::path& dir) {
  std::vector<CorpusEntry> corpus;
  for (auto& id : stems_with_suffix(dir, kProbsSuffix)) {
    CorpusEntry entry{id, member_path(dir, id, kProbsSuffix), std::nullopt};
    const fs::path gt = member_path(dir, id, kGtSuffix);
    if (fs::is_regular_file(gt)) entry.gt = gt;
    corpus.push_back(std::move(entry));
  }
  if (corpus.empty()) throw IoError("no *" + std::string(kProbsSuffix) + " files in " + dir.string());
  return corpus;
}

std::vector<std::string> list_gt_stems(const fs::path& dir) {
  auto stems = stems_with_suffix(dir, kGtSuffix);
  if (stems.empty()) throw IoError("no *" + std::string(kGtSuffix) + " files in " + dir.string());
  return stems;
}

}  // namespace segfuse::cli
