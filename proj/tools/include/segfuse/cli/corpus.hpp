#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace segfuse::cli {

// A directory corpus pairs files by stem: X_probs.npy, X_gt.npy, X_mask.npy.
struct CorpusEntry {
  std::string id;
  std::filesystem::path probs;
  std::optional<std::filesystem::path> gt;
};

inline constexpr const char* kProbsSuffix = "_probs.npy";
inline constexpr const char* kGtSuffix = "_gt.npy";
inline constexpr const char* kMaskSuffix = "_mask.npy";

// Every stem with a probabilities file, sorted by id.
std::vector<CorpusEntry> list_corpus(const std::filesystem::path& dir);

// Stems of all ground-truth files, sorted; probabilities are not required.
std::vector<std::string> list_gt_stems(const std::filesystem::path& dir);

std::filesystem::path member_path(const std::filesystem::path& dir, const std::string& id,
                                  const char* suffix);

}  // namespace segfuse::cli
