#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvauth/textmodel.hpp"

namespace dvauth {

enum class Role { known, unknown };

struct Document {
  std::string id;  // file stem, e.g. "known01" or "unknown"
  std::string text;
  Role role = Role::known;

  friend bool operator==(const Document&, const Document&) = default;
};

// One verification problem: known set K and a single unknown document u.
struct Problem {
  std::string id;
  std::vector<Document> known;
  Document unknown;
  std::optional<bool> label;  // true = same author

  // Stable key used to look up per-document artifacts, "<problem>/<doc>".
  static std::string document_key(std::string_view problem_id, std::string_view doc_id);

  friend bool operator==(const Problem&, const Problem&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Problem> problems;

  bool labeled() const;
  std::size_t positive_count() const;
  const Problem* find(std::string_view problem_id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// A window of a tokenized document. `offset` is the position of the first
// token within the source document.
struct Segment {
  std::string problem_id;
  std::string source_doc_id;
  std::size_t offset = 0;
  std::vector<TokenId> tokens;
  Role role = Role::known;
};

inline constexpr std::size_t kSegmentLength = 128;
inline constexpr std::size_t kMinSegmentTail = 32;

// Reads <root>/<problem>/known*.txt and unknown.txt, plus an optional truth
// file of "<problem> <Y|N>" lines. Problems come back in lexicographic order.
Dataset load_dataset(const std::filesystem::path& root,
                     const std::optional<std::filesystem::path>& truth = std::nullopt);

// Writes the tree and, when `truth` is given and the dataset is labeled, the
// truth file.
void write_dataset(const Dataset& data, const std::filesystem::path& root,
                   const std::optional<std::filesystem::path>& truth = std::nullopt);

// [begin, end) windows of length max_len; a trailing partial window survives
// only when it holds at least min_tail tokens.
struct SegmentRange {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const noexcept { return end - begin; }
};
std::vector<SegmentRange> segment_ranges(std::size_t n, std::size_t max_len = kSegmentLength,
                                         std::size_t min_tail = kMinSegmentTail);

std::vector<Segment> segment_document(std::span<const TokenId> doc,
                                      std::size_t max_len = kSegmentLength,
                                      std::size_t min_tail = kMinSegmentTail);

// True when the bytes form valid UTF-8.
bool is_valid_utf8(std::string_view bytes);

}  // namespace dvauth
