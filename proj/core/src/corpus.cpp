#include "dvauth/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"

namespace fs = std::filesystem;

namespace dvauth {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Document read_document(const fs::path& file, Role role, const std::string& problem_id) {
  std::string text = io::read_file_text(file);
  if (!is_valid_utf8(text)) {
    throw DecodeError(file.string(), "not valid UTF-8: " + file.string());
  }
  if (trim(text).empty()) {
    throw StructuralError(problem_id, problem_id + ": empty document " + file.filename().string());
  }
  return Document{file.stem().string(), std::move(text), role};
}

std::map<std::string, bool> read_truth(const fs::path& path) {
  const std::string raw = io::read_file_text(path);
  if (!is_valid_utf8(raw)) throw DecodeError(path.string(), "not valid UTF-8: " + path.string());
  std::map<std::string, bool> labels;
  std::istringstream in(raw);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto sp = body.find_first_of(" \t");
    if (sp == std::string_view::npos) {
      throw ConsistencyError(path.string() + ":" + std::to_string(lineno) + ": expected '<id> <Y|N>'");
    }
    const std::string id(body.substr(0, sp));
    const auto answer = trim(body.substr(sp));
    if (answer != "Y" && answer != "N") {
      throw ConsistencyError(path.string() + ":" + std::to_string(lineno) + ": label must be Y or N");
    }
    if (!labels.emplace(id, answer == "Y").second) {
      throw ConsistencyError(path.string() + ": duplicate truth entry for " + id);
    }
  }
  return labels;
}

}  // namespace

std::string Problem::document_key(std::string_view problem_id, std::string_view doc_id) {
  std::string key(problem_id);
  key.push_back('/');
  key.append(doc_id);
  return key;
}

bool Dataset::labeled() const {
  return !problems.empty() &&
         std::all_of(problems.begin(), problems.end(), [](const Problem& p) { return p.label.has_value(); });
}

std::size_t Dataset::positive_count() const {
  return static_cast<std::size_t>(std::count_if(
      problems.begin(), problems.end(), [](const Problem& p) { return p.label.value_or(false); }));
}

const Problem* Dataset::find(std::string_view problem_id) const {
  for (const auto& p : problems) {
    if (p.id == problem_id) return &p;
  }
  return nullptr;
}

Dataset load_dataset(const fs::path& root, const std::optional<fs::path>& truth) {
  if (!fs::is_directory(root)) {
    throw StructuralError("", "dataset root is not a directory: " + root.string());
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  Dataset data;
  data.name = fs::absolute(root).lexically_normal().filename().string();
  if (data.name.empty()) data.name = fs::absolute(root).lexically_normal().parent_path().filename().string();

  for (const auto& dir : dirs) {
    Problem problem;
    problem.id = dir.filename().string();
    std::vector<fs::path> known_files;
    bool has_unknown = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (name == "unknown.txt") {
        has_unknown = true;
      } else if (name.starts_with("known") && name.ends_with(".txt")) {
        known_files.push_back(entry.path());
      }
    }
    if (!has_unknown) {
      throw StructuralError(problem.id, problem.id + ": missing unknown.txt");
    }
    if (known_files.empty()) {
      throw StructuralError(problem.id, problem.id + ": no known*.txt documents");
    }
    std::sort(known_files.begin(), known_files.end());
    for (const auto& f : known_files) problem.known.push_back(read_document(f, Role::known, problem.id));
    problem.unknown = read_document(dir / "unknown.txt", Role::unknown, problem.id);
    data.problems.push_back(std::move(problem));
  }

  if (truth) {
    auto labels = read_truth(*truth);
    for (auto& p : data.problems) {
      auto it = labels.find(p.id);
      if (it == labels.end()) {
        throw ConsistencyError("problem " + p.id + " has no entry in " + truth->string());
      }
      p.label = it->second;
      labels.erase(it);
    }
    if (!labels.empty()) {
      throw ConsistencyError("truth entry " + labels.begin()->first + " has no problem directory");
    }
    const auto pos = data.positive_count();
    const auto neg = data.problems.size() - pos;
    if ((pos > neg ? pos - neg : neg - pos) > 1) {
      spdlog::warn("dataset {}: unbalanced labels ({} same-author, {} different-author)", data.name, pos, neg);
    }
  }
  return data;
}

void write_dataset(const Dataset& data, const fs::path& root, const std::optional<fs::path>& truth) {
  fs::create_directories(root);
  std::string truth_text;
  for (const auto& p : data.problems) {
    const fs::path dir = root / p.id;
    fs::create_directories(dir);
    for (const auto& d : p.known) io::write_file_text(dir / (d.id + ".txt"), d.text);
    io::write_file_text(dir / "unknown.txt", p.unknown.text);
    if (p.label) truth_text += p.id + (*p.label ? " Y\n" : " N\n");
  }
  if (truth && data.labeled()) io::write_file_text(*truth, truth_text);
}

std::vector<SegmentRange> segment_ranges(std::size_t n, std::size_t max_len, std::size_t min_tail) {
  if (min_tail < 1 || max_len < min_tail) {
    throw ContractError("segment_document requires max_len >= min_tail >= 1");
  }
  std::vector<SegmentRange> out;
  for (std::size_t begin = 0; begin < n; begin += max_len) {
    const std::size_t end = std::min(n, begin + max_len);
    if (end - begin == max_len || end - begin >= min_tail) out.push_back({begin, end});
  }
  return out;
}

std::vector<Segment> segment_document(std::span<const TokenId> doc, std::size_t max_len,
                                      std::size_t min_tail) {
  std::vector<Segment> out;
  for (const auto& r : segment_ranges(doc.size(), max_len, min_tail)) {
    Segment s;
    s.offset = r.begin;
    s.tokens.assign(doc.begin() + static_cast<std::ptrdiff_t>(r.begin),
                    doc.begin() + static_cast<std::ptrdiff_t>(r.end));
    out.push_back(std::move(s));
  }
  return out;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    char32_t cp;
    char32_t min;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2, cp = c & 0x1F, min = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3, cp = c & 0x0F, min = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4, cp = c & 0x07, min = 0x10000;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

}  // namespace dvauth
