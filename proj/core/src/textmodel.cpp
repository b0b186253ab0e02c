#include "dvauth/textmodel.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"

namespace dvauth {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at `pos`, advancing it. Malformed or
// overlong sequences consume one byte and yield U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2, cp = lead & 0x1F, min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3, cp = lead & 0x0F, min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4, cp = lead & 0x07, min = 0x10000;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto c = static_cast<unsigned char>(s[pos + k]);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacement;
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  // Latin-1 punctuation and symbols, excluding letters and digits.
  if (c >= 0xA1 && c <= 0xBF) {
    return c != 0xAA && c != 0xB2 && c != 0xB3 && c != 0xB5 && c != 0xB9 && c != 0xBA &&
           !(c >= 0xBC && c <= 0xBE);
  }
  if (c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x2010 && c <= 0x2027) return true;
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x3001 && c <= 0x3003) return true;
  if (c >= 0x3008 && c <= 0x3011) return true;
  if (c >= 0xFF01 && c <= 0xFF0F) return true;
  return c == kReplacement;
}

// Simple case folding for Latin, Greek and Cyrillic capitals.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c < 0x80) return c;
  if ((c >= 0xC0 && c <= 0xDE) && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x137) return c | 1;
  if (c >= 0x139 && c <= 0x148) return (c & 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return c | 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c & 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  return c;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = next_code_point(text, pos);
    if (is_space(cp)) {
      flush();
    } else if (is_punct(cp)) {
      flush();
      std::string p;
      append_utf8(p, cp);
      out.push_back(std::move(p));
    } else {
      append_utf8(current, to_lower(cp));
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() : tokens_{"<unk>", "<bos>", "<mask>"} {
  for (TokenId i = 0; i < kReservedTokens; ++i) index_.emplace(tokens_[i], i);
}

Vocabulary::Vocabulary(std::vector<std::string> corpus_tokens, int min_count)
    : Vocabulary() {
  if (min_count < 1) throw ContractError("min_count must be >= 1");
  min_count_ = min_count;
  tokens_.reserve(kReservedTokens + corpus_tokens.size());
  for (auto& t : corpus_tokens) {
    const auto id = static_cast<TokenId>(tokens_.size());
    auto [it, inserted] = index_.emplace(t, id);
    if (!inserted || t.empty()) {
      throw FormatError("vocabulary token repeated or empty: '" + t + "'");
    }
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end() || it->second < kReservedTokens) return kUnkId;
  return it->second;
}

bool Vocabulary::contains(std::string_view token) const { return id(token) != kUnkId; }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw ContractError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["min_count"] = min_count_;
  j["tokens"] = std::vector<std::string>(tokens_.begin() + kReservedTokens, tokens_.end());
  return j.dump();
}

Vocabulary Vocabulary::from_json(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                      j.at("min_count").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocabulary json: ") + e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  io::write_file_text(path, to_json());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return from_json(io::read_file_text(path));
}

Vocabulary build_vocab(std::span<const std::string> texts, int min_count) {
  if (min_count < 1) throw ContractError("min_count must be >= 1");
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(text)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, n);
  }
  // std::map iteration is lexicographic already; stable sort keeps that order
  // among equal counts.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.empty()) spdlog::warn("build_vocab: empty corpus, vocabulary holds reserved tokens only");
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), min_count);
}

TokenSeq encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
  TokenSeq seq;
  seq.ids.reserve(tokens.size());
  for (const auto& t : tokens) seq.ids.push_back(vocab.id(t));
  return seq;
}

}  // namespace dvauth
