#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dvauth {

using TokenId = std::uint32_t;

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kMaskId = 2;
inline constexpr std::size_t kReservedTokens = 3;

// Token <-> id mapping. Ids 0..2 are reserved for UNK, BOS and MASK; corpus
// tokens start at id 3, ordered by descending frequency then lexicographically.
class Vocabulary {
 public:
  Vocabulary();
  Vocabulary(std::vector<std::string> corpus_tokens, int min_count);

  std::size_t size() const noexcept { return tokens_.size(); }
  int min_count() const noexcept { return min_count_; }

  // UNK for out-of-vocabulary surface forms.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  // {"min_count": int, "tokens": [surface strings from id 3 on]}
  std::string to_json() const;
  static Vocabulary from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.min_count_ == b.min_count_ && a.tokens_ == b.tokens_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
  int min_count_ = 1;
};

struct TokenSeq {
  std::vector<TokenId> ids;
  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
};

// Lowercases, splits on Unicode whitespace and emits every punctuation
// character as its own token. Invalid UTF-8 bytes become U+FFFD.
std::vector<std::string> tokenize(std::string_view text);

Vocabulary build_vocab(std::span<const std::string> texts, int min_count);

TokenSeq encode(std::span<const std::string> tokens, const Vocabulary& vocab);

}  // namespace dvauth
