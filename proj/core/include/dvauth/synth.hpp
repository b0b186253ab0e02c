#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dvauth/corpus.hpp"
#include "dvauth/rng.hpp"

namespace dvauth {

// Synthetic stylometry fixture. A class-level Markov chain emits a neutral
// word stream in which about `marker_rate` of the tokens are marker slots.
// Every class owns one slot word with an archaic and a modern variant. The
// reference corpus fills each slot with a random variant preceded by a cue
// word of that register, so both marker sets get distinct embeddings.
// Author documents fill every slot with the author's own variant and carry
// no cue words.
enum class Style { archaic, modern };

struct SynthConfig {
  int classes = 50;
  int words_per_class = 38;
  int function_words = 10;      // cue words per register
  int successors = 3;           // out-degree of the class chain
  double marker_rate = 0.10;    // marker tokens per author-document token
  int min_sentence = 8;
  int max_sentence = 16;
  std::uint64_t seed = 7;
};

class StyleGenerator {
 public:
  explicit StyleGenerator(SynthConfig cfg = {});

  const SynthConfig& config() const noexcept { return cfg_; }

  // Reference corpus for training the NWS model.
  std::vector<std::string> reference_corpus(std::size_t documents, std::size_t tokens_per_document,
                                            std::uint64_t seed) const;

  std::string author_text(Style style, std::size_t tokens, Rng& rng) const;

  // Balanced labeled dataset: even-indexed problems are same-author.
  Dataset make_dataset(std::size_t problems, std::size_t tokens_per_document, std::uint64_t seed,
                       std::string name = "synthetic", std::size_t known_documents = 1) const;

  const std::vector<std::string>& markers(Style style) const noexcept {
    return style == Style::archaic ? archaic_ : modern_;
  }
  const std::vector<std::string>& stems() const noexcept { return stems_; }
  // Distinct surface forms the generator can emit, including ".".
  std::size_t surface_vocabulary() const noexcept;

 private:
  std::size_t draw_word(int cls, Rng& rng) const;
  int next_class(int cls, Rng& rng) const;
  // A null style writes reference text.
  void append_sentence(std::string& out, std::size_t& emitted, std::size_t limit, const Style* style,
                       Rng& rng) const;

  SynthConfig cfg_;
  std::vector<std::vector<std::string>> regular_;  // per class
  std::vector<std::vector<double>> regular_cdf_;    // per class, over regular words
  std::vector<std::string> stems_;
  std::vector<std::string> archaic_;
  std::vector<std::string> modern_;
  std::vector<std::string> archaic_function_;
  std::vector<std::string> modern_function_;
  std::vector<std::vector<int>> successor_;
  std::vector<double> successor_cdf_;
  double slot_probability_ = 0.0;
};

}  // namespace dvauth
