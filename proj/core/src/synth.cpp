#include "dvauth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dvauth/error.hpp"

namespace dvauth {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

// Consonant-vowel syllables: ids map one-to-one onto spellings.
std::string syllables(std::size_t id, int count) {
  std::string s;
  const std::size_t base = kConsonants.size() * kVowels.size();
  for (int k = 0; k < count; ++k) {
    const std::size_t syl = id % base;
    id /= base;
    s.push_back(kConsonants[syl / kVowels.size()]);
    s.push_back(kVowels[syl % kVowels.size()]);
  }
  return s;
}

std::size_t draw_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

StyleGenerator::StyleGenerator(SynthConfig cfg) : cfg_(cfg) {
  if (cfg_.classes < 2 || cfg_.words_per_class < 1 || cfg_.successors < 1 ||
      cfg_.min_sentence < 1 || cfg_.max_sentence < cfg_.min_sentence) {
    throw ConfigError("invalid synthetic generator configuration");
  }
  const auto two_syllable_space = kConsonants.size() * kVowels.size() * kConsonants.size() * kVowels.size();
  if (static_cast<std::size_t>(cfg_.classes * cfg_.words_per_class) > two_syllable_space) {
    throw ConfigError("synthetic vocabulary too large");
  }
  Rng rng(cfg_.seed);
  std::size_t next_word = 0;
  regular_.resize(static_cast<std::size_t>(cfg_.classes));
  regular_cdf_.resize(static_cast<std::size_t>(cfg_.classes));
  for (int c = 0; c < cfg_.classes; ++c) {
    double total = 0.0;
    for (int k = 0; k < cfg_.words_per_class; ++k) {
      regular_[c].push_back(syllables(next_word++, 2));
      total += 1.0 / std::pow(k + 1.0, 0.8);
      regular_cdf_[c].push_back(total);
    }
    const std::string stem = syllables(static_cast<std::size_t>(c) * 7919 + 13, 3);
    stems_.push_back(stem);
    archaic_.push_back(stem + "eth");
    modern_.push_back(stem + "s");
  }
  for (int k = 0; k < cfg_.function_words; ++k) {
    archaic_function_.push_back("th" + syllables(static_cast<std::size_t>(k), 1));
    modern_function_.push_back("x" + syllables(static_cast<std::size_t>(k), 2));
  }
  successor_.resize(static_cast<std::size_t>(cfg_.classes));
  double total = 0.0;
  for (int k = 0; k < cfg_.successors; ++k) {
    total += 1.0 / (k + 1.0);
    successor_cdf_.push_back(total);
  }
  for (int c = 0; c < cfg_.classes; ++c) {
    for (int k = 0; k < cfg_.successors; ++k) {
      int next;
      do {
        next = static_cast<int>(rng.below(static_cast<std::size_t>(cfg_.classes)));
      } while (next == c ||
               std::find(successor_[c].begin(), successor_[c].end(), next) != successor_[c].end());
      successor_[c].push_back(next);
    }
  }
  // Sentence-final "." is one token in (mean length + 1).
  const double mean_len = 0.5 * (cfg_.min_sentence + cfg_.max_sentence);
  slot_probability_ = std::min(1.0, cfg_.marker_rate * (mean_len + 1.0) / mean_len);
}

std::size_t StyleGenerator::surface_vocabulary() const noexcept {
  return static_cast<std::size_t>(cfg_.classes * cfg_.words_per_class) + 2 * stems_.size() +
         archaic_function_.size() + modern_function_.size() + 1;
}

int StyleGenerator::next_class(int cls, Rng& rng) const {
  return successor_[static_cast<std::size_t>(cls)][draw_cdf(successor_cdf_, rng)];
}

// Index into regular_[cls], or words_per_class for the marker slot.
std::size_t StyleGenerator::draw_word(int cls, Rng& rng) const {
  if (rng.bernoulli(slot_probability_)) return static_cast<std::size_t>(cfg_.words_per_class);
  return draw_cdf(regular_cdf_[static_cast<std::size_t>(cls)], rng);
}

void StyleGenerator::append_sentence(std::string& out, std::size_t& emitted, std::size_t limit,
                                     const Style* style, Rng& rng) const {
  const auto emit = [&](const std::string& w) {
    if (emitted >= limit) return;
    if (!out.empty()) out.push_back(' ');
    out += w;
    ++emitted;
  };
  const auto len = static_cast<int>(cfg_.min_sentence +
                                    rng.below(static_cast<std::size_t>(cfg_.max_sentence - cfg_.min_sentence + 1)));
  int cls = static_cast<int>(rng.below(static_cast<std::size_t>(cfg_.classes)));
  for (int k = 0; k < len && emitted < limit; ++k) {
    const std::size_t w = draw_word(cls, rng);
    const auto c = static_cast<std::size_t>(cls);
    if (w < regular_[c].size()) {
      emit(regular_[c][w]);
    } else if (style) {
      emit(markers(*style)[c]);
    } else {
      // Reference text: either variant, introduced by a cue word of its register.
      const Style s = rng.bernoulli(0.5) ? Style::archaic : Style::modern;
      const auto& cues = s == Style::archaic ? archaic_function_ : modern_function_;
      if (!cues.empty()) emit(cues[rng.below(cues.size())]);
      emit(markers(s)[c]);
    }
    cls = next_class(cls, rng);
  }
  emit(".");
}

std::vector<std::string> StyleGenerator::reference_corpus(std::size_t documents,
                                                          std::size_t tokens_per_document,
                                                          std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<std::string> docs;
  docs.reserve(documents);
  for (std::size_t i = 0; i < documents; ++i) {
    std::string text;
    std::size_t emitted = 0;
    while (emitted < tokens_per_document) append_sentence(text, emitted, tokens_per_document, nullptr, rng);
    docs.push_back(std::move(text));
  }
  return docs;
}

std::string StyleGenerator::author_text(Style style, std::size_t tokens, Rng& rng) const {
  std::string text;
  std::size_t emitted = 0;
  while (emitted < tokens) {
    append_sentence(text, emitted, tokens, &style, rng);
  }
  return text;
}

Dataset StyleGenerator::make_dataset(std::size_t problems, std::size_t tokens_per_document,
                                     std::uint64_t seed, std::string name,
                                     std::size_t known_documents) const {
  if (known_documents < 1) throw ConfigError("make_dataset needs at least one known document");
  Rng rng(seed);
  Dataset data;
  data.name = std::move(name);
  for (std::size_t i = 0; i < problems; ++i) {
    Problem p;
    char id[32];
    std::snprintf(id, sizeof id, "SYN%03zu", i + 1);
    p.id = id;
    const bool same = i % 2 == 0;
    const Style ks = rng.bernoulli(0.5) ? Style::archaic : Style::modern;
    const Style us = same ? ks : (ks == Style::archaic ? Style::modern : Style::archaic);
    Rng doc_rng = rng.fork(i);
    for (std::size_t k = 0; k < known_documents; ++k) {
      char kid[32];
      std::snprintf(kid, sizeof kid, "known%02zu", k + 1);
      p.known.push_back(Document{kid, author_text(ks, tokens_per_document, doc_rng), Role::known});
    }
    p.unknown = Document{"unknown", author_text(us, tokens_per_document, doc_rng), Role::unknown};
    p.label = same;
    data.problems.push_back(std::move(p));
  }
  return data;
}

}  // namespace dvauth
