#pragma once

#include <span>
#include <string>
#include <vector>

#include "rba/errors.hpp"

namespace rba {

// Token index layout. One flat id space with disjoint blocks:
//
//   [0, Vt)              text tokens (the world lexicon, word per id)
//   Vt                   EOS
//   Vt + 1               BOS
//   [Vt + 2, Vt + 2+Va)  acoustic tokens (input-only)
//
// Emittable tokens are text + EOS, i.e. ids [0, Vt]; that block indexes the
// policy's output matrix directly.
struct Vocab {
  int text_size = 0;      // Vt
  int acoustic_size = 0;  // Va

  int eos() const { return text_size; }
  int bos() const { return text_size + 1; }
  int acoustic_begin() const { return text_size + 2; }
  int acoustic_end() const { return text_size + 2 + acoustic_size; }
  int total() const { return text_size + acoustic_size + 2; }
  int emittable() const { return text_size + 1; }

  bool is_text(int tok) const { return tok >= 0 && tok < text_size; }
  bool is_acoustic(int tok) const { return tok >= acoustic_begin() && tok < acoustic_end(); }
  bool is_emittable(int tok) const { return tok >= 0 && tok <= text_size; }

  void validate() const {
    if (text_size < 1 || acoustic_size < 1) {
      throw ValidationError("BadVocab", "text_size and acoustic_size must be >= 1");
    }
  }

  friend bool operator==(const Vocab&, const Vocab&) = default;
};

// Maps text token ids back to lexicon words, dropping EOS/BOS and anything
// outside the text block. Judges compare word sequences.
inline std::vector<std::string> detokenize(const std::vector<std::string>& lexicon,
                                           std::span<const int> tokens) {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (int t : tokens) {
    if (t >= 0 && static_cast<std::size_t>(t) < lexicon.size()) {
      words.push_back(lexicon[static_cast<std::size_t>(t)]);
    }
  }
  return words;
}

}  // namespace rba
