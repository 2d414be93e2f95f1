#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rba/errors.hpp"
#include "rba/textgen.hpp"
#include "rba/vocab.hpp"

namespace rba::speech {

// A voice. perm_seed pins the speaker's bijection from the text vocabulary
// into the acoustic block; the noise rates are the speaker's disfluency
// profile. The permutation is the desk analog of an acoustic fingerprint:
// same words, divergent surface forms per speaker.
struct SpeakerProfile {
  int speaker_id = 1;  // >= 1
  std::uint64_t perm_seed = 0;
  double filler_rate = 0.0;        // in [0,1]
  double substitution_rate = 0.0;  // in [0,1]

  friend bool operator==(const SpeakerProfile&, const SpeakerProfile&) = default;
};

struct SpokenInstruction {
  std::string instruction_id;
  int speaker_id = 0;
  std::vector<int> acoustic_tokens;  // non-empty, all within the acoustic block
};

// The speaker's text->acoustic map as a table: entry i is the acoustic token
// id that text token i renders to. Built by a seeded Fisher-Yates shuffle
// over the whole acoustic block; text ids [0, Vt) map through the first Vt
// slots and the remaining slots form the speaker's filler pool.
std::vector<int> speaker_permutation(const SpeakerProfile& sp, const Vocab& vocab);

// Inverse map acoustic token -> text token, -1 for tokens outside the
// speaker's text image (fillers, substitution debris).
std::vector<int> inverse_permutation(const std::vector<int>& perm, const Vocab& vocab);

// n distinct profiles with pairwise-distinct perm_seeds, deterministic given
// seed. All speakers share the given noise rates.
std::vector<SpeakerProfile> build_speaker_bank(int n_speakers, std::uint64_t seed,
                                               double filler_rate = 0.0,
                                               double substitution_rate = 0.0);

// One rendering: each text token mapped through the speaker bijection, with
// Bernoulli(filler_rate) filler insertion before each token and
// Bernoulli(substitution_rate) corruption of mapped tokens. Deterministic
// given (instr, sp, seed).
SpokenInstruction synthesize_spoken(const textgen::Instruction& instr,
                                    const SpeakerProfile& sp, const Vocab& vocab,
                                    std::uint64_t seed);

// k distinct speakers sampled without replacement (selection seeded per
// instruction id), renderings returned in speaker_id order.
std::vector<SpokenInstruction> speak_group(const textgen::Instruction& instr,
                                           const std::vector<SpeakerProfile>& bank,
                                           const Vocab& vocab, int k, std::uint64_t seed);

}  // namespace rba::speech
