#include "rba/speech.hpp"

#include <algorithm>
#include <set>

#include "rba/rng.hpp"

namespace rba::speech {

std::vector<int> speaker_permutation(const SpeakerProfile& sp, const Vocab& vocab) {
  vocab.validate();
  const int va = vocab.acoustic_size;
  if (va < vocab.text_size) {
    throw ValidationError("PreconditionViolation",
                          "acoustic vocab smaller than text vocab");
  }
  std::vector<int> slots(static_cast<std::size_t>(va));
  for (int i = 0; i < va; ++i) slots[static_cast<std::size_t>(i)] = vocab.acoustic_begin() + i;
  Rng rng(hash_combine(sp.perm_seed, 0x5045524dULL));  // "PERM"
  for (int i = va - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
  }
  return slots;
}

std::vector<int> inverse_permutation(const std::vector<int>& perm, const Vocab& vocab) {
  std::vector<int> inv(static_cast<std::size_t>(vocab.total()), -1);
  for (std::size_t i = 0; i < perm.size() && i < static_cast<std::size_t>(vocab.text_size); ++i) {
    inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  }
  return inv;
}

std::vector<SpeakerProfile> build_speaker_bank(int n_speakers, std::uint64_t seed,
                                               double filler_rate,
                                               double substitution_rate) {
  if (n_speakers < 4) {
    throw ValidationError("PreconditionViolation",
                          "speaker bank needs >= 4 speakers (group size is 4)");
  }
  if (filler_rate < 0.0 || filler_rate > 1.0 || substitution_rate < 0.0 ||
      substitution_rate > 1.0) {
    throw ValidationError("PreconditionViolation", "noise rates must lie in [0,1]");
  }
  Rng rng(hash_combine(seed, 0x42414e4bULL));  // "BANK"
  std::set<std::uint64_t> used;
  std::vector<SpeakerProfile> bank;
  bank.reserve(static_cast<std::size_t>(n_speakers));
  for (int i = 0; i < n_speakers; ++i) {
    std::uint64_t ps = rng.next_u64();
    while (!used.insert(ps).second) ps = rng.next_u64();
    bank.push_back({i + 1, ps, filler_rate, substitution_rate});
  }
  return bank;
}

SpokenInstruction synthesize_spoken(const textgen::Instruction& instr,
                                    const SpeakerProfile& sp, const Vocab& vocab,
                                    std::uint64_t seed) {
  for (int t : instr.text_tokens) {
    if (!vocab.is_text(t)) {
      throw ValidationError("PreconditionViolation",
                            "instruction token outside text vocab");
    }
  }
  if (instr.text_tokens.empty()) {
    throw ValidationError("EmptyInput", "instruction has no tokens");
  }

  const std::vector<int> perm = speaker_permutation(sp, vocab);
  const int n_fillers = vocab.acoustic_size - vocab.text_size;

  Rng rng(hash_combine(seed, sp.perm_seed));
  SpokenInstruction out;
  out.instruction_id = instr.id;
  out.speaker_id = sp.speaker_id;
  out.acoustic_tokens.reserve(instr.text_tokens.size() * 2);

  for (int t : instr.text_tokens) {
    if (n_fillers > 0 && rng.next_double() < sp.filler_rate) {
      const auto f = static_cast<std::size_t>(
          rng.next_below(static_cast<std::uint64_t>(n_fillers)));
      out.acoustic_tokens.push_back(perm[static_cast<std::size_t>(vocab.text_size) + f]);
    }
    int mapped = perm[static_cast<std::size_t>(t)];
    if (rng.next_double() < sp.substitution_rate) {
      mapped = vocab.acoustic_begin() +
               static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab.acoustic_size)));
    }
    out.acoustic_tokens.push_back(mapped);
  }
  return out;
}

std::vector<SpokenInstruction> speak_group(const textgen::Instruction& instr,
                                           const std::vector<SpeakerProfile>& bank,
                                           const Vocab& vocab, int k, std::uint64_t seed) {
  if (k < 1 || static_cast<std::size_t>(k) > bank.size()) {
    throw ValidationError("PreconditionViolation",
                          "group size exceeds speaker bank size");
  }
  // Per-instruction subset seed so corpus order never couples selections.
  const std::uint64_t sel_seed = hash_combine(seed, hash_str(instr.id));
  Rng rng(sel_seed);
  std::vector<int> idx(bank.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(idx.size() - static_cast<std::size_t>(i))));
    std::swap(idx[static_cast<std::size_t>(i + j)], idx[static_cast<std::size_t>(i)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return bank[static_cast<std::size_t>(a)].speaker_id <
           bank[static_cast<std::size_t>(b)].speaker_id;
  });

  std::vector<SpokenInstruction> group;
  group.reserve(static_cast<std::size_t>(k));
  for (int i : idx) {
    const SpeakerProfile& sp = bank[static_cast<std::size_t>(i)];
    group.push_back(
        synthesize_spoken(instr, sp, vocab, hash_combine(sel_seed, static_cast<std::uint64_t>(sp.speaker_id))));
  }
  return group;
}

}  // namespace rba::speech
