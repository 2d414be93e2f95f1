#include <algorithm>
#include <set>

#include "doctest.h"
#include "rba/rng.hpp"
#include "rba/speech.hpp"
#include "rba/textgen.hpp"
#include "rba/vocab.hpp"

using namespace rba;
using namespace rba::speech;

namespace {

textgen::Instruction fake_instruction(std::string id, std::vector<int> tokens) {
  textgen::Instruction instr;
  instr.id = std::move(id);
  instr.text_tokens = std::move(tokens);
  return instr;
}

}  // namespace

TEST_SUITE("speech") {

TEST_CASE("bank construction is deterministic and distinct") {
  const auto a = build_speaker_bank(4, 1);
  const auto b = build_speaker_bank(4, 1);
  CHECK(a == b);
  REQUIRE(a.size() == 4);

  std::set<std::uint64_t> seeds;
  for (const auto& sp : a) {
    CHECK(sp.speaker_id >= 1);
    seeds.insert(sp.perm_seed);
  }
  CHECK(seeds.size() == 4);

  const auto c = build_speaker_bank(4, 2);
  CHECK(a != c);
}

TEST_CASE("paper-scale bank of 2456 voices is accepted") {
  const auto bank = build_speaker_bank(2456, 99);
  REQUIRE(bank.size() == 2456);
  std::set<std::uint64_t> seeds;
  for (const auto& sp : bank) seeds.insert(sp.perm_seed);
  CHECK(seeds.size() == 2456);  // pairwise-distinct voices
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(bank[i].speaker_id == static_cast<int>(i) + 1);
  }
}

TEST_CASE("bank preconditions") {
  CHECK_THROWS_AS(build_speaker_bank(3, 1), ValidationError);
  CHECK_THROWS_AS(build_speaker_bank(4, 1, -0.1, 0.0), ValidationError);
  CHECK_THROWS_AS(build_speaker_bank(4, 1, 0.0, 1.5), ValidationError);
}

TEST_CASE("every speaker permutation is a bijection onto the acoustic block") {
  const Vocab vocab{32, 64};
  const auto bank = build_speaker_bank(16, 3);
  for (const auto& sp : bank) {
    const auto perm = speaker_permutation(sp, vocab);
    REQUIRE(perm.size() == 64);
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 64; ++i) {
      CHECK(sorted[static_cast<std::size_t>(i)] == vocab.acoustic_begin() + i);
    }
    // Applying the inverse recovers every text id.
    const auto inv = inverse_permutation(perm, vocab);
    for (int t = 0; t < vocab.text_size; ++t) {
      CHECK(inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])] == t);
    }
    // Filler-pool slots are outside the text image.
    for (int f = vocab.text_size; f < vocab.acoustic_size; ++f) {
      CHECK(inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(f)])] == -1);
    }
  }
}

TEST_CASE("acoustic block must cover the text vocabulary") {
  const Vocab vocab{32, 16};
  SpeakerProfile sp{1, 42, 0.0, 0.0};
  CHECK_THROWS_AS(speaker_permutation(sp, vocab), ValidationError);
}

TEST_CASE("zero-noise rendering is invertible") {
  const Vocab vocab{32, 48};
  const auto instr = fake_instruction("i-0", {5, 0, 31, 17, 5});
  SpeakerProfile sp{1, 777, 0.0, 0.0};

  const auto spoken = synthesize_spoken(instr, sp, vocab, 9);
  REQUIRE(spoken.acoustic_tokens.size() == instr.text_tokens.size());
  const auto perm = speaker_permutation(sp, vocab);
  const auto inv = inverse_permutation(perm, vocab);
  for (std::size_t i = 0; i < spoken.acoustic_tokens.size(); ++i) {
    const int a = spoken.acoustic_tokens[i];
    CHECK(vocab.is_acoustic(a));
    CHECK(a == perm[static_cast<std::size_t>(instr.text_tokens[i])]);
    CHECK(inv[static_cast<std::size_t>(a)] == instr.text_tokens[i]);
  }
  CHECK(spoken.instruction_id == "i-0");
  CHECK(spoken.speaker_id == 1);
}

TEST_CASE("same inputs and seed render identically") {
  const Vocab vocab{32, 64};
  std::vector<int> tokens;
  for (int i = 0; i < 20; ++i) tokens.push_back(i);
  const auto instr = fake_instruction("i-1", tokens);
  SpeakerProfile sp{2, 404, 0.3, 0.2};
  CHECK(synthesize_spoken(instr, sp, vocab, 5).acoustic_tokens ==
        synthesize_spoken(instr, sp, vocab, 5).acoustic_tokens);
  CHECK(synthesize_spoken(instr, sp, vocab, 5).acoustic_tokens !=
        synthesize_spoken(instr, sp, vocab, 6).acoustic_tokens);
}

TEST_CASE("filler insertion rate concentrates at its Bernoulli mean") {
  const Vocab vocab{32, 64};
  std::vector<int> tokens(10000);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<int>(i % 32);
  const auto instr = fake_instruction("bulk", tokens);
  SpeakerProfile sp{1, 31337, 0.5, 0.0};

  const auto spoken = synthesize_spoken(instr, sp, vocab, 77);
  // With substitution off, every emitted token is either the permutation
  // image of an input token or a filler-pool token; count the latter.
  const auto inv = inverse_permutation(speaker_permutation(sp, vocab), vocab);
  long fillers = 0;
  for (int a : spoken.acoustic_tokens) {
    if (inv[static_cast<std::size_t>(a)] == -1) ++fillers;
  }
  CHECK(spoken.acoustic_tokens.size() == tokens.size() + static_cast<std::size_t>(fillers));
  const double frac = static_cast<double>(fillers) / 10000.0;
  CHECK(std::abs(frac - 0.5) < 0.02);
}

TEST_CASE("substitution corrupts roughly its rate and nothing else") {
  const Vocab vocab{32, 64};
  std::vector<int> tokens(10000);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<int>(i % 32);
  const auto instr = fake_instruction("bulk2", tokens);
  SpeakerProfile sp{1, 91, 0.0, 0.2};

  const auto spoken = synthesize_spoken(instr, sp, vocab, 3);
  REQUIRE(spoken.acoustic_tokens.size() == tokens.size());  // no insertions
  const auto perm = speaker_permutation(sp, vocab);
  long changed = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (spoken.acoustic_tokens[i] != perm[static_cast<std::size_t>(tokens[i])]) ++changed;
  }
  // A substituted token can land on the original slot (1/64 of draws), so the
  // observed change rate sits slightly below 0.2.
  const double frac = static_cast<double>(changed) / 10000.0;
  CHECK(frac > 0.16);
  CHECK(frac < 0.22);
}

TEST_CASE("distinct voices disagree on any multi-token instruction") {
  const Vocab vocab{32, 64};
  const auto bank = build_speaker_bank(8, 12);
  const auto instr = fake_instruction("i-2", {0, 9, 21, 30});
  for (std::size_t i = 0; i < bank.size(); ++i) {
    for (std::size_t j = i + 1; j < bank.size(); ++j) {
      const auto a = synthesize_spoken(instr, bank[i], vocab, 1);
      const auto b = synthesize_spoken(instr, bank[j], vocab, 1);
      CHECK(a.acoustic_tokens != b.acoustic_tokens);
    }
  }
}

TEST_CASE("speak_group with k = bank size uses every speaker once, ordered") {
  const Vocab vocab{32, 64};
  const auto bank = build_speaker_bank(4, 6);
  const auto instr = fake_instruction("i-3", {3, 1, 4});

  const auto group = speak_group(instr, bank, vocab, 4, 55);
  REQUIRE(group.size() == 4);
  for (int s = 0; s < 4; ++s) {
    CHECK(group[static_cast<std::size_t>(s)].speaker_id == s + 1);
    CHECK(group[static_cast<std::size_t>(s)].instruction_id == "i-3");
  }
}

TEST_CASE("speak_group subsets are per-instruction deterministic") {
  const Vocab vocab{32, 64};
  const auto bank = build_speaker_bank(16, 6);
  const auto i1 = fake_instruction("alpha", {3, 1, 4});
  const auto i2 = fake_instruction("beta", {3, 1, 4});

  const auto g1 = speak_group(i1, bank, vocab, 4, 55);
  const auto g1_again = speak_group(i1, bank, vocab, 4, 55);
  const auto g2 = speak_group(i2, bank, vocab, 4, 55);

  auto ids = [](const std::vector<SpokenInstruction>& g) {
    std::vector<int> v;
    for (const auto& s : g) v.push_back(s.speaker_id);
    return v;
  };
  CHECK(ids(g1) == ids(g1_again));
  CHECK(g1[0].acoustic_tokens == g1_again[0].acoustic_tokens);
  // Speaker ids strictly increasing within a group.
  const auto v1 = ids(g1);
  CHECK(std::is_sorted(v1.begin(), v1.end()));
  CHECK(std::adjacent_find(v1.begin(), v1.end()) == v1.end());
  // Different instruction ids draw their own subsets; with 16 voices the two
  // subsets differ for this fixture.
  CHECK(ids(g1) != ids(g2));
}

TEST_CASE("speak_group rejects oversized groups and empty instructions") {
  const Vocab vocab{32, 64};
  const auto bank = build_speaker_bank(4, 6);
  const auto instr = fake_instruction("i-4", {3});
  CHECK_THROWS_AS(speak_group(instr, bank, vocab, 5, 1), ValidationError);
  CHECK_THROWS_AS(speak_group(instr, bank, vocab, 0, 1), ValidationError);

  const auto empty = fake_instruction("i-5", {});
  CHECK_THROWS_AS(synthesize_spoken(empty, bank[0], vocab, 1), ValidationError);

  const auto bad = fake_instruction("i-6", {32});  // EOS is not a text token
  CHECK_THROWS_AS(synthesize_spoken(bad, bank[0], vocab, 1), ValidationError);
}

}  // TEST_SUITE
