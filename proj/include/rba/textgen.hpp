#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rba/errors.hpp"
#include "rba/vocab.hpp"

namespace rba::textgen {

enum class WorldKind { lookup_qa, copy_transform, cipher_translation };

enum class Topic {
  information_seeking,
  advice_seeking,
  creative_writing,
  planning,
  reasoning,
  brainstorming,
  role_playing,
  others,
};
inline constexpr int kTopicCount = 8;

std::string_view to_string(WorldKind kind);
std::string_view to_string(Topic topic);
WorldKind world_kind_from_string(std::string_view s);
Topic topic_from_string(std::string_view s);

// An instruction pattern. `pattern` is a list of literal lexicon words with a
// single "{}" entry marking where the payload goes; templates without "{}"
// are zero-slot. copy_transform templates carry the transform chain that
// complete_response applies to the payload.
struct Template {
  Topic topic = Topic::information_seeking;
  std::vector<std::string> pattern;
  std::vector<std::string> transforms;
  int payload_min = 1;
  int payload_max = 1;

  bool has_slot() const;
  int transform_depth() const { return static_cast<int>(transforms.size()); }
};

// A verifiable toy task world: closed lexicon, instruction templates, and a
// deterministic fixture that answers every instruction the templates can
// produce. The scripted stand-in for an aligned teacher.
struct TaskWorld {
  WorldKind kind = WorldKind::lookup_qa;
  std::vector<std::string> lexicon;               // text token id -> word
  std::vector<Template> templates;
  std::map<std::string, std::string> fixture;     // lookup_qa: joined payload -> answer
                                                  // cipher: source word -> target word
  std::vector<std::string> payload_domain;        // slot word domain, ordered
  std::vector<std::pair<Topic, double>> topic_weights;  // canonical topic order

  int token(const std::string& word) const;
  const std::string& word(int token) const;

  // Checks lexicon closure, weight normalization (sum 1 +- 1e-9), slot
  // well-formedness, and fixture totality over the slot domain.
  void validate() const;

 private:
  mutable std::unordered_map<std::string, int> word_ids_;  // lazy index
};

struct Instruction {
  std::string id;
  Topic topic = Topic::information_seeking;
  int difficulty = 1;
  WorldKind task_kind = WorldKind::lookup_qa;
  std::vector<std::string> words;                 // instruction surface form
  std::vector<int> text_tokens;
  std::vector<int> reference_response_tokens;     // EOS-terminated

  // Generation metadata; not serialized.
  int template_index = -1;
  std::vector<std::string> payload;
  int slot_count = 0;
  int transform_depth = 0;

  std::string text() const;
};

struct FilterConfig {
  int max_instruction_tokens = 64;
  std::set<std::string> math_pattern_tokens;
};

enum class DropReason { too_long, math };
std::string_view to_string(DropReason reason);

// Filter verdict: empty optional means Keep. Length is checked before the
// math-pattern scan so drop reasons are deterministic.
std::optional<DropReason> filter_instruction(const Instruction& instr,
                                             const FilterConfig& cfg);

// (topic, difficulty). Difficulty = slot word count + transform chain depth,
// clamped to [1, 5].
std::pair<Topic, int> rate_instruction(const Instruction& instr);

// Deterministic function of (world, seed). The id field is left empty;
// build_corpus assigns ids in kept order.
Instruction sample_instruction(const TaskWorld& world, std::uint64_t seed);

// Ground-truth response for instr's payload, EOS-terminated.
std::vector<int> complete_response(const TaskWorld& world, const Instruction& instr);

using Corpus = std::vector<Instruction>;

// Exactly n kept records with sequential ids. Candidate k draws its own seed
// hash(seed, k), so records never share RNG state. Throws FilterExhaustion
// after 100*n consecutive drops.
Corpus build_corpus(const TaskWorld& world, int n, const FilterConfig& cfg,
                    std::uint64_t seed);

// Built-in world presets, one per kind, each over a 32-word lexicon with
// the default topic mix. topic_weights may be overridden.
TaskWorld make_default_world(WorldKind kind);
std::vector<std::pair<Topic, double>> default_topic_weights();

}  // namespace rba::textgen
