#include "rba/textgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "rba/rng.hpp"

namespace rba::textgen {

namespace {

constexpr std::array<std::string_view, kTopicCount> kTopicNames = {
    "information_seeking", "advice_seeking", "creative_writing", "planning",
    "reasoning",           "brainstorming",  "role_playing",     "others"};

constexpr std::array<std::string_view, 3> kKindNames = {
    "lookup_qa", "copy_transform", "cipher_translation"};

}  // namespace

std::string_view to_string(WorldKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

std::string_view to_string(Topic topic) {
  return kTopicNames[static_cast<int>(topic)];
}

std::string_view to_string(DropReason reason) {
  return reason == DropReason::too_long ? "too_long" : "math";
}

WorldKind world_kind_from_string(std::string_view s) {
  for (int i = 0; i < 3; ++i) {
    if (kKindNames[i] == s) return static_cast<WorldKind>(i);
  }
  throw ValidationError("UnknownWorldKind", std::string(s));
}

Topic topic_from_string(std::string_view s) {
  for (int i = 0; i < kTopicCount; ++i) {
    if (kTopicNames[i] == s) return static_cast<Topic>(i);
  }
  throw ValidationError("UnknownTopic", std::string(s));
}

bool Template::has_slot() const {
  return std::find(pattern.begin(), pattern.end(), "{}") != pattern.end();
}

int TaskWorld::token(const std::string& word) const {
  if (word_ids_.empty()) {
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
      word_ids_.emplace(lexicon[i], static_cast<int>(i));
    }
  }
  auto it = word_ids_.find(word);
  if (it == word_ids_.end()) {
    throw ValidationError("UnknownWord", "word not in lexicon: " + word);
  }
  return it->second;
}

const std::string& TaskWorld::word(int tok) const {
  if (tok < 0 || static_cast<std::size_t>(tok) >= lexicon.size()) {
    throw ValidationError("UnknownWord", "token id outside lexicon");
  }
  return lexicon[static_cast<std::size_t>(tok)];
}

void TaskWorld::validate() const {
  if (lexicon.empty()) throw ValidationError("BadWorld", "empty lexicon");

  double sum = 0.0;
  for (const auto& [topic, w] : topic_weights) {
    (void)topic;
    if (w < 0.0) throw ValidationError("BadWorld", "negative topic weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("BadWorld", "topic weights must sum to 1");
  }

  for (const auto& [topic, w] : topic_weights) {
    if (w <= 0.0) continue;
    const bool covered = std::any_of(templates.begin(), templates.end(),
                                     [&](const Template& t) { return t.topic == topic; });
    if (!covered) {
      throw ValidationError("BadWorld", "weighted topic has no template: " +
                                            std::string(to_string(topic)));
    }
  }

  for (const Template& t : templates) {
    int slots = 0;
    for (const auto& w : t.pattern) {
      if (w == "{}") {
        ++slots;
      } else {
        token(w);  // throws on lexicon miss
      }
    }
    if (slots > 1) throw ValidationError("BadWorld", "template has multiple slots");
    if (slots == 1 && (t.payload_min < 1 || t.payload_max < t.payload_min)) {
      throw ValidationError("BadWorld", "bad payload length range");
    }
    if (slots == 0 && kind != WorldKind::lookup_qa) {
      throw ValidationError("BadWorld", "zero-slot templates need a lookup fixture");
    }
    if (!t.transforms.empty() && kind != WorldKind::copy_transform) {
      throw ValidationError("BadWorld", "transforms only apply to copy_transform worlds");
    }
  }

  for (const auto& w : payload_domain) token(w);

  // Fixture totality on the slot domain.
  if (kind == WorldKind::lookup_qa) {
    for (const auto& w : payload_domain) {
      auto it = fixture.find(w);
      if (it == fixture.end()) {
        throw ValidationError("BadWorld", "fixture not total on slot domain: " + w);
      }
    }
    for (const auto& [key, answer] : fixture) {
      (void)key;
      if (answer.empty()) throw ValidationError("BadWorld", "empty fixture answer");
    }
  } else if (kind == WorldKind::cipher_translation) {
    for (const auto& w : payload_domain) {
      if (fixture.find(w) == fixture.end()) {
        throw ValidationError("BadWorld", "cipher not total on slot domain: " + w);
      }
    }
  }
}

std::string Instruction::text() const {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::optional<DropReason> filter_instruction(const Instruction& instr,
                                             const FilterConfig& cfg) {
  if (static_cast<int>(instr.text_tokens.size()) > cfg.max_instruction_tokens) {
    return DropReason::too_long;
  }
  for (const auto& w : instr.words) {
    if (cfg.math_pattern_tokens.count(w)) return DropReason::math;
  }
  return std::nullopt;
}

std::pair<Topic, int> rate_instruction(const Instruction& instr) {
  const int raw = instr.slot_count + instr.transform_depth;
  return {instr.topic, std::clamp(raw, 1, 5)};
}

namespace {

Topic sample_topic(const TaskWorld& world, Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  for (const auto& [topic, w] : world.topic_weights) {
    cum += w;
    if (u < cum) return topic;
  }
  return world.topic_weights.back().first;
}

// Sample `len` distinct words from the domain, order as drawn.
std::vector<std::string> sample_payload(const std::vector<std::string>& domain,
                                        int len, Rng& rng) {
  std::vector<int> idx(domain.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(len));
  for (int k = 0; k < len; ++k) {
    const auto pick = static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint64_t>(idx.size() - static_cast<std::size_t>(k))));
    std::swap(idx[static_cast<std::size_t>(k) + pick], idx[static_cast<std::size_t>(k)]);
    out.push_back(domain[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]);
  }
  return out;
}

std::vector<std::string> apply_transforms(const std::vector<std::string>& chain,
                                          std::vector<std::string> words,
                                          const TaskWorld& world) {
  for (const auto& t : chain) {
    if (t == "copy") {
      // identity
    } else if (t == "reverse") {
      std::reverse(words.begin(), words.end());
    } else if (t == "first") {
      if (!words.empty()) words.resize(1);
    } else if (t == "last") {
      if (!words.empty()) words.erase(words.begin(), words.end() - 1);
    } else if (t == "swap") {
      if (words.size() >= 2) std::swap(words[0], words[1]);
    } else if (t == "sort") {
      std::sort(words.begin(), words.end(),
                [&](const std::string& a, const std::string& b) {
                  return world.token(a) < world.token(b);
                });
    } else {
      throw ValidationError("UnknownTransform", t);
    }
  }
  return words;
}

}  // namespace

Instruction sample_instruction(const TaskWorld& world, std::uint64_t seed) {
  if (world.templates.empty()) {
    throw ValidationError("EmptyTemplateSet", "world has no templates");
  }
  Rng rng(seed);

  const Topic topic = sample_topic(world, rng);
  std::vector<int> candidates;
  for (std::size_t i = 0; i < world.templates.size(); ++i) {
    if (world.templates[i].topic == topic) candidates.push_back(static_cast<int>(i));
  }
  if (candidates.empty()) {
    throw ValidationError("EmptyTemplateSet",
                          "no template for topic " + std::string(to_string(topic)));
  }
  const int tmpl_idx =
      candidates[rng.next_below(static_cast<std::uint64_t>(candidates.size()))];
  const Template& tmpl = world.templates[static_cast<std::size_t>(tmpl_idx)];

  Instruction instr;
  instr.topic = tmpl.topic;
  instr.task_kind = world.kind;
  instr.template_index = tmpl_idx;
  instr.transform_depth = tmpl.transform_depth();

  if (tmpl.has_slot()) {
    const int span = tmpl.payload_max - tmpl.payload_min + 1;
    const int len =
        tmpl.payload_min + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span)));
    instr.payload = sample_payload(world.payload_domain, len, rng);
    if (world.kind == WorldKind::cipher_translation) {
      // Slot grammar emits canonical-ordered phrases: a given word bag always
      // appears in one order, so the task stays learnable from bag context.
      std::sort(instr.payload.begin(), instr.payload.end(),
                [&](const std::string& a, const std::string& b) {
                  return world.token(a) < world.token(b);
                });
    }
    instr.slot_count = len;
  }

  for (const auto& w : tmpl.pattern) {
    if (w == "{}") {
      for (const auto& p : instr.payload) instr.words.push_back(p);
    } else {
      instr.words.push_back(w);
    }
  }
  instr.text_tokens.reserve(instr.words.size());
  for (const auto& w : instr.words) instr.text_tokens.push_back(world.token(w));

  instr.reference_response_tokens = complete_response(world, instr);

  const auto [rated_topic, difficulty] = rate_instruction(instr);
  instr.topic = rated_topic;
  instr.difficulty = difficulty;
  return instr;
}

std::vector<int> complete_response(const TaskWorld& world, const Instruction& instr) {
  std::vector<std::string> answer_words;

  switch (world.kind) {
    case WorldKind::lookup_qa: {
      std::string key;
      for (std::size_t i = 0; i < instr.payload.size(); ++i) {
        if (i) key += ' ';
        key += instr.payload[i];
      }
      auto it = world.fixture.find(key);
      if (it == world.fixture.end()) {
        throw ValidationError("UnknownPayload", "no fixture entry for: " + key);
      }
      // Fixture answers may be multi-word strings.
      std::string cur;
      for (char c : it->second) {
        if (c == ' ') {
          if (!cur.empty()) answer_words.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) answer_words.push_back(cur);
      break;
    }
    case WorldKind::copy_transform: {
      for (const auto& w : instr.payload) {
        if (std::find(world.payload_domain.begin(), world.payload_domain.end(), w) ==
            world.payload_domain.end()) {
          throw ValidationError("UnknownPayload", "word outside transform alphabet: " + w);
        }
      }
      const Template& tmpl = world.templates[static_cast<std::size_t>(instr.template_index)];
      answer_words = apply_transforms(tmpl.transforms, instr.payload, world);
      break;
    }
    case WorldKind::cipher_translation: {
      for (const auto& w : instr.payload) {
        auto it = world.fixture.find(w);
        if (it == world.fixture.end()) {
          throw ValidationError("UnknownPayload", "word outside cipher: " + w);
        }
        answer_words.push_back(it->second);
      }
      break;
    }
  }

  if (answer_words.empty()) {
    throw ValidationError("UnknownPayload", "fixture produced an empty response");
  }

  Vocab vocab{static_cast<int>(world.lexicon.size()), 1};
  std::vector<int> tokens;
  tokens.reserve(answer_words.size() + 1);
  for (const auto& w : answer_words) tokens.push_back(world.token(w));
  tokens.push_back(vocab.eos());
  return tokens;
}

Corpus build_corpus(const TaskWorld& world, int n, const FilterConfig& cfg,
                    std::uint64_t seed) {
  if (n < 1) {
    throw ValidationError("PreconditionViolation", "build_corpus requires n >= 1");
  }
  world.validate();

  Corpus corpus;
  corpus.reserve(static_cast<std::size_t>(n));

  const std::uint64_t run_tag = mix64(seed) & 0xffffffffULL;
  const long drop_budget = 100L * n;
  long consecutive_drops = 0;

  for (std::uint64_t candidate = 0; static_cast<int>(corpus.size()) < n; ++candidate) {
    Instruction instr = sample_instruction(world, hash_combine(seed, candidate));
    if (filter_instruction(instr, cfg)) {
      if (++consecutive_drops >= drop_budget) {
        throw ValidationError("FilterExhaustion",
                              "dropped " + std::to_string(consecutive_drops) +
                                  " consecutive candidates");
      }
      continue;
    }
    consecutive_drops = 0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%08llx-%06zu",
                  static_cast<unsigned long long>(run_tag), corpus.size());
    instr.id = buf;
    corpus.push_back(std::move(instr));
  }
  return corpus;
}

std::vector<std::pair<Topic, double>> default_topic_weights() {
  return {{Topic::information_seeking, 0.603}, {Topic::advice_seeking, 0.185},
          {Topic::creative_writing, 0.127},    {Topic::planning, 0.042},
          {Topic::reasoning, 0.028},           {Topic::brainstorming, 0.002},
          {Topic::role_playing, 0.001},        {Topic::others, 0.012}};
}

namespace {

TaskWorld make_capitals_world() {
  TaskWorld w;
  w.kind = WorldKind::lookup_qa;
  w.lexicon = {
      // template words
      "what", "is", "the", "capital", "of", "tell", "name", "?",
      // entities
      "aria", "brel", "corin", "doma", "elvia", "fenn", "goria", "halin",
      "ipsos", "jura", "kestel", "lorin",
      // answers
      "velca", "tarn", "quill", "mirek", "solev", "brint", "casta", "drev",
      "norla", "pexa", "rulat", "zemi"};
  w.payload_domain = {"aria", "brel",  "corin", "doma", "elvia",  "fenn",
                      "goria", "halin", "ipsos", "jura", "kestel", "lorin"};
  const std::vector<std::string> answers = {"velca", "tarn",  "quill", "mirek",
                                            "solev", "brint", "casta", "drev",
                                            "norla", "pexa",  "rulat", "zemi"};
  for (std::size_t i = 0; i < w.payload_domain.size(); ++i) {
    w.fixture[w.payload_domain[i]] = answers[i];
  }
  w.templates = {
      {Topic::information_seeking, {"capital", "of", "{}", "?"}, {}, 1, 1},
      {Topic::information_seeking, {"what", "is", "the", "capital", "of", "{}", "?"}, {}, 1, 1},
      {Topic::advice_seeking, {"tell", "the", "capital", "of", "{}", "?"}, {}, 1, 1},
      {Topic::creative_writing, {"name", "the", "capital", "of", "{}", "?"}, {}, 1, 1},
      {Topic::planning, {"the", "capital", "of", "{}", "?"}, {}, 1, 1},
      {Topic::reasoning, {"what", "is", "the", "capital", "of", "{}"}, {}, 1, 1},
      {Topic::brainstorming, {"capital", "of", "{}"}, {}, 1, 1},
      {Topic::role_playing, {"tell", "what", "is", "the", "capital", "of", "{}", "?"}, {}, 1, 1},
      {Topic::others, {"of", "{}", "the", "capital", "?"}, {}, 1, 1},
  };
  w.topic_weights = default_topic_weights();
  return w;
}

TaskWorld make_transforms_world() {
  TaskWorld w;
  w.kind = WorldKind::copy_transform;
  w.lexicon = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k",
               "l", "m", "n", "o", "p", "q", "r", "s", "t", "u", "v",
               "copy", "reverse", "first", "last", "swap", "sort",
               ":", "do", "then", "?"};
  w.payload_domain.assign(w.lexicon.begin(), w.lexicon.begin() + 22);
  w.templates = {
      {Topic::information_seeking, {"copy", ":", "{}"}, {"copy"}, 2, 4},
      {Topic::information_seeking, {"last", ":", "{}"}, {"last"}, 2, 4},
      {Topic::advice_seeking, {"first", ":", "{}"}, {"first"}, 2, 4},
      {Topic::creative_writing, {"reverse", ":", "{}"}, {"reverse"}, 2, 4},
      {Topic::planning, {"sort", ":", "{}"}, {"sort"}, 2, 4},
      {Topic::reasoning, {"do", "reverse", "then", "sort", ":", "{}"}, {"reverse", "sort"}, 2, 4},
      {Topic::brainstorming, {"swap", ":", "{}"}, {"swap"}, 2, 4},
      {Topic::role_playing,
       {"do", "copy", "then", "reverse", "then", "sort", ":", "{}"},
       {"copy", "reverse", "sort"},
       2, 4},
      {Topic::others, {"do", "swap", "then", "reverse", ":", "{}"}, {"swap", "reverse"}, 2, 4},
  };
  w.topic_weights = default_topic_weights();
  return w;
}

TaskWorld make_cipher_world() {
  TaskWorld w;
  w.kind = WorldKind::cipher_translation;
  w.lexicon = {
      // source words
      "ka", "ti", "mo", "sa", "ru", "ve", "lo", "ni", "pa", "zu", "fe", "gi",
      // target words
      "red", "sun", "tree", "water", "stone", "bird", "moon", "fire", "cloud",
      "fish", "star", "leaf",
      // template words
      "translate", ":", "say", "in", "the", "other", "tongue", "?"};
  w.payload_domain = {"ka", "ti", "mo", "sa", "ru", "ve",
                      "lo", "ni", "pa", "zu", "fe", "gi"};
  const std::vector<std::string> targets = {"red",  "sun",  "tree", "water",
                                            "stone", "bird", "moon", "fire",
                                            "cloud", "fish", "star", "leaf"};
  for (std::size_t i = 0; i < w.payload_domain.size(); ++i) {
    w.fixture[w.payload_domain[i]] = targets[i];
  }
  w.templates = {
      {Topic::information_seeking, {"translate", ":", "{}"}, {}, 2, 4},
      {Topic::information_seeking, {"say", "{}", "in", "the", "other", "tongue", "?"}, {}, 2, 3},
      {Topic::advice_seeking, {"translate", "the", "{}", "?"}, {}, 2, 4},
      {Topic::creative_writing, {"say", ":", "{}"}, {}, 2, 4},
      {Topic::planning, {"translate", "in", "the", "other", "tongue", ":", "{}"}, {}, 2, 3},
      {Topic::reasoning, {"say", "the", "{}", "?"}, {}, 2, 4},
      {Topic::brainstorming, {"translate", "{}", "?"}, {}, 2, 4},
      {Topic::role_playing, {"say", "in", "other", "tongue", ":", "{}"}, {}, 2, 3},
      {Topic::others, {"the", "{}", "in", "other", "tongue", "?"}, {}, 2, 3},
  };
  w.topic_weights = default_topic_weights();
  return w;
}

}  // namespace

TaskWorld make_default_world(WorldKind kind) {
  TaskWorld w;
  switch (kind) {
    case WorldKind::lookup_qa: w = make_capitals_world(); break;
    case WorldKind::copy_transform: w = make_transforms_world(); break;
    case WorldKind::cipher_translation: w = make_cipher_world(); break;
  }
  w.validate();
  return w;
}

}  // namespace rba::textgen
