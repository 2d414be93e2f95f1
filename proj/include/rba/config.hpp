#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rba/io.hpp"
#include "rba/textgen.hpp"
#include "rba/trainer.hpp"

namespace rba::config {

struct WorldSpec {
  textgen::WorldKind kind = textgen::WorldKind::lookup_qa;
  // Empty = the world's built-in topic mix.
  std::vector<std::pair<textgen::Topic, double>> topic_weights;
};

struct SpeakerSpec {
  int n_speakers = 64;
  double filler_rate = 0.0;
  double substitution_rate = 0.0;
  int n_filler_tokens = 2;  // extra acoustic ids forming each speaker's filler pool
};

struct EvalSpec {
  std::string suite = "wr";
  std::string judge;  // empty = world default
  int n_items = 0;    // 0 = whole corpus
};

struct Paths {
  std::string corpus = "corpus.jsonl";
  std::string spoken = "spoken.jsonl";
  std::string speaker_bank = "speakers.json";
  std::string checkpoint_dir = "checkpoints";
  std::string metrics = "metrics.jsonl";
  std::string report = "report.json";
};

// The single configuration surface. Parsing is strict: any key the schema
// does not define is an error, because a silently ignored "lamda" corrupts
// an experiment. seed has no default on purpose.
struct RunConfig {
  std::uint64_t seed = 0;
  WorldSpec world;
  textgen::FilterConfig filter;
  SpeakerSpec speakers;
  int corpus_n = 1000;
  trainer::TrainingConfig training;
  EvalSpec eval;
  Paths paths;

  // Judge name with the world-default rule applied (exact_match for
  // lookup_qa, token_f1 for copy_transform, bleu for cipher_translation).
  std::string resolved_judge(const std::string& requested) const;
};

RunConfig parse_config(const io::json& j);       // ParseError / UnknownKey
RunConfig load_config(const std::string& path);  // + IoError

// Fully-resolved echo: every optional key materialized with its effective
// value. parse_config(resolved_json(cfg)) reproduces cfg exactly.
io::json resolved_json(const RunConfig& cfg);

// fnv1a of the resolved echo; stamped into every artifact this run writes.
std::string config_digest(const RunConfig& cfg);

}  // namespace rba::config
