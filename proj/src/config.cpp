#include "rba/config.hpp"

#include <algorithm>
#include <set>

namespace rba::config {

using io::json;

namespace {

// Catches misspelled keys ("lamda") before they silently no-op.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return it.key() == k;
        }) == allowed.end()) {
      throw ValidationError("UnknownKey", "unknown key '" + it.key() + "' in " + where);
    }
  }
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError("ParseError", where + " must be an object");
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("ParseError", "bad value for '" + std::string(key) + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj, key, where);
}

}  // namespace

std::string RunConfig::resolved_judge(const std::string& requested) const {
  if (!requested.empty()) return requested;
  switch (world.kind) {
    case textgen::WorldKind::lookup_qa: return "exact_match";
    case textgen::WorldKind::copy_transform: return "token_f1";
    case textgen::WorldKind::cipher_translation: return "bleu";
  }
  return "token_f1";
}

RunConfig parse_config(const json& j) {
  require_object(j, "config");
  check_keys(j, "config",
             {"seed", "world", "filter", "speakers", "corpus_n", "training", "eval", "paths"});
  if (!j.contains("seed")) {
    throw ValidationError("ParseError", "config requires an explicit seed");
  }

  RunConfig cfg;
  cfg.seed = get_as<std::uint64_t>(j, "seed", "config");

  if (j.contains("world")) {
    const json& w = j["world"];
    require_object(w, "world");
    check_keys(w, "world", {"kind", "topic_weights"});
    cfg.world.kind = textgen::world_kind_from_string(
        get_or<std::string>(w, "kind", "world", "lookup_qa"));
    if (w.contains("topic_weights")) {
      require_object(w["topic_weights"], "world.topic_weights");
      for (auto it = w["topic_weights"].begin(); it != w["topic_weights"].end(); ++it) {
        cfg.world.topic_weights.emplace_back(textgen::topic_from_string(it.key()),
                                             it.value().get<double>());
      }
    }
  }

  if (j.contains("filter")) {
    const json& f = j["filter"];
    require_object(f, "filter");
    check_keys(f, "filter", {"max_instruction_tokens", "math_pattern_tokens"});
    cfg.filter.max_instruction_tokens =
        get_or<int>(f, "max_instruction_tokens", "filter", 64);
    if (f.contains("math_pattern_tokens")) {
      for (const auto& t : f["math_pattern_tokens"]) {
        cfg.filter.math_pattern_tokens.insert(t.get<std::string>());
      }
    }
    if (cfg.filter.max_instruction_tokens < 1) {
      throw ValidationError("ParseError", "filter.max_instruction_tokens must be >= 1");
    }
  }

  if (j.contains("speakers")) {
    const json& s = j["speakers"];
    require_object(s, "speakers");
    check_keys(s, "speakers",
               {"n_speakers", "filler_rate", "substitution_rate", "n_filler_tokens"});
    cfg.speakers.n_speakers = get_or<int>(s, "n_speakers", "speakers", 64);
    cfg.speakers.filler_rate = get_or<double>(s, "filler_rate", "speakers", 0.0);
    cfg.speakers.substitution_rate = get_or<double>(s, "substitution_rate", "speakers", 0.0);
    cfg.speakers.n_filler_tokens = get_or<int>(s, "n_filler_tokens", "speakers", 2);
    if (cfg.speakers.n_filler_tokens < 0) {
      throw ValidationError("ParseError", "speakers.n_filler_tokens must be >= 0");
    }
  }

  cfg.corpus_n = get_or<int>(j, "corpus_n", "config", 1000);
  if (cfg.corpus_n < 1) throw ValidationError("ParseError", "corpus_n must be >= 1");

  if (j.contains("training")) {
    const json& t = j["training"];
    require_object(t, "training");
    check_keys(t, "training",
               {"mode", "lambda", "beta", "max_lr", "warmup_steps", "max_steps",
                "batch_size", "group_size", "temperature", "reference_free",
                "validation_size", "patience", "eval_interval", "judge", "d",
                "init_scale", "init_from", "weight_decay", "max_response_len"});
    auto& tc = cfg.training;
    tc.mode = trainer::mode_from_string(get_or<std::string>(t, "mode", "training", "sft"));
    tc.lambda = get_or<double>(t, "lambda", "training", 0.2);
    tc.beta = get_or<double>(t, "beta", "training", 0.1);
    tc.max_lr = get_or<double>(t, "max_lr", "training", 1e-4);
    tc.warmup_steps = get_or<int>(t, "warmup_steps", "training", 300);
    tc.max_steps = get_or<int>(t, "max_steps", "training", 2000);
    tc.batch_size = get_or<int>(t, "batch_size", "training", 8);
    tc.group_size = get_or<int>(t, "group_size", "training", 4);
    tc.temperature = get_or<double>(t, "temperature", "training", 1.0);
    tc.reference_free = get_or<bool>(t, "reference_free", "training", false);
    tc.validation_size = get_or<int>(t, "validation_size", "training", 128);
    tc.patience = get_or<int>(t, "patience", "training", 10);
    tc.eval_interval = get_or<int>(t, "eval_interval", "training", 100);
    tc.judge = get_or<std::string>(t, "judge", "training", "");
    tc.d = get_or<int>(t, "d", "training", 16);
    tc.init_scale = get_or<double>(t, "init_scale", "training", 0.1);
    tc.init_from = get_or<std::string>(t, "init_from", "training", "");
    tc.weight_decay = get_or<double>(t, "weight_decay", "training", 0.0);
    tc.max_response_len = get_or<int>(t, "max_response_len", "training", 16);
  }
  // The seed inside TrainingConfig always mirrors the global seed.
  cfg.training.seed = cfg.seed;

  if (j.contains("eval")) {
    const json& e = j["eval"];
    require_object(e, "eval");
    check_keys(e, "eval", {"suite", "judge", "n_items"});
    cfg.eval.suite = get_or<std::string>(e, "suite", "eval", "wr");
    cfg.eval.judge = get_or<std::string>(e, "judge", "eval", "");
    cfg.eval.n_items = get_or<int>(e, "n_items", "eval", 0);
  }

  if (j.contains("paths")) {
    const json& p = j["paths"];
    require_object(p, "paths");
    check_keys(p, "paths",
               {"corpus", "spoken", "speaker_bank", "checkpoint_dir", "metrics", "report"});
    cfg.paths.corpus = get_or<std::string>(p, "corpus", "paths", cfg.paths.corpus);
    cfg.paths.spoken = get_or<std::string>(p, "spoken", "paths", cfg.paths.spoken);
    cfg.paths.speaker_bank =
        get_or<std::string>(p, "speaker_bank", "paths", cfg.paths.speaker_bank);
    cfg.paths.checkpoint_dir =
        get_or<std::string>(p, "checkpoint_dir", "paths", cfg.paths.checkpoint_dir);
    cfg.paths.metrics = get_or<std::string>(p, "metrics", "paths", cfg.paths.metrics);
    cfg.paths.report = get_or<std::string>(p, "report", "paths", cfg.paths.report);
  }

  cfg.training.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const std::string text = io::read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ValidationError("ParseError", "config " + path + " is not valid JSON");
  }
  return parse_config(j);
}

json resolved_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;

  json w;
  w["kind"] = std::string(textgen::to_string(cfg.world.kind));
  if (!cfg.world.topic_weights.empty()) {
    json tw = json::object();
    for (const auto& [topic, weight] : cfg.world.topic_weights) {
      tw[std::string(textgen::to_string(topic))] = weight;
    }
    w["topic_weights"] = tw;
  }
  j["world"] = w;

  json f;
  f["max_instruction_tokens"] = cfg.filter.max_instruction_tokens;
  f["math_pattern_tokens"] = cfg.filter.math_pattern_tokens;
  j["filter"] = f;

  json s;
  s["n_speakers"] = cfg.speakers.n_speakers;
  s["filler_rate"] = cfg.speakers.filler_rate;
  s["substitution_rate"] = cfg.speakers.substitution_rate;
  s["n_filler_tokens"] = cfg.speakers.n_filler_tokens;
  j["speakers"] = s;

  j["corpus_n"] = cfg.corpus_n;

  json t;
  const auto& tc = cfg.training;
  t["mode"] = std::string(trainer::to_string(tc.mode));
  t["lambda"] = tc.lambda;
  t["beta"] = tc.beta;
  t["max_lr"] = tc.max_lr;
  t["warmup_steps"] = tc.warmup_steps;
  t["max_steps"] = tc.max_steps;
  t["batch_size"] = tc.batch_size;
  t["group_size"] = tc.group_size;
  t["temperature"] = tc.temperature;
  t["reference_free"] = tc.reference_free;
  t["validation_size"] = tc.validation_size;
  t["patience"] = tc.patience;
  t["eval_interval"] = tc.eval_interval;
  t["judge"] = tc.judge;
  t["d"] = tc.d;
  t["init_scale"] = tc.init_scale;
  t["init_from"] = tc.init_from;
  t["weight_decay"] = tc.weight_decay;
  t["max_response_len"] = tc.max_response_len;
  j["training"] = t;

  json e;
  e["suite"] = cfg.eval.suite;
  e["judge"] = cfg.eval.judge;
  e["n_items"] = cfg.eval.n_items;
  j["eval"] = e;

  json p;
  p["corpus"] = cfg.paths.corpus;
  p["spoken"] = cfg.paths.spoken;
  p["speaker_bank"] = cfg.paths.speaker_bank;
  p["checkpoint_dir"] = cfg.paths.checkpoint_dir;
  p["metrics"] = cfg.paths.metrics;
  p["report"] = cfg.paths.report;
  j["paths"] = p;

  return j;
}

std::string config_digest(const RunConfig& cfg) {
  return io::fnv1a_hex(resolved_json(cfg).dump());
}

}  // namespace rba::config
