#include "rba/artifacts.hpp"

#include <sstream>

namespace rba::artifacts {

using io::json;

namespace {

io::ArtifactMeta base_meta(const std::string& kind, const config::RunConfig& cfg) {
  io::ArtifactMeta meta;
  meta.kind = kind;
  meta.config_digest = config::config_digest(cfg);
  meta.extra["config"] = config::resolved_json(cfg);
  return meta;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

}  // namespace

void write_corpus(const std::string& path, const config::RunConfig& cfg,
                  const textgen::TaskWorld& world,
                  const std::vector<textgen::Instruction>& items) {
  io::ArtifactMeta meta = base_meta("corpus", cfg);
  meta.extra["world_kind"] = std::string(textgen::to_string(world.kind));
  meta.extra["text_words"] = world.lexicon;

  std::vector<json> records;
  records.reserve(items.size());
  for (const auto& it : items) {
    json r;
    r["id"] = it.id;
    r["topic"] = std::string(textgen::to_string(it.topic));
    r["difficulty"] = it.difficulty;
    r["task_kind"] = std::string(textgen::to_string(it.task_kind));
    r["instruction_text"] = it.text();
    r["instruction_tokens"] = it.text_tokens;
    r["reference_response_tokens"] = it.reference_response_tokens;
    records.push_back(std::move(r));
  }
  io::write_artifact(path, meta, records);
}

CorpusFile read_corpus(const std::string& path) {
  io::Artifact art = io::read_artifact(path, "corpus");
  CorpusFile out;
  if (!art.meta.extra.contains("text_words") || !art.meta.extra.contains("world_kind")) {
    throw IoError("CorruptFile", path + ": corpus meta lacks the world description");
  }
  out.world_kind = art.meta.extra["world_kind"].get<std::string>();
  out.lexicon = art.meta.extra["text_words"].get<std::vector<std::string>>();
  out.items.reserve(art.records.size());
  for (const json& r : art.records) {
    textgen::Instruction it;
    it.id = r.at("id").get<std::string>();
    it.topic = textgen::topic_from_string(r.at("topic").get<std::string>());
    it.difficulty = r.at("difficulty").get<int>();
    it.task_kind = textgen::world_kind_from_string(r.at("task_kind").get<std::string>());
    it.words = split_words(r.at("instruction_text").get<std::string>());
    it.text_tokens = r.at("instruction_tokens").get<std::vector<int>>();
    it.reference_response_tokens =
        r.at("reference_response_tokens").get<std::vector<int>>();
    out.items.push_back(std::move(it));
  }
  out.meta = std::move(art.meta);
  return out;
}

void write_spoken(const std::string& path, const config::RunConfig& cfg,
                  const std::vector<std::string>& corpus_order, int acoustic_size,
                  int group_size,
                  const std::map<std::string, std::vector<speech::SpokenInstruction>>& by_id) {
  io::ArtifactMeta meta = base_meta("spoken", cfg);
  meta.extra["acoustic_size"] = acoustic_size;
  meta.extra["group_size"] = group_size;

  std::vector<json> records;
  for (const auto& id : corpus_order) {
    for (const auto& sp : by_id.at(id)) {
      json r;
      r["instruction_id"] = sp.instruction_id;
      r["speaker_id"] = sp.speaker_id;
      r["acoustic_tokens"] = sp.acoustic_tokens;
      records.push_back(std::move(r));
    }
  }
  io::write_artifact(path, meta, records);
}

SpokenFile read_spoken(const std::string& path) {
  io::Artifact art = io::read_artifact(path, "spoken");
  SpokenFile out;
  if (!art.meta.extra.contains("acoustic_size")) {
    throw IoError("CorruptFile", path + ": spoken meta lacks acoustic_size");
  }
  out.acoustic_size = art.meta.extra["acoustic_size"].get<int>();
  out.group_size = art.meta.extra.value("group_size", 4);
  for (const json& r : art.records) {
    speech::SpokenInstruction sp;
    sp.instruction_id = r.at("instruction_id").get<std::string>();
    sp.speaker_id = r.at("speaker_id").get<int>();
    sp.acoustic_tokens = r.at("acoustic_tokens").get<std::vector<int>>();
    out.by_id[sp.instruction_id].push_back(std::move(sp));
  }
  out.meta = std::move(art.meta);
  return out;
}

void write_speaker_bank(const std::string& path, const config::RunConfig& cfg,
                        const std::vector<speech::SpeakerProfile>& bank) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "speaker_bank";
  j["config_digest"] = config::config_digest(cfg);
  json speakers = json::array();
  for (const auto& sp : bank) {
    speakers.push_back({{"speaker_id", sp.speaker_id},
                        {"perm_seed", sp.perm_seed},
                        {"filler_rate", sp.filler_rate},
                        {"substitution_rate", sp.substitution_rate}});
  }
  j["speakers"] = speakers;
  io::atomic_write_file(path, j.dump() + "\n");
}

std::vector<speech::SpeakerProfile> read_speaker_bank(const std::string& path) {
  const json j = io::parse_json(io::read_file(path), path);
  if (!j.is_object() || j.value("kind", "") != "speaker_bank" ||
      !j.contains("speakers")) {
    throw IoError("CorruptFile", path + ": not a speaker bank");
  }
  if (j["format_version"].get<int>() != 1) {
    throw ValidationError("FormatVersionMismatch", path);
  }
  std::vector<speech::SpeakerProfile> bank;
  for (const json& s : j["speakers"]) {
    bank.push_back({s.at("speaker_id").get<int>(),
                    s.at("perm_seed").get<std::uint64_t>(),
                    s.at("filler_rate").get<double>(),
                    s.at("substitution_rate").get<double>()});
  }
  return bank;
}

void write_metrics(const std::string& path, const config::RunConfig& cfg,
                   const std::vector<trainer::MetricsRecord>& records) {
  io::ArtifactMeta meta = base_meta("metrics", cfg);
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(r.to_json());
  io::write_artifact(path, meta, lines);
}

}  // namespace rba::artifacts
