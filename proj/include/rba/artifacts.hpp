#pragma once

#include <map>
#include <string>
#include <vector>

#include "rba/config.hpp"
#include "rba/io.hpp"
#include "rba/speech.hpp"
#include "rba/textgen.hpp"
#include "rba/trainer.hpp"

namespace rba::artifacts {

// On-disk schemas. Every artifact opens with a meta line carrying
// format_version, kind, the resolved config digest, the resolved config
// itself, and whatever downstream stages need to proceed without re-deriving
// the world (the corpus meta carries the lexicon; the spoken meta carries the
// acoustic vocab size). No timestamps anywhere: byte-identical reruns are a
// tested guarantee.

struct CorpusFile {
  io::ArtifactMeta meta;
  std::string world_kind;
  std::vector<std::string> lexicon;  // text token id -> word
  std::vector<textgen::Instruction> items;
};

void write_corpus(const std::string& path, const config::RunConfig& cfg,
                  const textgen::TaskWorld& world,
                  const std::vector<textgen::Instruction>& items);
CorpusFile read_corpus(const std::string& path);

struct SpokenFile {
  io::ArtifactMeta meta;
  int acoustic_size = 0;
  int group_size = 0;
  // id -> renderings in speaker_id order (file order preserved)
  std::map<std::string, std::vector<speech::SpokenInstruction>> by_id;
};

void write_spoken(const std::string& path, const config::RunConfig& cfg,
                  const std::vector<std::string>& corpus_order, int acoustic_size,
                  int group_size,
                  const std::map<std::string, std::vector<speech::SpokenInstruction>>& by_id);
SpokenFile read_spoken(const std::string& path);

void write_speaker_bank(const std::string& path, const config::RunConfig& cfg,
                        const std::vector<speech::SpeakerProfile>& bank);
std::vector<speech::SpeakerProfile> read_speaker_bank(const std::string& path);

void write_metrics(const std::string& path, const config::RunConfig& cfg,
                   const std::vector<trainer::MetricsRecord>& records);

}  // namespace rba::artifacts
