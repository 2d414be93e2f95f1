#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "rba/errors.hpp"

namespace rba::io {

using json = nlohmann::json;

// FNV-1a 64 over raw bytes, rendered as 16 lowercase hex chars. Digests of
// resolved configs stamp every artifact so reruns can be matched to their
// exact settings.
std::string fnv1a_hex(const std::string& bytes);

std::string read_file(const std::string& path);  // IoError on failure

// Write-to-temp + rename. The target path never holds a partial file: either
// the old content survives or the new content is complete. abort_after_bytes
// is a fault-injection hook for crash tests — when >= 0 the write stops after
// that many bytes and throws IoError("SimulatedCrash") before the rename.
void atomic_write_file(const std::string& path, const std::string& content,
                       long abort_after_bytes = -1);

// JSONL artifact framing. Line 1 is a meta object; every following line is
// one record. LF endings, UTF-8, no timestamps anywhere.
struct ArtifactMeta {
  int format_version = 1;
  std::string kind;           // "corpus" | "spoken" | "metrics" | ...
  std::string config_digest;  // fnv1a_hex of the resolved config dump
  json extra = json::object();  // kind-specific fields (lexicon, vocab, ...)
};

struct Artifact {
  ArtifactMeta meta;
  std::vector<json> records;
};

std::string render_artifact(const ArtifactMeta& meta, const std::vector<json>& records);

void write_artifact(const std::string& path, const ArtifactMeta& meta,
                    const std::vector<json>& records);

// Parses and validates the meta line. Throws IoError("CorruptFile") on any
// parse failure and ValidationError("FormatVersionMismatch") when the
// format_version or (non-empty) expected kind does not match.
Artifact read_artifact(const std::string& path, const std::string& expected_kind);

json parse_json(const std::string& text, const std::string& what);  // CorruptFile on failure

}  // namespace rba::io
