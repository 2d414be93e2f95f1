#include "rba/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rba::io {

namespace fs = std::filesystem;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a 64 offset basis
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("FileNotFound", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("ReadFailure", "error reading " + path);
  return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& content,
                       long abort_after_bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("WriteFailure", "cannot open " + tmp);
    if (abort_after_bytes >= 0 &&
        static_cast<std::size_t>(abort_after_bytes) < content.size()) {
      out.write(content.data(), abort_after_bytes);
      out.flush();
      // Simulated crash: the partial temp file is left behind, the target is
      // never touched.
      throw IoError("SimulatedCrash",
                    "aborted after " + std::to_string(abort_after_bytes) + " bytes");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("WriteFailure", "error writing " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("WriteFailure", "rename to " + path + ": " + ec.message());
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("CorruptFile", "invalid JSON in " + what);
  return j;
}

std::string render_artifact(const ArtifactMeta& meta, const std::vector<json>& records) {
  json head;
  head["format_version"] = meta.format_version;
  head["kind"] = meta.kind;
  head["config_digest"] = meta.config_digest;
  for (auto it = meta.extra.begin(); it != meta.extra.end(); ++it) {
    head[it.key()] = it.value();
  }
  std::string out = head.dump();
  out += '\n';
  for (const json& rec : records) {
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_artifact(const std::string& path, const ArtifactMeta& meta,
                    const std::vector<json>& records) {
  atomic_write_file(path, render_artifact(meta, records));
}

Artifact read_artifact(const std::string& path, const std::string& expected_kind) {
  const std::string text = read_file(path);

  Artifact art;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    json j = parse_json(line, path);
    if (first) {
      first = false;
      if (!j.is_object() || !j.contains("format_version") || !j.contains("kind") ||
          !j.contains("config_digest")) {
        throw IoError("CorruptFile", path + ": missing artifact meta line");
      }
      art.meta.format_version = j["format_version"].get<int>();
      art.meta.kind = j["kind"].get<std::string>();
      art.meta.config_digest = j["config_digest"].get<std::string>();
      j.erase("format_version");
      j.erase("kind");
      j.erase("config_digest");
      art.meta.extra = std::move(j);
      if (art.meta.format_version != 1) {
        throw ValidationError("FormatVersionMismatch",
                              path + ": format_version " +
                                  std::to_string(art.meta.format_version));
      }
      if (!expected_kind.empty() && art.meta.kind != expected_kind) {
        throw ValidationError("FormatVersionMismatch",
                              path + ": kind '" + art.meta.kind + "', expected '" +
                                  expected_kind + "'");
      }
    } else {
      art.records.push_back(std::move(j));
    }
  }
  if (first) throw IoError("CorruptFile", path + ": empty artifact");
  return art;
}

}  // namespace rba::io
