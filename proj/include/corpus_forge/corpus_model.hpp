// Copyright 2026 corpus-forge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// The manifest data model. A manifest is a UTF-8 JSON Lines file: a
// {"format":"corpus-forge/1"} header record followed by one utterance
// record per line, sorted by id. Every pipeline stage reads a manifest
// and writes a new one; the representation is the interchange contract
// between all tools.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "corpus_forge/audio_io.hpp"
#include "corpus_forge/errors.hpp"
#include "corpus_forge/parallel.hpp"

namespace corpus_forge {

inline constexpr std::string_view kFormatVersion = "corpus-forge/1";
inline constexpr std::string_view kToolVersion = "1.0.0";

enum class Split : std::uint8_t { train, dev, test, unassigned };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

inline std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  return std::nullopt;
}

// Directory names that announce a split in a corpus tree.
inline std::optional<Split> split_from_dir_name(std::string_view s) {
  if (s == "train" || s == "training") return Split::train;
  if (s == "dev" || s == "development") return Split::dev;
  if (s == "test" || s == "testing") return Split::test;
  return std::nullopt;
}

enum class Flag : std::uint8_t {
  no_speech_label,
  too_short,
  high_wer,
  too_long,
  overlong_singleton,
  number_passthrough,
};

inline std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::no_speech_label: return "no_speech_label";
    case Flag::too_short: return "too_short";
    case Flag::high_wer: return "high_wer";
    case Flag::too_long: return "too_long";
    case Flag::overlong_singleton: return "overlong_singleton";
    case Flag::number_passthrough: return "number_passthrough";
  }
  return "";
}

inline std::optional<Flag> flag_from_string(std::string_view s) {
  if (s == "no_speech_label") return Flag::no_speech_label;
  if (s == "too_short") return Flag::too_short;
  if (s == "high_wer") return Flag::high_wer;
  if (s == "too_long") return Flag::too_long;
  if (s == "overlong_singleton") return Flag::overlong_singleton;
  if (s == "number_passthrough") return Flag::number_passthrough;
  return std::nullopt;
}

struct UtteranceRecord {
  std::string id;
  std::string session_id;
  std::optional<std::string> speaker_id;
  Split split = Split::unassigned;
  std::string audio_path;
  double duration_s = 0.0;
  std::string raw_transcript;
  std::optional<std::string> normalized_transcript;
  std::set<Flag> flags;
};

struct Hypothesis {
  std::string utterance_id;
  std::string text;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  // Free-form metadata (source layout, tool version); serialized into
  // the header record and excluded from byte-stability guarantees.
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  /// Sorts by id and enforces uniqueness.
  void finalize() {
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records.size(); ++i)
      if (records[i].id == records[i - 1].id) throw DuplicateIdError(records[i].id);
  }

  const UtteranceRecord* find(std::string_view id) const {
    auto it = std::lower_bound(
        records.begin(), records.end(), id,
        [](const UtteranceRecord& r, std::string_view v) { return r.id < v; });
    return (it != records.end() && it->id == id) ? &*it : nullptr;
  }
};

namespace detail {

inline nlohmann::ordered_json record_to_json(const UtteranceRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["session_id"] = r.session_id;
  if (r.speaker_id) j["speaker_id"] = *r.speaker_id;
  j["split"] = to_string(r.split);
  j["audio_path"] = r.audio_path;
  j["duration_s"] = r.duration_s;
  j["raw_transcript"] = r.raw_transcript;
  if (r.normalized_transcript) j["normalized_transcript"] = *r.normalized_transcript;
  if (!r.flags.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (Flag f : r.flags) arr.push_back(std::string(to_string(f)));
    j["flags"] = std::move(arr);
  }
  return j;
}

inline UtteranceRecord record_from_json(const nlohmann::ordered_json& j,
                                        const std::string& file, std::size_t line) {
  auto bad = [&](const std::string& what) -> ParseError {
    return ParseError(file, line, what);
  };
  static const std::set<std::string> kKnown = {
      "id",         "session_id",     "speaker_id",
      "split",      "audio_path",     "duration_s",
      "raw_transcript", "normalized_transcript", "flags"};
  UtteranceRecord r;
  if (!j.is_object()) throw bad("record is not an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!kKnown.count(key)) throw bad("unknown field \"" + key + "\"");
  }
  auto req_string = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j.at(key).is_string())
      throw bad(std::string("missing or non-string field \"") + key + "\"");
    return j.at(key).get<std::string>();
  };
  r.id = req_string("id");
  r.session_id = req_string("session_id");
  if (j.contains("speaker_id")) {
    if (!j.at("speaker_id").is_string()) throw bad("non-string speaker_id");
    r.speaker_id = j.at("speaker_id").get<std::string>();
  }
  auto split = split_from_string(req_string("split"));
  if (!split) throw bad("unknown split \"" + j.at("split").get<std::string>() + "\"");
  r.split = *split;
  r.audio_path = req_string("audio_path");
  if (!j.contains("duration_s") || !j.at("duration_s").is_number())
    throw bad("missing or non-numeric duration_s");
  r.duration_s = j.at("duration_s").get<double>();
  if (r.duration_s < 0) throw bad("negative duration_s");
  r.raw_transcript = req_string("raw_transcript");
  if (j.contains("normalized_transcript")) {
    if (!j.at("normalized_transcript").is_string())
      throw bad("non-string normalized_transcript");
    r.normalized_transcript = j.at("normalized_transcript").get<std::string>();
  }
  if (j.contains("flags")) {
    if (!j.at("flags").is_array()) throw bad("flags is not an array");
    for (const auto& f : j.at("flags")) {
      if (!f.is_string()) throw bad("non-string flag");
      auto flag = flag_from_string(f.get<std::string>());
      if (!flag) throw bad("unknown flag \"" + f.get<std::string>() + "\"");
      r.flags.insert(*flag);
    }
  }
  return r;
}

inline nlohmann::ordered_json parse_json_line(const std::string& line,
                                              const std::string& file,
                                              std::size_t line_no) {
  try {
    return nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(file, line_no, std::string("invalid JSON: ") + e.what());
  }
}

inline void check_header(const nlohmann::ordered_json& j, const std::string& file) {
  if (!j.is_object() || !j.contains("format") || !j.at("format").is_string() ||
      j.at("format").get<std::string>() != kFormatVersion)
    throw ParseError(file, 1,
                     std::string("expected header {\"format\":\"") +
                         std::string(kFormatVersion) + "\"}");
}

}  // namespace detail

/// One record per line; the header line carries format + provenance.
inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  nlohmann::ordered_json header;
  header["format"] = kFormatVersion;
  if (!m.provenance.empty()) header["provenance"] = m.provenance;
  out << header.dump() << '\n';
  for (const auto& r : m.records) out << detail::record_to_json(r).dump() << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto j = detail::parse_json_line(line, path.string(), line_no);
    if (line_no == 1) {
      detail::check_header(j, path.string());
      if (j.contains("provenance")) m.provenance = j.at("provenance");
      continue;
    }
    UtteranceRecord r = detail::record_from_json(j, path.string(), line_no);
    if (!seen.insert(r.id).second) throw DuplicateIdError(r.id);
    m.records.push_back(std::move(r));
  }
  if (line_no == 0) throw ParseError(path.string(), 1, "empty file, missing header");
  std::sort(m.records.begin(), m.records.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return m;
}

/// Hypothesis file: header line then {"utterance_id","text"} records.
inline std::map<std::string, std::string> read_hypotheses(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto j = detail::parse_json_line(line, path.string(), line_no);
    if (line_no == 1) {
      detail::check_header(j, path.string());
      continue;
    }
    if (!j.contains("utterance_id") || !j.at("utterance_id").is_string())
      throw ParseError(path.string(), line_no, "missing utterance_id");
    if (!j.contains("text") || !j.at("text").is_string())
      throw ParseError(path.string(), line_no, "missing text");
    auto id = j.at("utterance_id").get<std::string>();
    if (!out.emplace(id, j.at("text").get<std::string>()).second)
      throw DuplicateIdError(id);
  }
  // A zero-byte file is an empty mapping; only nonempty files need the header.
  return out;
}

inline void write_hypotheses(const std::map<std::string, std::string>& hyps,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  nlohmann::ordered_json header;
  header["format"] = kFormatVersion;
  out << header.dump() << '\n';
  for (const auto& [id, text] : hyps) {
    nlohmann::ordered_json j;
    j["utterance_id"] = id;
    j["text"] = text;
    out << j.dump() << '\n';
  }
}

enum class Layout : std::uint8_t { generic, session_tree };

struct ScanOptions {
  Layout layout = Layout::generic;
  // generic layout only: ECMAScript regex whose first capture group is
  // the session id, applied to the file stem. Empty means each file is
  // its own session.
  std::string session_pattern;
  unsigned jobs = 0;
};

struct SkipEntry {
  std::string path;
  std::string reason;
};

struct ScanResult {
  Manifest manifest;
  std::vector<SkipEntry> skipped;
};

/// Walks a corpus tree and builds a manifest: one record per
/// (audio, transcript) pair. Audio is .wav; the transcript sits beside
/// it as .txt (or .trn). Unpaired files are skipped and reported, never
/// fatal. Output is sorted by id and independent of directory-walk and
/// scheduling order.
inline ScanResult scan_corpus(const std::filesystem::path& root,
                              const ScanOptions& opts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("corpus root is not a readable directory: " + root.string());

  struct Candidate {
    fs::path audio;
    std::string rel_stem;  // relative path, extension dropped, '/' separators
  };
  std::vector<Candidate> candidates;
  std::unordered_map<std::string, fs::path> transcripts;
  ScanResult result;

  for (fs::recursive_directory_iterator it(root, ec), end; it != end; it.increment(ec)) {
    if (ec) throw IoError("error walking " + root.string() + ": " + ec.message());
    if (!it->is_regular_file()) continue;
    const fs::path& p = it->path();
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    fs::path rel = fs::relative(p, root);
    std::string stem = rel.parent_path().empty()
                           ? rel.stem().generic_string()
                           : (rel.parent_path() / rel.stem()).generic_string();
    if (ext == ".wav") {
      candidates.push_back({p, std::move(stem)});
    } else if (ext == ".txt" || ext == ".trn") {
      auto [pos, inserted] = transcripts.emplace(stem, p);
      if (!inserted && pos->second.extension() == ".trn" && ext == ".txt")
        pos->second = p;  // .txt preferred when both exist
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.rel_stem < b.rel_stem; });

  std::optional<std::regex> session_re;
  if (opts.layout == Layout::generic && !opts.session_pattern.empty())
    session_re.emplace(opts.session_pattern);

  struct Slot {
    std::optional<UtteranceRecord> record;
    std::optional<SkipEntry> skip;
  };
  std::vector<Slot> slots(candidates.size());
  std::unordered_set<std::string> matched_transcripts;
  std::mutex matched_mu;

  detail::parallel_for(candidates.size(), opts.jobs, [&](std::size_t i) {
    const Candidate& c = candidates[i];
    auto tr = transcripts.find(c.rel_stem);
    if (tr == transcripts.end()) {
      slots[i].skip = SkipEntry{c.audio.generic_string(), "missing transcript"};
      return;
    }
    {
      std::lock_guard<std::mutex> lock(matched_mu);
      matched_transcripts.insert(c.rel_stem);
    }
    UtteranceRecord r;
    r.id = c.rel_stem;
    r.audio_path = c.audio.generic_string();
    try {
      r.duration_s = probe(c.audio).duration_s();
    } catch (const Error& e) {
      slots[i].skip = SkipEntry{c.audio.generic_string(),
                                std::string("audio probe failed: ") + e.what()};
      return;
    }
    std::ifstream tf(tr->second, std::ios::binary);
    if (!tf) {
      slots[i].skip = SkipEntry{tr->second.generic_string(), "unreadable transcript"};
      return;
    }
    std::string text((std::istreambuf_iterator<char>(tf)),
                     std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
      text.pop_back();
    r.raw_transcript = std::move(text);

    fs::path rel(c.rel_stem);
    std::vector<std::string> components;
    for (const auto& part : rel.parent_path())
      components.push_back(part.generic_string());
    for (const auto& comp : components) {
      if (auto s = split_from_dir_name(comp)) {
        r.split = *s;
        break;
      }
    }
    std::string basename = rel.filename().string();
    if (opts.layout == Layout::session_tree) {
      r.session_id = components.empty() ? basename : components.back();
      if (components.size() >= 2) {
        const std::string& parent2 = components[components.size() - 2];
        if (!split_from_dir_name(parent2)) r.speaker_id = parent2;
      }
    } else {
      if (session_re) {
        std::smatch m;
        if (std::regex_search(basename, m, *session_re) && m.size() >= 2) {
          r.session_id = m[1].str();
        } else {
          slots[i].skip = SkipEntry{c.audio.generic_string(),
                                    "session pattern did not match"};
          return;
        }
      } else {
        r.session_id = basename;
      }
    }
    slots[i].record = std::move(r);
  });

  for (auto& s : slots) {
    if (s.record) result.manifest.records.push_back(std::move(*s.record));
    if (s.skip) result.skipped.push_back(std::move(*s.skip));
  }
  for (const auto& [stem, path] : transcripts) {
    if (!matched_transcripts.count(stem))
      result.skipped.push_back({path.generic_string(), "missing audio"});
  }
  std::sort(result.skipped.begin(), result.skipped.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  result.manifest.finalize();
  result.manifest.provenance = {
      {"tool", "corpus-forge"},
      {"version", std::string(kToolVersion)},
      {"stage", "scan"},
      {"layout", opts.layout == Layout::session_tree ? "session_tree" : "generic"},
  };
  return result;
}

}  // namespace corpus_forge
