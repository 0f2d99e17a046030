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

// Corpus curation: the four-stage filtering cascade, session-preserving
// packing of short utterances into <= 30 s chunks, deterministic
// hash-keyed split assignment, and split-hygiene validation.
//
// Cascade stage order: no-speech labels, then high WER, then word
// count, then duration. Unscorable files (reference normalizes to
// nothing) cannot be removed by the WER stage; the word-count stage
// picks them up.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpus_forge/corpus_model.hpp"
#include "corpus_forge/parallel.hpp"
#include "corpus_forge/sha256.hpp"
#include "corpus_forge/text_normalizer.hpp"
#include "corpus_forge/wer_engine.hpp"

namespace corpus_forge {

struct FilterPolicy {
  double wer_threshold = 0.5;  // strict: a file at exactly the threshold stays
  int min_words = 3;           // counted on raw whitespace tokens
  std::set<std::string> no_speech_labels = {"<DISCARD>", "<NO_SIGNAL>", "<SILENCE>"};
  double max_duration_s = 30.0;  // strict: exactly max stays
  std::set<Split> duration_filtered_splits = {Split::train, Split::dev};
};

enum class FilterReason : std::uint8_t {
  no_speech_label,
  high_wer,
  too_short,
  too_long,
  kept,
};

inline std::string_view to_string(FilterReason r) {
  switch (r) {
    case FilterReason::no_speech_label: return "no_speech_label";
    case FilterReason::high_wer: return "high_wer";
    case FilterReason::too_short: return "too_short";
    case FilterReason::too_long: return "too_long";
    case FilterReason::kept: return "kept";
  }
  return "";
}

// Stage indices; kept records carry kCascadeStages.
inline constexpr int kStageNoSpeech = 0;
inline constexpr int kStageHighWer = 1;
inline constexpr int kStageTooShort = 2;
inline constexpr int kStageTooLong = 3;
inline constexpr int kCascadeStages = 4;

struct FilterDecision {
  std::string utterance_id;
  bool keep = false;
  FilterReason reason = FilterReason::kept;
  int stage = kCascadeStages;
};

/// One Table-1 cell: remaining (hours, WER) for a split after a stage.
struct CascadeRow {
  std::string stage_label;  // "none", then the stage's reason code
  Split split = Split::unassigned;
  double hours = 0.0;
  std::optional<WerFraction> wer;  // absent when no scorable record remains
};

struct CascadeResult {
  Manifest filtered;
  Manifest rejected;  // removed records, tagged with the removal flag
  std::vector<FilterDecision> decisions;
  std::vector<CascadeRow> rows;  // ordered by (stage, split)
  std::vector<ScoreRecord> scores;  // per-record scores of scorable inputs
};

namespace detail {

inline std::string trim_ws(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline Flag reason_flag(FilterReason r) {
  switch (r) {
    case FilterReason::no_speech_label: return Flag::no_speech_label;
    case FilterReason::high_wer: return Flag::high_wer;
    case FilterReason::too_short: return Flag::too_short;
    case FilterReason::too_long: return Flag::too_long;
    default: return Flag::no_speech_label;
  }
}

}  // namespace detail

/// Runs the cascade. Hypotheses must cover every record that survives
/// the no-speech stage; uncovered records are an error listed by id.
/// After each stage a CascadeRow per split captures the remaining hours
/// and the micro WER of the remaining scorable records.
inline CascadeResult run_cascade(const Manifest& manifest,
                                 const std::map<std::string, std::string>& hypotheses,
                                 const FilterPolicy& policy,
                                 const NormalizerConfig& cfg = NormalizerConfig::defaults(),
                                 unsigned jobs = 0) {
  CascadeResult result;
  result.filtered.provenance = manifest.provenance;
  result.rejected.provenance = manifest.provenance;
  const auto& records = manifest.records;
  const std::size_t n = records.size();
  if (n == 0) return result;

  std::vector<FilterReason> reason(n, FilterReason::kept);
  std::vector<int> stage(n, kCascadeStages);
  auto alive = [&](std::size_t i) { return reason[i] == FilterReason::kept; };
  auto remove = [&](std::size_t i, FilterReason r, int st) {
    reason[i] = r;
    stage[i] = st;
  };

  // Stage 0 verdicts are needed up front: only records that survive it
  // are required to have a hypothesis.
  std::vector<std::uint8_t> is_no_speech(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (policy.no_speech_labels.count(detail::trim_ws(records[i].raw_transcript)))
      is_no_speech[i] = 1;

  std::string missing;
  std::size_t missing_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_no_speech[i] && !hypotheses.count(records[i].id)) {
      if (missing_count++) missing += ", ";
      missing += records[i].id;
    }
  }
  if (missing_count)
    throw Error("missing hypotheses for " + std::to_string(missing_count) +
                " record(s): " + missing);

  // Score everything that has a hypothesis, no-speech records included,
  // so the pre-filter row reflects the whole corpus.
  std::vector<std::optional<ScoreRecord>> scores(n);
  detail::parallel_for(n, jobs, [&](std::size_t i) {
    auto hyp = hypotheses.find(records[i].id);
    if (hyp == hypotheses.end()) return;
    try {
      scores[i] = wer(records[i].raw_transcript, hyp->second, cfg, records[i].id);
    } catch (const EmptyReferenceError&) {
      // unscorable; later stages handle it
    }
  });

  std::vector<Split> splits_present;
  for (Split s : {Split::train, Split::dev, Split::test, Split::unassigned}) {
    if (std::any_of(records.begin(), records.end(),
                    [&](const auto& r) { return r.split == s; }))
      splits_present.push_back(s);
  }

  auto emit_rows = [&](std::string_view label) {
    for (Split s : splits_present) {
      CascadeRow row;
      row.stage_label = std::string(label);
      row.split = s;
      WerFraction agg;
      bool any_scorable = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!alive(i) || records[i].split != s) continue;
        row.hours += records[i].duration_s / 3600.0;
        if (scores[i]) {
          agg.edits += scores[i]->edits();
          agg.ref_len += scores[i]->ref_len;
          any_scorable = true;
        }
      }
      if (any_scorable) row.wer = agg;
      result.rows.push_back(std::move(row));
    }
  };

  emit_rows("none");

  for (std::size_t i = 0; i < n; ++i)
    if (alive(i) && is_no_speech[i])
      remove(i, FilterReason::no_speech_label, kStageNoSpeech);
  emit_rows(to_string(FilterReason::no_speech_label));

  for (std::size_t i = 0; i < n; ++i) {
    if (!alive(i) || !scores[i]) continue;
    if (static_cast<double>(scores[i]->edits()) >
        policy.wer_threshold * static_cast<double>(scores[i]->ref_len))
      remove(i, FilterReason::high_wer, kStageHighWer);
  }
  emit_rows(to_string(FilterReason::high_wer));

  for (std::size_t i = 0; i < n; ++i) {
    if (!alive(i)) continue;
    if (tokenize(records[i].raw_transcript).size() <
        static_cast<std::size_t>(policy.min_words))
      remove(i, FilterReason::too_short, kStageTooShort);
  }
  emit_rows(to_string(FilterReason::too_short));

  for (std::size_t i = 0; i < n; ++i) {
    if (!alive(i)) continue;
    if (records[i].duration_s > policy.max_duration_s &&
        policy.duration_filtered_splits.count(records[i].split))
      remove(i, FilterReason::too_long, kStageTooLong);
  }
  emit_rows(to_string(FilterReason::too_long));

  for (std::size_t i = 0; i < n; ++i) {
    result.decisions.push_back(
        {records[i].id, alive(i), reason[i], stage[i]});
    if (alive(i)) {
      result.filtered.records.push_back(records[i]);
    } else {
      UtteranceRecord r = records[i];
      r.flags.insert(detail::reason_flag(reason[i]));
      result.rejected.records.push_back(std::move(r));
    }
    if (scores[i]) result.scores.push_back(*scores[i]);
  }
  return result;
}

struct Chunk {
  std::string chunk_id;  // <session_id>-<index padded to 4>
  std::string session_id;
  Split split = Split::unassigned;
  std::vector<std::string> member_ids;
  double total_duration_s = 0.0;
  std::string combined_transcript;
  std::string audio_path;  // <out_dir>/<chunk_id>.wav; empty when no out_dir
  bool overlong_singleton = false;
};

/// Greedy left-to-right packing within each (session, split): extend
/// the open chunk while total + next <= max_duration_s. Member order is
/// id order, which encodes temporal order in session trees; nothing is
/// ever reordered, so conversational context survives. A member alone
/// exceeding the cap becomes a flagged singleton chunk.
inline std::vector<Chunk> pack_sessions(const Manifest& manifest,
                                        double max_duration_s,
                                        const std::filesystem::path& out_dir = {}) {
  std::map<std::pair<std::string, Split>, std::vector<const UtteranceRecord*>> groups;
  for (const auto& r : manifest.records)
    groups[{r.session_id, r.split}].push_back(&r);  // manifest is id-sorted

  std::map<std::string, int> session_counter;
  std::vector<Chunk> chunks;
  auto flush = [&](Chunk& c) {
    if (c.member_ids.empty()) return;
    int index = session_counter[c.session_id]++;
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "-%04d", index);
    c.chunk_id = c.session_id + suffix;
    if (!out_dir.empty())
      c.audio_path = (out_dir / (c.chunk_id + ".wav")).generic_string();
    chunks.push_back(std::move(c));
    c = Chunk{};
  };

  for (auto& [key, members] : groups) {
    Chunk open;
    open.session_id = key.first;
    open.split = key.second;
    auto append = [&](const UtteranceRecord* r) {
      open.member_ids.push_back(r->id);
      open.total_duration_s += r->duration_s;
      const std::string& text =
          r->normalized_transcript ? *r->normalized_transcript : r->raw_transcript;
      if (!text.empty()) {
        if (!open.combined_transcript.empty()) open.combined_transcript.push_back(' ');
        open.combined_transcript += text;
      }
    };
    for (const UtteranceRecord* r : members) {
      if (r->duration_s > max_duration_s) {
        flush(open);
        open.session_id = key.first;
        open.split = key.second;
        append(r);
        open.overlong_singleton = true;
        flush(open);
        open.session_id = key.first;
        open.split = key.second;
        continue;
      }
      if (!open.member_ids.empty() &&
          open.total_duration_s + r->duration_s > max_duration_s) {
        flush(open);
        open.session_id = key.first;
        open.split = key.second;
      }
      append(r);
    }
    flush(open);
  }
  return chunks;
}

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct SplitAssignment {
  std::map<std::string, Split> assignment;
  std::string seed;
  SplitRatios ratios;
};

/// Deterministic shuffle-and-cut. Ids are ordered by the SHA-256 digest
/// of "<seed>:<id>", so the assignment is a pure function of (ids, seed)
/// and independent of input order. Counts are floor(ratio * n) with the
/// remainder handed out in train, dev, test order; the shuffled prefix
/// goes to train, then dev, then test.
inline SplitAssignment assign_splits(std::span<const std::string> ids,
                                     const SplitRatios& ratios,
                                     std::string_view seed) {
  double sum = ratios.train + ratios.dev + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0)
    throw Error("split ratios must be non-negative");

  struct Keyed {
    detail::Sha256::Digest key;
    const std::string* id;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(ids.size());
  {
    std::set<std::string_view> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw DuplicateIdError(id);
      detail::Sha256 h;
      h.update(seed.data(), seed.size());
      h.update(":", 1);
      h.update(id.data(), id.size());
      keyed.push_back({h.finish(), &id});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    return *a.id < *b.id;
  });

  const std::size_t n = keyed.size();
  std::size_t counts[3] = {
      static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9)),
      static_cast<std::size_t>(std::floor(ratios.dev * static_cast<double>(n) + 1e-9)),
      static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n) + 1e-9)),
  };
  std::size_t assigned = counts[0] + counts[1] + counts[2];
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++counts[i];

  SplitAssignment out;
  out.seed = std::string(seed);
  out.ratios = ratios;
  static constexpr Split kOrder[3] = {Split::train, Split::dev, Split::test};
  std::size_t pos = 0;
  for (int s = 0; s < 3; ++s)
    for (std::size_t k = 0; k < counts[s]; ++k, ++pos)
      out.assignment.emplace(*keyed[pos].id, kOrder[s]);
  return out;
}

struct SpeakerViolation {
  std::string speaker_id;
  std::set<Split> splits;
};

struct DisjointReport {
  std::vector<SpeakerViolation> violations;      // speakers spanning >1 split
  std::vector<std::string> unverifiable_ids;     // records lacking speaker_id
  bool ok() const { return violations.empty(); }
};

/// Checks that every speaker maps into a single data split. Records
/// with split unassigned do not count toward overlap; records without a
/// speaker_id are reported separately as unverifiable.
inline DisjointReport validate_speaker_disjoint(const Manifest& manifest) {
  DisjointReport report;
  std::map<std::string, std::set<Split>> by_speaker;
  for (const auto& r : manifest.records) {
    if (!r.speaker_id) {
      report.unverifiable_ids.push_back(r.id);
      continue;
    }
    if (r.split == Split::unassigned) continue;
    by_speaker[*r.speaker_id].insert(r.split);
  }
  for (auto& [speaker, splits] : by_speaker)
    if (splits.size() > 1) report.violations.push_back({speaker, splits});
  return report;
}

/// Writes the fine-tuning handoff file: one line per chunk with
/// audio_path, text, duration_s, split. Chunks must have their audio
/// written already; a missing file is an error naming the chunk.
inline void export_training_manifest(std::span<const Chunk> chunks,
                                     const std::filesystem::path& out_path) {
  for (const auto& c : chunks) {
    if (c.audio_path.empty() || !std::filesystem::exists(c.audio_path))
      throw Error("chunk " + c.chunk_id + " has no audio file at \"" +
                  c.audio_path + "\"");
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path.string());
  nlohmann::ordered_json header;
  header["format"] = kFormatVersion;
  out << header.dump() << '\n';
  for (const auto& c : chunks) {
    nlohmann::ordered_json j;
    j["audio_path"] = c.audio_path;
    j["text"] = c.combined_transcript;
    j["duration_s"] = c.total_duration_s;
    j["split"] = to_string(c.split);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("short write to " + out_path.string());
}

}  // namespace corpus_forge
