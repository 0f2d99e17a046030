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

// Reporting and error analysis: cascade tables with "WER (hours)"
// cells, per-corpus hour accounting, side-by-side alignment displays,
// and the filler-retention metric. Percentages are rendered to one
// decimal in tables and two decimals in structured score output.

#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpus_forge/corpus_model.hpp"
#include "corpus_forge/curation.hpp"
#include "corpus_forge/text_normalizer.hpp"
#include "corpus_forge/wer_engine.hpp"

namespace corpus_forge {

namespace detail {

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace detail

struct AccountingRow {
  std::string corpus;
  Split split = Split::unassigned;
  double hours = 0.0;
};

/// Hours per (corpus, split). Rows for train/dev/test always appear,
/// 0.0 when empty; unassigned appears only when populated.
inline std::vector<AccountingRow> dataset_accounting(
    std::span<const std::pair<std::string, const Manifest*>> corpora) {
  std::vector<AccountingRow> rows;
  for (const auto& [name, manifest] : corpora) {
    double hours[4] = {0, 0, 0, 0};
    for (const auto& r : manifest->records)
      hours[static_cast<int>(r.split)] += r.duration_s / 3600.0;
    for (Split s : {Split::train, Split::dev, Split::test, Split::unassigned}) {
      if (s == Split::unassigned && hours[3] == 0.0) continue;
      rows.push_back({name, s, hours[static_cast<int>(s)]});
    }
  }
  return rows;
}

inline std::string render_accounting(std::span<const AccountingRow> rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"corpus", "split", "hours"});
  for (const auto& r : rows)
    cells.push_back({r.corpus, std::string(to_string(r.split)),
                     detail::format_fixed(r.hours, 1)});
  std::size_t width[3] = {0, 0, 0};
  for (const auto& row : cells)
    for (int c = 0; c < 3; ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (int c = 0; c < 3; ++c) {
      if (c) out += "  ";
      out += detail::pad_right(row[c], width[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

/// Table-1-shaped text: one row per cascade stage, one "WER (hours)"
/// cell per split, both to one decimal. Empty input renders empty.
inline std::string render_cascade(std::span<const CascadeRow> rows) {
  if (rows.empty()) return {};
  std::vector<std::string> stages;
  std::vector<Split> splits;
  for (const auto& r : rows) {
    if (std::find(stages.begin(), stages.end(), r.stage_label) == stages.end())
      stages.push_back(r.stage_label);
    if (std::find(splits.begin(), splits.end(), r.split) == splits.end())
      splits.push_back(r.split);
  }
  auto cell = [&](const CascadeRow& r) {
    std::string wer = r.wer ? detail::format_fixed(r.wer->percent(), 1) : "-";
    return wer + " (" + detail::format_fixed(r.hours, 1) + ")";
  };

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head;
  head.push_back("stage");
  for (Split s : splits) head.emplace_back(to_string(s));
  grid.push_back(std::move(head));
  for (const auto& stage : stages) {
    std::vector<std::string> line;
    line.push_back(stage);
    for (Split s : splits) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const CascadeRow& r) {
        return r.stage_label == stage && r.split == s;
      });
      line.push_back(it != rows.end() ? cell(*it) : "");
    }
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c)
      width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (const auto& line : grid) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) text += "  ";
      text += detail::pad_right(line[c], width[c]);
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out += text;
    out += '\n';
  }
  return out;
}

/// Structured cascade report: {"stage","split","hours","wer_percent"}
/// per line, wer_percent to two decimals, null when unscorable.
inline std::string cascade_jsonl(std::span<const CascadeRow> rows) {
  std::string out;
  nlohmann::ordered_json header;
  header["format"] = kFormatVersion;
  out += header.dump();
  out += '\n';
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["stage"] = r.stage_label;
    j["split"] = to_string(r.split);
    j["hours"] = r.hours;
    if (r.wer)
      j["wer_percent"] = std::stod(detail::format_fixed(r.wer->percent(), 2));
    else
      j["wer_percent"] = nullptr;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<CascadeRow> read_cascade_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<CascadeRow> rows;
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
    CascadeRow r;
    if (!j.contains("stage") || !j.contains("split") || !j.contains("hours"))
      throw ParseError(path.string(), line_no, "missing cascade field");
    r.stage_label = j.at("stage").get<std::string>();
    auto split = split_from_string(j.at("split").get<std::string>());
    if (!split) throw ParseError(path.string(), line_no, "unknown split");
    r.split = *split;
    r.hours = j.at("hours").get<double>();
    if (j.contains("wer_percent") && j.at("wer_percent").is_number()) {
      // Rebuild an approximate fraction for display purposes only.
      double pct = j.at("wer_percent").get<double>();
      r.wer = WerFraction{static_cast<long long>(pct * 100.0 + 0.5), 10000};
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Three-line human alignment: reference tokens, op markers (=, S, D,
/// I), hypothesis tokens, column-padded; "*" marks the absent side.
inline std::string alignment_report(std::string_view ref_text,
                                    std::string_view hyp_text,
                                    const NormalizerConfig& cfg) {
  auto ref = tokenize(normalize(ref_text, cfg));
  auto hyp = tokenize(normalize(hyp_text, cfg));
  Alignment a = align(ref, hyp);
  std::string ref_line = "ref:";
  std::string ops_line = "ops:";
  std::string hyp_line = "hyp:";
  for (const auto& op : a.ops) {
    std::string r = op.ref_tok.empty() ? "*" : op.ref_tok;
    std::string h = op.hyp_tok.empty() ? "*" : op.hyp_tok;
    const char* marker = "=";
    switch (op.kind) {
      case EditKind::match: marker = "="; break;
      case EditKind::substitute: marker = "S"; break;
      case EditKind::erase: marker = "D"; break;
      case EditKind::insert: marker = "I"; break;
    }
    std::size_t w = std::max(r.size(), h.size());
    ref_line += " " + detail::pad_right(r, w);
    ops_line += " " + detail::pad_right(marker, w);
    hyp_line += " " + detail::pad_right(h, w);
  }
  auto rtrim = [](std::string& s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
  };
  rtrim(ref_line);
  rtrim(ops_line);
  rtrim(hyp_line);
  return ref_line + "\n" + ops_line + "\n" + hyp_line + "\n";
}

struct FillerRetention {
  int ref_filler_count = 0;
  int matched_filler_count = 0;  // exact Match ops only
  int family_matched_count = 0;  // any filler aligned to any filler
  std::optional<double> retention() const {
    if (ref_filler_count == 0) return std::nullopt;
    return double(matched_filler_count) / double(ref_filler_count);
  }
  std::optional<double> family_retention() const {
    if (ref_filler_count == 0) return std::nullopt;
    return double(family_matched_count) / double(ref_filler_count);
  }
};

/// Counts how many reference fillers the hypotheses kept. Requires a
/// config with remove_fillers off, or the fillers would be normalized
/// away before they could be counted. The strict count takes exact
/// Match ops; the family count also accepts um<->uhm style respellings
/// (a substitution inside the filler set).
inline FillerRetention filler_retention(
    std::span<const std::pair<std::string, std::string>> pairs,
    const NormalizerConfig& cfg) {
  if (cfg.remove_fillers)
    throw Error("filler_retention requires a config with remove_fillers off");
  FillerRetention out;
  for (const auto& [ref_text, hyp_text] : pairs) {
    auto ref = tokenize(normalize(ref_text, cfg));
    auto hyp = tokenize(normalize(hyp_text, cfg));
    Alignment a = align(ref, hyp);
    for (const auto& op : a.ops) {
      if (op.ref_tok.empty() || !cfg.filler_set.count(op.ref_tok)) continue;
      ++out.ref_filler_count;
      if (op.kind == EditKind::match) {
        ++out.matched_filler_count;
        ++out.family_matched_count;
      } else if (op.kind == EditKind::substitute &&
                 cfg.filler_set.count(op.hyp_tok)) {
        ++out.family_matched_count;
      }
    }
  }
  return out;
}

}  // namespace corpus_forge
