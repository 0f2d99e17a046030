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

// Word-level Levenshtein alignment and word error rate. WER values are
// carried as exact integer fractions (edits over reference length) and
// only rendered as rounded percentages at the reporting edge, so
// cascade reports cannot drift across platforms.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpus_forge/errors.hpp"
#include "corpus_forge/text_normalizer.hpp"

namespace corpus_forge {

enum class EditKind : std::uint8_t { match, substitute, erase, insert };

struct AlignOp {
  EditKind kind;
  // Empty string means "no token on this side" (erase has no hyp token,
  // insert has no ref token); tokenize never produces empty tokens.
  std::string ref_tok;
  std::string hyp_tok;
};

struct Alignment {
  std::vector<AlignOp> ops;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int matches = 0;
  int ref_len = 0;
  int hyp_len = 0;
  int edits() const { return substitutions + deletions + insertions; }
};

/// Exact WER fraction: edits over reference words.
struct WerFraction {
  long long edits = 0;
  long long ref_len = 0;
  double value() const { return ref_len ? double(edits) / double(ref_len) : 0.0; }
  double percent() const { return 100.0 * value(); }
};

struct ScoreRecord {
  std::string utterance_id;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_len = 0;
  int edits() const { return substitutions + deletions + insertions; }
  double wer() const { return double(edits()) / double(ref_len); }
};

/// Minimal-cost word alignment with unit costs. Among minimal
/// alignments the result is the one that, read left to right, prefers
/// Match, then Substitute, then Delete, then Insert at every step.
inline Alignment align(std::span<const std::string> ref,
                       std::span<const std::string> hyp) {
  const int n = static_cast<int>(ref.size());
  const int m = static_cast<int>(hyp.size());
  // d[i][j] = edit distance between ref[i..n) and hyp[j..m); filling the
  // suffix table lets the backtrace run forward, which is what makes the
  // op preference apply in reading order.
  std::vector<std::uint32_t> d(static_cast<std::size_t>(n + 1) * (m + 1));
  auto at = [&](int i, int j) -> std::uint32_t& {
    return d[static_cast<std::size_t>(i) * (m + 1) + j];
  };
  for (int j = 0; j <= m; ++j) at(n, j) = static_cast<std::uint32_t>(m - j);
  for (int i = n - 1; i >= 0; --i) {
    at(i, m) = static_cast<std::uint32_t>(n - i);
    for (int j = m - 1; j >= 0; --j) {
      std::uint32_t diag = at(i + 1, j + 1) + (ref[i] == hyp[j] ? 0u : 1u);
      std::uint32_t down = at(i + 1, j) + 1;
      std::uint32_t right = at(i, j + 1) + 1;
      at(i, j) = std::min(diag, std::min(down, right));
    }
  }

  Alignment a;
  a.ref_len = n;
  a.hyp_len = m;
  a.ops.reserve(static_cast<std::size_t>(std::max(n, m)));
  int i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && ref[i] == hyp[j] && at(i + 1, j + 1) == at(i, j)) {
      a.ops.push_back({EditKind::match, ref[i], hyp[j]});
      ++a.matches;
      ++i;
      ++j;
    } else if (i < n && j < m && at(i + 1, j + 1) + 1 == at(i, j)) {
      a.ops.push_back({EditKind::substitute, ref[i], hyp[j]});
      ++a.substitutions;
      ++i;
      ++j;
    } else if (i < n && at(i + 1, j) + 1 == at(i, j)) {
      a.ops.push_back({EditKind::erase, ref[i], ""});
      ++a.deletions;
      ++i;
    } else {
      a.ops.push_back({EditKind::insert, "", hyp[j]});
      ++a.insertions;
      ++j;
    }
  }
  return a;
}

/// Normalizes both sides with the same config, tokenizes, aligns.
/// Throws EmptyReferenceError when the reference normalizes to nothing;
/// such files are unscorable and belong to the no-speech/short filters.
inline ScoreRecord wer(std::string_view ref_text, std::string_view hyp_text,
                       const NormalizerConfig& cfg, std::string utterance_id = {}) {
  auto ref = tokenize(normalize(ref_text, cfg));
  if (ref.empty())
    throw EmptyReferenceError("reference normalizes to zero tokens" +
                              (utterance_id.empty() ? std::string()
                                                    : " (" + utterance_id + ")"));
  auto hyp = tokenize(normalize(hyp_text, cfg));
  Alignment a = align(ref, hyp);
  return ScoreRecord{std::move(utterance_id), a.substitutions, a.deletions,
                     a.insertions, static_cast<int>(ref.size())};
}

/// Micro-averaged corpus WER: total edits over total reference words.
inline WerFraction aggregate(std::span<const ScoreRecord> scores) {
  if (scores.empty()) throw Error("aggregate: empty score list");
  WerFraction f;
  for (const auto& s : scores) {
    f.edits += s.edits();
    f.ref_len += s.ref_len;
  }
  return f;
}

/// Unweighted mean of per-file WERs, for comparison with micro.
inline double aggregate_macro(std::span<const ScoreRecord> scores) {
  if (scores.empty()) throw Error("aggregate: empty score list");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.wer();
  return sum / static_cast<double>(scores.size());
}

}  // namespace corpus_forge
