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

// Deterministic English transcript normalization. References and
// hypotheses are pushed through the same pipeline so that word error
// rate only penalizes genuine mistranscription, never casing,
// punctuation or digit-vs-word differences.
//
// Pipeline, in order:
//   1. lowercase (ASCII; curly apostrophes mapped to ');
//   2. delete content enclosed in matched [...] or (...) pairs;
//   3. exact-match contraction expansion per token, with generic
//      suffix fallbacks (n't, 've, 'll, 're, 'm);
//   4. strip punctuation, keeping apostrophes surrounded by letters;
//   5. spell out standalone digit tokens in [0, number_max];
//   6. drop filler tokens (when remove_fillers is on);
//   7. collapse whitespace.
//
// The result is a fixed point: normalize(normalize(s)) == normalize(s).

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpus_forge/errors.hpp"

namespace corpus_forge {

struct NormalizerConfig {
  // token -> expansion (multi-word allowed); keys never appear in
  // expansions, which is what makes the pass idempotent.
  std::map<std::string, std::string> contraction_table;
  // Suffix fallbacks applied when no exact table entry matches, in
  // order. {"n't", "not"} turns "isn't" into "is not". 'd and
  // possessive 's stay intact on purpose: 'd is ambiguous (had/would)
  // and expanding it would corrupt references.
  std::vector<std::pair<std::string, std::string>> suffix_rules;
  std::set<std::string> filler_set;
  bool spell_numbers = true;
  std::int64_t number_max = 999999;
  bool remove_fillers = true;

  static NormalizerConfig defaults();
  static NormalizerConfig load(const std::filesystem::path& path);
  void validate() const;  // throws ConfigError
};

struct NormalizeOutcome {
  std::string text;
  // True when a digit survived normalization (digit token out of the
  // spellable range, or a mixed token like "3rd").
  bool number_passthrough = false;
};

// Largest value the hundred/thousand grammar can express. number_max
// values above this are effectively clamped here.
inline constexpr std::int64_t kSpellGrammarMax = 999999;

/// Splits on whitespace; never yields empty tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

namespace detail {

inline bool is_ascii_letter(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_word_char(char c) {
  return is_ascii_letter(c) || is_ascii_digit(c) || c == '\'';
}

// U+2018/U+2019 show up in transcripts exported from word processors;
// fold them onto the ASCII apostrophe before any matching happens.
inline std::string fold_apostrophes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(s[i + 2]) == 0x98 ||
         static_cast<unsigned char>(s[i + 2]) == 0x99)) {
      out.push_back('\'');
      i += 3;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

inline void ascii_lower_inplace(std::string& s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
}

// Deletes well-formed (...) and [...] spans, brackets included; nesting
// handled, unmatched brackets left for the punctuation pass.
inline std::string strip_bracketed(const std::string& s) {
  std::vector<char> drop(s.size(), 0);
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '[') {
      open.push_back(i);
    } else if (c == ')' || c == ']') {
      char want = (c == ')') ? '(' : '[';
      if (!open.empty() && s[open.back()] == want) {
        std::fill(drop.begin() + static_cast<std::ptrdiff_t>(open.back()),
                  drop.begin() + static_cast<std::ptrdiff_t>(i) + 1, 1);
        open.pop_back();
      }
    }
  }
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!drop[i]) out.push_back(s[i]);
  return out;
}

inline std::optional<std::string> spell_below_million(std::int64_t n);

// Expands one core token into its final word list. A suffix expansion
// can expose a new table key ("can't've" -> "can't" "have"), hence the
// recursion; the depth guard only matters for pathological configs.
inline void expand_word(const std::string& word, const NormalizerConfig& cfg,
                        int depth, std::vector<std::string>& out) {
  if (depth > 8) {
    out.push_back(word);
    return;
  }
  auto it = cfg.contraction_table.find(word);
  if (it != cfg.contraction_table.end()) {
    for (const auto& w : tokenize(it->second)) expand_word(w, cfg, depth + 1, out);
    return;
  }
  for (const auto& [suffix, replacement] : cfg.suffix_rules) {
    if (word.size() > suffix.size() &&
        word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0 &&
        is_ascii_letter(word[word.size() - suffix.size() - 1])) {
      expand_word(word.substr(0, word.size() - suffix.size()), cfg, depth + 1, out);
      out.push_back(replacement);
      return;
    }
  }
  out.push_back(word);
}

// Token-wise contraction pass. Lookup happens on the token core (edge
// punctuation trimmed) so "it's," expands just like "it's"; the edges
// die in the punctuation pass right after.
inline std::string expand_contractions(const std::string& s,
                                       const NormalizerConfig& cfg) {
  std::string out;
  out.reserve(s.size() + 16);
  for (const auto& tok : tokenize(s)) {
    std::size_t b = 0, e = tok.size();
    while (b < e && !is_word_char(tok[b])) ++b;
    while (e > b && !is_word_char(tok[e - 1])) --e;
    if (!out.empty()) out.push_back(' ');
    if (b == e) {
      out.append(tok);
      continue;
    }
    std::vector<std::string> words;
    expand_word(tok.substr(b, e - b), cfg, 0, words);
    out.append(tok, 0, b);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out.push_back(' ');
      out.append(words[i]);
    }
    out.append(tok, e, tok.size() - e);
  }
  return out;
}

// Keeps [a-z0-9] and letter-surrounded apostrophes; everything else
// becomes a space so punctuation never glues two words together.
inline std::string strip_punctuation(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (is_ascii_letter(c) || is_ascii_digit(c)) {
      out.push_back(c);
    } else if (c == '\'' && i > 0 && i + 1 < s.size() &&
               is_ascii_letter(s[i - 1]) && is_ascii_letter(s[i + 1])) {
      out.push_back(c);
    } else {
      out.push_back(' ');
    }
  }
  return out;
}

inline std::optional<std::int64_t> parse_digits(const std::string& tok) {
  std::int64_t v = 0;
  for (char c : tok) {
    if (!is_ascii_digit(c)) return std::nullopt;
    if (v > kSpellGrammarMax) continue;  // saturate; exact value no longer matters
    v = v * 10 + (c - '0');
  }
  return tok.empty() ? std::nullopt : std::optional<std::int64_t>(v);
}

inline void spell_hundreds(std::int64_t n, std::vector<std::string>& out) {
  static const char* kUnits[] = {
      "zero",    "one",     "two",       "three",    "four",
      "five",    "six",     "seven",     "eight",    "nine",
      "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
      "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
  static const char* kTens[] = {"",      "",      "twenty",  "thirty", "forty",
                                "fifty", "sixty", "seventy", "eighty", "ninety"};
  std::int64_t h = n / 100, r = n % 100;
  if (h > 0) {
    out.emplace_back(kUnits[h]);
    out.emplace_back("hundred");
  }
  if (r >= 20) {
    out.emplace_back(kTens[r / 10]);
    if (r % 10) out.emplace_back(kUnits[r % 10]);
  } else if (r > 0) {
    out.emplace_back(kUnits[r]);
  }
}

inline std::optional<std::string> spell_below_million(std::int64_t n) {
  if (n < 0 || n > kSpellGrammarMax) return std::nullopt;
  if (n == 0) return std::string("zero");
  std::vector<std::string> words;
  std::int64_t thousands = n / 1000, rest = n % 1000;
  if (thousands > 0) {
    spell_hundreds(thousands, words);
    words.emplace_back("thousand");
  }
  if (rest > 0) spell_hundreds(rest, words);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace detail

/// English words for n, lowercase, space-separated, no hyphen and no
/// "and": 24 -> "twenty four", 319 -> "three hundred nineteen".
/// Throws std::out_of_range outside [0, min(number_max, 999999)].
inline std::string spell_number(std::int64_t n,
                                std::int64_t number_max = kSpellGrammarMax) {
  if (n < 0 || n > number_max) throw std::out_of_range("spell_number: out of range");
  auto s = detail::spell_below_million(n);
  if (!s) throw std::out_of_range("spell_number: out of range");
  return *s;
}

/// Full normalization pass; also reports whether digits survived.
inline NormalizeOutcome normalize_ex(std::string_view text,
                                     const NormalizerConfig& cfg) {
  std::string s = detail::fold_apostrophes(text);
  detail::ascii_lower_inplace(s);
  s = detail::strip_bracketed(s);
  s = detail::expand_contractions(s, cfg);
  s = detail::strip_punctuation(s);

  NormalizeOutcome outcome;
  std::vector<std::string> kept;
  for (auto& tok : tokenize(s)) {
    bool has_digit = std::any_of(tok.begin(), tok.end(), detail::is_ascii_digit);
    if (has_digit) {
      auto value = detail::parse_digits(tok);
      if (cfg.spell_numbers && value && *value <= cfg.number_max) {
        if (auto spelled = detail::spell_below_million(*value)) {
          for (auto& w : tokenize(*spelled)) kept.push_back(std::move(w));
          continue;
        }
      }
      outcome.number_passthrough = true;
      kept.push_back(std::move(tok));
      continue;
    }
    if (cfg.remove_fillers && cfg.filler_set.count(tok)) continue;
    kept.push_back(std::move(tok));
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) outcome.text.push_back(' ');
    outcome.text += kept[i];
  }
  return outcome;
}

inline std::string normalize(std::string_view text, const NormalizerConfig& cfg) {
  return normalize_ex(text, cfg).text;
}

inline NormalizerConfig NormalizerConfig::defaults() {
  NormalizerConfig cfg;
  cfg.contraction_table = {
      {"you're", "you are"},   {"they're", "they are"}, {"we're", "we are"},
      {"i'm", "i am"},         {"it's", "it is"},       {"that's", "that is"},
      {"let's", "let us"},     {"can't", "cannot"},     {"won't", "will not"},
  };
  cfg.suffix_rules = {
      {"n't", "not"}, {"'ve", "have"}, {"'ll", "will"}, {"'re", "are"}, {"'m", "am"},
  };
  cfg.filler_set = {"uh", "um", "uhm", "hmm", "mm", "mhm", "mmm"};
  return cfg;
}

inline void NormalizerConfig::validate() const {
  if (number_max < 1) throw ConfigError("number_max must be positive");
  for (const auto& f : filler_set) {
    if (f.empty()) throw ConfigError("empty filler token");
    for (char c : f)
      if (!detail::is_ascii_letter(c))
        throw ConfigError("filler tokens must be lowercase letters: \"" + f + "\"");
  }
  auto is_terminal = [this](const std::string& w) {
    if (contraction_table.count(w)) return false;
    for (const auto& [suffix, replacement] : suffix_rules) {
      (void)replacement;
      if (w.size() > suffix.size() &&
          w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0 &&
          detail::is_ascii_letter(w[w.size() - suffix.size() - 1]))
        return false;
    }
    return true;
  };
  for (const auto& [key, expansion] : contraction_table) {
    if (key.empty()) throw ConfigError("empty contraction key");
    for (char c : key)
      if (c >= 'A' && c <= 'Z')
        throw ConfigError("contraction keys must be lowercase: \"" + key + "\"");
    auto words = tokenize(expansion);
    if (words.empty())
      throw ConfigError("empty expansion for contraction \"" + key + "\"");
    for (const auto& w : words)
      if (!is_terminal(w))
        throw ConfigError("expansion of \"" + key + "\" contains expandable token \"" +
                          w + "\"; the table would not be idempotent");
  }
}

// Config file: `key = value` lines plus a [contractions] section with
// one token = expansion pair per line. '#' starts a comment. Contraction
// entries extend (and may override) the defaults; a `fillers` line
// replaces the default filler set.
inline NormalizerConfig NormalizerConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  NormalizerConfig cfg = defaults();
  std::string line, section;
  std::size_t line_no = 0;
  auto trim = [](std::string v) {
    std::size_t b = v.find_first_not_of(" \t\r");
    std::size_t e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      if (section != "contractions" && section != "suffixes")
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (section == "contractions") {
      cfg.contraction_table[key] = value;
    } else if (section == "suffixes") {
      auto it = std::find_if(cfg.suffix_rules.begin(), cfg.suffix_rules.end(),
                             [&](const auto& p) { return p.first == key; });
      if (it != cfg.suffix_rules.end())
        it->second = value;
      else
        cfg.suffix_rules.emplace_back(key, value);
    } else if (key == "spell_numbers" || key == "remove_fillers") {
      bool on;
      if (value == "true")
        on = true;
      else if (value == "false")
        on = false;
      else
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": expected true or false for " + key);
      (key == "spell_numbers" ? cfg.spell_numbers : cfg.remove_fillers) = on;
    } else if (key == "number_max") {
      try {
        cfg.number_max = std::stoll(value);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": number_max must be an integer");
      }
    } else if (key == "fillers") {
      cfg.filler_set.clear();
      for (const auto& f : tokenize(value)) cfg.filler_set.insert(f);
    } else {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": unknown key \"" + key + "\"");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace corpus_forge
