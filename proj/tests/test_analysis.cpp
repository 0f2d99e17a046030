// Report rendering and the filler-retention metric.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>
#include <tuple>

#include "corpus_forge/analysis.hpp"
#include "support/test_util.hpp"

using namespace corpus_forge;

namespace {

Manifest manifest_with(std::vector<std::tuple<std::string, Split, double>> items) {
  Manifest m;
  for (auto& [id, split, dur] : items) {
    UtteranceRecord r;
    r.id = id;
    r.session_id = "s";
    r.split = split;
    r.audio_path = "a.wav";
    r.duration_s = dur;
    r.raw_transcript = "x y z";
    m.records.push_back(std::move(r));
  }
  m.finalize();
  return m;
}

}  // namespace

TEST_CASE("dataset accounting", "[analysis]") {
  Manifest myst = manifest_with({{"a", Split::train, 3600.0},
                                 {"b", Split::train, 1800.0},
                                 {"c", Split::test, 360.0}});
  Manifest other = manifest_with({{"d", Split::dev, 7200.0}});
  std::vector<std::pair<std::string, const Manifest*>> corpora = {
      {"myst", &myst}, {"other", &other}};
  auto rows = dataset_accounting(corpora);
  REQUIRE(rows.size() == 6);  // three splits per corpus, zeros included
  CHECK(rows[0].corpus == "myst");
  CHECK(rows[0].split == Split::train);
  CHECK(rows[0].hours == Catch::Approx(1.5));
  CHECK(rows[1].hours == Catch::Approx(0.0));  // dev row present at zero
  CHECK(rows[2].hours == Catch::Approx(0.1));
  CHECK(rows[3].corpus == "other");
  CHECK(rows[3].hours == Catch::Approx(0.0));
  CHECK(rows[4].hours == Catch::Approx(2.0));

  auto text = render_accounting(rows);
  CHECK(text.find("corpus") != std::string::npos);
  CHECK(text.find("1.5") != std::string::npos);
  CHECK(text.find("0.0") != std::string::npos);
}

TEST_CASE("cascade rendering shapes cells as WER (hours)", "[analysis]") {
  std::vector<CascadeRow> rows;
  CascadeRow r;
  r.stage_label = "too_short";
  r.split = Split::train;
  r.hours = 132.5;
  r.wer = WerFraction{192, 1000};  // 19.2%
  rows.push_back(r);
  auto text = render_cascade(rows);
  CHECK(text.find("19.2 (132.5)") != std::string::npos);
  CHECK(text.find("train") != std::string::npos);
  CHECK(text.find("too_short") != std::string::npos);

  CHECK(render_cascade(std::vector<CascadeRow>{}).empty());

  // unscorable cells render a dash, not a number
  CascadeRow empty_wer;
  empty_wer.stage_label = "none";
  empty_wer.split = Split::dev;
  empty_wer.hours = 0.25;
  auto dash = render_cascade(std::vector<CascadeRow>{empty_wer});
  CHECK(dash.find("- (0.2)") != std::string::npos);
}

TEST_CASE("cascade jsonl round trip", "[analysis]") {
  test_util::TempDir tmp("cascadejsonl");
  std::vector<CascadeRow> rows;
  CascadeRow a;
  a.stage_label = "none";
  a.split = Split::train;
  a.hours = 1.25;
  a.wer = WerFraction{1, 3};
  CascadeRow b;
  b.stage_label = "high_wer";
  b.split = Split::test;
  b.hours = 0.5;
  rows = {a, b};
  auto text = cascade_jsonl(rows);
  CHECK(text.find("\"stage\":\"none\"") != std::string::npos);
  CHECK(text.find("\"wer_percent\":33.33") != std::string::npos);
  CHECK(text.find("\"wer_percent\":null") != std::string::npos);

  auto path = tmp / "rows.jsonl";
  test_util::write_text(path, text);
  auto back = read_cascade_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].stage_label == "none");
  CHECK(back[0].hours == Catch::Approx(1.25));
  REQUIRE(back[0].wer.has_value());
  CHECK(back[0].wer->percent() == Catch::Approx(33.33));
  CHECK_FALSE(back[1].wer.has_value());
}

TEST_CASE("alignment report", "[analysis]") {
  auto cfg = NormalizerConfig::defaults();
  cfg.remove_fillers = false;

  auto same = alignment_report("the cat", "the cat", cfg);
  CHECK(same == "ref: the cat\n"
                "ops: =   =\n"
                "hyp: the cat\n");

  auto misheard = alignment_report(
      "No, I don't hear anything when the candle burns",
      "No, I don't hearing even a candle burns", cfg);
  std::istringstream lines(misheard);
  std::string ref_line, ops_line, hyp_line;
  std::getline(lines, ref_line);
  std::getline(lines, ops_line);
  std::getline(lines, hyp_line);
  // marker sequence over the reference positions (note: don't expands,
  // so the reference is 10 tokens here)
  std::string compact;
  for (char c : ops_line)
    if (c == '=' || c == 'S' || c == 'D' || c == 'I') compact += c;
  CHECK(compact == "====SSSD==");
  CHECK(ref_line.find("candle") != std::string::npos);
  CHECK(hyp_line.find("*") != std::string::npos);  // deletion hole

  auto empty_hyp = alignment_report("three word line", "", cfg);
  std::istringstream l2(empty_hyp);
  std::getline(l2, ref_line);
  std::getline(l2, ops_line);
  std::getline(l2, hyp_line);
  compact.clear();
  for (char c : ops_line)
    if (c == '=' || c == 'S' || c == 'D' || c == 'I') compact += c;
  CHECK(compact == "DDD");
  CHECK(std::count(hyp_line.begin(), hyp_line.end(), '*') == 3);
}

TEST_CASE("alignment report marker counts equal alignment counts", "[analysis]") {
  auto cfg = NormalizerConfig::defaults();
  auto ref = tokenize(normalize("one fish two fish red fish blue fish", cfg));
  auto hyp = tokenize(normalize("one fish too fish fish blue fish extra", cfg));
  Alignment a = align(ref, hyp);
  auto text = alignment_report("one fish two fish red fish blue fish",
                               "one fish too fish fish blue fish extra", cfg);
  std::istringstream lines(text);
  std::string ref_line, ops_line;
  std::getline(lines, ref_line);
  std::getline(lines, ops_line);
  int s = 0, d = 0, i = 0, m = 0;
  for (std::size_t k = 4; k < ops_line.size(); ++k) {
    switch (ops_line[k]) {
      case 'S': ++s; break;
      case 'D': ++d; break;
      case 'I': ++i; break;
      case '=': ++m; break;
      default: break;
    }
  }
  CHECK(s == a.substitutions);
  CHECK(d == a.deletions);
  CHECK(i == a.insertions);
  CHECK(m == a.matches);
}

TEST_CASE("filler retention", "[analysis]") {
  auto cfg = NormalizerConfig::defaults();
  cfg.remove_fillers = false;

  std::vector<std::pair<std::string, std::string>> pairs = {
      {"um yes um", "um yes"}};
  auto fr = filler_retention(pairs, cfg);
  CHECK(fr.ref_filler_count == 2);
  CHECK(fr.matched_filler_count == 1);
  REQUIRE(fr.retention().has_value());
  CHECK(*fr.retention() == Catch::Approx(0.5));

  std::vector<std::pair<std::string, std::string>> kept = {
      {"um the uh thing", "um the uh thing"}};
  CHECK(*filler_retention(kept, cfg).retention() == Catch::Approx(1.0));

  std::vector<std::pair<std::string, std::string>> none = {
      {"no fillers here", "no fillers here"}};
  CHECK_FALSE(filler_retention(none, cfg).retention().has_value());

  // um -> uhm counts for the family metric, not the strict one
  std::vector<std::pair<std::string, std::string>> respelled = {
      {"um yes", "uhm yes"}};
  auto fam = filler_retention(respelled, cfg);
  CHECK(fam.matched_filler_count == 0);
  CHECK(fam.family_matched_count == 1);
  CHECK(*fam.family_retention() == Catch::Approx(1.0));

  // appending filler-free pairs changes nothing
  auto before = filler_retention(pairs, cfg);
  auto extended = pairs;
  extended.insert(extended.end(), none.begin(), none.end());
  auto after = filler_retention(extended, cfg);
  CHECK(before.ref_filler_count == after.ref_filler_count);
  CHECK(before.matched_filler_count == after.matched_filler_count);

  auto strict = NormalizerConfig::defaults();
  CHECK_THROWS_AS(filler_retention(pairs, strict), Error);
}
