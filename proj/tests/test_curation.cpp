// Cascade filtering, packing, split assignment, speaker hygiene.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "corpus_forge/curation.hpp"
#include "support/test_util.hpp"

using namespace corpus_forge;
using test_util::TempDir;

namespace {

UtteranceRecord make_record(std::string id, std::string session, Split split,
                            double duration, std::string raw,
                            std::optional<std::string> speaker = std::nullopt) {
  UtteranceRecord r;
  r.id = std::move(id);
  r.session_id = std::move(session);
  r.speaker_id = std::move(speaker);
  r.split = split;
  r.audio_path = "audio/" + r.id + ".wav";
  r.duration_s = duration;
  r.raw_transcript = std::move(raw);
  return r;
}

Manifest manifest_of(std::vector<UtteranceRecord> records) {
  Manifest m;
  m.records = std::move(records);
  m.finalize();
  return m;
}

const CascadeRow& row_at(const CascadeResult& r, const std::string& stage,
                         Split split) {
  for (const auto& row : r.rows)
    if (row.stage_label == stage && row.split == split) return row;
  FAIL("no row for stage " + stage);
  static CascadeRow dummy;
  return dummy;
}

const FilterDecision& decision_of(const CascadeResult& r, const std::string& id) {
  for (const auto& d : r.decisions)
    if (d.utterance_id == id) return d;
  FAIL("no decision for " + id);
  static FilterDecision dummy;
  return dummy;
}

}  // namespace

TEST_CASE("embedded sha256 matches FIPS vectors", "[curation]") {
  CHECK(detail::Sha256::hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(detail::Sha256::hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(detail::Sha256::hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  // one block-boundary case: 64 'a' bytes
  CHECK(detail::Sha256::hex(std::string(64, 'a')) ==
        "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb");
}

TEST_CASE("cascade removes by stage with strict boundaries", "[curation]") {
  // exact WER boundary: 50/100 stays, 51/100 goes
  std::string ref_words, hyp_at, hyp_above;
  for (int i = 0; i < 100; ++i) {
    std::string w = "w" + std::to_string(i);
    ref_words += (i ? " " : "") + w;
    hyp_at += (i ? " " : "") + (i < 50 ? "x" + std::to_string(i) : w);
    hyp_above += (i ? " " : "") + (i < 51 ? "x" + std::to_string(i) : w);
  }
  auto m = manifest_of({
      make_record("u_silence", "s1", Split::train, 4.0, "<SILENCE>"),
      make_record("u_discard", "s1", Split::train, 4.0, " <DISCARD> "),
      make_record("u_lower", "s1", Split::train, 4.0, "<silence>"),
      make_record("u_at", "s1", Split::train, 5.0, ref_words),
      make_record("u_above", "s1", Split::train, 5.0, ref_words),
      make_record("u_two", "s1", Split::train, 3.0, "the end"),
      make_record("u_three", "s1", Split::train, 3.0, "just three words"),
      make_record("u_long_train", "s1", Split::train, 31.0, "too long for the train split"),
      make_record("u_long_test", "s2", Split::test, 31.0, "long but the test split keeps it"),
      make_record("u_exact_30", "s1", Split::train, 30.0, "exactly thirty seconds stays put"),
  });
  std::map<std::string, std::string> hyps;
  for (const auto& r : m.records) hyps[r.id] = r.raw_transcript;
  hyps["u_at"] = hyp_at;
  hyps["u_above"] = hyp_above;
  hyps["u_lower"] = "silence";

  CascadeResult res = run_cascade(m, hyps, FilterPolicy{});

  CHECK(decision_of(res, "u_silence").reason == FilterReason::no_speech_label);
  CHECK(decision_of(res, "u_silence").stage == kStageNoSpeech);
  CHECK(decision_of(res, "u_discard").reason == FilterReason::no_speech_label);
  // labels are exact, case-sensitive strings: "<silence>" is not one, so
  // the record survives stage 0 and falls to the word-count stage
  CHECK(decision_of(res, "u_lower").reason == FilterReason::too_short);
  CHECK(decision_of(res, "u_at").keep);  // exactly 0.50 stays
  CHECK(decision_of(res, "u_above").reason == FilterReason::high_wer);
  CHECK(decision_of(res, "u_above").stage == kStageHighWer);
  CHECK(decision_of(res, "u_two").reason == FilterReason::too_short);
  CHECK(decision_of(res, "u_two").stage == kStageTooShort);
  CHECK(decision_of(res, "u_three").keep);  // exactly 3 words stays
  CHECK(decision_of(res, "u_long_train").reason == FilterReason::too_long);
  CHECK(decision_of(res, "u_long_train").stage == kStageTooLong);
  CHECK(decision_of(res, "u_long_test").keep);
  CHECK(decision_of(res, "u_exact_30").keep);

  for (const auto& d : res.decisions)
    CHECK((d.reason == FilterReason::kept) == d.keep);
  CHECK(res.decisions.size() == m.records.size());

  // rejected records carry the matching flag
  for (const auto& r : res.rejected.records) CHECK(r.flags.size() == 1);
}

TEST_CASE("cascade fixture reproduces the hand-computed table", "[curation]") {
  Manifest m = read_manifest(std::string(TEST_DATA_DIR) + "/cascade/manifest.jsonl");
  auto hyps = read_hypotheses(std::string(TEST_DATA_DIR) + "/cascade/hyps.jsonl");
  REQUIRE(m.records.size() == 12);
  CascadeResult res = run_cascade(m, hyps, FilterPolicy{});

  struct Expect {
    const char* stage;
    Split split;
    double seconds;
    long long edits, ref_len;  // ref_len 0 => no scorable records
  };
  // Hand computation: train = {t01 10s, t02 20s 0/6, t03 30s 1/3,
  // t04 15s 4/4, t05 8s 0/2, t06 31s 0/7, t08 25s 1/5},
  // dev = {d01 5s, d03 6s 0/1, d04 22s 2/4}, test = {x01 31s 0/8, x02 14s 1/6}.
  const Expect expected[] = {
      {"none", Split::train, 139.0, 6, 27},
      {"none", Split::dev, 33.0, 2, 5},
      {"none", Split::test, 45.0, 1, 14},
      {"no_speech_label", Split::train, 129.0, 6, 27},
      {"no_speech_label", Split::dev, 28.0, 2, 5},
      {"no_speech_label", Split::test, 45.0, 1, 14},
      {"high_wer", Split::train, 114.0, 2, 23},
      {"high_wer", Split::dev, 28.0, 2, 5},
      {"high_wer", Split::test, 45.0, 1, 14},
      {"too_short", Split::train, 106.0, 2, 21},
      {"too_short", Split::dev, 22.0, 2, 4},
      {"too_short", Split::test, 45.0, 1, 14},
      {"too_long", Split::train, 75.0, 2, 14},
      {"too_long", Split::dev, 22.0, 2, 4},
      {"too_long", Split::test, 45.0, 1, 14},
  };
  REQUIRE(res.rows.size() == std::size(expected));
  for (std::size_t i = 0; i < std::size(expected); ++i) {
    const auto& row = res.rows[i];
    const auto& want = expected[i];
    INFO("row " << i << " stage " << want.stage << " split "
                << to_string(want.split));
    CHECK(row.stage_label == want.stage);
    CHECK(row.split == want.split);
    CHECK(std::abs(row.hours - want.seconds / 3600.0) < 1e-6);
    REQUIRE(row.wer.has_value());
    CHECK(row.wer->edits == want.edits);
    CHECK(row.wer->ref_len == want.ref_len);
  }

  std::vector<std::string> kept;
  for (const auto& r : res.filtered.records) kept.push_back(r.id);
  CHECK(kept == std::vector<std::string>{"d04", "t02", "t03", "t08", "x01", "x02"});

  // hours are monotone per split across stages
  for (Split s : {Split::train, Split::dev, Split::test}) {
    double last = 1e9;
    for (const auto& row : res.rows) {
      if (row.split != s) continue;
      CHECK(row.hours <= last + 1e-12);
      last = row.hours;
    }
  }

  // the cascade is a fixed point on its own output
  CascadeResult again = run_cascade(res.filtered, hyps, FilterPolicy{});
  CHECK(again.filtered.records.size() == res.filtered.records.size());
  CHECK(again.rejected.records.empty());
}

TEST_CASE("cascade error and edge contracts", "[curation]") {
  auto m = manifest_of({
      make_record("a", "s", Split::train, 1.0, "some words here"),
      make_record("b", "s", Split::train, 1.0, "other words here"),
  });
  std::map<std::string, std::string> only_a = {{"a", "some words here"}};
  try {
    run_cascade(m, only_a, FilterPolicy{});
    FAIL("expected missing-hypothesis error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(": b") != std::string::npos);
  }

  CascadeResult empty = run_cascade(Manifest{}, {}, FilterPolicy{});
  CHECK(empty.filtered.records.empty());
  CHECK(empty.decisions.empty());
  CHECK(empty.rows.empty());

  // a no-speech record needs no hypothesis
  auto m2 = manifest_of({
      make_record("ns", "s", Split::train, 1.0, "<SILENCE>"),
      make_record("ok", "s", Split::train, 1.0, "three words here"),
  });
  std::map<std::string, std::string> hyps2 = {{"ok", "three words here"}};
  CascadeResult r2 = run_cascade(m2, hyps2, FilterPolicy{});
  CHECK(r2.filtered.records.size() == 1);

  // unscorable records fall through the WER stage to the word filter
  auto m3 = manifest_of({
      make_record("filler_only", "s", Split::train, 1.0, "um uh"),
      make_record("long_filler", "s", Split::train, 1.0, "um uh um hmm"),
  });
  std::map<std::string, std::string> hyps3 = {{"filler_only", "x"},
                                              {"long_filler", "y"}};
  CascadeResult r3 = run_cascade(m3, hyps3, FilterPolicy{});
  CHECK(decision_of(r3, "filler_only").reason == FilterReason::too_short);
  // 4 raw words, unscorable, nothing else removes it
  CHECK(decision_of(r3, "long_filler").keep);
}

TEST_CASE("packing follows the greedy rule", "[curation]") {
  auto session = [&](std::vector<double> durations) {
    std::vector<UtteranceRecord> recs;
    for (std::size_t i = 0; i < durations.size(); ++i) {
      auto r = make_record("s1/u" + std::to_string(i), "s1", Split::train,
                           durations[i], "words for " + std::to_string(i));
      r.normalized_transcript = "words for " + std::to_string(i);
      recs.push_back(r);
    }
    return manifest_of(std::move(recs));
  };

  auto c1 = pack_sessions(session({8, 8, 8, 8, 8}), 30.0);
  REQUIRE(c1.size() == 2);
  CHECK(c1[0].member_ids == std::vector<std::string>{"s1/u0", "s1/u1", "s1/u2"});
  CHECK(c1[0].total_duration_s == Catch::Approx(24.0));
  CHECK(c1[1].member_ids == std::vector<std::string>{"s1/u3", "s1/u4"});
  CHECK(c1[1].total_duration_s == Catch::Approx(16.0));
  CHECK(c1[0].chunk_id == "s1-0000");
  CHECK(c1[1].chunk_id == "s1-0001");
  CHECK(c1[0].combined_transcript == "words for 0 words for 1 words for 2");

  auto c2 = pack_sessions(session({10, 25, 4}), 30.0);
  REQUIRE(c2.size() == 2);
  CHECK(c2[0].member_ids == std::vector<std::string>{"s1/u0"});
  CHECK(c2[1].member_ids == std::vector<std::string>{"s1/u1", "s1/u2"});
  CHECK(c2[1].total_duration_s == Catch::Approx(29.0));

  CHECK(pack_sessions(session({}), 30.0).empty());

  auto c3 = pack_sessions(session({31}), 30.0);
  REQUIRE(c3.size() == 1);
  CHECK(c3[0].overlong_singleton);
  CHECK(c3[0].member_ids == std::vector<std::string>{"s1/u0"});

  // an overlong member in the middle closes the open chunk
  auto c4 = pack_sessions(session({5, 40, 5}), 30.0);
  REQUIRE(c4.size() == 3);
  CHECK_FALSE(c4[0].overlong_singleton);
  CHECK(c4[1].overlong_singleton);
  CHECK(c4[2].member_ids == std::vector<std::string>{"s1/u2"});
}

TEST_CASE("packing never crosses sessions or splits", "[curation]") {
  std::vector<UtteranceRecord> recs;
  auto add = [&](std::string id, std::string session, Split split, double d) {
    auto r = make_record(std::move(id), std::move(session), split, d, "w x y");
    recs.push_back(r);
  };
  add("a/u0", "a", Split::train, 5);
  add("a/u1", "a", Split::train, 5);
  add("a/u2", "a", Split::dev, 5);  // same session, other split
  add("b/u0", "b", Split::train, 5);
  auto chunks = pack_sessions(manifest_of(std::move(recs)), 30.0);
  REQUIRE(chunks.size() == 3);
  for (const auto& c : chunks) {
    for (const auto& id : c.member_ids) {
      CHECK(id.substr(0, 1) == c.session_id);
    }
  }
  // chunk ids stay unique across the session's split groups
  std::set<std::string> ids;
  for (const auto& c : chunks) CHECK(ids.insert(c.chunk_id).second);
}

TEST_CASE("packing properties on random sessions", "[curation]") {
  std::mt19937 rng(8086);
  std::uniform_int_distribution<int> members(0, 12);
  std::uniform_real_distribution<double> dur(0.5, 35.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<UtteranceRecord> recs;
    int n = members(rng);
    std::vector<std::string> order;
    for (int i = 0; i < n; ++i) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "u%03d", i);
      auto r = make_record("s/" + std::string(buf), "s", Split::train,
                           std::floor(dur(rng) * 100.0) / 100.0, "a b c");
      order.push_back(r.id);
      recs.push_back(r);
    }
    auto chunks = pack_sessions(manifest_of(std::move(recs)), 30.0);
    std::vector<std::string> flattened;
    for (const auto& c : chunks) {
      for (const auto& id : c.member_ids) flattened.push_back(id);
      if (!c.overlong_singleton) CHECK(c.total_duration_s <= 30.0);
      if (c.overlong_singleton) CHECK(c.member_ids.size() == 1);
      CHECK_FALSE(c.member_ids.empty());
    }
    CHECK(flattened == order);  // partition, in order
  }
}

TEST_CASE("assign_splits counts and determinism", "[curation]") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("id" + std::to_string(i));
  SplitRatios r{0.8, 0.1, 0.1};
  auto a1 = assign_splits(ids, r, "seed");
  auto a2 = assign_splits(ids, r, "seed");
  CHECK(a1.assignment == a2.assignment);
  int counts[3] = {0, 0, 0};
  for (const auto& [id, s] : a1.assignment) ++counts[static_cast<int>(s)];
  CHECK(counts[0] == 8);
  CHECK(counts[1] == 1);
  CHECK(counts[2] == 1);

  // order independence
  std::vector<std::string> shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(assign_splits(shuffled, r, "seed").assignment == a1.assignment);

  // a different seed moves things around
  bool any_difference = false;
  for (int s = 0; s < 50 && !any_difference; ++s) {
    auto b = assign_splits(ids, r, "seed" + std::to_string(s));
    any_difference = b.assignment != a1.assignment;
  }
  CHECK(any_difference);

  std::vector<std::string> one = {"solo"};
  auto single = assign_splits(one, r, "s");
  CHECK(single.assignment.at("solo") == Split::train);

  CHECK_THROWS_AS(assign_splits(ids, SplitRatios{0.5, 0.2, 0.2}, "s"), Error);
  std::vector<std::string> dup = {"a", "a"};
  CHECK_THROWS_AS(assign_splits(dup, r, "s"), DuplicateIdError);
}

TEST_CASE("speaker disjointness", "[curation]") {
  auto ok = manifest_of({
      make_record("a", "s1", Split::train, 1, "x", "spk1"),
      make_record("b", "s1", Split::train, 1, "x", "spk1"),
      make_record("c", "s2", Split::test, 1, "x", "spk2"),
  });
  auto rep = validate_speaker_disjoint(ok);
  CHECK(rep.ok());
  CHECK(rep.unverifiable_ids.empty());

  auto overlap = manifest_of({
      make_record("a", "s1", Split::train, 1, "x", "spk1"),
      make_record("b", "s2", Split::test, 1, "x", "spk1"),
      make_record("c", "s3", Split::dev, 1, "x", "spk2"),
  });
  auto rep2 = validate_speaker_disjoint(overlap);
  REQUIRE(rep2.violations.size() == 1);
  CHECK(rep2.violations[0].speaker_id == "spk1");
  CHECK(rep2.violations[0].splits == std::set<Split>{Split::train, Split::test});

  auto anonymous = manifest_of({
      make_record("a", "s1", Split::train, 1, "x"),
      make_record("b", "s2", Split::test, 1, "x"),
  });
  auto rep3 = validate_speaker_disjoint(anonymous);
  CHECK(rep3.ok());
  CHECK(rep3.unverifiable_ids.size() == 2);

  // unassigned records do not create overlap
  auto mixed = manifest_of({
      make_record("a", "s1", Split::train, 1, "x", "spk1"),
      make_record("b", "s2", Split::unassigned, 1, "x", "spk1"),
  });
  CHECK(validate_speaker_disjoint(mixed).ok());
}

TEST_CASE("export_training_manifest", "[curation]") {
  TempDir tmp("export");
  auto wav0 = tmp / "s1-0000.wav";
  auto wav1 = tmp / "s1-0001.wav";
  test_util::write_wav(wav0, 8000, 800);
  test_util::write_wav(wav1, 8000, 1600);
  Chunk c0;
  c0.chunk_id = "s1-0000";
  c0.session_id = "s1";
  c0.split = Split::train;
  c0.member_ids = {"u0", "u1"};
  c0.total_duration_s = 0.1;
  c0.combined_transcript = "first chunk";
  c0.audio_path = wav0.string();
  Chunk c1 = c0;
  c1.chunk_id = "s1-0001";
  c1.total_duration_s = 0.2;
  c1.combined_transcript = "second chunk";
  c1.audio_path = wav1.string();

  auto out = tmp / "training.jsonl";
  export_training_manifest(std::vector<Chunk>{c0, c1}, out);
  auto text = test_util::read_text(out);
  auto lines = std::count(text.begin(), text.end(), '\n');
  CHECK(lines == 3);  // header + 2 chunks
  CHECK(text.find("\"text\":\"first chunk\"") != std::string::npos);
  CHECK(text.find("\"split\":\"train\"") != std::string::npos);

  export_training_manifest(std::vector<Chunk>{}, out);
  CHECK(std::count_if(test_util::read_text(out).begin(),
                      test_util::read_text(out).end(),
                      [](char ch) { return ch == '\n'; }) == 1);

  Chunk missing = c0;
  missing.chunk_id = "s1-0099";
  missing.audio_path = (tmp / "nope.wav").string();
  try {
    export_training_manifest(std::vector<Chunk>{missing}, out);
    FAIL("expected error for missing audio");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("s1-0099") != std::string::npos);
  }
}
