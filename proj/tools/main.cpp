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

// corpus-forge command line. Subcommands map one-to-one onto pipeline
// stages; every stage reads a manifest, writes a new one (inputs are
// never touched) and prints a single key=value summary line.
//
// Exit codes: 0 success, 1 validation findings, 2 usage error, 3 data
// error (parse/format failures).

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corpus_forge/analysis.hpp"
#include "corpus_forge/audio_io.hpp"
#include "corpus_forge/corpus_model.hpp"
#include "corpus_forge/curation.hpp"
#include "corpus_forge/text_normalizer.hpp"
#include "corpus_forge/wer_engine.hpp"

namespace cf = corpus_forge;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_distinct(const std::string& in, const std::string& out) {
  if (!in.empty() && !out.empty() &&
      fs::weakly_canonical(in) == fs::weakly_canonical(out))
    throw UsageError("--out must differ from the input manifest (stages never "
                     "mutate their input)");
}

cf::NormalizerConfig load_config(const std::string& config_path,
                                 bool error_analysis_defaults,
                                 std::optional<bool> fillers_override) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("CORPUS_FORGE_CONFIG")) path = env;
  }
  cf::NormalizerConfig cfg =
      path.empty() ? cf::NormalizerConfig::defaults() : cf::NormalizerConfig::load(path);
  if (path.empty() && error_analysis_defaults) cfg.remove_fillers = false;
  if (fillers_override) cfg.remove_fillers = !*fillers_override;
  cfg.validate();
  return cfg;
}

std::set<cf::Split> parse_split_set(const std::string& csv) {
  std::set<cf::Split> out;
  if (csv.empty() || csv == "none") return out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    if (!item.empty()) {
      auto s = cf::split_from_string(item);
      if (!s || *s == cf::Split::unassigned)
        throw UsageError("bad split name \"" + item + "\" (want train,dev,test)");
      out.insert(*s);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

cf::SplitRatios parse_ratios(const std::string& csv) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    try {
      if (!item.empty()) vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad ratio \"" + item + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (vals.size() != 3)
    throw UsageError("--ratios wants three comma-separated fractions");
  return cf::SplitRatios{vals[0], vals[1], vals[2]};
}

std::string format2(double v) { return cf::detail::format_fixed(v, 2); }

nlohmann::ordered_json stage_provenance(const std::string& stage) {
  return {{"tool", "corpus-forge"},
          {"version", std::string(cf::kToolVersion)},
          {"stage", stage}};
}

// ---- stage implementations (shared by subcommands and `pipeline`) ----

struct ScanArgs {
  std::string root;
  std::string layout = "session_tree";
  std::string session_pattern;
  std::string out;
  std::string skip_report;
  unsigned jobs = 0;
};

void do_scan(const ScanArgs& args) {
  cf::ScanOptions opts;
  if (args.layout == "generic")
    opts.layout = cf::Layout::generic;
  else if (args.layout == "session_tree")
    opts.layout = cf::Layout::session_tree;
  else
    throw UsageError("--layout must be generic or session_tree");
  opts.session_pattern = args.session_pattern;
  opts.jobs = args.jobs;
  cf::ScanResult result = cf::scan_corpus(args.root, opts);
  cf::write_manifest(result.manifest, args.out);
  if (!args.skip_report.empty()) {
    std::ofstream sr(args.skip_report, std::ios::trunc);
    if (!sr) throw cf::IoError("cannot write " + args.skip_report);
    for (const auto& s : result.skipped) sr << s.path << '\t' << s.reason << '\n';
  }
  for (const auto& s : result.skipped)
    std::cerr << "skipped: " << s.path << " (" << s.reason << ")\n";
  std::cout << "stage=scan records=" << result.manifest.records.size()
            << " skipped=" << result.skipped.size() << " out=" << args.out << "\n";
}

void do_normalize(const std::string& in, const std::string& out,
                  const cf::NormalizerConfig& cfg, unsigned jobs) {
  require_distinct(in, out);
  cf::Manifest m = cf::read_manifest(in);
  std::size_t flagged = 0;
  cf::detail::parallel_for(m.records.size(), jobs, [&](std::size_t i) {
    auto& r = m.records[i];
    cf::NormalizeOutcome o = cf::normalize_ex(r.raw_transcript, cfg);
    r.normalized_transcript = std::move(o.text);
    r.flags.erase(cf::Flag::number_passthrough);
    if (o.number_passthrough) r.flags.insert(cf::Flag::number_passthrough);
  });
  for (const auto& r : m.records)
    if (r.flags.count(cf::Flag::number_passthrough)) ++flagged;
  m.provenance = stage_provenance("normalize");
  cf::write_manifest(m, out);
  std::cout << "stage=normalize records=" << m.records.size()
            << " number_passthrough=" << flagged << " out=" << out << "\n";
}

void do_score(const std::string& in, const std::string& hyp_path,
              const std::string& out, const cf::NormalizerConfig& cfg,
              unsigned jobs, bool macro) {
  require_distinct(in, out);
  cf::Manifest m = cf::read_manifest(in);
  auto hyps = cf::read_hypotheses(hyp_path);
  for (const auto& r : m.records)
    if (!hyps.count(r.id))
      throw cf::Error("no hypothesis for id \"" + r.id + "\"");

  const std::size_t n = m.records.size();
  std::vector<std::optional<cf::ScoreRecord>> scores(n);
  cf::detail::parallel_for(n, jobs, [&](std::size_t i) {
    const auto& r = m.records[i];
    try {
      scores[i] = cf::wer(r.raw_transcript, hyps.at(r.id), cfg, r.id);
    } catch (const cf::EmptyReferenceError&) {
      // unscorable: reference normalizes to nothing
    }
  });

  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw cf::IoError("cannot write " + out);
  nlohmann::ordered_json header;
  header["format"] = cf::kFormatVersion;
  f << header.dump() << '\n';
  std::vector<cf::ScoreRecord> scored;
  for (std::size_t i = 0; i < n; ++i) {
    if (!scores[i]) continue;
    const auto& s = *scores[i];
    scored.push_back(s);
    f << "{\"utterance_id\":" << nlohmann::ordered_json(s.utterance_id).dump()
      << ",\"substitutions\":" << s.substitutions
      << ",\"deletions\":" << s.deletions << ",\"insertions\":" << s.insertions
      << ",\"ref_len\":" << s.ref_len
      << ",\"wer_percent\":" << format2(100.0 * s.wer()) << "}\n";
  }
  if (!f) throw cf::IoError("short write to " + out);

  std::cout << "stage=score scored=" << scored.size()
            << " unscorable=" << (n - scored.size());
  if (!scored.empty()) {
    cf::WerFraction agg = cf::aggregate(scored);
    std::cout << " edits=" << agg.edits << " ref_len=" << agg.ref_len
              << " wer_percent=" << format2(agg.percent());
    if (macro)
      std::cout << " macro_percent=" << format2(100.0 * cf::aggregate_macro(scored));
  } else {
    std::cout << " wer_percent=n/a";
  }
  std::cout << " out=" << out << "\n";
}

struct FilterArgs {
  std::string in, hyp, out;
  std::string report, decisions, rejects;
  cf::FilterPolicy policy;
  unsigned jobs = 0;
};

void do_filter(const FilterArgs& args, const cf::NormalizerConfig& cfg) {
  require_distinct(args.in, args.out);
  cf::Manifest m = cf::read_manifest(args.in);
  auto hyps = cf::read_hypotheses(args.hyp);
  cf::CascadeResult result = cf::run_cascade(m, hyps, args.policy, cfg, args.jobs);
  result.filtered.provenance = stage_provenance("filter");
  cf::write_manifest(result.filtered, args.out);
  if (!args.rejects.empty()) {
    result.rejected.provenance = stage_provenance("filter");
    cf::write_manifest(result.rejected, args.rejects);
  }
  if (!args.report.empty()) {
    std::ofstream f(args.report, std::ios::binary | std::ios::trunc);
    if (!f) throw cf::IoError("cannot write " + args.report);
    f << cf::cascade_jsonl(result.rows);
  }
  if (!args.decisions.empty()) {
    std::ofstream f(args.decisions, std::ios::binary | std::ios::trunc);
    if (!f) throw cf::IoError("cannot write " + args.decisions);
    nlohmann::ordered_json header;
    header["format"] = cf::kFormatVersion;
    f << header.dump() << '\n';
    for (const auto& d : result.decisions) {
      nlohmann::ordered_json j;
      j["utterance_id"] = d.utterance_id;
      j["verdict"] = d.keep ? "keep" : "remove";
      j["reason"] = cf::to_string(d.reason);
      j["stage"] = d.stage;
      f << j.dump() << '\n';
    }
  }
  std::cout << cf::render_cascade(result.rows);
  std::cout << "stage=filter kept=" << result.filtered.records.size()
            << " removed=" << result.rejected.records.size() << " out=" << args.out
            << "\n";
}

struct PackArgs {
  std::string in, audio_out, out;
  double max_duration_s = 30.0;
  std::string splits = "train,dev";
  unsigned jobs = 0;
};

void do_pack(const PackArgs& args) {
  require_distinct(args.in, args.out);
  cf::Manifest m = cf::read_manifest(args.in);
  std::set<cf::Split> wanted = parse_split_set(args.splits);
  cf::Manifest selected;
  for (const auto& r : m.records)
    if (wanted.empty() || wanted.count(r.split)) selected.records.push_back(r);

  fs::create_directories(args.audio_out);
  auto chunks = cf::pack_sessions(selected, args.max_duration_s, args.audio_out);

  cf::detail::parallel_for(chunks.size(), args.jobs, [&](std::size_t i) {
    std::vector<fs::path> inputs;
    inputs.reserve(chunks[i].member_ids.size());
    for (const auto& id : chunks[i].member_ids) {
      const cf::UtteranceRecord* r = selected.find(id);
      inputs.emplace_back(r->audio_path);
    }
    cf::concat(inputs, chunks[i].audio_path);
  });
  cf::export_training_manifest(chunks, args.out);

  std::size_t overlong = 0;
  double hours = 0.0;
  for (const auto& c : chunks) {
    if (c.overlong_singleton) ++overlong;
    hours += c.total_duration_s / 3600.0;
  }
  std::cout << "stage=pack chunks=" << chunks.size() << " overlong=" << overlong
            << " hours=" << format2(hours) << " out=" << args.out << "\n";
}

void do_split(const std::string& in, const std::string& out,
              const cf::SplitRatios& ratios, const std::string& seed) {
  require_distinct(in, out);
  cf::Manifest m = cf::read_manifest(in);
  std::vector<std::string> ids;
  ids.reserve(m.records.size());
  for (const auto& r : m.records) ids.push_back(r.id);
  cf::SplitAssignment a = cf::assign_splits(ids, ratios, seed);
  std::size_t counts[3] = {0, 0, 0};
  for (auto& r : m.records) {
    r.split = a.assignment.at(r.id);
    ++counts[static_cast<int>(r.split)];
  }
  m.provenance = stage_provenance("split");
  m.provenance["seed"] = seed;
  cf::write_manifest(m, out);
  std::cout << "stage=split train=" << counts[0] << " dev=" << counts[1]
            << " test=" << counts[2] << " seed=" << seed << " out=" << out << "\n";
}

int do_validate(const std::string& in, const cf::NormalizerConfig& cfg,
                bool check_audio) {
  cf::Manifest m = cf::read_manifest(in);
  cf::DisjointReport report = cf::validate_speaker_disjoint(m);
  std::size_t findings = 0;
  for (const auto& v : report.violations) {
    std::cout << "violation speaker=" << v.speaker_id << " splits=";
    bool first = true;
    for (cf::Split s : v.splits) {
      if (!first) std::cout << ",";
      std::cout << cf::to_string(s);
      first = false;
    }
    std::cout << "\n";
    ++findings;
  }
  for (const auto& r : m.records) {
    if (r.normalized_transcript &&
        cf::normalize(*r.normalized_transcript, cfg) != *r.normalized_transcript) {
      std::cout << "violation id=" << r.id
                << " reason=normalized_transcript_not_fixed_point\n";
      ++findings;
    }
    if (check_audio && fs::exists(r.audio_path)) {
      try {
        double d = cf::probe(r.audio_path).duration_s();
        if (std::abs(d - r.duration_s) > 1e-9) {
          std::cout << "violation id=" << r.id << " reason=duration_mismatch"
                    << " manifest=" << r.duration_s << " audio=" << d << "\n";
          ++findings;
        }
      } catch (const cf::Error&) {
        std::cout << "violation id=" << r.id << " reason=unparseable_audio"
                  << "\n";
        ++findings;
      }
    }
  }
  std::cout << "stage=validate findings=" << findings
            << " unverifiable=" << report.unverifiable_ids.size() << "\n";
  return findings ? kExitFindings : kExitOk;
}

struct ReportArgs {
  std::string cascade;
  std::vector<std::string> accounting;  // name=manifest.jsonl
  bool alignments = false;
  bool fillers = false;
  std::string manifest, hyp, utt, out;
};

int do_report(const ReportArgs& args, const cf::NormalizerConfig& cfg) {
  std::ostringstream body;
  if (!args.cascade.empty()) {
    auto rows = cf::read_cascade_jsonl(args.cascade);
    body << cf::render_cascade(rows);
  } else if (!args.accounting.empty()) {
    std::vector<cf::Manifest> manifests;
    manifests.reserve(args.accounting.size());
    std::vector<std::pair<std::string, const cf::Manifest*>> corpora;
    for (const auto& spec : args.accounting) {
      std::size_t eq = spec.find('=');
      if (eq == std::string::npos)
        throw UsageError("--accounting wants NAME=MANIFEST, got \"" + spec + "\"");
      manifests.push_back(cf::read_manifest(spec.substr(eq + 1)));
      corpora.emplace_back(spec.substr(0, eq), &manifests.back());
    }
    body << cf::render_accounting(cf::dataset_accounting(corpora));
  } else if (args.alignments || args.fillers) {
    if (args.manifest.empty() || args.hyp.empty())
      throw UsageError("--alignments/--filler-retention need --manifest and --hyp");
    cf::Manifest m = cf::read_manifest(args.manifest);
    auto hyps = cf::read_hypotheses(args.hyp);
    if (args.alignments) {
      for (const auto& r : m.records) {
        if (!args.utt.empty() && r.id != args.utt) continue;
        auto h = hyps.find(r.id);
        if (h == hyps.end()) continue;
        body << "utt: " << r.id << "\n"
             << cf::alignment_report(r.raw_transcript, h->second, cfg) << "\n";
      }
    } else {
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto& r : m.records) {
        auto h = hyps.find(r.id);
        if (h != hyps.end()) pairs.emplace_back(r.raw_transcript, h->second);
      }
      cf::FillerRetention fr = cf::filler_retention(pairs, cfg);
      body << "ref_fillers=" << fr.ref_filler_count
           << " matched=" << fr.matched_filler_count
           << " family_matched=" << fr.family_matched_count << " retention="
           << (fr.retention() ? cf::detail::format_fixed(*fr.retention(), 3)
                              : std::string("n/a"))
           << " family_retention="
           << (fr.family_retention()
                   ? cf::detail::format_fixed(*fr.family_retention(), 3)
                   : std::string("n/a"))
           << "\n";
    }
  } else {
    throw UsageError(
        "report wants one of --cascade, --accounting, --alignments, "
        "--filler-retention");
  }
  if (args.out.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream f(args.out, std::ios::binary | std::ios::trunc);
    if (!f) throw cf::IoError("cannot write " + args.out);
    f << body.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpus-forge: corpus curation and WER scoring for children's-speech ASR"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned jobs = 0;
  app.add_option("--config", config_path,
                 "normalizer config file (falls back to $CORPUS_FORGE_CONFIG)");
  app.add_option("--jobs", jobs, "worker threads (0 = all cores)");

  // scan
  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "walk a corpus tree into a manifest");
  scan->add_option("--root", scan_args.root, "corpus root directory")->required();
  scan->add_option("--layout", scan_args.layout, "generic or session_tree");
  scan->add_option("--session-pattern", scan_args.session_pattern,
                   "generic layout: regex capturing the session id from the stem");
  scan->add_option("--out", scan_args.out, "output manifest")->required();
  scan->add_option("--skip-report", scan_args.skip_report,
                   "write skipped files (path<TAB>reason) here");

  // normalize
  std::string nz_in, nz_out;
  bool keep_fillers = false, force_fillers = false;
  auto* normalize = app.add_subcommand("normalize", "fill normalized_transcript");
  normalize->add_option("--manifest", nz_in, "input manifest")->required();
  normalize->add_option("--out", nz_out, "output manifest")->required();
  normalize->add_flag("--keep-fillers", keep_fillers, "keep filler tokens");
  normalize->add_flag("--remove-fillers", force_fillers, "remove filler tokens");

  // score
  std::string sc_in, sc_hyp, sc_out;
  bool sc_macro = false;
  bool sc_keep_fillers = false, sc_force_fillers = false;
  auto* score = app.add_subcommand("score", "WER against a hypothesis file");
  score->add_option("--manifest", sc_in, "input manifest")->required();
  score->add_option("--hyp", sc_hyp, "hypothesis file")->required();
  score->add_option("--out", sc_out, "output score file")->required();
  score->add_flag("--macro", sc_macro, "also print the macro average");
  score->add_flag("--keep-fillers", sc_keep_fillers, "keep filler tokens");
  score->add_flag("--remove-fillers", sc_force_fillers, "remove filler tokens");

  // filter
  FilterArgs fl_args;
  std::vector<std::string> fl_labels;
  std::string fl_duration_splits = "train,dev";
  bool fl_keep_fillers = false, fl_force_fillers = false;
  auto* filter = app.add_subcommand("filter", "run the filtering cascade");
  filter->add_option("--manifest", fl_args.in, "input manifest")->required();
  filter->add_option("--hyp", fl_args.hyp, "hypothesis file")->required();
  filter->add_option("--out", fl_args.out, "filtered manifest")->required();
  filter->add_option("--wer-threshold", fl_args.policy.wer_threshold,
                     "remove files with WER strictly above this fraction");
  filter->add_option("--min-words", fl_args.policy.min_words,
                     "remove files with fewer raw words than this");
  filter->add_option("--max-duration", fl_args.policy.max_duration_s,
                     "remove files strictly longer than this many seconds");
  filter->add_option("--duration-splits", fl_duration_splits,
                     "splits the duration rule applies to (csv, or none)");
  filter->add_option("--no-speech-label", fl_labels,
                     "no-speech label (repeatable; replaces the defaults)");
  filter->add_option("--report", fl_args.report, "write cascade rows (jsonl)");
  filter->add_option("--decisions", fl_args.decisions, "write per-file decisions");
  filter->add_option("--rejects", fl_args.rejects, "write removed records");
  filter->add_flag("--keep-fillers", fl_keep_fillers, "keep filler tokens");
  filter->add_flag("--remove-fillers", fl_force_fillers, "remove filler tokens");

  // pack
  PackArgs pk_args;
  auto* pack = app.add_subcommand("pack", "pack sessions into <=30 s chunks");
  pack->add_option("--manifest", pk_args.in, "input manifest")->required();
  pack->add_option("--audio-out", pk_args.audio_out, "chunk wav directory")->required();
  pack->add_option("--out", pk_args.out, "training manifest")->required();
  pack->add_option("--max-duration", pk_args.max_duration_s, "chunk cap in seconds");
  pack->add_option("--splits", pk_args.splits, "splits to pack (csv; default train,dev)");

  // split
  std::string sp_in, sp_out, sp_ratios = "0.8,0.1,0.1", sp_seed = "corpus-forge";
  auto* split = app.add_subcommand("split", "assign train/dev/test splits");
  split->add_option("--manifest", sp_in, "input manifest")->required();
  split->add_option("--out", sp_out, "output manifest")->required();
  split->add_option("--ratios", sp_ratios, "train,dev,test fractions");
  split->add_option("--seed", sp_seed, "shuffle seed");

  // validate
  std::string vd_in;
  bool vd_check_audio = false;
  bool vd_keep_fillers = false, vd_force_fillers = false;
  auto* validate = app.add_subcommand("validate", "check split hygiene and invariants");
  validate->add_option("--manifest", vd_in, "input manifest")->required();
  validate->add_flag("--check-audio", vd_check_audio,
                     "probe audio files and compare durations");
  validate->add_flag("--keep-fillers", vd_keep_fillers, "keep filler tokens");
  validate->add_flag("--remove-fillers", vd_force_fillers, "remove filler tokens");

  // report
  ReportArgs rp_args;
  bool rp_keep_fillers = false, rp_force_fillers = false;
  auto* report = app.add_subcommand("report", "render analysis reports");
  report->add_option("--cascade", rp_args.cascade, "cascade jsonl to render");
  report->add_option("--accounting", rp_args.accounting,
                     "NAME=MANIFEST (repeatable) hour accounting");
  report->add_flag("--alignments", rp_args.alignments, "per-utterance alignments");
  report->add_flag("--filler-retention", rp_args.fillers, "filler retention metric");
  report->add_option("--manifest", rp_args.manifest, "manifest for alignment modes");
  report->add_option("--hyp", rp_args.hyp, "hypothesis file for alignment modes");
  report->add_option("--utt", rp_args.utt, "restrict --alignments to one id");
  report->add_option("--out", rp_args.out, "write the report here instead of stdout");
  report->add_flag("--keep-fillers", rp_keep_fillers, "keep filler tokens");
  report->add_flag("--remove-fillers", rp_force_fillers, "remove filler tokens");

  // pipeline
  ScanArgs pl_scan;
  FilterArgs pl_filter;
  PackArgs pl_pack;
  std::string pl_out_dir, pl_hyp, pl_duration_splits = "train,dev";
  auto* pipeline = app.add_subcommand(
      "pipeline", "scan | normalize | score | filter | pack in one go");
  pipeline->add_option("--root", pl_scan.root, "corpus root directory")->required();
  pipeline->add_option("--layout", pl_scan.layout, "generic or session_tree");
  pipeline->add_option("--session-pattern", pl_scan.session_pattern,
                       "generic layout session regex");
  pipeline->add_option("--hyp", pl_hyp, "hypothesis file")->required();
  pipeline->add_option("--out-dir", pl_out_dir, "directory for all outputs")->required();
  pipeline->add_option("--wer-threshold", pl_filter.policy.wer_threshold,
                       "cascade WER threshold");
  pipeline->add_option("--min-words", pl_filter.policy.min_words, "cascade word floor");
  pipeline->add_option("--max-duration", pl_filter.policy.max_duration_s,
                       "cascade duration cap and chunk cap");
  pipeline->add_option("--duration-splits", pl_duration_splits,
                       "splits the duration rule applies to");
  pipeline->add_option("--splits", pl_pack.splits, "splits to pack");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) ? kExitUsage : kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto fillers_override = [](bool keep, bool remove) -> std::optional<bool> {
    if (keep && remove) throw UsageError("--keep-fillers conflicts with --remove-fillers");
    if (keep) return true;
    if (remove) return false;
    return std::nullopt;
  };

  try {
    if (app.got_subcommand(scan)) {
      scan_args.jobs = jobs;
      do_scan(scan_args);
    } else if (app.got_subcommand(normalize)) {
      do_normalize(nz_in, nz_out,
                   load_config(config_path, false,
                               fillers_override(keep_fillers, force_fillers)),
                   jobs);
    } else if (app.got_subcommand(score)) {
      do_score(sc_in, sc_hyp, sc_out,
               load_config(config_path, false,
                           fillers_override(sc_keep_fillers, sc_force_fillers)),
               jobs, sc_macro);
    } else if (app.got_subcommand(filter)) {
      if (!fl_labels.empty())
        fl_args.policy.no_speech_labels =
            std::set<std::string>(fl_labels.begin(), fl_labels.end());
      fl_args.policy.duration_filtered_splits = parse_split_set(fl_duration_splits);
      fl_args.jobs = jobs;
      do_filter(fl_args,
                load_config(config_path, false,
                            fillers_override(fl_keep_fillers, fl_force_fillers)));
    } else if (app.got_subcommand(pack)) {
      pk_args.jobs = jobs;
      do_pack(pk_args);
    } else if (app.got_subcommand(split)) {
      do_split(sp_in, sp_out, parse_ratios(sp_ratios), sp_seed);
    } else if (app.got_subcommand(validate)) {
      return do_validate(vd_in,
                         load_config(config_path, false,
                                     fillers_override(vd_keep_fillers,
                                                      vd_force_fillers)),
                         vd_check_audio);
    } else if (app.got_subcommand(report)) {
      return do_report(rp_args,
                       load_config(config_path, true,
                                   fillers_override(rp_keep_fillers,
                                                    rp_force_fillers)));
    } else if (app.got_subcommand(pipeline)) {
      fs::create_directories(pl_out_dir);
      fs::path dir(pl_out_dir);
      cf::NormalizerConfig cfg = load_config(config_path, false, std::nullopt);
      pl_scan.out = (dir / "scan.jsonl").string();
      pl_scan.jobs = jobs;
      pl_scan.skip_report = (dir / "skipped.tsv").string();
      do_scan(pl_scan);
      do_normalize(pl_scan.out, (dir / "normalized.jsonl").string(), cfg, jobs);
      do_score((dir / "normalized.jsonl").string(), pl_hyp,
               (dir / "scores.jsonl").string(), cfg, jobs, false);
      pl_filter.in = (dir / "normalized.jsonl").string();
      pl_filter.hyp = pl_hyp;
      pl_filter.out = (dir / "filtered.jsonl").string();
      pl_filter.report = (dir / "cascade.jsonl").string();
      pl_filter.decisions = (dir / "decisions.jsonl").string();
      pl_filter.rejects = (dir / "rejected.jsonl").string();
      pl_filter.policy.duration_filtered_splits = parse_split_set(pl_duration_splits);
      pl_filter.jobs = jobs;
      do_filter(pl_filter, cfg);
      pl_pack.in = pl_filter.out;
      pl_pack.audio_out = (dir / "chunks").string();
      pl_pack.out = (dir / "training.jsonl").string();
      pl_pack.max_duration_s = pl_filter.policy.max_duration_s;
      pl_pack.jobs = jobs;
      do_pack(pl_pack);
      std::cout << "stage=pipeline out_dir=" << pl_out_dir << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
