// src/cli.cc

// Copyright 2026  The USCF Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "uscf/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "uscf/align.h"
#include "uscf/error.h"
#include "uscf/eval.h"
#include "uscf/factorize.h"
#include "uscf/feature_store.h"
#include "uscf/parallel.h"
#include "uscf/synth.h"
#include "uscf/universal.h"

namespace uscf {

namespace {

struct Options {
  unsigned threads = 0;

  // align
  fs::path manifest;
  std::string anchor;
  Index k_neighbors = 1;

  // factorize
  fs::path stack_dir;
  Index rank = kDefaultRank;
  std::string svd_method = "exact";

  // derive-w
  fs::path fact_dir;
  std::string method = "w1";
  std::string basis;
  Index w3_runs = 0;

  // derive-s, convert, extract-content
  std::vector<fs::path> features;
  fs::path w_path;
  fs::path s_path;
  Index frame_budget = kDefaultFrameBudget;
  std::string mode = "uscf";
  std::string src, tgt;
  fs::path in_path;

  // eval
  fs::path labels;
  double enroll_fraction = 0.5;
  fs::path report;

  // sweep
  fs::path world_dir;
  std::string param = "rank";
  std::vector<Index> values;

  // simulate
  WorldParams world;
  bool relaxed = false;

  std::uint64_t seed = 0;
  fs::path out;
};

Matrix load_speaker(const Manifest& m, const std::string& speaker) {
  std::vector<Matrix> parts;
  for (const auto& p : m.files_for(speaker)) parts.push_back(read_fmat(p));
  return vstack(parts);
}

std::vector<Matrix> read_all(const std::vector<fs::path>& paths) {
  std::vector<Matrix> out;
  for (const auto& p : paths) out.push_back(read_fmat(p));
  return out;
}

ContentMapping load_mapping(const fs::path& path) {
  ContentMapping m;
  m.w = read_fmat(path);
  return m;
}

void emit_text(const fs::path& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    write_file_atomic(path, text);
}

void run_align(const Options& o) {
  const Manifest manifest = load_manifest(o.manifest);
  auto speakers = manifest.speakers();
  const std::string anchor = o.anchor.empty() ? speakers.front() : o.anchor;
  if (std::find(speakers.begin(), speakers.end(), anchor) == speakers.end())
    throw DataError("anchor speaker '" + anchor + "' is not in the manifest");
  FramePool anchor_pool(anchor, load_speaker(manifest, anchor));
  std::vector<FramePool> others;
  for (const auto& s : speakers)
    if (s != anchor) others.emplace_back(s, load_speaker(manifest, s));
  const AlignedStack stack = build_aligned_stack(anchor_pool, others, o.k_neighbors);
  save_stack(stack, o.out);
  std::cerr << "aligned " << stack.speakers() << " speakers, " << stack.frames()
            << " frames\n";
}

void run_factorize(const Options& o) {
  const AlignedStack stack = load_stack(o.stack_dir);
  const bool randomized = o.svd_method == "randomized";
  const Factorization f =
      factorize(stack, o.rank, randomized ? SvdMethod::kRandomized : SvdMethod::kExact,
                randomized ? std::optional<std::uint64_t>(o.seed) : std::nullopt);
  save_factorization(f, o.out);
  std::cerr << "stack reconstruction error " << stack_reconstruction_error(f, stack)
            << "\n";
}

// Inversion residual of W3 built on each of `runs` random basis speakers,
// averaged over the other speakers.
void report_w3_spread(const Factorization& f, Index runs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, f.speakers() - 1);
  std::vector<double> means;
  for (Index run = 0; run < runs; ++run) {
    const Index b = pick(rng);
    const ContentMapping w = derive_w3(f, f.speaker_order[static_cast<std::size_t>(b)]);
    double sum = 0.0;
    for (Index j = 0; j < f.speakers(); ++j)
      if (j != b) sum += inversion_residual(f.s_blocks[static_cast<std::size_t>(j)], w.w);
    means.push_back(f.speakers() > 1 ? sum / static_cast<double>(f.speakers() - 1) : 0.0);
    std::cerr << "w3 run " << run << " basis=" << f.speaker_order[static_cast<std::size_t>(b)]
              << " mean_inversion_residual=" << format_double(means.back()) << "\n";
  }
  double mean = 0.0, var = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(means.size());
  for (double m : means) var += (m - mean) * (m - mean);
  std::cerr << "w3 spread over " << runs << " runs: mean=" << format_double(mean)
            << " std=" << format_double(std::sqrt(var / static_cast<double>(means.size())))
            << "\n";
}

void run_derive_w(const Options& o) {
  const Factorization f = load_factorization(o.fact_dir);
  const MappingMethod method = parse_mapping_method(o.method);
  std::optional<AlignedStack> stack;
  if (!o.stack_dir.empty()) stack = load_stack(o.stack_dir);
  const ContentMapping w = derive_mapping(
      method, f, stack ? &*stack : nullptr,
      o.basis.empty() ? std::nullopt : std::optional<std::string>(o.basis));
  if (o.w3_runs > 0) report_w3_spread(f, o.w3_runs, o.seed);
  write_fmat(o.out, w.w);
}

void run_derive_s(const Options& o) {
  const std::vector<Matrix> utterances = read_all(o.features);
  const ContentMapping w = load_mapping(o.w_path);
  const Matrix x = sample_frames(utterances, o.frame_budget, o.seed);
  const SpeakerTransform s = derive_speaker_transform(x, w);
  write_fmat(o.out, s.s);
  std::cerr << "derived speaker transform from " << s.frames_used << " frames\n";
}

void run_convert(const Options& o) {
  const Matrix x = read_fmat(o.in_path);
  if (o.mode == "scf") {
    if (o.fact_dir.empty() || o.src.empty() || o.tgt.empty())
      throw DataError("scf conversion needs --fact, --src and --tgt");
    write_fmat(o.out, scf_convert(x, load_factorization(o.fact_dir), o.src, o.tgt));
  } else {
    if (o.w_path.empty() || o.s_path.empty())
      throw DataError("uscf conversion needs --w and --s");
    SpeakerTransform s;
    s.s = read_fmat(o.s_path);
    write_fmat(o.out, uscf_convert(x, load_mapping(o.w_path), s));
  }
}

void run_extract(const Options& o) {
  write_fmat(o.out, extract_content(read_fmat(o.in_path), load_mapping(o.w_path)));
}

EvalReport eval_header(const Options& o, const std::string& kind) {
  EvalReport r;
  r.provenance = {{"eval", kind},
                  {"features", o.features.front().string()},
                  {"labels", o.labels.string()},
                  {"enrollment_fraction", format_double(o.enroll_fraction)},
                  {"seed", std::to_string(o.seed)},
                  {"protocol", kind == "phoneme"
                                   ? "cosine to per-class centroid"
                                   : "cosine to per-speaker centroid within phoneme, pooled EER"}};
  return r;
}

void run_eval_phoneme(const Options& o) {
  const Matrix x = read_fmat(o.features.front());
  const PhonemeResult res =
      phoneme_classify(x, load_labels(o.labels), o.enroll_fraction, o.seed);
  EvalReport r = eval_header(o, "phoneme");
  r.metrics["phoneme_accuracy"] = res.accuracy;
  r.metrics["tested_frames"] = static_cast<double>(res.tested);
  for (const auto& [name, acc] : res.per_class) r.metrics["accuracy/" + name] = acc;
  emit_text(o.report, format_report(r));
}

void run_eval_speaker(const Options& o) {
  const Matrix x = read_fmat(o.features.front());
  const TrialSet trials =
      per_phoneme_speaker_trials(x, load_labels(o.labels), o.enroll_fraction, o.seed);
  EvalReport r = eval_header(o, "speaker-eer");
  r.metrics["speaker_eer"] = compute_eer(trials);
  r.metrics["trials"] = static_cast<double>(trials.trials.size());
  for (const auto& g : trials.groups) r.metrics["eer/" + g.key] = g.eer;
  for (const auto& s : trials.skipped) std::cerr << "skipped " << s << "\n";
  emit_text(o.report, format_report(r));
}

void run_sweep_cmd(const Options& o) {
  const SynthWorld world = load_world(o.world_dir);
  SweepConfig c;
  c.param = o.param == "rank" ? SweepParam::kRank : SweepParam::kFrames;
  c.values = o.values;
  if (c.values.empty()) {
    if (c.param == SweepParam::kRank)
      c.values.assign(kRankSweep.begin(), kRankSweep.end());
    else
      c.values.assign(kFrameBudgetSweep.begin(), kFrameBudgetSweep.end());
  }
  c.rank = o.rank;
  c.frame_budget = o.frame_budget;
  c.method = parse_mapping_method(o.method);
  c.k_neighbors = o.k_neighbors;
  c.seed = o.seed;
  emit_text(o.report, format_report(run_sweep(world, c)));
}

void run_simulate(const Options& o) {
  WorldParams p = o.world;
  p.strict = !o.relaxed;
  emit_world(generate_world(p), o.out);
}

unsigned threads_from_env() {
  const char* env = std::getenv("USCF_THREADS");
  if (!env || !*env) return 0;
  try {
    return static_cast<unsigned>(parse_count(env, "USCF_THREADS"));
  } catch (const DataError&) {
    std::cerr << "warning: ignoring malformed USCF_THREADS\n";
    return 0;
  }
}

// Resolved configuration of the selected subcommand, one "# key=value" line
// per option, written before any work starts.
void print_config(CLI::App* app, unsigned threads) {
  std::string command;
  CLI::App* leaf = app;
  while (!leaf->get_subcommands().empty()) {
    leaf = leaf->get_subcommands().front();
    command += (command.empty() ? "" : " ") + leaf->get_name();
  }
  std::cerr << "# command=" << command << "\n# threads=" << threads << "\n";
  std::istringstream lines(leaf->config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty() && line[0] != '[') std::cerr << "# " << line << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"Universal speech content factorization tools", "uscf"};
  app.require_subcommand(1);
  auto* threads = app.add_option("--threads", o.threads,
                                 "Worker threads (0 = all cores; env USCF_THREADS)");

  auto* align = app.add_subcommand("align", "Content-align seen speakers to an anchor");
  align->add_option("--manifest", o.manifest, "speaker<TAB>fmat manifest")->required();
  align->add_option("--anchor", o.anchor, "Anchor speaker (default: first in manifest)");
  align->add_option("--k-neighbors", o.k_neighbors, "Neighbours averaged per frame")
      ->capture_default_str()->check(CLI::PositiveNumber);
  align->add_option("--out", o.out, "Output stack directory")->required();

  auto* fact = app.add_subcommand("factorize", "Truncated SVD of an aligned stack");
  fact->add_option("--stack", o.stack_dir)->required();
  fact->add_option("--rank", o.rank)->capture_default_str()->check(CLI::PositiveNumber);
  fact->add_option("--svd", o.svd_method, "exact or randomized")
      ->capture_default_str()->check(CLI::IsMember({"exact", "randomized"}));
  fact->add_option("--seed", o.seed, "Seed for the randomized SVD")->capture_default_str();
  fact->add_option("--out", o.out)->required();

  const auto methods = CLI::IsMember({"w0", "w1", "w2", "w3"}, CLI::ignore_case);
  auto* dw = app.add_subcommand("derive-w", "Universal speech-to-content mapping");
  dw->add_option("--fact", o.fact_dir)->required();
  dw->add_option("--stack", o.stack_dir, "Aligned stack (needed by w0 and w1)");
  dw->add_option("--method", o.method)->capture_default_str()->check(methods);
  dw->add_option("--basis", o.basis, "Basis speaker for w3 (default: anchor)");
  dw->add_option("--w3-average-runs", o.w3_runs,
                 "Report w3 inversion spread over N random basis speakers")
      ->capture_default_str();
  dw->add_option("--seed", o.seed)->capture_default_str();
  dw->add_option("--out", o.out)->required();

  auto* ds = app.add_subcommand("derive-s", "Speaker transform of a new speaker");
  ds->add_option("--features", o.features, "Target speaker FMAT files")->required();
  ds->add_option("--w", o.w_path)->required();
  ds->add_option("--frames", o.frame_budget)->capture_default_str()->check(CLI::PositiveNumber);
  ds->add_option("--seed", o.seed)->capture_default_str();
  ds->add_option("--out", o.out)->required();

  auto* conv = app.add_subcommand("convert", "Voice conversion of a feature file");
  conv->add_option("--mode", o.mode)->capture_default_str()->check(CLI::IsMember({"scf", "uscf"}));
  conv->add_option("--fact", o.fact_dir);
  conv->add_option("--src", o.src);
  conv->add_option("--tgt", o.tgt);
  conv->add_option("--w", o.w_path);
  conv->add_option("--s", o.s_path);
  conv->add_option("--in", o.in_path)->required();
  conv->add_option("--out", o.out)->required();

  auto* ext = app.add_subcommand("extract-content", "Content features X W");
  ext->add_option("--w", o.w_path)->required();
  ext->add_option("--in", o.in_path)->required();
  ext->add_option("--out", o.out)->required();

  auto* eval = app.add_subcommand("eval", "Embedding analyses");
  eval->require_subcommand(1);
  CLI::App* phon = eval->add_subcommand("phoneme", "Phoneme classification accuracy");
  CLI::App* spk = eval->add_subcommand("speaker-eer", "Per-phoneme speaker EER");
  for (CLI::App* sub : {phon, spk}) {
    sub->add_option("--features", o.features)->required()->expected(1);
    sub->add_option("--labels", o.labels)->required();
    sub->add_option("--enroll-fraction", o.enroll_fraction)->capture_default_str();
    sub->add_option("--seed", o.seed)->capture_default_str();
    sub->add_option("--report", o.report, "Output TSV (default: stdout)");
  }

  auto* sweep = app.add_subcommand("sweep", "Rank or frame-budget sweep on a synthetic world");
  sweep->add_option("--world", o.world_dir)->required();
  sweep->add_option("--param", o.param)->capture_default_str()->check(CLI::IsMember({"rank", "frames"}));
  sweep->add_option("--values", o.values, "Comma-separated values")->delimiter(',');
  sweep->add_option("--rank", o.rank)->capture_default_str();
  sweep->add_option("--frames", o.frame_budget)->capture_default_str();
  sweep->add_option("--method", o.method)->capture_default_str()->check(methods);
  sweep->add_option("--k-neighbors", o.k_neighbors)->capture_default_str();
  sweep->add_option("--seed", o.seed)->capture_default_str();
  sweep->add_option("--report", o.report, "Output TSV (default: stdout)");

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic world");
  WorldParams& w = o.world;
  sim->add_option("--rank", w.content_rank)->capture_default_str();
  sim->add_option("--dim", w.dim)->capture_default_str();
  sim->add_option("--speakers", w.speakers)->capture_default_str();
  sim->add_option("--extras", w.extras)->capture_default_str();
  sim->add_option("--frames", w.frames)->capture_default_str();
  sim->add_option("--extra-frames", w.extra_frames)->capture_default_str();
  sim->add_option("--clusters", w.clusters)->capture_default_str();
  sim->add_option("--beta", w.beta)->capture_default_str();
  sim->add_option("--noise", w.noise)->capture_default_str();
  sim->add_option("--jitter", w.cluster_jitter)->capture_default_str();
  sim->add_flag("--relaxed", o.relaxed, "Allow overlapping timbre blocks");
  sim->add_option("--seed", w.seed)->capture_default_str();
  sim->add_option("--out", o.out)->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  set_thread_count(threads->count() ? o.threads : threads_from_env());
  print_config(&app, thread_count());

  try {
    if (align->parsed()) run_align(o);
    else if (fact->parsed()) run_factorize(o);
    else if (dw->parsed()) run_derive_w(o);
    else if (ds->parsed()) run_derive_s(o);
    else if (conv->parsed()) run_convert(o);
    else if (ext->parsed()) run_extract(o);
    else if (phon->parsed()) run_eval_phoneme(o);
    else if (spk->parsed()) run_eval_speaker(o);
    else if (sweep->parsed()) run_sweep_cmd(o);
    else if (sim->parsed()) run_simulate(o);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace uscf
