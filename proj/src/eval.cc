// src/eval.cc

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

#include "uscf/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "uscf/error.h"

namespace uscf {

namespace {

void check_cover(const Matrix& features, const LabelTrack& labels) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.records.size() != n)
    throw DataError("labels do not cover all frames (" +
                    std::to_string(labels.records.size()) + " labels for " +
                    std::to_string(n) + " frames)");
  for (std::size_t i = 0; i < n; ++i)
    if (labels.records[i].frame_index != static_cast<Index>(i))
      throw DataError("labels do not cover all frames (gap at frame " +
                      std::to_string(i) + ")");
  require_finite(features, "evaluation features");
}

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0))
    throw DataError("enrollment fraction must lie in (0, 1)");
}

// Enrollment size for a cell of n frames; at least one frame stays for test.
Index enrollment_count(Index n, double fraction) {
  return std::min<Index>(static_cast<Index>(std::floor(fraction * n)), n - 1);
}

Vector mean_row(const Matrix& m, std::span<const Index> rows) {
  Vector mean = Vector::Zero(m.cols());
  for (Index r : rows) mean += m.row(r).transpose();
  return mean / static_cast<double>(rows.size());
}

std::span<const double> vec_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

double compute_eer(std::span<const Trial> trials) {
  std::vector<double> tgt, non;
  for (const Trial& t : trials) {
    if (!std::isfinite(t.score)) throw DataError("compute_eer: non-finite score");
    (t.is_target ? tgt : non).push_back(t.score);
  }
  if (tgt.empty() || non.empty())
    throw DataError("compute_eer: degenerate trial set (needs targets and non-targets)");
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());

  std::vector<double> thresholds(tgt);
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nt = static_cast<double>(tgt.size());
  const double nn = static_cast<double>(non.size());
  auto far = [&](double t) {
    return static_cast<double>(non.end() - std::lower_bound(non.begin(), non.end(), t)) / nn;
  };
  auto frr = [&](double t) {
    return static_cast<double>(std::lower_bound(tgt.begin(), tgt.end(), t) - tgt.begin()) / nt;
  };

  // FAR - FRR is +1 at the lowest threshold and -1 at +inf.
  double prev_far = far(thresholds[0]);
  double prev_gap = prev_far - frr(thresholds[0]);
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    const double cur_far = far(thresholds[i]);
    const double cur_gap = cur_far - frr(thresholds[i]);
    if (cur_gap <= 0.0) {
      const double lambda = prev_gap / (prev_gap - cur_gap);
      return prev_far + lambda * (cur_far - prev_far);
    }
    prev_far = cur_far;
    prev_gap = cur_gap;
  }
  return 0.5;  // unreachable: the +inf threshold always closes the sweep
}

double compute_eer(const TrialSet& trials) { return compute_eer(trials.trials); }

PhonemeResult phoneme_classify(const Matrix& features, const LabelTrack& labels,
                               double enrollment_fraction, std::uint64_t seed) {
  check_cover(features, labels);
  check_fraction(enrollment_fraction);

  std::map<std::string, std::vector<Index>> by_class;
  for (const auto& r : labels.records) by_class[r.phoneme].push_back(r.frame_index);

  std::mt19937_64 rng(seed);
  std::vector<std::string> names;
  std::vector<Vector> centroids;
  std::vector<std::pair<Index, std::size_t>> tests;  // frame, true class
  for (auto& [name, frames] : by_class) {
    std::shuffle(frames.begin(), frames.end(), rng);
    const Index n = static_cast<Index>(frames.size());
    const Index enroll = enrollment_count(n, enrollment_fraction);
    if (enroll < 1)
      throw DataError("phoneme class '" + name + "' has no enrollment frames");
    names.push_back(name);
    centroids.push_back(mean_row(features, std::span(frames).first(enroll)));
    for (Index i = enroll; i < n; ++i)
      tests.emplace_back(frames[static_cast<std::size_t>(i)], names.size() - 1);
  }

  std::vector<Index> correct(names.size(), 0), total(names.size(), 0);
  for (const auto& [frame, truth] : tests) {
    auto x = row_span(features, frame);
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double s = cosine_similarity(x, vec_span(centroids[c]));
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    ++total[truth];
    if (best == truth) ++correct[truth];
  }

  PhonemeResult result;
  Index hits = 0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    hits += correct[c];
    result.tested += total[c];
    result.per_class[names[c]] =
        static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  }
  result.accuracy = static_cast<double>(hits) / static_cast<double>(result.tested);
  return result;
}

TrialSet per_phoneme_speaker_trials(const Matrix& features,
                                    const LabelTrack& labels,
                                    double enrollment_fraction,
                                    std::uint64_t seed) {
  check_cover(features, labels);
  check_fraction(enrollment_fraction);

  std::map<std::string, std::map<std::string, std::vector<Index>>> cells;
  for (const auto& r : labels.records)
    cells[r.phoneme][r.speaker_id].push_back(r.frame_index);

  TrialSet set;
  set.grouping_key = "phoneme";
  set.enrollment_fraction = enrollment_fraction;
  set.seed = seed;
  std::mt19937_64 rng(seed);

  for (auto& [phoneme, speakers] : cells) {
    std::vector<Vector> centroids;
    std::vector<std::vector<Index>> test_frames;
    for (auto& [speaker, frames] : speakers) {
      if (frames.size() < 2) {
        set.skipped.push_back(phoneme + "/" + speaker + ": fewer than 2 frames");
        continue;
      }
      std::shuffle(frames.begin(), frames.end(), rng);
      const Index enroll =
          std::max<Index>(1, enrollment_count(static_cast<Index>(frames.size()),
                                              enrollment_fraction));
      centroids.push_back(mean_row(features, std::span(frames).first(enroll)));
      test_frames.emplace_back(frames.begin() + enroll, frames.end());
    }
    if (centroids.size() < 2) {
      set.skipped.push_back(phoneme + ": fewer than 2 eligible speakers");
      continue;
    }
    std::vector<Trial> group;
    for (std::size_t s = 0; s < test_frames.size(); ++s) {
      for (Index frame : test_frames[s]) {
        auto x = row_span(features, frame);
        for (std::size_t c = 0; c < centroids.size(); ++c)
          group.push_back({cosine_similarity(x, vec_span(centroids[c])), c == s});
      }
    }
    set.groups.push_back({phoneme, static_cast<Index>(centroids.size()),
                          static_cast<Index>(group.size()), compute_eer(group)});
    set.trials.insert(set.trials.end(), group.begin(), group.end());
  }
  if (set.trials.empty()) throw DataError("no eligible (phoneme, speaker) cells");
  return set;
}

AlignedStack align_world(const SynthWorld& world, Index k_neighbors) {
  const auto seen = world.seen();
  if (seen.size() < 2) throw DataError("align_world: need at least 2 seen speakers");
  FramePool anchor(world.speakers[seen[0]].id, world.speakers[seen[0]].features);
  std::vector<FramePool> others;
  for (std::size_t i = 1; i < seen.size(); ++i)
    others.emplace_back(world.speakers[seen[i]].id, world.speakers[seen[i]].features);
  return build_aligned_stack(anchor, others, k_neighbors);
}

Matrix true_speaker_transform(const SynthWorld& world, const Factorization& f,
                              const AlignedStack& stack, std::size_t j) {
  const std::size_t anchor = world.index_of(stack.anchor_id);
  const Matrix true_content = world.content_rows(anchor, stack.anchor_rows);
  const Matrix r = lstsq(true_content, content_of(f));
  return matmul(pinv(r), world.speaker_matrix(j));
}

namespace {

std::map<std::string, double> evaluate_point(const SynthWorld& world,
                                             const AlignedStack& stack,
                                             const Factorization& f,
                                             const ContentMapping& w,
                                             Index budget, std::uint64_t seed) {
  const auto unseen = world.unseen();
  const std::size_t target = unseen.front();
  const Matrix& x_t = world.speakers[target].features;
  std::vector<Matrix> utterances{x_t};
  const SpeakerTransform s_t = derive_speaker_transform(
      sample_frames(utterances, budget, seed), w, world.speakers[target].id);

  std::map<std::string, double> m;
  m["content_recovery_error"] = stack_reconstruction_error(f, stack);
  m["s_recovery_error"] =
      relative_error(s_t.s, true_speaker_transform(world, f, stack, target));
  m["self_conversion_error"] = relative_error(uscf_convert(x_t, w, s_t), x_t);
  if (unseen.size() >= 2) {
    const std::size_t source = unseen[1];
    std::vector<Index> frames(world.speakers[source].provenance.size());
    std::iota(frames.begin(), frames.end(), Index{0});
    const Matrix truth =
        matmul(world.content_rows(source, frames), world.speaker_matrix(target));
    m["conversion_error"] =
        relative_error(uscf_convert(world.speakers[source].features, w, s_t), truth);
  }
  return m;
}

std::string describe(const SweepConfig& c) {
  std::string values;
  for (Index v : c.values) values += (values.empty() ? "" : ",") + std::to_string(v);
  return std::string("param=") + (c.param == SweepParam::kRank ? "rank" : "frames") +
         " values=" + values + " rank=" + std::to_string(c.rank) +
         " frames=" + std::to_string(c.frame_budget) +
         " method=" + std::string(to_string(c.method)) +
         " k_neighbors=" + std::to_string(c.k_neighbors) +
         " seed=" + std::to_string(c.seed);
}

}  // namespace

EvalReport run_sweep(const SynthWorld& world, const SweepConfig& config) {
  if (config.values.empty()) throw DataError("run_sweep: no parameter values");
  if (world.unseen().empty())
    throw DataError("run_sweep: world needs at least one unseen speaker");

  std::vector<Index> values = config.values;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  EvalReport report;
  report.parameter = config.param == SweepParam::kRank ? "rank" : "frames";
  const std::string desc = describe(config);
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(desc)));
  const WorldParams& p = world.params;
  report.provenance = {
      {"config_hash", hash},
      {"config", desc},
      {"world", "rank=" + std::to_string(p.content_rank) + " dim=" +
                    std::to_string(p.dim) + " speakers=" + std::to_string(p.speakers) +
                    " extras=" + std::to_string(p.extras) + " beta=" +
                    format_double(p.beta) + " noise=" + format_double(p.noise) +
                    " seed=" + std::to_string(p.seed)}};

  const AlignedStack stack = align_world(world, config.k_neighbors);
  auto mapping_for = [&](const Factorization& f) {
    return derive_mapping(config.method, f, &stack);
  };

  if (config.param == SweepParam::kRank) {
    for (Index rank : values) {
      const Factorization f = factorize(stack, rank);
      const ContentMapping w = mapping_for(f);
      report.rows.push_back(
          {rank, evaluate_point(world, stack, f, w, config.frame_budget, config.seed)});
    }
  } else {
    const Factorization f = factorize(stack, config.rank);
    const ContentMapping w = mapping_for(f);
    for (Index budget : values)
      report.rows.push_back({budget, evaluate_point(world, stack, f, w, budget, config.seed)});
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  for (const auto& [k, v] : report.provenance) out += "# " + k + "=" + v + "\n";
  if (!report.metrics.empty()) {
    out += "metric\tvalue\n";
    for (const auto& [k, v] : report.metrics) out += k + "\t" + format_double(v) + "\n";
  }
  if (!report.rows.empty()) {
    std::vector<std::string> names;
    for (const auto& [k, v] : report.rows.front().metrics) names.push_back(k);
    out += report.parameter;
    for (const auto& n : names) out += "\t" + n;
    out += "\n";
    for (const auto& row : report.rows) {
      out += std::to_string(row.value);
      for (const auto& n : names) out += "\t" + format_double(row.metrics.at(n));
      out += "\n";
    }
  }
  return out;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  write_file_atomic(path, format_report(report));
}

}  // namespace uscf
