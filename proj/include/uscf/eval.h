// uscf/eval.h

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

#ifndef USCF_EVAL_H_
#define USCF_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uscf/align.h"
#include "uscf/factorize.h"
#include "uscf/feature_store.h"
#include "uscf/linalg.h"
#include "uscf/synth.h"
#include "uscf/universal.h"

namespace uscf {

struct Trial {
  double score = 0.0;
  bool is_target = false;
};

struct TrialGroup {
  std::string key;
  Index speakers = 0;
  Index trials = 0;
  double eer = 0.0;
};

struct TrialSet {
  std::vector<Trial> trials;
  std::string grouping_key;
  double enrollment_fraction = 0.5;
  std::uint64_t seed = 0;
  /// Per-group breakdown (diagnostics; the pooled EER is the headline).
  std::vector<TrialGroup> groups;
  /// Cells or groups left out, with the reason.
  std::vector<std::string> skipped;
};

/// Equal error rate. Thresholds sweep every distinct score plus +inf; at
/// threshold t, FAR = share of non-targets scoring >= t and FRR = share of
/// targets scoring < t. The result interpolates linearly between the two
/// adjacent thresholds where FAR - FRR changes sign.
double compute_eer(std::span<const Trial> trials);
double compute_eer(const TrialSet& trials);

struct PhonemeResult {
  double accuracy = 0.0;
  Index tested = 0;
  std::map<std::string, double> per_class;
};

/// Nearest-centroid phoneme classification by cosine. Each phoneme's frames
/// are split (seeded shuffle) into enrollment and test parts; the reference
/// embedding is the mean of the enrollment part. Ties go to the
/// lexicographically smallest label.
PhonemeResult phoneme_classify(const Matrix& features, const LabelTrack& labels,
                               double enrollment_fraction = 0.5,
                               std::uint64_t seed = 0);

/// Speaker trials within phoneme groups: every (phoneme, speaker) cell with
/// at least two frames is split into enrollment and test halves, and every
/// test frame is scored by cosine against each speaker centroid of its
/// phoneme group. Trials are pooled across phonemes.
TrialSet per_phoneme_speaker_trials(const Matrix& features,
                                    const LabelTrack& labels,
                                    double enrollment_fraction = 0.5,
                                    std::uint64_t seed = 0);

enum class SweepParam { kRank, kFrames };

struct SweepConfig {
  SweepParam param = SweepParam::kRank;
  std::vector<Index> values;
  Index rank = kDefaultRank;
  Index frame_budget = kDefaultFrameBudget;
  MappingMethod method = MappingMethod::kW1;
  Index k_neighbors = 1;
  std::uint64_t seed = 0;
};

struct SweepRow {
  Index value = 0;
  std::map<std::string, double> metrics;
};

struct EvalReport {
  std::string parameter;
  std::map<std::string, double> metrics;
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::string, std::string>> provenance;
};

/// Aligns the world's seen speakers with the first one as anchor.
AlignedStack align_world(const SynthWorld& world, Index k_neighbors = 1);

/// Ground-truth speaker transform of world speaker j in the coordinates of
/// factorization f: pinv(R) (T + beta B_j), where R maps true content rows of
/// the anchor frames onto C.
Matrix true_speaker_transform(const SynthWorld& world, const Factorization& f,
                              const AlignedStack& stack, std::size_t j);

/// Runs the open-set pipeline on a synthetic world for every value of the
/// swept parameter and records feature-space proxies per row:
///   content_recovery_error  |X - C S|_F / |X|_F on the aligned stack
///   s_recovery_error        |S_t - S_t*|_F / |S_t*|_F, t = first unseen speaker
///   self_conversion_error   |X_t W S_t - X_t|_F / |X_t|_F
///   conversion_error        second unseen speaker converted to t, against the
///                           noise-free ground truth (only with >= 2 unseen)
EvalReport run_sweep(const SynthWorld& world, const SweepConfig& config);

/// TSV: '#' provenance lines (config hash first), a header row, then rows.
std::string format_report(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace uscf

#endif  // USCF_EVAL_H_
