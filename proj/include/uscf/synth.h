// uscf/synth.h

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

#ifndef USCF_SYNTH_H_
#define USCF_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uscf/feature_store.h"
#include "uscf/linalg.h"

namespace uscf {

/// Parameters of a synthetic world in which every speaker is an exact
/// linear map of shared content:
///
///   X_j = C_j (T + beta * B_j) + noise
///
/// T (r x d) has orthonormal rows; each timbre block B_j (r x d) has
/// orthonormal rows orthogonal to T. In strict mode the timbre blocks of all
/// speakers are also mutually orthogonal, which requires
/// d - r >= (speakers + extras) * r. C_j holds rows of the shared content
/// matrix: a permutation of all content rows for seen speakers, a permutation
/// followed by resampled rows for unseen ("extra") speakers.
struct WorldParams {
  Index content_rank = 16;
  Index dim = 256;
  Index speakers = 5;
  Index extras = 3;
  Index frames = 2000;
  /// Frames per unseen speaker; 0 means `frames`.
  Index extra_frames = 0;
  Index clusters = 12;
  double beta = 0.5;
  double noise = 0.01;
  /// Standard deviation of content rows around their cluster centroid.
  double cluster_jitter = 0.3;
  bool strict = true;
  std::uint64_t seed = 42;
};

struct FrameOrigin {
  Index content_row = 0;
  Index cluster = 0;
};

struct SynthSpeaker {
  std::string id;
  bool seen = true;
  Matrix timbre;    // r x d
  Matrix features;  // frames x d, float32-representable
  std::vector<FrameOrigin> provenance;
};

struct SynthWorld {
  WorldParams params;
  Matrix c_star;                    // n x r
  std::vector<Index> row_cluster;   // cluster id of each content row
  Matrix t_content;                 // r x d
  std::vector<SynthSpeaker> speakers;  // seen speakers first, then extras
  /// Largest |B_i B_j^T| entry over speaker pairs.
  double timbre_overlap = 0.0;

  /// T + beta * B_j: the exact content-to-feature map of speaker j.
  Matrix speaker_matrix(std::size_t j) const;
  /// Noise-free features of speaker j.
  Matrix clean_features(std::size_t j) const;
  /// Content rows (of c_star) behind the given frames of speaker j.
  Matrix content_rows(std::size_t j, std::span<const Index> frames) const;

  std::vector<std::size_t> seen() const;
  std::vector<std::size_t> unseen() const;
  std::size_t index_of(const std::string& id) const;

  /// Labels (speaker, phoneme cluster) for one speaker, frame indices local.
  LabelTrack labels(std::size_t j) const;
  /// All speakers concatenated in order, with matching labels.
  Matrix all_features() const;
  LabelTrack all_labels() const;
};

std::string phoneme_name(Index cluster);

SynthWorld generate_world(const WorldParams& params);

/// Writes world.meta, manifest.tsv (seen speakers, anchor first),
/// unseen.tsv, features/<id>.fmat, labels/<id>.tsv, all.fmat, all.tsv and
/// the ground truth under truth/.
void emit_world(const SynthWorld& world, const std::filesystem::path& out_dir);
SynthWorld load_world(const std::filesystem::path& dir);

}  // namespace uscf

#endif  // USCF_SYNTH_H_
