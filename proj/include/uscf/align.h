// uscf/align.h

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

#ifndef USCF_ALIGN_H_
#define USCF_ALIGN_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uscf/linalg.h"

namespace uscf {

/// Frames whose Euclidean norm is below this are treated as silence or
/// padding and never take part in matching.
inline constexpr double kSilenceNorm = 1e-8;

/// Returns the rows of `frames` with norm >= kSilenceNorm; `kept` receives
/// their original row indices.
Matrix drop_silent_frames(const Matrix& frames, std::vector<Index>* kept);

/// One speaker's frames with cached row norms, silent frames removed.
class FramePool {
 public:
  FramePool(std::string speaker_id, const Matrix& frames);

  const std::string& speaker_id() const { return speaker_id_; }
  const Matrix& frames() const { return frames_; }
  const Vector& norms() const { return norms_; }
  /// Original row index (before silence filtering) of pool row i.
  const std::vector<Index>& source_rows() const { return source_rows_; }
  Index size() const { return frames_.rows(); }
  Index dim() const { return frames_.cols(); }

 private:
  std::string speaker_id_;
  Matrix frames_;
  Vector norms_;
  std::vector<Index> source_rows_;
};

/// For each query row, the pool rows with the k highest cosine similarities,
/// best first. Ties go to the lower pool index. The result is row-major
/// (queries.rows() x k_neighbors). Exact search.
std::vector<Index> knn_indices(const Matrix& queries, const FramePool& pool,
                               Index k_neighbors = 1);

/// Row i is the mean of the k_neighbors pool rows closest (by cosine) to
/// query row i.
Matrix knn_match(const Matrix& queries, const FramePool& pool,
                 Index k_neighbors = 1);

/// Content-aligned frames of k speakers stacked along the feature axis:
/// columns [j*d, (j+1)*d) hold speaker_order[j]; block 0 is the anchor.
struct AlignedStack {
  std::string anchor_id;
  std::vector<std::string> speaker_order;
  Matrix x;
  Index dim = 0;
  Index k_neighbors = 1;
  /// Anchor rows (pre-filtering indices) that form the stack rows.
  std::vector<Index> anchor_rows;

  Index frames() const { return x.rows(); }
  Index speakers() const { return static_cast<Index>(speaker_order.size()); }
  Matrix block(Index j) const { return x.middleCols(j * dim, dim); }
};

AlignedStack build_aligned_stack(const FramePool& anchor,
                                 std::span<const FramePool> others,
                                 Index k_neighbors = 1);

/// Directory layout: x.fmat, anchor_rows.fmat and meta.tsv.
void save_stack(const AlignedStack& stack, const std::filesystem::path& dir);
AlignedStack load_stack(const std::filesystem::path& dir);

}  // namespace uscf

#endif  // USCF_ALIGN_H_
