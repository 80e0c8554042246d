// uscf/universal.h

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

#ifndef USCF_UNIVERSAL_H_
#define USCF_UNIVERSAL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "uscf/align.h"
#include "uscf/factorize.h"
#include "uscf/linalg.h"

namespace uscf {

/// Variants of the universal speech-to-content mapping W (d x r):
///   kW0  least squares of X_j W against the content C, all speakers pooled
///   kW1  least squares against U, with sigma factored back in
///   kW2  least-squares inverse of the speaker transforms, S_j W ~ I
///   kW3  pseudoinverse of one speaker's transform
enum class MappingMethod { kW0, kW1, kW2, kW3 };

std::string_view to_string(MappingMethod method);
/// Accepts "w0".."w3" (case-insensitive).
MappingMethod parse_mapping_method(std::string_view name);

struct ContentMapping {
  Matrix w;  // d x r
  MappingMethod method = MappingMethod::kW1;
  std::string source_fact_id;
  std::optional<std::string> w3_basis_speaker;

  Index dim() const { return w.rows(); }
  Index rank() const { return w.cols(); }
};

/// Reconstructs one speaker's features from content: X_m ~ C S_m.
struct SpeakerTransform {
  Matrix s;  // r x d
  std::string speaker_id;
  Index frames_used = 0;
  MappingMethod mapping_method = MappingMethod::kW1;
};

/// Target-speaker frame budget (10 s at 50 frames/s).
inline constexpr Index kDefaultFrameBudget = 500;
inline constexpr std::array<Index, 6> kFrameBudgetSweep{200,  500,  1000,
                                                        2000, 5000, 10000};

ContentMapping derive_w0(const Factorization& f, const AlignedStack& stack);
ContentMapping derive_w1(const Factorization& f, const AlignedStack& stack);
ContentMapping derive_w2(const Factorization& f);
ContentMapping derive_w3(const Factorization& f, std::string_view basis_speaker);

/// Dispatches on `method`. W0/W1 need the stack; W3 uses `basis_speaker`,
/// defaulting to the anchor.
ContentMapping derive_mapping(MappingMethod method, const Factorization& f,
                              const AlignedStack* stack,
                              std::optional<std::string> basis_speaker = {});

/// S_m = pinv(X_m W) X_m. Fewer frames than the rank is allowed but logs a
/// warning: the estimate is then rank deficient.
SpeakerTransform derive_speaker_transform(const Matrix& x_m,
                                          const ContentMapping& mapping,
                                          std::string speaker_id = {});

/// X W.
Matrix extract_content(const Matrix& x, const ContentMapping& mapping);

/// (X W) S_tgt.
Matrix uscf_convert(const Matrix& x_src, const ContentMapping& mapping,
                    const SpeakerTransform& target);

/// |S W - I|_F / sqrt(r): how far W is from inverting S.
double inversion_residual(const Matrix& s, const Matrix& w);

/// Concatenates utterances in a seeded random order and keeps the first
/// `budget` frames. Frames inside an utterance stay in file order.
Matrix sample_frames(std::span<const Matrix> utterances, Index budget,
                     std::uint64_t seed);

}  // namespace uscf

#endif  // USCF_UNIVERSAL_H_
