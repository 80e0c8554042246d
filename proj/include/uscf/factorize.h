// uscf/factorize.h

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

#ifndef USCF_FACTORIZE_H_
#define USCF_FACTORIZE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uscf/align.h"
#include "uscf/linalg.h"

namespace uscf {

inline constexpr Index kDefaultRank = 75;
inline constexpr std::array<Index, 5> kRankSweep{20, 30, 50, 75, 100};

/// Rank-r factorization X ~ U diag(sigma) [S_1 ... S_k] of an aligned
/// stack. Content is C = U diag(sigma); speaker j is reconstructed as
/// X_j ~ C S_j. The order of s_blocks is speaker_order, anchor first.
struct Factorization {
  Index rank = 0;
  Index dim = 0;
  std::vector<std::string> speaker_order;
  Matrix u;                     // n x r
  Vector sigma;                 // r, positive, non-increasing
  std::vector<Matrix> s_blocks; // k blocks of r x d

  Index speakers() const { return static_cast<Index>(speaker_order.size()); }
  Index frames() const { return u.rows(); }
  const std::string& anchor() const { return speaker_order.front(); }

  /// Position of a speaker in speaker_order; DataError if unknown.
  Index speaker_index(std::string_view speaker) const;
  const Matrix& block(std::string_view speaker) const;
};

Factorization factorize(const AlignedStack& stack, Index rank = kDefaultRank,
                        SvdMethod method = SvdMethod::kExact,
                        std::optional<std::uint64_t> seed = std::nullopt);

/// C = U diag(sigma).
Matrix content_of(const Factorization& f);

/// Closed-set conversion x_src pinv(S_src) S_tgt.
Matrix scf_convert(const Matrix& x_src, const Factorization& f,
                   std::string_view src, std::string_view tgt);

/// |X - C S|_F / |X|_F over the whole stack.
double stack_reconstruction_error(const Factorization& f,
                                  const AlignedStack& stack);

/// |X_j - C S_j|_F / |X_j|_F for block j.
double block_reconstruction_error(const Factorization& f,
                                  const AlignedStack& stack, Index j);

/// Short hex digest of rank, speaker order and singular values; identifies
/// the factorization a mapping was derived from.
std::string fingerprint(const Factorization& f);

/// Bundle layout: meta.tsv, u.fmat, sigma.fmat (1 x r), s_000.fmat ...
/// (one block per speaker, in speaker_order).
void save_factorization(const Factorization& f, const std::filesystem::path& dir);
Factorization load_factorization(const std::filesystem::path& dir);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace uscf

#endif  // USCF_FACTORIZE_H_
