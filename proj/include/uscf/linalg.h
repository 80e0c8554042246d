// uscf/linalg.h

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

#ifndef USCF_LINALG_H_
#define USCF_LINALG_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace uscf {

/// Dense row-major matrix. Every public operation keeps entries finite.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class SvdMethod { kExact, kRandomized };

/// Leading singular triplets of a matrix.
///
/// Columns of `u` are orthonormal, `sigma` is non-increasing and
/// non-negative, rows of `vt` are orthonormal. In every column of `u` the
/// entry of largest magnitude is non-negative; on ties the lowest row index
/// decides. The sign rule makes results reproducible byte-for-byte.
struct SvdResult {
  Matrix u;      // rows x r
  Vector sigma;  // r
  Matrix vt;     // r x cols
};

/// Oversampling and power iterations of the randomized range finder.
inline constexpr Index kRandomizedOversampling = 10;
inline constexpr int kRandomizedPowerIterations = 4;

/// Default relative singular-value cutoff for pinv and lstsq. A singular
/// value is treated as zero when it is at or below
/// rel_cutoff * sigma_max * max(rows, cols).
inline constexpr double kDefaultRelCutoff = 1e-10;

/// Rank-r truncated SVD. Throws NumericalError if r is outside
/// [1, min(rows, cols)], DataError on non-finite input or when the
/// randomized method is requested without a seed.
SvdResult truncated_svd(const Matrix& a, Index rank,
                        SvdMethod method = SvdMethod::kExact,
                        std::optional<std::uint64_t> seed = std::nullopt);

/// Thin SVD with all min(rows, cols) triplets.
SvdResult thin_svd(const Matrix& a);

/// Threshold below which singular values of an rows x cols matrix count as
/// zero.
double singular_value_cutoff(double sigma_max, Index rows, Index cols,
                             double rel_cutoff = kDefaultRelCutoff);

/// Moore-Penrose pseudoinverse via SVD.
Matrix pinv(const Matrix& a, double rel_cutoff = kDefaultRelCutoff);

/// Minimum-norm least-squares solution of a * x = b, computed as
/// pinv(a) * b. Each output column depends only on the same column of b.
Matrix lstsq(const Matrix& a, const Matrix& b,
             double rel_cutoff = kDefaultRelCutoff);

/// Inner product accumulated in double with a fixed summation order.
double dot(std::span<const double> x, std::span<const double> y);

/// x.y / (|x| |y|), clamped to [-1, 1]; 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// Matrix product in which every output entry is an independent dot(), so
/// results do not depend on shapes of neighbouring columns or on the thread
/// count.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Scales column j of m by d[j].
Matrix scale_columns(const Matrix& m, const Vector& d);

/// Vertical concatenation.
Matrix vstack(std::span<const Matrix> blocks);

/// Selects rows of m in the given order.
Matrix take_rows(const Matrix& m, std::span<const Index> rows);

/// Throws DataError naming `what` if m has a NaN or infinite entry.
void require_finite(const Matrix& m, std::string_view what);

/// Row span helper for contiguous row-major storage.
inline std::span<const double> row_span(const Matrix& m, Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// |approx - reference|_F / |reference|_F (absolute error when the reference
/// is zero).
double relative_error(const Matrix& approx, const Matrix& reference);

/// Largest absolute entry; 0 for an empty matrix.
double max_abs(const Matrix& m);

}  // namespace uscf

#endif  // USCF_LINALG_H_
