// src/linalg.cc

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

#include "uscf/linalg.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "uscf/error.h"
#include "uscf/parallel.h"

namespace uscf {

namespace {

using ColMatrix = Eigen::MatrixXd;

void apply_sign_convention(SvdResult& svd) {
  for (Index c = 0; c < svd.u.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index r = 0; r < svd.u.rows(); ++r) {
      double v = std::abs(svd.u(r, c));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (svd.u.rows() > 0 && svd.u(best, c) < 0.0) {
      svd.u.col(c) *= -1.0;
      svd.vt.row(c) *= -1.0;
    }
  }
}

SvdResult leading(const SvdResult& full, Index rank) {
  return {full.u.leftCols(rank), full.sigma.head(rank), full.vt.topRows(rank)};
}

ColMatrix orthonormal_basis(const ColMatrix& y) {
  Eigen::HouseholderQR<ColMatrix> qr(y);
  return qr.householderQ() * ColMatrix::Identity(y.rows(), y.cols());
}

SvdResult randomized_svd(const Matrix& a, Index rank, std::uint64_t seed) {
  const Index width =
      std::min(rank + kRandomizedOversampling, std::min(a.rows(), a.cols()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ColMatrix omega(a.cols(), width);
  for (Index j = 0; j < width; ++j)
    for (Index i = 0; i < a.cols(); ++i) omega(i, j) = gauss(rng);

  ColMatrix q = orthonormal_basis(a * omega);
  for (int it = 0; it < kRandomizedPowerIterations; ++it) {
    ColMatrix z = orthonormal_basis(a.transpose() * q);
    q = orthonormal_basis(a * z);
  }
  ColMatrix b = q.transpose() * a;
  Eigen::BDCSVD<ColMatrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out;
  out.u = (q * svd.matrixU()).leftCols(rank);
  out.sigma = svd.singularValues().head(rank);
  out.vt = svd.matrixV().leftCols(rank).transpose();
  apply_sign_convention(out);
  return out;
}

}  // namespace

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite())
    throw DataError(std::string(what) + ": non-finite input");
}

SvdResult thin_svd(const Matrix& a) {
  require_finite(a, "svd");
  const Index k = std::min(a.rows(), a.cols());
  if (k == 0) {
    return {Matrix(a.rows(), 0), Vector(0), Matrix(0, a.cols())};
  }
  Eigen::BDCSVD<ColMatrix> svd(ColMatrix(a),
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svd: no convergence");
  SvdResult out{svd.matrixU(), svd.singularValues(),
                svd.matrixV().transpose()};
  apply_sign_convention(out);
  return out;
}

SvdResult truncated_svd(const Matrix& a, Index rank, SvdMethod method,
                        std::optional<std::uint64_t> seed) {
  require_finite(a, "truncated_svd");
  if (rank < 1 || rank > std::min(a.rows(), a.cols())) {
    throw NumericalError("rank out of range: r=" + std::to_string(rank) +
                         " for a " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " matrix");
  }
  if (method == SvdMethod::kRandomized) {
    if (!seed) throw DataError("truncated_svd: randomized method needs a seed");
    return randomized_svd(a, rank, *seed);
  }
  return leading(thin_svd(a), rank);
}

double singular_value_cutoff(double sigma_max, Index rows, Index cols,
                             double rel_cutoff) {
  return rel_cutoff * sigma_max * static_cast<double>(std::max(rows, cols));
}

Matrix pinv(const Matrix& a, double rel_cutoff) {
  if (!(rel_cutoff > 0.0 && rel_cutoff < 1.0))
    throw DataError("pinv: rel_cutoff must lie in (0, 1)");
  require_finite(a, "pinv");
  SvdResult svd = thin_svd(a);
  if (svd.sigma.size() == 0 || svd.sigma(0) == 0.0)
    return Matrix::Zero(a.cols(), a.rows());

  const double cutoff =
      singular_value_cutoff(svd.sigma(0), a.rows(), a.cols(), rel_cutoff);
  Index kept = 0;
  while (kept < svd.sigma.size() && svd.sigma(kept) > cutoff) ++kept;

  // pinv = V diag(1/sigma) U^T over the retained triplets.
  Matrix v_scaled = svd.vt.topRows(kept).transpose();
  for (Index j = 0; j < kept; ++j) v_scaled.col(j) /= svd.sigma(j);
  Matrix ut = svd.u.leftCols(kept).transpose();
  return matmul(v_scaled, ut);
}

Matrix lstsq(const Matrix& a, const Matrix& b, double rel_cutoff) {
  if (a.rows() != b.rows()) {
    throw DataError("lstsq: row mismatch (" + std::to_string(a.rows()) +
                    " vs " + std::to_string(b.rows()) + ")");
  }
  require_finite(b, "lstsq");
  return matmul(pinv(a, rel_cutoff), b);
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) s0 += x[i] * y[i];
  return (s0 + s1) + (s2 + s3);
}

double cosine_similarity(std::span<const double> x,
                         std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("cosine_similarity: length mismatch (" +
                    std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
  const double nx = std::sqrt(dot(x, x));
  const double ny = std::sqrt(dot(y, y));
  if (nx < 1e-12 || ny < 1e-12) return 0.0;
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DataError("matmul: inner dimension mismatch (" +
                    std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + ")");
  }
  const Matrix bt = b.transpose();
  Matrix out(a.rows(), b.cols());
  parallel_for(static_cast<std::size_t>(a.rows()),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t i = begin; i < end; ++i) {
                   auto row = row_span(a, static_cast<Index>(i));
                   for (Index j = 0; j < bt.rows(); ++j)
                     out(static_cast<Index>(i), j) = dot(row, row_span(bt, j));
                 }
               });
  return out;
}

Matrix scale_columns(const Matrix& m, const Vector& d) {
  if (d.size() != m.cols()) throw DataError("scale_columns: size mismatch");
  Matrix out = m;
  for (Index j = 0; j < m.cols(); ++j) out.col(j) *= d(j);
  return out;
}

Matrix vstack(std::span<const Matrix> blocks) {
  if (blocks.empty()) return Matrix(0, 0);
  Index rows = 0;
  const Index cols = blocks.front().cols();
  for (const Matrix& b : blocks) {
    if (b.cols() != cols) throw DataError("vstack: column mismatch");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Matrix& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

Matrix take_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows())
      throw DataError("take_rows: row index out of range");
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  }
  return out;
}

double relative_error(const Matrix& approx, const Matrix& reference) {
  if (approx.rows() != reference.rows() || approx.cols() != reference.cols())
    throw DataError("relative_error: shape mismatch");
  const double denom = reference.norm();
  const double num = (approx - reference).norm();
  return denom > 0.0 ? num / denom : num;
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace uscf
