// src/align.cc

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

#include "uscf/align.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "uscf/error.h"
#include "uscf/feature_store.h"
#include "uscf/parallel.h"

namespace uscf {

namespace {

struct Candidate {
  double score;
  Index index;
};

// Keeps the best k candidates sorted best-first. Candidates arrive in
// increasing index order, so an equal score never displaces an earlier one.
void offer(std::vector<Candidate>& best, Index k, Candidate c) {
  if (static_cast<Index>(best.size()) == k && !(c.score > best.back().score))
    return;
  auto pos = std::find_if(best.begin(), best.end(), [&](const Candidate& b) {
    return c.score > b.score;
  });
  best.insert(pos, c);
  if (static_cast<Index>(best.size()) > k) best.pop_back();
}

}  // namespace

Matrix drop_silent_frames(const Matrix& frames, std::vector<Index>* kept) {
  std::vector<Index> rows;
  for (Index i = 0; i < frames.rows(); ++i) {
    auto r = row_span(frames, i);
    if (std::sqrt(dot(r, r)) >= kSilenceNorm) rows.push_back(i);
  }
  Matrix out = take_rows(frames, rows);
  if (kept) *kept = std::move(rows);
  return out;
}

FramePool::FramePool(std::string speaker_id, const Matrix& frames)
    : speaker_id_(std::move(speaker_id)) {
  require_finite(frames, "frame pool " + speaker_id_);
  frames_ = drop_silent_frames(frames, &source_rows_);
  if (frames_.rows() == 0)
    throw DataError("frame pool " + speaker_id_ + ": empty pool");
  norms_.resize(frames_.rows());
  for (Index i = 0; i < frames_.rows(); ++i) {
    auto r = row_span(frames_, i);
    norms_(i) = std::sqrt(dot(r, r));
  }
}

std::vector<Index> knn_indices(const Matrix& queries, const FramePool& pool,
                               Index k_neighbors) {
  if (queries.cols() != pool.dim()) {
    throw DataError("knn_match: dim mismatch (" +
                    std::to_string(queries.cols()) + " vs " +
                    std::to_string(pool.dim()) + ")");
  }
  if (k_neighbors < 1 || k_neighbors > pool.size())
    throw DataError("knn_match: k_neighbors must lie in [1, pool size]");
  require_finite(queries, "knn_match");

  const Index n = queries.rows();
  std::vector<Index> out(static_cast<std::size_t>(n * k_neighbors));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                std::size_t end) {
    std::vector<Candidate> best;
    best.reserve(static_cast<std::size_t>(k_neighbors) + 1);
    for (std::size_t q = begin; q < end; ++q) {
      auto query = row_span(queries, static_cast<Index>(q));
      const double qn = std::sqrt(dot(query, query));
      best.clear();
      for (Index p = 0; p < pool.size(); ++p) {
        const double denom = qn * pool.norms()(p);
        const double score =
            denom < 1e-12 ? 0.0 : dot(query, row_span(pool.frames(), p)) / denom;
        offer(best, k_neighbors, {score, p});
      }
      for (Index j = 0; j < k_neighbors; ++j)
        out[q * k_neighbors + j] = best[static_cast<std::size_t>(j)].index;
    }
  });
  return out;
}

Matrix knn_match(const Matrix& queries, const FramePool& pool,
                 Index k_neighbors) {
  const auto idx = knn_indices(queries, pool, k_neighbors);
  Matrix out = Matrix::Zero(queries.rows(), pool.dim());
  std::vector<Index> chosen(static_cast<std::size_t>(k_neighbors));
  for (Index q = 0; q < queries.rows(); ++q) {
    std::copy_n(idx.begin() + q * k_neighbors, k_neighbors, chosen.begin());
    // Summation in pool order keeps the mean independent of the ranking.
    std::sort(chosen.begin(), chosen.end());
    for (Index p : chosen) out.row(q) += pool.frames().row(p);
    out.row(q) /= static_cast<double>(k_neighbors);
  }
  return out;
}

AlignedStack build_aligned_stack(const FramePool& anchor,
                                 std::span<const FramePool> others,
                                 Index k_neighbors) {
  if (others.empty())
    throw DataError("build_aligned_stack: need at least one other speaker");
  std::set<std::string> ids{anchor.speaker_id()};
  for (const auto& pool : others) {
    if (pool.dim() != anchor.dim())
      throw DataError("build_aligned_stack: pool " + pool.speaker_id() +
                      " has a different feature dimension");
    if (!ids.insert(pool.speaker_id()).second)
      throw DataError("build_aligned_stack: duplicate speaker " +
                      pool.speaker_id());
  }

  const Index d = anchor.dim();
  const Index k = static_cast<Index>(others.size()) + 1;
  AlignedStack stack;
  stack.anchor_id = anchor.speaker_id();
  stack.speaker_order.push_back(anchor.speaker_id());
  stack.dim = d;
  stack.k_neighbors = k_neighbors;
  stack.anchor_rows = anchor.source_rows();
  stack.x.resize(anchor.size(), k * d);
  stack.x.leftCols(d) = anchor.frames();
  for (Index j = 1; j < k; ++j) {
    const FramePool& pool = others[static_cast<std::size_t>(j - 1)];
    stack.speaker_order.push_back(pool.speaker_id());
    stack.x.middleCols(j * d, d) = knn_match(anchor.frames(), pool, k_neighbors);
  }
  return stack;
}

void save_stack(const AlignedStack& stack, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Matrix rows(static_cast<Index>(stack.anchor_rows.size()), 1);
  for (std::size_t i = 0; i < stack.anchor_rows.size(); ++i)
    rows(static_cast<Index>(i), 0) = static_cast<double>(stack.anchor_rows[i]);
  std::string order;
  for (const auto& s : stack.speaker_order) order += (order.empty() ? "" : " ") + s;
  write_fmat(dir / "x.fmat", stack.x);
  write_fmat(dir / "anchor_rows.fmat", rows);
  write_meta(dir / "meta.tsv", {{"format", "uscf-stack 1"},
                                {"anchor", stack.anchor_id},
                                {"speakers", std::to_string(stack.speakers())},
                                {"dim", std::to_string(stack.dim)},
                                {"frames", std::to_string(stack.frames())},
                                {"k_neighbors", std::to_string(stack.k_neighbors)},
                                {"speaker_order", order}});
}


AlignedStack load_stack(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.tsv";
  const auto meta = read_meta(meta_path);
  AlignedStack stack;
  stack.anchor_id = meta_value(meta, "anchor", meta_path);
  stack.dim = parse_count(meta_value(meta, "dim", meta_path), meta_path);
  stack.k_neighbors =
      parse_count(meta_value(meta, "k_neighbors", meta_path), meta_path);
  stack.speaker_order = split_words(meta_value(meta, "speaker_order", meta_path));
  const Index k = parse_count(meta_value(meta, "speakers", meta_path), meta_path);
  stack.x = read_fmat(dir / "x.fmat");
  const Matrix rows = read_fmat(dir / "anchor_rows.fmat");
  for (Index i = 0; i < rows.rows(); ++i)
    stack.anchor_rows.push_back(static_cast<Index>(rows(i, 0)));

  if (k != stack.speakers() || stack.speaker_order.empty() ||
      stack.speaker_order.front() != stack.anchor_id ||
      stack.x.cols() != k * stack.dim ||
      static_cast<Index>(stack.anchor_rows.size()) != stack.x.rows()) {
    throw DataError(dir.string() + ": inconsistent stack bundle");
  }
  return stack;
}

}  // namespace uscf
