// src/universal.cc

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

#include "uscf/universal.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <vector>

#include "uscf/error.h"

namespace uscf {

namespace {

void check_consistent(const Factorization& f, const AlignedStack& stack) {
  if (stack.frames() != f.frames() || stack.dim != f.dim ||
      stack.speaker_order != f.speaker_order) {
    throw DataError(
        "stack and factorization disagree on frames, dim or speaker order");
  }
}

Matrix pooled_design(const AlignedStack& stack) {
  std::vector<Matrix> blocks;
  for (Index j = 0; j < stack.speakers(); ++j) blocks.push_back(stack.block(j));
  return vstack(blocks);
}

Matrix repeated(const Matrix& m, Index times) {
  std::vector<Matrix> blocks(static_cast<std::size_t>(times), m);
  return vstack(blocks);
}

ContentMapping make_mapping(Matrix w, MappingMethod method,
                            const Factorization& f) {
  require_finite(w, "content mapping");
  return {std::move(w), method, fingerprint(f), std::nullopt};
}

}  // namespace

std::string_view to_string(MappingMethod method) {
  switch (method) {
    case MappingMethod::kW0: return "w0";
    case MappingMethod::kW1: return "w1";
    case MappingMethod::kW2: return "w2";
    case MappingMethod::kW3: return "w3";
  }
  return "?";
}

MappingMethod parse_mapping_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "w0") return MappingMethod::kW0;
  if (lower == "w1") return MappingMethod::kW1;
  if (lower == "w2") return MappingMethod::kW2;
  if (lower == "w3") return MappingMethod::kW3;
  throw DataError("unknown mapping method '" + std::string(name) + "'");
}

ContentMapping derive_w0(const Factorization& f, const AlignedStack& stack) {
  check_consistent(f, stack);
  return make_mapping(
      lstsq(pooled_design(stack), repeated(content_of(f), f.speakers())),
      MappingMethod::kW0, f);
}

ContentMapping derive_w1(const Factorization& f, const AlignedStack& stack) {
  check_consistent(f, stack);
  const double cutoff =
      singular_value_cutoff(f.sigma.maxCoeff(), f.frames(), f.dim * f.speakers());
  if (!(f.sigma.minCoeff() > cutoff))
    throw NumericalError("derive_w1: singular sigma");
  // Solve against U so every content dimension weighs the same, then put
  // the singular values back: X_j W1 diag(1/sigma) ~ U.
  Matrix v = lstsq(pooled_design(stack), repeated(f.u, f.speakers()));
  return make_mapping(scale_columns(v, f.sigma), MappingMethod::kW1, f);
}

ContentMapping derive_w2(const Factorization& f) {
  const Matrix design = vstack(f.s_blocks);
  const Matrix identity = Matrix::Identity(f.rank, f.rank);
  return make_mapping(lstsq(design, repeated(identity, f.speakers())),
                      MappingMethod::kW2, f);
}

ContentMapping derive_w3(const Factorization& f, std::string_view basis_speaker) {
  ContentMapping m =
      make_mapping(pinv(f.block(basis_speaker)), MappingMethod::kW3, f);
  m.w3_basis_speaker = std::string(basis_speaker);
  return m;
}

ContentMapping derive_mapping(MappingMethod method, const Factorization& f,
                              const AlignedStack* stack,
                              std::optional<std::string> basis_speaker) {
  auto need_stack = [&]() -> const AlignedStack& {
    if (!stack)
      throw DataError(std::string(to_string(method)) + " requires the aligned stack");
    return *stack;
  };
  switch (method) {
    case MappingMethod::kW0: return derive_w0(f, need_stack());
    case MappingMethod::kW1: return derive_w1(f, need_stack());
    case MappingMethod::kW2: return derive_w2(f);
    case MappingMethod::kW3: return derive_w3(f, basis_speaker.value_or(f.anchor()));
  }
  throw DataError("unknown mapping method");
}

SpeakerTransform derive_speaker_transform(const Matrix& x_m,
                                          const ContentMapping& mapping,
                                          std::string speaker_id) {
  if (x_m.rows() == 0) throw DataError("derive_speaker_transform: empty input");
  if (x_m.cols() != mapping.dim()) {
    throw DataError("derive_speaker_transform: features have dim " +
                    std::to_string(x_m.cols()) + ", mapping expects " +
                    std::to_string(mapping.dim()));
  }
  require_finite(x_m, "derive_speaker_transform");
  if (x_m.rows() < mapping.rank()) {
    std::cerr << "WARNING (uscf) derive_speaker_transform: only " << x_m.rows()
              << " frames for rank " << mapping.rank()
              << "; the speaker transform will be rank deficient\n";
  }
  const Matrix content = matmul(x_m, mapping.w);
  return {matmul(pinv(content), x_m), std::move(speaker_id), x_m.rows(),
          mapping.method};
}

Matrix extract_content(const Matrix& x, const ContentMapping& mapping) {
  if (x.cols() != mapping.dim()) {
    throw DataError("extract_content: features have dim " +
                    std::to_string(x.cols()) + ", mapping expects " +
                    std::to_string(mapping.dim()));
  }
  require_finite(x, "extract_content");
  return matmul(x, mapping.w);
}

Matrix uscf_convert(const Matrix& x_src, const ContentMapping& mapping,
                    const SpeakerTransform& target) {
  if (target.s.rows() != mapping.rank() || target.s.cols() != mapping.dim()) {
    throw DataError("uscf_convert: speaker transform is " +
                    std::to_string(target.s.rows()) + "x" +
                    std::to_string(target.s.cols()) + ", mapping is " +
                    std::to_string(mapping.dim()) + "x" +
                    std::to_string(mapping.rank()));
  }
  return matmul(extract_content(x_src, mapping), target.s);
}

double inversion_residual(const Matrix& s, const Matrix& w) {
  const Matrix p = matmul(s, w);
  if (p.rows() != p.cols()) throw DataError("inversion_residual: S W not square");
  const Matrix identity = Matrix::Identity(p.rows(), p.cols());
  return (p - identity).norm() / std::sqrt(static_cast<double>(p.rows()));
}

Matrix sample_frames(std::span<const Matrix> utterances, Index budget,
                     std::uint64_t seed) {
  if (utterances.empty()) throw DataError("sample_frames: no utterances");
  if (budget < 1) throw DataError("sample_frames: budget must be positive");
  const Index d = utterances.front().cols();
  for (const Matrix& u : utterances)
    if (u.cols() != d) throw DataError("sample_frames: dim mismatch");

  std::vector<std::size_t> order(utterances.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Index total = 0;
  for (const Matrix& u : utterances) total += u.rows();
  Matrix out(std::min(budget, total), d);
  Index at = 0;
  for (std::size_t i : order) {
    if (at == out.rows()) break;
    const Matrix& u = utterances[i];
    const Index take = std::min(u.rows(), out.rows() - at);
    out.middleRows(at, take) = u.topRows(take);
    at += take;
  }
  return out;
}

}  // namespace uscf
