// src/factorize.cc

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

#include "uscf/factorize.h"

#include <cstdio>

#include "uscf/error.h"
#include "uscf/feature_store.h"

namespace uscf {

Index Factorization::speaker_index(std::string_view speaker) const {
  for (std::size_t i = 0; i < speaker_order.size(); ++i)
    if (speaker_order[i] == speaker) return static_cast<Index>(i);
  throw DataError("unknown speaker id '" + std::string(speaker) + "'");
}

const Matrix& Factorization::block(std::string_view speaker) const {
  return s_blocks[static_cast<std::size_t>(speaker_index(speaker))];
}

Factorization factorize(const AlignedStack& stack, Index rank, SvdMethod method,
                        std::optional<std::uint64_t> seed) {
  if (stack.speakers() < 1 || stack.x.cols() != stack.speakers() * stack.dim)
    throw DataError("factorize: malformed aligned stack");
  SvdResult svd = truncated_svd(stack.x, rank, method, seed);

  const double cutoff =
      singular_value_cutoff(svd.sigma(0), stack.x.rows(), stack.x.cols());
  if (!(svd.sigma(rank - 1) > cutoff)) {
    throw NumericalError("effective rank deficient: sigma_" +
                         std::to_string(rank) + " = " +
                         format_double(svd.sigma(rank - 1)) +
                         " is at or below the cutoff " + format_double(cutoff));
  }

  Factorization f;
  f.rank = rank;
  f.dim = stack.dim;
  f.speaker_order = stack.speaker_order;
  f.u = std::move(svd.u);
  f.sigma = std::move(svd.sigma);
  for (Index j = 0; j < stack.speakers(); ++j)
    f.s_blocks.push_back(svd.vt.middleCols(j * stack.dim, stack.dim));
  return f;
}

Matrix content_of(const Factorization& f) { return scale_columns(f.u, f.sigma); }

Matrix scf_convert(const Matrix& x_src, const Factorization& f,
                   std::string_view src, std::string_view tgt) {
  const Matrix& s_src = f.block(src);
  const Matrix& s_tgt = f.block(tgt);
  if (x_src.cols() != f.dim) {
    throw DataError("scf_convert: input has dim " + std::to_string(x_src.cols()) +
                    ", factorization has dim " + std::to_string(f.dim));
  }
  require_finite(x_src, "scf_convert");
  return matmul(x_src, matmul(pinv(s_src), s_tgt));
}

double stack_reconstruction_error(const Factorization& f,
                                  const AlignedStack& stack) {
  Matrix s(f.rank, f.dim * f.speakers());
  for (Index j = 0; j < f.speakers(); ++j)
    s.middleCols(j * f.dim, f.dim) = f.s_blocks[static_cast<std::size_t>(j)];
  return relative_error(matmul(content_of(f), s), stack.x);
}

double block_reconstruction_error(const Factorization& f,
                                  const AlignedStack& stack, Index j) {
  return relative_error(
      matmul(content_of(f), f.s_blocks[static_cast<std::size_t>(j)]),
      stack.block(j));
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint(const Factorization& f) {
  std::string key = std::to_string(f.rank) + ":" + std::to_string(f.dim);
  for (const auto& s : f.speaker_order) key += ":" + s;
  for (Index i = 0; i < f.sigma.size(); ++i) key += ":" + format_double(f.sigma(i));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(key)));
  return buf;
}

namespace {
std::string block_name(Index j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s_%03lld.fmat", static_cast<long long>(j));
  return buf;
}
}  // namespace

void save_factorization(const Factorization& f,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string order;
  for (const auto& s : f.speaker_order) order += (order.empty() ? "" : " ") + s;
  write_fmat(dir / "u.fmat", f.u);
  write_fmat(dir / "sigma.fmat", Matrix(f.sigma.transpose()));
  for (Index j = 0; j < f.speakers(); ++j)
    write_fmat(dir / block_name(j), f.s_blocks[static_cast<std::size_t>(j)]);
  write_meta(dir / "meta.tsv", {{"format", "uscf-factorization 1"},
                                {"rank", std::to_string(f.rank)},
                                {"speakers", std::to_string(f.speakers())},
                                {"dim", std::to_string(f.dim)},
                                {"frames", std::to_string(f.frames())},
                                {"anchor", f.anchor()},
                                {"speaker_order", order}});
}

Factorization load_factorization(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.tsv";
  const auto meta = read_meta(meta_path);
  Factorization f;
  f.rank = parse_count(meta_value(meta, "rank", meta_path), meta_path);
  f.dim = parse_count(meta_value(meta, "dim", meta_path), meta_path);
  f.speaker_order = split_words(meta_value(meta, "speaker_order", meta_path));
  const Index k = parse_count(meta_value(meta, "speakers", meta_path), meta_path);
  const std::string& anchor = meta_value(meta, "anchor", meta_path);
  f.u = read_fmat(dir / "u.fmat");
  const Matrix sigma = read_fmat(dir / "sigma.fmat");
  f.sigma = sigma.transpose();
  for (Index j = 0; j < k; ++j) f.s_blocks.push_back(read_fmat(dir / block_name(j)));

  bool ok = k == f.speakers() && k >= 1 && f.speaker_order.front() == anchor &&
            f.u.cols() == f.rank && sigma.rows() == 1 && sigma.cols() == f.rank;
  for (const auto& s : f.s_blocks) ok = ok && s.rows() == f.rank && s.cols() == f.dim;
  if (!ok) throw DataError(dir.string() + ": inconsistent factorization bundle");
  return f;
}

}  // namespace uscf
