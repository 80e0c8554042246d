// tests/factorize-test.cc

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

#include <random>

#include "doctest.h"
#include "oracles.h"
#include "uscf/error.h"
#include "uscf/eval.h"
#include "uscf/factorize.h"
#include "uscf/synth.h"

using namespace uscf;

namespace {

WorldParams small_world(double noise = 0.0) {
  WorldParams p;
  p.content_rank = 6;
  p.dim = 64;
  p.speakers = 3;
  p.extras = 2;
  p.frames = 300;
  p.noise = noise;
  p.seed = 5;
  return p;
}

}  // namespace

TEST_CASE("noiseless world factorizes exactly at the content rank") {
  const SynthWorld w = generate_world(small_world());
  const AlignedStack stack = align_world(w);
  const Factorization f = factorize(stack, 6);
  CHECK(stack_reconstruction_error(f, stack) < 1e-6);
  for (Index j = 0; j < f.speakers(); ++j)
    CHECK(block_reconstruction_error(f, stack, j) < 1e-6);
  CHECK(f.s_blocks.size() == 3);
  CHECK(f.s_blocks[0].rows() == 6);
  CHECK(f.s_blocks[0].cols() == 64);
}

TEST_CASE("reconstruction error equals the discarded singular value tail") {
  std::mt19937_64 rng(41);
  AlignedStack stack;
  stack.anchor_id = "a";
  stack.speaker_order = {"a", "b"};
  stack.dim = 15;
  stack.x = oracle::gaussian(50, 30, rng);
  const oracle::Svd ref = oracle::jacobi_svd(stack.x);
  for (Index r : {5, 12, 20}) {
    const Factorization f = factorize(stack, r);
    const double tail = std::sqrt(ref.sigma.tail(30 - r).squaredNorm()) / ref.sigma.norm();
    CHECK(stack_reconstruction_error(f, stack) == doctest::Approx(tail).epsilon(1e-9));
  }
}

TEST_CASE("closed-set conversion reaches the target speaker") {
  const SynthWorld w = generate_world(small_world());
  const AlignedStack stack = align_world(w);
  const Factorization f = factorize(stack, 6);
  const Matrix y = scf_convert(stack.block(1), f, "spk01", "spk02");
  CHECK(relative_error(y, stack.block(2)) < 1e-6);
  CHECK(relative_error(scf_convert(stack.block(0), f, "spk00", "spk00"), stack.block(0)) < 1e-6);
  CHECK_THROWS_AS(scf_convert(stack.block(0), f, "spk00", "zzz"), DataError);
}

TEST_CASE("rank checks") {
  const SynthWorld w = generate_world(small_world());
  const AlignedStack stack = align_world(w);
  CHECK_THROWS_WITH_AS(factorize(stack, 301), doctest::Contains("rank out of range"),
                       NumericalError);
  // Rank beyond the noiseless content rank leaves zero singular values.
  CHECK_THROWS_WITH_AS(factorize(stack, 10), doctest::Contains("rank deficient"),
                       NumericalError);
}

TEST_CASE("factorization is deterministic and survives a save/load cycle") {
  const SynthWorld w = generate_world(small_world(0.01));
  const AlignedStack stack = align_world(w);
  const Factorization f = factorize(stack, 6), g = factorize(stack, 6);
  CHECK(f.u == g.u);
  CHECK(fingerprint(f) == fingerprint(g));

  const auto dir = std::filesystem::temp_directory_path() / "uscf-fact-test";
  save_factorization(f, dir);
  const Factorization h = load_factorization(dir);
  CHECK(h.speaker_order == f.speaker_order);
  CHECK(h.rank == 6);
  CHECK(relative_error(h.u, f.u) < 1e-6);
  CHECK(relative_error(h.s_blocks[2], f.s_blocks[2]) < 1e-6);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("alignment follows the shared content rows") {
  WorldParams p = small_world();
  p.beta = 0.5;
  const SynthWorld w = generate_world(p);
  const FramePool anchor("spk00", w.speakers[0].features);
  for (std::size_t j = 1; j < 3; ++j) {
    const FramePool pool(w.speakers[j].id, w.speakers[j].features);
    const auto idx = knn_indices(anchor.frames(), pool, 1);
    for (Index i = 0; i < anchor.size(); ++i)
      CHECK(w.speakers[j].provenance[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]
                .content_row == w.speakers[0].provenance[static_cast<std::size_t>(i)].content_row);
  }
}

TEST_CASE("noisy per-speaker error matches the optimal rank-r projection") {
  WorldParams p;
  p.content_rank = 16;
  p.dim = 64;
  p.speakers = 5;
  p.extras = 0;
  p.frames = 2000;
  p.noise = 0.01;
  p.strict = false;
  const SynthWorld w = generate_world(p);
  const AlignedStack stack = align_world(w);
  const Factorization f = factorize(stack, 16);
  // Leading right singular vectors from the Gram matrix via the Jacobi oracle.
  const Matrix gram = stack.x.transpose() * stack.x;
  const oracle::Svd g = oracle::jacobi_svd(gram);
  const Matrix v = g.v.leftCols(16);
  const Matrix best = stack.x * v * v.transpose();
  for (Index j = 0; j < 5; ++j) {
    const double ref = relative_error(best.middleCols(j * 64, 64), stack.block(j));
    CHECK(std::abs(block_reconstruction_error(f, stack, j) - ref) <= 1e-5);
  }
}

TEST_CASE("content is U scaled by the singular values") {
  const SynthWorld w = generate_world(small_world(0.01));
  const AlignedStack stack = align_world(w);
  Factorization f = factorize(stack, 6);
  const Matrix c = content_of(f);
  Matrix direct(c.rows(), c.cols());
  for (Index i = 0; i < c.rows(); ++i)
    for (Index k = 0; k < c.cols(); ++k) direct(i, k) = f.u(i, k) * f.sigma(k);
  CHECK(c == direct);
  for (Index k = 0; k < c.cols(); ++k)
    CHECK(c.col(k).norm() == doctest::Approx(f.sigma(k)).epsilon(1e-12));
  f.sigma.setOnes();
  CHECK(content_of(f) == f.u);
}

TEST_CASE("conversion of an empty input and the default rank") {
  const SynthWorld w = generate_world(small_world());
  const AlignedStack stack = align_world(w);
  const Factorization f = factorize(stack, 6);
  const Matrix y = scf_convert(Matrix(0, 64), f, "spk00", "spk01");
  CHECK(y.rows() == 0);
  CHECK(y.cols() == 64);
  CHECK(kDefaultRank == 75);
  const auto dir = std::filesystem::temp_directory_path() / "uscf-fact-meta-test";
  save_factorization(f, dir);
  CHECK(read_file(dir / "meta.tsv").find("rank\t6") != std::string::npos);
  std::filesystem::remove_all(dir);
}
