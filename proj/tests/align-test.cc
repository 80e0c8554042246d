// tests/align-test.cc

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
#include "uscf/align.h"
#include "uscf/error.h"
#include "uscf/parallel.h"

using namespace uscf;

TEST_CASE("knn indices match an exhaustive scan") {
  std::mt19937_64 rng(31);
  for (Index k : {1, 3, 8}) {
    const Matrix q = oracle::gaussian(60, 16, rng);
    const FramePool pool("p", oracle::gaussian(300, 16, rng));
    CHECK(knn_indices(q, pool, k) == oracle::brute_knn(q, pool.frames(), k));
  }
}

TEST_CASE("ties go to the lower pool index") {
  Matrix pool(4, 2);
  pool << 1, 0, 2, 0, 0, 1, 3, 0;
  const FramePool p("p", pool);
  Matrix q(1, 2);
  q << 5, 0;
  CHECK(knn_indices(q, p, 3) == std::vector<Index>{0, 1, 3});
}

TEST_CASE("k = 1 alignment returns actual pool frames") {
  std::mt19937_64 rng(32);
  const Matrix q = oracle::gaussian(20, 8, rng);
  const FramePool pool("p", oracle::gaussian(50, 8, rng));
  const Matrix m = knn_match(q, pool, 1);
  const auto idx = knn_indices(q, pool, 1);
  for (Index i = 0; i < q.rows(); ++i) CHECK(m.row(i) == pool.frames().row(idx[i]));
}

TEST_CASE("a pool aligned to itself is the identity") {
  std::mt19937_64 rng(33);
  const Matrix x = oracle::gaussian(40, 8, rng);
  const FramePool pool("p", x);
  CHECK(knn_match(x, pool, 1) == x);
}

TEST_CASE("silent frames are dropped from pools") {
  Matrix x(3, 2);
  x << 1, 0, 0, 0, 0, 1;
  const FramePool pool("p", x);
  CHECK(pool.size() == 2);
  CHECK(pool.source_rows() == std::vector<Index>{0, 2});
  CHECK_THROWS_AS(FramePool("z", Matrix::Zero(3, 2)), DataError);
}

TEST_CASE("aligned stack layout and validation") {
  std::mt19937_64 rng(34);
  const FramePool a("a", oracle::gaussian(30, 6, rng));
  const std::vector<FramePool> others{FramePool("b", oracle::gaussian(40, 6, rng)),
                                      FramePool("c", oracle::gaussian(35, 6, rng))};
  const AlignedStack s = build_aligned_stack(a, others, 2);
  CHECK(s.x.rows() == 30);
  CHECK(s.x.cols() == 18);
  CHECK(s.speaker_order == std::vector<std::string>{"a", "b", "c"});
  CHECK(s.block(0) == a.frames());
  CHECK(s.block(2) == knn_match(a.frames(), others[1], 2));

  const std::vector<FramePool> dup{FramePool("a", oracle::gaussian(5, 6, rng))};
  CHECK_THROWS_AS(build_aligned_stack(a, dup), DataError);
  const std::vector<FramePool> wrong{FramePool("d", oracle::gaussian(5, 7, rng))};
  CHECK_THROWS_AS(build_aligned_stack(a, wrong), DataError);
  CHECK_THROWS_AS(knn_indices(a.frames(), others[0], 41), DataError);
}

TEST_CASE("alignment is independent of the thread count") {
  std::mt19937_64 rng(35);
  const Matrix q = oracle::gaussian(200, 12, rng);
  const FramePool pool("p", oracle::gaussian(500, 12, rng));
  set_thread_count(1);
  const auto one = knn_indices(q, pool, 4);
  set_thread_count(3);
  const auto three = knn_indices(q, pool, 4);
  set_thread_count(0);
  CHECK(one == three);
}

TEST_CASE("stack save and load round trip") {
  std::mt19937_64 rng(36);
  const FramePool a("a", uscf::Matrix(oracle::gaussian(10, 4, rng).cast<float>().cast<double>()));
  const std::vector<FramePool> others{
      FramePool("b", Matrix(oracle::gaussian(12, 4, rng).cast<float>().cast<double>()))};
  const AlignedStack s = build_aligned_stack(a, others);
  const auto dir = std::filesystem::temp_directory_path() / "uscf-align-test-stack";
  save_stack(s, dir);
  const AlignedStack t = load_stack(dir);
  CHECK(t.x == s.x);
  CHECK(t.anchor_rows == s.anchor_rows);
  CHECK(t.speaker_order == s.speaker_order);
  CHECK(t.k_neighbors == s.k_neighbors);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cosine picks direction, not magnitude") {
  Matrix pool(2, 2);
  pool << 0, 1, 2, 0;
  Matrix q(1, 2);
  q << 1, 0;
  const Matrix m = knn_match(q, FramePool("p", pool), 1);
  CHECK(m(0, 0) == 2.0);
  CHECK(m(0, 1) == 0.0);
}

TEST_CASE("200 queries against 1000 pool frames with k = 4") {
  std::mt19937_64 rng(37);
  const Matrix q = oracle::gaussian(200, 24, rng);
  const FramePool pool("p", oracle::gaussian(1000, 24, rng));
  CHECK(knn_indices(q, pool, 4) == oracle::brute_knn(q, pool.frames(), 4));
}

TEST_CASE("anchor aligned against a copy of itself") {
  std::mt19937_64 rng(38);
  const Matrix x = oracle::gaussian(25, 5, rng);
  const std::vector<FramePool> others{FramePool("b", x)};
  const AlignedStack s = build_aligned_stack(FramePool("a", x), others);
  CHECK(s.block(0) == x);
  CHECK(s.block(1) == x);
}

TEST_CASE("stack construction against a brute-force build") {
  std::mt19937_64 rng(3);
  const FramePool anchor("a", oracle::gaussian(100, 8, rng));
  const std::vector<FramePool> others{FramePool("b", oracle::gaussian(150, 8, rng)),
                                      FramePool("c", oracle::gaussian(200, 8, rng))};
  const AlignedStack s = build_aligned_stack(anchor, others, 1);
  for (std::size_t j = 0; j < others.size(); ++j) {
    const auto idx = oracle::brute_knn(anchor.frames(), others[j].frames(), 1);
    for (Index i = 0; i < 100; ++i)
      CHECK(s.block(static_cast<Index>(j) + 1).row(i) ==
            others[j].frames().row(idx[static_cast<std::size_t>(i)]));
  }
}
