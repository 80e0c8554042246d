// tests/feature-store-test.cc

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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "doctest.h"
#include "oracles.h"
#include "uscf/error.h"
#include "uscf/feature_store.h"

using namespace uscf;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("uscf-fs-test-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string expect_data_error(const std::string& bytes) {
  try {
    decode_fmat(bytes, "buf");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("FMAT header layout") {
  Matrix m(1, 1);
  m(0, 0) = 1.5;
  const std::string b = encode_fmat(m, 50);
  REQUIRE(b.size() == 32);
  CHECK(b.substr(0, 4) == "USCF");
  CHECK(static_cast<unsigned char>(b[4]) == 1);
  CHECK(static_cast<unsigned char>(b[5]) == 1);
  std::uint32_t rate;
  std::memcpy(&rate, b.data() + 8, 4);
  CHECK(rate == 50);
  std::uint64_t rows, cols;
  std::memcpy(&rows, b.data() + 12, 8);
  std::memcpy(&cols, b.data() + 20, 8);
  CHECK(rows == 1);
  CHECK(cols == 1);
  float v;
  std::memcpy(&v, b.data() + 28, 4);
  CHECK(v == 1.5f);
}

TEST_CASE("FMAT round trip is bit exact for float-representable matrices") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(0, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = round_to_float(oracle::gaussian(dim(rng), dim(rng), rng, 100.0));
    std::uint32_t rate = 0;
    const Matrix back = decode_fmat(encode_fmat(m, 25), "buf", &rate);
    CHECK(rate == 25);
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.cols() == m.cols());
    CHECK(back == m);
    CHECK(encode_fmat(back, 25) == encode_fmat(m, 25));
  }
  const fs::path p = scratch("rt.fmat");
  const Matrix m = round_to_float(oracle::gaussian(7, 5, rng));
  write_fmat(p, m, 50);
  const FeatureFile f = read_feature_file(p);
  CHECK(f.matrix == m);
  CHECK(f.frame_rate == 50);
}

TEST_CASE("FMAT decoding rejects malformed input") {
  const std::string good = encode_fmat(Matrix::Ones(2, 2));
  CHECK(expect_data_error(good.substr(0, 10)).find("truncated header") != std::string::npos);
  std::string bad = good;
  bad[0] = 'X';
  CHECK(expect_data_error(bad).find("magic") != std::string::npos);
  bad = good;
  bad[4] = 9;
  CHECK(expect_data_error(bad).find("version") != std::string::npos);
  bad = good;
  bad[5] = 2;
  CHECK(expect_data_error(bad).find("dtype") != std::string::npos);
  CHECK(expect_data_error(good.substr(0, good.size() - 1)).find("truncated") !=
        std::string::npos);
  CHECK(!expect_data_error(good + "x").empty());
  bad = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bad.data() + 28, &nan, 4);
  CHECK(expect_data_error(bad).find("non-finite") != std::string::npos);
  CHECK_THROWS_AS(read_fmat(scratch("nope.fmat")), DataError);
}

TEST_CASE("writing non-finite or float-overflowing values fails") {
  Matrix m = Matrix::Ones(1, 2);
  m(0, 1) = 1e300;
  CHECK_THROWS_AS(encode_fmat(m), DataError);
  m(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(write_fmat(scratch("inf.fmat"), m), DataError);
}

TEST_CASE("frames and seconds at 50 frames per second") {
  CHECK(frames_for_seconds(10.0) == 500);
  CHECK(seconds_for_frames(200) == doctest::Approx(4.0));
}

TEST_CASE("manifest parsing") {
  const fs::path dir = scratch("man");
  fs::create_directories(dir);
  write_fmat(dir / "a.fmat", Matrix::Ones(2, 3));
  write_fmat(dir / "b.fmat", Matrix::Ones(2, 3));
  {
    std::ofstream out(dir / "m.tsv");
    out << "# comment\nspkA\ta.fmat\nspkB\tb.fmat\nspkA\tb.fmat\n";
  }
  const Manifest m = load_manifest(dir / "m.tsv");
  CHECK(m.speakers() == std::vector<std::string>{"spkA", "spkB"});
  CHECK(m.files_for("spkA").size() == 2);
  CHECK(m.files_for("spkA")[0] == dir / "a.fmat");

  { std::ofstream out(dir / "bad.tsv"); out << "spkA\ta.fmat\nonlyone\n"; }
  CHECK_THROWS_WITH_AS(load_manifest(dir / "bad.tsv"), doctest::Contains("line 2"), DataError);
  { std::ofstream out(dir / "missing.tsv"); out << "spkA\tzzz.fmat\n"; }
  CHECK_THROWS_AS(load_manifest(dir / "missing.tsv"), DataError);
  { std::ofstream out(dir / "empty.tsv"); out << "# nothing\n"; }
  CHECK_THROWS_AS(load_manifest(dir / "empty.tsv"), DataError);
}

TEST_CASE("label tracks") {
  const fs::path p = scratch("labels.tsv");
  LabelTrack t;
  t.inventory = {"aa", "iy"};
  t.records = {{0, "s1", "aa"}, {1, "s1", "iy"}, {2, "s2", "aa"}};
  write_labels(p, t);
  const LabelTrack back = load_labels(p);
  CHECK(back.inventory == t.inventory);
  REQUIRE(back.records.size() == 3);
  CHECK(back.records[2].speaker_id == "s2");

  { std::ofstream out(p); out << "0\ts\taa\n0\ts\taa\n"; }
  CHECK_THROWS_AS(load_labels(p), DataError);
  { std::ofstream out(p); out << "#inventory\taa\n0\ts\tzz\n"; }
  CHECK_THROWS_AS(load_labels(p), DataError);
  { std::ofstream out(p); out << "1\ts\taa\n0\ts\taa\n"; }
  CHECK_THROWS_AS(load_labels(p), DataError);
}

TEST_CASE("format_double reads back exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17})
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("minimal and small FMAT files") {
  Matrix one(1, 1);
  one(0, 0) = 0.5;
  const fs::path p = scratch("one.fmat");
  write_fmat(p, one);
  CHECK(fs::file_size(p) == kFmatHeaderBytes + 4);
  CHECK(read_fmat(p) == one);

  Matrix m(3, 2);
  m << 1, -2, 0.25, 4, 5e-3, 6;
  const Matrix rounded = round_to_float(m);
  write_fmat(p, rounded);
  CHECK(read_fmat(p) == rounded);

  std::string bytes = encode_fmat(one);
  bytes.replace(0, 4, "XSCF");
  CHECK(expect_data_error(bytes).find("bad magic") != std::string::npos);
}

TEST_CASE("single-line manifest and two-record labels") {
  const fs::path dir = scratch("single");
  fs::create_directories(dir);
  write_fmat(dir / "a.fmat", Matrix::Ones(1, 2));
  { std::ofstream out(dir / "m.tsv"); out << "spk1\ta.fmat"; }
  CHECK(load_manifest(dir / "m.tsv").entries.size() == 1);
  { std::ofstream out(dir / "empty.tsv"); }
  CHECK_THROWS_WITH_AS(load_manifest(dir / "empty.tsv"), doctest::Contains("empty manifest"),
                       DataError);
  { std::ofstream out(dir / "l.tsv"); out << "0\tspk1\tAA\n1\tspk1\tAE"; }
  const LabelTrack t = load_labels(dir / "l.tsv");
  REQUIRE(t.records.size() == 2);
  CHECK(t.records[1].phoneme == "AE");
  CHECK(t.inventory == std::vector<std::string>{"AA", "AE"});
}
