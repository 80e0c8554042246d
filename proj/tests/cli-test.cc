// tests/cli-test.cc

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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "uscf/cli.h"
#include "uscf/feature_store.h"
#include "uscf/synth.h"

using namespace uscf;

namespace {

const fs::path kWork = fs::temp_directory_path() / "uscf-cli-test";

// Runs the uscf binary with a shell command line; stderr goes to err.txt.
int run_tool(const std::string& args) {
  const std::string cmd = "cd " + kWork.string() + " && " USCF_BINARY " " + args +
                          " >out.txt 2>err.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& name) { return read_file(kWork / name); }

struct Workdir {
  Workdir() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Workdir w;
  CHECK(run_tool("") == 1);
  CHECK(run_tool("frobnicate") == 1);
  CHECK(run_tool("align --manifest m.tsv --out s --bogus") == 1);
  CHECK(slurp("err.txt").find("bogus") != std::string::npos);
  CHECK(run_tool("derive-w --fact f --out w.fmat --method w9") == 1);
  CHECK(run_tool("--help") == 0);
}

TEST_CASE("data errors exit with 2") {
  Workdir w;
  CHECK(run_tool("extract-content --w missing.fmat --in x.fmat --out c.fmat") == 2);
  CHECK(slurp("err.txt").find("error:") != std::string::npos);
  CHECK(!fs::exists(kWork / "c.fmat"));
}

TEST_CASE("end-to-end pipeline on a noiseless world") {
  Workdir w;
  REQUIRE(run_tool("simulate --rank 8 --dim 128 --speakers 4 --extras 2 --frames 600 "
                "--beta 0.5 --noise 0 --seed 7 --out world") == 0);
  const std::string err = slurp("err.txt");
  CHECK(err.find("# command=simulate") != std::string::npos);
  CHECK(err.find("# beta=0.5") != std::string::npos);

  REQUIRE(run_tool("align --manifest world/manifest.tsv --k-neighbors 1 --out stack") == 0);
  REQUIRE(run_tool("factorize --stack stack --rank 8 --out fact") == 0);
  CHECK(run_tool("factorize --stack stack --rank 2000 --out bad") == 3);
  CHECK(slurp("err.txt").find("rank out of range") != std::string::npos);
  CHECK(run_tool("factorize --stack stack --rank 12 --out bad") == 3);

  REQUIRE(run_tool("derive-w --fact fact --stack stack --method w1 --out w.fmat") == 0);
  CHECK(run_tool("derive-w --fact fact --method w0 --out w0.fmat") == 2);
  REQUIRE(run_tool("derive-w --fact fact --method w3 --w3-average-runs 4 --seed 1 --out w3.fmat") == 0);
  CHECK(slurp("err.txt").find("w3 spread over 4 runs") != std::string::npos);

  REQUIRE(run_tool("derive-s --features world/features/new00.fmat --w w.fmat --frames 500 "
                "--seed 0 --out s.fmat") == 0);
  REQUIRE(run_tool("convert --mode uscf --w w.fmat --s s.fmat --in world/features/new01.fmat "
                "--out y.fmat") == 0);

  const SynthWorld world = load_world(kWork / "world");
  const std::size_t tgt = world.index_of("new00"), src = world.index_of("new01");
  std::vector<Index> frames(600);
  for (Index i = 0; i < 600; ++i) frames[static_cast<std::size_t>(i)] = i;
  const Matrix truth = world.content_rows(src, frames) * world.speaker_matrix(tgt);
  CHECK(relative_error(read_fmat(kWork / "y.fmat"), truth) <= 1e-3);

  REQUIRE(run_tool("convert --mode scf --fact fact --src spk01 --tgt spk02 "
               "--in world/features/spk01.fmat --out z.fmat") == 0);
  const Matrix z_truth = world.content_rows(1, frames) * world.speaker_matrix(2);
  CHECK(relative_error(read_fmat(kWork / "z.fmat"), z_truth) <= 1e-3);

  REQUIRE(run_tool("extract-content --w w.fmat --in world/all.fmat --out c.fmat") == 0);
  REQUIRE(run_tool("eval phoneme --features c.fmat --labels world/all.tsv --seed 0 "
               "--report ph.tsv") == 0);
  CHECK(slurp("ph.tsv").find("phoneme_accuracy\t") != std::string::npos);
  REQUIRE(run_tool("eval speaker-eer --features world/all.fmat --labels world/all.tsv") == 0);
  CHECK(slurp("out.txt").find("speaker_eer\t") != std::string::npos);

  REQUIRE(run_tool("sweep --world world --param rank --values 4,8 --frames 300 "
               "--report sweep.tsv") == 0);
  const std::string sweep = slurp("sweep.tsv");
  CHECK(sweep.rfind("# config_hash=", 0) == 0);
  CHECK(sweep.find("\nrank\t") != std::string::npos);
}

TEST_CASE("thread count comes from the flag or the environment") {
  Workdir w;
  REQUIRE(run_tool("--threads 3 simulate --rank 2 --dim 20 --speakers 2 --extras 1 "
               "--frames 30 --out world") == 0);
  CHECK(slurp("err.txt").find("# threads=3") != std::string::npos);
  REQUIRE(run_tool("simulate --rank 2 --dim 20 --speakers 2 --extras 1 --frames 30 "
               "--out world2") == 0);
  const std::string cmd = "cd " + kWork.string() + " && USCF_THREADS=2 " USCF_BINARY
                          " simulate --rank 2 --dim 20 --speakers 2 --extras 1 "
                          "--frames 30 --out world3 2>err.txt";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp("err.txt").find("# threads=2") != std::string::npos);
}

TEST_CASE("in-process invocation") {
  Workdir w;
  const fs::path out = kWork / "inproc";
  CHECK(run_cli({"uscf", "simulate", "--rank", "2", "--dim", "20", "--speakers", "2",
                 "--extras", "1", "--frames", "30", "--out", out.string()}) == kExitOk);
  CHECK(fs::exists(out / "features" / "spk00.fmat"));
  CHECK(run_cli({"uscf", "nope"}) == kExitUsage);
}
