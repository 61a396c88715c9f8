// Copyright 2026 the expmem authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "expmem/metrics.hpp"
#include "expmem/store_io.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace expmem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + EXPMEM_CLI + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

MetricsRow row(std::int64_t it, const std::string& task, double reward_std) {
  MetricsRow r;
  r.iteration = it;
  r.task_id = task;
  r.lambda_none = 1.0;
  r.n_none = 4;
  r.sr_none = 0.25;
  r.mean_reward = 0.3;
  r.reward_std = reward_std;
  return r;
}

}  // namespace

TEST_CASE("train writes its artifacts and reruns are byte-identical") {
  const fs::path dir = expmem::testing::scratch_dir("cli_train");
  const std::string common = "--set run.iterations=5 --set world.n_tasks=3 --seed 4";
  const Run a = run_cli("train " + common + " -o " + quoted(dir / "a"), dir);
  REQUIRE_MESSAGE(a.code == 0, a.err);
  for (const char* f : {"metrics.csv", "store.json", "policy.json", "config.txt"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  CHECK(a.out.find("sampler uimem, seed 4, 5 iterations, 3 tasks") != std::string::npos);
  const Run b = run_cli("train " + common + " -o " + quoted(dir / "b"), dir);
  REQUIRE(b.code == 0);
  CHECK(read_text_file(dir / "a" / "metrics.csv") == read_text_file(dir / "b" / "metrics.csv"));
  CHECK(read_text_file(dir / "a" / "store.json") == read_text_file(dir / "b" / "store.json"));
  CHECK(read_metrics(dir / "a" / "metrics.csv").size() == 15);

  const Run inspect = run_cli("inspect -s " + quoted(dir / "a" / "store.json"), dir);
  CHECK(inspect.code == 0);
  CHECK(inspect.out.find("== workflows (by UCB score) ==") != std::string::npos);
  CHECK(inspect.out.find("== skills (by key) ==") != std::string::npos);
  CHECK(inspect.out.find("== diagnoses (most recent first) ==") != std::string::npos);

  const Run summary = run_cli("metrics " + quoted(dir / "a"), dir);
  CHECK(summary.code == 0);
  CHECK(summary.out.find("first 50 iterations") != std::string::npos);
}

TEST_CASE("config errors exit with code 2") {
  const fs::path dir = expmem::testing::scratch_dir("cli_config");
  Run r = run_cli("train --set run.bogus=1 -o " + quoted(dir / "x"), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown config key 'run.bogus'") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x"));
  CHECK(run_cli("train --sampler ppo -o " + quoted(dir / "x"), dir).code == 2);
  CHECK(run_cli("train -c " + quoted(dir / "missing.cfg"), dir).code == 2);
  CHECK(run_cli("frobnicate", dir).code == 2);
  CHECK(run_cli("metrics " + quoted(dir) + " -w 0", dir).code == 2);
}

TEST_CASE("retrieve") {
  const fs::path dir = expmem::testing::scratch_dir("cli_retrieve");
  save_store(expmem::testing::markor_store(), dir / "store.json");
  save_store(ExperienceStore{}, dir / "empty.json");

  Run r = run_cli("retrieve -s " + quoted(dir / "store.json") + " \"" +
                      expmem::testing::kMarkorInstruction + "\" -l weak",
                  dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("matched: true") != std::string::npos);
  CHECK(r.out.find("step 2 [T2] Tap Rename Icon: Tap the 'A' icon to open rename options.") !=
        std::string::npos);
  CHECK(r.out.find("NOTE:") == std::string::npos);

  r = run_cli("retrieve -s " + quoted(dir / "store.json") + " \"zqx wvu\"", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("NOTE: no template matched") != std::string::npos);
  CHECK(r.out.find("matched: false") != std::string::npos);

  CHECK(run_cli("retrieve -s " + quoted(dir / "empty.json") + " \"anything\"", dir).code == 4);
  r = run_cli("retrieve -s " + quoted(dir / "empty.json") + " \"anything\" -l none", dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("level: none") != std::string::npos);
  CHECK(run_cli("retrieve -s " + quoted(dir / "store.json") + " x -l loud", dir).code == 2);
  CHECK(run_cli("retrieve -s " + quoted(dir / "missing.json") + " x", dir).code == 3);
}

TEST_CASE("metrics validation and summaries") {
  const fs::path dir = expmem::testing::scratch_dir("cli_metrics");

  SUBCASE("header only is a schema error") {
    write_text_file(dir / "metrics.csv", std::string(kMetricsHeader) + "\n");
    CHECK(run_cli("metrics " + quoted(dir), dir).code == 5);
  }
  SUBCASE("wrong header is a schema error") {
    write_text_file(dir / "metrics.csv", "iteration,task\n1,a\n");
    CHECK(run_cli("metrics " + quoted(dir / "metrics.csv"), dir).code == 5);
  }
  SUBCASE("constant-reward groups report zero spread") {
    std::vector<MetricsRow> rows;
    for (int it = 1; it <= 3; ++it) rows.push_back(row(it, "a", 0.0));
    write_metrics(dir / "metrics.csv", rows);
    const Run r = run_cli("metrics " + quoted(dir), dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("mean intra-group reward std 0.0000") != std::string::npos);
  }
  SUBCASE("one success in four reports the population spread") {
    // Rewards [1, 0, 0, 0]: mean 0.25, variance (0.5625 + 3 * 0.0625) / 4.
    const double sd = std::sqrt((0.5625 + 3 * 0.0625) / 4.0);
    std::vector<MetricsRow> rows;
    for (int it = 1; it <= 4; ++it) {
      rows.push_back(row(it, "a", sd));
      rows.push_back(row(it, "b", sd));
    }
    write_metrics(dir / "metrics.csv", rows);
    const Run r = run_cli("metrics " + quoted(dir) + " -w 2", dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("first 2 iterations: mean intra-group reward std 0.4330") !=
          std::string::npos);
    CHECK(r.out.find("last 2 iterations: unguided success rate 0.2500") != std::string::npos);
  }
}

TEST_CASE("world export") {
  const fs::path dir = expmem::testing::scratch_dir("cli_world");
  const Run r = run_cli("world --seed 2 --tasks 3 -o " + quoted(dir / "w.json"), dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "w.json"));
  // A saved world can drive training.
  const Run t = run_cli("train --set world.file=" + (dir / "w.json").string() +
                            " --set run.iterations=2 -o " + quoted(dir / "run"),
                        dir);
  CHECK_MESSAGE(t.code == 0, t.err);
  CHECK(run_cli("world --tasks 0", dir).code == 2);
}
