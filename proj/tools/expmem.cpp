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

// expmem command-line tool: train, retrieve, inspect, metrics, world.
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime error, 4 empty memory
// on a guided retrieval, 5 metrics schema error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "expmem/config.hpp"
#include "expmem/error.hpp"
#include "expmem/http_backend.hpp"
#include "expmem/metrics.hpp"
#include "expmem/retrieval.hpp"
#include "expmem/store_io.hpp"
#include "expmem/trainer.hpp"
#include "expmem/world.hpp"

namespace fs = std::filesystem;
using namespace expmem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitEmptyMemory = 4;
constexpr int kExitSchema = 5;

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string sampler;
  std::string seed;
  std::string out;
};

SimWorld make_world(const RunConfig& cfg) {
  SimWorld world = cfg.world_file.empty() ? build_world(cfg.world_seed, cfg.n_tasks)
                                          : load_world(cfg.world_file);
  for (auto& task : world.tasks) task.horizon = cfg.horizon;
  try {
    validate_world(world);
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(std::string("world.horizon: ") + e.what());
  }
  return world;
}

int cmd_train(const TrainArgs& args) {
  RunConfig cfg;
  try {
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    for (const auto& o : args.overrides) cfg.apply_override(o);
    if (!args.sampler.empty()) cfg.set("run.sampler", args.sampler);
    if (!args.seed.empty()) cfg.set("run.seed", args.seed);
    if (!args.out.empty()) cfg.set("run.output_dir", args.out);
    cfg.validate();
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoFailure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  SimWorld world;
  std::unique_ptr<LlmClient> client;
  std::unique_ptr<StateJudge> judge;
  std::unique_ptr<MatchBackend> match;
  std::unique_ptr<ExtractionBackend> extraction;
  std::unique_ptr<AbstractionBackend> abstraction;
  try {
    world = make_world(cfg);
    if (cfg.backend == BackendKind::Oracle) {
      judge = std::make_unique<OracleJudge>();
    } else if (cfg.backend == BackendKind::Http) {
      client = std::make_unique<LlmClient>(LlmEndpoint::from_env(cfg.backend_model));
      judge = std::make_unique<HttpJudge>(*client);
      match = std::make_unique<HttpMatchBackend>(*client);
      extraction = std::make_unique<HttpExtractionBackend>(*client);
      abstraction = std::make_unique<HttpAbstractionBackend>(*client);
    }
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoFailure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  TrainBackends backends;
  backends.judge = judge.get();
  backends.match = match.get();
  backends.extraction = extraction.get();
  backends.abstraction = abstraction.get();

  const TrainResult result = train(world, cfg.train, backends);
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  write_metrics(out / "metrics.csv", result.rows);
  save_store(result.store, out / "store.json");
  write_text_file(out / "policy.json",
                  policy_to_json(result.policy, world.app.screen_ids()).dump(2) + "\n");
  write_text_file(out / "config.txt", cfg.to_text());

  const auto summary = summarize_metrics(result.rows, std::min<std::int64_t>(50, std::max(1, cfg.train.iterations)));
  std::printf("sampler %s, seed %llu, %d iterations, %zu tasks\n",
              std::string(to_string(cfg.train.sampler)).c_str(),
              static_cast<unsigned long long>(cfg.train.seed), cfg.train.iterations,
              world.tasks.size());
  if (!result.rows.empty()) {
    std::printf("first-window intra-group reward std %.4f, last-window unguided success %.4f\n",
                summary.first_window_reward_std, summary.last_window_none_success);
  }
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_retrieve(const std::string& store_path, const std::string& instruction,
                 const std::string& level_text, long long now_arg) {
  GuidanceLevel level;
  try {
    level = parse_guidance_level(level_text);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const ExperienceStore store = load_store(store_path);
  if (level != GuidanceLevel::None && store.task_templates.empty()) {
    std::cerr << "error: " << EmptyMemory().what() << "\n";
    return kExitEmptyMemory;
  }
  const Iteration now = now_arg >= 0 ? now_arg : store.iteration_clock;
  const MemorySnapshot snapshot(store);
  const GuidancePacket packet =
      retrieve_guidance(snapshot, instruction, level, now, RetrievalConfig{});
  if (packet.task_template_id && !packet.matched) {
    std::cout << "NOTE: no template matched; showing the closest analogy (matched=false)\n";
  }
  std::cout << format_packet(packet);
  return 0;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_inspect(const std::string& store_path, int top) {
  if (top < 0) {
    std::cerr << "config error: --top must be >= 0\n";
    return kExitConfig;
  }
  const ExperienceStore store = load_store(store_path);
  const RetrievalConfig rc;
  const std::size_t n = static_cast<std::size_t>(top);

  std::cout << "== workflows (by UCB score) ==\n";
  std::cout << "template\trank\tucb\tsuccess\tused\tavg_steps\tsequence\n";
  for (const auto& [tid, entries] : store.workflows) {
    UsageCounts totals;
    for (const auto& w : entries) {
      totals.success += w.success_count;
      totals.used += w.used_count;
    }
    std::vector<std::size_t> order(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto score = [&](std::size_t i) {
      return ucb_score({entries[i].success_count, entries[i].used_count}, totals, rc.ucb_lambda);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
    for (std::size_t r = 0; r < order.size() && r < n; ++r) {
      const auto& w = entries[order[r]];
      std::string seq;
      for (const auto& s : w.subtask_sequence) seq += (seq.empty() ? "" : " -> ") + s;
      std::cout << tid << "\t" << (r + 1) << "\t" << fixed(score(order[r])) << "\t"
                << w.success_count << "\t" << w.used_count << "\t" << fixed(w.avg_steps, 2)
                << "\t" << seq << "\n";
    }
  }

  std::cout << "== skills (by key) ==\n";
  std::cout << "package\tlabel\tplans\tdiagnoses\n";
  std::size_t shown = 0;
  for (const auto& [key, skill] : store.skills) {
    if (shown++ >= n) break;
    std::cout << key.package << "\t" << key.label << "\t" << skill.plan_summaries.size() << "\t"
              << skill.failure_diagnoses.size() << "\n";
  }

  std::cout << "== diagnoses (most recent first) ==\n";
  std::cout << "package\tlabel\tlast_updated\trecency\troot_cause\tcorrection\n";
  struct Row {
    const SkillKey* key;
    const DiagnosisItem* item;
  };
  std::vector<Row> rows;
  for (const auto& [key, skill] : store.skills) {
    for (const auto& d : skill.failure_diagnoses) rows.push_back({&key, &d});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.item->last_updated > b.item->last_updated;
  });
  for (std::size_t i = 0; i < rows.size() && i < n; ++i) {
    const auto& d = *rows[i].item;
    const Iteration now = std::max(store.iteration_clock, d.last_updated);
    std::cout << rows[i].key->package << "\t" << rows[i].key->label << "\t" << d.last_updated
              << "\t" << fixed(recency_score(d.last_updated, now, rc.decay_lambda)) << "\t"
              << d.content << "\t" << d.correction_guideline << "\n";
  }
  return 0;
}

int cmd_metrics(const std::string& run, int window) {
  if (window < 1) {
    std::cerr << "config error: --window must be >= 1\n";
    return kExitConfig;
  }
  fs::path path(run);
  if (fs::is_directory(path)) path /= "metrics.csv";
  try {
    const auto rows = read_metrics(path);
    std::cout << format_summary(summarize_metrics(rows, window));
  } catch (const MetricsSchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  }
  return 0;
}

int cmd_world(long long seed, int n_tasks, const std::string& out) {
  if (seed < 0 || n_tasks < 1) {
    std::cerr << "config error: --seed must be >= 0 and --tasks >= 1\n";
    return kExitConfig;
  }
  const SimWorld world = build_world(static_cast<std::uint64_t>(seed), n_tasks);
  if (out.empty()) {
    std::cout << world_to_json(world).dump(2) << "\n";
  } else {
    save_world(world, out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experience-memory guided GRPO on a simulated GUI world"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Run training and write metrics, store and policy");
  train->add_option("-c,--config", train_args.config_path, "Config file (key = value lines)");
  train->add_option("--set", train_args.overrides, "Override, key=value (repeatable)");
  train->add_option("--sampler", train_args.sampler, "uimem or vanilla");
  train->add_option("--seed", train_args.seed, "Run seed");
  train->add_option("-o,--out", train_args.out, "Output directory");

  std::string store_path;
  std::string instruction;
  std::string level = "strong";
  long long now = -1;
  auto* retrieve = app.add_subcommand("retrieve", "Print the guidance packet for an instruction");
  retrieve->add_option("-s,--store", store_path, "Store file")->required();
  retrieve->add_option("instruction", instruction, "Task instruction")->required();
  retrieve->add_option("-l,--level", level, "strong, weak or none");
  retrieve->add_option("--now", now, "Iteration used for recency (default: store clock)");

  int top = 10;
  auto* inspect = app.add_subcommand("inspect", "Summarize a store");
  inspect->add_option("-s,--store", store_path, "Store file")->required();
  inspect->add_option("-n,--top", top, "Rows per table");

  std::string run;
  int window = 50;
  auto* metrics = app.add_subcommand("metrics", "Validate metrics.csv and print summaries");
  metrics->add_option("run", run, "Run directory or metrics.csv")->required();
  metrics->add_option("-w,--window", window, "Window length in iterations");

  long long world_seed = 1;
  int n_tasks = 8;
  std::string world_out;
  auto* world = app.add_subcommand("world", "Generate a world document");
  world->add_option("--seed", world_seed, "World seed");
  world->add_option("--tasks", n_tasks, "Number of tasks");
  world->add_option("-o,--out", world_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*retrieve) return cmd_retrieve(store_path, instruction, level, now);
    if (*inspect) return cmd_inspect(store_path, top);
    if (*metrics) return cmd_metrics(run, window);
    if (*world) return cmd_world(world_seed, n_tasks, world_out);
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
