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

// Per-(iteration, task) training metrics and their CSV form.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace expmem {

inline constexpr std::string_view kMetricsHeader =
    "iteration,task_id,s_t,lambda_strong,lambda_weak,lambda_none,n_strong,n_weak,n_none,"
    "sr_strong,sr_weak,sr_none,mean_reward,reward_std,objective,kl";

struct MetricsRow {
  std::int64_t iteration = 0;
  std::string task_id;
  double s_t = 0.0;
  double lambda_strong = 0.0;
  double lambda_weak = 0.0;
  double lambda_none = 0.0;
  int n_strong = 0;
  int n_weak = 0;
  int n_none = 0;
  // NaN when the level had no rollouts.
  double sr_strong = 0.0;
  double sr_weak = 0.0;
  double sr_none = 0.0;
  double mean_reward = 0.0;
  double reward_std = 0.0;
  double objective = 0.0;
  double kl = 0.0;
};

std::string metrics_to_csv(std::span<const MetricsRow> rows);
// Throws MetricsSchemaError: header mismatch, no rows, bad field count or
// value.
std::vector<MetricsRow> metrics_from_csv(const std::string& text);

void write_metrics(const std::filesystem::path& path, std::span<const MetricsRow> rows);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

struct IterationSummary {
  std::int64_t iteration = 0;
  double success_rate = 0.0;       // all slots, pooled
  double none_success_rate = 0.0;  // NaN when no None slots
  double mean_reward_std = 0.0;
};

struct MetricsSummary {
  std::vector<IterationSummary> per_iteration;
  std::int64_t window = 0;
  double first_window_reward_std = 0.0;    // mean reward_std, first `window` iterations
  double last_window_none_success = 0.0;   // pooled None success, last `window` iterations
  double overall_reward_std = 0.0;
};

// Pooled None-level success over rows whose iteration lies in [first, last];
// NaN when those rows hold no None rollouts.
double pooled_none_success(std::span<const MetricsRow> rows, std::int64_t first,
                           std::int64_t last);
// Mean reward_std over rows whose iteration lies in [first, last].
double mean_reward_std(std::span<const MetricsRow> rows, std::int64_t first, std::int64_t last);

MetricsSummary summarize_metrics(std::span<const MetricsRow> rows, std::int64_t window = 50);
std::string format_summary(const MetricsSummary& summary);

}  // namespace expmem
