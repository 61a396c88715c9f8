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

#include "expmem/metrics.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include "expmem/error.hpp"
#include "expmem/store_io.hpp"

namespace expmem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  if (s == "nan") return kNaN;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || std::isnan(v)) {
    throw MetricsSchemaError("line " + std::to_string(line) + ": bad " + column + " value '" +
                             s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line, const char* column) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw MetricsSchemaError("line " + std::to_string(line) + ": bad " + column + " value '" +
                             s + "'");
  }
  return v;
}

}  // namespace

std::string metrics_to_csv(std::span<const MetricsRow> rows) {
  std::string out(kMetricsHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + "," + r.task_id + "," + num(r.s_t) + "," +
           num(r.lambda_strong) + "," + num(r.lambda_weak) + "," + num(r.lambda_none) + "," +
           std::to_string(r.n_strong) + "," + std::to_string(r.n_weak) + "," +
           std::to_string(r.n_none) + "," + num(r.sr_strong) + "," + num(r.sr_weak) + "," +
           num(r.sr_none) + "," + num(r.mean_reward) + "," + num(r.reward_std) + "," +
           num(r.objective) + "," + num(r.kl) + "\n";
  }
  return out;
}

std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw MetricsSchemaError("empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw MetricsSchemaError("metrics header mismatch");

  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 16) {
      throw MetricsSchemaError("line " + std::to_string(lineno) + ": expected 16 fields, got " +
                               std::to_string(f.size()));
    }
    MetricsRow r;
    r.iteration = parse_int(f[0], lineno, "iteration");
    if (f[1].empty()) throw MetricsSchemaError("line " + std::to_string(lineno) + ": empty task_id");
    r.task_id = f[1];
    r.s_t = parse_double(f[2], lineno, "s_t");
    r.lambda_strong = parse_double(f[3], lineno, "lambda_strong");
    r.lambda_weak = parse_double(f[4], lineno, "lambda_weak");
    r.lambda_none = parse_double(f[5], lineno, "lambda_none");
    r.n_strong = static_cast<int>(parse_int(f[6], lineno, "n_strong"));
    r.n_weak = static_cast<int>(parse_int(f[7], lineno, "n_weak"));
    r.n_none = static_cast<int>(parse_int(f[8], lineno, "n_none"));
    if (r.n_strong < 0 || r.n_weak < 0 || r.n_none < 0) {
      throw MetricsSchemaError("line " + std::to_string(lineno) + ": negative slot count");
    }
    r.sr_strong = parse_double(f[9], lineno, "sr_strong");
    r.sr_weak = parse_double(f[10], lineno, "sr_weak");
    r.sr_none = parse_double(f[11], lineno, "sr_none");
    r.mean_reward = parse_double(f[12], lineno, "mean_reward");
    r.reward_std = parse_double(f[13], lineno, "reward_std");
    r.objective = parse_double(f[14], lineno, "objective");
    r.kl = parse_double(f[15], lineno, "kl");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw MetricsSchemaError("metrics file has a header but no rows");
  return rows;
}

void write_metrics(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  write_text_file(path, metrics_to_csv(rows));
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  return metrics_from_csv(read_text_file(path));
}

double pooled_none_success(std::span<const MetricsRow> rows, std::int64_t first,
                           std::int64_t last) {
  double wins = 0.0;
  double n = 0.0;
  for (const auto& r : rows) {
    if (r.iteration < first || r.iteration > last || r.n_none == 0) continue;
    wins += r.sr_none * r.n_none;
    n += r.n_none;
  }
  return n > 0 ? wins / n : kNaN;
}

double mean_reward_std(std::span<const MetricsRow> rows, std::int64_t first, std::int64_t last) {
  double sum = 0.0;
  double n = 0.0;
  for (const auto& r : rows) {
    if (r.iteration < first || r.iteration > last) continue;
    sum += r.reward_std;
    n += 1.0;
  }
  return n > 0 ? sum / n : kNaN;
}

MetricsSummary summarize_metrics(std::span<const MetricsRow> rows, std::int64_t window) {
  if (window < 1) throw InvalidArgument("summary window must be >= 1");
  MetricsSummary s;
  s.window = window;
  struct Acc {
    double wins = 0, n = 0, none_wins = 0, none_n = 0, std_sum = 0, rows = 0;
  };
  std::map<std::int64_t, Acc> acc;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : rows) {
    Acc& a = acc[r.iteration];
    auto add = [&](double sr, int n) {
      if (n > 0) {
        a.wins += sr * n;
        a.n += n;
      }
    };
    add(r.sr_strong, r.n_strong);
    add(r.sr_weak, r.n_weak);
    add(r.sr_none, r.n_none);
    if (r.n_none > 0) {
      a.none_wins += r.sr_none * r.n_none;
      a.none_n += r.n_none;
    }
    a.std_sum += r.reward_std;
    a.rows += 1;
    lo = std::min(lo, r.iteration);
    hi = std::max(hi, r.iteration);
  }
  for (const auto& [it, a] : acc) {
    s.per_iteration.push_back({it, a.n > 0 ? a.wins / a.n : kNaN,
                               a.none_n > 0 ? a.none_wins / a.none_n : kNaN,
                               a.std_sum / a.rows});
  }
  if (!rows.empty()) {
    s.first_window_reward_std = mean_reward_std(rows, lo, lo + window - 1);
    s.last_window_none_success = pooled_none_success(rows, hi - window + 1, hi);
    s.overall_reward_std = mean_reward_std(rows, lo, hi);
  }
  return s;
}

std::string format_summary(const MetricsSummary& s) {
  std::string out = "iteration,success_rate,none_success_rate,mean_reward_std\n";
  for (const auto& it : s.per_iteration) {
    out += std::to_string(it.iteration) + "," + num(it.success_rate) + "," +
           num(it.none_success_rate) + "," + num(it.mean_reward_std) + "\n";
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "first %lld iterations: mean intra-group reward std %.4f\n",
                static_cast<long long>(s.window), s.first_window_reward_std);
  out += buf;
  std::snprintf(buf, sizeof buf, "last %lld iterations: unguided success rate %.4f\n",
                static_cast<long long>(s.window), s.last_window_none_success);
  out += buf;
  std::snprintf(buf, sizeof buf, "all iterations: mean intra-group reward std %.4f\n",
                s.overall_reward_std);
  out += buf;
  return out;
}

}  // namespace expmem
