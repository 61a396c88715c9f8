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

#include "expmem/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>

#include "expmem/error.hpp"
#include "expmem/store_io.hpp"

namespace expmem {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Oracle:
      return "oracle";
    case BackendKind::Rule:
      return "rule";
    case BackendKind::Http:
      return "http";
  }
  return "rule";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d)) {
    throw InvalidConfig(key + ": expected a number, got '" + v + "'");
  }
  return d;
}

long long to_integer(const std::string& key, const std::string& v, long long lo, long long hi) {
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || i < lo || i > hi) {
    throw InvalidConfig(key + ": expected an integer in [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "], got '" + v + "'");
  }
  return i;
}

int to_int(const std::string& key, const std::string& v) {
  return static_cast<int>(to_integer(key, v, std::numeric_limits<int>::min(),
                                     std::numeric_limits<int>::max()));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define EXPMEM_DOUBLE(name, member)                                                     \
  Field {                                                                               \
    name, [](RunConfig& c, const std::string& k, const std::string& v) {                \
      c.member = to_double(k, v);                                                       \
    },                                                                                  \
        [](const RunConfig& c) { return fmt(c.member); }                                \
  }
#define EXPMEM_INT(name, member)                                                        \
  Field {                                                                               \
    name, [](RunConfig& c, const std::string& k, const std::string& v) {                \
      c.member = to_int(k, v);                                                          \
    },                                                                                  \
        [](const RunConfig& c) { return std::to_string(c.member); }                     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"run.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.seed = static_cast<std::uint64_t>(
             to_integer(k, v, 0, std::numeric_limits<long long>::max()));
       },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      EXPMEM_INT("run.iterations", train.iterations),
      {"run.output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      {"run.sampler",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.train.sampler = parse_sampler(v);
       },
       [](const RunConfig& c) { return std::string(to_string(c.train.sampler)); }},
      {"world.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.world_seed = static_cast<std::uint64_t>(
             to_integer(k, v, 0, std::numeric_limits<long long>::max()));
       },
       [](const RunConfig& c) { return std::to_string(c.world_seed); }},
      EXPMEM_INT("world.n_tasks", n_tasks),
      EXPMEM_INT("world.horizon", horizon),
      {"world.file", [](RunConfig& c, const std::string&, const std::string& v) { c.world_file = v; },
       [](const RunConfig& c) { return c.world_file; }},
      EXPMEM_DOUBLE("curriculum.theta_start", train.curriculum.theta_start),
      EXPMEM_DOUBLE("curriculum.theta_end", train.curriculum.theta_end),
      EXPMEM_DOUBLE("curriculum.strong_max", train.curriculum.strong_max),
      EXPMEM_DOUBLE("curriculum.strong_min", train.curriculum.strong_min),
      EXPMEM_DOUBLE("curriculum.none_min", train.curriculum.none_min),
      EXPMEM_DOUBLE("curriculum.none_max", train.curriculum.none_max),
      EXPMEM_INT("curriculum.group_size", train.curriculum.group_size),
      EXPMEM_DOUBLE("reward.outcome_weight", train.reward.outcome_weight),
      EXPMEM_DOUBLE("reward.progress_weight", train.reward.progress_weight),
      EXPMEM_DOUBLE("reward.unguided_bonus", train.reward.unguided_bonus),
      EXPMEM_DOUBLE("reward.adv_epsilon", train.reward.adv_epsilon),
      EXPMEM_DOUBLE("reward.clip_delta", train.reward.clip_delta),
      EXPMEM_DOUBLE("reward.kl_beta", train.reward.kl_beta),
      EXPMEM_DOUBLE("retrieval.ucb_lambda", train.retrieval.ucb_lambda),
      EXPMEM_DOUBLE("retrieval.decay_lambda", train.retrieval.decay_lambda),
      EXPMEM_INT("retrieval.top_k", train.retrieval.top_k),
      EXPMEM_DOUBLE("retrieval.match_threshold", train.retrieval.match_threshold),
      EXPMEM_INT("retrieval.tips_per_step", train.retrieval.tips_per_step),
      EXPMEM_INT("retrieval.warnings_per_step", train.retrieval.warnings_per_step),
      EXPMEM_DOUBLE("evolution.gamma", train.evolution.gamma),
      EXPMEM_DOUBLE("evolution.dedup_threshold", train.evolution.dedup_threshold),
      {"evolution.ema_source",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "none") {
           c.train.evolution.ema_source = EmaSource::NoneOnly;
         } else if (v == "all") {
           c.train.evolution.ema_source = EmaSource::All;
         } else {
           throw InvalidConfig(k + ": expected none or all, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.train.evolution.ema_source == EmaSource::All ? "all" : "none");
       }},
      EXPMEM_DOUBLE("policy.learning_rate", train.learning_rate),
      EXPMEM_DOUBLE("policy.bonus_strong", train.bonus_strong),
      EXPMEM_DOUBLE("policy.bonus_weak", train.bonus_weak),
      {"backend.kind",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "oracle") {
           c.backend = BackendKind::Oracle;
         } else if (v == "rule") {
           c.backend = BackendKind::Rule;
         } else if (v == "http") {
           c.backend = BackendKind::Http;
         } else {
           throw InvalidConfig(k + ": expected oracle, rule or http, got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.backend)); }},
      {"backend.model",
       [](RunConfig& c, const std::string&, const std::string& v) { c.backend_model = v; },
       [](const RunConfig& c) { return c.backend_model; }},
  };
  return table;
}

#undef EXPMEM_DOUBLE
#undef EXPMEM_INT

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw InvalidConfig("unknown config key '" + key + "'");
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw InvalidConfig("override '" + assignment + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::validate() const {
  train.validate();
  if (n_tasks < 1) throw InvalidConfig("world.n_tasks must be >= 1");
  if (horizon < 0) throw InvalidConfig("world.horizon must be >= 0");
  if (output_dir.empty()) throw InvalidConfig("run.output_dir must not be empty");
  if (backend == BackendKind::Http && backend_model.empty()) {
    throw InvalidConfig("backend.model must be set for the http backend");
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

}  // namespace expmem
