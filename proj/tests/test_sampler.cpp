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

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "expmem/error.hpp"
#include "expmem/sampler.hpp"
#include "fixtures.hpp"

using namespace expmem;

namespace {

// Enumerates every split of G seats whose counts round the quotas and keeps
// the one that gives the extra seats to the largest remainders, preferring
// earlier levels on ties.
GroupCounts apportion_oracle(std::array<double, 3> share, int g) {
  std::array<double, 3> quota{};
  for (int i = 0; i < 3; ++i) quota[i] = share[i] * g;
  std::optional<std::array<int, 3>> best;
  auto key = [&](const std::array<int, 3>& c) {
    // Sum of remainders of the levels that got an extra seat, then prefer
    // lower indices.
    double got = 0.0;
    int rank = 0;
    for (int i = 0; i < 3; ++i) {
      if (c[i] > std::floor(quota[i])) {
        got += quota[i] - std::floor(quota[i]);
        rank = rank * 4 + (3 - i);
      }
    }
    return std::make_pair(got, rank);
  };
  for (int a = 0; a <= g; ++a) {
    for (int b = 0; a + b <= g; ++b) {
      std::array<int, 3> c = {a, b, g - a - b};
      bool ok = true;
      for (int i = 0; i < 3; ++i) {
        ok = ok && (c[i] == std::floor(quota[i]) || c[i] == std::floor(quota[i]) + 1);
      }
      if (!ok) continue;
      if (!best) {
        best = c;
        continue;
      }
      const auto kc = key(c);
      const auto kb = key(*best);
      if (kc.first > kb.first + 1e-12 ||
          (std::abs(kc.first - kb.first) <= 1e-12 && kc.second > kb.second)) {
        best = c;
      }
    }
  }
  REQUIRE(best);
  return {(*best)[0], (*best)[1], (*best)[2]};
}

}  // namespace

TEST_CASE("curriculum lambdas") {
  const CurriculumConfig cfg;
  auto check = [&](double s, double strong, double weak, double none) {
    const GuidanceMix m = curriculum_lambdas(s, cfg);
    CHECK(m.strong == doctest::Approx(strong).epsilon(1e-12));
    CHECK(m.weak == doctest::Approx(weak).epsilon(1e-12));
    CHECK(m.none == doctest::Approx(none).epsilon(1e-12));
    CHECK(m.strong + m.weak + m.none == doctest::Approx(1.0).epsilon(1e-15));
  };
  check(0.0, 0.5, 0.25, 0.25);
  check(0.2, 0.5, 0.25, 0.25);
  check(0.5, 0.25, 0.25, 0.5);
  check(0.8, 0.0, 0.25, 0.75);
  check(1.0, 0.0, 0.25, 0.75);
  CHECK_THROWS_AS(curriculum_lambdas(1.2, cfg), InvalidArgument);
}

TEST_CASE("property: curriculum is monotone on a grid") {
  const CurriculumConfig cfg;
  GuidanceMix prev = curriculum_lambdas(0.0, cfg);
  for (int i = 1; i <= 1000; ++i) {
    const GuidanceMix m = curriculum_lambdas(i / 1000.0, cfg);
    CHECK(m.strong <= prev.strong);
    CHECK(m.none >= prev.none);
    CHECK(m.weak >= 0.0);
    prev = m;
  }
}

TEST_CASE("curriculum config validation") {
  CurriculumConfig cfg;
  cfg.strong_max = 0.9;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  CHECK_THROWS_AS(curriculum_lambdas(0.5, cfg), InvalidConfig);
  cfg = {};
  cfg.theta_start = 0.8;
  cfg.theta_end = 0.2;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = {};
  cfg.group_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("allocate_counts examples") {
  CHECK(allocate_counts({0.25, 0.25, 0.5}, 4) == GroupCounts{1, 1, 2});
  CHECK(allocate_counts({1.0, 0.0, 0.0}, 7) == GroupCounts{7, 0, 0});
  CHECK(allocate_counts({1.0 / 3, 1.0 / 3, 1.0 / 3}, 4) == GroupCounts{2, 1, 1});
  CHECK(allocate_counts({0.5, 0.25, 0.25}, 4) == GroupCounts{2, 1, 1});
  CHECK(allocate_counts({0.0, 0.25, 0.75}, 4) == GroupCounts{0, 1, 3});
  CHECK(allocate_counts({0.0, 0.25, 0.75}, 1) == GroupCounts{0, 0, 1});
  CHECK_THROWS_AS(allocate_counts({0.5, 0.5, 0.5}, 4), InvalidArgument);
  CHECK_THROWS_AS(allocate_counts({0.5, 0.25, 0.25}, 0), InvalidArgument);
}

TEST_CASE("property: allocate_counts matches the enumeration oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = u(rng);
    const double b = u(rng) * (1.0 - a);
    const GuidanceMix mix{a, b, 1.0 - a - b};
    const int g = 1 + static_cast<int>(rng() % 64);
    const GroupCounts c = allocate_counts(mix, g);
    CHECK(c.strong >= 0);
    CHECK(c.weak >= 0);
    CHECK(c.none >= 0);
    CHECK(c.total() == g);
    CHECK(c == apportion_oracle({mix.strong, mix.weak, mix.none}, g));
  }
}

TEST_CASE("property: with defaults and G >= 3 every group has an unguided slot") {
  CurriculumConfig cfg;
  // With two slots the early-training split (0.5, 0.25, 0.25) ties weak and
  // none, and the tie goes to weak.
  CHECK(allocate_counts(curriculum_lambdas(0.0, cfg), 2) == GroupCounts{1, 1, 0});
  CHECK(allocate_counts(curriculum_lambdas(0.5, cfg), 2).none >= 1);
  for (int g = 3; g <= 64; ++g) {
    for (int i = 0; i <= 100; ++i) {
      CHECK(allocate_counts(curriculum_lambdas(i / 100.0, cfg), g).none >= 1);
    }
  }
}

TEST_CASE("assign_guidance") {
  const ExperienceStore store = expmem::testing::markor_store();
  const MemorySnapshot snap(store);
  const CurriculumConfig cfg;
  const RetrievalConfig rc;
  const std::string instruction = expmem::testing::kMarkorInstruction;

  SUBCASE("fresh task") {
    UsageLog usage;
    const GroupPlan p =
        assign_guidance({0.0, 0}, snap, instruction, cfg, rc, 0, default_match_backend(), &usage);
    CHECK(p.levels == std::vector<GuidanceLevel>{GuidanceLevel::Strong, GuidanceLevel::Strong,
                                                 GuidanceLevel::Weak, GuidanceLevel::None});
    REQUIRE(p.packets.size() == 4);
    CHECK(p.packets[0] == p.packets[1]);
    CHECK(p.packets[0].steps.size() == 3);
    CHECK(p.packets[2].level == GuidanceLevel::Weak);
    CHECK(p.packets[2].steps.size() == 3);
    CHECK(p.packets[3].empty());
    CHECK(p.packets[3].level == GuidanceLevel::None);
  }
  SUBCASE("mastered task") {
    const GroupPlan p = assign_guidance({1.0, 50}, snap, instruction, cfg, rc, 0);
    CHECK(p.levels == std::vector<GuidanceLevel>{GuidanceLevel::Weak, GuidanceLevel::None,
                                                 GuidanceLevel::None, GuidanceLevel::None});
  }
  SUBCASE("single slot") {
    CurriculumConfig one = cfg;
    one.group_size = 1;
    const GroupPlan p = assign_guidance({0.9, 5}, snap, instruction, one, rc, 0);
    CHECK(p.levels == std::vector<GuidanceLevel>{GuidanceLevel::None});
  }
  SUBCASE("empty memory keeps labels with empty packets") {
    const ExperienceStore empty;
    const MemorySnapshot empty_snap(empty);
    const GroupPlan p = assign_guidance({0.0, 0}, empty_snap, instruction, cfg, rc, 0);
    REQUIRE(p.levels.size() == 4);
    CHECK(p.levels[0] == GuidanceLevel::Strong);
    for (const auto& packet : p.packets) CHECK(packet.empty());
  }
  SUBCASE("vanilla plan") {
    const GroupPlan p = unguided_plan(4);
    CHECK(p.counts == GroupCounts{0, 0, 4});
    for (const auto& l : p.levels) CHECK(l == GuidanceLevel::None);
  }
}
