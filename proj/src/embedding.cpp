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

#include "expmem/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "expmem/error.hpp"

namespace expmem {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t HashedBagEmbedder::bucket(std::string_view token) {
  return static_cast<std::size_t>(fnv1a64(token) % kEmbeddingDim);
}

EmbeddingVector HashedBagEmbedder::embed(std::string_view text) const {
  std::vector<std::uint64_t> counts(kEmbeddingDim, 0);
  for (const auto& token : tokenize(text)) ++counts[bucket(token)];

  std::uint64_t sq = 0;
  for (auto c : counts) sq += c * c;
  EmbeddingVector v(kEmbeddingDim, 0.0);
  if (sq == 0) return v;
  const double norm = std::sqrt(static_cast<double>(sq));
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) v[i] = static_cast<double>(counts[i]) / norm;
  return v;
}

const EmbeddingProvider& default_embedder() {
  static const HashedBagEmbedder instance;
  return instance;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine of vectors with dimensions " + std::to_string(u.size()) +
                          " and " + std::to_string(v.size()));
  }
  double dot = 0.0;
  bool u_zero = true;
  bool v_zero = true;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    u_zero = u_zero && u[i] == 0.0;
    v_zero = v_zero && v[i] == 0.0;
  }
  if (u_zero || v_zero) return 0.0;
  return std::clamp(dot, -1.0, 1.0);
}

void VectorIndex::add(const std::string& id, EmbeddingVector vector, std::string text) {
  if (!entries_.emplace(id, Entry{std::move(vector), std::move(text)}).second) {
    throw InvalidArgument("duplicate index id '" + id + "'");
  }
}

void VectorIndex::add(const std::string& id, std::string text,
                      const EmbeddingProvider& provider) {
  EmbeddingVector v = provider.embed(text);
  add(id, std::move(v), std::move(text));
}

std::vector<ScoredId> VectorIndex::topk(const EmbeddingVector& query, int k) const {
  if (k < 1) throw InvalidArgument("topk requires k >= 1");
  std::vector<ScoredId> scored;
  scored.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) scored.push_back({id, cosine(query, entry.vector)});
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  // Map order is lexicographic, so a stable descending sort keeps id ties ordered.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredId& a, const ScoredId& b) { return a.score > b.score; });
  scored.resize(n);
  return scored;
}

}  // namespace expmem
