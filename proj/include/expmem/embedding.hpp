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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace expmem {

// Unit L2 norm, or all zeros for text without tokens.
using EmbeddingVector = std::vector<double>;

inline constexpr std::size_t kEmbeddingDim = 256;

// Lower-cased runs of ASCII alphanumerics; bytes >= 0x80 count as word
// characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Bag of tokens hashed into kEmbeddingDim buckets with FNV-1a, then
// L2-normalized. Pure integer hashing and fixed-order accumulation, so the
// result is bit-identical everywhere.
class HashedBagEmbedder final : public EmbeddingProvider {
 public:
  EmbeddingVector embed(std::string_view text) const override;
  static std::size_t bucket(std::string_view token);
};

const EmbeddingProvider& default_embedder();

// Dot product of unit vectors clamped to [-1, 1]; 0 when either is zero.
// Throws InvalidArgument on a dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct ScoredId {
  std::string id;
  double score = 0.0;
};

// Flat exact index. Immutable once built for an iteration.
class VectorIndex {
 public:
  void add(const std::string& id, EmbeddingVector vector, std::string text);
  void add(const std::string& id, std::string text, const EmbeddingProvider& provider);

  // Descending score, ties by lexicographic id, length min(k, size()).
  // Throws InvalidArgument for k < 1.
  std::vector<ScoredId> topk(const EmbeddingVector& query, int k) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::string& text(const std::string& id) const { return entries_.at(id).text; }

 private:
  struct Entry {
    EmbeddingVector vector;
    std::string text;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace expmem
