// Copyright 2026 The allpairs Authors.
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

#ifndef ALLPAIRS_CV_APP_HPP
#define ALLPAIRS_CV_APP_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "allpairs/app.hpp"

namespace allpairs {

/// k-mer id -> occurrence count, ordered by id.
using KmerCounts = std::map<std::uint64_t, std::uint32_t>;

/// Composition vector indexed by k-mer id (base-4 encoding of ACGT).
template <typename Scalar>
using CompositionVector = Eigen::SparseVector<Scalar, 0, std::int64_t>;

/// Counts the ACGT k-mers of a sequence text. Lines starting with '>' are
/// headers and skipped; remaining lines are concatenated; any other symbol
/// breaks the current window. Case-insensitive.
KmerCounts count_kmers(std::string_view text, unsigned k);

/// Base-4 id of an ACGT word; the inverse of kmer_string.
std::uint64_t kmer_id(std::string_view word);
std::string kmer_string(std::uint64_t id, unsigned k);

/// Unit-length composition vector from k-mer counts.
template <typename Scalar = double>
CompositionVector<Scalar> composition_vector(const KmerCounts& counts, unsigned k) {
  CompositionVector<Scalar> v(std::int64_t{1} << (2 * k));
  v.reserve(static_cast<std::int64_t>(counts.size()));
  for (const auto& [id, count] : counts) {
    v.insertBack(static_cast<std::int64_t>(id)) = static_cast<Scalar>(count);
  }
  const Scalar norm = v.norm();
  if (norm > Scalar(0)) v /= norm;
  return v;
}

/// Cosine similarity of two sparse vectors.
template <typename Scalar>
Scalar cosine_similarity(const CompositionVector<Scalar>& a, const CompositionVector<Scalar>& b) {
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

/// Composition-vector-like similarity over a corpus of sequence files
/// (plain text or gzip). Items are the corpus files in lexicographic
/// order.
class CompositionVectorApp final : public Application {
 public:
  struct Params {
    std::filesystem::path corpus;
    unsigned k = 3;
    std::uint64_t slot_size = 64 * 1024;
    double threshold = 0.5;
  };

  explicit CompositionVectorApp(Params params);

  std::string name() const override { return "cv"; }
  std::uint64_t item_count() const override { return files_.size(); }
  std::size_t slot_size() const override { return params_.slot_size; }
  std::string path_for_key(ItemKey key) const override;
  ItemData parse(ItemKey key, const ItemData& raw) const override;
  ItemData preprocess(ItemKey key, const ItemData& parsed) const override;
  Bytes compare(ItemKey left, ByteView left_data, ItemKey right,
                ByteView right_data) const override;
  PairResult postprocess(ItemKey left, ItemKey right, ByteView raw) const override;
  void populate(StorageServer& storage) const override;

  const Params& params() const { return params_; }

  static KmerCounts decode_counts(ByteView payload);
  static CompositionVector<double> decode_vector(ByteView payload, unsigned k);

 private:
  Params params_;
  std::vector<std::filesystem::path> files_;
};

/// Decompresses gzip data; returns the input unchanged when it is not gzip.
std::string maybe_gunzip(ByteView data);

}  // namespace allpairs

#endif  // ALLPAIRS_CV_APP_HPP
