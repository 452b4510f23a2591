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

#include "allpairs/cv_app.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "allpairs/errors.hpp"
#include "allpairs/storage.hpp"

namespace allpairs {

namespace {

int base_code(char c) {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': return 3;
    default: return -1;
  }
}

template <typename T>
void append(Bytes& out, const T& value) {
  const auto offset = out.size();
  out.resize(offset + sizeof(T));
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

template <typename T>
T read_at(ByteView in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

constexpr std::size_t kCountRecord = sizeof(std::uint64_t) + sizeof(std::uint32_t);
constexpr std::size_t kVectorRecord = sizeof(std::uint64_t) + sizeof(double);

}  // namespace

std::uint64_t kmer_id(std::string_view word) {
  std::uint64_t id = 0;
  for (char c : word) {
    const int code = base_code(c);
    if (code < 0) throw MalformedInput(std::string("kmer_id: invalid base '") + c + "'");
    id = (id << 2) | static_cast<std::uint64_t>(code);
  }
  return id;
}

std::string kmer_string(std::uint64_t id, unsigned k) {
  static constexpr char kBases[] = {'A', 'C', 'G', 'T'};
  std::string out(k, 'A');
  for (unsigned i = 0; i < k; ++i) {
    out[k - 1 - i] = kBases[id & 3u];
    id >>= 2;
  }
  return out;
}

KmerCounts count_kmers(std::string_view text, unsigned k) {
  KmerCounts counts;
  const std::uint64_t mask = (k >= 32) ? ~0ULL : ((std::uint64_t{1} << (2 * k)) - 1);
  std::uint64_t window = 0;
  unsigned filled = 0;
  bool line_start = true;
  bool header = false;
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      line_start = true;
      header = false;
      continue;
    }
    if (line_start) {
      header = (c == '>');
      line_start = false;
    }
    if (header || c == ' ' || c == '\t') continue;
    const int code = base_code(c);
    if (code < 0) {
      filled = 0;
      window = 0;
      continue;
    }
    window = ((window << 2) | static_cast<std::uint64_t>(code)) & mask;
    if (++filled >= k) ++counts[window];
  }
  return counts;
}

std::string maybe_gunzip(ByteView data) {
  if (data.size() < 2 || data[0] != std::byte{0x1f} || data[1] != std::byte{0x8b}) {
    return std::string(reinterpret_cast<const char*>(data.data()), data.size());
  }
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw MalformedInput("gzip: inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[16384];
  int rc;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw MalformedInput("gzip: corrupt stream");
    }
    out.append(buf, sizeof buf - zs.avail_out);
  } while (rc != Z_STREAM_END && zs.avail_in > 0);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw MalformedInput("gzip: truncated stream");
  return out;
}

CompositionVectorApp::CompositionVectorApp(Params params) : params_(std::move(params)) {
  if (params_.k < 1 || params_.k > 15) throw ConfigError("cv: k must be in [1, 15]");
  if (params_.slot_size == 0) throw ConfigError("cv: slot_size must be > 0");
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(params_.corpus, ec)) {
    if (entry.is_regular_file()) files_.push_back(entry.path());
  }
  if (ec) throw ConfigError("cv: cannot read corpus '" + params_.corpus.string() + "': " + ec.message());
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw ConfigError("cv: corpus '" + params_.corpus.string() + "' is empty");
}

std::string CompositionVectorApp::path_for_key(ItemKey key) const {
  return files_.at(key.index()).string();
}

ItemData CompositionVectorApp::parse(ItemKey key, const ItemData& raw) const {
  require_stage(raw, Stage::RawFile);
  const std::string text = maybe_gunzip(raw.payload);
  const KmerCounts counts = count_kmers(text, params_.k);
  if (counts.empty()) {
    throw MalformedInput("cv: item " + std::to_string(key.index()) + " (" + path_for_key(key) +
                         ") has no " + std::to_string(params_.k) + "-mers");
  }
  ItemData out{Stage::Parsed, {}};
  out.payload.reserve(counts.size() * kCountRecord);
  for (const auto& [id, count] : counts) {
    append(out.payload, id);
    append(out.payload, count);
  }
  return out;
}

KmerCounts CompositionVectorApp::decode_counts(ByteView payload) {
  if (payload.size() % kCountRecord != 0) throw MalformedInput("cv: bad parsed payload size");
  KmerCounts counts;
  for (std::size_t off = 0; off < payload.size(); off += kCountRecord) {
    counts.emplace(read_at<std::uint64_t>(payload, off),
                   read_at<std::uint32_t>(payload, off + sizeof(std::uint64_t)));
  }
  return counts;
}

ItemData CompositionVectorApp::preprocess(ItemKey key, const ItemData& parsed) const {
  require_stage(parsed, Stage::Parsed);
  const auto vec = composition_vector<double>(decode_counts(parsed.payload), params_.k);
  require_fits(key, static_cast<std::size_t>(vec.nonZeros()) * kVectorRecord);
  ItemData out{Stage::Preprocessed, {}};
  out.payload.reserve(static_cast<std::size_t>(vec.nonZeros()) * kVectorRecord);
  for (CompositionVector<double>::InnerIterator it(vec); it; ++it) {
    append(out.payload, static_cast<std::uint64_t>(it.index()));
    append(out.payload, it.value());
  }
  return out;
}

CompositionVector<double> CompositionVectorApp::decode_vector(ByteView payload, unsigned k) {
  if (payload.size() % kVectorRecord != 0) throw MalformedInput("cv: bad vector payload size");
  CompositionVector<double> v(std::int64_t{1} << (2 * k));
  v.reserve(static_cast<std::int64_t>(payload.size() / kVectorRecord));
  for (std::size_t off = 0; off < payload.size(); off += kVectorRecord) {
    v.insertBack(static_cast<std::int64_t>(read_at<std::uint64_t>(payload, off))) =
        read_at<double>(payload, off + sizeof(std::uint64_t));
  }
  return v;
}

Bytes CompositionVectorApp::compare(ItemKey, ByteView left_data, ItemKey,
                                    ByteView right_data) const {
  // Both vectors are unit length, so the dot product is the cosine.
  const double value =
      decode_vector(left_data, params_.k).dot(decode_vector(right_data, params_.k));
  Bytes out(sizeof value);
  std::memcpy(out.data(), &value, sizeof value);
  return out;
}

PairResult CompositionVectorApp::postprocess(ItemKey left, ItemKey right, ByteView raw) const {
  double value = 0.0;
  if (raw.size() >= sizeof value) std::memcpy(&value, raw.data(), sizeof value);
  return PairResult{left, right, value, value >= params_.threshold};
}

void CompositionVectorApp::populate(StorageServer& storage) const {
  for (const auto& file : files_) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw NotFound("cv: cannot open " + file.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Bytes bytes(data.size());
    std::memcpy(bytes.data(), data.data(), data.size());
    storage.put(file.string(), std::move(bytes));
  }
}

}  // namespace allpairs
