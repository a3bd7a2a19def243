// Copyright 2026 The HHF Toolkit Authors.
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

#include "hhf/hamming_index.h"

#include <algorithm>
#include <bit>
#include <fstream>
#include <queue>
#include <unordered_set>
#include <utility>

#include "binary_io.h"
#include "hhf/error.h"

namespace hhf {

BinaryCode::BinaryCode(int bits) : bits_(bits), words_(words_for_bits(bits)) {
  if (bits < 1) throw ArgumentError("code length must be positive");
}

void BinaryCode::set_bit(int i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= mask;
  } else {
    words_[i >> 6] &= ~mask;
  }
}

BinaryCode BinaryCode::pack(std::span<const int> signs) {
  BinaryCode code(static_cast<int>(signs.size()));
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (signs[i] == 1) {
      code.set_bit(static_cast<int>(i), true);
    } else if (signs[i] != -1) {
      throw ArgumentError("cannot pack entry " + std::to_string(i) + " = " +
                          std::to_string(signs[i]) + ": expected +1 or -1");
    }
  }
  return code;
}

BinaryCode BinaryCode::from_latent(std::span<const double> latent) {
  BinaryCode code(static_cast<int>(latent.size()));
  for (std::size_t i = 0; i < latent.size(); ++i) {
    if (latent[i] >= 0.0) code.set_bit(static_cast<int>(i), true);
  }
  return code;
}

BinaryCode BinaryCode::from_bytes(std::span<const std::uint8_t> bytes,
                                  int bits) {
  BinaryCode code(bits);
  if (bytes.size() != (static_cast<std::size_t>(bits) + 7) / 8) {
    throw ShapeError("code of " + std::to_string(bits) + " bits needs " +
                     std::to_string((bits + 7) / 8) + " bytes, got " +
                     std::to_string(bytes.size()));
  }
  for (std::size_t b = 0; b < bytes.size(); ++b) {
    code.words_[b / 8] |= static_cast<std::uint64_t>(bytes[b]) << (8 * (b % 8));
  }
  // Canonical form: padding bits are zero.
  if (bits % 64) code.words_.back() &= (std::uint64_t{1} << (bits % 64)) - 1;
  return code;
}

std::vector<int> BinaryCode::unpack() const {
  std::vector<int> signs(bits_);
  for (int i = 0; i < bits_; ++i) signs[i] = bit(i) ? 1 : -1;
  return signs;
}

std::vector<std::uint8_t> BinaryCode::to_bytes() const {
  std::vector<std::uint8_t> bytes((static_cast<std::size_t>(bits_) + 7) / 8);
  for (std::size_t b = 0; b < bytes.size(); ++b) {
    bytes[b] = static_cast<std::uint8_t>(words_[b / 8] >> (8 * (b % 8)));
  }
  return bytes;
}

std::string BinaryCode::to_bit_string() const {
  std::string s(bits_, '0');
  for (int i = 0; i < bits_; ++i) {
    if (bit(i)) s[i] = '1';
  }
  return s;
}

BinaryCode BinaryCode::from_bit_string(const std::string& bits) {
  BinaryCode code(static_cast<int>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      code.set_bit(static_cast<int>(i), true);
    } else if (bits[i] != '0') {
      throw ArgumentError("bit string may only contain '0' and '1'");
    }
  }
  return code;
}

namespace {

void require_same_bits(int a, int b) {
  if (a != b) {
    throw ShapeError("code length mismatch: " + std::to_string(a) + " vs " +
                     std::to_string(b) + " bits");
  }
}

inline int xor_popcount(const std::uint64_t* a, const std::uint64_t* b,
                        std::size_t words) {
  int d = 0;
  for (std::size_t w = 0; w < words; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

}  // namespace

int hamming_distance(const BinaryCode& a, const BinaryCode& b) {
  require_same_bits(a.bits(), b.bits());
  return xor_popcount(a.words().data(), b.words().data(), a.words().size());
}

CodeDatabase::CodeDatabase(int bits)
    : bits_(bits), words_per_code_(words_for_bits(bits)) {
  if (bits < 1) throw ArgumentError("code length must be positive");
}

std::uint64_t CodeDatabase::add(const BinaryCode& code, LabelSet labels) {
  return add(code, std::move(labels), ids_.size());
}

std::uint64_t CodeDatabase::add(const BinaryCode& code, LabelSet labels,
                                std::uint64_t id) {
  require_same_bits(bits_, code.bits());
  // Strictly increasing ids cannot collide; anything else needs a scan.
  if (!(ids_.empty() || ids_.back() < id)) {
    if (std::find(ids_.begin(), ids_.end(), id) != ids_.end()) {
      throw ArgumentError("duplicate record id " + std::to_string(id));
    }
  }
  words_.insert(words_.end(), code.words().begin(), code.words().end());
  ids_.push_back(id);
  labels_.push_back(normalize_labels(std::move(labels)));
  return id;
}

BinaryCode CodeDatabase::code(std::size_t index) const {
  BinaryCode c(bits_);
  const auto w = code_words(index);
  for (int i = 0; i < bits_; ++i) {
    if ((w[i >> 6] >> (i & 63)) & 1u) c.set_bit(i, true);
  }
  return c;
}

std::vector<int> batch_distances(const BinaryCode& query,
                                 const CodeDatabase& db) {
  require_same_bits(db.bits(), query.bits());
  const std::size_t n = db.size();
  const std::size_t words = db.words_per_code();
  std::vector<int> out(n);
  const std::uint64_t* base = n ? db.code_words(0).data() : nullptr;
  if (words == 1) {
    const std::uint64_t q = query.words()[0];
    for (std::size_t i = 0; i < n; ++i) out[i] = std::popcount(q ^ base[i]);
  } else {
    const std::uint64_t* q = query.words().data();
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = xor_popcount(q, base + i * words, words);
    }
  }
  return out;
}

QueryResult top_n(const BinaryCode& query, const CodeDatabase& db,
                  std::size_t n) {
  if (n < 1) throw ArgumentError("top_n: N must be at least 1");
  require_same_bits(db.bits(), query.bits());
  const auto dist = batch_distances(query, db);
  // Max-heap on (distance, index): the root is the current worst keeper.
  std::priority_queue<std::pair<int, std::size_t>> heap;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (heap.size() < n) {
      heap.emplace(dist[i], i);
    } else if (dist[i] < heap.top().first) {
      heap.pop();
      heap.emplace(dist[i], i);
    }
  }
  QueryResult result(heap.size());
  for (std::size_t r = result.size(); r-- > 0;) {
    const auto [d, i] = heap.top();
    heap.pop();
    result[r] = Hit{db.id(i), i, d};
  }
  return result;
}

namespace {
constexpr char kCodeMagic[5] = "HHFC";
}  // namespace

void write_code_file(std::ostream& out, const CodeDatabase& db) {
  using internal::write_le;
  out.write(kCodeMagic, 4);
  write_le<std::uint16_t>(out, kCodeFileVersion);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(db.bits()));
  write_le<std::uint64_t>(out, db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto bytes = db.code(i).to_bytes();
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto& labels = db.labels(i);
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(labels.size()));
    for (auto c : labels) write_le<std::uint32_t>(out, c);
  }
}

void write_code_file(const std::string& path, const CodeDatabase& db) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_code_file(out, db);
  if (!out) throw IoError("write failed on '" + path + "'");
}

CodeDatabase read_code_file(std::istream& in) {
  using internal::read_le;
  internal::expect_magic(in, kCodeMagic, "HHFC code");
  const auto version = read_le<std::uint16_t>(in, "version");
  if (version != kCodeFileVersion) {
    throw ParseError("unsupported code file version " +
                     std::to_string(version));
  }
  const int bits = read_le<std::uint16_t>(in, "code length");
  if (bits < 1) throw ParseError("code file declares zero-length codes");
  const auto count = read_le<std::uint64_t>(in, "record count");
  const std::size_t record = (static_cast<std::size_t>(bits) + 7) / 8;
  std::vector<BinaryCode> codes;
  codes.reserve(std::min<std::uint64_t>(count, 1u << 20));
  std::vector<std::uint8_t> buf(record);
  const unsigned tail = static_cast<unsigned>(bits % 8);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(record))) {
      throw ParseError("truncated code file at record " + std::to_string(i));
    }
    if (tail != 0 && (buf.back() >> tail) != 0) {
      throw ParseError("nonzero padding bits in record " + std::to_string(i));
    }
    codes.push_back(BinaryCode::from_bytes(buf, bits));
  }
  CodeDatabase db(bits);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto n = read_le<std::uint16_t>(in, "label count");
    LabelSet labels(n);
    for (auto& c : labels) c = read_le<std::uint32_t>(in, "label id");
    db.add(codes[i], std::move(labels));
  }
  return db;
}

CodeDatabase read_code_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_code_file(in);
}

}  // namespace hhf
