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

#pragma once

// Bit-packed binary codes and exact Hamming top-N retrieval.
//
// Layout: bit i of a code lives in word i / 64 at position i % 64, and a set
// bit encodes +1. Bits past the code length are always zero.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hhf/labels.h"

namespace hhf {

class BinaryCode {
 public:
  BinaryCode() = default;
  // All -1 (all bits clear).
  explicit BinaryCode(int bits);

  // Throws ArgumentError if an entry is not +1 or -1.
  static BinaryCode pack(std::span<const int> signs);
  // Binarizes with sgn(0) = +1.
  static BinaryCode from_latent(std::span<const double> latent);
  // Little-endian bytes as stored in code files, ceil(bits / 8) of them.
  static BinaryCode from_bytes(std::span<const std::uint8_t> bytes, int bits);

  std::vector<int> unpack() const;
  std::vector<std::uint8_t> to_bytes() const;
  // '0'/'1' characters, bit 0 first.
  std::string to_bit_string() const;
  static BinaryCode from_bit_string(const std::string& bits);

  int bits() const { return bits_; }
  std::span<const std::uint64_t> words() const { return words_; }
  bool bit(int i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set_bit(int i, bool value);

  bool operator==(const BinaryCode&) const = default;

 private:
  int bits_ = 0;
  std::vector<std::uint64_t> words_;
};

inline std::size_t words_for_bits(int bits) {
  return (static_cast<std::size_t>(bits) + 63) / 64;
}

// popcount(a XOR b). Throws ShapeError on differing lengths.
int hamming_distance(const BinaryCode& a, const BinaryCode& b);

struct Hit {
  std::uint64_t id;
  std::size_t index;  // insertion position in the database
  int distance;

  bool operator==(const Hit&) const = default;
};

using QueryResult = std::vector<Hit>;

// Immutable after construction; safe for concurrent readers.
class CodeDatabase {
 public:
  explicit CodeDatabase(int bits);

  // `id` defaults to the insertion index. Throws ShapeError on a length
  // mismatch and ArgumentError on a duplicate id.
  std::uint64_t add(const BinaryCode& code, LabelSet labels);
  std::uint64_t add(const BinaryCode& code, LabelSet labels, std::uint64_t id);

  int bits() const { return bits_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t words_per_code() const { return words_per_code_; }

  BinaryCode code(std::size_t index) const;
  std::span<const std::uint64_t> code_words(std::size_t index) const {
    return {words_.data() + index * words_per_code_, words_per_code_};
  }
  std::uint64_t id(std::size_t index) const { return ids_[index]; }
  const LabelSet& labels(std::size_t index) const { return labels_[index]; }
  const std::vector<LabelSet>& all_labels() const { return labels_; }

 private:
  int bits_;
  std::size_t words_per_code_;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> ids_;
  std::vector<LabelSet> labels_;
};

// Distance from `query` to every entry, database order.
std::vector<int> batch_distances(const BinaryCode& query,
                                 const CodeDatabase& db);

// The `n` nearest entries by (distance, insertion index), or all of them if
// the database is smaller. Throws ArgumentError for n < 1.
QueryResult top_n(const BinaryCode& query, const CodeDatabase& db,
                  std::size_t n);

// "HHFC" code files: magic, u16 version, u16 bits, u64 count, then count
// records of ceil(bits / 8) bytes, then count label records (u16 count and
// that many u32 ids). Integers are little-endian. Record ids are not stored;
// a loaded database numbers its entries 0..count-1.
inline constexpr std::uint16_t kCodeFileVersion = 1;

void write_code_file(std::ostream& out, const CodeDatabase& db);
void write_code_file(const std::string& path, const CodeDatabase& db);
CodeDatabase read_code_file(std::istream& in);
CodeDatabase read_code_file(const std::string& path);

}  // namespace hhf
