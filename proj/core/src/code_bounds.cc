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

#include "hhf/code_bounds.h"

#include <algorithm>
#include <array>
#include <bit>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "hhf/error.h"
#include "hhf/matrix.h"

namespace hhf {

namespace {

using BigInt = boost::multiprecision::cpp_int;

BigInt pow2(int e) { return BigInt(1) << e; }

// Row `n` of Pascal's triangle, C(n, 0..n).
std::vector<BigInt> binomial_row(int n) {
  std::vector<BigInt> row(n + 1);
  row[0] = 1;
  for (int i = 1; i <= n; ++i) row[i] = row[i - 1] * (n - i + 1) / i;
  return row;
}

}  // namespace

void CodeParams::validate() const {
  if (k < 1 || n < k || n > kMaxCodeLength) {
    throw ArgumentError("invalid code parameters [n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) +
                        "]: need 1 <= k <= n <= 256");
  }
}

int dimension_for_classes(long num_classes) {
  if (num_classes < 2) {
    throw ArgumentError("a problem with " + std::to_string(num_classes) +
                        " class(es) is degenerate: need at least 2");
  }
  int k = 0;
  long capacity = 1;
  while (capacity < num_classes) {
    capacity *= 2;
    ++k;
  }
  return k;
}

int singleton_bound(const CodeParams& p) {
  p.validate();
  return p.n - p.k + 1;
}

int griesmer_bound(const CodeParams& p) {
  p.validate();
  auto length_needed = [&](int d) {
    long total = 0;
    for (int i = 0; i < p.k; ++i) {
      total += i < 30 ? (d + (1L << i) - 1) >> i : 1;
    }
    return total;
  };
  int d = p.n;
  while (d > 1 && length_needed(d) > p.n) --d;
  return d;
}

int plotkin_bound(const CodeParams& p) {
  p.validate();
  // The 2^k - 1 nonzero codewords have total weight at most n * 2^(k-1), so
  // the minimum weight cannot exceed the average.
  const BigInt num = BigInt(p.n) * pow2(p.k - 1);
  const BigInt den = pow2(p.k) - 1;
  return static_cast<int>(BigInt(num / den));
}

int sphere_packing_bound(const CodeParams& p) {
  p.validate();
  const auto binom = binomial_row(p.n);
  const BigInt budget = pow2(p.n - p.k);
  // Largest t with sum_{i<=t} C(n, i) <= 2^(n-k); then d <= 2t + 2.
  BigInt volume = 0;
  int t = -1;
  while (t + 1 <= p.n) {
    volume += binom[t + 1];
    if (volume > budget) break;
    ++t;
  }
  return std::min(p.n, 2 * t + 2);
}

int gilbert_varshamov_bound(const CodeParams& p) {
  p.validate();
  const auto binom = binomial_row(p.n - 1);
  const BigInt budget = pow2(p.n - p.k);
  int d = 1;
  BigInt sum = 0;  // sum_{i=0}^{d-1} C(n-1, i): the existence test for d + 1
  while (d < p.n) {
    sum += binom[d - 1];
    if (sum >= budget) break;
    ++d;
  }
  return d;
}

DistanceBound bound_range(const CodeParams& p) {
  p.validate();
  const int upper = std::min({singleton_bound(p), griesmer_bound(p),
                              plotkin_bound(p), sphere_packing_bound(p)});
  const int lower = gilbert_varshamov_bound(p);
  return {std::min(lower, upper), upper};
}

namespace {

// Branch and bound over systematic generator matrices [I_k | A]. A code is
// the multiset of its columns (column order does not change weights), so the
// redundancy columns are enumerated as non-decreasing sequences of nonzero
// k-bit vectors. The codeword for message m has weight equal to the number of
// columns c with <m, c> = 1 over GF(2).
class DminSearch {
 public:
  explicit DminSearch(const CodeParams& p)
      : k_(p.k), redundancy_(p.n - p.k), messages_((1 << p.k) - 1) {
    for (int m = 1; m <= messages_; ++m) {
      weights_[m] = std::popcount(static_cast<unsigned>(m));
    }
    best_ = current_min();
  }

  int run() {
    descend(1, redundancy_);
    return best_;
  }

 private:
  int current_min() const {
    int lo = 1 << 30;
    for (int m = 1; m <= messages_; ++m) lo = std::min(lo, weights_[m]);
    return lo;
  }

  // Can `remaining` more columns lift every weight above best_?
  bool can_improve(int remaining) const {
    const int target = best_ + 1;
    long deficit = 0;
    for (int m = 1; m <= messages_; ++m) {
      const int need = target - weights_[m];
      if (need > remaining) return false;
      if (need > 0) deficit += need;
    }
    // Every nonzero column adds weight to exactly 2^(k-1) messages.
    return deficit <= static_cast<long>(remaining) << (k_ - 1);
  }

  void apply(int column, int sign) {
    for (int m = 1; m <= messages_; ++m) {
      weights_[m] +=
          sign * (std::popcount(static_cast<unsigned>(m & column)) & 1);
    }
  }

  void descend(int first_column, int remaining) {
    if (remaining == 0) {
      best_ = std::max(best_, current_min());
      return;
    }
    if (!can_improve(remaining)) return;
    for (int c = first_column; c <= messages_; ++c) {
      apply(c, +1);
      descend(c, remaining - 1);
      apply(c, -1);
      if (!can_improve(remaining)) return;
    }
  }

  int k_;
  int redundancy_;
  int messages_;
  int best_ = 0;
  std::array<int, 64> weights_{};
};

}  // namespace

int exhaustive_dmin(const CodeParams& p) {
  p.validate();
  if (p.k > kOracleMaxDimension || p.n > kOracleMaxLength) {
    throw DomainError("exhaustive_dmin: [n=" + std::to_string(p.n) +
                      ", k=" + std::to_string(p.k) +
                      "] is outside the oracle range k <= 6, n <= 14");
  }
  return DminSearch(p).run();
}

double resolve_dmin(const DistanceBound& bound) {
  if (bound.lower == bound.upper) return bound.lower;
  return (bound.lower + bound.upper) / 2.0;
}

namespace {

void check_hash_bits(int hash_bits) {
  if (hash_bits < 1 || hash_bits > kMaxCodeLength) {
    throw ArgumentError("hash bit length " + std::to_string(hash_bits) +
                        " outside [1, 256]");
  }
}

double zeta_from_bound(int hash_bits, const DistanceBound& b) {
  return 1.0 - 2.0 * resolve_dmin(b) / hash_bits;
}

}  // namespace

double zeta(int hash_bits, long num_classes) {
  check_hash_bits(hash_bits);
  const int k = dimension_for_classes(num_classes);
  if (k > hash_bits) {
    throw DomainError("no binary linear code: " + std::to_string(num_classes) +
                      " classes need dimension " + std::to_string(k) + " > " +
                      std::to_string(hash_bits) + " bits");
  }
  return zeta_from_bound(hash_bits, bound_range({hash_bits, k}));
}

std::optional<double> ZetaTable::lookup(int hash_bits, int num_classes) const {
  const auto it = entries_.find({hash_bits, num_classes});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ZetaTable::set(int hash_bits, int num_classes, double value) {
  if (!(value >= -1.0 && value < 1.0)) {
    throw ArgumentError("zeta(" + std::to_string(hash_bits) + ", " +
                        std::to_string(num_classes) +
                        ") = " + format_double(value) + " outside [-1, 1)");
  }
  entries_[{hash_bits, num_classes}] = value;
  max_bits_ = std::max(max_bits_, hash_bits);
  max_classes_ = std::max(max_classes_, num_classes);
}

void ZetaTable::override_with(const ZetaTable& other) {
  for (const auto& [key, value] : other.entries_) entries_[key] = value;
  max_bits_ = std::max(max_bits_, other.max_bits_);
  max_classes_ = std::max(max_classes_, other.max_classes_);
}

ZetaTable generate_table(int max_bits, int max_classes) {
  if (max_bits < 1 || max_bits > kMaxCodeLength || max_classes < 2 ||
      max_classes > kMaxCodeLength) {
    throw ArgumentError(
        "table limits must satisfy 1 <= max_bits <= 256 and "
        "2 <= max_classes <= 256");
  }
  ZetaTable table(max_bits, max_classes);
  const int max_k = dimension_for_classes(max_classes);
  for (int bits = 1; bits <= max_bits; ++bits) {
    std::vector<double> by_dimension(max_k + 1, 0.0);
    for (int k = 1; k <= std::min(max_k, bits); ++k) {
      by_dimension[k] = zeta_from_bound(bits, bound_range({bits, k}));
    }
    for (int classes = 2; classes <= max_classes; ++classes) {
      const int k = dimension_for_classes(classes);
      if (k <= bits) table.set(bits, classes, by_dimension[k]);
    }
  }
  return table;
}

void export_table(const ZetaTable& table, std::ostream& out) {
  for (const auto& [key, value] : table.entries()) {
    out << key.first << '\t' << key.second << '\t' << format_double(value)
        << '\n';
  }
}

void export_table(const ZetaTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  export_table(table, out);
  if (!out) throw IoError("write failed on '" + path + "'");
}

namespace {

[[noreturn]] void table_error(std::size_t line, int column,
                              const std::string& msg) {
  throw ParseError("zeta table line " + std::to_string(line) + ", column " +
                   std::to_string(column) + ": " + msg);
}

long parse_int_field(const std::string& s, std::size_t line, int column) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    table_error(line, column, "expected an integer, got '" + s + "'");
  }
  return v;
}

}  // namespace

ZetaTable load_table(std::istream& in) {
  ZetaTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(
          pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() != 3) {
      table_error(line_no,
                  static_cast<int>(std::min<std::size_t>(fields.size() + 1, 4)),
                  "expected 3 tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    const long bits = parse_int_field(fields[0], line_no, 1);
    const long classes = parse_int_field(fields[1], line_no, 2);
    if (bits < 1 || bits > kMaxCodeLength) {
      table_error(line_no, 1, "hash bits " + fields[0] + " outside [1, 256]");
    }
    if (classes < 2 || classes > kMaxCodeLength) {
      table_error(line_no, 2, "class count " + fields[1] + " outside [2, 256]");
    }
    char* end = nullptr;
    const double value = std::strtod(fields[2].c_str(), &end);
    if (fields[2].empty() || end != fields[2].c_str() + fields[2].size()) {
      table_error(line_no, 3,
                  "expected a real number, got '" + fields[2] + "'");
    }
    if (!(value >= -1.0 && value < 1.0)) {
      table_error(line_no, 3, "zeta " + fields[2] + " outside [-1, 1)");
    }
    table.set(static_cast<int>(bits), static_cast<int>(classes), value);
  }
  return table;
}

ZetaTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_table(in);
}

}  // namespace hhf
