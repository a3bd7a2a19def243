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

// Minimum-distance bounds for binary linear codes and the inflection constant
// zeta = 1 - 2 * d_min / K derived from them.
//
// For K hash bits and C classes the relevant code is a [K, k] binary linear
// code with k = ceil(log2 C). The optimal minimum distance of such a code is
// bracketed by closed-form bounds; d_min is the bracket itself when it
// collapses to a point and its midpoint otherwise.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace hhf {

inline constexpr int kMaxCodeLength = 256;

struct CodeParams {
  int n = 0;  // code length in bits
  int k = 0;  // code dimension

  // Throws ArgumentError unless 1 <= k <= n <= kMaxCodeLength.
  void validate() const;
};

struct DistanceBound {
  int lower = 1;
  int upper = 1;

  bool contains(int d) const { return lower <= d && d <= upper; }
  bool operator==(const DistanceBound&) const = default;
};

// ceil(log2(num_classes)). Throws ArgumentError for num_classes < 2.
int dimension_for_classes(long num_classes);

// Individual upper bounds on the minimum distance of an [n, k] binary linear
// code. Exposed for tests; bound_range combines them.
int singleton_bound(const CodeParams& p);
int griesmer_bound(const CodeParams& p);
int plotkin_bound(const CodeParams& p);
int sphere_packing_bound(const CodeParams& p);

// Gilbert-Varshamov: an [n, k, d] linear code exists whenever
// sum_{i=0}^{d-2} C(n-1, i) < 2^(n-k). Returns the largest such d.
int gilbert_varshamov_bound(const CodeParams& p);

// Range guaranteed to contain the optimal minimum distance.
DistanceBound bound_range(const CodeParams& p);

// Exact optimal minimum distance by exhaustive search over systematic
// generator matrices. Feasible for k <= 6 and n <= 14 only; throws
// DomainError outside that range.
int exhaustive_dmin(const CodeParams& p);

inline constexpr int kOracleMaxDimension = 6;
inline constexpr int kOracleMaxLength = 14;

// Lower end if the range is a single point, midpoint otherwise.
double resolve_dmin(const DistanceBound& bound);

// zeta(K, C) = 1 - 2 * d_min / K for the [K, ceil(log2 C)] code.
// Throws ArgumentError on C < 2 or K outside [1, 256] and DomainError if
// ceil(log2 C) > K.
double zeta(int hash_bits, long num_classes);

class ZetaTable {
 public:
  ZetaTable() = default;
  ZetaTable(int max_bits, int max_classes)
      : max_bits_(max_bits), max_classes_(max_classes) {}

  int max_bits() const { return max_bits_; }
  int max_classes() const { return max_classes_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<double> lookup(int hash_bits, int num_classes) const;

  // Throws ArgumentError unless -1 <= value < 1.
  void set(int hash_bits, int num_classes, double value);

  // Entries from `other` replace ours; bounds grow to cover both.
  void override_with(const ZetaTable& other);

  const std::map<std::pair<int, int>, double>& entries() const {
    return entries_;
  }

  bool operator==(const ZetaTable&) const = default;

 private:
  int max_bits_ = 0;
  int max_classes_ = 0;
  std::map<std::pair<int, int>, double> entries_;
};

// Entry for every K in [1, max_bits] and C in [2, max_classes] with
// ceil(log2 C) <= K. Both limits must be <= 256.
ZetaTable generate_table(int max_bits, int max_classes);

// Text format: one "K<TAB>C<TAB>zeta" line per entry, zeta at 17 significant
// digits, ascending (K, C). Loading skips blank lines and '#' comments.
void export_table(const ZetaTable& table, std::ostream& out);
void export_table(const ZetaTable& table, const std::string& path);
ZetaTable load_table(std::istream& in);
ZetaTable load_table(const std::string& path);

}  // namespace hhf
