// Copyright 2026 The Persim Authors.
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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "persim/detail/parallel.hpp"
#include "persim/error.hpp"
#include "persim/interactions.hpp"

namespace persim {

inline double squared_norm(std::span<const SparseEntry> v) {
  double s = 0.0;
  for (const auto& e : v) s += e.value * e.value;
  return s;
}

/// Cosine similarity of two index-sorted sparse vectors; 0 if either is zero.
/// Bitwise symmetric in its arguments.
inline double cosine(std::span<const SparseEntry> a, std::span<const SparseEntry> b) {
  double na = squared_norm(a);
  double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double d = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->index < ib->index) {
      ++ia;
    } else if (ib->index < ia->index) {
      ++ib;
    } else {
      d += ia->value * ib->value;
      ++ia;
      ++ib;
    }
  }
  return d / (std::sqrt(na) * std::sqrt(nb));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
  return s;
}

struct Neighbor {
  std::size_t item;
  double score;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Descending score, then ascending item index.
inline bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

/// Per-item list of the most cosine-similar other items.
class CandidateIndex {
 public:
  CandidateIndex() = default;
  CandidateIndex(std::size_t max_neighbors, std::vector<std::vector<Neighbor>> lists)
      : max_neighbors_(max_neighbors), lists_(std::move(lists)) {}

  std::size_t n_items() const noexcept { return lists_.size(); }
  std::size_t max_neighbors() const noexcept { return max_neighbors_; }

  std::span<const Neighbor> neighbors(std::size_t item) const {
    if (item >= lists_.size()) throw IndexOutOfRange("item " + std::to_string(item));
    return lists_[item];
  }

  friend bool operator==(const CandidateIndex&, const CandidateIndex&) = default;

 private:
  std::size_t max_neighbors_ = 0;
  std::vector<std::vector<Neighbor>> lists_;
};

inline constexpr std::size_t kDefaultCandidates = 100;

/// Exact top-N item-item cosine neighbours over rating-matrix columns.
///
/// Co-occurrence dot products are accumulated through the user rows, visiting
/// users of the query column in ascending order, which reproduces the
/// summation order of a plain column-by-column cosine. Items with an empty
/// column get no neighbours and are never anyone's neighbour.
inline CandidateIndex build_candidate_index(const RatingMatrix& m,
                                            std::size_t n = kDefaultCandidates,
                                            unsigned threads = 1) {
  if (m.n_items() < 2) throw TooFewItems("candidate index needs at least 2 items");
  if (n == 0) throw ConfigInvalid("candidate count must be at least 1");

  const std::size_t n_items = m.n_items();
  std::vector<double> norms(n_items);
  for (std::size_t i = 0; i < n_items; ++i) norms[i] = std::sqrt(squared_norm(m.item_column(i)));

  std::vector<std::vector<Neighbor>> lists(n_items);
  detail::parallel_blocks(n_items, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(n_items, 0.0);
    std::vector<Neighbor> scored;
    for (std::size_t i = begin; i < end; ++i) {
      if (norms[i] == 0.0) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const auto& ue : m.item_column(i)) {
        for (const auto& ie : m.user_row(ue.index)) acc[ie.index] += ue.value * ie.value;
      }
      scored.clear();
      for (std::size_t j = 0; j < n_items; ++j) {
        if (j == i || norms[j] == 0.0) continue;
        scored.push_back({j, acc[j] / (norms[i] * norms[j])});
      }
      std::size_t keep = std::min(n, scored.size());
      std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                        scored.end(), neighbor_before);
      lists[i].assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep));
    }
  });
  return CandidateIndex(n, std::move(lists));
}

// ---------------------------------------------------------------------------
// CSV persistence: item_id,rank,neighbor_item_id,score (rank is 1-based).
// ---------------------------------------------------------------------------

inline std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_candidates_csv(std::ostream& out, const CandidateIndex& index,
                                 const IdMap& items) {
  out << "item_id,rank,neighbor_item_id,score\n";
  for (std::size_t i = 0; i < index.n_items(); ++i) {
    std::size_t rank = 0;
    for (const auto& nb : index.neighbors(i)) {
      out << items.id(i) << ',' << ++rank << ',' << items.id(nb.item) << ','
          << format_g9(nb.score) << '\n';
    }
  }
}

/// Loads an index written by write_candidates_csv against a known item id map.
inline CandidateIndex read_candidates_csv(std::istream& in, const IdMap& items) {
  std::vector<std::vector<Neighbor>> lists(items.size());
  std::string raw;
  std::size_t line_no = 0;
  std::size_t widest = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim_cr(raw);
    if (line.empty() || (line_no == 1 && line.starts_with("item_id,"))) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 4) throw MalformedLine(line_no, "candidate row needs 4 fields");
    auto item = items.find(std::string(f[0]));
    auto nb = items.find(std::string(f[2]));
    if (!item || !nb) throw MalformedLine(line_no, "unknown item id");
    std::size_t rank = std::stoul(std::string(f[1]));
    if (rank != lists[*item].size() + 1) throw MalformedLine(line_no, "ranks out of order");
    lists[*item].push_back({*nb, std::stod(std::string(f[3]))});
    widest = std::max(widest, lists[*item].size());
  }
  return CandidateIndex(widest, std::move(lists));
}

}  // namespace persim
