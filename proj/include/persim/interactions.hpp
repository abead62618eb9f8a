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
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "persim/error.hpp"

namespace persim {

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// The four implicit signals, ordered along the purchase funnel.
enum class EventKind : std::uint8_t { ListView = 0, Click = 1, AddToCart = 2, Order = 3 };

inline constexpr std::size_t kEventKindCount = 4;

inline constexpr std::array<EventKind, kEventKindCount> kAllEventKinds = {
    EventKind::ListView, EventKind::Click, EventKind::AddToCart, EventKind::Order};

inline std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ListView: return "list_view";
    case EventKind::Click: return "click";
    case EventKind::AddToCart: return "add_to_cart";
    case EventKind::Order: return "order";
  }
  return "unknown";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (EventKind k : kAllEventKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct Event {
  std::string user_id;
  std::string item_id;
  EventKind kind = EventKind::ListView;
  std::int64_t timestamp = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class ParseMode { Strict, Lenient };

struct ParseResult {
  std::vector<Event> events;
  /// Lines skipped in lenient mode; always empty in strict mode.
  std::vector<MalformedLine> rejected;
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Returns an error message, or nullopt on success.
inline std::optional<std::string> parse_event_line(std::string_view line, Event& out) {
  auto fields = split(line, ',');
  if (fields.size() != 4) {
    return "expected 4 fields, got " + std::to_string(fields.size());
  }
  if (fields[0].empty() || fields[1].empty()) return std::string("empty user or item id");
  auto kind = parse_event_kind(fields[2]);
  if (!kind) return "unknown event kind '" + std::string(fields[2]) + "'";
  std::int64_t ts = 0;
  auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), ts);
  if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
    return "timestamp is not an integer: '" + std::string(fields[3]) + "'";
  }
  if (ts < 0) return std::string("negative timestamp");
  out.user_id.assign(fields[0]);
  out.item_id.assign(fields[1]);
  out.kind = *kind;
  out.timestamp = ts;
  return std::nullopt;
}

}  // namespace detail

/// Reads `user_id,item_id,kind,timestamp` lines. Blank lines are ignored but
/// still counted for line numbers. Strict mode throws on the first bad line;
/// lenient mode records it and moves on.
inline ParseResult parse_events(std::istream& in, ParseMode mode = ParseMode::Strict) {
  ParseResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim_cr(raw);
    if (line.empty()) continue;
    Event ev;
    if (auto err = detail::parse_event_line(line, ev)) {
      if (mode == ParseMode::Strict) throw MalformedLine(line_no, *err);
      result.rejected.emplace_back(line_no, *err);
      continue;
    }
    result.events.push_back(std::move(ev));
  }
  return result;
}

inline void write_events(std::ostream& out, std::span<const Event> events) {
  for (const Event& e : events) {
    out << e.user_id << ',' << e.item_id << ',' << to_string(e.kind) << ',' << e.timestamp
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

/// Per-signal weights of the implicit rating. With `use_frequency` each
/// signal counts once per occurrence; otherwise only its presence counts.
struct RatingWeights {
  double list_view = 0.25;
  double click = 1.0;
  double cart = 1.0;
  double order = 1.0;
  bool use_frequency = false;

  double weight(EventKind kind) const {
    switch (kind) {
      case EventKind::ListView: return list_view;
      case EventKind::Click: return click;
      case EventKind::AddToCart: return cart;
      case EventKind::Order: return order;
    }
    return 0.0;
  }

  void validate() const {
    for (EventKind k : kAllEventKinds) {
      if (!(weight(k) >= 0.0)) throw ConfigInvalid("rating weights must be non-negative");
    }
    if (list_view == 0.0 && click == 0.0 && cart == 0.0 && order == 0.0) {
      throw ConfigInvalid("at least one rating weight must be positive");
    }
  }

  friend bool operator==(const RatingWeights&, const RatingWeights&) = default;
};

using KindCounts = std::array<std::uint32_t, kEventKindCount>;

inline double rating_from_counts(const KindCounts& counts, const RatingWeights& w) {
  double r = 0.0;
  for (EventKind k : kAllEventKinds) {
    auto n = counts[static_cast<std::size_t>(k)];
    if (n == 0) continue;
    r += w.weight(k) * (w.use_frequency ? static_cast<double>(n) : 1.0);
  }
  return r;
}

/// Rating of one (user, item) pair from its events. Order-invariant.
inline double compute_rating(std::span<const Event> events_for_pair, const RatingWeights& w) {
  KindCounts counts{};
  for (const Event& e : events_for_pair) ++counts[static_cast<std::size_t>(e.kind)];
  return rating_from_counts(counts, w);
}

// ---------------------------------------------------------------------------
// Id maps and the sparse rating matrix
// ---------------------------------------------------------------------------

/// Bijection between opaque string ids and contiguous indices, in insertion order.
class IdMap {
 public:
  IdMap() = default;

  explicit IdMap(std::vector<std::string> ids) {
    for (auto& id : ids) {
      if (!index_.emplace(id, ids_.size()).second) {
        throw ConfigInvalid("duplicate id '" + id + "'");
      }
      ids_.push_back(std::move(id));
    }
  }

  std::size_t intern(const std::string& id) {
    auto [it, inserted] = index_.emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
  }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& id(std::size_t index) const {
    if (index >= ids_.size()) throw IndexOutOfRange("id index " + std::to_string(index));
    return ids_[index];
  }

  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const std::string> ids() const noexcept { return ids_; }

  friend bool operator==(const IdMap& a, const IdMap& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One stored value of a sparse vector (a matrix row or column).
struct SparseEntry {
  std::size_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

struct RatingEntry {
  std::size_t user;
  std::size_t item;
  double rating;

  friend bool operator==(const RatingEntry&, const RatingEntry&) = default;
};

/// Sparse user x item matrix of positive ratings, stored both by row and by
/// column. Entries are kept sorted by (user, item).
class RatingMatrix {
 public:
  RatingMatrix() = default;

  RatingMatrix(IdMap users, IdMap items, std::vector<RatingEntry> entries)
      : users_(std::move(users)), items_(std::move(items)), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const RatingEntry& a, const RatingEntry& b) {
      return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    for (std::size_t n = 0; n < entries_.size(); ++n) {
      const auto& e = entries_[n];
      if (e.user >= users_.size() || e.item >= items_.size()) {
        throw IndexOutOfRange("rating entry outside matrix bounds");
      }
      if (!(e.rating > 0.0)) throw ConfigInvalid("stored ratings must be positive");
      if (n > 0 && entries_[n - 1].user == e.user && entries_[n - 1].item == e.item) {
        throw ConfigInvalid("duplicate (user, item) entry");
      }
    }
    build_compressed();
  }

  std::size_t n_users() const noexcept { return users_.size(); }
  std::size_t n_items() const noexcept { return items_.size(); }
  std::size_t nnz() const noexcept { return entries_.size(); }

  std::span<const RatingEntry> entries() const noexcept { return entries_; }
  const IdMap& user_ids() const noexcept { return users_; }
  const IdMap& item_ids() const noexcept { return items_; }

  /// Items rated by `u`, ascending by item index.
  std::span<const SparseEntry> user_row(std::size_t u) const {
    return std::span(row_values_).subspan(row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]);
  }

  /// Users who rated `i`, ascending by user index.
  std::span<const SparseEntry> item_column(std::size_t i) const {
    return std::span(col_values_).subspan(col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]);
  }

  double value(std::size_t u, std::size_t i) const {
    auto row = user_row(u);
    auto it = std::lower_bound(row.begin(), row.end(), i,
                               [](const SparseEntry& e, std::size_t idx) { return e.index < idx; });
    return (it != row.end() && it->index == i) ? it->value : 0.0;
  }

  bool contains(std::size_t u, std::size_t i) const { return value(u, i) > 0.0; }

  double density() const {
    double cells = static_cast<double>(n_users()) * static_cast<double>(n_items());
    return cells == 0.0 ? 0.0 : static_cast<double>(nnz()) / cells;
  }

  /// Same support with every rating replaced by 1.
  RatingMatrix binarized() const {
    std::vector<RatingEntry> ones(entries_.begin(), entries_.end());
    for (auto& e : ones) e.rating = 1.0;
    return RatingMatrix(users_, items_, std::move(ones));
  }

  friend bool operator==(const RatingMatrix& a, const RatingMatrix& b) {
    return a.users_ == b.users_ && a.items_ == b.items_ && a.entries_ == b.entries_;
  }

 private:
  void build_compressed() {
    row_ptr_.assign(n_users() + 1, 0);
    col_ptr_.assign(n_items() + 1, 0);
    for (const auto& e : entries_) {
      ++row_ptr_[e.user + 1];
      ++col_ptr_[e.item + 1];
    }
    for (std::size_t u = 0; u < n_users(); ++u) row_ptr_[u + 1] += row_ptr_[u];
    for (std::size_t i = 0; i < n_items(); ++i) col_ptr_[i + 1] += col_ptr_[i];

    row_values_.resize(entries_.size());
    col_values_.resize(entries_.size());
    std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    // entries_ is sorted by (user, item), so rows come out item-sorted and
    // columns come out user-sorted.
    for (std::size_t n = 0; n < entries_.size(); ++n) {
      const auto& e = entries_[n];
      row_values_[n] = {e.item, e.rating};
      col_values_[fill[e.item]++] = {e.user, e.rating};
    }
  }

  IdMap users_;
  IdMap items_;
  std::vector<RatingEntry> entries_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_ptr_{0};
  std::vector<SparseEntry> row_values_;
  std::vector<SparseEntry> col_values_;
};

/// Aggregates events into a rating matrix. Ids get indices in order of first
/// appearance; pairs whose rating is zero are left out.
inline RatingMatrix build_matrix(std::span<const Event> events, const RatingWeights& weights) {
  if (events.empty()) throw EmptyInput("cannot build a rating matrix from zero events");
  weights.validate();

  IdMap users;
  IdMap items;
  std::unordered_map<std::uint64_t, std::size_t> pair_slot;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<KindCounts> counts;

  for (const Event& e : events) {
    std::size_t u = users.intern(e.user_id);
    std::size_t i = items.intern(e.item_id);
    std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(i);
    auto [it, inserted] = pair_slot.emplace(key, pairs.size());
    if (inserted) {
      pairs.emplace_back(u, i);
      counts.push_back(KindCounts{});
    }
    ++counts[it->second][static_cast<std::size_t>(e.kind)];
  }

  std::vector<RatingEntry> entries;
  entries.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    double r = rating_from_counts(counts[p], weights);
    if (r > 0.0) entries.push_back({pairs[p].first, pairs[p].second, r});
  }
  return RatingMatrix(std::move(users), std::move(items), std::move(entries));
}

}  // namespace persim
