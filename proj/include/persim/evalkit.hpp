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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "persim/error.hpp"
#include "persim/factor_model.hpp"
#include "persim/interactions.hpp"
#include "persim/reranker.hpp"
#include "persim/simcore.hpp"

namespace persim {

inline constexpr std::size_t kDefaultEvalK = 15;

/// One evaluation case: the user's first test item is the query; the rest of
/// their distinct test items are the ground truth (sorted, unique).
struct EvalQuery {
  std::size_t user;
  std::size_t query_item;
  std::vector<std::size_t> ground_truth;

  friend bool operator==(const EvalQuery&, const EvalQuery&) = default;
};

struct QueryMetrics {
  std::size_t user;
  std::size_t query_item;
  std::size_t hits;
  double average_precision;
  double precision;
  double recall;
};

struct EvalReport {
  std::size_t k = kDefaultEvalK;
  std::size_t n_queries = 0;
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  double map_at_k = 0.0;
  std::vector<QueryMetrics> per_query;
};

/// Chronological split: train = timestamp < boundary, test = the rest.
/// Both halves come out timestamp-sorted (stable).
inline std::pair<std::vector<Event>, std::vector<Event>> split_events(std::span<const Event> events,
                                                                      std::int64_t boundary) {
  std::vector<Event> sorted(events.begin(), events.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  auto cut = std::partition_point(sorted.begin(), sorted.end(),
                                  [boundary](const Event& e) { return e.timestamp < boundary; });
  std::vector<Event> train(std::make_move_iterator(sorted.begin()), std::make_move_iterator(cut));
  std::vector<Event> test(std::make_move_iterator(cut), std::make_move_iterator(sorted.end()));
  return {std::move(train), std::move(test)};
}

/// Builds one query per user known to the training vocabulary. Only items in
/// the training vocabulary are considered; users without a query or with an
/// empty ground truth are dropped. Queries follow first appearance of the
/// user in the timestamp-ordered test events.
inline std::vector<EvalQuery> build_queries(std::span<const Event> test_events, const IdMap& users,
                                            const IdMap& items) {
  std::vector<const Event*> ordered;
  ordered.reserve(test_events.size());
  for (const auto& e : test_events) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Event* a, const Event* b) { return a->timestamp < b->timestamp; });

  std::vector<std::size_t> user_order;
  std::unordered_map<std::size_t, std::vector<std::size_t>> items_by_user;
  for (const Event* e : ordered) {
    auto u = users.find(e->user_id);
    auto i = items.find(e->item_id);
    if (!u || !i) continue;
    auto [it, inserted] = items_by_user.try_emplace(*u);
    if (inserted) user_order.push_back(*u);
    it->second.push_back(*i);
  }

  std::vector<EvalQuery> queries;
  for (std::size_t u : user_order) {
    const auto& seq = items_by_user[u];
    EvalQuery q{u, seq.front(), {}};
    for (std::size_t i : seq) {
      if (i != q.query_item) q.ground_truth.push_back(i);
    }
    std::sort(q.ground_truth.begin(), q.ground_truth.end());
    q.ground_truth.erase(std::unique(q.ground_truth.begin(), q.ground_truth.end()),
                         q.ground_truth.end());
    if (!q.ground_truth.empty()) queries.push_back(std::move(q));
  }
  return queries;
}

inline std::vector<EvalQuery> build_queries(std::span<const Event> test_events,
                                            const RatingMatrix& train) {
  return build_queries(test_events, train.user_ids(), train.item_ids());
}

namespace detail {
inline bool in_truth(std::span<const std::size_t> truth, std::size_t item) {
  return std::binary_search(truth.begin(), truth.end(), item);
}
}  // namespace detail

/// AP@k = sum of precision@r over relevant ranks r <= k, divided by
/// min(|truth|, k). `truth` must be sorted.
inline double average_precision(std::span<const std::size_t> predicted,
                                std::span<const std::size_t> truth, std::size_t k) {
  if (truth.empty()) throw EmptyTruth("average precision needs a non-empty truth set");
  if (k == 0) throw ConfigInvalid("k must be at least 1");
  double sum = 0.0;
  std::size_t hits = 0;
  std::size_t depth = std::min(k, predicted.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (detail::in_truth(truth, predicted[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(std::min(truth.size(), k));
}

inline std::size_t hits_at_k(std::span<const std::size_t> predicted,
                             std::span<const std::size_t> truth, std::size_t k) {
  std::size_t hits = 0;
  std::size_t depth = std::min(k, predicted.size());
  for (std::size_t r = 0; r < depth; ++r) hits += detail::in_truth(truth, predicted[r]) ? 1 : 0;
  return hits;
}

inline double precision_at_k(std::span<const std::size_t> predicted,
                             std::span<const std::size_t> truth, std::size_t k) {
  return static_cast<double>(hits_at_k(predicted, truth, k)) / static_cast<double>(k);
}

inline double recall_at_k(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> truth, std::size_t k) {
  if (truth.empty()) throw EmptyTruth("recall needs a non-empty truth set");
  return static_cast<double>(hits_at_k(predicted, truth, k)) / static_cast<double>(truth.size());
}

using RecommendFn = std::function<RankedList(std::size_t user, std::size_t item)>;

/// Scores every query with the injected recommender; aggregates are plain
/// means accumulated in query order.
inline EvalReport evaluate(std::span<const EvalQuery> queries, const RecommendFn& recommend,
                           std::size_t k = kDefaultEvalK) {
  if (k == 0) throw ConfigInvalid("k must be at least 1");
  if (queries.empty()) throw NoQueries("no evaluation queries");
  EvalReport report;
  report.k = k;
  report.n_queries = queries.size();
  std::vector<std::size_t> predicted;
  for (const auto& q : queries) {
    RankedList list = recommend(q.user, q.query_item);
    predicted.clear();
    for (const auto& e : list.entries) predicted.push_back(e.item);
    QueryMetrics qm{q.user, q.query_item, hits_at_k(predicted, q.ground_truth, k),
                    average_precision(predicted, q.ground_truth, k), 0.0, 0.0};
    qm.precision = static_cast<double>(qm.hits) / static_cast<double>(k);
    qm.recall = static_cast<double>(qm.hits) / static_cast<double>(q.ground_truth.size());
    report.per_query.push_back(qm);
  }
  for (const auto& qm : report.per_query) {
    report.precision_at_k += qm.precision;
    report.recall_at_k += qm.recall;
    report.map_at_k += qm.average_precision;
  }
  double n = static_cast<double>(report.n_queries);
  report.precision_at_k /= n;
  report.recall_at_k /= n;
  report.map_at_k /= n;
  return report;
}

/// Area under the ROC curve for one user's scores: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
inline double user_auc(const FactorModel& model, std::size_t u,
                       std::span<const std::size_t> positives,
                       std::span<const std::size_t> negatives) {
  if (positives.empty() || negatives.empty()) throw EmptyTruth("AUC needs both classes");
  std::vector<double> neg_scores;
  neg_scores.reserve(negatives.size());
  for (std::size_t j : negatives) neg_scores.push_back(user_item_score(model, u, j));
  std::sort(neg_scores.begin(), neg_scores.end());
  double correct = 0.0;
  for (std::size_t i : positives) {
    double s = user_item_score(model, u, i);
    auto lo = std::lower_bound(neg_scores.begin(), neg_scores.end(), s);
    auto hi = std::upper_bound(lo, neg_scores.end(), s);
    correct += static_cast<double>(lo - neg_scores.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return correct / (static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
}

inline nlohmann::json to_json(const EvalReport& r) {
  return nlohmann::json{{"k", r.k},
                        {"n_queries", r.n_queries},
                        {"precision_at_k", r.precision_at_k},
                        {"recall_at_k", r.recall_at_k},
                        {"map_at_k", r.map_at_k}};
}

inline void write_per_query_csv(std::ostream& out, const EvalReport& r, const IdMap& users,
                                const IdMap& items) {
  out << "user_id,query_item_id,hits,ap,precision,recall\n";
  for (const auto& q : r.per_query) {
    out << users.id(q.user) << ',' << items.id(q.query_item) << ',' << q.hits << ','
        << format_g9(q.average_precision) << ',' << format_g9(q.precision) << ','
        << format_g9(q.recall) << '\n';
  }
}

}  // namespace persim
