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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "persim/error.hpp"
#include "persim/factor_model.hpp"
#include "persim/simcore.hpp"

namespace persim {

/// `alpha` weights the user-preference score; 1 - alpha weights the
/// product-product similarity.
struct BlendConfig {
  double alpha = 0.2;
  std::size_t top_k = 15;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigInvalid("alpha must lie in [0, 1]");
  }
};

struct RankedEntry {
  std::size_t item;
  double blended;
  double similarity;  // min-max normalised over the candidate list
  double preference;  // min-max normalised over the candidate list

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
  std::size_t query_item = 0;
  std::optional<std::size_t> user;  // nullopt: anonymous
  std::vector<RankedEntry> entries;
};

inline double user_item_score(const FactorModel& model, std::size_t u, std::size_t i) {
  if (u >= model.n_users()) throw IndexOutOfRange("user index " + std::to_string(u));
  if (i >= model.n_items()) throw IndexOutOfRange("item index " + std::to_string(i));
  return dot(model.user(u), model.item(i));
}

/// Rescales to [0, 1] by (v - min) / (max - min); a constant list maps to 0.5.
inline std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.5);
  if (values.empty()) return out;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t n = 0; n < values.size(); ++n) out[n] = (values[n] - *lo) / range;
  return out;
}

/// Blends the query's candidate similarities with the user's latent affinity.
/// Users outside the model (or none at all) get the non-personalised order.
inline RankedList rerank(std::optional<std::size_t> user, std::size_t query,
                         const CandidateIndex& candidates, const FactorModel& model,
                         const BlendConfig& cfg) {
  cfg.validate();
  if (query >= candidates.n_items()) {
    throw UnknownQueryItem("query item " + std::to_string(query) + " is not in the index");
  }
  if (user && *user >= model.n_users()) user.reset();

  auto list = candidates.neighbors(query);
  std::vector<double> sims(list.size());
  std::vector<double> prefs(list.size(), 0.0);
  for (std::size_t n = 0; n < list.size(); ++n) {
    sims[n] = list[n].score;
    if (user) prefs[n] = user_item_score(model, *user, list[n].item);
  }
  auto norm_sims = min_max_normalize(sims);
  auto norm_prefs = min_max_normalize(prefs);
  const double alpha = user ? cfg.alpha : 0.0;

  RankedList out;
  out.query_item = query;
  out.user = user;
  out.entries.reserve(list.size());
  for (std::size_t n = 0; n < list.size(); ++n) {
    if (list[n].item == query) continue;
    double blended = alpha * norm_prefs[n] + (1.0 - alpha) * norm_sims[n];
    out.entries.push_back({list[n].item, blended, norm_sims[n], norm_prefs[n]});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.blended != b.blended) return a.blended > b.blended;
    return a.item < b.item;
  });
  if (out.entries.size() > cfg.top_k) out.entries.resize(cfg.top_k);
  return out;
}

}  // namespace persim
