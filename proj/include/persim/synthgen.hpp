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
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "persim/error.hpp"
#include "persim/factor_model.hpp"
#include "persim/interactions.hpp"

namespace persim {

/// Conditional probabilities of each funnel step given the previous one.
struct FunnelProbs {
  double click_given_view = 0.3;
  double cart_given_click = 0.3;
  double order_given_cart = 0.5;
};

struct SynthConfig {
  std::size_t n_users = 2000;
  std::size_t n_items = 500;
  std::size_t n_styles = 10;
  std::size_t k_true = 8;
  double events_per_user = 10.0;
  FunnelProbs funnel;
  double taste_sharpness = 8.0;
  /// Mean number of consecutive views sharing one style.
  double views_per_session = 3.0;
  /// Event timestamps are drawn from [0, time_horizon).
  std::int64_t time_horizon = 1'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_users == 0 || n_items == 0 || n_styles == 0 || k_true == 0) {
      throw ConfigInvalid("synth: counts must be positive");
    }
    if (n_styles > n_items) throw ConfigInvalid("synth: n_styles must not exceed n_items");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(funnel.click_given_view) || !prob(funnel.cart_given_click) ||
        !prob(funnel.order_given_cart)) {
      throw ConfigInvalid("synth: funnel probabilities must lie in [0, 1]");
    }
    if (!(taste_sharpness >= 0.0)) throw ConfigInvalid("synth: taste_sharpness must be >= 0");
    if (!(events_per_user > 0.0)) throw ConfigInvalid("synth: events_per_user must be positive");
    if (!(views_per_session >= 1.0)) throw ConfigInvalid("synth: views_per_session must be >= 1");
    if (time_horizon <= 0) throw ConfigInvalid("synth: time_horizon must be positive");
  }
};

struct SynthData {
  std::vector<Event> events;
  /// affinity(u, i) = taste_u · latent_i, the quantity views are sampled from.
  FactorMatrix affinity;
  std::vector<std::size_t> item_style;
  /// Style carrying the largest weight in each user's taste.
  std::vector<std::size_t> user_top_style;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

namespace detail {

inline std::string padded_id(char prefix, std::size_t n, std::size_t width) {
  std::string digits = std::to_string(n);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace detail

/// Planted-taste event log.
///
/// Items belong to styles and sit near their style centroid in a k_true
/// dimensional space. Each user's taste mixes one dominant style with an
/// optional weaker second one. A user's views are drawn with probability
/// proportional to exp(taste_sharpness * affinity), grouped into
/// single-style sessions; every view then walks down the click / cart /
/// order funnel with probabilities nudged up by the user's affinity.
inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(cfg.k_true);

  SynthData out;
  out.user_ids.reserve(cfg.n_users);
  out.item_ids.reserve(cfg.n_items);
  for (std::size_t u = 0; u < cfg.n_users; ++u) out.user_ids.push_back(detail::padded_id('u', u, 5));
  for (std::size_t i = 0; i < cfg.n_items; ++i) out.item_ids.push_back(detail::padded_id('p', i, 5));

  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(cfg.n_styles), k);
  for (Eigen::Index s = 0; s < centroids.rows(); ++s) {
    for (Eigen::Index f = 0; f < k; ++f) centroids(s, f) = gauss(rng);
    centroids.row(s).normalize();
  }

  // Round-robin styles, shuffled so every style is populated.
  out.item_style.resize(cfg.n_items);
  for (std::size_t i = 0; i < cfg.n_items; ++i) out.item_style[i] = i % cfg.n_styles;
  std::shuffle(out.item_style.begin(), out.item_style.end(), rng);

  constexpr double kItemNoise = 0.25;
  Eigen::MatrixXd item_latent(static_cast<Eigen::Index>(cfg.n_items), k);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    auto row = item_latent.row(static_cast<Eigen::Index>(i));
    row = centroids.row(static_cast<Eigen::Index>(out.item_style[i]));
    for (Eigen::Index f = 0; f < k; ++f) row(f) += kItemNoise * gauss(rng) / std::sqrt(double(k));
  }

  constexpr double kTasteNoise = 0.25;
  std::uniform_int_distribution<std::size_t> pick_style(0, cfg.n_styles - 1);
  Eigen::MatrixXd taste(static_cast<Eigen::Index>(cfg.n_users), k);
  out.user_top_style.resize(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    std::size_t primary = pick_style(rng);
    auto row = taste.row(static_cast<Eigen::Index>(u));
    row = centroids.row(static_cast<Eigen::Index>(primary));
    if (cfg.n_styles > 1 && unit(rng) < 0.5) {
      std::size_t secondary = pick_style(rng);
      double w = 0.2 + 0.4 * unit(rng);
      row += w * centroids.row(static_cast<Eigen::Index>(secondary));
    }
    for (Eigen::Index f = 0; f < k; ++f) row(f) += kTasteNoise * gauss(rng) / std::sqrt(double(k));
    out.user_top_style[u] = primary;
  }

  out.affinity = taste * item_latent.transpose();

  // Views come in sessions. A session picks one style with probability equal
  // to that style's share of the user's view distribution, then draws items
  // within the style; the per-view marginal stays proportional to
  // exp(taste_sharpness * affinity).
  std::poisson_distribution<int> n_views(cfg.events_per_user);
  std::poisson_distribution<int> extra_session_views(std::max(0.0, cfg.views_per_session - 1.0));
  std::uniform_int_distribution<std::int64_t> when(0, cfg.time_horizon - 1);
  std::vector<std::vector<std::size_t>> style_items(cfg.n_styles);
  for (std::size_t i = 0; i < cfg.n_items; ++i) style_items[out.item_style[i]].push_back(i);
  std::vector<double> style_mass(cfg.n_styles);
  std::vector<std::vector<double>> within(cfg.n_styles);
  constexpr std::int64_t kFunnelGap = 1;
  constexpr std::int64_t kViewGap = 60;

  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    auto aff = out.affinity.row(static_cast<Eigen::Index>(u));
    double max_aff = aff.maxCoeff();
    for (std::size_t s = 0; s < cfg.n_styles; ++s) {
      within[s].clear();
      style_mass[s] = 0.0;
      for (std::size_t i : style_items[s]) {
        double w = std::exp(cfg.taste_sharpness * (aff(static_cast<Eigen::Index>(i)) - max_aff));
        within[s].push_back(w);
        style_mass[s] += w;
      }
    }
    std::discrete_distribution<std::size_t> pick_session_style(style_mass.begin(), style_mass.end());
    const std::string& uid = out.user_ids[u];

    int remaining = std::max(1, n_views(rng));
    while (remaining > 0) {
      int length = std::min(remaining, 1 + extra_session_views(rng));
      remaining -= length;
      std::size_t s = pick_session_style(rng);
      std::discrete_distribution<std::size_t> pick_item(within[s].begin(), within[s].end());
      std::int64_t t = when(rng);
      for (int v = 0; v < length; ++v, t += kViewGap) {
        std::size_t item = style_items[s][pick_item(rng)];
        const std::string& iid = out.item_ids[item];
        out.events.push_back({uid, iid, EventKind::ListView, t});
        // Affinity lifts each conditional probability by a factor in (0.5, 1.5).
        double lift = 0.5 + 1.0 / (1.0 + std::exp(-aff(static_cast<Eigen::Index>(item))));
        auto step = [&](double p) { return unit(rng) < std::min(1.0, p * lift); };
        if (!step(cfg.funnel.click_given_view)) continue;
        out.events.push_back({uid, iid, EventKind::Click, t + kFunnelGap});
        if (!step(cfg.funnel.cart_given_click)) continue;
        out.events.push_back({uid, iid, EventKind::AddToCart, t + 2 * kFunnelGap});
        if (!step(cfg.funnel.order_given_cart)) continue;
        out.events.push_back({uid, iid, EventKind::Order, t + 3 * kFunnelGap});
      }
    }
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  return out;
}

/// Distinct (user, item) pairs over the users x items seen in `events`.
inline double sparsity(std::span<const Event> events) {
  if (events.empty()) return 0.0;
  std::set<std::string> users;
  std::set<std::string> items;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : events) {
    users.insert(e.user_id);
    items.insert(e.item_id);
    pairs.emplace(e.user_id, e.item_id);
  }
  return static_cast<double>(pairs.size()) /
         (static_cast<double>(users.size()) * static_cast<double>(items.size()));
}

inline void write_oracle_csv(std::ostream& out, const SynthData& data) {
  out << "user_id,item_id,affinity\n";
  for (std::size_t u = 0; u < data.user_ids.size(); ++u) {
    for (std::size_t i = 0; i < data.item_ids.size(); ++i) {
      out << data.user_ids[u] << ',' << data.item_ids[i] << ','
          << format_g9(data.affinity(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)))
          << '\n';
    }
  }
}

/// Two-or-more-block planted dataset: users of a block only ever interact
/// with items of the same block, each in-block pair present with
/// probability `density`.
struct PlantedBlocks {
  RatingMatrix matrix;
  std::vector<std::size_t> user_block;
  std::vector<std::size_t> item_block;
};

inline PlantedBlocks planted_blocks(std::size_t n_users, std::size_t n_items, std::size_t n_blocks,
                                    double density, std::uint64_t seed) {
  if (n_blocks == 0 || n_users < n_blocks || n_items < n_blocks) {
    throw ConfigInvalid("planted_blocks: need at least one user and item per block");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PlantedBlocks out;
  std::vector<std::string> uids;
  std::vector<std::string> iids;
  for (std::size_t u = 0; u < n_users; ++u) {
    out.user_block.push_back(u % n_blocks);
    uids.push_back(detail::padded_id('u', u, 5));
  }
  for (std::size_t i = 0; i < n_items; ++i) {
    out.item_block.push_back(i % n_blocks);
    iids.push_back(detail::padded_id('p', i, 5));
  }
  std::vector<RatingEntry> entries;
  for (std::size_t u = 0; u < n_users; ++u) {
    bool any = false;
    std::size_t first_in_block = n_items;
    for (std::size_t i = 0; i < n_items; ++i) {
      if (out.item_block[i] != out.user_block[u]) continue;
      first_in_block = std::min(first_in_block, i);
      if (unit(rng) < density) {
        entries.push_back({u, i, 1.0});
        any = true;
      }
    }
    if (!any) entries.push_back({u, first_in_block, 1.0});
  }
  out.matrix = RatingMatrix(IdMap(std::move(uids)), IdMap(std::move(iids)), std::move(entries));
  return out;
}

}  // namespace persim
