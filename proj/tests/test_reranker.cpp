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

#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "persim/reranker.hpp"

namespace persim {
namespace {

std::vector<std::size_t> items_of(const RankedList& r) {
  std::vector<std::size_t> out;
  for (const auto& e : r.entries) out.push_back(e.item);
  return out;
}

struct Fixture {
  RatingMatrix matrix;
  CandidateIndex index;
  FactorModel model;
};

Fixture random_fixture(std::uint64_t seed, std::size_t users = 30, std::size_t items = 50) {
  std::mt19937_64 rng(seed);
  Fixture f;
  f.matrix = oracle::random_matrix(users, items, 0.15, rng);
  f.index = build_candidate_index(f.matrix, 20);
  f.model = oracle::random_model(users, items, 6, rng);
  return f;
}

TEST(UserItemScore, Examples) {
  std::mt19937_64 rng(1);
  auto model = oracle::random_model(2, 3, 1, rng);
  model.user_factors(0, 0) = 2.0;
  model.item_factors(1, 0) = 3.0;
  EXPECT_EQ(user_item_score(model, 0, 1), 6.0);
  model.user_factors.row(1).setZero();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(user_item_score(model, 1, i), 0.0);
  EXPECT_THROW(user_item_score(model, 2, 0), IndexOutOfRange);
  EXPECT_THROW(user_item_score(model, 0, 3), IndexOutOfRange);
}

TEST(UserItemScore, MatchesNaiveLoop) {
  std::mt19937_64 rng(2);
  auto model = oracle::random_model(6, 9, 7, rng);
  for (std::size_t u = 0; u < 6; ++u) {
    for (std::size_t i = 0; i < 9; ++i) {
      EXPECT_NEAR(user_item_score(model, u, i),
                  oracle::naive_dot(model.user_factors, u, model.item_factors, i), 1e-12);
    }
  }
}

TEST(MinMaxNormalize, Cases) {
  std::vector<double> v{2, 4, 3};
  EXPECT_EQ(min_max_normalize(v), (std::vector<double>{0.0, 1.0, 0.5}));
  std::vector<double> flat{7, 7};
  EXPECT_EQ(min_max_normalize(flat), (std::vector<double>{0.5, 0.5}));
  EXPECT_TRUE(min_max_normalize(std::vector<double>{}).empty());
}

TEST(Rerank, HandComputedBlend) {
  // Query 0 with candidates 1, 2, 3 at cosines 0.9, 0.6, 0.3; the user's
  // scores against them are 0, 2, 1.
  CandidateIndex index(3, {{{1, 0.9}, {2, 0.6}, {3, 0.3}}, {}, {}, {}});
  std::mt19937_64 rng(3);
  auto model = oracle::random_model(1, 4, 1, rng);
  model.user_factors(0, 0) = 1.0;
  model.item_factors(1, 0) = 0.0;
  model.item_factors(2, 0) = 2.0;
  model.item_factors(3, 0) = 1.0;
  auto r = rerank(0, 0, index, model, BlendConfig{0.2, 15});
  ASSERT_EQ(r.entries.size(), 3u);
  const double want[] = {0.80, 0.60, 0.10};
  const double sim[] = {1.0, 0.5, 0.0};
  const double pref[] = {0.0, 1.0, 0.5};
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(r.entries[n].item, n + 1);
    EXPECT_NEAR(r.entries[n].blended, want[n], 1e-15);
    EXPECT_NEAR(r.entries[n].similarity, sim[n], 1e-15);
    EXPECT_NEAR(r.entries[n].preference, pref[n], 1e-15);
  }
  EXPECT_EQ(r.user, std::optional<std::size_t>(0));
}

TEST(Rerank, UnknownQueryAndBadAlpha) {
  auto f = random_fixture(4);
  EXPECT_THROW(rerank(0, 50, f.index, f.model, BlendConfig{}), UnknownQueryItem);
  EXPECT_THROW(rerank(0, 0, f.index, f.model, BlendConfig{1.5, 15}), ConfigInvalid);
}

TEST(Rerank, UnknownUserDegradesToAnonymous) {
  auto f = random_fixture(5);
  auto r = rerank(999, 3, f.index, f.model, BlendConfig{0.7, 15});
  EXPECT_FALSE(r.user.has_value());
  EXPECT_EQ(items_of(r), items_of(rerank(std::nullopt, 3, f.index, f.model, BlendConfig{0.0, 15})));
}

TEST(Rerank, TruncatesAndExcludesQuery) {
  auto f = random_fixture(6);
  for (std::size_t q = 0; q < 50; ++q) {
    auto r = rerank(1, q, f.index, f.model, BlendConfig{0.4, 5});
    EXPECT_LE(r.entries.size(), 5u);
    for (std::size_t n = 0; n < r.entries.size(); ++n) {
      EXPECT_NE(r.entries[n].item, q);
      if (n > 0) {
        const auto& a = r.entries[n - 1];
        const auto& b = r.entries[n];
        EXPECT_TRUE(a.blended > b.blended || (a.blended == b.blended && a.item < b.item));
      }
    }
  }
}

// Blend degeneracy over every query of a 50-item index.
TEST(RerankProperty, AlphaZeroIsCandidateOrder) {
  auto f = random_fixture(7);
  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t q = 0; q < 50; ++q) {
      std::vector<std::size_t> want;
      for (const auto& nb : f.index.neighbors(q)) want.push_back(nb.item);
      EXPECT_EQ(items_of(rerank(u, q, f.index, f.model, BlendConfig{0.0, 100})), want);
    }
  }
}

TEST(RerankProperty, AlphaOneIsPreferenceOrder) {
  auto f = random_fixture(8);
  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t q = 0; q < 50; ++q) {
      std::vector<std::pair<double, std::size_t>> scored;
      for (const auto& nb : f.index.neighbors(q)) {
        scored.push_back({oracle::naive_dot(f.model.user_factors, u, f.model.item_factors, nb.item),
                          nb.item});
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      std::vector<std::size_t> want;
      for (const auto& s : scored) want.push_back(s.second);
      EXPECT_EQ(items_of(rerank(u, q, f.index, f.model, BlendConfig{1.0, 100})), want);
    }
  }
}

TEST(RerankProperty, AnonymousIgnoresAlpha) {
  auto f = random_fixture(9);
  for (std::size_t q = 0; q < 50; ++q) {
    auto base = rerank(std::nullopt, q, f.index, f.model, BlendConfig{0.0, 100});
    for (double a : {0.1, 0.2, 0.5, 0.9, 1.0}) {
      auto r = rerank(std::nullopt, q, f.index, f.model, BlendConfig{a, 100});
      EXPECT_EQ(r.entries, base.entries);
    }
  }
}

TEST(RerankProperty, PermutesTheCandidateSet) {
  auto f = random_fixture(10);
  for (std::size_t q = 0; q < 50; ++q) {
    std::set<std::size_t> want;
    for (const auto& nb : f.index.neighbors(q)) want.insert(nb.item);
    for (double a : {0.0, 0.3, 1.0}) {
      for (std::optional<std::size_t> u : {std::optional<std::size_t>{}, std::optional<std::size_t>{2}}) {
        auto got = items_of(rerank(u, q, f.index, f.model, BlendConfig{a, 1000}));
        EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), want);
        EXPECT_EQ(got.size(), want.size());
      }
    }
  }
}

TEST(RerankProperty, BlendIsAffineInAlpha) {
  auto f = random_fixture(11);
  for (std::size_t q = 0; q < 50; ++q) {
    auto score_at = [&](double a) {
      std::vector<double> s(50, -1.0);
      for (const auto& e : rerank(3, q, f.index, f.model, BlendConfig{a, 1000}).entries) {
        s[e.item] = e.blended;
      }
      return s;
    };
    auto s0 = score_at(0.0), sh = score_at(0.5), s1 = score_at(1.0);
    for (std::size_t i = 0; i < 50; ++i) {
      if (s0[i] < 0) continue;
      EXPECT_NEAR(sh[i], 0.5 * (s0[i] + s1[i]), 1e-15);
    }
  }
}

TEST(RerankProperty, MonotoneDominance) {
  auto f = random_fixture(12);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t q = 0; q < 50; ++q) {
    auto r = rerank(4, q, f.index, f.model, BlendConfig{unit(rng), 1000});
    for (std::size_t a = 0; a < r.entries.size(); ++a) {
      for (std::size_t b = a + 1; b < r.entries.size(); ++b) {
        const auto& hi = r.entries[a];
        const auto& lo = r.entries[b];
        // lo is ranked below hi, so lo must not dominate hi.
        bool dominates = lo.similarity >= hi.similarity && lo.preference >= hi.preference &&
                         (lo.similarity > hi.similarity || lo.preference > hi.preference);
        EXPECT_FALSE(dominates) << "query " << q;
      }
    }
  }
}

}  // namespace
}  // namespace persim
