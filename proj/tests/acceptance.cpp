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

// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "persim/persim.hpp"

namespace persim {
namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr std::int64_t kBoundary = 800'000;

ExperimentConfig synthetic_experiment(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.boundary = kBoundary;
  cfg.train.set_seed(seed);
  return cfg;
}

std::vector<Event> synthetic_events(std::uint64_t seed) {
  SynthConfig s;
  s.seed = seed + kSynthSeedOffset;
  return generate(s).events;
}

Outcome weight_grid() {
  std::ifstream in(std::string(PERSIM_GRID_DIR) + "/weights.csv");
  auto grid = parse_sweep_grid(in, SweepDimension::RatingWeights);
  auto rows = run_sweep(grid, synthetic_events(0), synthetic_experiment(0));
  bool all_ok = rows.size() == grid.size();
  double default_map = NAN;
  for (const auto& row : rows) {
    if (!row.report) {
      all_ok = false;
      continue;
    }
    if (grid.weights[row.point] == RatingWeights{0.25, 1, 1, 1, false}) {
      default_map = row.report->map_at_k;
    }
  }
  return {all_ok && std::isfinite(default_map),
          fmt("%zu/%zu grid rows evaluated, MAP@15 at (0.25,1,1,1,presence) = %.4f", rows.size(),
              grid.size(), default_map)};
}

Outcome als_monotone() {
  auto m = build_matrix(synthetic_events(0), RatingWeights{});
  AlsConfig cfg;
  cfg.seed = kAlsSeedOffset;
  double prev = INFINITY;
  double worst = -INFINITY;
  std::size_t halves = 0;
  bool monotone = true;
  als_train(m, cfg, [&](const AlsProgress&, const FactorModel& model) {
    double obj = als_objective(m, model, cfg);
    if (std::isfinite(prev)) worst = std::max(worst, (obj - prev) / std::abs(prev));
    if (obj > prev + 1e-9 * std::abs(prev)) monotone = false;
    prev = obj;
    ++halves;
  });
  auto start = Clock::now();
  als_train(m, cfg);
  double secs = seconds_since(start);
  return {monotone && secs < 60.0 && halves == 2 * cfg.iterations,
          fmt("%zux%zu, %zu half-rounds, max relative rise %.2e, 15 iterations in %.2f s",
              m.n_users(), m.n_items(), halves, worst, secs)};
}

Outcome als_oracle() {
  std::mt19937_64 rng(301);
  std::uniform_int_distribution<std::size_t> dim(1, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t users = dim(rng), items = dim(rng), k = dim(rng);
    auto m = oracle::random_matrix(users, items, 0.4, rng);
    auto model = oracle::random_model(users, items, k, rng, 0.5);
    AlsConfig cfg;
    cfg.lambda = unit(rng);
    cfg.confidence = 20 * unit(rng);
    double ref = oracle::dense_als_objective(m, model, cfg.lambda, cfg.confidence);
    worst = std::max(worst, std::abs(als_objective(m, model, cfg) - ref) / ref);
  }
  RatingMatrix one(IdMap(std::vector<std::string>{"u"}), IdMap(std::vector<std::string>{"i"}),
                   {{0, 0, 1.0}});
  AlsConfig cfg;
  cfg.k = 1;
  cfg.lambda = 0.1;
  cfg.confidence = 1.0;
  cfg.iterations = 500;
  auto model = als_train(one, cfg);
  auto [bx, by] = oracle::brute_force_1x1(1.0 + cfg.confidence, cfg.lambda);
  double gap = std::abs(model.user_factors(0, 0) * model.item_factors(0, 0) - bx * by);
  return {worst <= 1e-10 && gap <= 1e-3,
          fmt("max relative objective error %.2e over 50 matrices, 1x1 optimum gap %.2e", worst,
              gap)};
}

Outcome bpr_gradient_check() {
  std::mt19937_64 rng(401);
  std::uniform_int_distribution<std::size_t> user(0, 4), item(0, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t bad = 0;
  for (int draw = 0; draw < 100; ++draw) {
    auto model = oracle::random_model(5, 7, 6, rng, 0.8);
    BprConfig cfg;
    cfg.lambda_user = 0.1 * unit(rng);
    cfg.lambda_item_pos = 0.1 * unit(rng);
    cfg.lambda_item_neg = 0.1 * unit(rng);
    std::size_t i = item(rng), j = item(rng);
    while (j == i) j = item(rng);
    Triplet t{user(rng), i, j};
    auto g = bpr_gradient(model, t, cfg);
    auto check = [&](FactorMatrix& f, std::size_t row, const Eigen::VectorXd& analytic) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) {
        double& x = f(static_cast<Eigen::Index>(row), c);
        double saved = x;
        x = saved + h;
        double up = triplet_loss(model, t, cfg);
        x = saved - h;
        double down = triplet_loss(model, t, cfg);
        x = saved;
        double fd = (up - down) / (2 * h);
        double err = std::abs(analytic(c) - fd);
        worst = std::max(worst, err / std::max(std::abs(fd), 1e-3));
        if (err > std::max(1e-4 * std::abs(fd), 1e-7)) ++bad;
      }
    };
    check(model.user_factors, t.u, g.user);
    check(model.item_factors, t.i, g.pos_item);
    check(model.item_factors, t.j, g.neg_item);
  }
  return {bad == 0, fmt("%zu coordinates outside tolerance, max relative error %.2e", bad, worst)};
}

Outcome bpr_auc() {
  int good = 0;
  double lo = INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto b = planted_blocks(200, 100, 2, 0.1, 500 + seed);
    BprConfig cfg;
    cfg.seed = seed;
    auto model = bpr_train(b.matrix, cfg);
    double total = 0.0;
    for (std::size_t u = 0; u < model.n_users(); ++u) {
      std::vector<std::size_t> pos, neg;
      for (std::size_t i = 0; i < model.n_items(); ++i) {
        if (b.item_block[i] != b.user_block[u]) {
          neg.push_back(i);
        } else if (!b.matrix.contains(u, i)) {
          pos.push_back(i);
        }
      }
      total += user_auc(model, u, pos, neg);
    }
    double auc = total / static_cast<double>(model.n_users());
    lo = std::min(lo, auc);
    good += auc >= 0.85 ? 1 : 0;
  }
  return {good >= 9, fmt("AUC >= 0.85 in %d/10 seeds (min %.4f)", good, lo)};
}

Outcome candidate_exactness() {
  std::mt19937_64 rng(601);
  std::uniform_int_distribution<std::size_t> dim(2, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto m = oracle::random_matrix(dim(rng), dim(rng), 0.05 + 0.4 * unit(rng), rng, trial % 2 == 0);
    std::size_t n = 1 + static_cast<std::size_t>(trial) % 60;
    auto idx = build_candidate_index(m, n, 1 + static_cast<unsigned>(trial % 4));
    auto ref = oracle::brute_force_neighbors(m, n);
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      auto got = idx.neighbors(i);
      if (got.size() != ref[i].size()) {
        ++mismatches;
        continue;
      }
      for (std::size_t r = 0; r < got.size(); ++r) {
        if (got[r].item != ref[i][r].item) ++mismatches;
        worst = std::max(worst, std::abs(got[r].score - ref[i][r].score));
      }
    }
  }
  return {mismatches == 0 && worst <= 1e-9,
          fmt("%zu ordering mismatches, max score error %.2e over 100 matrices", mismatches, worst)};
}

Outcome metric_correctness() {
  std::vector<std::size_t> abc{0, 1, 2}, ab{0, 1};
  std::vector<std::size_t> ta{0}, tb{1}, tc{2};
  bool examples = average_precision(abc, ta, 15) == 1.0 && average_precision(abc, tb, 15) == 0.5 &&
                  average_precision(ab, tc, 15) == 0.0;
  std::vector<EvalQuery> perfect = {{0, 9, {3, 4}}};
  auto list = [](std::vector<std::size_t> items) {
    RankedList r;
    for (auto i : items) r.entries.push_back({i, 0, 0, 0});
    return r;
  };
  auto rep = evaluate(perfect, [&](std::size_t, std::size_t) { return list({3, 4, 7}); }, 15);
  examples = examples && rep.precision_at_k == 2.0 / 15.0 && rep.recall_at_k == 1.0 &&
             rep.map_at_k == 1.0;
  std::vector<EvalQuery> two = {{0, 9, {1}}, {1, 9, {0}}};
  examples = examples &&
             evaluate(two, [&](std::size_t, std::size_t) { return list({0, 1, 2}); }, 15).map_at_k == 0.75;
  auto empty = evaluate(perfect, [](std::size_t, std::size_t) { return RankedList{}; }, 15);
  examples = examples && empty.map_at_k == 0.0 && empty.precision_at_k == 0.0 &&
             empty.recall_at_k == 0.0;

  std::mt19937_64 rng(701);
  std::uniform_int_distribution<std::size_t> len(0, 40), tlen(1, 20), kd(1, 30);
  std::size_t violations = 0;
  std::vector<std::size_t> pool(60);
  std::iota(pool.begin(), pool.end(), 0);
  for (int n = 0; n < 1000; ++n) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> pred(pool.begin(), pool.begin() + static_cast<long>(len(rng)));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> truth(pool.begin(), pool.begin() + static_cast<long>(tlen(rng)));
    std::sort(truth.begin(), truth.end());
    std::size_t k = kd(rng);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < std::min(k, pred.size()); ++r) {
      hits += std::find(truth.begin(), truth.end(), pred[r]) != truth.end() ? 1 : 0;
    }
    double p = precision_at_k(pred, truth, k) * static_cast<double>(k);
    double r = recall_at_k(pred, truth, k) * static_cast<double>(truth.size());
    if (std::abs(p - hits) > 1e-12 || std::abs(r - hits) > 1e-12) ++violations;
  }
  return {examples && violations == 0,
          fmt("worked examples %s, identity violated on %zu/1000 queries",
              examples ? "exact" : "WRONG", violations)};
}

Outcome personalization_lift() {
  std::ifstream in(std::string(PERSIM_GRID_DIR) + "/alpha.csv");
  auto grid = parse_sweep_grid(in, SweepDimension::Alpha);
  int good = 0;
  int interior = 0;
  double slowest = 0.0;
  std::string maps;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto events = synthetic_events(seed);
    auto start = Clock::now();
    auto rows = run_sweep(grid, events, synthetic_experiment(seed));
    slowest = std::max(slowest, seconds_since(start));
    std::vector<double> map(grid.size(), NAN);
    for (const auto& row : rows) {
      if (row.report) map[row.point] = row.report->map_at_k;
    }
    auto at = [&](double a) {
      auto it = std::find(grid.values.begin(), grid.values.end(), a);
      return map[static_cast<std::size_t>(it - grid.values.begin())];
    };
    double best = *std::max_element(map.begin(), map.end());
    if (at(0.2) >= at(0.0) && at(1.0) <= best) ++good;
    if (at(1.0) < best) ++interior;
    maps += fmt(" %.3f/%.3f/%.3f", at(0.0), at(0.2), at(1.0));
  }
  return {good >= 8 && slowest < 600.0,
          fmt("holds in %d/10 seeds, alpha=1 below the grid max in %d/10, slowest sweep %.1f s; "
              "MAP@15 at alpha 0/0.2/1:%s",
              good, interior, slowest, maps.c_str())};
}

Outcome blend_degeneracy() {
  std::mt19937_64 rng(901);
  auto m = oracle::random_matrix(40, 50, 0.15, rng);
  auto index = build_candidate_index(m, 49);
  auto model = oracle::random_model(40, 50, 8, rng);
  std::size_t bad = 0, checked = 0;
  auto items = [](const RankedList& r) {
    std::vector<std::size_t> out;
    for (const auto& e : r.entries) out.push_back(e.item);
    return out;
  };
  for (std::size_t q = 0; q < 50; ++q) {
    std::vector<std::size_t> cand;
    for (const auto& nb : index.neighbors(q)) cand.push_back(nb.item);
    for (std::size_t u = 0; u < 40; ++u) {
      ++checked;
      if (items(rerank(u, q, index, model, BlendConfig{0.0, 100})) != cand) ++bad;
      std::vector<std::pair<double, std::size_t>> scored;
      for (auto i : cand) scored.push_back({oracle::naive_dot(model.user_factors, u, model.item_factors, i), i});
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      std::vector<std::size_t> pref;
      for (const auto& s : scored) pref.push_back(s.second);
      if (items(rerank(u, q, index, model, BlendConfig{1.0, 100})) != pref) ++bad;
    }
    for (int step = 0; step <= 10; ++step) {
      BlendConfig cfg{step / 10.0, 100};
      if (items(rerank(std::nullopt, q, index, model, cfg)) != cand) ++bad;
      if (items(rerank(1000, q, index, model, cfg)) != cand) ++bad;
    }
  }
  return {bad == 0, fmt("%zu mismatches over 50 queries x 40 users and 11 anonymous alphas", bad)};
}

std::string text_of(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

// Serialises every stage's artifact for one full run.
std::vector<std::string> run_all_stages(std::uint64_t seed, unsigned threads) {
  SynthConfig synth;
  synth.seed = seed;
  auto data = generate(synth);
  std::vector<std::string> out;
  out.push_back(text_of([&](std::ostream& o) { write_events(o, data.events); }));
  out.push_back(text_of([&](std::ostream& o) { write_oracle_csv(o, data); }));
  // Reparse as the command line would.
  std::istringstream reread(out.front());
  auto events = parse_events(reread).events;
  auto [train, test] = split_events(events, kBoundary);
  for (Trainer trainer : {Trainer::ALS, Trainer::BPR}) {
    ExperimentConfig cfg = synthetic_experiment(seed);
    cfg.threads = threads;
    cfg.train.trainer = trainer;
    auto a = train_artifacts(train, cfg);
    out.push_back(text_of([&](std::ostream& o) { write_matrix_csv(o, a.matrix); }));
    out.push_back(text_of([&](std::ostream& o) { write_candidates_csv(o, a.index, a.matrix.item_ids()); }));
    out.push_back(text_of([&](std::ostream& o) { write_model(o, a.model); }));
    auto report = evaluate_artifacts(a.model, a.index, test, cfg.blend, cfg.eval_k);
    out.push_back(to_json(report).dump());
    out.push_back(text_of([&](std::ostream& o) {
      write_per_query_csv(o, report, a.model.user_ids, a.model.item_ids);
    }));
    auto first = rerank(0, report.per_query.front().query_item, a.index, a.model, cfg.blend);
    out.push_back(text_of([&](std::ostream& o) {
      for (const auto& e : first.entries) o << e.item << ',' << format_g9(e.blended) << '\n';
    }));
  }
  std::istringstream alpha("0\n0.5\n1\n");
  auto grid = parse_sweep_grid(alpha, SweepDimension::Alpha);
  ExperimentConfig cfg = synthetic_experiment(seed);
  cfg.threads = threads;
  auto rows = run_sweep(grid, events, cfg);
  out.push_back(text_of([&](std::ostream& o) { write_sweep_csv(o, grid, rows, cfg.eval_k); }));
  return out;
}

Outcome determinism() {
  auto a = run_all_stages(11, 1);
  auto b = run_all_stages(11, 1);
  auto c = run_all_stages(11, 4);
  std::size_t differing = 0;
  for (std::size_t n = 0; n < a.size(); ++n) differing += (a[n] != b[n] || a[n] != c[n]) ? 1 : 0;
  return {differing == 0 && a.size() == c.size(),
          fmt("%zu of %zu artifacts differ across two runs and 1 vs 4 threads", differing, a.size())};
}

}  // namespace
}  // namespace persim

int main() {
  using namespace persim;
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"rating-weight grid on synthetic data", weight_grid},
      {"ALS objective monotone, 2000x500 under 60 s", als_monotone},
      {"ALS objective and 1x1 optimum match oracles", als_oracle},
      {"BPR gradient matches finite differences", bpr_gradient_check},
      {"BPR AUC on planted 2-block data", bpr_auc},
      {"candidate index equals brute-force cosine", candidate_exactness},
      {"ranking metrics", metric_correctness},
      {"personalization lift over alpha grid", personalization_lift},
      {"blend degeneracy", blend_degeneracy},
      {"byte-identical artifacts", determinism},
  };
  int failed = 0;
  int n = 0;
  for (const auto& c : criteria) {
    ++n;
    auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  [%2d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", n, c.name,
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
