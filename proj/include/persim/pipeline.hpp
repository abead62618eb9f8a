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
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "persim/als.hpp"
#include "persim/bpr.hpp"
#include "persim/error.hpp"
#include "persim/evalkit.hpp"
#include "persim/factor_model.hpp"
#include "persim/interactions.hpp"
#include "persim/reranker.hpp"
#include "persim/simcore.hpp"

namespace persim {

// ---------------------------------------------------------------------------
// Seeds and configuration
// ---------------------------------------------------------------------------

/// Offsets applied to the single user-facing seed, one per random stage.
inline constexpr std::uint64_t kSynthSeedOffset = 0;
inline constexpr std::uint64_t kAlsSeedOffset = 1;
inline constexpr std::uint64_t kBprSeedOffset = 2;

enum class Trainer { ALS, BPR };

struct TrainOptions {
  Trainer trainer = Trainer::BPR;
  AlsConfig als;
  BprConfig bpr;

  void set_seed(std::uint64_t seed) {
    als.seed = seed + kAlsSeedOffset;
    bpr.seed = seed + kBprSeedOffset;
  }
};

/// Everything needed to go from an event log to an evaluation report.
struct ExperimentConfig {
  RatingWeights weights;
  bool binarize_cf = false;
  std::size_t n_candidates = kDefaultCandidates;
  TrainOptions train;
  BlendConfig blend;
  std::size_t eval_k = kDefaultEvalK;
  std::int64_t boundary = std::numeric_limits<std::int64_t>::max();
  unsigned threads = 1;
};

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

inline std::vector<Event> load_events(const std::filesystem::path& path,
                                      ParseMode mode = ParseMode::Strict) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open event file '" + path.string() + "'");
  return parse_events(in, mode).events;
}

inline CandidateIndex build_index_for(const RatingMatrix& m, const ExperimentConfig& cfg) {
  return cfg.binarize_cf ? build_candidate_index(m.binarized(), cfg.n_candidates, cfg.threads)
                         : build_candidate_index(m, cfg.n_candidates, cfg.threads);
}

inline FactorModel train_model(const RatingMatrix& m, const TrainOptions& opts,
                               unsigned threads = 1) {
  if (opts.trainer == Trainer::ALS) {
    AlsConfig als = opts.als;
    als.threads = threads;
    return als_train(m, als);
  }
  return bpr_train(m, opts.bpr);
}

inline RankedList recommend(std::optional<std::size_t> user, std::size_t item,
                            const CandidateIndex& index, const FactorModel& model,
                            const BlendConfig& blend) {
  return rerank(user, item, index, model, blend);
}

/// Scores trained artifacts on held-out events with the query protocol.
inline EvalReport evaluate_artifacts(const FactorModel& model, const CandidateIndex& index,
                                     std::span<const Event> test_events, BlendConfig blend,
                                     std::size_t k) {
  auto queries = build_queries(test_events, model.user_ids, model.item_ids);
  if (queries.empty()) {
    throw NoQueries("no user has a query item and a non-empty ground truth in the test events");
  }
  blend.top_k = k;
  return evaluate(
      queries,
      [&](std::size_t u, std::size_t i) { return rerank(u, i, index, model, blend); }, k);
}

struct TrainedArtifacts {
  RatingMatrix matrix;
  CandidateIndex index;
  FactorModel model;
};

inline TrainedArtifacts train_artifacts(std::span<const Event> train_events,
                                        const ExperimentConfig& cfg) {
  TrainedArtifacts a;
  a.matrix = build_matrix(train_events, cfg.weights);
  a.index = build_index_for(a.matrix, cfg);
  a.model = train_model(a.matrix, cfg.train, cfg.threads);
  return a;
}

/// Split, build, train and evaluate in one go.
inline EvalReport run_experiment(std::span<const Event> events, const ExperimentConfig& cfg) {
  auto [train, test] = split_events(events, cfg.boundary);
  auto artifacts = train_artifacts(train, cfg);
  return evaluate_artifacts(artifacts.model, artifacts.index, test, cfg.blend, cfg.eval_k);
}

// ---------------------------------------------------------------------------
// Artifact files
// ---------------------------------------------------------------------------

inline void write_matrix_csv(std::ostream& out, const RatingMatrix& m) {
  out << "user_id,item_id,rating\n";
  for (const auto& e : m.entries()) {
    out << m.user_ids().id(e.user) << ',' << m.item_ids().id(e.item) << ',' << format_g9(e.rating)
        << '\n';
  }
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  writer(out);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

inline FactorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path.string() + "'");
  return read_model(in);
}

inline CandidateIndex load_index(const std::filesystem::path& path, const IdMap& items) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open candidate file '" + path.string() + "'");
  return read_candidates_csv(in, items);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepDimension { RatingWeights, Confidence, Alpha };

/// Explicit list of points along one hyperparameter.
struct SweepGrid {
  SweepDimension dimension = SweepDimension::Alpha;
  std::vector<RatingWeights> weights;  // RatingWeights dimension
  std::vector<double> values;          // Confidence / Alpha dimensions

  std::size_t size() const {
    return dimension == SweepDimension::RatingWeights ? weights.size() : values.size();
  }
};

/// One point per non-blank, non-`#` line: a single real for confidence and
/// alpha grids, `w_view,w_click,w_cart,w_order,freq` for weight grids.
inline SweepGrid parse_sweep_grid(std::istream& in, SweepDimension dim) {
  SweepGrid grid;
  grid.dimension = dim;
  std::string raw;
  std::size_t line_no = 0;
  auto number = [&line_no](std::string_view s) {
    std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      throw MalformedLine(line_no, "not a number: '" + str + "'");
    }
    if (used != str.size() || !std::isfinite(v)) {
      throw MalformedLine(line_no, "not a finite number: '" + str + "'");
    }
    return v;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim_cr(raw);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    if (dim == SweepDimension::RatingWeights) {
      auto f = detail::split(line, ',');
      if (f.size() != 5) throw MalformedLine(line_no, "weight row needs 5 fields");
      RatingWeights w{number(f[0]), number(f[1]), number(f[2]), number(f[3]), number(f[4]) != 0.0};
      try {
        w.validate();
      } catch (const ConfigInvalid& e) {
        throw MalformedLine(line_no, e.what());
      }
      if (std::find(grid.weights.begin(), grid.weights.end(), w) != grid.weights.end()) {
        throw MalformedLine(line_no, "duplicate grid point");
      }
      grid.weights.push_back(w);
    } else {
      double v = number(line);
      if (dim == SweepDimension::Alpha && !(v >= 0.0 && v <= 1.0)) {
        throw MalformedLine(line_no, "alpha must lie in [0, 1]");
      }
      if (dim == SweepDimension::Confidence && v < 0.0) {
        throw MalformedLine(line_no, "confidence must be non-negative");
      }
      if (std::find(grid.values.begin(), grid.values.end(), v) != grid.values.end()) {
        throw MalformedLine(line_no, "duplicate grid point");
      }
      grid.values.push_back(v);
    }
  }
  if (grid.size() == 0) throw ConfigInvalid("sweep grid is empty");
  return grid;
}

struct SweepRow {
  std::size_t point;
  std::optional<EvalReport> report;
  std::string error;
};

/// Evaluates every grid point in grid order. A failing point yields a row
/// carrying its error and the sweep continues.
inline std::vector<SweepRow> run_sweep(const SweepGrid& grid, std::span<const Event> events,
                                       const ExperimentConfig& base) {
  auto [train, test] = split_events(events, base.boundary);
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());

  auto attempt = [&rows](std::size_t p, auto&& fn) {
    SweepRow row{p, std::nullopt, {}};
    try {
      row.report = fn();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  };

  switch (grid.dimension) {
    case SweepDimension::RatingWeights:
      for (std::size_t p = 0; p < grid.size(); ++p) {
        attempt(p, [&] {
          ExperimentConfig cfg = base;
          cfg.weights = grid.weights[p];
          auto a = train_artifacts(train, cfg);
          return evaluate_artifacts(a.model, a.index, test, cfg.blend, cfg.eval_k);
        });
      }
      break;
    case SweepDimension::Confidence: {
      std::optional<RatingMatrix> matrix;
      std::optional<CandidateIndex> index;
      std::string setup_error;
      try {
        matrix = build_matrix(train, base.weights);
        index = build_index_for(*matrix, base);
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (std::size_t p = 0; p < grid.size(); ++p) {
        attempt(p, [&] {
          if (!matrix || !index) throw Error(setup_error);
          TrainOptions opts = base.train;
          opts.trainer = Trainer::ALS;
          opts.als.confidence = grid.values[p];
          auto model = train_model(*matrix, opts, base.threads);
          return evaluate_artifacts(model, *index, test, base.blend, base.eval_k);
        });
      }
      break;
    }
    case SweepDimension::Alpha: {
      std::optional<TrainedArtifacts> a;
      std::string setup_error;
      try {
        a = train_artifacts(train, base);
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (std::size_t p = 0; p < grid.size(); ++p) {
        attempt(p, [&] {
          if (!a) throw Error(setup_error);
          BlendConfig blend = base.blend;
          blend.alpha = grid.values[p];
          return evaluate_artifacts(a->model, a->index, test, blend, base.eval_k);
        });
      }
      break;
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const SweepGrid& grid,
                            std::span<const SweepRow> rows, std::size_t k) {
  const std::string at = "@" + std::to_string(k);
  switch (grid.dimension) {
    case SweepDimension::RatingWeights: out << "w_view,w_click,w_cart,w_order,use_frequency"; break;
    case SweepDimension::Confidence: out << "confidence"; break;
    case SweepDimension::Alpha: out << "alpha"; break;
  }
  out << ",map" << at << ",precision" << at << ",recall" << at << ",n_queries,status\n";
  for (const auto& row : rows) {
    if (grid.dimension == SweepDimension::RatingWeights) {
      const auto& w = grid.weights[row.point];
      out << format_g9(w.list_view) << ',' << format_g9(w.click) << ',' << format_g9(w.cart) << ','
          << format_g9(w.order) << ',' << (w.use_frequency ? 1 : 0);
    } else {
      out << format_g9(grid.values[row.point]);
    }
    if (row.report) {
      out << ',' << format_g9(row.report->map_at_k) << ',' << format_g9(row.report->precision_at_k)
          << ',' << format_g9(row.report->recall_at_k) << ',' << row.report->n_queries << ",ok\n";
    } else {
      std::string msg = row.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",nan,nan,nan,0,error: " << msg << '\n';
    }
  }
}

}  // namespace persim
