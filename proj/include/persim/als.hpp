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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "persim/detail/parallel.hpp"
#include "persim/error.hpp"
#include "persim/factor_model.hpp"
#include "persim/interactions.hpp"

namespace persim {

/// Implicit ALS hyperparameters. Confidence of an observed rating r is
/// 1 + confidence * r; unobserved pairs have confidence 1 and preference 0.
struct AlsConfig {
  std::size_t k = 64;
  double lambda = 0.01;
  double confidence = 10.0;
  std::size_t iterations = 15;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const {
    if (k < 1) throw ConfigInvalid("ALS: k must be at least 1");
    if (iterations < 1) throw ConfigInvalid("ALS: iterations must be at least 1");
    if (!(lambda >= 0.0)) throw ConfigInvalid("ALS: lambda must be non-negative");
    if (!(confidence >= 0.0)) throw ConfigInvalid("ALS: confidence must be non-negative");
  }
};

/// Confidence-weighted squared loss over every user-item pair plus L2 terms.
///
/// The all-pairs part is evaluated as sum(XᵀX ∘ YᵀY), i.e. the loss with
/// every pair unobserved, then corrected on the stored entries.
inline double als_objective(const RatingMatrix& m, const FactorModel& model, const AlsConfig& cfg) {
  check_model_matches(m, model);
  const FactorMatrix& X = model.user_factors;
  const FactorMatrix& Y = model.item_factors;
  Eigen::MatrixXd gx = X.transpose() * X;
  Eigen::MatrixXd gy = Y.transpose() * Y;
  double total = gx.cwiseProduct(gy).sum();

  for (const auto& e : m.entries()) {
    double s = X.row(static_cast<Eigen::Index>(e.user)).dot(Y.row(static_cast<Eigen::Index>(e.item)));
    double c = 1.0 + cfg.confidence * e.rating;
    total += c * (1.0 - s) * (1.0 - s) - s * s;
  }
  total += cfg.lambda * (X.squaredNorm() + Y.squaredNorm());
  return total;
}

enum class AlsHalf { Users, Items };

struct AlsProgress {
  std::size_t iteration;  // 0-based
  AlsHalf half;
};

using AlsObserver = std::function<void(const AlsProgress&, const FactorModel&)>;

namespace detail {

// Exact minimiser of the loss over one row with the other side held fixed:
// (FᵀF + Σ (c-1) f fᵀ + λI) x = Σ c f over the row's stored entries.
inline void solve_als_side(std::span<const SparseEntry> (RatingMatrix::*row_of)(std::size_t) const,
                           const RatingMatrix& m, const FactorMatrix& fixed, FactorMatrix& solving,
                           const AlsConfig& cfg) {
  const Eigen::Index k = fixed.cols();
  Eigen::MatrixXd gram = fixed.transpose() * fixed;
  gram.diagonal().array() += cfg.lambda;

  parallel_blocks(static_cast<std::size_t>(solving.rows()), cfg.threads,
                  [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd b(k);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    for (std::size_t r = begin; r < end; ++r) {
      a = gram;
      b.setZero();
      for (const auto& e : (m.*row_of)(r)) {
        double c = 1.0 + cfg.confidence * e.value;
        auto f = fixed.row(static_cast<Eigen::Index>(e.index));
        a.noalias() += (c - 1.0) * f.transpose() * f;
        b.noalias() += c * f.transpose();
      }
      llt.compute(a);
      if (llt.info() != Eigen::Success ||
          llt.rcond() < std::numeric_limits<double>::epsilon()) {
        throw SingularSystem("ALS normal equations are not positive definite; use lambda > 0");
      }
      Eigen::VectorXd x = llt.solve(b);
      if (!x.allFinite()) throw SingularSystem("ALS row solve produced non-finite values");
      solving.row(static_cast<Eigen::Index>(r)) = x.transpose();
    }
  });
}

}  // namespace detail

/// Alternating exact row solves: all users with items fixed, then all items
/// with users fixed, `iterations` times. The observer, if any, sees the model
/// after every half-round.
inline FactorModel als_train(const RatingMatrix& m, const AlsConfig& cfg,
                             const AlsObserver& observer = {}) {
  cfg.validate();
  if (m.nnz() == 0) throw EmptyInput("ALS: rating matrix has no entries");
  FactorModel model = init_factor_model(m, cfg.k, TrainerTag::ALS, cfg.seed);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    detail::solve_als_side(&RatingMatrix::user_row, m, model.item_factors, model.user_factors, cfg);
    if (observer) observer({it, AlsHalf::Users}, model);
    detail::solve_als_side(&RatingMatrix::item_column, m, model.user_factors, model.item_factors,
                           cfg);
    if (observer) observer({it, AlsHalf::Items}, model);
  }
  return model;
}

}  // namespace persim
