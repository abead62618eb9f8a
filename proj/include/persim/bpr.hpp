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
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "persim/error.hpp"
#include "persim/factor_model.hpp"
#include "persim/interactions.hpp"

namespace persim {

struct BprConfig {
  std::size_t k = 64;
  double learning_rate = 0.05;
  double lambda_user = 0.01;
  double lambda_item_pos = 0.01;
  double lambda_item_neg = 0.01;
  std::size_t epochs = 30;
  /// 0 means one sample per stored positive entry.
  std::size_t samples_per_epoch = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw ConfigInvalid("BPR: k must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigInvalid("BPR: learning rate must be positive");
    if (epochs < 1) throw ConfigInvalid("BPR: epochs must be at least 1");
    if (!(lambda_user >= 0.0 && lambda_item_pos >= 0.0 && lambda_item_neg >= 0.0)) {
      throw ConfigInvalid("BPR: regularization must be non-negative");
    }
  }
};

/// User u prefers observed item i over unobserved item j.
struct Triplet {
  std::size_t u;
  std::size_t i;
  std::size_t j;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// ln σ(x) without overflow or cancellation at either tail.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

inline double triplet_margin(const FactorModel& model, const Triplet& t) {
  auto xu = model.user_factors.row(static_cast<Eigen::Index>(t.u));
  return xu.dot(model.item_factors.row(static_cast<Eigen::Index>(t.i))) -
         xu.dot(model.item_factors.row(static_cast<Eigen::Index>(t.j)));
}

/// -ln σ(x_uij) + λ_user‖x_u‖² + λ_pos‖y_i‖² + λ_neg‖y_j‖² for one triplet.
inline double triplet_loss(const FactorModel& model, const Triplet& t, const BprConfig& cfg) {
  auto row = [](const FactorMatrix& f, std::size_t r) { return f.row(static_cast<Eigen::Index>(r)); };
  return -log_sigmoid(triplet_margin(model, t)) +
         cfg.lambda_user * row(model.user_factors, t.u).squaredNorm() +
         cfg.lambda_item_pos * row(model.item_factors, t.i).squaredNorm() +
         cfg.lambda_item_neg * row(model.item_factors, t.j).squaredNorm();
}

/// Sum of triplet_loss over `triplets`; the regularizer is charged once per
/// triplet for the three vectors it touches.
inline double bpr_loss(const RatingMatrix& m, const FactorModel& model,
                       std::span<const Triplet> triplets, const BprConfig& cfg) {
  check_model_matches(m, model);
  double total = 0.0;
  for (const auto& t : triplets) total += triplet_loss(model, t, cfg);
  return total;
}

struct TripletGradient {
  Eigen::VectorXd user;
  Eigen::VectorXd pos_item;
  Eigen::VectorXd neg_item;
};

/// Exact gradient of triplet_loss with respect to x_u, y_i and y_j.
inline TripletGradient bpr_gradient(const FactorModel& model, const Triplet& t,
                                    const BprConfig& cfg) {
  Eigen::VectorXd xu = model.user_factors.row(static_cast<Eigen::Index>(t.u)).transpose();
  Eigen::VectorXd yi = model.item_factors.row(static_cast<Eigen::Index>(t.i)).transpose();
  Eigen::VectorXd yj = model.item_factors.row(static_cast<Eigen::Index>(t.j)).transpose();
  double e = 1.0 - sigmoid(triplet_margin(model, t));
  return {-e * (yi - yj) + 2.0 * cfg.lambda_user * xu,
          -e * xu + 2.0 * cfg.lambda_item_pos * yi,
          e * xu + 2.0 * cfg.lambda_item_neg * yj};
}

/// One SGD update. Uses the customary λθ weight decay and the pre-update x_u
/// in both item updates.
inline void bpr_step(FactorModel& model, const Triplet& t, const BprConfig& cfg) {
  const double e = 1.0 - sigmoid(triplet_margin(model, t));
  const double lr = cfg.learning_rate;
  auto xu = model.user_factors.row(static_cast<Eigen::Index>(t.u));
  auto yi = model.item_factors.row(static_cast<Eigen::Index>(t.i));
  auto yj = model.item_factors.row(static_cast<Eigen::Index>(t.j));
  Eigen::RowVectorXd xu_old = xu;
  xu += lr * (e * (yi - yj) - cfg.lambda_user * xu_old);
  yi += lr * (e * xu_old - cfg.lambda_item_pos * yi);
  yj += lr * (-e * xu_old - cfg.lambda_item_neg * yj);
}

/// Uniform triplet sampler: user uniform among those with at least one
/// positive and one negative, positive uniform within the user's row,
/// negative uniform over items with rejection of positives.
class TripletSampler {
 public:
  explicit TripletSampler(const RatingMatrix& m) : m_(&m) {
    for (std::size_t u = 0; u < m.n_users(); ++u) {
      auto n = m.user_row(u).size();
      if (n > 0 && n < m.n_items()) users_.push_back(u);
    }
    if (users_.empty()) {
      throw NoNegativesAvailable("no user has both an observed and an unobserved item");
    }
  }

  std::span<const std::size_t> eligible_users() const noexcept { return users_; }

  template <typename Rng>
  Triplet operator()(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick_user(0, users_.size() - 1);
    std::size_t u = users_[pick_user(rng)];
    auto row = m_->user_row(u);
    std::uniform_int_distribution<std::size_t> pick_pos(0, row.size() - 1);
    std::size_t i = row[pick_pos(rng)].index;
    std::uniform_int_distribution<std::size_t> pick_item(0, m_->n_items() - 1);
    std::size_t j = pick_item(rng);
    while (m_->contains(u, j)) j = pick_item(rng);
    return {u, i, j};
  }

 private:
  const RatingMatrix* m_;
  std::vector<std::size_t> users_;
};

template <typename Rng>
Triplet sample_triplet(const RatingMatrix& m, Rng& rng) {
  return TripletSampler(m)(rng);
}

using BprObserver = std::function<void(std::size_t epoch, const FactorModel&)>;

/// Sequential SGD over sampled triplets; bit-reproducible for a fixed seed.
/// The observer, if any, sees the model after every epoch (1-based).
inline FactorModel bpr_train(const RatingMatrix& m, const BprConfig& cfg,
                             const BprObserver& observer = {}) {
  cfg.validate();
  if (m.nnz() == 0) throw NoTrainableUsers("BPR: rating matrix has no entries");
  std::optional<TripletSampler> sampler;
  try {
    sampler.emplace(m);
  } catch (const NoNegativesAvailable& e) {
    throw NoTrainableUsers(e.what());
  }
  FactorModel model = init_factor_model(m, cfg.k, TrainerTag::BPR, cfg.seed);
  // Sampling draws from a stream separate from initialisation.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t per_epoch = cfg.samples_per_epoch > 0 ? cfg.samples_per_epoch : m.nnz();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t s = 0; s < per_epoch; ++s) bpr_step(model, (*sampler)(rng), cfg);
    if (observer) observer(epoch, model);
  }
  return model;
}

}  // namespace persim
