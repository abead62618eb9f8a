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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "persim/error.hpp"
#include "persim/interactions.hpp"
#include "persim/simcore.hpp"

namespace persim {

using FactorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class TrainerTag { ALS, BPR };

inline std::string_view to_string(TrainerTag t) { return t == TrainerTag::ALS ? "ALS" : "BPR"; }

/// Latent user and item vectors, one row per user / item.
struct FactorModel {
  TrainerTag trainer = TrainerTag::ALS;
  IdMap user_ids;
  IdMap item_ids;
  FactorMatrix user_factors;
  FactorMatrix item_factors;

  std::size_t k() const noexcept { return static_cast<std::size_t>(user_factors.cols()); }
  std::size_t n_users() const noexcept { return static_cast<std::size_t>(user_factors.rows()); }
  std::size_t n_items() const noexcept { return static_cast<std::size_t>(item_factors.rows()); }

  std::span<const double> user(std::size_t u) const {
    return {user_factors.data() + u * k(), k()};
  }
  std::span<const double> item(std::size_t i) const {
    return {item_factors.data() + i * k(), k()};
  }

  bool all_finite() const { return user_factors.allFinite() && item_factors.allFinite(); }

  friend bool operator==(const FactorModel& a, const FactorModel& b) {
    return a.trainer == b.trainer && a.user_ids == b.user_ids && a.item_ids == b.item_ids &&
           a.user_factors.rows() == b.user_factors.rows() &&
           a.user_factors.cols() == b.user_factors.cols() &&
           a.item_factors.rows() == b.item_factors.rows() &&
           a.item_factors.cols() == b.item_factors.cols() && a.user_factors == b.user_factors &&
           a.item_factors == b.item_factors;
  }
};

inline void check_model_matches(const RatingMatrix& m, const FactorModel& model) {
  if (model.n_users() != m.n_users() || model.n_items() != m.n_items() ||
      model.item_factors.cols() != model.user_factors.cols()) {
    throw DimensionMismatch("factor model does not match the rating matrix");
  }
}

inline constexpr double kInitScale = 0.01;

/// Seeded uniform(-0.01, 0.01) initialisation, user rows first.
inline FactorModel init_factor_model(const RatingMatrix& m, std::size_t k, TrainerTag tag,
                                     std::uint64_t seed) {
  FactorModel model;
  model.trainer = tag;
  model.user_ids = m.user_ids();
  model.item_ids = m.item_ids();
  model.user_factors.resize(static_cast<Eigen::Index>(m.n_users()), static_cast<Eigen::Index>(k));
  model.item_factors.resize(static_cast<Eigen::Index>(m.n_items()), static_cast<Eigen::Index>(k));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-kInitScale, kInitScale);
  for (Eigen::Index n = 0; n < model.user_factors.size(); ++n) model.user_factors.data()[n] = dist(rng);
  for (Eigen::Index n = 0; n < model.item_factors.size(); ++n) model.item_factors.data()[n] = dist(rng);
  return model;
}

// ---------------------------------------------------------------------------
// Text persistence
//
//   persim-model v1 trainer=ALS k=<k> users=<n> items=<m>
//   U <user id>          (n lines, index order)
//   I <item id>          (m lines, index order)
//   <k values>           (n user rows, then m item rows; %.9g)
// ---------------------------------------------------------------------------

inline void write_model(std::ostream& out, const FactorModel& model) {
  out << "persim-model v1 trainer=" << to_string(model.trainer) << " k=" << model.k()
      << " users=" << model.n_users() << " items=" << model.n_items() << '\n';
  for (const auto& id : model.user_ids.ids()) out << "U " << id << '\n';
  for (const auto& id : model.item_ids.ids()) out << "I " << id << '\n';
  auto rows = [&out](const FactorMatrix& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_g9(mat(r, c));
      }
      out << '\n';
    }
  };
  rows(model.user_factors);
  rows(model.item_factors);
}

inline FactorModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("model file is empty");
  std::istringstream header(line);
  std::string magic, version, trainer_kv, k_kv, users_kv, items_kv;
  header >> magic >> version >> trainer_kv >> k_kv >> users_kv >> items_kv;
  if (magic != "persim-model" || version != "v1") throw InputError("not a persim-model v1 file");

  auto value_of = [](const std::string& kv, std::string_view key) {
    if (!kv.starts_with(std::string(key) + "=")) {
      throw InputError("model header missing '" + std::string(key) + "'");
    }
    return kv.substr(key.size() + 1);
  };
  FactorModel model;
  std::string trainer = value_of(trainer_kv, "trainer");
  if (trainer == "ALS") {
    model.trainer = TrainerTag::ALS;
  } else if (trainer == "BPR") {
    model.trainer = TrainerTag::BPR;
  } else {
    throw InputError("unknown trainer '" + trainer + "'");
  }
  std::size_t k = std::stoul(value_of(k_kv, "k"));
  std::size_t n_users = std::stoul(value_of(users_kv, "users"));
  std::size_t n_items = std::stoul(value_of(items_kv, "items"));

  auto read_ids = [&in](std::size_t n, std::string_view prefix) {
    std::vector<std::string> ids;
    ids.reserve(n);
    std::string l;
    for (std::size_t r = 0; r < n; ++r) {
      if (!std::getline(in, l) || !l.starts_with(prefix)) {
        throw InputError("model id map truncated");
      }
      ids.push_back(l.substr(prefix.size()));
    }
    return IdMap(std::move(ids));
  };
  model.user_ids = read_ids(n_users, "U ");
  model.item_ids = read_ids(n_items, "I ");

  auto read_rows = [&in, k](std::size_t n) {
    FactorMatrix mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        if (!(in >> mat(r, c))) throw InputError("model factor rows truncated");
      }
    }
    return mat;
  };
  model.user_factors = read_rows(n_users);
  model.item_factors = read_rows(n_items);
  return model;
}

}  // namespace persim
