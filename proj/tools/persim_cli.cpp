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

// persim: personalized similar-item recommendation from implicit feedback.
//
//   persim synth     --out-dir data/
//   persim pipeline  --events data/events.csv --boundary 800000 --out-dir run/
//   persim recommend --model run/model.txt --index run/candidates.csv --user u00001 --item p00042
//   persim evaluate  --model run/model.txt --index run/candidates.csv --events data/events.csv --boundary 800000
//   persim sweep     --events data/events.csv --boundary 800000 --dimension alpha --grid grids/alpha.csv
//
// Exit codes: 0 ok, 1 internal error, 2 input error, 3 empty result.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "persim/persim.hpp"

namespace fs = std::filesystem;
using namespace persim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;

struct CommonOptions {
  std::string events;
  RatingWeights weights;
  std::int64_t boundary = std::numeric_limits<std::int64_t>::max();
  bool lenient = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct ModelOptions {
  std::string trainer = "bpr";
  std::size_t k = 64;
  // ALS
  double lambda = 0.01;
  double confidence = AlsConfig{}.confidence;
  std::size_t iterations = 15;
  // BPR
  double learning_rate = BprConfig{}.learning_rate;
  std::optional<double> lambda_user, lambda_pos, lambda_neg;
  std::size_t epochs = BprConfig{}.epochs;
  std::size_t samples_per_epoch = 0;
};

struct IndexOptions {
  std::size_t candidates = kDefaultCandidates;
  bool binarize_cf = false;
};

void add_events(CLI::App* cmd, CommonOptions& o, bool required = true) {
  auto* opt = cmd->add_option("--events", o.events, "Event CSV: user_id,item_id,kind,timestamp");
  if (required) opt->required();
  cmd->add_flag("--lenient", o.lenient, "Skip malformed event lines instead of failing");
}

void add_weights(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--w-view", o.weights.list_view, "Weight of list views")->capture_default_str();
  cmd->add_option("--w-click", o.weights.click, "Weight of clicks")->capture_default_str();
  cmd->add_option("--w-cart", o.weights.cart, "Weight of add-to-carts")->capture_default_str();
  cmd->add_option("--w-order", o.weights.order, "Weight of orders")->capture_default_str();
  cmd->add_flag("--use-frequency", o.weights.use_frequency, "Multiply weights by event counts");
}

void add_boundary(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--boundary", o.boundary,
                  "Train on events with timestamp < boundary (default: all events)");
}

void add_seed_threads(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Seed for every random stage")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads for ALS and the index")
      ->capture_default_str();
}

void add_index(CLI::App* cmd, IndexOptions& o) {
  cmd->add_option("--candidates", o.candidates, "Neighbours kept per item")->capture_default_str();
  cmd->add_flag("--binarize-cf", o.binarize_cf, "Use 0/1 presence for item-item cosine");
}

void add_model(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--trainer", o.trainer, "als or bpr")
      ->check(CLI::IsMember({"als", "bpr"}))
      ->capture_default_str();
  cmd->add_option("--factors", o.k, "Latent dimension")->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "ALS regularization")->capture_default_str();
  cmd->add_option("--confidence", o.confidence, "ALS confidence scale")->capture_default_str();
  cmd->add_option("--iterations", o.iterations, "ALS rounds")->capture_default_str();
  cmd->add_option("--learning-rate", o.learning_rate, "BPR step size")->capture_default_str();
  cmd->add_option("--lambda-user", o.lambda_user, "BPR user regularization (default --lambda)");
  cmd->add_option("--lambda-pos", o.lambda_pos, "BPR positive-item regularization");
  cmd->add_option("--lambda-neg", o.lambda_neg, "BPR negative-item regularization");
  cmd->add_option("--epochs", o.epochs, "BPR epochs")->capture_default_str();
  cmd->add_option("--samples-per-epoch", o.samples_per_epoch,
                  "BPR updates per epoch (0 = number of stored ratings)");
}

TrainOptions to_train_options(const ModelOptions& m, const CommonOptions& c) {
  TrainOptions t;
  t.trainer = m.trainer == "als" ? Trainer::ALS : Trainer::BPR;
  t.als.k = m.k;
  t.als.lambda = m.lambda;
  t.als.confidence = m.confidence;
  t.als.iterations = m.iterations;
  t.bpr.k = m.k;
  t.bpr.learning_rate = m.learning_rate;
  t.bpr.lambda_user = m.lambda_user.value_or(m.lambda);
  t.bpr.lambda_item_pos = m.lambda_pos.value_or(m.lambda);
  t.bpr.lambda_item_neg = m.lambda_neg.value_or(m.lambda);
  t.bpr.epochs = m.epochs;
  t.bpr.samples_per_epoch = m.samples_per_epoch;
  t.set_seed(c.seed);
  t.als.validate();
  t.bpr.validate();
  return t;
}

ExperimentConfig to_experiment(const CommonOptions& c, const IndexOptions& ix,
                               const ModelOptions& m) {
  ExperimentConfig cfg;
  cfg.weights = c.weights;
  cfg.weights.validate();
  cfg.binarize_cf = ix.binarize_cf;
  cfg.n_candidates = ix.candidates;
  cfg.train = to_train_options(m, c);
  cfg.boundary = c.boundary;
  cfg.threads = c.threads;
  return cfg;
}

std::vector<Event> training_events(const CommonOptions& c) {
  auto events = load_events(c.events, c.lenient ? ParseMode::Lenient : ParseMode::Strict);
  auto [train, test] = split_events(events, c.boundary);
  if (train.empty()) throw EmptyInput("no events before the split boundary");
  return train;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_matrix_stats(const RatingMatrix& m) {
  std::cout << "users=" << m.n_users() << " items=" << m.n_items() << " ratings=" << m.nnz()
            << " sparsity=" << format_g9(m.density()) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"persim: personalized similar-item recommendations from implicit feedback"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
  app.require_subcommand(1);

  CommonOptions common;
  ModelOptions model_opts;
  IndexOptions index_opts;
  BlendConfig blend;
  std::string out_path;
  std::string model_path, index_path;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic planted-taste event log");
  SynthConfig synth_cfg;
  bool no_oracle = false;
  synth->add_option("--out-dir", out_path, "Directory for events.csv and oracle.csv")->required();
  synth->add_option("--users", synth_cfg.n_users)->capture_default_str();
  synth->add_option("--items", synth_cfg.n_items)->capture_default_str();
  synth->add_option("--styles", synth_cfg.n_styles)->capture_default_str();
  synth->add_option("--k-true", synth_cfg.k_true)->capture_default_str();
  synth->add_option("--events-per-user", synth_cfg.events_per_user, "Mean views per user")
      ->capture_default_str();
  synth->add_option("--views-per-session", synth_cfg.views_per_session)->capture_default_str();
  synth->add_option("--p-click", synth_cfg.funnel.click_given_view)->capture_default_str();
  synth->add_option("--p-cart", synth_cfg.funnel.cart_given_click)->capture_default_str();
  synth->add_option("--p-order", synth_cfg.funnel.order_given_cart)->capture_default_str();
  synth->add_option("--sharpness", synth_cfg.taste_sharpness)->capture_default_str();
  synth->add_option("--horizon", synth_cfg.time_horizon, "Timestamps lie in [0, horizon)")
      ->capture_default_str();
  synth->add_option("--seed", common.seed)->capture_default_str();
  synth->add_flag("--no-oracle", no_oracle, "Skip writing oracle.csv");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build the rating matrix and write it as CSV");
  add_events(ingest, common);
  add_weights(ingest, common);
  add_boundary(ingest, common);
  ingest->add_option("--out", out_path, "Matrix CSV (user_id,item_id,rating)")->required();

  // index
  auto* index = app.add_subcommand("index", "Build the item-item candidate index");
  add_events(index, common);
  add_weights(index, common);
  add_boundary(index, common);
  add_index(index, index_opts);
  add_seed_threads(index, common);
  index->add_option("--out", out_path, "Candidate CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "Train an ALS or BPR factor model");
  add_events(train, common);
  add_weights(train, common);
  add_boundary(train, common);
  add_model(train, model_opts);
  add_seed_threads(train, common);
  train->add_option("--out", out_path, "Model file")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "ingest + index + train, writing all artifacts");
  add_events(pipeline, common);
  add_weights(pipeline, common);
  add_boundary(pipeline, common);
  add_index(pipeline, index_opts);
  add_model(pipeline, model_opts);
  add_seed_threads(pipeline, common);
  pipeline->add_option("--out-dir", out_path, "Artifact directory")->required();

  // recommend
  std::string user_id, item_id;
  auto* rec = app.add_subcommand("recommend", "Personalized similar items for (user, item)");
  rec->add_option("--model", model_path)->required();
  rec->add_option("--index", index_path)->required();
  rec->add_option("--user", user_id, "User id (unknown or empty: non-personalized)");
  rec->add_option("--item", item_id, "Query item id")->required();
  rec->add_option("--alpha", blend.alpha, "Weight on user preference")->capture_default_str();
  rec->add_option("--top-k", blend.top_k)->capture_default_str();

  // evaluate
  std::size_t eval_k = kDefaultEvalK;
  std::string per_query_path;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "MAP/precision/recall@K on held-out events");
  evaluate_cmd->add_option("--model", model_path)->required();
  evaluate_cmd->add_option("--index", index_path)->required();
  add_events(evaluate_cmd, common);
  evaluate_cmd->add_option("--boundary", common.boundary, "Test events have timestamp >= boundary")
      ->required();
  evaluate_cmd->add_option("--alpha", blend.alpha, "0 gives the non-personalized baseline")
      ->capture_default_str();
  evaluate_cmd->add_option("--k", eval_k)->capture_default_str();
  evaluate_cmd->add_option("--per-query", per_query_path, "Optional per-query CSV");

  // sweep
  std::string grid_path, dimension = "alpha";
  auto* sweep = app.add_subcommand("sweep", "Evaluate a grid of weights, confidences or alphas");
  add_events(sweep, common);
  add_weights(sweep, common);
  sweep->add_option("--boundary", common.boundary)->required();
  add_index(sweep, index_opts);
  add_model(sweep, model_opts);
  add_seed_threads(sweep, common);
  sweep->add_option("--dimension", dimension, "weights, confidence or alpha")
      ->check(CLI::IsMember({"weights", "confidence", "alpha"}))
      ->capture_default_str();
  sweep->add_option("--grid", grid_path, "Grid file, one point per line")->required();
  sweep->add_option("--alpha", blend.alpha, "Alpha for weight/confidence sweeps")
      ->capture_default_str();
  sweep->add_option("--k", eval_k)->capture_default_str();
  sweep->add_option("--out", out_path, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (synth->parsed()) {
      synth_cfg.seed = common.seed + kSynthSeedOffset;
      auto data = generate(synth_cfg);
      fs::path dir(out_path);
      write_file(dir / "events.csv", [&](std::ostream& o) { write_events(o, data.events); });
      if (!no_oracle) {
        write_file(dir / "oracle.csv", [&](std::ostream& o) { write_oracle_csv(o, data); });
      }
      std::cout << "events=" << data.events.size() << " sparsity=" << format_g9(sparsity(data.events))
                << '\n';
    } else if (ingest->parsed()) {
      auto m = build_matrix(training_events(common), common.weights);
      write_file(out_path, [&](std::ostream& o) { write_matrix_csv(o, m); });
      print_matrix_stats(m);
    } else if (index->parsed()) {
      ModelOptions unused;
      auto cfg = to_experiment(common, index_opts, unused);
      auto m = build_matrix(training_events(common), cfg.weights);
      auto idx = build_index_for(m, cfg);
      write_file(out_path, [&](std::ostream& o) { write_candidates_csv(o, idx, m.item_ids()); });
    } else if (train->parsed()) {
      auto cfg = to_experiment(common, index_opts, model_opts);
      auto m = build_matrix(training_events(common), cfg.weights);
      auto model = train_model(m, cfg.train, cfg.threads);
      write_file(out_path, [&](std::ostream& o) { write_model(o, model); });
    } else if (pipeline->parsed()) {
      auto cfg = to_experiment(common, index_opts, model_opts);
      fs::path dir(out_path);
      auto t0 = std::chrono::steady_clock::now();
      auto m = build_matrix(training_events(common), cfg.weights);
      std::cout << "ingest: " << format_g9(seconds_since(t0)) << "s\n";
      print_matrix_stats(m);
      write_file(dir / "matrix.csv", [&](std::ostream& o) { write_matrix_csv(o, m); });

      t0 = std::chrono::steady_clock::now();
      auto idx = build_index_for(m, cfg);
      std::cout << "index: " << format_g9(seconds_since(t0)) << "s\n";
      write_file(dir / "candidates.csv",
                 [&](std::ostream& o) { write_candidates_csv(o, idx, m.item_ids()); });

      t0 = std::chrono::steady_clock::now();
      auto model = train_model(m, cfg.train, cfg.threads);
      std::cout << "train(" << model_opts.trainer << "): " << format_g9(seconds_since(t0)) << "s\n";
      write_file(dir / "model.txt", [&](std::ostream& o) { write_model(o, model); });
    } else if (rec->parsed()) {
      auto model = load_model(model_path);
      auto idx = load_index(index_path, model.item_ids);
      auto item = model.item_ids.find(item_id);
      if (!item) throw UnknownQueryItem("unknown query item '" + item_id + "'");
      auto user = user_id.empty() ? std::nullopt : model.user_ids.find(user_id);
      auto list = recommend(user, *item, idx, model, blend);
      std::cout << "rank,item_id,blended,similarity,preference\n";
      std::size_t rank = 0;
      for (const auto& e : list.entries) {
        std::cout << ++rank << ',' << model.item_ids.id(e.item) << ',' << format_g9(e.blended) << ','
                  << format_g9(e.similarity) << ',' << format_g9(e.preference) << '\n';
      }
    } else if (evaluate_cmd->parsed()) {
      auto model = load_model(model_path);
      auto idx = load_index(index_path, model.item_ids);
      auto events = load_events(common.events,
                                common.lenient ? ParseMode::Lenient : ParseMode::Strict);
      auto [train_part, test_part] = split_events(events, common.boundary);
      auto report = evaluate_artifacts(model, idx, test_part, blend, eval_k);
      auto json = to_json(report);
      json["alpha"] = blend.alpha;
      std::cout << json.dump(2) << '\n';
      if (!per_query_path.empty()) {
        write_file(per_query_path, [&](std::ostream& o) {
          write_per_query_csv(o, report, model.user_ids, model.item_ids);
        });
      }
    } else if (sweep->parsed()) {
      auto cfg = to_experiment(common, index_opts, model_opts);
      blend.validate();
      cfg.blend = blend;
      cfg.eval_k = eval_k;
      static const std::map<std::string, SweepDimension> dims = {
          {"weights", SweepDimension::RatingWeights},
          {"confidence", SweepDimension::Confidence},
          {"alpha", SweepDimension::Alpha}};
      std::ifstream grid_in(grid_path);
      if (!grid_in) throw InputError("cannot open grid file '" + grid_path + "'");
      auto grid = parse_sweep_grid(grid_in, dims.at(dimension));
      auto events = load_events(common.events,
                                common.lenient ? ParseMode::Lenient : ParseMode::Strict);
      auto rows = run_sweep(grid, events, cfg);
      if (out_path.empty()) {
        write_sweep_csv(std::cout, grid, rows, eval_k);
      } else {
        write_file(out_path, [&](std::ostream& o) { write_sweep_csv(o, grid, rows, eval_k); });
      }
    }
  } catch (const NoQueries& e) {
    std::cerr << "persim: empty result: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const InputError& e) {
    std::cerr << "persim: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const MalformedLine& e) {
    std::cerr << "persim: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigInvalid& e) {
    std::cerr << "persim: invalid configuration: " << e.what() << '\n';
    return kExitInput;
  } catch (const UnknownQueryItem& e) {
    std::cerr << "persim: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const EmptyInput& e) {
    std::cerr << "persim: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "persim: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
