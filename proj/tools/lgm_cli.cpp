// lgm: fit latent-space models of an autoencoder, sample from them and
// evaluate the samples.
//
// Exit codes: 0 success, 2 usage error, 3 data/validation error, 4 numeric
// failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgm/autoencoder.hpp"
#include "lgm/beta_copula.hpp"
#include "lgm/core.hpp"
#include "lgm/error.hpp"
#include "lgm/latent_model.hpp"
#include "lgm/metrics.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void print_timing(const char* key, double seconds) { std::printf("%s=%.6f\n", key, seconds); }

void write_matrix(const lgm::Matrix& m, const std::string& path, const std::vector<std::string>* labels = nullptr) {
  if (labels && lgm::format_for_path(path) == lgm::MatrixFormat::binary) labels = nullptr;
  lgm::save_matrix(m, path, labels);
}

const lgm::EbcModel& require_ebc(const lgm::LatentModel& model, const char* what) {
  const auto* ebc = std::get_if<lgm::EbcModel>(&model);
  if (!ebc) throw lgm::DataError(std::string(what) + " requires a copula model (kind ebc), got kind " +
                                 lgm::to_string(lgm::kind_of(model)));
  return *ebc;
}

struct TrainArgs {
  std::string data, out, history;
  lgm::Index latent_dim = 8;
  std::vector<lgm::Index> hidden{64};
  int epochs = 50;
  lgm::Index batch_size = 100;
  double lr = 1e-3, weight_decay = 1e-3;
  std::string loss = "bce";
  std::string output_activation;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
  const auto data = lgm::load_matrix(a.data);
  lgm::ArchitectureConfig arch;
  arch.input_dim = data.cols();
  arch.latent_dim = a.latent_dim;
  arch.hidden = a.hidden;
  lgm::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.weight_decay = a.weight_decay;
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.loss = lgm::parse_loss(a.loss);
  arch.output_activation = a.output_activation.empty()
                               ? (cfg.loss == lgm::Loss::binary_cross_entropy ? lgm::Activation::logistic
                                                                              : lgm::Activation::identity)
                               : lgm::parse_activation(a.output_activation);
  const auto start = Clock::now();
  const auto result = lgm::train(data.data(), arch, cfg);
  print_timing("train_seconds", seconds_since(start));
  std::printf("final_loss=%.10g\n", result.loss_history.back());
  lgm::save_autoencoder(result.model, a.out);
  if (!a.history.empty()) {
    std::ofstream out(a.history);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) out << e + 1 << ',' << result.loss_history[e] << '\n';
  }
  return 0;
}

int run_code(const std::string& model_path, const std::string& data_path, const std::string& out_path, bool encode) {
  const auto model = lgm::load_autoencoder(model_path);
  auto file = lgm::read_matrix_file(data_path);
  if (file.data.rows() == 0) throw lgm::DataError(data_path + ": zero rows");
  const lgm::Matrix result = encode ? model.encode(file.data) : model.decode(file.data);
  write_matrix(result, out_path, file.labels ? &*file.labels : nullptr);
  return 0;
}

struct FitArgs {
  std::string kind, data, out, holdout_out, em_init = "kmeans++";
  std::uint64_t seed = 0;
  lgm::Index components = 10;
  int max_iters = 100;
  double tol = 1e-3;
  int truncation = 0;
  std::vector<double> grid;
  int folds = 10;
  std::size_t holdout = 0;
};

int run_fit(const FitArgs& a) {
  const auto kind = lgm::parse_model_kind(a.kind);
  auto file = lgm::read_matrix_file(a.data);
  if (file.data.rows() == 0) throw lgm::DataError(a.data + ": zero rows");
  lgm::LatentMatrix y(std::move(file.data));
  std::optional<std::vector<std::string>> labels = std::move(file.labels);

  if (a.holdout > 0) {
    auto [train_rows, holdout_rows] = lgm::holdout_indices(y.rows(), a.holdout, a.seed);
    const auto held = y.select_rows(holdout_rows);
    std::optional<std::vector<std::string>> held_labels, train_labels;
    if (labels) {
      held_labels.emplace();
      train_labels.emplace();
      for (auto i : holdout_rows) held_labels->push_back((*labels)[static_cast<std::size_t>(i)]);
      for (auto i : train_rows) train_labels->push_back((*labels)[static_cast<std::size_t>(i)]);
    }
    write_matrix(held.data(), a.holdout_out, held_labels ? &*held_labels : nullptr);
    y = y.select_rows(train_rows);
    labels = std::move(train_labels);
  }

  lgm::FitOptions options;
  options.gmm.components = a.components;
  options.gmm.max_iters = a.max_iters;
  options.gmm.tol = a.tol;
  options.gmm.init = a.em_init == "random" ? lgm::GmmInit::random_rows : lgm::GmmInit::kmeans_plus_plus;
  if (!a.grid.empty()) options.mkde.grid = a.grid;
  options.mkde.folds = a.folds;
  options.truncation = a.truncation;

  const auto start = Clock::now();
  const auto model = lgm::fit_latent_model(kind, y, options, a.seed, labels ? &*labels : nullptr);
  print_timing("fit_seconds", seconds_since(start));
  lgm::save_model(model, a.out);
  return 0;
}

int run_sample(const std::string& model_path, const std::string& kind, std::size_t count, std::uint64_t seed,
               const std::string& out) {
  const auto model = lgm::load_model(model_path);
  if (!kind.empty() && lgm::parse_model_kind(kind) != lgm::kind_of(model)) {
    throw lgm::DataError("model file holds kind " + lgm::to_string(lgm::kind_of(model)) + ", not " + kind);
  }
  const auto start = Clock::now();
  const auto samples = lgm::sample_latent(model, count, seed);
  print_timing("sample_seconds", seconds_since(start));
  write_matrix(samples, out);
  return 0;
}

int run_targeted(const std::string& model_path, const std::string& group, std::size_t count, std::uint64_t seed,
                 const std::string& out) {
  const auto model = lgm::load_model(model_path);
  const auto& ebc = require_ebc(model, "targeted sampling");
  const auto start = Clock::now();
  const auto samples = lgm::sample_ebc_targeted(ebc, group, count, seed);
  print_timing("sample_seconds", seconds_since(start));
  write_matrix(samples.latent, out);
  return 0;
}

int run_recombine(const std::string& model_path, const std::string& margins_path, const std::string& group_a,
                  const std::string& group_b, std::size_t count, std::uint64_t seed, const std::string& out) {
  const auto model = lgm::load_model(model_path);
  const auto& dependence = require_ebc(model, "recombination");
  std::optional<lgm::LatentModel> other;
  if (!margins_path.empty()) other = lgm::load_model(margins_path);
  const auto& margins = other ? require_ebc(*other, "recombination") : dependence;
  const auto start = Clock::now();
  const auto samples = lgm::recombine(dependence, group_a, margins, group_b, count, seed);
  print_timing("sample_seconds", seconds_since(start));
  write_matrix(samples.latent, out);
  return 0;
}

int run_eval(const std::string& real_path, const std::string& synth_path, std::optional<double> bandwidth,
             std::size_t subsample) {
  lgm::Matrix real = lgm::load_matrix(real_path).data();
  lgm::Matrix synth = lgm::load_matrix(synth_path).data();
  if (subsample > 0) {
    if (static_cast<lgm::Index>(subsample) > real.rows() || static_cast<lgm::Index>(subsample) > synth.rows())
      throw lgm::InvalidArgument("--subsample exceeds the available rows");
    real = real.topRows(static_cast<lgm::Index>(subsample)).eval();
    synth = synth.topRows(static_cast<lgm::Index>(subsample)).eval();
  }
  if (real.rows() != synth.rows()) {
    throw lgm::InvalidArgument("row counts differ (" + std::to_string(real.rows()) + " vs " +
                               std::to_string(synth.rows()) +
                               "); pass --subsample N to compare the first N rows of each file");
  }
  std::cout << lgm::evaluate(real, synth, bandwidth).to_json() << '\n';
  return 0;
}

int run_nn_audit(const std::string& synth_path, const std::string& train_path, std::size_t k, const std::string& out) {
  const auto synth = lgm::load_matrix(synth_path);
  const auto train = lgm::load_matrix(train_path);
  if (synth.cols() != train.cols())
    throw lgm::DataError("dimension mismatch: synthetic d=" + std::to_string(synth.cols()) + ", training d=" +
                         std::to_string(train.cols()));
  const auto matches = lgm::nearest_neighbors(synth.data(), train.data(), k);

  std::ofstream file;
  if (!out.empty()) {
    file.open(out, std::ios::trunc);
    if (!file) throw lgm::DataError("cannot open '" + out + "' for writing");
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "synthetic_row,rank,train_index,distance\n";
  char buf[64];
  for (std::size_t i = 0; i < matches.size(); ++i) {
    for (std::size_t r = 0; r < matches[i].size(); ++r) {
      std::snprintf(buf, sizeof(buf), "%.17g", matches[i][r].distance);
      os << i << ',' << r + 1 << ',' << matches[i][r].index << ',' << buf << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space generative models for autoencoders"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-ae", "Train an MLP autoencoder on a data matrix");
  train_cmd->add_option("--data", train.data, "Training data (CSV or LGM1)")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--latent-dim", train.latent_dim)->check(CLI::PositiveNumber);
  train_cmd->add_option("--hidden", train.hidden, "Hidden widths")->delimiter(',');
  train_cmd->add_option("--epochs", train.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", train.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.lr)->check(CLI::PositiveNumber);
  train_cmd->add_option("--weight-decay", train.weight_decay)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--loss", train.loss)->check(CLI::IsMember({"bce", "se"}));
  train_cmd->add_option("--output-activation", train.output_activation)
      ->check(CLI::IsMember({"logistic", "identity", "relu"}));
  train_cmd->add_option("--history", train.history, "Write per-epoch loss CSV");
  train_cmd->add_option("--seed", train.seed)->required();

  std::string code_model, code_data, code_out;
  auto* encode_cmd = app.add_subcommand("encode", "Encode data to latent codes");
  auto* decode_cmd = app.add_subcommand("decode", "Decode latent codes to data space");
  for (auto* cmd : {encode_cmd, decode_cmd}) {
    cmd->add_option("--model", code_model, "Autoencoder checkpoint")->required();
    cmd->add_option("--data", code_data, "Input matrix")->required();
    cmd->add_option("--out", code_out, "Output matrix")->required();
  }

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a latent-space model");
  fit_cmd->add_option("--kind", fit.kind)->required()->check(CLI::IsMember({"gauss", "indep", "mkde", "gmm", "vine", "ebc"}));
  fit_cmd->add_option("--data", fit.data, "Latent matrix (label column honoured for ebc)")->required();
  fit_cmd->add_option("--out", fit.out, "Model path")->required();
  fit_cmd->add_option("--seed", fit.seed)->required();
  fit_cmd->add_option("--components", fit.components, "GMM component count")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iters", fit.max_iters, "EM iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tol", fit.tol, "EM stop threshold on mean per-row log-likelihood gain");
  fit_cmd->add_option("--em-init", fit.em_init, "EM mean initialisation")->check(CLI::IsMember({"kmeans++", "random"}));
  fit_cmd->add_option("--truncation", fit.truncation, "Vine truncation level (default min(d-1, 5))")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--grid", fit.grid, "KDE bandwidth scale factors")->delimiter(',');
  fit_cmd->add_option("--folds", fit.folds, "KDE cross-validation folds");
  auto* holdout_opt = fit_cmd->add_option("--holdout", fit.holdout, "Hold out this many rows before fitting")
                          ->check(CLI::PositiveNumber);
  auto* holdout_out = fit_cmd->add_option("--holdout-out", fit.holdout_out, "Where to write the held-out rows");
  holdout_opt->needs(holdout_out);
  holdout_out->needs(holdout_opt);

  std::string model_path, out_path, kind_check, group, group_a, group_b, margins_model;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw latent samples from a fitted model");
  sample_cmd->add_option("--model", model_path)->required();
  sample_cmd->add_option("--kind", kind_check, "Expected model kind")
      ->check(CLI::IsMember({"gauss", "indep", "mkde", "gmm", "vine", "ebc"}));
  sample_cmd->add_option("--count", count)->required();
  sample_cmd->add_option("--seed", seed)->required();
  sample_cmd->add_option("--out", out_path)->required();

  auto* targeted_cmd = app.add_subcommand("sample-targeted", "Sample from one labelled group of an ebc model");
  targeted_cmd->add_option("--model", model_path)->required();
  targeted_cmd->add_option("--group", group)->required();
  targeted_cmd->add_option("--count", count)->required();
  targeted_cmd->add_option("--seed", seed)->required();
  targeted_cmd->add_option("--out", out_path)->required();

  auto* recombine_cmd = app.add_subcommand("recombine", "Dependence of group A with the margins of group B");
  recombine_cmd->add_option("--model", model_path, "ebc model supplying group A")->required();
  recombine_cmd->add_option("--margins-model", margins_model, "ebc model supplying group B (default --model)");
  recombine_cmd->add_option("--group-a", group_a)->required();
  recombine_cmd->add_option("--group-b", group_b)->required();
  recombine_cmd->add_option("--count", count)->required();
  recombine_cmd->add_option("--seed", seed)->required();
  recombine_cmd->add_option("--out", out_path)->required();

  std::string real_path, synth_path, train_path;
  std::optional<double> bandwidth;
  std::size_t subsample = 0;
  auto* eval_cmd = app.add_subcommand("eval", "EMD, MMD and 1NN accuracy between two samples (JSON line)");
  eval_cmd->add_option("--real", real_path)->required();
  eval_cmd->add_option("--synth", synth_path)->required();
  eval_cmd->add_option("--bandwidth", bandwidth, "MMD kernel width (default: median heuristic)")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--subsample", subsample, "Use only the first N rows of each file");

  std::size_t k = 1;
  auto* nn_cmd = app.add_subcommand("nn-audit", "Nearest training row of every synthetic row");
  nn_cmd->add_option("--synth", synth_path)->required();
  nn_cmd->add_option("--train", train_path)->required();
  nn_cmd->add_option("--k", k)->check(CLI::PositiveNumber);
  nn_cmd->add_option("--out", out_path, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*encode_cmd) return run_code(code_model, code_data, code_out, true);
    if (*decode_cmd) return run_code(code_model, code_data, code_out, false);
    if (*fit_cmd) return run_fit(fit);
    if (*sample_cmd) return run_sample(model_path, kind_check, count, seed, out_path);
    if (*targeted_cmd) return run_targeted(model_path, group, count, seed, out_path);
    if (*recombine_cmd) return run_recombine(model_path, margins_model, group_a, group_b, count, seed, out_path);
    if (*eval_cmd) return run_eval(real_path, synth_path, bandwidth, subsample);
    if (*nn_cmd) return run_nn_audit(synth_path, train_path, k, out_path);
  } catch (const lgm::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const lgm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
