#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "auctionrank/losses.hpp"
#include "auctionrank/metrics.hpp"
#include "auctionrank/model.hpp"
#include "auctionrank/synthgen.hpp"

namespace auctionrank {

struct NamedLoss {
  std::string name;
  LossSpec spec;
};

/// LL, WLL*b, WLL*sqrt(b), l^log, plug-in l^log and plug-in l^{hinge,+}, all sigma = 1.
std::vector<NamedLoss> default_roster();
/// Looks a name up in the default roster plus the sigma = 3 variants; ConfigError if absent.
NamedLoss roster_loss(const std::string& name);

struct ExperimentConfig {
  GeneratorConfig generator;
  TrainConfig train;
  std::vector<NamedLoss> losses = default_roster();
  std::size_t repeats = 30;
  std::string teacher_loss_name = "logistic";
  std::string output_dir = "out";
  /// Debug mode: adds a model that predicts the ground-truth CTR.
  bool include_oracle = false;
  /// When non-empty, every pairwise loss is trained once per value, named
  /// <name>_lambda<value>.
  std::vector<double> lambda_grid;

  /// losses with lambda_grid applied.
  [[nodiscard]] std::vector<NamedLoss> resolved_losses() const;

  /// ConfigError on duplicate names, a missing teacher entry, or a teacher
  /// loss that itself needs a teacher.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);

inline constexpr const char* kOracleModelName = "oracle";

struct RepeatResult {
  std::size_t repeat = 0;
  std::vector<EvalReport> reports;
  /// models x auctions, in report order
  std::vector<std::vector<double>> per_auction_welfare;
  /// Optimal welfare of each eval auction.
  std::vector<double> optimal_welfare;
};

/// Generator and training seeds for one repeat.
GeneratorConfig repeat_generator(const ExperimentConfig& config, std::size_t repeat_index);
TrainConfig repeat_train(const ExperimentConfig& config, std::size_t repeat_index);

/// One full repeat: fresh world, training set and eval auctions; the teacher is
/// trained first and every teacher-consuming loss uses it. Errors carry the
/// repeat index.
RepeatResult run_repeat(const ExperimentConfig& config, std::size_t repeat_index);

struct ModelSummary {
  std::string model_name;
  double mean_welfare = 0.0;
  /// SE of the per-auction difference to the roster mean, auctions pooled over repeats.
  double se_of_difference = 0.0;
  /// Mean per-auction welfare minus the roster mean.
  double mean_difference_vs_roster = 0.0;
  /// Repeats in which this model's mean welfare beats the roster mean.
  std::size_t repeats_above_roster = 0;
  double mean_auc_loss = 0.0;
  double mean_logloss = 0.0;
};

void to_json(nlohmann::json& j, const ModelSummary& s);

struct ExperimentResult {
  std::vector<RepeatResult> repeats;
  std::vector<ModelSummary> models;
};

/// Summaries from repeat results sorted by repeat index.
std::vector<ModelSummary> summarize(const std::vector<RepeatResult>& repeats);

/// Runs every repeat on up to `jobs` threads. Results do not depend on jobs.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs = 1,
                                bool quiet = true);

/// welfare.csv, metrics.csv, auction_welfare.csv, paired.csv, plot_data.csv,
/// summary.json and config.json under dir.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const std::filesystem::path& dir);

/// Rebuilds summaries from an auction_welfare.csv written by write_experiment_outputs.
std::vector<ModelSummary> summarize_auction_welfare_csv(const std::filesystem::path& path);
/// model,mean_welfare,se
void write_plot_data(const std::filesystem::path& path, const std::vector<ModelSummary>& models);

/// Command-line entry point. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace auctionrank
