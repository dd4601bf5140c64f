#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "auctionrank/auction.hpp"
#include "auctionrank/losses.hpp"

namespace auctionrank {

/// Parameters of the two-layer perceptron
///   f(x) = sigmoid(w2 . relu(W1 x + b1) + b2).
/// The same layout stores gradients and Adam moments.
struct MlpParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // hidden_dim
  double b2 = 0.0;

  static MlpParams zeros(std::size_t input_dim, std::size_t hidden_dim);

  [[nodiscard]] std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }
  /// Flat view order: w1, b1, w2, b2.
  double& at(std::size_t k);
  [[nodiscard]] double at(std::size_t k) const;
  [[nodiscard]] bool same_shape(const MlpParams& other) const;

  bool operator==(const MlpParams&) const = default;
};

using MlpModel = MlpParams;
using MlpGradient = MlpParams;

struct AdamState {
  MlpParams m;
  MlpParams v;
  std::uint64_t step_count = 0;

  static AdamState fresh(const MlpParams& shape);
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  double convergence_tol = 1e-5;
  std::size_t hidden_dim = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Glorot-uniform weights, zero biases, drawn from a stream keyed by seed.
MlpModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

double forward(const MlpModel& model, std::span<const double> features);
std::vector<double> forward_batch(const MlpModel& model, const AuctionBatch& batch);

/// sum_i grad_wrt_outputs[i] * d f(x_i) / d theta.
MlpGradient backward(const MlpModel& model, const AuctionBatch& batch,
                     std::span<const double> grad_wrt_outputs);

/// One bias-corrected Adam update, in place.
void adam_step(MlpModel& model, AdamState& state, const MlpGradient& grads,
               const TrainConfig& config);

/// Maps a batch of ads to CTR predictions (a trained model, a teacher, or an
/// oracle that reads the ground truth).
using CtrProvider = std::function<std::vector<double>(const AuctionBatch&)>;

CtrProvider as_provider(MlpModel model);
/// Returns each ad's true_ctr.
CtrProvider ground_truth_provider();

struct TrainResult {
  MlpModel model;
  std::vector<double> epoch_losses;
};

/// Minibatch Adam on the composite loss; each minibatch is one auction for the
/// pairwise terms. Stops after max_epochs, or once an epoch's mean loss
/// improves on the previous epoch's by less than convergence_tol.
TrainResult train_detailed(const AuctionBatch& dataset, const LossSpec& loss,
                           const TrainConfig& config, const CtrProvider* teacher = nullptr);
MlpModel train(const AuctionBatch& dataset, const LossSpec& loss, const TrainConfig& config,
               const CtrProvider* teacher = nullptr);

// Versioned JSON: {version, input_dim, hidden_dim, w1 (row-major), b1, w2, b2}.
nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace auctionrank
