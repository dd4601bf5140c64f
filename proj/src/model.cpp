#include "auctionrank/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "auctionrank/errors.hpp"
#include "auctionrank/numeric.hpp"
#include "auctionrank/rng.hpp"

namespace auctionrank {

namespace {

constexpr int kModelFormatVersion = 1;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

// Keeps the output strictly inside (0,1) where sigmoid rounds to 0 or 1.
double squash(double z) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(sigmoid(z), lo, hi);
}

struct Activations {
  std::vector<double> pre;  // hidden pre-activations
  double logit = 0.0;
};

Activations run_forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim) throw InputError("feature length does not match input_dim");
  Activations act;
  act.pre.resize(model.hidden_dim);
  double z = model.b2;
  for (std::size_t h = 0; h < model.hidden_dim; ++h) {
    const double* row = model.w1.data() + h * model.input_dim;
    double s = model.b1[h];
    for (std::size_t d = 0; d < model.input_dim; ++d) s += row[d] * x[d];
    act.pre[h] = s;
    if (s > 0.0) z += model.w2[h] * s;
  }
  act.logit = z;
  return act;
}

void accumulate_backward(const MlpModel& model, std::span<const double> x, const Activations& act,
                         double upstream, MlpGradient& grad) {
  if (upstream == 0.0) return;
  // d sigmoid / dz of the unclamped sigmoid
  const double dz = upstream * sigmoid(act.logit) * sigmoid(-act.logit);
  grad.b2 += dz;
  for (std::size_t h = 0; h < model.hidden_dim; ++h) {
    const double pre = act.pre[h];
    if (pre <= 0.0) continue;  // relu'(0) = 0
    grad.w2[h] += dz * pre;
    const double dpre = dz * model.w2[h];
    grad.b1[h] += dpre;
    double* row = grad.w1.data() + h * model.input_dim;
    for (std::size_t d = 0; d < model.input_dim; ++d) row[d] += dpre * x[d];
  }
}

}  // namespace

MlpParams MlpParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  if (input_dim == 0 || hidden_dim == 0) throw InputError("model dimensions must be positive");
  MlpParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.w1.assign(input_dim * hidden_dim, 0.0);
  p.b1.assign(hidden_dim, 0.0);
  p.w2.assign(hidden_dim, 0.0);
  return p;
}

double& MlpParams::at(std::size_t k) {
  if (k < w1.size()) return w1[k];
  k -= w1.size();
  if (k < b1.size()) return b1[k];
  k -= b1.size();
  if (k < w2.size()) return w2[k];
  return b2;
}

double MlpParams::at(std::size_t k) const { return const_cast<MlpParams&>(*this).at(k); }

bool MlpParams::same_shape(const MlpParams& other) const {
  return input_dim == other.input_dim && hidden_dim == other.hidden_dim &&
         w1.size() == other.w1.size() && b1.size() == other.b1.size() &&
         w2.size() == other.w2.size();
}

AdamState AdamState::fresh(const MlpParams& shape) {
  AdamState s;
  s.m = MlpParams::zeros(shape.input_dim, shape.hidden_dim);
  s.v = s.m;
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0,1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be non-negative");
  if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                     {"beta2", c.beta2},                 {"adam_epsilon", c.adam_epsilon},
                     {"batch_size", c.batch_size},       {"max_epochs", c.max_epochs},
                     {"convergence_tol", c.convergence_tol}, {"hidden_dim", c.hidden_dim},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
  if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
  if (j.contains("adam_epsilon")) c.adam_epsilon = j["adam_epsilon"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<std::size_t>();
  if (j.contains("convergence_tol")) c.convergence_tol = j["convergence_tol"].get<double>();
  if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  c.validate();
}

MlpModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
  auto model = MlpParams::zeros(input_dim, hidden_dim);
  CounterRng rng = CounterRng(seed).split(kInitStream);
  const double bound1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  for (double& w : model.w1) w = rng.uniform(-bound1, bound1);
  const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
  for (double& w : model.w2) w = rng.uniform(-bound2, bound2);
  return model;
}

double forward(const MlpModel& model, std::span<const double> features) {
  return squash(run_forward(model, features).logit);
}

std::vector<double> forward_batch(const MlpModel& model, const AuctionBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& ad : batch.ads) out.push_back(forward(model, ad.features));
  return out;
}

MlpGradient backward(const MlpModel& model, const AuctionBatch& batch,
                     std::span<const double> grad_wrt_outputs) {
  if (grad_wrt_outputs.size() != batch.size()) {
    throw InputError("grad_wrt_outputs length does not match batch");
  }
  auto grad = MlpParams::zeros(model.input_dim, model.hidden_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& x = batch[i].features;
    accumulate_backward(model, x, run_forward(model, x), grad_wrt_outputs[i], grad);
  }
  return grad;
}

void adam_step(MlpModel& model, AdamState& state, const MlpGradient& grads,
               const TrainConfig& config) {
  if (!model.same_shape(grads) || !model.same_shape(state.m) || !model.same_shape(state.v)) {
    throw InputError("adam_step: shape mismatch");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const std::size_t count = model.parameter_count();
  for (std::size_t k = 0; k < count; ++k) {
    const double g = grads.at(k);
    double& m = state.m.at(k);
    double& v = state.v.at(k);
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    model.at(k) -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
  }
}

CtrProvider as_provider(MlpModel model) {
  return [model = std::move(model)](const AuctionBatch& batch) { return forward_batch(model, batch); };
}

CtrProvider ground_truth_provider() {
  return [](const AuctionBatch& batch) { return true_ctrs_of(batch); };
}

TrainResult train_detailed(const AuctionBatch& dataset, const LossSpec& loss,
                           const TrainConfig& config, const CtrProvider* teacher) {
  config.validate();
  loss.validate();
  if (!loss.differentiable()) {
    throw ConfigError(std::string(to_string(loss.kind)) + " is not differentiable; cannot train");
  }
  if (loss.needs_teacher() && (teacher == nullptr || !*teacher)) {
    throw ConfigError(std::string(to_string(loss.kind)) + " needs a teacher");
  }
  if (dataset.empty()) throw InputError("empty training set");

  const std::size_t input_dim = dataset[0].features.size();
  TrainResult result{init_model(input_dim, config.hidden_dim, config.seed), {}};
  if (config.max_epochs == 0) return result;

  MlpModel& model = result.model;
  const auto bids = bids_of(dataset);
  const auto clicks = clicks_of(dataset);
  std::vector<double> teacher_ctrs;
  if (loss.needs_teacher()) {
    teacher_ctrs = (*teacher)(dataset);
    if (teacher_ctrs.size() != dataset.size()) throw InputError("teacher returned wrong length");
  }

  AdamState state = AdamState::fresh(model);
  const CounterRng shuffle_root = CounterRng(config.seed).split(kShuffleStream);
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);

  std::vector<double> mb_pctrs, mb_bids, mb_clicks, mb_teacher;
  std::vector<Activations> mb_acts;
  auto grad = MlpParams::zeros(model.input_dim, model.hidden_dim);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng = shuffle_root.split(epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      mb_pctrs.clear();
      mb_bids.clear();
      mb_clicks.clear();
      mb_teacher.clear();
      mb_acts.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        mb_acts.push_back(run_forward(model, dataset[i].features));
        mb_pctrs.push_back(squash(mb_acts.back().logit));
        mb_bids.push_back(bids[i]);
        mb_clicks.push_back(clicks[i]);
        if (!teacher_ctrs.empty()) mb_teacher.push_back(teacher_ctrs[i]);
      }
      std::optional<std::span<const double>> t;
      if (!teacher_ctrs.empty()) t = std::span<const double>(mb_teacher);
      const auto lg = composite_loss(loss, mb_pctrs, mb_bids, mb_clicks, t);
      loss_sum += lg.value;
      ++batches;

      std::fill(grad.w1.begin(), grad.w1.end(), 0.0);
      std::fill(grad.b1.begin(), grad.b1.end(), 0.0);
      std::fill(grad.w2.begin(), grad.w2.end(), 0.0);
      grad.b2 = 0.0;
      const auto& g = *lg.grad_wrt_outputs;
      for (std::size_t k = start; k < stop; ++k) {
        accumulate_backward(model, dataset[order[k]].features, mb_acts[k - start], g[k - start],
                            grad);
      }
      adam_step(model, state, grad, config);
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    result.epoch_losses.push_back(epoch_loss);
    if (epoch > 0) {
      const double previous = result.epoch_losses[epoch - 1];
      if (previous - epoch_loss < config.convergence_tol) break;
    }
  }
  return result;
}

MlpModel train(const AuctionBatch& dataset, const LossSpec& loss, const TrainConfig& config,
               const CtrProvider* teacher) {
  return train_detailed(dataset, loss, config, teacher).model;
}

nlohmann::json model_to_json(const MlpModel& model) {
  return nlohmann::json{{"version", kModelFormatVersion}, {"input_dim", model.input_dim},
                        {"hidden_dim", model.hidden_dim}, {"w1", model.w1},
                        {"b1", model.b1},                 {"w2", model.w2},
                        {"b2", model.b2}};
}

MlpModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw InputError("unsupported model format version");
    }
    auto model = MlpParams::zeros(j.at("input_dim").get<std::size_t>(),
                                  j.at("hidden_dim").get<std::size_t>());
    model.w1 = j.at("w1").get<std::vector<double>>();
    model.b1 = j.at("b1").get<std::vector<double>>();
    model.w2 = j.at("w2").get<std::vector<double>>();
    model.b2 = j.at("b2").get<double>();
    if (model.w1.size() != model.input_dim * model.hidden_dim ||
        model.b1.size() != model.hidden_dim || model.w2.size() != model.hidden_dim) {
      throw InputError("model parameter arrays do not match dimensions");
    }
    for (std::size_t k = 0; k < model.parameter_count(); ++k) {
      if (!std::isfinite(model.at(k))) throw InputError("non-finite model parameter");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model json: ") + e.what());
  }
}

void save_model(const std::string& path, const MlpModel& model) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << model_to_json(model).dump(2) << '\n';
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace auctionrank
