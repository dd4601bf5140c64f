#include "auctionrank/losses.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "auctionrank/errors.hpp"
#include "auctionrank/numeric.hpp"

namespace auctionrank {

namespace {

constexpr std::array<std::pair<LossKind, std::string_view>, 10> kKindNames{{
    {LossKind::Logistic, "Logistic"},
    {LossKind::WeightedLogisticBid, "WeightedLogisticBid"},
    {LossKind::WeightedLogisticSqrtBid, "WeightedLogisticSqrtBid"},
    {LossKind::IndicatorPairwise, "IndicatorPairwise"},
    {LossKind::LogSurrogate, "LogSurrogate"},
    {LossKind::HingeSurrogate, "HingeSurrogate"},
    {LossKind::PluginIndicator, "PluginIndicator"},
    {LossKind::PluginLogSurrogate, "PluginLogSurrogate"},
    {LossKind::PluginHingePlus, "PluginHingePlus"},
    {LossKind::EllPlus, "EllPlus"},
}};

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InputError(std::string("length mismatch: ") + what);
}

enum class Surrogate { Log, Hinge };

// Shared O(n^2) kernel for every differentiable pairwise loss:
//   sum_ij W_ij * c_ij * phi(b_i f_i - b_j f_j)
// with c_ij = b_i l_i - b_j l_j (or its positive part) and phi the log or
// hinge surrogate of the indicator. Each unordered pair is visited once and
// both orientations are accumulated from one exp/log1p evaluation.
LossValueGrad pairwise_kernel(std::span<const double> pctrs, std::span<const double> bids,
                              std::span<const double> labels, double sigma, Surrogate surrogate,
                              bool positive_gap_only, std::optional<PairWeights> weights) {
  const std::size_t n = pctrs.size();
  require_same_length(n, bids.size(), "pctrs/bids");
  require_same_length(n, labels.size(), "pctrs/labels");
  if (!(sigma > 0.0)) throw InputError("sigma must be positive");
  if (weights) {
    require_same_length(n, weights->teacher_ctrs.size(), "pctrs/weight teacher");
    if (!(weights->scale > 0.0)) throw InputError("weight scale must be positive");
  }

  std::vector<double> ecpm(n), gain(n);
  std::vector<double> w_teacher(n, 1.0), w_pred(n, 1.0), dw_pred(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ecpm[i] = bids[i] * pctrs[i];
    gain[i] = bids[i] * labels[i];
    if (weights) {
      const double s = weights->scale;
      w_teacher[i] = sigmoid(s * bids[i] * weights->teacher_ctrs[i]);
      w_pred[i] = sigmoid(s * ecpm[i]);
      dw_pred[i] = s * bids[i] * w_pred[i] * (1.0 - w_pred[i]);
    }
  }

  LossValueGrad out;
  std::vector<double> grad(n, 0.0);
  double value = 0.0;

  // Adds W_ij * c * phi for the ordered pair (i, j); phi_prime is d phi / d m_ij.
  auto accumulate = [&](std::size_t i, std::size_t j, double c, double phi, double phi_prime) {
    if (c == 0.0) return;
    const double w = w_teacher[i] * w_pred[j];
    value += w * c * phi;
    const double g = w * c * phi_prime;
    grad[i] += g * bids[i];
    grad[j] -= g * bids[j];
    if (weights) grad[j] += w_teacher[i] * dw_pred[j] * c * phi;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = sigma * (ecpm[i] - ecpm[j]);  // sigma * m_ij; m_ji = -m
      double c_ij = gain[i] - gain[j];
      double c_ji = -c_ij;
      if (positive_gap_only) {
        c_ij = positive_part(c_ij);
        c_ji = positive_part(c_ji);
      }
      if (c_ij == 0.0 && c_ji == 0.0) continue;
      if (surrogate == Surrogate::Log) {
        const double t = std::exp(-std::abs(m));
        const double tail = std::log1p(t);
        // sigmoid(-m) and sigmoid(m) from the same t
        const double sig_neg = m >= 0.0 ? t / (1.0 + t) : 1.0 / (1.0 + t);
        const double sig_pos = m >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
        accumulate(i, j, c_ij, std::max(-m, 0.0) + tail, -sigma * sig_neg);
        accumulate(j, i, c_ji, std::max(m, 0.0) + tail, -sigma * sig_pos);
      } else {
        accumulate(i, j, c_ij, positive_part(-m), m < 0.0 ? -sigma : 0.0);
        accumulate(j, i, c_ji, positive_part(m), m > 0.0 ? -sigma : 0.0);
      }
    }
  }
  out.value = value;
  out.grad_wrt_outputs = std::move(grad);
  return out;
}

double indicator_kernel(std::span<const double> pctrs, std::span<const double> bids,
                        std::span<const double> labels, bool positive_gap_only) {
  const std::size_t n = pctrs.size();
  require_same_length(n, bids.size(), "pctrs/bids");
  require_same_length(n, labels.size(), "pctrs/labels");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(bids[i] * pctrs[i] <= bids[j] * pctrs[j])) continue;
      const double gap = bids[i] * labels[i] - bids[j] * labels[j];
      total += positive_gap_only ? positive_part(gap) : gap;
    }
  }
  return total;
}

std::optional<PairWeights> weights_for(PairWeighting weighting, std::span<const double> teacher,
                                       double scale) {
  if (weighting == PairWeighting::None) return std::nullopt;
  return PairWeights{teacher, scale};
}

}  // namespace

std::string_view to_string(LossKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

LossKind loss_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown loss kind: " + std::string(name));
}

std::string_view to_string(PairWeighting w) {
  return w == PairWeighting::None ? "None" : "LogisticWeights";
}

PairWeighting pair_weighting_from_string(std::string_view name) {
  if (name == "None") return PairWeighting::None;
  if (name == "LogisticWeights") return PairWeighting::LogisticWeights;
  throw ConfigError("unknown pair weighting: " + std::string(name));
}

bool LossSpec::differentiable() const {
  switch (kind) {
    case LossKind::IndicatorPairwise:
    case LossKind::PluginIndicator:
    case LossKind::EllPlus:
      return false;
    default:
      return true;
  }
}

bool LossSpec::needs_teacher() const {
  switch (kind) {
    case LossKind::PluginIndicator:
    case LossKind::PluginLogSurrogate:
    case LossKind::PluginHingePlus:
    case LossKind::EllPlus:
      return true;
    case LossKind::Logistic:
    case LossKind::WeightedLogisticBid:
    case LossKind::WeightedLogisticSqrtBid:
      return false;
    default:
      // Logistic pair weights read the teacher eCPM of the first ad.
      return pair_weighting == PairWeighting::LogisticWeights;
  }
}

void LossSpec::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(weight_scale > 0.0)) throw ConfigError("weight_scale must be positive");
  if (needs_teacher() && !uses_teacher) {
    throw ConfigError(std::string(to_string(kind)) + " requires uses_teacher = true");
  }
}

void to_json(nlohmann::json& j, const LossSpec& spec) {
  j = nlohmann::json{{"kind", std::string(to_string(spec.kind))},
                     {"sigma", spec.sigma},
                     {"lambda", spec.lambda},
                     {"pair_weighting", std::string(to_string(spec.pair_weighting))},
                     {"weight_scale", spec.weight_scale},
                     {"uses_teacher", spec.uses_teacher}};
}

void from_json(const nlohmann::json& j, LossSpec& spec) {
  spec = LossSpec{};
  spec.kind = loss_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("sigma")) spec.sigma = j["sigma"].get<double>();
  if (j.contains("lambda")) spec.lambda = j["lambda"].get<double>();
  if (j.contains("pair_weighting")) {
    spec.pair_weighting = pair_weighting_from_string(j["pair_weighting"].get<std::string>());
  }
  if (j.contains("weight_scale")) spec.weight_scale = j["weight_scale"].get<double>();
  if (j.contains("uses_teacher")) spec.uses_teacher = j["uses_teacher"].get<bool>();
  else spec.uses_teacher = spec.needs_teacher();
  spec.validate();
}

double pair_weight(double ecpm_teacher_i, double ecpm_pred_j, double scale) {
  return sigmoid(scale * ecpm_teacher_i) * sigmoid(scale * ecpm_pred_j);
}

LossValueGrad logistic_loss(std::span<const double> pctrs, std::span<const double> clicks,
                            BidWeighting weighting, std::span<const double> bids) {
  const std::size_t n = pctrs.size();
  require_same_length(n, clicks.size(), "pctrs/clicks");
  if (weighting != BidWeighting::Unit) require_same_length(n, bids.size(), "pctrs/bids");
  LossValueGrad out;
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = pctrs[i];
    const double y = clicks[i];
    if (!(f > 0.0 && f < 1.0)) throw InputError("pctr outside (0,1)");
    double w = 1.0;
    if (weighting != BidWeighting::Unit) {
      if (!(bids[i] > 0.0)) throw InputError("bid weights need positive bids");
      w = weighting == BidWeighting::Bid ? bids[i] : std::sqrt(bids[i]);
    }
    out.value += w * (-y * std::log(f) - (1.0 - y) * std::log1p(-f));
    grad[i] = w * (-y / f + (1.0 - y) / (1.0 - f));
  }
  out.grad_wrt_outputs = std::move(grad);
  return out;
}

double indicator_pairwise_loss(std::span<const double> pctrs, std::span<const double> bids,
                               std::span<const double> clicks) {
  return indicator_kernel(pctrs, bids, clicks, false);
}

double conditional_risk(std::span<const double> pctrs, std::span<const double> bids,
                        std::span<const double> true_ctrs) {
  return indicator_kernel(pctrs, bids, true_ctrs, false);
}

double plugin_indicator_loss(std::span<const double> pctrs, std::span<const double> bids,
                             std::span<const double> teacher_ctrs) {
  return indicator_kernel(pctrs, bids, teacher_ctrs, false);
}

double ell_plus(std::span<const double> pctrs, std::span<const double> bids,
                std::span<const double> true_ctrs) {
  return indicator_kernel(pctrs, bids, true_ctrs, true);
}

LossValueGrad log_surrogate(std::span<const double> pctrs, std::span<const double> bids,
                            std::span<const double> labels, double sigma,
                            std::optional<PairWeights> weights) {
  return pairwise_kernel(pctrs, bids, labels, sigma, Surrogate::Log, false, weights);
}

LossValueGrad hinge_surrogate(std::span<const double> pctrs, std::span<const double> bids,
                              std::span<const double> labels, double sigma,
                              std::optional<PairWeights> weights) {
  return pairwise_kernel(pctrs, bids, labels, sigma, Surrogate::Hinge, false, weights);
}

LossValueGrad plugin_hinge_plus(std::span<const double> pctrs, std::span<const double> bids,
                                std::span<const double> teacher_ctrs, double sigma,
                                PairWeighting weighting, double weight_scale) {
  return pairwise_kernel(pctrs, bids, teacher_ctrs, sigma, Surrogate::Hinge, true,
                         weights_for(weighting, teacher_ctrs, weight_scale));
}

LossValueGrad plugin_log_surrogate(std::span<const double> pctrs, std::span<const double> bids,
                                   std::span<const double> teacher_ctrs, double sigma,
                                   PairWeighting weighting, double weight_scale) {
  return pairwise_kernel(pctrs, bids, teacher_ctrs, sigma, Surrogate::Log, false,
                         weights_for(weighting, teacher_ctrs, weight_scale));
}

LossValueGrad composite_loss(const LossSpec& spec, std::span<const double> pctrs,
                             std::span<const double> bids, std::span<const double> clicks,
                             std::optional<std::span<const double>> teacher_ctrs) {
  spec.validate();
  if (spec.needs_teacher() && !teacher_ctrs) {
    throw ConfigError(std::string(to_string(spec.kind)) + " needs teacher ctrs");
  }
  const auto teacher = teacher_ctrs.value_or(std::span<const double>{});

  switch (spec.kind) {
    case LossKind::Logistic:
      return logistic_loss(pctrs, clicks, BidWeighting::Unit, bids);
    case LossKind::WeightedLogisticBid:
      return logistic_loss(pctrs, clicks, BidWeighting::Bid, bids);
    case LossKind::WeightedLogisticSqrtBid:
      return logistic_loss(pctrs, clicks, BidWeighting::SqrtBid, bids);
    default:
      break;
  }

  LossValueGrad pair;
  const auto weights = weights_for(spec.pair_weighting, teacher, spec.weight_scale);
  switch (spec.kind) {
    case LossKind::IndicatorPairwise:
      pair.value = indicator_pairwise_loss(pctrs, bids, clicks);
      break;
    case LossKind::PluginIndicator:
      pair.value = plugin_indicator_loss(pctrs, bids, teacher);
      break;
    case LossKind::EllPlus:
      pair.value = ell_plus(pctrs, bids, teacher);
      break;
    case LossKind::LogSurrogate:
      pair = log_surrogate(pctrs, bids, clicks, spec.sigma, weights);
      break;
    case LossKind::HingeSurrogate:
      pair = hinge_surrogate(pctrs, bids, clicks, spec.sigma, weights);
      break;
    case LossKind::PluginLogSurrogate:
      pair = log_surrogate(pctrs, bids, teacher, spec.sigma, weights);
      break;
    case LossKind::PluginHingePlus:
      pair = plugin_hinge_plus(pctrs, bids, teacher, spec.sigma, spec.pair_weighting,
                               spec.weight_scale);
      break;
    default:
      break;
  }

  if (spec.lambda == 0.0) return pair;
  const auto reg = logistic_loss(pctrs, clicks, BidWeighting::Unit, bids);
  LossValueGrad out;
  out.value = pair.value + spec.lambda * reg.value;
  if (pair.grad_wrt_outputs) {
    auto grad = std::move(*pair.grad_wrt_outputs);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += spec.lambda * (*reg.grad_wrt_outputs)[i];
    out.grad_wrt_outputs = std::move(grad);
  }
  return out;
}

}  // namespace auctionrank
