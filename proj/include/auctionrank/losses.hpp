#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace auctionrank {

enum class LossKind {
  Logistic,
  WeightedLogisticBid,
  WeightedLogisticSqrtBid,
  IndicatorPairwise,
  LogSurrogate,
  HingeSurrogate,
  PluginIndicator,
  PluginLogSurrogate,
  PluginHingePlus,
  EllPlus,
};

enum class PairWeighting { None, LogisticWeights };

/// Per-ad weight of the pointwise logistic loss.
enum class BidWeighting { Unit, Bid, SqrtBid };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);
std::string_view to_string(PairWeighting w);
PairWeighting pair_weighting_from_string(std::string_view name);

/// Which training objective to use and its hyperparameters.
struct LossSpec {
  LossKind kind = LossKind::Logistic;
  double sigma = 1.0;
  /// Weight of the logistic regularizer added to pairwise losses.
  double lambda = 3.0;
  PairWeighting pair_weighting = PairWeighting::None;
  /// Constant multiplying the eCPMs inside the pair weights.
  double weight_scale = 3.0;
  bool uses_teacher = false;

  /// ConfigError on sigma <= 0, lambda < 0, weight_scale <= 0, or a loss that
  /// needs teacher predictions without uses_teacher.
  void validate() const;
  [[nodiscard]] bool differentiable() const;
  /// True when the loss cannot be evaluated without teacher CTRs.
  [[nodiscard]] bool needs_teacher() const;
};

void to_json(nlohmann::json& j, const LossSpec& spec);
void from_json(const nlohmann::json& j, LossSpec& spec);

struct LossValueGrad {
  double value = 0.0;
  /// d value / d f_k for each model output; absent for indicator-based losses.
  std::optional<std::vector<double>> grad_wrt_outputs;
};

/// Logistic pair weights W_ij = sigmoid(scale b_i p^_i) * sigmoid(scale b_j f_j).
struct PairWeights {
  std::span<const double> teacher_ctrs;
  double scale = 3.0;
};

double pair_weight(double ecpm_teacher_i, double ecpm_pred_j, double scale);

/// sum_i w_i * (-y_i log f_i - (1 - y_i) log(1 - f_i)), w_i in {1, b_i, sqrt(b_i)}.
LossValueGrad logistic_loss(std::span<const double> pctrs, std::span<const double> clicks,
                            BidWeighting weighting, std::span<const double> bids);

/// sum_ij (b_i y_i - b_j y_j) 1{b_i f_i <= b_j f_j}.
double indicator_pairwise_loss(std::span<const double> pctrs, std::span<const double> bids,
                               std::span<const double> clicks);

/// The indicator loss with clicks replaced by their expectations.
double conditional_risk(std::span<const double> pctrs, std::span<const double> bids,
                        std::span<const double> true_ctrs);

/// sum_ij W_ij (b_i l_i - b_j l_j) log(1 + exp(-sigma (b_i f_i - b_j f_j))).
/// labels are clicks or teacher CTRs.
LossValueGrad log_surrogate(std::span<const double> pctrs, std::span<const double> bids,
                            std::span<const double> labels, double sigma,
                            std::optional<PairWeights> weights = std::nullopt);

/// sum_ij W_ij (b_i l_i - b_j l_j) (-sigma (b_i f_i - b_j f_j))_+, subgradient 0 at the kink.
LossValueGrad hinge_surrogate(std::span<const double> pctrs, std::span<const double> bids,
                              std::span<const double> labels, double sigma,
                              std::optional<PairWeights> weights = std::nullopt);

/// Indicator loss with clicks replaced by teacher CTRs (same <= convention).
double plugin_indicator_loss(std::span<const double> pctrs, std::span<const double> bids,
                             std::span<const double> teacher_ctrs);

/// sum_ij W_ij (b_i p^_i - b_j p^_j)_+ (-sigma (b_i f_i - b_j f_j))_+. Always >= 0.
LossValueGrad plugin_hinge_plus(std::span<const double> pctrs, std::span<const double> bids,
                                std::span<const double> teacher_ctrs, double sigma,
                                PairWeighting weighting = PairWeighting::None,
                                double weight_scale = 3.0);

/// sum_ij W_ij (b_i p^_i - b_j p^_j) log(1 + exp(-sigma (b_i f_i - b_j f_j))).
LossValueGrad plugin_log_surrogate(std::span<const double> pctrs, std::span<const double> bids,
                                   std::span<const double> teacher_ctrs, double sigma,
                                   PairWeighting weighting = PairWeighting::None,
                                   double weight_scale = 3.0);

/// sum_ij (b_i p_i - b_j p_j)_+ 1{b_i f_i <= b_j f_j}. Always >= 0.
double ell_plus(std::span<const double> pctrs, std::span<const double> bids,
                std::span<const double> true_ctrs);

/// Pairwise part of the spec plus lambda times the unit logistic loss.
/// Pointwise kinds return the (weighted) logistic loss alone. Indicator kinds
/// return a value without gradient. EllPlus reads its reference CTRs from
/// teacher_ctrs.
LossValueGrad composite_loss(const LossSpec& spec, std::span<const double> pctrs,
                             std::span<const double> bids, std::span<const double> clicks,
                             std::optional<std::span<const double>> teacher_ctrs = std::nullopt);

}  // namespace auctionrank
