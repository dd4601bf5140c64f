#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "auctionrank/auction.hpp"
#include "auctionrank/model.hpp"

namespace auctionrank {

struct EvalReport {
  std::string model_name;
  double mean_welfare = 0.0;
  double welfare_se_of_difference = 0.0;
  double auc_loss = 0.0;
  double logloss = 0.0;
  std::size_t n_auctions = 0;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);
/// One row per (model, metric): model,metric,value.
void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports);

/// 1 - AUC, with tied scores counted one half. InputError unless both classes
/// are present.
double auc_loss(std::span<const double> scores, std::span<const double> labels);

struct NamedProvider {
  std::string name;
  CtrProvider provider;
};

struct WelfareEvaluation {
  std::vector<EvalReport> reports;
  /// models x auctions
  std::vector<std::vector<double>> per_auction_welfare;
};

/// Every model picks winners by predicted eCPM in every auction; welfare is
/// the alpha-weighted true eCPM (use_true_ctr) or realized eCPM b_i y_i of
/// the winners. AUC loss and mean logloss are pooled over all auction ads
/// when clicks are available.
WelfareEvaluation eval_welfare(std::span<const NamedProvider> models,
                               std::span<const AuctionBatch> auctions, const SlotConfig& slots,
                               bool use_true_ctr);

/// For each model m: sample SD over auctions of w[m][a] - mean_m' w[m'][a],
/// divided by sqrt(#auctions).
std::vector<double> se_of_difference(const std::vector<std::vector<double>>& per_auction_welfare);

}  // namespace auctionrank
