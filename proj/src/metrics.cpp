#include "auctionrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "auctionrank/errors.hpp"
#include "auctionrank/losses.hpp"
#include "auctionrank/numeric.hpp"

namespace auctionrank {

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"model_name", r.model_name},
                     {"mean_welfare", r.mean_welfare},
                     {"welfare_se_of_difference", r.welfare_se_of_difference},
                     {"auc_loss", r.auc_loss},
                     {"logloss", r.logloss},
                     {"n_auctions", r.n_auctions}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  r.model_name = j.at("model_name").get<std::string>();
  r.mean_welfare = j.at("mean_welfare").get<double>();
  r.welfare_se_of_difference = j.at("welfare_se_of_difference").get<double>();
  r.auc_loss = j.at("auc_loss").get<double>();
  r.logloss = j.at("logloss").get<double>();
  r.n_auctions = j.at("n_auctions").get<std::size_t>();
}

void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "model,metric,value\n";
  for (const auto& r : reports) {
    out << r.model_name << ",mean_welfare," << format_double(r.mean_welfare) << '\n';
    out << r.model_name << ",welfare_se_of_difference," << format_double(r.welfare_se_of_difference)
        << '\n';
    out << r.model_name << ",auc_loss," << format_double(r.auc_loss) << '\n';
    out << r.model_name << ",logloss," << format_double(r.logloss) << '\n';
    out << r.model_name << ",n_auctions," << r.n_auctions << '\n';
  }
}

double auc_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney: sum of midranks of positives.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start + 1;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    const double midrank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[order[k]] > 0.5) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    start = stop;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw InputError("auc undefined for single-class labels");
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  const double auc = u / (np * static_cast<double>(negatives));
  return 1.0 - auc;
}

WelfareEvaluation eval_welfare(std::span<const NamedProvider> models,
                               std::span<const AuctionBatch> auctions, const SlotConfig& slots,
                               bool use_true_ctr) {
  WelfareEvaluation out;
  out.per_auction_welfare.assign(models.size(), std::vector<double>(auctions.size(), 0.0));

  bool have_clicks = true;
  std::vector<double> pooled_clicks;
  for (const auto& auction : auctions) {
    if (auction.empty()) throw InputError("eval_welfare: empty auction");
    if (slots.slots() > auction.size()) throw InputError("eval_welfare: more slots than ads");
    for (const auto& ad : auction.ads) {
      if (use_true_ctr && !ad.true_ctr) throw InputError("eval_welfare: missing true ctr");
      if (!ad.click) have_clicks = false;
    }
  }
  if (!use_true_ctr && !have_clicks) throw InputError("eval_welfare: missing click labels");
  if (have_clicks) {
    for (const auto& auction : auctions) {
      const auto c = clicks_of(auction);
      pooled_clicks.insert(pooled_clicks.end(), c.begin(), c.end());
    }
  }

  for (std::size_t m = 0; m < models.size(); ++m) {
    std::vector<double> pooled_scores;
    double total = 0.0;
    for (std::size_t a = 0; a < auctions.size(); ++a) {
      const auto& auction = auctions[a];
      const auto pctrs = models[m].provider(auction);
      if (pctrs.size() != auction.size()) throw InputError("provider returned wrong length");
      const auto order = rank_by_predicted_ecpm(auction, pctrs);
      double w = 0.0;
      for (std::size_t k = 0; k < slots.slots(); ++k) {
        const auto& ad = auction[order[k]];
        const double value = use_true_ctr ? *ad.true_ctr : static_cast<double>(*ad.click);
        w += slots[k] * ad.bid * value;
      }
      out.per_auction_welfare[m][a] = w;
      total += w;
      if (have_clicks) pooled_scores.insert(pooled_scores.end(), pctrs.begin(), pctrs.end());
    }

    EvalReport report;
    report.model_name = models[m].name;
    report.n_auctions = auctions.size();
    report.mean_welfare = auctions.empty() ? 0.0 : total / static_cast<double>(auctions.size());
    if (have_clicks && !pooled_scores.empty()) {
      const bool both_classes =
          std::any_of(pooled_clicks.begin(), pooled_clicks.end(), [](double y) { return y > 0.5; }) &&
          std::any_of(pooled_clicks.begin(), pooled_clicks.end(), [](double y) { return y < 0.5; });
      report.auc_loss = both_classes ? auc_loss(pooled_scores, pooled_clicks) : 0.0;
      // Predictions from an oracle may sit exactly on 0 or 1.
      for (double& s : pooled_scores) s = std::clamp(s, 1e-15, 1.0 - 1e-15);
      report.logloss = logistic_loss(pooled_scores, pooled_clicks, BidWeighting::Unit, {}).value /
                       static_cast<double>(pooled_scores.size());
    }
    out.reports.push_back(std::move(report));
  }

  if (models.size() >= 2 && auctions.size() >= 2) {
    const auto se = se_of_difference(out.per_auction_welfare);
    for (std::size_t m = 0; m < models.size(); ++m) out.reports[m].welfare_se_of_difference = se[m];
  }
  return out;
}

std::vector<double> se_of_difference(const std::vector<std::vector<double>>& per_auction_welfare) {
  const std::size_t models = per_auction_welfare.size();
  if (models < 2) throw InputError("se_of_difference needs at least two models");
  const std::size_t auctions = per_auction_welfare.front().size();
  if (auctions < 2) throw InputError("se_of_difference needs at least two auctions");
  for (const auto& row : per_auction_welfare) {
    if (row.size() != auctions) throw InputError("ragged welfare matrix");
  }

  // d[m][a] = w[m][a] - mean_m' w[m'][a], accumulated as differences so that
  // identical rows give exactly zero.
  const double k = static_cast<double>(models);
  const double count = static_cast<double>(auctions);
  std::vector<double> se(models);
  std::vector<double> d(auctions);
  for (std::size_t m = 0; m < models; ++m) {
    double mean = 0.0;
    for (std::size_t a = 0; a < auctions; ++a) {
      double diff = 0.0;
      for (std::size_t other = 0; other < models; ++other) {
        diff += per_auction_welfare[m][a] - per_auction_welfare[other][a];
      }
      d[a] = diff / k;
      mean += d[a];
    }
    mean /= count;
    double ss = 0.0;
    for (std::size_t a = 0; a < auctions; ++a) ss += (d[a] - mean) * (d[a] - mean);
    se[m] = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  }
  return se;
}

}  // namespace auctionrank
