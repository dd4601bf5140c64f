#include <sstream>

#include <gtest/gtest.h>

#include "auctionrank/errors.hpp"
#include "auctionrank/metrics.hpp"
#include "auctionrank/rng.hpp"
#include "oracles.hpp"

using namespace auctionrank;

namespace {

AuctionBatch random_auction(CounterRng& rng, std::size_t n) {
  AuctionBatch batch;
  for (std::size_t i = 0; i < n; ++i) {
    AdRecord ad;
    ad.features = {rng.normal()};
    ad.bid = rng.uniform(0.1, 5.0);
    ad.true_ctr = rng.uniform();
    ad.click = rng.bernoulli(*ad.true_ctr) ? 1 : 0;
    batch.ads.push_back(ad);
  }
  return batch;
}

CtrProvider constant_provider(double c) {
  return [c](const AuctionBatch& b) { return std::vector<double>(b.size(), c); };
}

}  // namespace

TEST(AucLoss, HandValues) {
  std::vector<double> labels{0.0, 0.0, 1.0, 1.0};
  std::vector<double> sep{0.1, 0.2, 0.8, 0.9}, inv{0.9, 0.8, 0.2, 0.1};
  EXPECT_EQ(auc_loss(sep, labels), 0.0);
  EXPECT_EQ(auc_loss(inv, labels), 1.0);
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  EXPECT_EQ(auc_loss(s, labels), 0.25);
  std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(auc_loss(flat, labels), 0.5);
}

TEST(AucLoss, SingleClassIsError) {
  std::vector<double> s{0.1, 0.2}, ones{1.0, 1.0}, zeros{0.0, 0.0};
  EXPECT_THROW(auc_loss(s, ones), InputError);
  EXPECT_THROW(auc_loss(s, zeros), InputError);
}

TEST(AucLoss, MatchesPairCountingWithTies) {
  CounterRng rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(1000);
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(20)) / 20.0;  // many ties
      y[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    y[0] = 1.0;
    y[1] = 0.0;
    EXPECT_NEAR(auc_loss(s, y), oracle::auc_loss_pairs(s, y), 1e-12);
  }
}

TEST(AucLoss, InvariantUnderIncreasingTransform) {
  CounterRng rng(2);
  std::vector<double> s(300), y(300), t(300);
  for (std::size_t i = 0; i < 300; ++i) {
    s[i] = rng.uniform(-3.0, 3.0);
    y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    t[i] = std::exp(2.0 * s[i]) + 7.0;
  }
  EXPECT_EQ(auc_loss(s, y), auc_loss(t, y));
}

TEST(SeOfDifference, HandValues) {
  EXPECT_EQ(se_of_difference({{1.0, 1.0}, {0.0, 0.0}}), (std::vector<double>{0.0, 0.0}));
  const auto se = se_of_difference({{1.0, 0.0}, {0.0, 1.0}});
  EXPECT_NEAR(se[0], 0.5, 1e-15);
  EXPECT_NEAR(se[1], 0.5, 1e-15);
  const std::vector<double> row{0.3, 1.7, 2.2, 0.9};
  EXPECT_EQ(se_of_difference({row, row, row}), (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(SeOfDifference, DegenerateSizes) {
  EXPECT_THROW(se_of_difference({{1.0, 2.0}}), InputError);
  EXPECT_THROW(se_of_difference({{1.0}, {2.0}}), InputError);
  EXPECT_THROW(se_of_difference({{1.0, 2.0}, {2.0}}), InputError);
}

TEST(EvalWelfare, ExampleOneTwoSlots) {
  AuctionBatch ex;
  for (auto [b, p] : {std::pair{10.0, 0.1}, {2.0, 0.4}, {0.5, 0.9}}) {
    AdRecord ad;
    ad.bid = b;
    ad.true_ctr = p;
    ex.ads.push_back(ad);
  }
  std::vector<NamedProvider> models{{"truth", ground_truth_provider()}};
  std::vector<AuctionBatch> auctions{ex};
  const auto out = eval_welfare(models, auctions, SlotConfig({1.0, 0.9}), true);
  EXPECT_NEAR(out.reports[0].mean_welfare, 1.72, 1e-15);
  EXPECT_EQ(out.reports[0].n_auctions, 1u);
}

TEST(EvalWelfare, OracleEqualsOptimal) {
  CounterRng rng(3);
  std::vector<AuctionBatch> auctions;
  for (int a = 0; a < 10; ++a) auctions.push_back(random_auction(rng, 2 + rng.below(8)));
  std::vector<NamedProvider> models{{"truth", ground_truth_provider()},
                                    {"flat", constant_provider(0.5)}};
  const auto out = eval_welfare(models, auctions, SlotConfig{}, true);
  double mean_opt = 0.0;
  for (std::size_t a = 0; a < auctions.size(); ++a) {
    const double opt = optimal_welfare(auctions[a], SlotConfig{});
    EXPECT_EQ(out.per_auction_welfare[0][a], opt);
    EXPECT_LE(out.per_auction_welfare[1][a], opt);
    mean_opt += opt;
  }
  EXPECT_NEAR(out.reports[0].mean_welfare, mean_opt / 10.0, 1e-15);
  EXPECT_GT(out.reports[0].welfare_se_of_difference, 0.0);
  EXPECT_GE(out.reports[1].auc_loss, 0.0);
  EXPECT_LE(out.reports[1].auc_loss, 1.0);
  EXPECT_EQ(out.reports[1].auc_loss, 0.5);
  EXPECT_NEAR(out.reports[1].logloss, std::log(2.0), 1e-12);
}

TEST(EvalWelfare, SingleAdSameForAll) {
  CounterRng rng(4);
  std::vector<AuctionBatch> auctions{random_auction(rng, 1)};
  std::vector<NamedProvider> models{{"a", constant_provider(0.1)}, {"b", constant_provider(0.9)}};
  const auto out = eval_welfare(models, auctions, SlotConfig{}, true);
  EXPECT_EQ(out.reports[0].mean_welfare, out.reports[1].mean_welfare);
}

TEST(EvalWelfare, RealizedUsesClicks) {
  AuctionBatch batch;
  for (auto [b, y] : {std::pair{3.0, 0}, {1.0, 1}}) {
    AdRecord ad;
    ad.bid = b;
    ad.click = y;
    batch.ads.push_back(ad);
  }
  std::vector<AuctionBatch> auctions{batch};
  std::vector<NamedProvider> models{{"flat", constant_provider(0.5)}};
  const auto out = eval_welfare(models, auctions, SlotConfig{}, false);
  EXPECT_EQ(out.reports[0].mean_welfare, 0.0);
  EXPECT_THROW(eval_welfare(models, auctions, SlotConfig{}, true), InputError);
}

TEST(ReportsIo, CsvAndJson) {
  EvalReport r;
  r.model_name = "logistic";
  r.mean_welfare = 0.1;
  r.n_auctions = 3;
  std::stringstream ss;
  std::vector<EvalReport> reports{r};
  write_reports_csv(ss, reports);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "model,metric,value");
  EXPECT_NE(text.find("logistic,mean_welfare,0.10000000000000001"), std::string::npos);
  const nlohmann::json j = r;
  EXPECT_EQ(j.get<EvalReport>().mean_welfare, 0.1);
  EXPECT_EQ(j.get<EvalReport>().model_name, "logistic");
}
