#include "auctionrank/auction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "auctionrank/errors.hpp"

namespace auctionrank {

SlotConfig::SlotConfig(std::vector<double> multipliers) : multipliers_(std::move(multipliers)) {
  if (multipliers_.empty()) throw InputError("slot config needs at least one slot");
  if (multipliers_.front() != 1.0) throw InputError("first position multiplier must be 1");
  for (std::size_t k = 0; k < multipliers_.size(); ++k) {
    const double a = multipliers_[k];
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("position multipliers must lie in [0,1]");
    if (k > 0 && a > multipliers_[k - 1]) {
      throw InputError("position multipliers must be non-increasing");
    }
  }
}

void validate_ad(const AdRecord& ad) {
  if (!(ad.bid > 0.0) || !std::isfinite(ad.bid)) throw InputError("bid must be positive and finite");
  if (ad.true_ctr && !(*ad.true_ctr >= 0.0 && *ad.true_ctr <= 1.0)) {
    throw InputError("true ctr must lie in [0,1]");
  }
  if (ad.click && *ad.click != 0 && *ad.click != 1) throw InputError("click must be 0 or 1");
  for (double x : ad.features) {
    if (!std::isfinite(x)) throw InputError("features must be finite");
  }
}

std::vector<double> bids_of(const AuctionBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& ad : batch.ads) out.push_back(ad.bid);
  return out;
}

std::vector<double> true_ctrs_of(const AuctionBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& ad : batch.ads) {
    if (!ad.true_ctr) throw InputError("ad is missing its ground-truth ctr");
    out.push_back(*ad.true_ctr);
  }
  return out;
}

std::vector<double> clicks_of(const AuctionBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& ad : batch.ads) {
    if (!ad.click) throw InputError("ad is missing its click label");
    out.push_back(static_cast<double>(*ad.click));
  }
  return out;
}

std::vector<std::size_t> rank_by_predicted_ecpm(std::span<const double> bids,
                                                std::span<const double> pctrs) {
  if (bids.size() != pctrs.size()) throw InputError("bids and pctrs differ in length");
  std::vector<double> ecpm(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) ecpm[i] = bids[i] * pctrs[i];
  std::vector<std::size_t> order(bids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ecpm[a] > ecpm[b]; });
  return order;
}

std::vector<std::size_t> rank_by_predicted_ecpm(const AuctionBatch& batch,
                                                std::span<const double> pctrs) {
  return rank_by_predicted_ecpm(bids_of(batch), pctrs);
}

namespace {

double allocation_welfare(const AuctionBatch& batch, std::span<const std::size_t> order,
                          std::span<const double> ctrs, const SlotConfig& slots) {
  double total = 0.0;
  for (std::size_t k = 0; k < slots.slots(); ++k) {
    const std::size_t ad = order[k];
    total += slots[k] * batch[ad].bid * ctrs[ad];
  }
  return total;
}

void check_slots(const AuctionBatch& batch, const SlotConfig& slots) {
  if (batch.empty()) throw InputError("welfare of an empty auction");
  if (slots.slots() > batch.size()) throw InputError("more slots than ads");
}

}  // namespace

double welfare(const AuctionBatch& batch, std::span<const double> pctrs, const SlotConfig& slots) {
  check_slots(batch, slots);
  if (pctrs.size() != batch.size()) throw InputError("pctrs and batch differ in length");
  const auto truth = true_ctrs_of(batch);
  const auto order = rank_by_predicted_ecpm(batch, pctrs);
  return allocation_welfare(batch, order, truth, slots);
}

double optimal_welfare(const AuctionBatch& batch, const SlotConfig& slots) {
  check_slots(batch, slots);
  const auto truth = true_ctrs_of(batch);
  const auto order = rank_by_predicted_ecpm(batch, truth);
  return allocation_welfare(batch, order, truth, slots);
}

double welfare_suboptimality_pairwise(const AuctionBatch& batch, std::span<const double> pctrs) {
  if (batch.empty()) throw InputError("welfare of an empty auction");
  if (pctrs.size() != batch.size()) throw InputError("pctrs and batch differ in length");
  const auto truth = true_ctrs_of(batch);
  const std::size_t i_star = rank_by_predicted_ecpm(batch, truth).front();
  const std::size_t j_star = rank_by_predicted_ecpm(batch, pctrs).front();
  const std::size_t n = batch.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != i_star || j != j_star) continue;
      const bool ordered = batch[i].bid * pctrs[i] <= batch[j].bid * pctrs[j];
      if (ordered) total += batch[i].bid * truth[i] - batch[j].bid * truth[j];
    }
  }
  return total;
}

void write_jsonl(std::ostream& out, const AuctionBatch& batch) {
  for (const auto& ad : batch.ads) {
    nlohmann::json j;
    j["features"] = ad.features;
    j["bid"] = ad.bid;
    if (ad.true_ctr) j["ctr"] = *ad.true_ctr;
    if (ad.click) j["click"] = *ad.click;
    out << j.dump() << '\n';
  }
}

AuctionBatch read_jsonl(std::istream& in) {
  AuctionBatch batch;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AdRecord ad;
    try {
      const auto j = nlohmann::json::parse(line);
      ad.features = j.at("features").get<std::vector<double>>();
      ad.bid = j.at("bid").get<double>();
      if (j.contains("ctr") && !j["ctr"].is_null()) ad.true_ctr = j["ctr"].get<double>();
      if (j.contains("click") && !j["click"].is_null()) ad.click = j["click"].get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_ad(ad);
    batch.ads.push_back(std::move(ad));
  }
  return batch;
}

void save_jsonl(const std::string& path, const AuctionBatch& batch) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_jsonl(out, batch);
}

AuctionBatch load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_jsonl(in);
}

}  // namespace auctionrank
