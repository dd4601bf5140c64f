#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace auctionrank {

/// One ad: features x_i, CPC bid b_i, optional ground-truth CTR p_i and
/// optional realized click y_i.
struct AdRecord {
  std::vector<double> features;
  double bid = 1.0;
  std::optional<double> true_ctr;
  std::optional<int> click;
};

/// An ordered collection of ads forming one auction or one minibatch.
struct AuctionBatch {
  std::vector<AdRecord> ads;

  [[nodiscard]] std::size_t size() const { return ads.size(); }
  [[nodiscard]] bool empty() const { return ads.empty(); }
  const AdRecord& operator[](std::size_t i) const { return ads[i]; }
  AdRecord& operator[](std::size_t i) { return ads[i]; }
};

/// Position multipliers alpha_1..alpha_K: alpha_1 = 1, non-increasing, in [0,1].
class SlotConfig {
 public:
  /// Single slot.
  SlotConfig() : multipliers_{1.0} {}
  explicit SlotConfig(std::vector<double> multipliers);

  [[nodiscard]] std::size_t slots() const { return multipliers_.size(); }
  [[nodiscard]] std::span<const double> multipliers() const { return multipliers_; }
  double operator[](std::size_t k) const { return multipliers_[k]; }

 private:
  std::vector<double> multipliers_;
};

/// Throws InputError unless the bid is positive and finite, the CTR (if any)
/// lies in [0,1] and the click (if any) is 0 or 1.
void validate_ad(const AdRecord& ad);

std::vector<double> bids_of(const AuctionBatch& batch);
/// Ground-truth CTRs; InputError if any ad lacks one.
std::vector<double> true_ctrs_of(const AuctionBatch& batch);
/// Click labels as doubles; InputError if any ad lacks one.
std::vector<double> clicks_of(const AuctionBatch& batch);

/// Indices sorted by b_i * f_i descending, ties broken by smaller index.
std::vector<std::size_t> rank_by_predicted_ecpm(std::span<const double> bids,
                                                std::span<const double> pctrs);
std::vector<std::size_t> rank_by_predicted_ecpm(const AuctionBatch& batch,
                                                std::span<const double> pctrs);

/// sum_k alpha_k * b_{pi_f(k)} * p_{pi_f(k)} for the allocation induced by pctrs.
double welfare(const AuctionBatch& batch, std::span<const double> pctrs, const SlotConfig& slots);

/// Welfare of the allocation ranked by ground-truth eCPM.
double optimal_welfare(const AuctionBatch& batch, const SlotConfig& slots);

/// Single-slot welfare gap written as the pairwise double sum
///   sum_ij (b_i p_i - b_j p_j) 1{i = i*} 1{j = j*} 1{b_i f_i <= b_j f_j}
/// where i* is the top true-eCPM ad and j* the top predicted-eCPM ad.
double welfare_suboptimality_pairwise(const AuctionBatch& batch, std::span<const double> pctrs);

// JSON-lines persistence: one ad per line,
// {"features":[...], "bid": x, "ctr": p?, "click": 0|1?}.
void write_jsonl(std::ostream& out, const AuctionBatch& batch);
AuctionBatch read_jsonl(std::istream& in);
void save_jsonl(const std::string& path, const AuctionBatch& batch);
AuctionBatch load_jsonl(const std::string& path);

}  // namespace auctionrank
