#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "auctionrank/auction.hpp"
#include "auctionrank/model.hpp"
#include "auctionrank/rng.hpp"

namespace auctionrank {

/// Outcome of one oracle check. passed <=> slack >= -tolerance.
struct TheoryReport {
  std::string check_name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool passed = false;
  double tolerance = 0.0;
  std::uint64_t instance_seed = 0;
  /// Free-form context: the instance itself on failure.
  std::string detail;
};

void to_json(nlohmann::json& j, const TheoryReport& r);

inline constexpr double kEqualityTol = 1e-12;
inline constexpr double kInequalityTol = 1e-10;

/// A CTR estimate with a stated bound on its mean squared error.
struct TeacherSpec {
  CtrProvider base;
  double l2_error_bound = std::numeric_limits<double>::infinity();
};

enum class SurrogateKind { Log, Hinge };

// --- instance helpers -------------------------------------------------------

/// n ads with bids uniform in (0, max_bid], CTRs uniform in [0,1], no features.
AuctionBatch random_instance(CounterRng& rng, std::size_t n, double max_bid);
std::vector<double> random_pctrs(CounterRng& rng, std::size_t n);
/// Human-readable dump of bids, CTRs and predictions for failure messages.
std::string describe_instance(const AuctionBatch& batch, std::span<const double> pctrs);

/// Exact E_y[fn(y)] over all 2^n click patterns with y_i ~ Bernoulli(p_i).
double click_expectation(std::span<const double> true_ctrs,
                         const std::function<double(std::span<const double>)>& fn);

/// 1/2 sum_ij |b_i p_i - b_j p_j|.
double half_total_gap(const AuctionBatch& batch);

// --- checks -----------------------------------------------------------------

/// W_* <= W_f + R(f)/2 + sum_ij |b_i p_i - b_j p_j| / 4, single slot.
TheoryReport check_welfare_lower_bound(const AuctionBatch& batch, std::span<const double> pctrs,
                                       std::uint64_t seed = 0);

/// Minimum conditional risk over every strict ordering of predicted eCPMs.
/// InputError for more than kMaxEnumerationAds ads.
inline constexpr std::size_t kMaxEnumerationAds = 8;
double brute_force_min_risk(const AuctionBatch& batch);
/// -1/2 sum_ij |b_i p_i - b_j p_j|.
double closed_form_min_risk(const AuctionBatch& batch);

/// Every risk-minimizing ordering ranks each pair with b_i p_i > b_j p_j
/// strictly above, and p* attains the minimum.
TheoryReport check_ranking_recovery(const AuctionBatch& batch, std::uint64_t seed = 0);

/// With sigma = 2 / max bid, |E_y[surrogate] - R(f)| <= 1/2 sum_ij |b_i p_i - b_j p_j|.
TheoryReport check_surrogate_gap(const AuctionBatch& batch, std::span<const double> pctrs,
                                 SurrogateKind kind, std::uint64_t seed = 0);
/// E_y of the surrogate at the given sigma, by label linearity (labels := p).
double expected_surrogate(const AuctionBatch& batch, std::span<const double> pctrs,
                          SurrogateKind kind, double sigma);

enum class CounterexampleConstruction {
  /// p_i = 1 - (1 - eps) / p_j: agreement probability equals eps.
  TargetAgreement,
  /// p_i = 1 - eps / p_j: agreement equals 1 - eps.
  EpsOverPj,
};

struct RankAgreementCounterexample {
  AdRecord ad_i;
  AdRecord ad_j;
  /// Pr(1{b_i y_i >= b_j y_j} = 1{b_i p_i >= b_j p_j}), exact.
  double agreement_probability = 0.0;
};

/// p_j = 1 - eps/2, b_i = 2C/p_i, b_j = C/p_j; InputError unless eps in (0, 1/2)
/// and C > 0.
RankAgreementCounterexample counterexample_rank_agreement(
    double epsilon, double scale_c,
    CounterexampleConstruction construction = CounterexampleConstruction::TargetAgreement);
/// Exact agreement probability by enumerating the four click outcomes.
double rank_agreement_probability(double bid_i, double ctr_i, double bid_j, double ctr_j);
double monte_carlo_rank_agreement(const RankAgreementCounterexample& pair, std::size_t draws,
                                  std::uint64_t seed);

/// Mean of (teacher - p)^2 over the batch.
double measured_teacher_error(const AuctionBatch& batch, std::span<const double> teacher_ctrs);

/// |l^(f) - R(f)| <= n(n-1) B sqrt(eps), eps the measured teacher error.
TheoryReport check_plugin_bound(const AuctionBatch& batch, std::span<const double> pctrs,
                                const TeacherSpec& teacher, std::uint64_t seed = 0);

struct CalibrationInstance {
  AuctionBatch batch;
  std::vector<double> pctrs;
  std::uint64_t seed = 0;
};

/// Two reports over the sampled instances:
///  [0] the welfare inequality with the plug-in hinge loss, worst instance;
///  [1] mean l^{hinge,+}(p*) <= mean n(n-1) sigma B^2 sqrt(eps).
std::vector<TheoryReport> check_plugin_hinge_calibration(
    const std::function<CalibrationInstance(std::size_t)>& sampler, std::size_t instances,
    const TeacherSpec& teacher, double sigma);

/// Both sides of |a_+ - b_+| + |(-a)_+ - (-b)_+| = |a - b|.
std::pair<double, double> hinge_identity(double a, double b);

/// Best K-slot welfare over every ordered choice of K ads.
double brute_force_best_welfare(const AuctionBatch& batch, const SlotConfig& slots);
/// pctrs win each single-slot auction over the nested sets S_0..S_{K-1}, where
/// S_k drops the k best ads by ground-truth eCPM.
bool wins_nested_subauctions(const AuctionBatch& batch, std::span<const double> pctrs,
                             std::size_t slots);

/// (welfare of pctrs is maximal) <=> (top-K predicted order equals top-K true
/// order) <=> (pctrs win every nested sub-auction).
TheoryReport check_multislot_reduction(const AuctionBatch& batch, const SlotConfig& slots,
                                       std::span<const double> pctrs, std::uint64_t seed = 0);

/// One feature value of a small discrete domain: its bid and true CTR. The
/// dataset holds one ad per domain point.
struct DomainPoint {
  double bid = 1.0;
  double p_star = 0.5;
};

/// Exact E_y[l(f) + lambda * logistic(f)] for a candidate assignment of CTRs to
/// the domain points.
double expected_composite(std::span<const DomainPoint> domain, std::span<const double> candidate,
                          double lambda);

/// p* is the strict minimizer of the expected composite loss among the grid.
/// tolerance is -kEqualityTol: strict improvement is required.
TheoryReport check_combo_calibration(std::span<const DomainPoint> domain,
                                     std::span<const std::vector<double>> candidate_grid,
                                     double lambda);

/// Seeded randomized sweep over every check; what `verify` runs.
struct TheorySuiteConfig {
  std::uint64_t seed = 7;
  std::size_t instances = 500;
};
std::vector<TheoryReport> run_theory_suite(const TheorySuiteConfig& config);

}  // namespace auctionrank
