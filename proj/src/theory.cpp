#include "auctionrank/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "auctionrank/errors.hpp"
#include "auctionrank/losses.hpp"
#include "auctionrank/numeric.hpp"

namespace auctionrank {

namespace {

TheoryReport make_report(std::string name, double lhs, double rhs, double slack, double tolerance,
                         std::uint64_t seed) {
  TheoryReport r;
  r.check_name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = slack;
  r.tolerance = tolerance;
  r.passed = slack >= -tolerance;
  r.instance_seed = seed;
  return r;
}

// Equality check: slack is minus the absolute discrepancy.
TheoryReport equality_report(std::string name, double lhs, double rhs, double tolerance,
                             std::uint64_t seed) {
  return make_report(std::move(name), lhs, rhs, -std::abs(lhs - rhs), tolerance, seed);
}

double max_bid(const AuctionBatch& batch) {
  double b = 0.0;
  for (const auto& ad : batch.ads) b = std::max(b, ad.bid);
  return b;
}

std::vector<double> ecpms(const AuctionBatch& batch, std::span<const double> ctrs) {
  std::vector<double> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out[i] = batch[i].bid * ctrs[i];
  return out;
}

void require_unit_interval(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError(std::string(what) + " must lie in [0,1]");
  }
}

// Predictions realizing a strict ordering: ad order[k] gets the k-th highest
// predicted eCPM, with every f_i inside (0, 1].
std::vector<double> scores_for_ordering(const AuctionBatch& batch,
                                        std::span<const std::size_t> order) {
  const std::size_t n = batch.size();
  double min_bid = batch[0].bid;
  for (const auto& ad : batch.ads) min_bid = std::min(min_bid, ad.bid);
  const double unit = min_bid / static_cast<double>(n);
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    f[order[k]] = unit * static_cast<double>(n - k) / batch[order[k]].bid;
  }
  return f;
}

template <typename Visit>
void for_each_ordering(std::size_t n, Visit&& visit) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  do {
    visit(std::span<const std::size_t>(order));
  } while (std::next_permutation(order.begin(), order.end()));
}

void require_enumerable(const AuctionBatch& batch) {
  if (batch.empty()) throw InputError("enumeration over an empty auction");
  if (batch.size() > kMaxEnumerationAds) {
    throw InputError("enumeration refused: more than " + std::to_string(kMaxEnumerationAds) +
                     " ads");
  }
}

template <typename Fn>
void for_each_k_permutation(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> chosen;
  std::vector<bool> used(n, false);
  auto rec = [&](auto&& self) -> void {
    if (chosen.size() == k) {
      fn(std::span<const std::size_t>(chosen));
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      chosen.push_back(i);
      self(self);
      chosen.pop_back();
      used[i] = false;
    }
  };
  rec(rec);
}

}  // namespace

void to_json(nlohmann::json& j, const TheoryReport& r) {
  j = nlohmann::json{{"check_name", r.check_name}, {"lhs", r.lhs},
                     {"rhs", r.rhs},               {"slack", r.slack},
                     {"passed", r.passed},         {"tolerance", r.tolerance},
                     {"instance_seed", r.instance_seed}};
  if (!r.detail.empty()) j["detail"] = r.detail;
}

AuctionBatch random_instance(CounterRng& rng, std::size_t n, double max_bid) {
  AuctionBatch batch;
  batch.ads.resize(n);
  for (auto& ad : batch.ads) {
    ad.bid = max_bid * (1.0 - rng.uniform());  // (0, max_bid]
    ad.true_ctr = rng.uniform();
  }
  return batch;
}

std::vector<double> random_pctrs(CounterRng& rng, std::size_t n) {
  std::vector<double> f(n);
  for (double& v : f) v = rng.uniform();
  return f;
}

std::string describe_instance(const AuctionBatch& batch, std::span<const double> pctrs) {
  std::ostringstream out;
  out << "bids=[";
  for (std::size_t i = 0; i < batch.size(); ++i) out << (i ? "," : "") << format_double(batch[i].bid);
  out << "] ctrs=[";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << (i ? "," : "") << (batch[i].true_ctr ? format_double(*batch[i].true_ctr) : "null");
  }
  out << "] pctrs=[";
  for (std::size_t i = 0; i < pctrs.size(); ++i) out << (i ? "," : "") << format_double(pctrs[i]);
  out << "]";
  return out.str();
}

double click_expectation(std::span<const double> true_ctrs,
                         const std::function<double(std::span<const double>)>& fn) {
  const std::size_t n = true_ctrs.size();
  if (n > 20) throw InputError("click enumeration refused: more than 20 ads");
  std::vector<double> clicks(n);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double prob = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool y = (mask >> i) & 1u;
      clicks[i] = y ? 1.0 : 0.0;
      prob *= y ? true_ctrs[i] : 1.0 - true_ctrs[i];
    }
    if (prob == 0.0) continue;
    total += prob * fn(clicks);
  }
  return total;
}

double half_total_gap(const AuctionBatch& batch) {
  const auto g = ecpms(batch, true_ctrs_of(batch));
  double total = 0.0;
  for (double gi : g) {
    for (double gj : g) total += std::abs(gi - gj);
  }
  return 0.5 * total;
}

TheoryReport check_welfare_lower_bound(const AuctionBatch& batch, std::span<const double> pctrs,
                                       std::uint64_t seed) {
  const auto truth = true_ctrs_of(batch);
  const auto bids = bids_of(batch);
  const SlotConfig single;
  const double best = optimal_welfare(batch, single);
  const double achieved = welfare(batch, pctrs, single);
  const double risk = conditional_risk(pctrs, bids, truth);
  const double rhs = achieved + 0.5 * risk + 0.5 * half_total_gap(batch);
  auto r = make_report("welfare_lower_bound", best, rhs, rhs - best, kInequalityTol, seed);
  if (!r.passed) r.detail = describe_instance(batch, pctrs);
  return r;
}

double brute_force_min_risk(const AuctionBatch& batch) {
  require_enumerable(batch);
  const auto truth = true_ctrs_of(batch);
  const auto bids = bids_of(batch);
  double best = std::numeric_limits<double>::infinity();
  for_each_ordering(batch.size(), [&](std::span<const std::size_t> order) {
    const auto f = scores_for_ordering(batch, order);
    best = std::min(best, conditional_risk(f, bids, truth));
  });
  return best;
}

double closed_form_min_risk(const AuctionBatch& batch) { return -half_total_gap(batch); }

TheoryReport check_ranking_recovery(const AuctionBatch& batch, std::uint64_t seed) {
  require_enumerable(batch);
  const auto truth = true_ctrs_of(batch);
  const auto bids = bids_of(batch);
  const auto gain = ecpms(batch, truth);
  const std::size_t n = batch.size();
  const double tol = kEqualityTol * std::max(1.0, half_total_gap(batch));

  std::vector<std::pair<double, std::vector<std::size_t>>> scored;
  double best = std::numeric_limits<double>::infinity();
  for_each_ordering(n, [&](std::span<const std::size_t> order) {
    const double risk = conditional_risk(scores_for_ordering(batch, order), bids, truth);
    best = std::min(best, risk);
    scored.emplace_back(risk, std::vector<std::size_t>(order.begin(), order.end()));
  });

  std::size_t violations = 0;
  std::vector<std::size_t> position(n);
  for (const auto& [risk, order] : scored) {
    if (risk > best + tol) continue;
    for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (gain[i] > gain[j] && position[i] > position[j]) ++violations;
      }
    }
  }
  const double risk_at_truth = conditional_risk(truth, bids, truth);
  const double slack = violations > 0 ? -static_cast<double>(violations) : best - risk_at_truth;
  auto r = make_report("ranking_recovery", risk_at_truth, best, slack, tol, seed);
  if (!r.passed) r.detail = describe_instance(batch, truth);
  return r;
}

double expected_surrogate(const AuctionBatch& batch, std::span<const double> pctrs,
                          SurrogateKind kind, double sigma) {
  const auto truth = true_ctrs_of(batch);
  const auto bids = bids_of(batch);
  return kind == SurrogateKind::Log ? log_surrogate(pctrs, bids, truth, sigma).value
                                    : hinge_surrogate(pctrs, bids, truth, sigma).value;
}

TheoryReport check_surrogate_gap(const AuctionBatch& batch, std::span<const double> pctrs,
                                 SurrogateKind kind, std::uint64_t seed) {
  require_unit_interval(pctrs, "pctrs");
  const auto truth = true_ctrs_of(batch);
  const double sigma = 2.0 / max_bid(batch);
  const double expected = expected_surrogate(batch, pctrs, kind, sigma);
  const double risk = conditional_risk(pctrs, bids_of(batch), truth);
  const double lhs = std::abs(expected - risk);
  const double rhs = half_total_gap(batch);
  auto r = make_report(kind == SurrogateKind::Log ? "log_surrogate_gap" : "hinge_surrogate_gap",
                       lhs, rhs, rhs - lhs, kInequalityTol, seed);
  if (!r.passed) r.detail = describe_instance(batch, pctrs);
  return r;
}

double rank_agreement_probability(double bid_i, double ctr_i, double bid_j, double ctr_j) {
  const bool truth_order = bid_i * ctr_i >= bid_j * ctr_j;
  double agree = 0.0;
  for (int yi = 0; yi <= 1; ++yi) {
    for (int yj = 0; yj <= 1; ++yj) {
      const double prob = (yi ? ctr_i : 1.0 - ctr_i) * (yj ? ctr_j : 1.0 - ctr_j);
      if ((bid_i * yi >= bid_j * yj) == truth_order) agree += prob;
    }
  }
  return agree;
}

RankAgreementCounterexample counterexample_rank_agreement(
    double epsilon, double scale_c, CounterexampleConstruction construction) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InputError("epsilon must lie in (0, 1/2)");
  if (!(scale_c > 0.0)) throw InputError("scale C must be positive");
  const double p_j = 1.0 - 0.5 * epsilon;
  const double p_i = construction == CounterexampleConstruction::TargetAgreement
                         ? 1.0 - (1.0 - epsilon) / p_j
                         : 1.0 - epsilon / p_j;
  if (!(p_i > 0.0 && p_i < 1.0) || !(p_j > 0.0 && p_j < 1.0)) {
    throw InputError("counterexample CTRs left (0,1)");
  }
  RankAgreementCounterexample out;
  out.ad_i.bid = 2.0 * scale_c / p_i;
  out.ad_i.true_ctr = p_i;
  out.ad_j.bid = scale_c / p_j;
  out.ad_j.true_ctr = p_j;
  if (!(out.ad_i.bid * p_i >= out.ad_j.bid * p_j)) {
    throw InputError("counterexample does not satisfy b_i p_i >= b_j p_j");
  }
  out.agreement_probability = rank_agreement_probability(out.ad_i.bid, p_i, out.ad_j.bid, p_j);
  return out;
}

double monte_carlo_rank_agreement(const RankAgreementCounterexample& pair, std::size_t draws,
                                  std::uint64_t seed) {
  if (draws == 0) throw InputError("monte carlo needs at least one draw");
  CounterRng rng(seed);
  const double b_i = pair.ad_i.bid, p_i = *pair.ad_i.true_ctr;
  const double b_j = pair.ad_j.bid, p_j = *pair.ad_j.true_ctr;
  const bool truth_order = b_i * p_i >= b_j * p_j;
  std::size_t agree = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double yi = rng.bernoulli(p_i) ? 1.0 : 0.0;
    const double yj = rng.bernoulli(p_j) ? 1.0 : 0.0;
    if ((b_i * yi >= b_j * yj) == truth_order) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(draws);
}

double measured_teacher_error(const AuctionBatch& batch, std::span<const double> teacher_ctrs) {
  const auto truth = true_ctrs_of(batch);
  if (teacher_ctrs.size() != truth.size()) throw InputError("teacher ctrs differ in length");
  if (truth.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = teacher_ctrs[i] - truth[i];
    total += d * d;
  }
  return total / static_cast<double>(truth.size());
}

namespace {

std::vector<double> teacher_predictions(const TeacherSpec& teacher, const AuctionBatch& batch) {
  if (!teacher.base) throw InputError("teacher has no predictor");
  auto ctrs = teacher.base(batch);
  if (ctrs.size() != batch.size()) throw InputError("teacher returned wrong length");
  const double eps = measured_teacher_error(batch, ctrs);
  if (eps > teacher.l2_error_bound) {
    throw InputError("teacher error " + format_double(eps) + " exceeds its stated bound " +
                     format_double(teacher.l2_error_bound));
  }
  return ctrs;
}

}  // namespace

TheoryReport check_plugin_bound(const AuctionBatch& batch, std::span<const double> pctrs,
                                const TeacherSpec& teacher, std::uint64_t seed) {
  const auto truth = true_ctrs_of(batch);
  const auto bids = bids_of(batch);
  const auto teacher_ctrs = teacher_predictions(teacher, batch);
  const double eps = measured_teacher_error(batch, teacher_ctrs);
  const double n = static_cast<double>(batch.size());
  const double lhs = std::abs(plugin_indicator_loss(pctrs, bids, teacher_ctrs) -
                              conditional_risk(pctrs, bids, truth));
  const double rhs = n * (n - 1.0) * max_bid(batch) * std::sqrt(eps);
  auto r = make_report("plugin_indicator_bound", lhs, rhs, rhs - lhs, kInequalityTol, seed);
  if (!r.passed) r.detail = describe_instance(batch, pctrs);
  return r;
}

std::vector<TheoryReport> check_plugin_hinge_calibration(
    const std::function<CalibrationInstance(std::size_t)>& sampler, std::size_t instances,
    const TeacherSpec& teacher, double sigma) {
  if (!(sigma > 0.0)) throw InputError("sigma must be positive");
  if (instances == 0) throw InputError("calibration check needs at least one instance");

  TheoryReport worst;
  bool have_worst = false;
  double mean_loss_at_truth = 0.0;
  double mean_bound = 0.0;
  for (std::size_t k = 0; k < instances; ++k) {
    const auto inst = sampler(k);
    const auto& batch = inst.batch;
    const auto truth = true_ctrs_of(batch);
    const auto bids = bids_of(batch);
    const auto teacher_ctrs = teacher_predictions(teacher, batch);
    const double eps = measured_teacher_error(batch, teacher_ctrs);
    const double n = static_cast<double>(batch.size());
    const double big_b = max_bid(batch);
    const double teacher_term = n * (n - 1.0) * sigma * big_b * big_b * std::sqrt(eps);

    const double lhs = optimal_welfare(batch, SlotConfig{});
    const double rhs = welfare(batch, inst.pctrs, SlotConfig{}) +
                       plugin_hinge_plus(inst.pctrs, bids, teacher_ctrs, sigma).value +
                       0.5 * n * (n - 1.0) * big_b * std::max(1.0, sigma * big_b - 1.0) +
                       teacher_term;
    auto r = make_report("plugin_hinge_welfare_bound", lhs, rhs, rhs - lhs, kInequalityTol,
                         inst.seed);
    if (!have_worst || r.slack < worst.slack) {
      worst = r;
      worst.detail = describe_instance(batch, inst.pctrs);
      have_worst = true;
    }
    mean_loss_at_truth += plugin_hinge_plus(truth, bids, teacher_ctrs, sigma).value;
    mean_bound += teacher_term;
  }
  if (worst.passed) worst.detail.clear();
  mean_loss_at_truth /= static_cast<double>(instances);
  mean_bound /= static_cast<double>(instances);
  auto calibration = make_report("plugin_hinge_calibration", mean_loss_at_truth, mean_bound,
                                 mean_bound - mean_loss_at_truth, kInequalityTol, worst.instance_seed);
  return {worst, calibration};
}

std::pair<double, double> hinge_identity(double a, double b) {
  const double lhs = std::abs(positive_part(a) - positive_part(b)) +
                     std::abs(positive_part(-a) - positive_part(-b));
  return {lhs, std::abs(a - b)};
}

double brute_force_best_welfare(const AuctionBatch& batch, const SlotConfig& slots) {
  if (slots.slots() > batch.size()) throw InputError("more slots than ads");
  const auto truth = true_ctrs_of(batch);
  double best = -std::numeric_limits<double>::infinity();
  for_each_k_permutation(batch.size(), slots.slots(), [&](std::span<const std::size_t> chosen) {
    double w = 0.0;
    for (std::size_t k = 0; k < chosen.size(); ++k) w += slots[k] * batch[chosen[k]].bid * truth[chosen[k]];
    best = std::max(best, w);
  });
  return best;
}

bool wins_nested_subauctions(const AuctionBatch& batch, std::span<const double> pctrs,
                             std::size_t slots) {
  const auto truth = true_ctrs_of(batch);
  const auto true_order = rank_by_predicted_ecpm(batch, truth);
  const auto predicted = ecpms(batch, pctrs);
  std::vector<bool> removed(batch.size(), false);
  for (std::size_t k = 0; k < slots; ++k) {
    // single-slot winner among S_k, ties to the smaller index
    std::size_t winner = batch.size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (removed[i]) continue;
      if (winner == batch.size() || predicted[i] > predicted[winner]) winner = i;
    }
    if (winner != true_order[k]) return false;
    removed[true_order[k]] = true;
  }
  return true;
}

TheoryReport check_multislot_reduction(const AuctionBatch& batch, const SlotConfig& slots,
                                       std::span<const double> pctrs, std::uint64_t seed) {
  const std::size_t k = slots.slots();
  const double best = brute_force_best_welfare(batch, slots);
  const double achieved = welfare(batch, pctrs, slots);
  const bool maximal = achieved >= best - kEqualityTol * std::max(1.0, std::abs(best));

  const auto predicted = rank_by_predicted_ecpm(batch, pctrs);
  const auto ideal = rank_by_predicted_ecpm(batch, true_ctrs_of(batch));
  const bool same_top = std::equal(predicted.begin(), predicted.begin() + static_cast<long>(k),
                                   ideal.begin());
  const bool nested = wins_nested_subauctions(batch, pctrs, k);
  const bool consistent = maximal == same_top && same_top == nested;

  auto r = make_report("multislot_reduction", achieved, best, consistent ? 0.0 : -1.0, 0.0, seed);
  std::ostringstream detail;
  detail << "maximal=" << maximal << " same_top_k=" << same_top << " nested_wins=" << nested;
  if (!consistent) detail << " " << describe_instance(batch, pctrs);
  r.detail = detail.str();
  return r;
}

double expected_composite(std::span<const DomainPoint> domain, std::span<const double> candidate,
                          double lambda) {
  if (candidate.size() != domain.size()) throw InputError("candidate does not match domain size");
  std::vector<double> bids, truth;
  for (const auto& d : domain) {
    bids.push_back(d.bid);
    truth.push_back(d.p_star);
  }
  return click_expectation(truth, [&](std::span<const double> clicks) {
    double v = indicator_pairwise_loss(candidate, bids, clicks);
    if (lambda > 0.0) v += lambda * logistic_loss(candidate, clicks, BidWeighting::Unit, {}).value;
    return v;
  });
}

TheoryReport check_combo_calibration(std::span<const DomainPoint> domain,
                                     std::span<const std::vector<double>> candidate_grid,
                                     double lambda) {
  if (domain.empty() || domain.size() > 4) throw InputError("domain must have 1 to 4 points");
  if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
  std::vector<double> truth;
  for (const auto& d : domain) truth.push_back(d.p_star);

  bool found = false;
  double at_truth = 0.0;
  double best_other = std::numeric_limits<double>::infinity();
  for (const auto& candidate : candidate_grid) {
    const double value = expected_composite(domain, candidate, lambda);
    if (std::equal(candidate.begin(), candidate.end(), truth.begin(), truth.end())) {
      found = true;
      at_truth = value;
    } else {
      best_other = std::min(best_other, value);
    }
  }
  if (!found) throw InputError("candidate grid must contain p*");
  return make_report("combo_calibration", at_truth, best_other, best_other - at_truth,
                     -kEqualityTol, 0);
}

std::vector<TheoryReport> run_theory_suite(const TheorySuiteConfig& config) {
  std::vector<TheoryReport> reports;
  const CounterRng root(config.seed);
  const std::size_t count = config.instances;
  constexpr double kMaxBid = 5.0;

  auto instance_seed = [&](std::uint64_t check, std::uint64_t idx) {
    return root.split(check).split(idx).key();
  };

  // welfare lower bound: random f, and f = p* (tight)
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t seed = instance_seed(1, k);
    CounterRng rng(seed);
    const std::size_t n = 1 + rng.below(6);
    const auto batch = random_instance(rng, n, kMaxBid);
    reports.push_back(check_welfare_lower_bound(batch, random_pctrs(rng, n), seed));
    const auto truth = true_ctrs_of(batch);
    const auto tight = check_welfare_lower_bound(batch, truth, seed);
    reports.push_back(equality_report("welfare_lower_bound_tight", tight.lhs, tight.rhs,
                                      kEqualityTol, seed));
  }

  // closed-form minimum risk and ranking recovery
  for (std::size_t k = 0; k < std::min<std::size_t>(count, 200); ++k) {
    const std::uint64_t seed = instance_seed(2, k);
    CounterRng rng(seed);
    const std::size_t n = 1 + rng.below(7);
    const auto batch = random_instance(rng, n, kMaxBid);
    reports.push_back(equality_report("min_risk_closed_form", brute_force_min_risk(batch),
                                      closed_form_min_risk(batch), kEqualityTol, seed));
    if (n <= 6) reports.push_back(check_ranking_recovery(batch, seed));
  }

  // surrogate gaps and the label-linearity expectation identity
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t seed = instance_seed(3, k);
    CounterRng rng(seed);
    const std::size_t n = 1 + rng.below(6);
    const auto batch = random_instance(rng, n, kMaxBid);
    const auto f = random_pctrs(rng, n);
    reports.push_back(check_surrogate_gap(batch, f, SurrogateKind::Log, seed));
    reports.push_back(check_surrogate_gap(batch, f, SurrogateKind::Hinge, seed));
    if (n <= 5) {
      const auto bids = bids_of(batch);
      const double sigma = 2.0 / max_bid(batch);
      const auto truth = true_ctrs_of(batch);
      for (const auto kind : {SurrogateKind::Log, SurrogateKind::Hinge}) {
        const double analytic = expected_surrogate(batch, f, kind, sigma);
        const double enumerated = click_expectation(truth, [&](std::span<const double> y) {
          return kind == SurrogateKind::Log ? log_surrogate(f, bids, y, sigma).value
                                            : hinge_surrogate(f, bids, y, sigma).value;
        });
        reports.push_back(equality_report(kind == SurrogateKind::Log
                                              ? "log_surrogate_expectation_identity"
                                              : "hinge_surrogate_expectation_identity",
                                          analytic, enumerated, kInequalityTol, seed));
      }
    }
  }

  // rank-agreement counterexample
  for (const double eps : {0.05, 0.25, 0.45}) {
    const std::uint64_t seed = instance_seed(4, static_cast<std::uint64_t>(eps * 100));
    const auto pair = counterexample_rank_agreement(eps, 1.0);
    reports.push_back(equality_report("rank_agreement_analytic", pair.agreement_probability, eps,
                                      kEqualityTol, seed));
    reports.push_back(equality_report("rank_agreement_monte_carlo",
                                      monte_carlo_rank_agreement(pair, 1'000'000, seed),
                                      pair.agreement_probability, 0.002, seed));
  }

  // plug-in estimates: exact, shifted and constant teachers
  for (std::size_t k = 0; k < std::min<std::size_t>(count, 200); ++k) {
    const std::uint64_t seed = instance_seed(5, k);
    CounterRng rng(seed);
    const std::size_t n = 1 + rng.below(6);
    const auto batch = random_instance(rng, n, kMaxBid);
    const auto f = random_pctrs(rng, n);
    const auto truth = true_ctrs_of(batch);
    const TeacherSpec exact{ground_truth_provider(), 0.0};
    const auto same = check_plugin_bound(batch, f, exact, seed);
    reports.push_back(same);
    reports.push_back(equality_report(
        "plugin_indicator_equals_risk", plugin_indicator_loss(f, bids_of(batch), truth),
        conditional_risk(f, bids_of(batch), truth), 0.0, seed));
    const TeacherSpec shifted{[](const AuctionBatch& b) {
                                auto p = true_ctrs_of(b);
                                for (double& v : p) v = std::min(1.0, v + 0.01);
                                return p;
                              }};
    reports.push_back(check_plugin_bound(batch, f, shifted, seed));
    const TeacherSpec constant{[](const AuctionBatch& b) { return std::vector<double>(b.size(), 0.5); }};
    reports.push_back(check_plugin_bound(batch, f, constant, seed));
  }

  // plug-in hinge calibration with exact and noisy teachers
  {
    const std::size_t instances = std::min<std::size_t>(count, 200);
    auto sampler = [&](std::size_t k) {
      CalibrationInstance inst;
      inst.seed = instance_seed(6, k);
      CounterRng rng(inst.seed);
      const std::size_t n = 1 + rng.below(6);
      inst.batch = random_instance(rng, n, kMaxBid);
      inst.pctrs = random_pctrs(rng, n);
      return inst;
    };
    const TeacherSpec exact{ground_truth_provider(), 0.0};
    for (auto& r : check_plugin_hinge_calibration(sampler, instances, exact, 1.0)) {
      reports.push_back(std::move(r));
    }
    reports.push_back(equality_report(
        "plugin_hinge_zero_at_truth",
        check_plugin_hinge_calibration(sampler, instances, exact, 1.0)[1].lhs, 0.0, 0.0,
        config.seed));
    const TeacherSpec noisy{[&](const AuctionBatch& b) {
      CounterRng rng = root.split(60).split(static_cast<std::uint64_t>(b.size()));
      auto p = true_ctrs_of(b);
      for (double& v : p) v = std::clamp(v + rng.uniform(-0.1, 0.1), 0.0, 1.0);
      return p;
    }};
    for (auto& r : check_plugin_hinge_calibration(sampler, instances, noisy, 1.0)) {
      reports.push_back(std::move(r));
    }
  }

  // hinge identity fuzz
  {
    const std::uint64_t seed = instance_seed(7, 0);
    CounterRng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < 10'000; ++k) {
      const auto [lhs, rhs] = hinge_identity(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    reports.push_back(make_report("hinge_identity", worst, 0.0, -worst, kEqualityTol, seed));
  }

  // multi-slot reduction over every (n <= 5, K <= 3)
  for (std::size_t k = 0; k < std::min<std::size_t>(count, 100); ++k) {
    for (std::size_t n = 1; n <= 5; ++n) {
      for (std::size_t slots = 1; slots <= std::min<std::size_t>(3, n); ++slots) {
        const std::uint64_t seed = instance_seed(8, k * 100 + n * 10 + slots);
        CounterRng rng(seed);
        const auto batch = random_instance(rng, n, kMaxBid);
        std::vector<double> alpha{1.0};
        for (std::size_t s = 1; s < slots; ++s) alpha.push_back(rng.uniform(0.05, 0.95));
        std::sort(alpha.begin() + 1, alpha.end(), std::greater<>());
        const SlotConfig config_slots(alpha);
        // alternate random predictions and the ground truth
        const auto f = (k % 4 == 0) ? true_ctrs_of(batch) : random_pctrs(rng, n);
        reports.push_back(check_multislot_reduction(batch, config_slots, f, seed));
      }
    }
  }

  // calibrated composite loss on a two-point domain
  {
    const std::vector<DomainPoint> domain{{1.0, 6.0 / 22.0}, {1.5, 15.0 / 22.0}};
    std::vector<std::vector<double>> grid;
    for (int a = 1; a <= 21; ++a) {
      for (int b = 1; b <= 21; ++b) grid.push_back({a / 22.0, b / 22.0});
    }
    reports.push_back(check_combo_calibration(domain, grid, 3.0));
  }
  return reports;
}

}  // namespace auctionrank
