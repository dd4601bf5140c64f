#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "auctionrank/auction.hpp"

namespace auctionrank {

struct GeneratorConfig {
  std::size_t input_dim = 50;
  double ctr_weight_bound = std::sqrt(10.0);
  double bid_weight_bound = 2.0;
  double ctr_noise_sd = 0.1;
  double bid_noise_sd = 0.1;
  std::size_t n_train = 10000;
  std::size_t n_eval_auctions = 2000;
  std::size_t ads_per_auction = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// Ground-truth weight vectors, fixed for one experiment repeat.
struct GroundTruthWorld {
  std::vector<double> w_p;
  std::vector<double> w_b;
};

void to_json(nlohmann::json& j, const GroundTruthWorld& w);
void from_json(const nlohmann::json& j, GroundTruthWorld& w);

/// Clamp range applied to generated CTRs.
inline constexpr double kMinCtr = 1e-6;
inline constexpr double kMaxCtr = 1.0 - 1e-6;

// Stream ids below kEvalStreamBase are reserved for the training set.
inline constexpr std::uint64_t kTrainAdsStream = 1;
inline constexpr std::uint64_t kTrainClickStream = 2;
inline constexpr std::uint64_t kEvalStreamBase = 1u << 20;

/// w_p ~ Unif(-ctr_weight_bound, ctr_weight_bound)^d, w_b ~ Unif(-bid_weight_bound, ...)^d.
GroundTruthWorld sample_world(const GeneratorConfig& config);

/// x ~ N(0, I); p = 1 / (1 + exp(w_p.x) + xi_ctr) clamped to [kMinCtr, kMaxCtr];
/// b = exp(w_b.x + xi_bid). Clicks are not drawn.
AuctionBatch generate_ads(const GroundTruthWorld& world, const GeneratorConfig& config,
                          std::size_t count, std::uint64_t stream_id);

/// Independent Bernoulli(p_i) clicks from the given stream.
AuctionBatch sample_clicks(AuctionBatch batch, std::uint64_t seed, std::uint64_t stream_id);

/// n_eval_auctions auctions of ads_per_auction ads, auction a on stream
/// kEvalStreamBase + 2a (ads) and kEvalStreamBase + 2a + 1 (clicks).
std::vector<AuctionBatch> generate_eval_auctions(const GroundTruthWorld& world,
                                                 const GeneratorConfig& config);

/// World, training ads with clicks, from config.seed.
struct SyntheticDataset {
  GroundTruthWorld world;
  AuctionBatch train;
};
SyntheticDataset generate_training_set(const GeneratorConfig& config);

}  // namespace auctionrank
