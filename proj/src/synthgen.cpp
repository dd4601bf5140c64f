#include "auctionrank/synthgen.hpp"

#include <algorithm>

#include "auctionrank/errors.hpp"
#include "auctionrank/rng.hpp"

namespace auctionrank {

namespace {
constexpr std::uint64_t kWorldStream = 0;
}

void GeneratorConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (!(ctr_weight_bound >= 0.0) || !(bid_weight_bound >= 0.0)) {
    throw ConfigError("weight bounds must be non-negative");
  }
  if (!(ctr_noise_sd >= 0.0) || !(bid_noise_sd >= 0.0)) {
    throw ConfigError("noise standard deviations must be non-negative");
  }
  if (n_train == 0 || n_eval_auctions == 0 || ads_per_auction == 0) {
    throw ConfigError("dataset sizes must be positive");
  }
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = nlohmann::json{{"input_dim", c.input_dim},
                     {"ctr_weight_bound", c.ctr_weight_bound},
                     {"bid_weight_bound", c.bid_weight_bound},
                     {"ctr_noise_sd", c.ctr_noise_sd},
                     {"bid_noise_sd", c.bid_noise_sd},
                     {"n_train", c.n_train},
                     {"n_eval_auctions", c.n_eval_auctions},
                     {"ads_per_auction", c.ads_per_auction},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c = GeneratorConfig{};
  if (j.contains("input_dim")) c.input_dim = j["input_dim"].get<std::size_t>();
  if (j.contains("ctr_weight_bound")) c.ctr_weight_bound = j["ctr_weight_bound"].get<double>();
  if (j.contains("bid_weight_bound")) c.bid_weight_bound = j["bid_weight_bound"].get<double>();
  if (j.contains("ctr_noise_sd")) c.ctr_noise_sd = j["ctr_noise_sd"].get<double>();
  if (j.contains("bid_noise_sd")) c.bid_noise_sd = j["bid_noise_sd"].get<double>();
  if (j.contains("n_train")) c.n_train = j["n_train"].get<std::size_t>();
  if (j.contains("n_eval_auctions")) c.n_eval_auctions = j["n_eval_auctions"].get<std::size_t>();
  if (j.contains("ads_per_auction")) c.ads_per_auction = j["ads_per_auction"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  c.validate();
}

void to_json(nlohmann::json& j, const GroundTruthWorld& w) {
  j = nlohmann::json{{"w_p", w.w_p}, {"w_b", w.w_b}};
}

void from_json(const nlohmann::json& j, GroundTruthWorld& w) {
  w.w_p = j.at("w_p").get<std::vector<double>>();
  w.w_b = j.at("w_b").get<std::vector<double>>();
}

GroundTruthWorld sample_world(const GeneratorConfig& config) {
  config.validate();
  CounterRng rng = CounterRng(config.seed).split(kWorldStream);
  GroundTruthWorld world;
  world.w_p.resize(config.input_dim);
  world.w_b.resize(config.input_dim);
  for (double& w : world.w_p) w = rng.uniform(-config.ctr_weight_bound, config.ctr_weight_bound);
  for (double& w : world.w_b) w = rng.uniform(-config.bid_weight_bound, config.bid_weight_bound);
  return world;
}

AuctionBatch generate_ads(const GroundTruthWorld& world, const GeneratorConfig& config,
                          std::size_t count, std::uint64_t stream_id) {
  if (count == 0) throw InputError("generate_ads: count must be positive");
  if (world.w_p.size() != config.input_dim || world.w_b.size() != config.input_dim) {
    throw InputError("world weights do not match input_dim");
  }
  CounterRng rng = CounterRng(config.seed).split(stream_id);
  AuctionBatch batch;
  batch.ads.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AdRecord ad;
    ad.features.resize(config.input_dim);
    double ctr_score = 0.0;
    double bid_score = 0.0;
    for (std::size_t d = 0; d < config.input_dim; ++d) {
      const double x = rng.normal();
      ad.features[d] = x;
      ctr_score += world.w_p[d] * x;
      bid_score += world.w_b[d] * x;
    }
    const double ctr_noise = config.ctr_noise_sd > 0.0 ? rng.normal(0.0, config.ctr_noise_sd) : 0.0;
    const double bid_noise = config.bid_noise_sd > 0.0 ? rng.normal(0.0, config.bid_noise_sd) : 0.0;
    const double denom = 1.0 + std::exp(ctr_score) + ctr_noise;
    // A non-positive denominator means the noise pushed p past 1.
    const double raw = denom > 0.0 ? 1.0 / denom : kMaxCtr;
    ad.true_ctr = std::clamp(raw, kMinCtr, kMaxCtr);
    ad.bid = std::exp(bid_score + bid_noise);
    batch.ads.push_back(std::move(ad));
  }
  return batch;
}

AuctionBatch sample_clicks(AuctionBatch batch, std::uint64_t seed, std::uint64_t stream_id) {
  CounterRng rng = CounterRng(seed).split(stream_id);
  for (auto& ad : batch.ads) {
    if (!ad.true_ctr) throw InputError("sample_clicks: ad is missing its ground-truth ctr");
    ad.click = rng.bernoulli(*ad.true_ctr) ? 1 : 0;
  }
  return batch;
}

std::vector<AuctionBatch> generate_eval_auctions(const GroundTruthWorld& world,
                                                 const GeneratorConfig& config) {
  std::vector<AuctionBatch> auctions;
  auctions.reserve(config.n_eval_auctions);
  for (std::size_t a = 0; a < config.n_eval_auctions; ++a) {
    const std::uint64_t base = kEvalStreamBase + 2 * static_cast<std::uint64_t>(a);
    auctions.push_back(sample_clicks(generate_ads(world, config, config.ads_per_auction, base),
                                     config.seed, base + 1));
  }
  return auctions;
}

SyntheticDataset generate_training_set(const GeneratorConfig& config) {
  SyntheticDataset data;
  data.world = sample_world(config);
  data.train = sample_clicks(generate_ads(data.world, config, config.n_train, kTrainAdsStream),
                             config.seed, kTrainClickStream);
  return data;
}

}  // namespace auctionrank
