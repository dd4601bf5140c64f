#include "auctionrank/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "auctionrank/errors.hpp"
#include "auctionrank/numeric.hpp"
#include "auctionrank/rng.hpp"

namespace auctionrank {

namespace fs = std::filesystem;

namespace {

LossSpec make_spec(LossKind kind, double sigma, PairWeighting weighting) {
  LossSpec s;
  s.kind = kind;
  s.sigma = sigma;
  s.pair_weighting = weighting;
  s.uses_teacher = s.needs_teacher();
  return s;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<NamedLoss> default_roster() {
  return {
      {"logistic", make_spec(LossKind::Logistic, 1.0, PairWeighting::None)},
      {"wll_bid", make_spec(LossKind::WeightedLogisticBid, 1.0, PairWeighting::None)},
      {"wll_sqrt_bid", make_spec(LossKind::WeightedLogisticSqrtBid, 1.0, PairWeighting::None)},
      {"log_sigma1", make_spec(LossKind::LogSurrogate, 1.0, PairWeighting::None)},
      {"plugin_log_sigma1",
       make_spec(LossKind::PluginLogSurrogate, 1.0, PairWeighting::LogisticWeights)},
      {"plugin_hinge_plus_sigma1",
       make_spec(LossKind::PluginHingePlus, 1.0, PairWeighting::LogisticWeights)},
  };
}

NamedLoss roster_loss(const std::string& name) {
  for (auto& l : default_roster()) {
    if (l.name == name) return l;
  }
  if (name == "log_sigma3") {
    return {name, make_spec(LossKind::LogSurrogate, 3.0, PairWeighting::LogisticWeights)};
  }
  if (name == "plugin_log_sigma3") {
    return {name, make_spec(LossKind::PluginLogSurrogate, 3.0, PairWeighting::LogisticWeights)};
  }
  throw ConfigError("unknown loss name: " + name);
}

std::vector<NamedLoss> ExperimentConfig::resolved_losses() const {
  if (lambda_grid.empty()) return losses;
  std::vector<NamedLoss> out;
  for (const auto& l : losses) {
    const bool pointwise = l.spec.kind == LossKind::Logistic || l.spec.kind == LossKind::WeightedLogisticBid ||
                           l.spec.kind == LossKind::WeightedLogisticSqrtBid;
    if (pointwise) {
      out.push_back(l);
      continue;
    }
    for (double lambda : lambda_grid) {
      NamedLoss v = l;
      v.spec.lambda = lambda;
      v.name += "_lambda" + nlohmann::json(lambda).dump();
      out.push_back(std::move(v));
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  generator.validate();
  train.validate();
  if (repeats == 0) throw ConfigError("repeats must be positive");
  if (losses.empty()) throw ConfigError("losses must not be empty");
  const auto all = resolved_losses();
  std::set<std::string> names;
  bool any_teacher_use = false;
  for (const auto& l : all) {
    if (l.name.empty()) throw ConfigError("loss name must not be empty");
    if (l.name == kOracleModelName) throw ConfigError("loss name 'oracle' is reserved");
    if (!names.insert(l.name).second) throw ConfigError("duplicate loss name: " + l.name);
    l.spec.validate();
    if (!l.spec.differentiable()) throw ConfigError("loss " + l.name + " is not trainable");
    any_teacher_use = any_teacher_use || l.spec.uses_teacher;
  }
  const auto teacher = std::find_if(all.begin(), all.end(),
                                    [&](const NamedLoss& l) { return l.name == teacher_loss_name; });
  if (teacher == all.end()) {
    if (any_teacher_use) {
      throw ConfigError("teacher loss '" + teacher_loss_name + "' is not in the loss list");
    }
  } else if (teacher->spec.uses_teacher) {
    throw ConfigError("teacher loss '" + teacher_loss_name + "' cannot itself use a teacher");
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json losses = nlohmann::json::array();
  for (const auto& l : c.losses) losses.push_back({{"name", l.name}, {"spec", l.spec}});
  j = nlohmann::json{{"generator", c.generator},
                     {"train", c.train},
                     {"losses", losses},
                     {"repeats", c.repeats},
                     {"teacher_loss_name", c.teacher_loss_name},
                     {"output_dir", c.output_dir},
                     {"include_oracle", c.include_oracle},
                     {"lambda_grid", c.lambda_grid}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::set<std::string> known{"generator", "train",      "losses",        "repeats",
                                           "teacher_loss_name", "output_dir", "include_oracle",
                                           "lambda_grid"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown experiment config key: " + key);
  }
  try {
    if (j.contains("generator")) c.generator = j.at("generator").get<GeneratorConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    if (j.contains("losses")) {
      c.losses.clear();
      for (const auto& entry : j.at("losses")) {
        if (entry.is_string()) {
          c.losses.push_back(roster_loss(entry.get<std::string>()));
        } else {
          c.losses.push_back({entry.at("name").get<std::string>(), entry.at("spec").get<LossSpec>()});
        }
      }
    }
    if (j.contains("repeats")) c.repeats = j.at("repeats").get<std::size_t>();
    if (j.contains("teacher_loss_name")) c.teacher_loss_name = j.at("teacher_loss_name").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("include_oracle")) c.include_oracle = j.at("include_oracle").get<bool>();
    if (j.contains("lambda_grid")) c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

GeneratorConfig repeat_generator(const ExperimentConfig& config, std::size_t repeat_index) {
  GeneratorConfig g = config.generator;
  g.seed = CounterRng(config.generator.seed).split(repeat_index).key();
  return g;
}

TrainConfig repeat_train(const ExperimentConfig& config, std::size_t repeat_index) {
  TrainConfig t = config.train;
  // every model in a repeat starts from the same initialization
  t.seed = CounterRng(repeat_generator(config, repeat_index).seed)
               .split(0x747261696eULL)
               .split(config.train.seed)
               .key();
  return t;
}

RepeatResult run_repeat(const ExperimentConfig& config, std::size_t repeat_index) {
  const std::string where = "repeat " + std::to_string(repeat_index) + ": ";
  try {
    config.validate();
    const auto losses = config.resolved_losses();
    const auto gen = repeat_generator(config, repeat_index);
    const auto train_cfg = repeat_train(config, repeat_index);
    const auto data = generate_training_set(gen);
    const auto auctions = generate_eval_auctions(data.world, gen);

    std::vector<std::optional<MlpModel>> models(losses.size());
    std::optional<CtrProvider> teacher;
    const auto teacher_it =
        std::find_if(losses.begin(), losses.end(),
                     [&](const NamedLoss& l) { return l.name == config.teacher_loss_name; });
    if (teacher_it != losses.end()) {
      const auto k = static_cast<std::size_t>(teacher_it - losses.begin());
      models[k] = train(data.train, teacher_it->spec, train_cfg);
      teacher = as_provider(*models[k]);
    }
    // baselines, then teacher consumers
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < losses.size(); ++k) {
        const auto& loss = losses[k];
        if (models[k] || loss.spec.uses_teacher != (pass == 1)) continue;
        models[k] = train(data.train, loss.spec, train_cfg, loss.spec.uses_teacher ? &*teacher : nullptr);
      }
    }

    std::vector<NamedProvider> providers;
    for (std::size_t k = 0; k < losses.size(); ++k) {
      providers.push_back({losses[k].name, as_provider(*models[k])});
    }
    if (config.include_oracle) providers.push_back({kOracleModelName, ground_truth_provider()});

    auto evaluation = eval_welfare(providers, auctions, SlotConfig{}, true);
    RepeatResult result;
    result.repeat = repeat_index;
    result.reports = std::move(evaluation.reports);
    result.per_auction_welfare = std::move(evaluation.per_auction_welfare);
    for (const auto& a : auctions) result.optimal_welfare.push_back(optimal_welfare(a, SlotConfig{}));
    return result;
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const InputError& e) {
    throw InputError(where + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(where + e.what());
  }
}

void to_json(nlohmann::json& j, const ModelSummary& s) {
  j = nlohmann::json{{"model", s.model_name},
                     {"mean_welfare", s.mean_welfare},
                     {"se_of_difference", s.se_of_difference},
                     {"mean_difference_vs_roster", s.mean_difference_vs_roster},
                     {"repeats_above_roster", s.repeats_above_roster},
                     {"mean_auc_loss", s.mean_auc_loss},
                     {"mean_logloss", s.mean_logloss}};
}

namespace {

struct PooledWelfare {
  std::vector<std::string> names;
  /// models x (repeats * auctions)
  std::vector<std::vector<double>> pooled;
  /// models x repeats, per-repeat mean welfare
  std::vector<std::vector<double>> repeat_means;
};

std::vector<ModelSummary> summarize_pooled(const PooledWelfare& data) {
  const std::size_t models = data.names.size();
  std::vector<ModelSummary> out(models);
  if (models == 0) return out;
  const auto se = models >= 2 && data.pooled[0].size() >= 2 ? se_of_difference(data.pooled)
                                                            : std::vector<double>(models, 0.0);
  const std::size_t units = data.pooled[0].size();
  for (std::size_t m = 0; m < models; ++m) {
    auto& s = out[m];
    s.model_name = data.names[m];
    s.se_of_difference = se[m];
    double total = 0.0, diff = 0.0;
    for (std::size_t a = 0; a < units; ++a) {
      total += data.pooled[m][a];
      double roster = 0.0;
      for (std::size_t o = 0; o < models; ++o) roster += data.pooled[o][a];
      diff += data.pooled[m][a] - roster / static_cast<double>(models);
    }
    s.mean_welfare = total / static_cast<double>(units);
    s.mean_difference_vs_roster = diff / static_cast<double>(units);
    for (std::size_t r = 0; r < data.repeat_means[m].size(); ++r) {
      double roster = 0.0;
      for (std::size_t o = 0; o < models; ++o) roster += data.repeat_means[o][r];
      if (data.repeat_means[m][r] > roster / static_cast<double>(models)) ++s.repeats_above_roster;
    }
  }
  return out;
}

}  // namespace

std::vector<ModelSummary> summarize(const std::vector<RepeatResult>& repeats) {
  if (repeats.empty()) return {};
  PooledWelfare data;
  const std::size_t models = repeats[0].reports.size();
  for (const auto& r : repeats[0].reports) data.names.push_back(r.model_name);
  data.pooled.resize(models);
  data.repeat_means.resize(models);
  for (const auto& rep : repeats) {
    if (rep.reports.size() != models) throw InputError("repeats disagree on the model list");
    for (std::size_t m = 0; m < models; ++m) {
      const auto& w = rep.per_auction_welfare[m];
      data.pooled[m].insert(data.pooled[m].end(), w.begin(), w.end());
      data.repeat_means[m].push_back(rep.reports[m].mean_welfare);
    }
  }
  auto out = summarize_pooled(data);
  for (std::size_t m = 0; m < models; ++m) {
    double auc = 0.0, ll = 0.0;
    for (const auto& rep : repeats) {
      auc += rep.reports[m].auc_loss;
      ll += rep.reports[m].logloss;
    }
    out[m].mean_auc_loss = auc / static_cast<double>(repeats.size());
    out[m].mean_logloss = ll / static_cast<double>(repeats.size());
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs, bool quiet) {
  config.validate();
  if (jobs == 0) throw ConfigError("jobs must be positive");
  const std::size_t n = config.repeats;
  std::vector<std::optional<RepeatResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      try {
        results[r] = run_repeat(config, r);
        if (!quiet) {
          std::lock_guard lock(log_mutex);
          std::cerr << "repeat " << r + 1 << "/" << n << " done\n";
        }
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(jobs, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ExperimentResult out;
  for (auto& r : results) out.repeats.push_back(std::move(*r));
  out.models = summarize(out.repeats);
  return out;
}

void write_plot_data(const fs::path& path, const std::vector<ModelSummary>& models) {
  auto out = open_output(path);
  out << "model,mean_welfare,se\n";
  for (const auto& m : models) {
    out << csv_escape(m.model_name) << ',' << format_double(m.mean_welfare) << ','
        << format_double(m.se_of_difference) << '\n';
  }
}

void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "welfare.csv");
    out << "model,repeat,mean_welfare\n";
    for (const auto& rep : result.repeats) {
      for (const auto& r : rep.reports) {
        out << csv_escape(r.model_name) << ',' << rep.repeat << ',' << format_double(r.mean_welfare)
            << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "metrics.csv");
    out << "model,repeat,auc_loss,logloss\n";
    for (const auto& rep : result.repeats) {
      for (const auto& r : rep.reports) {
        out << csv_escape(r.model_name) << ',' << rep.repeat << ',' << format_double(r.auc_loss)
            << ',' << format_double(r.logloss) << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "auction_welfare.csv");
    out << "model,repeat,auction,welfare\n";
    for (const auto& rep : result.repeats) {
      for (std::size_t m = 0; m < rep.reports.size(); ++m) {
        const auto& name = csv_escape(rep.reports[m].model_name);
        for (std::size_t a = 0; a < rep.per_auction_welfare[m].size(); ++a) {
          out << name << ',' << rep.repeat << ',' << a << ','
              << format_double(rep.per_auction_welfare[m][a]) << '\n';
        }
      }
    }
  }
  {
    auto out = open_output(dir / "paired.csv");
    out << "model,mean_difference_vs_roster,se_of_difference,repeats_above_roster\n";
    for (const auto& m : result.models) {
      out << csv_escape(m.model_name) << ',' << format_double(m.mean_difference_vs_roster) << ','
          << format_double(m.se_of_difference) << ',' << m.repeats_above_roster << '\n';
    }
  }
  write_plot_data(dir / "plot_data.csv", result.models);

  double optimal = 0.0;
  std::size_t auctions = 0;
  for (const auto& rep : result.repeats) {
    for (double w : rep.optimal_welfare) optimal += w;
    auctions += rep.optimal_welfare.size();
  }
  nlohmann::json summary{{"repeats", result.repeats.size()},
                         {"auctions_per_repeat", config.generator.n_eval_auctions},
                         {"mean_optimal_welfare", auctions ? optimal / static_cast<double>(auctions) : 0.0},
                         {"models", result.models}};
  open_output(dir / "summary.json") << summary.dump(2) << '\n';
  open_output(dir / "config.json") << nlohmann::json(config).dump(2) << '\n';
}

std::vector<ModelSummary> summarize_auction_welfare_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "model,repeat,auction,welfare") {
    throw InputError(path.string() + ": expected header model,repeat,auction,welfare");
  }
  // model -> repeat -> auction -> welfare, model order of first appearance
  std::vector<std::string> names;
  std::map<std::string, std::map<std::size_t, std::map<std::size_t, double>>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      const auto repeat = static_cast<std::size_t>(std::stoull(fields[1]));
      const auto auction = static_cast<std::size_t>(std::stoull(fields[2]));
      const double w = std::stod(fields[3]);
      if (!cells.contains(fields[0])) names.push_back(fields[0]);
      cells[fields[0]][repeat][auction] = w;
    } catch (const std::logic_error&) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  if (names.empty()) throw InputError(path.string() + ": no rows");

  PooledWelfare data;
  data.names = names;
  const auto& layout = cells[names[0]];
  for (const auto& name : names) {
    const auto& per_repeat = cells[name];
    if (per_repeat.size() != layout.size()) throw InputError("models cover different repeats");
    std::vector<double> pooled, means;
    for (const auto& [repeat, per_auction] : per_repeat) {
      if (!layout.contains(repeat) || layout.at(repeat).size() != per_auction.size()) {
        throw InputError("models cover different auctions in repeat " + std::to_string(repeat));
      }
      double total = 0.0;
      for (const auto& [_, w] : per_auction) {
        pooled.push_back(w);
        total += w;
      }
      means.push_back(total / static_cast<double>(per_auction.size()));
    }
    data.pooled.push_back(std::move(pooled));
    data.repeat_means.push_back(std::move(means));
  }
  return summarize_pooled(data);
}

}  // namespace auctionrank
