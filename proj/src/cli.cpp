#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "auctionrank/errors.hpp"
#include "auctionrank/numeric.hpp"
#include "auctionrank/pipeline.hpp"
#include "auctionrank/theory.hpp"

namespace auctionrank {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;
  std::size_t jobs = 1;
  bool quiet = false;
};

ExperimentConfig base_config(const GlobalOptions& g) {
  ExperimentConfig config = g.config_path.empty() ? ExperimentConfig{} : load_experiment_config(g.config_path);
  if (!g.out_dir.empty()) config.output_dir = g.out_dir;
  return config;
}

fs::path output_dir(const GlobalOptions& g, const ExperimentConfig& config) {
  fs::path dir = g.out_dir.empty() ? fs::path(config.output_dir) : fs::path(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + " is not valid JSON: " + e.what());
  }
}

// --- gen --------------------------------------------------------------------

int cmd_gen(const GlobalOptions& g) {
  auto config = base_config(g);
  if (g.seed) config.generator.seed = *g.seed;
  config.generator.validate();
  const auto dir = output_dir(g, config);
  const auto data = generate_training_set(config.generator);
  const auto auctions = generate_eval_auctions(data.world, config.generator);

  save_jsonl((dir / "train.jsonl").string(), data.train);
  {
    auto out = open_output(dir / "eval.jsonl");
    for (const auto& a : auctions) write_jsonl(out, a);
  }
  nlohmann::json manifest{{"generator", config.generator},
                          {"world", data.world},
                          {"train_file", "train.jsonl"},
                          {"eval_file", "eval.jsonl"},
                          {"n_train", data.train.size()},
                          {"n_eval_auctions", auctions.size()},
                          {"ads_per_auction", config.generator.ads_per_auction}};
  open_output(dir / "manifest.json") << manifest.dump(2) << '\n';
  if (!g.quiet) {
    std::cerr << "wrote " << data.train.size() << " training ads and " << auctions.size()
              << " auctions to " << dir.string() << '\n';
  }
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string loss = "logistic";
  std::string loss_spec;
  std::string teacher;
  std::string name;
};

int cmd_train(const GlobalOptions& g, const TrainOptions& o) {
  auto config = base_config(g);
  if (g.seed) config.train.seed = *g.seed;
  NamedLoss loss = o.loss_spec.empty()
                       ? roster_loss(o.loss)
                       : NamedLoss{o.loss, read_json_file(o.loss_spec).get<LossSpec>()};
  loss.spec.validate();
  const auto data = load_jsonl(o.data);

  std::optional<CtrProvider> teacher;
  if (loss.spec.uses_teacher) {
    if (o.teacher.empty()) throw ConfigError("loss " + loss.name + " needs --teacher");
    teacher = as_provider(load_model(o.teacher));
  }
  const auto model = train(data, loss.spec, config.train, teacher ? &*teacher : nullptr);
  const auto path = output_dir(g, config) / ((o.name.empty() ? loss.name : o.name) + ".json");
  save_model(path.string(), model);
  if (!g.quiet) std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalOptions {
  std::string manifest;
  std::vector<std::string> models;
  bool realized = false;
  std::vector<double> slots{1.0};
};

std::vector<AuctionBatch> load_auctions(const std::string& manifest_path) {
  const auto manifest = read_json_file(manifest_path);
  const auto dir = fs::path(manifest_path).parent_path();
  std::size_t per_auction = 0, count = 0;
  std::string eval_file;
  try {
    per_auction = manifest.at("ads_per_auction").get<std::size_t>();
    count = manifest.at("n_eval_auctions").get<std::size_t>();
    eval_file = manifest.at("eval_file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad manifest " + manifest_path + ": " + e.what());
  }
  const auto all = load_jsonl((dir / eval_file).string());
  if (per_auction == 0 || all.size() != per_auction * count) {
    throw InputError("eval file holds " + std::to_string(all.size()) + " ads, manifest expects " +
                     std::to_string(per_auction * count));
  }
  std::vector<AuctionBatch> auctions(count);
  for (std::size_t a = 0; a < count; ++a) {
    auctions[a].ads.assign(all.ads.begin() + static_cast<long>(a * per_auction),
                           all.ads.begin() + static_cast<long>((a + 1) * per_auction));
  }
  return auctions;
}

int cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  auto config = base_config(g);
  const auto auctions = load_auctions(o.manifest);
  std::vector<NamedProvider> providers;
  for (const auto& spec : o.models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--model expects name=path, got " + spec);
    const auto name = spec.substr(0, eq);
    providers.push_back({name, name == kOracleModelName && spec.substr(eq + 1) == "truth"
                                   ? ground_truth_provider()
                                   : as_provider(load_model(spec.substr(eq + 1)))});
  }
  if (providers.empty()) throw InputError("eval needs at least one --model");
  const auto evaluation = eval_welfare(providers, auctions, SlotConfig(o.slots), !o.realized);

  const auto dir = output_dir(g, config);
  {
    auto out = open_output(dir / "eval.csv");
    write_reports_csv(out, evaluation.reports);
  }
  open_output(dir / "eval.json") << nlohmann::json(evaluation.reports).dump(2) << '\n';
  if (!g.quiet) {
    for (const auto& r : evaluation.reports) {
      std::cout << r.model_name << " mean_welfare=" << format_double(r.mean_welfare)
                << " se=" << format_double(r.welfare_se_of_difference) << '\n';
    }
  }
  return 0;
}

// --- verify -----------------------------------------------------------------

int cmd_verify(const GlobalOptions& g, std::size_t instances) {
  TheorySuiteConfig suite;
  if (g.seed) suite.seed = *g.seed;
  suite.instances = instances;
  const auto reports = run_theory_suite(suite);

  std::size_t failed = 0;
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!g.out_dir.empty()) {
    fs::create_directories(g.out_dir);
    file = open_output(fs::path(g.out_dir) / "theory.jsonl");
    out = &file;
  }
  for (const auto& r : reports) {
    if (!r.passed) ++failed;
    *out << nlohmann::json(r).dump() << '\n';
  }
  if (!g.quiet) {
    std::cerr << reports.size() - failed << "/" << reports.size() << " checks passed\n";
  }
  return failed == 0 ? 0 : 2;
}

// --- experiment / report ----------------------------------------------------

void print_summary(const std::vector<ModelSummary>& models) {
  for (const auto& m : models) {
    std::cout << m.model_name << " mean_welfare=" << format_double(m.mean_welfare)
              << " diff_vs_roster=" << format_double(m.mean_difference_vs_roster)
              << " se=" << format_double(m.se_of_difference) << '\n';
  }
}

int cmd_experiment(const GlobalOptions& g, std::optional<std::size_t> repeats, bool oracle) {
  auto config = base_config(g);
  if (g.seed) config.generator.seed = *g.seed;
  if (repeats) config.repeats = *repeats;
  if (oracle) config.include_oracle = true;
  const auto dir = output_dir(g, config);
  const auto result = run_experiment(config, g.jobs, g.quiet);
  write_experiment_outputs(result, config, dir);
  {
    auto out = open_output(dir / "theory.jsonl");
    for (const auto& r : run_theory_suite(TheorySuiteConfig{config.generator.seed})) {
      out << nlohmann::json(r).dump() << '\n';
    }
  }
  if (!g.quiet) print_summary(result.models);
  return 0;
}

int cmd_report(const GlobalOptions& g, const std::string& input_dir) {
  const auto models = summarize_auction_welfare_csv(fs::path(input_dir) / "auction_welfare.csv");
  const fs::path dir = g.out_dir.empty() ? fs::path(input_dir) : fs::path(g.out_dir);
  fs::create_directories(dir);
  write_plot_data(dir / "plot_data.csv", models);
  if (!g.quiet) print_summary(models);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Welfare-aware CTR training, auction simulation and bound checking", "auctionrank"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--config", g.config_path, "Experiment config JSON");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset and eval auctions");

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  train_cmd->add_option("--data", train_opts.data, "Training ads (JSON lines)")->required();
  train_cmd->add_option("--loss", train_opts.loss, "Loss name from the roster");
  train_cmd->add_option("--loss-spec", train_opts.loss_spec, "LossSpec JSON file");
  train_cmd->add_option("--teacher", train_opts.teacher, "Teacher model JSON");
  train_cmd->add_option("--name", train_opts.name, "Output model name");

  EvalOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate models on generated auctions");
  eval_cmd->add_option("--manifest", eval_opts.manifest, "manifest.json written by gen")->required();
  eval_cmd->add_option("--model", eval_opts.models, "name=path (oracle=truth for ground truth)");
  eval_cmd->add_flag("--realized", eval_opts.realized, "Score realized eCPM b*y");
  eval_cmd->add_option("--slots", eval_opts.slots, "Position multipliers")->delimiter(',');

  std::size_t instances = TheorySuiteConfig{}.instances;
  auto* verify = app.add_subcommand("verify", "Run the bound-checking suite");
  verify->add_option("--instances", instances, "Instances per randomized check")
      ->check(CLI::PositiveNumber);

  std::size_t repeats = 0;
  bool oracle = false;
  auto* experiment = app.add_subcommand("experiment", "Run the synthetic welfare study");
  auto* repeats_opt = experiment->add_option("--repeats", repeats, "Number of repeats")
                          ->check(CLI::PositiveNumber);
  experiment->add_flag("--oracle", oracle, "Add a ground-truth CTR model");

  std::string report_in;
  auto* report = app.add_subcommand("report", "Rebuild plot data from experiment output");
  report->add_option("--in", report_in, "Experiment output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*gen) return cmd_gen(g);
    if (*train_cmd) return cmd_train(g, train_opts);
    if (*eval_cmd) return cmd_eval(g, eval_opts);
    if (*verify) return cmd_verify(g, instances);
    if (*experiment) {
      return cmd_experiment(g, repeats_opt->count() ? std::optional(repeats) : std::nullopt, oracle);
    }
    if (*report) return cmd_report(g, report_in);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace auctionrank
