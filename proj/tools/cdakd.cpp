// Command-line front end: train, suite, summarize, flops.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "cdakd/cdakd.hpp"

namespace {

using namespace cdakd;

FlopsConfig read_flops_config(const fs::path& path) {
  const ConfigFile cf = read_config_file(path);
  require(cf.sections.empty(), "flops config takes plain key = value lines");
  FlopsConfig c;
  const std::map<std::string, double*> fields = {{"b", &c.batch},   {"T", &c.env_steps}, {"I", &c.updates},
                                                 {"k", &c.heads},   {"E", &c.encoder},   {"M", &c.head_mlp}};
  for (const auto& [k, v] : cf.globals) {
    const auto it = fields.find(k);
    require(it != fields.end(), "unknown flops key '" + k + "' (expected b, T, I, k, E, M)");
    *it->second = parse_real(k, v);
  }
  return c;
}

ExperimentConfig read_train_config(const fs::path& path, const std::vector<std::string>& overrides) {
  const ConfigFile cf = read_config_file(path);
  require(cf.sections.size() <= 1, "train takes a single experiment; use `suite` for files with several sections");
  auto entries = cf.globals;
  std::string name = path.stem().string();
  if (!cf.sections.empty()) {
    name = cf.sections.front().name;
    for (const auto& e : cf.sections.front().entries) {
      require(e.first != "sweep", "train does not expand sweeps; use `suite`");
      entries.push_back(e);
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    require(eq != std::string::npos, "--override expects key=value, got '" + o + "'");
    entries.emplace_back(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return build_experiment(entries, name);
}

int report(const std::vector<ExperimentResult>& results) {
  int status = 0;
  for (const auto& r : results) {
    for (const auto& run : r.runs) {
      if (run.aborted) {
        std::cerr << r.config.name << " seed " << run.seed << " aborted: " << run.message << '\n';
        status = 3;
      }
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context division and knowledge distillation for DQN"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> overrides;
  std::size_t jobs = 1;
  auto* train = app.add_subcommand("train", "Train one experiment over its seeds");
  train->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seeds, "Seed(s), replacing the config's seed list");
  train->add_option("--override", overrides, "key=value applied after the config file");
  train->add_option("--jobs", jobs, "Concurrent seeds")->check(CLI::PositiveNumber);

  std::string suite_path;
  auto* suite = app.add_subcommand("suite", "Run every experiment in a suite file and summarize");
  suite->add_option("--file", suite_path, "Suite file")->required()->check(CLI::ExistingFile);
  suite->add_option("--jobs", jobs, "Concurrent (experiment, seed) runs")->check(CLI::PositiveNumber);

  std::string dir;
  auto* summ = app.add_subcommand("summarize", "Aggregate finished runs into summary.json");
  summ->add_option("--dir", dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  std::string flops_path;
  auto* flops = app.add_subcommand("flops", "Training FLOPs for the pixel pipeline");
  flops->add_option("--config", flops_path, "File with b, T, I, k, E, M")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ExperimentConfig cfg = read_train_config(config_path, overrides);
      if (!seeds.empty()) cfg.seeds = seeds;
      const auto results = run_experiments({cfg}, jobs);
      const int status = report(results);
      std::cout << format_table(summarize(cfg.output));
      return status;
    }
    if (*suite) {
      const ConfigFile cf = read_config_file(suite_path);
      fs::path root = fs::path("runs") / fs::path(suite_path).stem();
      for (const auto& [k, v] : cf.globals)
        if (k == "output") root = v;
      const auto results = run_experiments(expand_suite(cf, root), jobs);
      const int status = report(results);
      std::cout << format_table(summarize(root));
      return status;
    }
    if (*summ) {
      std::cout << format_table(summarize(dir));
      return 0;
    }
    if (*flops) {
      std::cout << format_double(count_flops(read_flops_config(flops_path))) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
