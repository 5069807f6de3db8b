#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cdakd/harness.hpp"

using namespace cdakd;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cdakd_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig tiny(const fs::path& out, const std::string& variant = "cdakd") {
  auto cfg = build_experiment({{"env", "cartpole-v0"},
                               {"variant", variant},
                               {"steps", "1200"},
                               {"min_history", "200"},
                               {"target_period", "200"},
                               {"eps_decay", "600"},
                               {"eval_window", "300"},
                               {"final_span", "600"},
                               {"aei_every", "100"},
                               {"recent_capacity", "50"},
                               {"seeds", "1,2"}},
                              "tiny");
  cfg.output = out;
  return cfg;
}

EvalRecord rec(std::size_t step, double r) {
  EvalRecord e;
  e.step = step;
  e.returns = r;
  return e;
}

}  // namespace

TEST(Config, ParsesGlobalsSectionsAndComments) {
  const auto cf = parse_config_text(
      "# suite\n"
      "env = cartpole-v0   # trailing\n"
      "\n"
      "[a]\n"
      "variant = dqn\n"
      "[ b ]\n"
      "k=5\n");
  ASSERT_EQ(cf.globals.size(), 1u);
  EXPECT_EQ(cf.globals[0], std::make_pair(std::string("env"), std::string("cartpole-v0")));
  ASSERT_EQ(cf.sections.size(), 2u);
  EXPECT_EQ(cf.sections[1].name, "b");
  EXPECT_EQ(cf.sections[1].entries[0].second, "5");
}

TEST(Config, GrammarErrors) {
  EXPECT_THROW(parse_config_text("[a\n"), UsageError);
  EXPECT_THROW(parse_config_text("[]\n"), UsageError);
  EXPECT_THROW(parse_config_text("just words\n"), UsageError);
  EXPECT_THROW(parse_config_text(" = 3\n"), UsageError);
  EXPECT_THROW(parse_config_text("[a]\n[a]\n"), UsageError);
}

TEST(Config, KeysAndValues) {
  EXPECT_THROW(build_experiment({{"bogus", "1"}}), UsageError);
  EXPECT_THROW(build_experiment({{"k", "two"}}), UsageError);
  EXPECT_THROW(build_experiment({{"lr", "fast"}}), UsageError);
  EXPECT_THROW(build_experiment({{"warm_start", "maybe"}}), UsageError);
  EXPECT_THROW(build_experiment({{"env", "mountaincar"}}), UsageError);
  EXPECT_THROW(build_experiment({{"variant", "ppo"}}), UsageError);
  const auto c = build_experiment({{"k", "7"}, {"lambda", "0.25"}, {"seeds", "4, 5,6"}}, "x");
  EXPECT_EQ(c.hp.k, 7u);
  EXPECT_FALSE(c.hp.lambda.scheduled);
  EXPECT_EQ(c.hp.lambda.value, 0.25);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_EQ(c.output, fs::path("runs") / "x");
}

TEST(Config, EnvironmentDefaults) {
  const auto v0 = build_experiment({});
  EXPECT_EQ(v0.env, "cartpole-v0");
  EXPECT_EQ(v0.hp.total_steps, 400000u);
  EXPECT_EQ(v0.hp.epsilon_decay_steps, 40000u);
  EXPECT_EQ(v0.hp.buffer_capacity, 50000u);
  EXPECT_EQ(v0.hp.k, 3u);
  EXPECT_EQ(v0.hp.batch_size, 32u);
  EXPECT_EQ(v0.hp.target_period, 1000u);
  EXPECT_EQ(v0.hp.min_history, 1000u);
  EXPECT_EQ(v0.hp.learning_rate, 5e-4);
  EXPECT_EQ(v0.hp.epsilon_final, 0.02);
  EXPECT_EQ(v0.floor(), 0.0);
  const auto v1 = build_experiment({{"env", "cartpole-v1"}});
  EXPECT_EQ(v1.hp.total_steps, 1000000u);
  EXPECT_EQ(v1.hp.epsilon_decay_steps, 100000u);
  const auto acro = build_experiment({{"env", "acrobot-v1"}});
  EXPECT_EQ(acro.hp.total_steps, 1000000u);
  EXPECT_EQ(acro.floor(), -500.0);
  const auto pend = build_experiment({{"env", "pendulum-v0"}});
  EXPECT_EQ(pend.hp.total_steps, 400000u);
  EXPECT_EQ(pend.floor(), -2000.0);
  // Explicit keys win over defaults regardless of order.
  const auto o = build_experiment({{"steps", "5"}, {"env", "acrobot-v1"}});
  EXPECT_EQ(o.hp.total_steps, 5u);
}

TEST(Config, ValidationRules) {
  auto c = build_experiment({{"seeds", "1,1"}});
  EXPECT_THROW(c.validate(), UsageError);
  c = build_experiment({{"variant", "cdakd_re"}});
  EXPECT_THROW(c.validate(), UsageError);
  c = build_experiment({{"k", "0"}});
  EXPECT_THROW(c.validate(), UsageError);
  c = build_experiment({{"eval_window", "0"}});
  EXPECT_THROW(c.validate(), UsageError);
  EXPECT_NO_THROW(build_experiment({{"variant", "cdakd_re"}, {"env", "pixelgrid"}}).validate());
}

TEST(Suite, SweepExpandsPerValue) {
  const auto cf = parse_config_text(
      "env = cartpole-v0\noutput = ignored\n"
      "[ks]\nsweep = k:1,2,3,4,5\nvariant = cdakd\n"
      "[base]\nvariant = dqn\n");
  const auto cfgs = expand_suite(cf, "root");
  ASSERT_EQ(cfgs.size(), 6u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(cfgs[i].hp.k, i + 1);
    EXPECT_EQ(cfgs[i].name, "ks_k" + std::to_string(i + 1));
    EXPECT_EQ(cfgs[i].output, fs::path("root") / cfgs[i].name);
  }
  EXPECT_EQ(cfgs[5].hp.variant, Variant::kDqn);
  EXPECT_EQ(cfgs[5].output, fs::path("root") / "base");
  EXPECT_THROW(expand_suite(parse_config_text("[s]\nsweep = k\n"), "r"), UsageError);
}

TEST(Run, WritesSeedDirsAndManifest) {
  const auto out = scratch("run");
  const auto res = run_experiment(tiny(out));
  ASSERT_EQ(res.runs.size(), 2u);
  EXPECT_FALSE(res.any_aborted());
  for (auto s : {"seed_1", "seed_2"}) {
    EXPECT_TRUE(fs::exists(out / s / "eval.csv"));
    EXPECT_TRUE(fs::exists(out / s / "centroids.csv"));
    EXPECT_TRUE(fs::exists(out / s / "checkpoint" / "online.ckpt"));
  }
  ASSERT_TRUE(fs::exists(out / "manifest.txt"));
  const auto kv = read_manifest(out / "manifest.txt");
  EXPECT_EQ(kv.at("seeds"), "1,2");
  EXPECT_EQ(kv.at("variant"), "cdakd");
  EXPECT_EQ(kv.at("seed.1.status"), "ok");
  EXPECT_TRUE(kv.count("assumed.optimizer"));
  EXPECT_TRUE(kv.count("seed.2.rng.replay"));

  std::ifstream is(out / "seed_1" / "eval.csv");
  const auto recs = read_eval_csv(is);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].step, 300u);
  EXPECT_EQ(recs[3].step, 1200u);
  EXPECT_TRUE(std::isnan(recs[0].loss_ori) || recs[0].loss_ori >= 0.0);
  EXPECT_FALSE(std::isnan(recs[3].aei));
  // Every window of CartPole has finished episodes at these lengths.
  for (const auto& r : recs) EXPECT_FALSE(std::isnan(r.returns));

  // One centroid snapshot of k rows per target sync.
  const std::string cent = slurp(out / "seed_1" / "centroids.csv");
  EXPECT_EQ(std::count(cent.begin(), cent.end(), '\n'), 1 + 3 * 6);
}

TEST(Run, RerunIsByteIdenticalAndParallelMatchesSerial) {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  run_experiment(tiny(a), 1);
  run_experiment(tiny(b), 2);
  for (auto s : {"seed_1", "seed_2"}) {
    EXPECT_EQ(slurp(a / s / "eval.csv"), slurp(b / s / "eval.csv"));
    EXPECT_EQ(slurp(a / s / "centroids.csv"), slurp(b / s / "centroids.csv"));
  }
  run_experiment(tiny(a), 1);
  EXPECT_EQ(slurp(a / "seed_1" / "eval.csv"), slurp(b / "seed_1" / "eval.csv"));
}

TEST(Run, SeedsDiffer) {
  const auto out = scratch("seeds");
  run_experiment(tiny(out));
  EXPECT_NE(slurp(out / "seed_1" / "eval.csv"), slurp(out / "seed_2" / "eval.csv"));
}

TEST(Run, InvalidConfigWritesNothing) {
  const auto out = scratch("invalid");
  fs::remove_all(out);
  auto good = tiny(out / "good");
  auto bad = tiny(out / "bad");
  bad.env = "mountaincar";
  EXPECT_THROW(run_experiments({good, bad}), UsageError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Run, UnwritableOutputIsError) {
  const auto out = scratch("unwritable");
  std::ofstream(out / "file") << "x";
  auto cfg = tiny(out / "file" / "sub");
  EXPECT_THROW(run_experiment(cfg), UsageError);
}

TEST(Summary, HighestMeanAndStdExamples) {
  auto row = summarize_curves("a", "cartpole-v0", "cdakd", 100, 3, 0.0, 10,
                              {{rec(1, 3), rec(2, 5), rec(3, 4)}, {rec(1, 5), rec(2, 4), rec(3, 3)}});
  EXPECT_EQ(row.highest_mean, 5.0);
  EXPECT_EQ(row.highest_std, 0.0);
  row = summarize_curves("a", "cartpole-v0", "cdakd", 100, 3, 0.0, 10, {{rec(1, 4)}, {rec(1, 6)}});
  EXPECT_EQ(row.highest_mean, 5.0);
  EXPECT_EQ(row.highest_std, 1.0);
}

TEST(Summary, DeteriorationOfMeanCurve) {
  auto row = summarize_curves("a", "cartpole-v0", "dqn", 100, 1, 0.0, 10,
                              {{rec(1, 1), rec(2, 2), rec(3, 3)}, {rec(1, 2), rec(2, 3), rec(3, 4)}});
  EXPECT_EQ(row.deterioration, 0.0);
  EXPECT_EQ(row.mean_curve, (std::vector<double>{1.5, 2.5, 3.5}));
  row = summarize_curves("a", "cartpole-v0", "dqn", 100, 1, 0.0, 10, {{rec(1, 10), rec(2, 5), rec(3, 20), rec(4, 15)}});
  EXPECT_EQ(row.deterioration, 0.5);
}

TEST(Summary, FinalWindowMean) {
  const std::vector<EvalRecord> r{rec(100, 1), rec(200, 2), rec(300, 4), rec(400, NAN), rec(500, 6)};
  EXPECT_EQ(final_window_mean(r, 100), 6.0);
  EXPECT_EQ(final_window_mean(r, 300), 5.0);
  EXPECT_EQ(final_window_mean(r, 1000), 13.0 / 4.0);
}

TEST(Summary, ReadsRunsAndWritesJson) {
  const auto out = scratch("summary");
  run_experiment(tiny(out / "exp"));
  const auto table = summarize(out);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].name, "tiny");
  EXPECT_EQ(table[0].seeds, 2u);
  EXPECT_EQ(table[0].k, 3u);
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["variant"], "cdakd");
  EXPECT_EQ(j[0]["highest_per_seed"].size(), 2u);
  EXPECT_FALSE(format_table(table).empty());
}

TEST(Summary, EmptyDirectoryIsError) {
  EXPECT_THROW(summarize(scratch("empty")), UsageError);
  EXPECT_THROW(summarize(scratch("empty") / "missing"), UsageError);
}

#ifdef CDAKD_CLI_PATH
namespace {
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CDAKD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(Cli, TrainSummarizeFlops) {
  const auto dir = scratch("cli");
  std::ofstream(dir / "exp.cfg") << "env = cartpole-v0\nsteps = 600\nmin_history = 100\neval_window = 200\n"
                                    "target_period = 100\noutput = "
                                 << (dir / "out").string() << "\n";
  EXPECT_EQ(run_cli("train --config " + (dir / "exp.cfg").string() + " --seed 3 --seed 4", dir / "log1"), 0)
      << slurp(dir / "log1");
  EXPECT_TRUE(fs::exists(dir / "out" / "seed_3" / "eval.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "seed_4" / "eval.csv"));
  EXPECT_NE(slurp(dir / "log1").find("cartpole-v0"), std::string::npos);

  EXPECT_EQ(run_cli("summarize --dir " + (dir / "out").string(), dir / "log2"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));

  std::ofstream(dir / "flops.cfg") << "b = 32\nT = 1e7\nI = 2.5e6\nk = 4\nE = 28.582e6\nM = 3.215e6\n";
  EXPECT_EQ(run_cli("flops --config " + (dir / "flops.cfg").string(), dir / "log3"), 0);
  EXPECT_NEAR(std::stod(slurp(dir / "log3")), 1.396168e16, 1e-6 * 1.396168e16);
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = scratch("cli_err");
  std::ofstream(dir / "bad.cfg") << "env = mountaincar\n";
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.cfg").string(), dir / "log"), 2);
  std::ofstream(dir / "bad2.cfg") << "bogus = 1\n";
  EXPECT_EQ(run_cli("train --config " + (dir / "bad2.cfg").string(), dir / "log"), 2);
  std::ofstream(dir / "ok.cfg") << "steps = 10\n";
  EXPECT_EQ(run_cli("train --config " + (dir / "ok.cfg").string() + " --override nonsense", dir / "log"), 2);
  EXPECT_EQ(run_cli("summarize --dir " + dir.string(), dir / "log"), 2);
}
#endif

#ifdef CDAKD_CONFIG_DIR
TEST(ShippedConfigs, ParseAndValidate) {
  std::size_t suites = 0;
  for (const auto& entry : fs::directory_iterator(CDAKD_CONFIG_DIR)) {
    const auto cf = read_config_file(entry.path());
    if (entry.path().extension() == ".suite") {
      const auto cfgs = expand_suite(cf, "runs");
      EXPECT_FALSE(cfgs.empty()) << entry.path();
      for (const auto& c : cfgs) EXPECT_NO_THROW(c.validate()) << entry.path() << ' ' << c.name;
      ++suites;
    } else if (entry.path().filename() != "flops.cfg") {
      EXPECT_NO_THROW(build_experiment(cf.globals).validate()) << entry.path();
    }
  }
  EXPECT_GE(suites, 4u);
}
#endif
