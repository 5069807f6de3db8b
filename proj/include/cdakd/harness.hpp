#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdakd/agent.hpp"
#include "cdakd/env.hpp"
#include "cdakd/errors.hpp"
#include "cdakd/metrics.hpp"

namespace cdakd {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
//
// Grammar (one item per line, '#' starts a comment):
//   key = value          before any section: defaults shared by every section
//   [name]               starts an experiment section
//   key = value          inside a section: overrides for that experiment
//   sweep = key:v1,v2    inside a section: expands into one experiment per value

struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

struct ConfigFile {
  std::vector<std::pair<std::string, std::string>> globals;
  std::vector<ConfigSection> sections;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  std::set<std::string> names;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "config line " + std::to_string(lineno) + ": unterminated section");
      std::string name = trim(line.substr(1, line.size() - 2));
      require(!name.empty(), "config line " + std::to_string(lineno) + ": empty section name");
      require(names.insert(name).second, "config: duplicate section [" + name + "]");
      cfg.sections.push_back({name, {}});
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
    auto kv = std::make_pair(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    require(!kv.first.empty(), "config line " + std::to_string(lineno) + ": empty key");
    if (cfg.sections.empty())
      cfg.globals.push_back(std::move(kv));
    else
      cfg.sections.back().entries.push_back(std::move(kv));
  }
  return cfg;
}

inline ConfigFile read_config_file(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

struct ExperimentConfig {
  std::string name = "default";
  std::string env = "cartpole-v0";
  Hyperparams hp;
  std::vector<std::uint64_t> seeds = {0};
  std::size_t eval_window = 10000;
  std::size_t final_span = 100000;  // steps averaged into the final R_T statistic
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
  fs::path output = "runs/default";

  double floor() const {
    return make_env(env)->spec().return_floor;
  }

  void validate() const {
    require(is_known_env(env), "unknown environment '" + env + "'");
    hp.validate();
    require(!seeds.empty(), "seeds must be non-empty");
    require(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(), "seeds must be distinct");
    require(eval_window > 0, "eval_window must be positive");
    require(hp.total_steps > 0, "steps must be positive");
    if (hp.variant == Variant::kCdakdRe) require(env == "pixelgrid", "cdakd_re requires the pixelgrid environment");
  }
};

// Per-environment defaults: step budgets and eval windows for the classic
// tasks, a smaller setup for the pixel task.
inline void apply_env_defaults(ExperimentConfig& cfg) {
  Hyperparams& hp = cfg.hp;
  if (cfg.env == "cartpole-v1" || cfg.env == "acrobot-v1") {
    hp.total_steps = 1000000;
    hp.epsilon_decay_steps = 100000;
    cfg.eval_window = 20000;
  } else if (cfg.env == "pixelgrid") {
    hp.k = 4;
    hp.total_steps = 50000;
    hp.epsilon_decay_steps = 10000;
    hp.epsilon_final = 0.01;
    hp.learning_rate = 0.00025;
    hp.buffer_capacity = 2000;
    cfg.eval_window = 5000;
    cfg.final_span = 10000;
  } else {
    hp.total_steps = 400000;
    hp.epsilon_decay_steps = 40000;
    cfg.eval_window = 10000;
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && p == v.data() + v.size(), "config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const UsageError&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
  Hyperparams& hp = cfg.hp;
  if (key == "name") cfg.name = v;
  else if (key == "env") cfg.env = v;
  else if (key == "variant") hp.variant = parse_variant(v);
  else if (key == "k") hp.k = parse_u64(key, v);
  else if (key == "buffer") hp.buffer_capacity = parse_u64(key, v);
  else if (key == "batch") hp.batch_size = parse_u64(key, v);
  else if (key == "lr") hp.learning_rate = parse_real(key, v);
  else if (key == "gamma") hp.gamma = parse_real(key, v);
  else if (key == "target_period") hp.target_period = parse_u64(key, v);
  else if (key == "steps") hp.total_steps = parse_u64(key, v);
  else if (key == "eps_final") hp.epsilon_final = parse_real(key, v);
  else if (key == "eps_decay") hp.epsilon_decay_steps = parse_u64(key, v);
  else if (key == "min_history") hp.min_history = parse_u64(key, v);
  else if (key == "lambda") hp.lambda = v == "scheduled" ? LambdaMode{} : LambdaMode::fixed(parse_real(key, v));
  else if (key == "warm_start") hp.warm_start = parse_flag(key, v);
  else if (key == "aei_every") hp.aei_every = parse_u64(key, v);
  else if (key == "recent_capacity") hp.recent_capacity = parse_u64(key, v);
  else if (key == "partition_cell") hp.partition_cell = parse_real(key, v);
  else if (key == "initial_state_samples") hp.initial_state_samples = parse_u64(key, v);
  else if (key == "encoder_dim") hp.encoder_dim = parse_u64(key, v);
  else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& s : split_list(v)) cfg.seeds.push_back(parse_u64(key, s));
  } else if (key == "eval_window") cfg.eval_window = parse_u64(key, v);
  else if (key == "final_span") cfg.final_span = parse_u64(key, v);
  else if (key == "checkpoint_every") cfg.checkpoint_every = parse_u64(key, v);
  else if (key == "output") cfg.output = v;
  else throw UsageError("unknown config key '" + key + "'");
}

// Builds one experiment: environment defaults first, then entries in order.
inline ExperimentConfig build_experiment(const std::vector<std::pair<std::string, std::string>>& entries,
                                         const std::string& name = "default") {
  ExperimentConfig cfg;
  cfg.name = name;
  for (const auto& [k, v] : entries)
    if (k == "env") cfg.env = v;
  require(is_known_env(cfg.env), "unknown environment '" + cfg.env + "'");
  apply_env_defaults(cfg);
  for (const auto& [k, v] : entries) apply_key(cfg, k, v);
  if (cfg.output == "runs/default") cfg.output = fs::path("runs") / cfg.name;
  return cfg;
}

// Expands every section (and its sweep, if any) into experiments.
inline std::vector<ExperimentConfig> expand_suite(const ConfigFile& file, const fs::path& root) {
  std::vector<ExperimentConfig> out;
  for (const auto& sec : file.sections) {
    auto entries = file.globals;
    entries.erase(std::remove_if(entries.begin(), entries.end(), [](const auto& e) { return e.first == "output"; }),
                  entries.end());
    std::string sweep;
    for (const auto& e : sec.entries) {
      if (e.first == "sweep") sweep = e.second;
      else entries.push_back(e);
    }
    if (sweep.empty()) {
      auto cfg = build_experiment(entries, sec.name);
      if (std::none_of(sec.entries.begin(), sec.entries.end(), [](const auto& e) { return e.first == "output"; }))
        cfg.output = root / sec.name;
      out.push_back(std::move(cfg));
      continue;
    }
    const auto colon = sweep.find(':');
    require(colon != std::string::npos, "sweep must look like key:v1,v2,...");
    const std::string key = trim(sweep.substr(0, colon));
    for (const auto& value : split_list(sweep.substr(colon + 1))) {
      auto e = entries;
      e.emplace_back(key, value);
      const std::string name = sec.name + "_" + key + value;
      auto cfg = build_experiment(e, name);
      cfg.output = root / name;
      out.push_back(std::move(cfg));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<EvalRecord> records;
  bool aborted = false;
  std::string message;
  bool warm_start_jittered = false;
  std::uint64_t encoder_seed = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  bool any_aborted() const {
    return std::any_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.aborted; });
  }
};

inline fs::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.output / ("seed_" + std::to_string(seed));
}

// Trains one (config, seed) pair and writes eval.csv, centroids.csv and the
// final checkpoint into its seed directory.
inline RunResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunResult result;
  result.seed = seed;
  const fs::path dir = seed_dir(cfg, seed);
  fs::create_directories(dir);
  std::ofstream eval(dir / "eval.csv");
  std::ofstream cent(dir / "centroids.csv");
  eval << kEvalHeader << '\n';
  try {
    Agent agent = make_variant(cfg.hp, cfg.env, seed);
    result.encoder_seed = agent.encoder() ? agent.encoder()->seed() : 0;
    const auto& ctx = agent.context_model();
    if (ctx) write_centroid_header(cent, ctx->dim());

    std::vector<double> returns;
    double aei_sum = 0.0, ori_sum = 0.0, distill_sum = 0.0;
    std::size_t aei_n = 0, loss_n = 0;
    for (std::size_t t = 1; t <= cfg.hp.total_steps; ++t) {
      const StepMetrics m = agent.train_step();
      if (m.episode_return) returns.push_back(*m.episode_return);
      if (m.aei) {
        aei_sum += *m.aei;
        ++aei_n;
      }
      if (m.updated) {
        ori_sum += m.loss_ori;
        distill_sum += m.loss_distill;
        ++loss_n;
      }
      if (m.synced && ctx) write_centroid_snapshot(cent, m.step, *ctx);
      if (cfg.checkpoint_every > 0 && m.step % cfg.checkpoint_every == 0)
        agent.save(dir / ("checkpoint_" + std::to_string(m.step)));
      if (m.step % cfg.eval_window == 0) {
        EvalRecord r;
        r.step = m.step;
        r.seed = seed;
        r.variant = variant_name(cfg.hp.variant);
        r.env = cfg.env;
        r.episodes = returns.size();
        r.returns = returns.empty() ? NAN : avg_episode_return(returns);
        r.aei = aei_n ? aei_sum / aei_n : NAN;
        r.loss_ori = loss_n ? ori_sum / loss_n : NAN;
        r.loss_distill = loss_n ? distill_sum / loss_n : NAN;
        r.epsilon = m.epsilon;
        r.lambda = m.lambda;
        write_eval_row(eval, r);
        eval.flush();
        result.records.push_back(std::move(r));
        returns.clear();
        aei_sum = ori_sum = distill_sum = 0.0;
        aei_n = loss_n = 0;
      }
    }
    result.warm_start_jittered = agent.warm_start_jittered();
    agent.save(dir / "checkpoint");
  } catch (const RunAborted& e) {
    result.aborted = true;
    result.message = e.what();
    std::ofstream(dir / "aborted.txt") << e.what() << '\n';
  }
  return result;
}

// Runs tasks on up to `jobs` threads; results are stored by task index so
// the outcome does not depend on scheduling.
template <typename Task>
void run_parallel(std::size_t count, std::size_t jobs, Task&& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_manifest(const ExperimentResult& res) {
  const ExperimentConfig& c = res.config;
  const Hyperparams hp = normalize_variant(c.hp);
  std::ofstream os(c.output / "manifest.txt");
  os << "# cdakd run manifest\n";
  os << "created=" << utc_timestamp() << '\n';
  os << "name=" << c.name << "\nenv=" << c.env << "\nvariant=" << variant_name(hp.variant) << '\n';
  os << "k=" << hp.k << "\nbuffer=" << hp.buffer_capacity << "\nbatch=" << hp.batch_size << '\n';
  os << "lr=" << format_double(hp.learning_rate) << "\ngamma=" << format_double(hp.gamma) << '\n';
  os << "target_period=" << hp.target_period << "\nsteps=" << hp.total_steps << '\n';
  os << "eps_final=" << format_double(hp.epsilon_final) << "\neps_decay=" << hp.epsilon_decay_steps << '\n';
  os << "min_history=" << hp.min_history << '\n';
  os << "lambda=" << (hp.lambda.scheduled ? std::string("scheduled") : format_double(hp.lambda.value)) << '\n';
  os << "warm_start=" << (hp.warm_start ? "true" : "false") << "\naei_every=" << hp.aei_every << '\n';
  os << "recent_capacity=" << hp.recent_capacity << "\npartition_cell=" << format_double(hp.partition_cell) << '\n';
  os << "initial_state_samples=" << hp.initial_state_samples << "\nencoder_dim=" << hp.encoder_dim << '\n';
  os << "eval_window=" << c.eval_window << "\nfinal_span=" << c.final_span << '\n';
  os << "checkpoint_every=" << c.checkpoint_every << '\n';
  os << "floor=" << format_double(c.floor()) << '\n';
  os << "seeds=";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
  os << '\n';
  os << "assumed.optimizer=adam(beta1=0.9,beta2=0.999,eps=1e-8)\n";
  os << "assumed.init=uniform(-1/sqrt(fan_in),1/sqrt(fan_in))\n";
  os << "assumed.precision=float64\n";
  if (c.env == "pendulum-v0") os << "assumed.pendulum_actions=9 evenly spaced torques in [-2,2]\n";
  os << "assumed.distill_reduction=mean over actions, non-active heads and batch\n";
  for (const auto& r : res.runs) {
    const std::string p = "seed." + std::to_string(r.seed) + ".";
    os << p << "status=" << (r.aborted ? "aborted: " + r.message : std::string("ok")) << '\n';
    os << p << "rng.init=" << derive_seed(r.seed, Stream::kInit) << '\n';
    os << p << "rng.action=" << derive_seed(r.seed, Stream::kAction) << '\n';
    os << p << "rng.replay=" << derive_seed(r.seed, Stream::kReplay) << '\n';
    os << p << "rng.kmeans=" << derive_seed(r.seed, Stream::kKMeans) << '\n';
    os << p << "rng.env_base=" << derive_seed(r.seed, Stream::kEnv) << '\n';
    if (r.encoder_seed) os << p << "rng.encoder=" << r.encoder_seed << '\n';
    if (r.warm_start_jittered) os << p << "warm_start=jittered (fewer than k distinct states)\n";
  }
}

inline void prepare_output(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  require(!ec && fs::is_directory(cfg.output), "cannot create output directory " + cfg.output.string());
  const auto probe = cfg.output / ".write_probe";
  {
    std::ofstream os(probe);
    require(static_cast<bool>(os), "output directory is not writable: " + cfg.output.string());
  }
  fs::remove(probe, ec);
}

// Runs several experiments; all configs are validated before anything is
// written. (config, seed) pairs execute concurrently when jobs > 1.
inline std::vector<ExperimentResult> run_experiments(const std::vector<ExperimentConfig>& cfgs, std::size_t jobs = 1) {
  for (const auto& c : cfgs) c.validate();
  for (const auto& c : cfgs) prepare_output(c);
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  std::vector<ExperimentResult> results(cfgs.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    results[i].config = cfgs[i];
    results[i].runs.resize(cfgs[i].seeds.size());
    for (std::size_t s = 0; s < cfgs[i].seeds.size(); ++s) tasks.emplace_back(i, s);
  }
  run_parallel(tasks.size(), jobs, [&](std::size_t t) {
    const auto [i, s] = tasks[t];
    results[i].runs[s] = run_seed(cfgs[i], cfgs[i].seeds[s]);
  });
  for (const auto& r : results) write_manifest(r);
  return results;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1) {
  return run_experiments({cfg}, jobs).front();
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
  std::string name;
  std::string env;
  std::string variant;
  std::size_t buffer = 0;
  std::size_t k = 0;
  std::size_t seeds = 0;
  double highest_mean = NAN;
  double highest_std = NAN;
  double deterioration = 0.0;
  bool deterioration_degenerate = false;
  double floor = 0.0;
  double final_mean = NAN;
  double final_std = NAN;
  std::vector<double> highest_per_seed;
  std::vector<double> final_per_seed;
  std::vector<double> mean_curve;
};

using SummaryTable = std::vector<SummaryRow>;

// Population mean and standard deviation.
inline std::pair<double, double> mean_std(std::span<const double> xs) {
  if (xs.empty()) return {NAN, NAN};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

inline double nanmax(std::span<const double> xs) {
  double best = NAN;
  for (double x : xs)
    if (!std::isnan(x) && (std::isnan(best) || x > best)) best = x;
  return best;
}

inline double nanmean(std::span<const double> xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  return n ? s / static_cast<double>(n) : NAN;
}

// Mean R_T over records whose step lies within the last `span` steps.
inline double final_window_mean(std::span<const EvalRecord> records, std::size_t span) {
  if (records.empty()) return NAN;
  const std::size_t last = records.back().step;
  std::vector<double> xs;
  for (const auto& r : records)
    if (r.step + span > last) xs.push_back(r.returns);
  return nanmean(xs);
}

// Aggregates per-seed curves into one summary row.
inline SummaryRow summarize_curves(const std::string& name, const std::string& env, const std::string& variant,
                                   std::size_t buffer, std::size_t k, double floor, std::size_t final_span,
                                   const std::vector<std::vector<EvalRecord>>& per_seed) {
  require(!per_seed.empty(), "summarize: no runs");
  SummaryRow row;
  row.name = name;
  row.env = env;
  row.variant = variant;
  row.buffer = buffer;
  row.k = k;
  row.seeds = per_seed.size();
  row.floor = floor;
  std::size_t len = 0;
  for (const auto& recs : per_seed) {
    std::vector<double> curve;
    for (const auto& r : recs) curve.push_back(r.returns);
    row.highest_per_seed.push_back(nanmax(curve));
    row.final_per_seed.push_back(final_window_mean(recs, final_span));
    len = std::max(len, recs.size());
  }
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> xs;
    for (const auto& recs : per_seed)
      if (i < recs.size()) xs.push_back(recs[i].returns);
    row.mean_curve.push_back(nanmean(xs));
  }
  std::tie(row.highest_mean, row.highest_std) = mean_std(row.highest_per_seed);
  std::tie(row.final_mean, row.final_std) = mean_std(row.final_per_seed);
  if (!row.mean_curve.empty()) {
    const auto det = max_deterioration_ratio(row.mean_curve, floor);
    row.deterioration = det.ratio;
    row.deterioration_degenerate = det.degenerate;
  }
  return row;
}

inline std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "cannot read manifest " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline nlohmann::json to_json(const SummaryRow& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j;
  j["name"] = r.name;
  j["env"] = r.env;
  j["variant"] = r.variant;
  j["N"] = r.buffer;
  j["k"] = r.k;
  j["seeds"] = r.seeds;
  j["highest_mean"] = num(r.highest_mean);
  j["highest_std"] = num(r.highest_std);
  j["max_deterioration_ratio"] = num(r.deterioration);
  j["deterioration_degenerate"] = r.deterioration_degenerate;
  j["floor"] = r.floor;
  j["final_mean"] = num(r.final_mean);
  j["final_std"] = num(r.final_std);
  nlohmann::json hs = nlohmann::json::array(), fs_ = nlohmann::json::array();
  for (double v : r.highest_per_seed) hs.push_back(num(v));
  for (double v : r.final_per_seed) fs_.push_back(num(v));
  j["highest_per_seed"] = hs;
  j["final_per_seed"] = fs_;
  return j;
}

// Reads every experiment directory (one holding manifest.txt) under `dir`,
// writes dir/summary.json and returns the rows sorted by experiment name.
inline SummaryTable summarize(const fs::path& dir) {
  require(fs::is_directory(dir), "summarize: not a directory: " + dir.string());
  std::vector<fs::path> experiments;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "manifest.txt")
      experiments.push_back(entry.path().parent_path());
  std::sort(experiments.begin(), experiments.end());
  require(!experiments.empty(), "summarize: no completed runs under " + dir.string());

  SummaryTable table;
  for (const auto& exp : experiments) {
    const auto kv = read_manifest(exp / "manifest.txt");
    std::vector<std::vector<EvalRecord>> per_seed;
    for (const auto& s : split_list(kv.at("seeds"))) {
      std::ifstream is(exp / ("seed_" + s) / "eval.csv");
      if (!is) continue;
      per_seed.push_back(read_eval_csv(is));
    }
    if (per_seed.empty()) continue;
    table.push_back(summarize_curves(kv.at("name"), kv.at("env"), kv.at("variant"), std::stoull(kv.at("buffer")),
                                     std::stoull(kv.at("k")), parse_double(kv.at("floor")),
                                     std::stoull(kv.at("final_span")), per_seed));
  }
  require(!table.empty(), "summarize: no completed runs under " + dir.string());
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : table) j.push_back(to_json(r));
  std::ofstream(dir / "summary.json") << j.dump(2) << '\n';
  return table;
}

inline std::string format_table(const SummaryTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "experiment" << std::setw(13) << "env" << std::setw(14) << "variant"
     << std::setw(8) << "N" << std::setw(4) << "k" << std::setw(22) << "highest (mean±std)" << std::setw(22)
     << "final (mean±std)" << "deterioration\n";
  for (const auto& r : table) {
    std::ostringstream hi, fin;
    hi << std::fixed << std::setprecision(1) << r.highest_mean << "±" << r.highest_std;
    fin << std::fixed << std::setprecision(1) << r.final_mean << "±" << r.final_std;
    os << std::left << std::setw(28) << r.name << std::setw(13) << r.env << std::setw(14) << r.variant
       << std::setw(8) << r.buffer << std::setw(4) << r.k << std::setw(22) << hi.str() << std::setw(22) << fin.str()
       << std::fixed << std::setprecision(3) << r.deterioration << " (floor " << r.floor << ")\n";
  }
  return os.str();
}

// Runs every experiment of a suite file and summarizes them together under
// the suite's output root (global `output` key, default runs/<file stem>).
inline SummaryTable run_suite(const fs::path& file, std::size_t jobs = 1) {
  const ConfigFile cf = read_config_file(file);
  require(!cf.sections.empty(), "suite file has no [experiment] sections");
  fs::path root = fs::path("runs") / file.stem();
  for (const auto& [k, v] : cf.globals)
    if (k == "output") root = v;
  const auto cfgs = expand_suite(cf, root);
  run_experiments(cfgs, jobs);
  return summarize(root);
}

}  // namespace cdakd
