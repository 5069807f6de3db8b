#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cdakd/context.hpp"
#include "cdakd/env.hpp"
#include "cdakd/errors.hpp"
#include "cdakd/nn.hpp"
#include "cdakd/random.hpp"
#include "cdakd/replay.hpp"

namespace cdakd {

enum class Variant { kCdakd, kDqn, kNoClustering, kNoDistill, kSingleHead, kCdakdIs, kCdakdGs, kCdakdRe };

inline const std::vector<std::pair<Variant, std::string>>& variant_names() {
  static const std::vector<std::pair<Variant, std::string>> names = {
      {Variant::kCdakd, "cdakd"},           {Variant::kDqn, "dqn"},
      {Variant::kNoClustering, "no_clustering"}, {Variant::kNoDistill, "no_distill"},
      {Variant::kSingleHead, "single_head"}, {Variant::kCdakdIs, "cdakd_is"},
      {Variant::kCdakdGs, "cdakd_gs"},      {Variant::kCdakdRe, "cdakd_re"},
  };
  return names;
}

inline std::string variant_name(Variant v) {
  for (const auto& [var, name] : variant_names())
    if (var == v) return name;
  return "unknown";
}

inline Variant parse_variant(const std::string& s) {
  for (const auto& [var, name] : variant_names())
    if (name == s) return var;
  throw UsageError("unknown variant '" + s + "'");
}

// Variants whose contexts come from sequential k-means over experienced states.
inline bool clusters_experience(Variant v) {
  return v == Variant::kCdakd || v == Variant::kNoDistill || v == Variant::kCdakdRe;
}

struct LambdaMode {
  bool scheduled = true;
  double value = 0.0;  // used when not scheduled

  static LambdaMode fixed(double v) { return {false, v}; }
};

struct Hyperparams {
  std::size_t k = 3;
  std::size_t buffer_capacity = 50000;
  std::size_t batch_size = 32;
  double learning_rate = 5e-4;
  double gamma = 0.99;
  std::size_t target_period = 1000;
  std::size_t total_steps = 400000;
  double epsilon_final = 0.02;
  std::size_t epsilon_decay_steps = 40000;
  std::size_t min_history = 1000;
  LambdaMode lambda;
  Variant variant = Variant::kCdakd;
  bool warm_start = true;
  std::size_t aei_every = 1000;  // 0 disables AEI measurement
  std::size_t recent_capacity = 10000;
  double partition_cell = 1.0;  // coarse enough that successive states usually share a cell
  std::size_t initial_state_samples = 1000;
  std::size_t encoder_dim = RandomEncoder::kDefaultDim;

  void validate() const {
    require(k >= 1, "k must be >= 1");
    require(buffer_capacity >= 1, "buffer capacity must be >= 1");
    require(batch_size >= 1, "batch size must be >= 1");
    require(learning_rate > 0.0, "learning rate must be positive");
    require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
    require(target_period >= 1, "target period must be >= 1");
    require(epsilon_final > 0.0 && epsilon_final <= 1.0, "epsilon_final must lie in (0, 1]");
    require(lambda.scheduled || (lambda.value >= 0.0 && lambda.value <= 1.0), "lambda must lie in [0, 1]");
    require(recent_capacity >= 1, "recent capacity must be >= 1");
    require(encoder_dim >= 1, "encoder dimension must be >= 1");
  }
};

// Degenerate settings implied by a variant (k = 1 for the single-head
// variants, lambda pinned to zero where distillation is removed).
inline Hyperparams normalize_variant(Hyperparams hp) {
  switch (hp.variant) {
    case Variant::kDqn:
      hp.k = 1;
      hp.lambda = LambdaMode::fixed(0.0);
      break;
    case Variant::kSingleHead:
      hp.k = 1;
      break;
    case Variant::kNoDistill:
      hp.lambda = LambdaMode::fixed(0.0);
      break;
    default:
      break;
  }
  return hp;
}

// Linear decay from 1 to epsilon_final over epsilon_decay_steps.
inline double epsilon_at(std::size_t step, const Hyperparams& hp) {
  if (hp.epsilon_decay_steps == 0 || step >= hp.epsilon_decay_steps) return hp.epsilon_final;
  const double frac = static_cast<double>(step) / static_cast<double>(hp.epsilon_decay_steps);
  return 1.0 + (hp.epsilon_final - 1.0) * frac;
}

inline double lambda_at(double epsilon, const Hyperparams& hp) {
  return hp.lambda.scheduled ? 1.0 - epsilon : hp.lambda.value;
}

inline std::size_t argmax_lowest(std::span<const double> q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

struct LossResult {
  double loss_ori = 0.0;
  double loss_distill = 0.0;
  double loss = 0.0;
  GradBundle grads;
};

enum class LossTerms { kJoint, kOriginalOnly, kDistillOnly };

struct StepMetrics {
  std::size_t step = 0;
  std::size_t action = 0;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
  std::optional<double> episode_return;  // set when an episode ended this step
  bool updated = false;
  double loss_ori = 0.0;
  double loss_distill = 0.0;
  double loss = 0.0;
  double epsilon = 1.0;
  double lambda = 0.0;
  bool synced = false;
  std::optional<double> aei;
};

using Embedder = std::function<std::vector<double>(const Observation&)>;

class EnvHandle {
 public:
  explicit EnvHandle(std::unique_ptr<Env> env) : env_(std::move(env)) {}
  EnvHandle(const EnvHandle& o) : env_(o.env_->clone()) {}
  EnvHandle& operator=(const EnvHandle& o) {
    if (this != &o) env_ = o.env_->clone();
    return *this;
  }
  EnvHandle(EnvHandle&&) noexcept = default;
  EnvHandle& operator=(EnvHandle&&) noexcept = default;
  Env* operator->() const { return env_.get(); }
  Env& operator*() const { return *env_; }

 private:
  std::unique_ptr<Env> env_;
};

// Mean of delta^2 over transitions with delta computed by a single network
// (bootstrap and estimate alike), using each transition's stored heads.
inline double mean_squared_td(const MultiHeadQNet& net, const ReplayBuffer& transitions, double gamma) {
  ForwardPass pass;
  std::vector<double> q(net.action_count()), scratch;
  double sum = 0.0;
  transitions.for_each([&](const Transition& t) {
    net.trace(network_input(t.s_next, scratch), pass);
    net.head_values(pass, t.w_s_next, q);
    const double boot = t.done ? 0.0 : gamma * *std::max_element(q.begin(), q.end());
    net.trace(network_input(t.s, scratch), pass);
    net.head_values(pass, t.w_s, q);
    const double delta = t.r + boot - q[t.a];
    sum += delta * delta;
  });
  return sum / static_cast<double>(transitions.size());
}

// One CDaKD (or ablation) learner bound to one environment and one seed.
// Copyable: a copy is an independent agent with identical state.
class Agent {
 public:
  Agent(std::unique_ptr<Env> env, Hyperparams hp, std::uint64_t seed, Embedder embedder = {})
      : hp_(normalize_variant(hp)),
        seed_(seed),
        env_(std::move(env)),
        replay_(hp_.buffer_capacity, hp_.k),
        recent_(hp_.recent_capacity, hp_.k),
        action_rng_(make_rng(seed, Stream::kAction)),
        replay_rng_(make_rng(seed, Stream::kReplay)),
        kmeans_rng_(make_rng(seed, Stream::kKMeans)),
        embedder_(std::move(embedder)) {
    hp_.validate();
    const EnvSpec& spec = env_->spec();
    Rng init = make_rng(seed, Stream::kInit);
    const bool pixel = spec.name == "pixelgrid";
    online_ = pixel ? MultiHeadQNet::pixel(spec.action_count, hp_.k, init)
                    : MultiHeadQNet::classic(spec.state_dim, spec.action_count, hp_.k, init);
    target_ = online_;
    adam_ = AdamState::for_net(online_);

    if (hp_.variant == Variant::kCdakdRe && !embedder_) {
      require(pixel, "cdakd_re needs a pixel environment (or an explicit embedder)");
      encoder_.emplace(derive_seed(seed, Stream::kEncoder), hp_.encoder_dim);
    }
    if (clusters_experience(hp_.variant) || hp_.variant == Variant::kCdakdIs) {
      const std::size_t dim = embedding_dim();
      context_.emplace(hp_.k, dim);
    }
    if (hp_.variant == Variant::kNoClustering)
      partition_.emplace(hp_.k, derive_seed(seed, Stream::kPartition), hp_.partition_cell);
    if (hp_.variant == Variant::kCdakdGs)
      gs_edges_ = equal_width_edges(spec.return_floor, spec.return_ceiling, hp_.k);
    if (hp_.variant == Variant::kCdakdIs) build_initial_state_contexts();
  }

  // ---- accessors -------------------------------------------------------
  const Hyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t step_count() const { return step_; }
  const Env& env() const { return *env_; }
  const MultiHeadQNet& online() const { return online_; }
  const MultiHeadQNet& target() const { return target_; }
  MultiHeadQNet& mutable_online() { return online_; }
  MultiHeadQNet& mutable_target() { return target_; }
  const std::optional<ContextModel>& context_model() const { return context_; }
  const std::optional<RandomEncoder>& encoder() const { return encoder_; }
  const std::vector<Centroid>& initial_state_centroids() const { return is_centroids_; }
  const ReplayBuffer& replay() const { return replay_; }
  const ReplayBuffer& recent() const { return recent_; }
  std::size_t optimizer_updates() const { return updates_; }
  bool warm_started() const { return warm_started_; }
  bool warm_start_jittered() const { return warm_jittered_; }
  std::size_t episode_index() const { return episode_index_; }

  // ---- context assignment ---------------------------------------------
  std::vector<double> embed(const Observation& obs) const {
    if (embedder_) return embedder_(obs);
    if (encoder_) {
      require(obs.pixels != nullptr, "random encoder needs a pixel observation");
      return encoder_->encode(*obs.pixels);
    }
    return flatten(obs);
  }

  // omega(s) for an observation whose embedding is `emb` and whose episode
  // score so far is `score`.
  ContextId context_of(const Observation& obs, std::span<const double> emb, double score) const {
    switch (hp_.variant) {
      case Variant::kDqn:
      case Variant::kSingleHead:
        return 0;
      case Variant::kNoClustering:
        return (*partition_)(flatten(obs));
      case Variant::kCdakdGs:
        return contextualize_gs(score, gs_edges_);
      case Variant::kCdakdIs:
        return contextualize_is(is_centroids_, emb);
      default:
        return context_->assign_target(emb);
    }
  }

  ContextId context_of(const Observation& obs) const {
    if (hp_.variant == Variant::kDqn || hp_.variant == Variant::kSingleHead) return 0;
    const auto emb = needs_embedding() ? embed(obs) : std::vector<double>{};
    return context_of(obs, emb, episode_score_);
  }

  // ---- acting ------------------------------------------------------------
  std::size_t greedy_action(const Observation& s, ContextId head) const {
    return argmax_lowest(online_.forward(s, head));
  }

  // Epsilon-greedy on the active head omega(s).
  std::size_t select_action(const Observation& s, double epsilon) {
    return choose(s, context_of(s), epsilon, false);
  }

  // ---- learning ------------------------------------------------------
  LossResult compute_loss(std::span<const Transition* const> batch, double lambda,
                          LossTerms terms = LossTerms::kJoint) {
    require(!batch.empty(), "compute_loss: empty batch");
    LossResult out;
    out.grads = online_.zero_grads();
    const std::size_t A = online_.action_count();
    const double m = static_cast<double>(batch.size());
    const bool distill = hp_.variant != Variant::kDqn;
    dq_.assign(hp_.k, std::vector<double>(A, 0.0));
    q_.resize(A);
    qt_.resize(A);
    std::vector<HeadSeed> seeds;
    seeds.reserve(hp_.k);

    for (const Transition* tp : batch) {
      const Transition& t = *tp;
      seeds.clear();
      target_.trace(network_input(t.s_next, scratch_next_), target_pass_);
      target_.head_values(target_pass_, t.w_s_next, qt_);
      const double y = t.r + (t.done ? 0.0 : hp_.gamma * *std::max_element(qt_.begin(), qt_.end()));

      const auto in_s = network_input(t.s, scratch_s_);
      online_.trace(in_s, online_pass_);
      online_.head_values(online_pass_, t.w_s, q_);
      const double delta = y - q_[t.a];
      out.loss_ori += huber(delta) / m;
      if (terms != LossTerms::kDistillOnly) {
        auto& g = dq_[t.w_s];
        std::fill(g.begin(), g.end(), 0.0);
        g[t.a] = -huber_grad(delta) / m;
        seeds.push_back({t.w_s, g});
      }

      if (distill) {
        const bool self = hp_.variant == Variant::kSingleHead;
        const std::size_t n_heads = self ? 1 : hp_.k - 1;
        if (n_heads > 0) {
          target_.trace(in_s, target_pass_);
          const double scale = 1.0 / (static_cast<double>(A) * static_cast<double>(n_heads) * m);
          const double grad_scale = terms == LossTerms::kJoint ? lambda : 1.0;
          for (std::size_t h = 0; h < hp_.k; ++h) {
            if (!self && h == t.w_s) continue;
            target_.head_values(target_pass_, h, qt_);
            online_.head_values(online_pass_, h, q_);
            std::vector<double>& g = self ? distill_self_ : dq_[h];
            g.assign(A, 0.0);
            for (std::size_t a = 0; a < A; ++a) {
              const double d = qt_[a] - q_[a];
              out.loss_distill += huber(d) * scale;
              g[a] = -huber_grad(d) * scale * grad_scale;
            }
            if (terms != LossTerms::kOriginalOnly && (terms == LossTerms::kDistillOnly || lambda != 0.0))
              seeds.push_back({h, g});
          }
        }
      }
      if (!seeds.empty()) online_.backward(online_pass_, seeds, out.grads);
    }
    out.loss = terms == LossTerms::kDistillOnly ? out.loss_distill
               : terms == LossTerms::kOriginalOnly ? out.loss_ori
                                                   : out.loss_ori + lambda * out.loss_distill;
    if (!std::isfinite(out.loss))
      throw RunAborted("non-finite loss at step " + std::to_string(step_) + " (L_ori=" +
                       format_double(out.loss_ori) + ", L_D=" + format_double(out.loss_distill) + ")");
    return out;
  }

  // compute_loss followed by one Adam step.
  LossResult update_on(std::span<const Transition* const> batch, double lambda) {
    LossResult res = compute_loss(batch, lambda);
    adam_step(online_, res.grads, hp_.learning_rate, adam_);
    ++updates_;
    return res;
  }

  // Mean Huber TD loss of the online net against the frozen target net.
  double td_loss(std::span<const Transition* const> batch) {
    require(!batch.empty(), "td_loss: empty batch");
    double sum = 0.0;
    for (const Transition* tp : batch) {
      const Transition& t = *tp;
      target_.trace(network_input(t.s_next, scratch_next_), target_pass_);
      qt_.resize(online_.action_count());
      q_.resize(online_.action_count());
      target_.head_values(target_pass_, t.w_s_next, qt_);
      const double y = t.r + (t.done ? 0.0 : hp_.gamma * *std::max_element(qt_.begin(), qt_.end()));
      online_.trace(network_input(t.s, scratch_s_), online_pass_);
      online_.head_values(online_pass_, t.w_s, q_);
      sum += huber(y - q_[t.a]);
    }
    return sum / static_cast<double>(batch.size());
  }

  void sync_target() {
    target_ = online_;
    if (context_ && clusters_experience(hp_.variant)) context_->sync_targets();
  }

  // One environment interaction plus (after min_history) one joint update.
  StepMetrics train_step() {
    if (!has_obs_) begin_episode();
    StepMetrics m;
    m.epsilon = epsilon_at(step_, hp_);
    m.lambda = lambda_at(m.epsilon, hp_);

    const ContextId w_s = context_of(cur_obs_, cur_emb_, episode_score_);
    const std::size_t a = choose(cur_obs_, w_s, m.epsilon, step_ < hp_.min_history);
    StepResult sr = env_->step(a);
    ++step_;
    m.step = step_;
    m.action = a;
    m.reward = sr.reward;
    m.done = sr.done;
    m.truncated = sr.truncated;

    std::vector<double> next_emb = needs_embedding() ? embed(sr.next_state) : std::vector<double>{};
    const double next_score = episode_score_ + sr.reward;
    const ContextId w_next = context_of(sr.next_state, next_emb, next_score);

    Transition tr{cur_obs_, w_s, a, sr.reward, sr.next_state, w_next, sr.done};
    if (hp_.aei_every > 0) recent_.push(tr);
    replay_.push(std::move(tr));

    if (context_ && clusters_experience(hp_.variant)) {
      context_->update(cur_emb_);
      if (hp_.warm_start && !warm_started_ && hp_.min_history > 0) {
        warm_pool_.push_back(cur_emb_);
        if (step_ >= hp_.min_history) run_warm_start();
      }
    }

    if (step_ >= hp_.min_history) {
      const bool measure = hp_.aei_every > 0 && step_ % hp_.aei_every == 0;
      std::optional<MultiHeadQNet> before;
      if (measure) before = online_;
      auto batch = replay_.sample(hp_.batch_size, replay_rng_);
      LossResult res = update_on(batch, m.lambda);
      m.updated = true;
      m.loss_ori = res.loss_ori;
      m.loss_distill = res.loss_distill;
      m.loss = res.loss;
      if (measure)
        m.aei = mean_squared_td(online_, recent_, hp_.gamma) - mean_squared_td(*before, recent_, hp_.gamma);
    }

    if (step_ % hp_.target_period == 0) {
      sync_target();
      m.synced = true;
    }

    episode_return_ += sr.reward;
    episode_score_ = next_score;
    if (sr.done || sr.truncated) {
      m.episode_return = episode_return_;
      has_obs_ = false;
    } else {
      cur_obs_ = std::move(sr.next_state);
      cur_emb_ = std::move(next_emb);
    }
    return m;
  }

  // ---- checkpoints ---------------------------------------------------
  // online.ckpt / target.ckpt (network checkpoint format), centroids.csv and
  // target_centroids.csv (centroid dump format), agent_state.txt.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
      std::ofstream os(dir / "online.ckpt");
      save_checkpoint(os, online_, seed_);
    }
    {
      std::ofstream os(dir / "target.ckpt");
      save_checkpoint(os, target_, seed_);
    }
    if (context_) {
      std::ofstream c(dir / "centroids.csv");
      write_centroid_header(c, context_->dim());
      write_centroid_snapshot(c, step_, *context_);
      std::ofstream t(dir / "target_centroids.csv");
      write_centroid_header(t, context_->dim());
      ContextModel frozen(std::vector<Centroid>(context_->targets().begin(), context_->targets().end()),
                          std::vector<std::uint64_t>(context_->targets().size(), 0));
      if (context_->targets().size() == context_->k()) write_centroid_snapshot(t, step_, frozen);
    }
    std::ofstream st(dir / "agent_state.txt");
    st << "step " << step_ << "\nupdates " << updates_ << "\nwarm_started " << warm_started_
       << "\nencoder_seed " << (encoder_ ? encoder_->seed() : 0) << "\n";
  }

  // Restores networks, centroids and counters written by save(). The
  // replay buffer and optimizer moments are not part of a checkpoint.
  void load(const std::filesystem::path& dir) {
    auto read_net = [&](const char* name) {
      std::ifstream is(dir / name);
      require(static_cast<bool>(is), std::string("checkpoint missing ") + name);
      auto ck = load_checkpoint(is);
      require(ck.net.layout() == online_.layout(), "checkpoint layout does not match agent");
      return ck.net;
    };
    online_ = read_net("online.ckpt");
    target_ = read_net("target.ckpt");
    adam_ = AdamState::for_net(online_);
    if (context_ && std::filesystem::exists(dir / "centroids.csv")) {
      auto live = read_centroids(dir / "centroids.csv");
      auto frozen = read_centroids(dir / "target_centroids.csv");
      if (live.first.size() == context_->k()) {
        context_->install(live.first, live.second);
        if (frozen.first.size() == context_->k()) context_->set_targets(frozen.first);
      }
    }
    std::ifstream st(dir / "agent_state.txt");
    std::string key;
    while (st >> key) {
      if (key == "step") st >> step_;
      else if (key == "updates") st >> updates_;
      else if (key == "warm_started") st >> warm_started_;
      else st >> key;
    }
    has_obs_ = false;
  }

 private:
  bool needs_embedding() const {
    return clusters_experience(hp_.variant) || hp_.variant == Variant::kCdakdIs;
  }

  std::size_t embedding_dim() const {
    if (encoder_) return encoder_->output_dim();
    auto probe = env_->clone();
    return embed(probe->reset(0)).size();
  }

  std::size_t choose(const Observation& s, ContextId head, double epsilon, bool force_random) {
    const double u = uniform(action_rng_, 0.0, 1.0);
    if (force_random || u < epsilon) return uniform_index(action_rng_, online_.action_count());
    return greedy_action(s, head);
  }

  void begin_episode() {
    cur_obs_ = env_->reset(derive_seed(seed_, Stream::kEnv, episode_index_++));
    cur_emb_ = needs_embedding() ? embed(cur_obs_) : std::vector<double>{};
    episode_return_ = 0.0;
    episode_score_ = 0.0;
    has_obs_ = true;
  }

  void run_warm_start() {
    auto ws = warm_start(warm_pool_, hp_.k, kmeans_rng_);
    context_->install(std::move(ws.centroids), std::move(ws.counts));
    warm_jittered_ = ws.jittered;
    warm_started_ = true;
    warm_pool_.clear();
    warm_pool_.shrink_to_fit();
  }

  void build_initial_state_contexts() {
    auto probe = env_->clone();
    std::vector<std::vector<double>> states;
    for (std::size_t i = 0; i < hp_.initial_state_samples; ++i)
      states.push_back(embed(probe->reset(derive_seed(seed_, Stream::kInitialStates, i))));
    auto ws = warm_start(states, hp_.k, kmeans_rng_);
    is_centroids_ = ws.centroids;
    warm_jittered_ = ws.jittered;
    context_->install(ws.centroids, ws.counts);
  }

  static std::pair<std::vector<Centroid>, std::vector<std::uint64_t>> read_centroids(
      const std::filesystem::path& path) {
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<Centroid> cs;
    std::vector<std::uint64_t> counts;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');  // step
      std::getline(ss, cell, ',');  // context id
      std::getline(ss, cell, ',');
      counts.push_back(std::stoull(cell));
      Centroid c;
      while (std::getline(ss, cell, ',')) c.push_back(parse_double(cell));
      cs.push_back(std::move(c));
    }
    return {cs, counts};
  }

  Hyperparams hp_;
  std::uint64_t seed_;
  EnvHandle env_;
  MultiHeadQNet online_;
  MultiHeadQNet target_;
  AdamState adam_;
  std::optional<ContextModel> context_;
  std::optional<RandomPartition> partition_;
  std::optional<RandomEncoder> encoder_;
  std::vector<Centroid> is_centroids_;
  std::vector<double> gs_edges_;
  ReplayBuffer replay_;
  ReplayBuffer recent_;
  Rng action_rng_;
  Rng replay_rng_;
  Rng kmeans_rng_;
  Embedder embedder_;

  std::size_t step_ = 0;
  std::size_t updates_ = 0;
  std::size_t episode_index_ = 0;
  bool has_obs_ = false;
  Observation cur_obs_;
  std::vector<double> cur_emb_;
  double episode_return_ = 0.0;
  double episode_score_ = 0.0;
  std::vector<std::vector<double>> warm_pool_;
  bool warm_started_ = false;
  bool warm_jittered_ = false;

  // scratch reused across samples
  ForwardPass online_pass_;
  ForwardPass target_pass_;
  std::vector<double> scratch_s_, scratch_next_, q_, qt_, distill_self_;
  std::vector<std::vector<double>> dq_;
};

// Factory: configures an agent for hp.variant on the named environment.
inline Agent make_variant(const Hyperparams& hp, const std::string& env_name, std::uint64_t seed,
                          Embedder embedder = {}) {
  return Agent(make_env(env_name), hp, seed, std::move(embedder));
}

}  // namespace cdakd
