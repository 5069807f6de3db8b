#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cdakd/agent.hpp"
#include "cdakd/errors.hpp"
#include "cdakd/nn.hpp"
#include "cdakd/replay.hpp"

namespace cdakd {

// FIFO of the most recent transitions under the current policy.
using RecentBuffer = ReplayBuffer;
inline constexpr std::size_t kDefaultRecentCapacity = 10000;

// Approximate expected interference: mean change in squared TD error over
// the recent transitions caused by moving from net_before to net_after.
inline double aei(const MultiHeadQNet& net_before, const MultiHeadQNet& net_after, const RecentBuffer& recent,
                  double gamma) {
  require(!recent.empty(), "aei: recent buffer is empty");
  require(net_before.layout() == net_after.layout(), "aei: networks differ in layout");
  return mean_squared_td(net_after, recent, gamma) - mean_squared_td(net_before, recent, gamma);
}

// Loss over a batch; accumulates the gradient into `grads`.
using BatchLossFn =
    std::function<double(const MultiHeadQNet& net, std::span<const Transition* const> batch, GradBundle& grads)>;

// Mean Huber TD loss against a fixed bootstrap network.
inline BatchLossFn td_huber_loss(MultiHeadQNet bootstrap, double gamma) {
  return [bootstrap = std::move(bootstrap), gamma](const MultiHeadQNet& net, std::span<const Transition* const> batch,
                                                   GradBundle& grads) {
    ForwardPass pass, boot_pass;
    std::vector<double> q(net.action_count()), qn(bootstrap.action_count()), dq(net.action_count()), scratch;
    const double m = static_cast<double>(batch.size());
    double loss = 0.0;
    for (const Transition* t : batch) {
      bootstrap.trace(network_input(t->s_next, scratch), boot_pass);
      bootstrap.head_values(boot_pass, t->w_s_next, qn);
      const double y = t->r + (t->done ? 0.0 : gamma * *std::max_element(qn.begin(), qn.end()));
      net.trace(network_input(t->s, scratch), pass);
      net.head_values(pass, t->w_s, q);
      const double delta = y - q[t->a];
      loss += huber(delta) / m;
      std::fill(dq.begin(), dq.end(), 0.0);
      dq[t->a] = -huber_grad(delta) / m;
      const HeadSeed seed{t->w_s, dq};
      net.backward(pass, std::span<const HeadSeed>(&seed, 1), grads);
    }
    return loss;
  };
}

// First-order interaction of two updates: the inner product of their
// gradients over all network parameters. Positive means transfer, negative
// means interference.
inline double gradient_interference(const MultiHeadQNet& net, std::span<const Transition* const> batch_a,
                                    std::span<const Transition* const> batch_b, const BatchLossFn& loss_fn) {
  require(!batch_a.empty() && !batch_b.empty(), "gradient_interference: empty batch");
  GradBundle ga = net.zero_grads();
  GradBundle gb = net.zero_grads();
  loss_fn(net, batch_a, ga);
  loss_fn(net, batch_b, gb);
  return ga.dot(gb);
}

inline double avg_episode_return(std::span<const double> episode_returns) {
  require(!episode_returns.empty(), "avg_episode_return: no episodes");
  double s = 0.0;
  for (double r : episode_returns) s += r;
  return s / static_cast<double>(episode_returns.size());
}

inline double avg_episode_return(const std::vector<std::vector<double>>& episodes) {
  std::vector<double> sums;
  for (const auto& e : episodes) {
    double s = 0.0;
    for (double r : e) s += r;
    sums.push_back(s);
  }
  return avg_episode_return(sums);
}

struct DeteriorationResult {
  double ratio = 0.0;
  bool degenerate = false;  // running max never rose above the floor
};

// Worst drop below the running maximum, normalized by the running maximum's
// height above `floor`, clamped to [0, 1]. NaN entries are skipped.
inline DeteriorationResult max_deterioration_ratio(std::span<const double> curve, double floor) {
  require(!curve.empty(), "max_deterioration_ratio: empty curve");
  DeteriorationResult out;
  out.degenerate = true;
  double running = -INFINITY;
  for (double y : curve) {
    if (std::isnan(y)) continue;
    running = std::max(running, y);
    if (running <= floor) continue;
    out.degenerate = false;
    out.ratio = std::max(out.ratio, (running - y) / (running - floor));
  }
  out.ratio = std::clamp(out.ratio, 0.0, 1.0);
  return out;
}

struct InterferenceOptions {
  std::size_t batch_size = 32;
  double lambda = 0.0;  // 0 trains on the plain TD loss
  std::uint64_t seed = 0;
};

// Relative change of each context's mean Huber TD loss after `steps` updates
// drawn only from eval_sets[train_context]. Works on a copy of the agent.
inline std::vector<double> context_interference_matrix(const Agent& agent,
                                                       std::span<const std::vector<Transition>> eval_sets,
                                                       std::size_t train_context, std::size_t steps,
                                                       const InterferenceOptions& opt = {}) {
  require(train_context < eval_sets.size(), "interference: train context out of range");
  for (const auto& s : eval_sets) require(!s.empty(), "interference: empty eval set");
  Agent clone = agent;
  auto pointers = [](const std::vector<Transition>& set) {
    std::vector<const Transition*> p;
    for (const auto& t : set) p.push_back(&t);
    return p;
  };
  std::vector<double> before;
  for (const auto& s : eval_sets) before.push_back(clone.td_loss(pointers(s)));

  Rng rng(opt.seed);
  const auto& pool = eval_sets[train_context];
  std::vector<const Transition*> batch(opt.batch_size);
  for (std::size_t i = 0; i < steps; ++i) {
    for (auto& b : batch) b = &pool[uniform_index(rng, pool.size())];
    clone.update_on(batch, opt.lambda);
  }

  std::vector<double> change;
  for (std::size_t c = 0; c < eval_sets.size(); ++c) {
    const double after = clone.td_loss(pointers(eval_sets[c]));
    const double denom = std::abs(before[c]);
    change.push_back(denom > 0.0 ? (after - before[c]) / denom : 0.0);
  }
  return change;
}

struct FlopsConfig {
  double batch = 32;          // b
  double env_steps = 1e7;     // T
  double updates = 0.25e7;    // I
  double heads = 4;           // k
  double encoder = 28.582e6;  // E, forward FLOPs of the encoder
  double head_mlp = 3.215e6;  // M, forward FLOPs of one head's MLP

  void validate() const {
    require(batch > 0 && env_steps > 0 && updates > 0 && heads > 0 && encoder > 0 && head_mlp > 0,
            "flops config fields must be positive");
  }
};

// Training forward + backward passes, action-selection forwards and
// random-encoder forwards: 2bI(E+kM) + 2bI(E+kM) + T(E+kM) + TE.
inline double count_flops(const FlopsConfig& c) {
  c.validate();
  const double per_pass = c.encoder + c.heads * c.head_mlp;
  return 2 * c.batch * c.updates * per_pass + 2 * c.batch * c.updates * per_pass + c.env_steps * per_pass +
         c.env_steps * c.encoder;
}

// One row of eval.csv.
struct EvalRecord {
  std::size_t step = 0;
  std::uint64_t seed = 0;
  std::string variant;
  std::string env;
  double returns = NAN;  // R_T over episodes finished in the window
  double aei = NAN;
  double loss_ori = NAN;
  double loss_distill = NAN;
  double epsilon = NAN;
  double lambda = NAN;
  std::size_t episodes = 0;  // M
};

inline constexpr const char* kEvalHeader = "step,seed,variant,env,R_T,aei,loss_ori,loss_distill,epsilon,lambda";

inline std::string csv_number(double v) { return std::isnan(v) ? "nan" : format_double(v); }

inline void write_eval_row(std::ostream& os, const EvalRecord& r) {
  os << r.step << ',' << r.seed << ',' << r.variant << ',' << r.env << ',' << csv_number(r.returns) << ','
     << csv_number(r.aei) << ',' << csv_number(r.loss_ori) << ',' << csv_number(r.loss_distill) << ','
     << csv_number(r.epsilon) << ',' << csv_number(r.lambda) << '\n';
}

inline std::vector<EvalRecord> read_eval_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  require(line == kEvalHeader, "eval.csv: unexpected header");
  std::vector<EvalRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    require(f.size() == 10, "eval.csv: expected 10 columns");
    EvalRecord r;
    r.step = std::stoull(f[0]);
    r.seed = std::stoull(f[1]);
    r.variant = f[2];
    r.env = f[3];
    r.returns = parse_double(f[4]);
    r.aei = parse_double(f[5]);
    r.loss_ori = parse_double(f[6]);
    r.loss_distill = parse_double(f[7]);
    r.epsilon = parse_double(f[8]);
    r.lambda = parse_double(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cdakd
