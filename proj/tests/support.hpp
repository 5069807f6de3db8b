#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <vector>

#include "cdakd/agent.hpp"
#include "cdakd/nn.hpp"

namespace cdakd::support {

// Sum over samples of Huber(target - q[head][action]) on a fixed head.
inline LossFn huber_loss(std::vector<std::vector<double>> inputs, std::vector<double> targets, std::size_t head,
                  std::size_t action) {
  return [=](const MultiHeadQNet& net, GradBundle* grads) {
    ForwardPass pass;
    std::vector<double> q(net.action_count()), dq(net.action_count());
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      net.trace(inputs[i], pass);
      net.head_values(pass, head, q);
      const double d = targets[i] - q[action];
      loss += huber(d);
      if (grads) {
        std::fill(dq.begin(), dq.end(), 0.0);
        dq[action] = -huber_grad(d);
        const HeadSeed seed{head, dq};
        net.backward(pass, std::span<const HeadSeed>(&seed, 1), *grads);
      }
    }
    return loss;
  };
}

// Weighted sum of every output of every head, so all parameters matter.
inline LossFn all_heads_loss(std::vector<double> input, std::uint64_t seed) {
  return [=](const MultiHeadQNet& net, GradBundle* grads) {
    Rng rng(seed);
    ForwardPass pass;
    net.trace(input, pass);
    std::vector<std::vector<double>> weights(net.head_count(), std::vector<double>(net.action_count()));
    for (auto& w : weights)
      for (auto& v : w) v = uniform(rng, -1.0, 1.0);
    std::vector<double> q(net.action_count());
    double loss = 0.0;
    std::vector<HeadSeed> seeds;
    for (std::size_t h = 0; h < net.head_count(); ++h) {
      net.head_values(pass, h, q);
      for (std::size_t a = 0; a < q.size(); ++a) loss += weights[h][a] * q[a];
      seeds.push_back({h, weights[h]});
    }
    if (grads) net.backward(pass, seeds, *grads);
    return loss;
  };
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, lo, hi);
  return v;
}

// Smallest |pre-activation| over every unit of every layer; ReLU checks
// need this well above the finite-difference step.
inline double min_abs_preactivation(const MultiHeadQNet& net, std::span<const double> input) {
  double best = INFINITY;
  std::vector<double> x(input.begin(), input.end());
  for (const auto& layer : net.trunk()) {
    std::vector<double> z(layer_output_size(layer));
    std::visit(
        [&](const auto& l) {
          auto copy = l;
          copy.act = Activation::kIdentity;
          copy.forward(x, z);
        },
        layer);
    for (double v : z) best = std::min(best, std::abs(v));
    std::vector<double> y(z.size());
    std::visit([&](const auto& l) { l.forward(x, y); }, layer);
    x = y;
  }
  return best;
}


inline Hyperparams small_hp(Variant v, std::size_t k = 3) {
  Hyperparams hp;
  hp.variant = v;
  hp.k = k;
  hp.min_history = 200;
  hp.target_period = 250;
  hp.epsilon_decay_steps = 1000;
  hp.buffer_capacity = 5000;
  hp.aei_every = 0;
  hp.learning_rate = 1e-3;
  return hp;
}

// Transitions gathered under random actions, with contexts from a trained
// context model so that several heads are active.
inline std::vector<Transition> collect(const Hyperparams& hp, std::size_t n, std::uint64_t seed) {
  auto h = hp;
  h.min_history = n + 1;
  Agent a = make_variant(h, "cartpole-v0", seed);
  for (std::size_t i = 0; i < n; ++i) a.train_step();
  std::vector<Transition> out;
  a.replay().for_each([&](const Transition& t) { out.push_back(t); });
  return out;
}

inline std::vector<const Transition*> pointers(const std::vector<Transition>& ts, std::size_t n, std::size_t offset = 0) {
  std::vector<const Transition*> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(&ts[(offset + i * 7) % ts.size()]);
  return p;
}

inline void perturb(MultiHeadQNet& net, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto b : net.parameter_blocks())
    for (auto& v : b) v += uniform(rng, -scale, scale);
}

struct Trace {
  std::vector<std::size_t> actions;
  std::vector<double> losses;
  std::vector<ContextId> contexts;
  bool operator==(const Trace&) const = default;
};

inline Trace run_trace(Agent agent, std::size_t steps) {
  Trace t;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto m = agent.train_step();
    t.actions.push_back(m.action);
    t.losses.push_back(m.loss);
    t.losses.push_back(m.loss_ori);
  }
  agent.replay().for_each([&](const Transition& tr) { t.contexts.push_back(tr.w_s); });
  return t;
}

}  // namespace cdakd::support
