#include <gtest/gtest.h>

#include <sstream>

#include "cdakd/metrics.hpp"

using namespace cdakd;

namespace {

// q(s) = w·s + b with a single head and a single action.
MultiHeadQNet scalar_net(double w, double b) {
  MultiHeadQNet net({1}, {}, 1, 1);
  auto p = net.parameter_blocks();
  p[0][0] = w;
  p[1][0] = b;
  return net;
}

Transition scalar_transition(double s, double r, bool done) {
  Transition t;
  t.s.values = {s};
  t.s_next.values = {s};
  t.r = r;
  t.done = done;
  return t;
}

std::vector<double> reference_flops_inputs() { return {32, 1e7, 0.25e7, 4, 28.582e6, 3.215e6}; }

}  // namespace

TEST(Aei, IdenticalNetsGiveZero) {
  RecentBuffer recent(10, 1);
  for (int i = 0; i < 5; ++i) recent.push(scalar_transition(i * 0.1, 1.0, i % 2 == 0));
  const auto net = scalar_net(0.3, -0.2);
  EXPECT_EQ(aei(net, net, recent, 0.9), 0.0);
}

TEST(Aei, HandBuiltSquares) {
  RecentBuffer recent(1, 1);
  recent.push(scalar_transition(1.0, 1.0, true));
  // δ_before = 1 - 0 = 1, δ_after = 1 - (-1) = 2.
  EXPECT_EQ(aei(scalar_net(0.0, 0.0), scalar_net(0.0, -1.0), recent, 0.99), 3.0);
}

TEST(Aei, BootstrapUsesEachNetsOwnValues) {
  RecentBuffer recent(1, 1);
  recent.push(scalar_transition(1.0, 0.5, false));
  // δ = r + γq(s') - q(s) with s' = s: δ = 0.5 + (γ - 1)q.
  const double gamma = 0.5;
  const double d_before = 0.5 + (gamma - 1) * 1.0, d_after = 0.5 + (gamma - 1) * 2.0;
  EXPECT_DOUBLE_EQ(aei(scalar_net(1.0, 0.0), scalar_net(2.0, 0.0), recent, gamma),
                   d_after * d_after - d_before * d_before);
}

TEST(Aei, ImprovementIsNegative) {
  RecentBuffer recent(4, 1);
  for (double s : {0.5, 1.0, 1.5, 2.0}) recent.push(scalar_transition(s, 2.0 * s, true));
  EXPECT_LT(aei(scalar_net(0.0, 0.0), scalar_net(1.5, 0.0), recent, 0.99), 0.0);
}

TEST(Aei, EmptyBufferIsError) {
  RecentBuffer recent(4, 1);
  EXPECT_THROW(aei(scalar_net(0, 0), scalar_net(0, 0), recent, 0.9), UsageError);
}

TEST(GradientInterference, SelfProductIsSquaredNorm) {
  const auto net = scalar_net(0.2, 0.1);
  const auto t = scalar_transition(1.0, 3.0, true);
  const std::vector<const Transition*> a{&t};
  const auto loss = td_huber_loss(net, 0.9);
  GradBundle g = net.zero_grads();
  loss(net, a, g);
  EXPECT_DOUBLE_EQ(gradient_interference(net, a, a, loss), g.dot(g));
  EXPECT_GT(g.dot(g), 0.0);
}

TEST(GradientInterference, ZeroGradientLoss) {
  const auto net = scalar_net(0.2, 0.1);
  const auto t = scalar_transition(1.0, 3.0, true);
  const std::vector<const Transition*> a{&t};
  const BatchLossFn zero = [](const MultiHeadQNet&, std::span<const Transition* const>, GradBundle&) { return 0.0; };
  EXPECT_EQ(gradient_interference(net, a, a, zero), 0.0);
}

TEST(GradientInterference, OpposingTargetsInterfere) {
  const auto net = scalar_net(0.0, 0.0);
  const auto up = scalar_transition(1.0, 1.0, true);
  const auto down = scalar_transition(1.0, -1.0, true);
  const std::vector<const Transition*> a{&up}, b{&down};
  // Each gradient is ∓(x, 1) = ∓(1, 1), so ρ = -2.
  EXPECT_EQ(gradient_interference(net, a, b, td_huber_loss(net, 0.9)), -2.0);
}

TEST(GradientInterference, Symmetric) {
  Rng rng(1);
  auto net = MultiHeadQNet::classic(4, 2, 2, rng);
  std::vector<Transition> ts;
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.s.values = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    t.s_next.values = t.s.values;
    t.r = uniform(rng, -2, 2);
    t.w_s = i % 2;
    t.w_s_next = (i / 2) % 2;
    ts.push_back(t);
  }
  std::vector<const Transition*> a, b;
  for (int i = 0; i < 10; ++i) (i < 5 ? a : b).push_back(&ts[i]);
  const auto loss = td_huber_loss(net, 0.9);
  EXPECT_NEAR(gradient_interference(net, a, b, loss), gradient_interference(net, b, a, loss), 1e-12);
}

TEST(Returns, Examples) {
  EXPECT_EQ(avg_episode_return(std::vector<std::vector<double>>{{1, 1, 1}}), 3.0);
  EXPECT_EQ(avg_episode_return(std::vector<std::vector<double>>{{1, 2}, {5}}), 4.0);
  EXPECT_THROW(avg_episode_return(std::vector<std::vector<double>>{}), UsageError);
}

TEST(Returns, OrderInvariant) {
  std::vector<double> r{3, 9, -2, 7.5, 0.25};
  const double a = avg_episode_return(r);
  std::reverse(r.begin(), r.end());
  EXPECT_EQ(avg_episode_return(r), a);
}

TEST(Deterioration, Examples) {
  EXPECT_EQ(max_deterioration_ratio(std::vector<double>{1, 2, 2, 5}, 0).ratio, 0.0);
  EXPECT_EQ(max_deterioration_ratio(std::vector<double>{10, 0}, 0).ratio, 1.0);
  EXPECT_EQ(max_deterioration_ratio(std::vector<double>{10, 5, 20, 15}, 0).ratio, 0.5);
}

TEST(Deterioration, FloorAndClamp) {
  // Acrobot-like: floor -500, running max -100, drop to -300 → 200/400.
  EXPECT_DOUBLE_EQ(max_deterioration_ratio(std::vector<double>{-100, -300}, -500).ratio, 0.5);
  // Below the floor clamps to 1.
  EXPECT_EQ(max_deterioration_ratio(std::vector<double>{10, -5}, 0).ratio, 1.0);
}

TEST(Deterioration, DegenerateAndNan) {
  const auto d = max_deterioration_ratio(std::vector<double>{0, 0, 0}, 0);
  EXPECT_EQ(d.ratio, 0.0);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(max_deterioration_ratio(std::vector<double>{10, NAN, 5}, 0).ratio, 0.5);
  EXPECT_THROW(max_deterioration_ratio(std::vector<double>{}, 0), UsageError);
}

TEST(Deterioration, InvariantToNewMaxima) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c;
    for (int i = 0; i < 20; ++i) c.push_back(uniform(rng, 0, 100));
    const double base = max_deterioration_ratio(c, 0).ratio;
    c.push_back(*std::max_element(c.begin(), c.end()) + uniform(rng, 0, 10));
    EXPECT_EQ(max_deterioration_ratio(c, 0).ratio, base);
  }
}

TEST(Flops, AllOnes) {
  EXPECT_EQ(count_flops({1, 1, 1, 1, 1, 1}), 11.0);
}

TEST(Flops, ReferenceConstants) {
  const auto v = reference_flops_inputs();
  const double b = v[0], T = v[1], I = v[2], k = v[3], E = v[4], M = v[5];
  // Hand expansion: 4bI(E + kM) + T(2E + kM).
  const double expect = 4 * b * I * (E + k * M) + T * (2 * E + k * M);
  const FlopsConfig cfg{b, T, I, k, E, M};
  EXPECT_NEAR(count_flops(cfg), expect, 1e-12 * expect);
  EXPECT_NEAR(count_flops(cfg), 1.396168e16, 1e-6 * 1.396168e16);
}

TEST(Flops, StructureAndLinearity) {
  const FlopsConfig base{32, 1e7, 0.25e7, 4, 28.582e6, 3.215e6};
  auto twice_i = base;
  twice_i.updates *= 2;
  auto twice_t = base;
  twice_t.env_steps *= 2;
  auto zero_i = base;
  zero_i.updates = 1e-300;
  const double training = count_flops(base) - count_flops(zero_i);
  EXPECT_NEAR(count_flops(twice_i), count_flops(base) + training, 1e-12 * count_flops(base));
  const double acting = base.env_steps * (2 * base.encoder + base.heads * base.head_mlp);
  EXPECT_NEAR(count_flops(twice_t), count_flops(base) + acting, 1e-12 * count_flops(base));
  auto twice_k = base;
  twice_k.heads *= 2;
  const double km_terms = (4 * base.batch * base.updates + base.env_steps) * base.heads * base.head_mlp;
  EXPECT_NEAR(count_flops(twice_k) - count_flops(base), km_terms, 1e-12 * count_flops(base));
  EXPECT_THROW(count_flops({0, 1, 1, 1, 1, 1}), UsageError);
}

TEST(EvalCsv, RoundTrip) {
  EvalRecord r;
  r.step = 10000;
  r.seed = 3;
  r.variant = "cdakd";
  r.env = "cartpole-v0";
  r.returns = 187.25;
  r.loss_ori = 0.125;
  r.loss_distill = 1.0 / 3.0;
  r.epsilon = 0.02;
  r.lambda = 0.98;
  std::stringstream ss;
  ss << kEvalHeader << '\n';
  write_eval_row(ss, r);
  EXPECT_EQ(ss.str(), std::string(kEvalHeader) + "\n10000,3,cdakd,cartpole-v0,187.25,nan,0.125,"
                                                   "0.3333333333333333,0.02,0.98\n");
  const auto back = read_eval_csv(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].returns, 187.25);
  EXPECT_TRUE(std::isnan(back[0].aei));
  EXPECT_EQ(back[0].loss_distill, 1.0 / 3.0);
}

TEST(InterferenceMatrix, ShapesAndZeroSteps) {
  Hyperparams hp;
  hp.min_history = 100000;
  hp.aei_every = 0;
  Agent agent = make_variant(hp, "cartpole-v0", 2);
  for (int i = 0; i < 300; ++i) agent.train_step();
  std::vector<std::vector<Transition>> sets(3);
  agent.replay().for_each([&](const Transition& t) { sets[t.w_s].push_back(t); });
  for (const auto& s : sets) ASSERT_FALSE(s.empty());
  const auto zero = context_interference_matrix(agent, sets, 1, 0);
  EXPECT_EQ(zero, std::vector<double>(3, 0.0));
  const auto trained = context_interference_matrix(agent, sets, 1, 200, {.lambda = 0.0, .seed = 1});
  EXPECT_EQ(trained.size(), 3u);
  EXPECT_LT(trained[1], 0.0);
  sets[2].clear();
  EXPECT_THROW(context_interference_matrix(agent, sets, 1, 5), UsageError);
}

TEST(InterferenceMatrix, SingleContext) {
  Hyperparams hp;
  hp.variant = Variant::kDqn;
  hp.min_history = 100000;
  hp.aei_every = 0;
  Agent agent = make_variant(hp, "cartpole-v0", 2);
  for (int i = 0; i < 100; ++i) agent.train_step();
  std::vector<std::vector<Transition>> sets(1);
  agent.replay().for_each([&](const Transition& t) { sets[0].push_back(t); });
  EXPECT_EQ(context_interference_matrix(agent, sets, 0, 10).size(), 1u);
}
