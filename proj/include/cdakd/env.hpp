#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cdakd/errors.hpp"
#include "cdakd/observation.hpp"
#include "cdakd/random.hpp"

namespace cdakd {

struct EnvSpec {
  std::string name;
  std::size_t state_dim = 0;
  std::size_t action_count = 0;
  std::size_t max_steps = 0;
  std::optional<double> reward_threshold;
  // Bounds on an episode's undiscounted return. The lower bound doubles as
  // the floor used by the deterioration ratio; both define score bins.
  double return_floor = 0.0;
  double return_ceiling = 0.0;
};

struct StepResult {
  Observation next_state;
  double reward = 0.0;
  bool done = false;       // environment terminal
  bool truncated = false;  // horizon reached
};

// Episodic environment with a gym-like reset/step contract. The trajectory is
// a pure function of the reset seed and the action sequence.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  std::size_t steps() const { return steps_; }
  bool finished() const { return finished_; }

  Observation reset(std::uint64_t seed) {
    steps_ = 0;
    finished_ = false;
    Rng rng(seed);
    return do_reset(rng);
  }

  StepResult step(std::size_t action) {
    require(!finished_, spec_.name + ": step() called on a finished episode");
    require(action < spec_.action_count, spec_.name + ": action index out of range");
    StepResult result = do_step(action);
    ++steps_;
    result.truncated = steps_ >= spec_.max_steps;
    finished_ = result.done || result.truncated;
    return result;
  }

  virtual PixelObservation render_pixels() const {
    throw UsageError(spec_.name + ": render_pixels() requires a pixel environment");
  }

  virtual std::unique_ptr<Env> clone() const = 0;

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual Observation do_reset(Rng& rng) = 0;
  virtual StepResult do_step(std::size_t action) = 0;

 private:
  EnvSpec spec_;
  std::size_t steps_ = 0;
  bool finished_ = false;
};

class CartPole final : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForce = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaLimit = 12.0 * 2.0 * std::numbers::pi / 360.0;
  static constexpr double kXLimit = 2.4;

  explicit CartPole(std::size_t max_steps)
      : Env(EnvSpec{max_steps == 200 ? "cartpole-v0" : "cartpole-v1", 4, 2, max_steps,
                    max_steps == 200 ? 195.0 : 475.0, 0.0, static_cast<double>(max_steps)}) {}

  // Overwrites the physical state (tests and diagnostics).
  void set_state(const std::array<double, 4>& s) { state_ = s; }
  const std::array<double, 4>& state() const { return state_; }

  std::unique_ptr<Env> clone() const override { return std::make_unique<CartPole>(*this); }

 protected:
  Observation do_reset(Rng& rng) override {
    for (auto& v : state_) v = uniform(rng, -0.05, 0.05);
    return observe();
  }

  StepResult do_step(std::size_t action) override {
    auto [x, x_dot, theta, theta_dot] = state_;
    const double force = action == 1 ? kForce : -kForce;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
    const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                             (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

    x += kTau * x_dot;
    x_dot += kTau * x_acc;
    theta += kTau * theta_dot;
    theta_dot += kTau * theta_acc;
    state_ = {x, x_dot, theta, theta_dot};

    StepResult r;
    r.done = x < -kXLimit || x > kXLimit || theta < -kThetaLimit || theta > kThetaLimit;
    r.reward = 1.0;
    r.next_state = observe();
    return r;
  }

 private:
  Observation observe() const { return Observation{{state_.begin(), state_.end()}, nullptr}; }
  std::array<double, 4> state_{};
};

class Pendulum final : public Env {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr std::size_t kTorqueBins = 9;

  Pendulum() : Env(EnvSpec{"pendulum-v0", 3, kTorqueBins, 200, std::nullopt, -2000.0, 0.0}) {}

  static double torque_of(std::size_t action) {
    return -kMaxTorque + 2.0 * kMaxTorque * static_cast<double>(action) / (kTorqueBins - 1);
  }

  static double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    return a - two_pi * std::floor((a + std::numbers::pi) / two_pi);
  }

  void set_state(double theta, double theta_dot) {
    theta_ = theta;
    theta_dot_ = theta_dot;
  }

  std::unique_ptr<Env> clone() const override { return std::make_unique<Pendulum>(*this); }

 protected:
  Observation do_reset(Rng& rng) override {
    theta_ = uniform(rng, -std::numbers::pi, std::numbers::pi);
    theta_dot_ = uniform(rng, -1.0, 1.0);
    return observe();
  }

  StepResult do_step(std::size_t action) override {
    const double u = std::clamp(torque_of(action), -kMaxTorque, kMaxTorque);
    const double th = wrap_angle(theta_);
    const double cost = th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

    double new_theta_dot =
        theta_dot_ + (-3.0 * kGravity / (2.0 * kLength) * std::sin(theta_ + std::numbers::pi) +
                      3.0 / (kMass * kLength * kLength) * u) *
                         kDt;
    theta_ = theta_ + new_theta_dot * kDt;
    theta_dot_ = std::clamp(new_theta_dot, -kMaxSpeed, kMaxSpeed);

    StepResult r;
    r.reward = -cost;
    r.done = false;
    r.next_state = observe();
    return r;
  }

 private:
  Observation observe() const {
    return Observation{{std::cos(theta_), std::sin(theta_), theta_dot_}, nullptr};
  }
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

// Two-link underactuated swing-up with Sutton's "book" dynamics and RK4.
class Acrobot final : public Env {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLink1 = 1.0;
  static constexpr double kMass1 = 1.0;
  static constexpr double kMass2 = 1.0;
  static constexpr double kCom1 = 0.5;
  static constexpr double kCom2 = 0.5;
  static constexpr double kMoi = 1.0;
  static constexpr double kMaxVel1 = 4.0 * std::numbers::pi;
  static constexpr double kMaxVel2 = 9.0 * std::numbers::pi;
  static constexpr double kGravity = 9.8;

  Acrobot() : Env(EnvSpec{"acrobot-v1", 6, 3, 500, -100.0, -500.0, 0.0}) {}

  void set_state(const std::array<double, 4>& s) { state_ = s; }
  const std::array<double, 4>& state() const { return state_; }

  std::unique_ptr<Env> clone() const override { return std::make_unique<Acrobot>(*this); }

 protected:
  Observation do_reset(Rng& rng) override {
    for (auto& v : state_) v = uniform(rng, -0.1, 0.1);
    return observe();
  }

  StepResult do_step(std::size_t action) override {
    const double torque = static_cast<double>(action) - 1.0;
    std::array<double, 4> s = rk4(state_, torque);
    s[0] = wrap(s[0]);
    s[1] = wrap(s[1]);
    s[2] = std::clamp(s[2], -kMaxVel1, kMaxVel1);
    s[3] = std::clamp(s[3], -kMaxVel2, kMaxVel2);
    state_ = s;

    StepResult r;
    r.done = -std::cos(s[0]) - std::cos(s[1] + s[0]) > 1.0;
    r.reward = r.done ? 0.0 : -1.0;
    r.next_state = observe();
    return r;
  }

 private:
  static double wrap(double x) {
    const double lo = -std::numbers::pi;
    const double span = 2.0 * std::numbers::pi;
    while (x > std::numbers::pi) x -= span;
    while (x < lo) x += span;
    return x;
  }

  static std::array<double, 4> derivs(const std::array<double, 4>& s, double a) {
    const double m1 = kMass1, m2 = kMass2, l1 = kLink1, lc1 = kCom1, lc2 = kCom2;
    const double i1 = kMoi, i2 = kMoi, g = kGravity;
    const auto [theta1, theta2, dtheta1, dtheta2] = s;
    const double d1 =
        m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
    const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - std::numbers::pi / 2.0);
    const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                        2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - std::numbers::pi / 2.0) + phi2;
    const double ddtheta2 =
        (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
        (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
  }

  static std::array<double, 4> rk4(const std::array<double, 4>& s, double a) {
    auto axpy = [](const std::array<double, 4>& x, double h, const std::array<double, 4>& d) {
      std::array<double, 4> out{};
      for (std::size_t i = 0; i < 4; ++i) out[i] = x[i] + h * d[i];
      return out;
    };
    const double h = kDt;
    const auto k1 = derivs(s, a);
    const auto k2 = derivs(axpy(s, h / 2, k1), a);
    const auto k3 = derivs(axpy(s, h / 2, k2), a);
    const auto k4 = derivs(axpy(s, h, k3), a);
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
  }

  Observation observe() const {
    const auto [t1, t2, d1, d2] = state_;
    return Observation{{std::cos(t1), std::sin(t1), std::cos(t2), std::sin(t2), d1, d2}, nullptr};
  }

  std::array<double, 4> state_{};
};

// 8x8 grid rendered to 84x84 grayscale frames. The agent starts in a random
// non-goal cell and walks toward a fixed goal in the bottom-right corner.
class PixelGrid final : public Env {
 public:
  static constexpr int kGrid = 8;
  static constexpr int kGoalRow = kGrid - 1;
  static constexpr int kGoalCol = kGrid - 1;
  static constexpr std::uint8_t kAgentValue = 255;
  static constexpr std::uint8_t kGoalValue = 128;
  static constexpr double kStepReward = -0.01;
  static constexpr double kGoalReward = 1.0;

  PixelGrid()
      : Env(EnvSpec{"pixelgrid", kFrameStack * kFrameSize, 4, 100, std::nullopt, -1.0, 1.0}) {}

  int agent_row() const { return row_; }
  int agent_col() const { return col_; }

  // Places the agent and refills the stack with the resulting frame.
  void place_agent(int row, int col) {
    require(row >= 0 && row < kGrid && col >= 0 && col < kGrid, "pixelgrid: cell out of range");
    row_ = row;
    col_ = col;
    const auto f = render_frame();
    frames_.assign(kFrameStack, f);
  }

  PixelObservation render_pixels() const override {
    PixelObservation obs;
    for (std::size_t f = 0; f < kFrameStack; ++f)
      std::copy(frames_[f].begin(), frames_[f].end(), obs.bytes.begin() + f * kFrameSize);
    return obs;
  }

  std::unique_ptr<Env> clone() const override { return std::make_unique<PixelGrid>(*this); }

 protected:
  Observation do_reset(Rng& rng) override {
    std::size_t cell = uniform_index(rng, kGrid * kGrid - 1);  // goal cell excluded
    place_agent(static_cast<int>(cell) / kGrid, static_cast<int>(cell) % kGrid);
    return observe();
  }

  StepResult do_step(std::size_t action) override {
    static constexpr int kDr[4] = {-1, 1, 0, 0};
    static constexpr int kDc[4] = {0, 0, -1, 1};
    row_ = std::clamp(row_ + kDr[action], 0, kGrid - 1);
    col_ = std::clamp(col_ + kDc[action], 0, kGrid - 1);
    frames_.pop_front();
    frames_.push_back(render_frame());

    StepResult r;
    r.done = row_ == kGoalRow && col_ == kGoalCol;
    r.reward = r.done ? kGoalReward : kStepReward;
    r.next_state = observe();
    return r;
  }

 private:
  using Frame = std::array<std::uint8_t, kFrameSize>;

  static void fill_cell(Frame& f, int row, int col, std::uint8_t value) {
    const std::size_t r0 = static_cast<std::size_t>(row) * kFrameSide / kGrid;
    const std::size_t r1 = static_cast<std::size_t>(row + 1) * kFrameSide / kGrid;
    const std::size_t c0 = static_cast<std::size_t>(col) * kFrameSide / kGrid;
    const std::size_t c1 = static_cast<std::size_t>(col + 1) * kFrameSide / kGrid;
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) f[r * kFrameSide + c] = value;
  }

  Frame render_frame() const {
    Frame f{};
    fill_cell(f, kGoalRow, kGoalCol, kGoalValue);
    fill_cell(f, row_, col_, kAgentValue);
    return f;
  }

  Observation observe() const {
    return Observation{{}, std::make_shared<const PixelObservation>(render_pixels())};
  }

  int row_ = 0;
  int col_ = 0;
  std::deque<Frame> frames_;
};

inline std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "cartpole-v0") return std::make_unique<CartPole>(200);
  if (name == "cartpole-v1") return std::make_unique<CartPole>(500);
  if (name == "pendulum-v0") return std::make_unique<Pendulum>();
  if (name == "acrobot-v1") return std::make_unique<Acrobot>();
  if (name == "pixelgrid") return std::make_unique<PixelGrid>();
  throw UsageError("unknown environment '" + name + "'");
}

inline bool is_known_env(const std::string& name) {
  return name == "cartpole-v0" || name == "cartpole-v1" || name == "pendulum-v0" ||
         name == "acrobot-v1" || name == "pixelgrid";
}

}  // namespace cdakd
