#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cdakd/errors.hpp"
#include "cdakd/observation.hpp"
#include "cdakd/random.hpp"

namespace cdakd {

// ---------------------------------------------------------------------------
// Loss

inline double huber(double delta, double kappa = 1.0) {
  const double a = std::abs(delta);
  return a <= kappa ? 0.5 * delta * delta : kappa * (a - 0.5 * kappa);
}

// d huber / d delta
inline double huber_grad(double delta, double kappa = 1.0) {
  return std::clamp(delta, -kappa, kappa);
}

// ---------------------------------------------------------------------------
// Layers

enum class Activation { kIdentity, kTanh, kRelu };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    default: return "linear";
  }
}

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kIdentity;
  throw UsageError("unknown activation '" + s + "'");
}

// tanh through a single exp; absolute error stays near 1 ulp, which is all
// the slope 1 - y^2 needs, and it is several times cheaper than std::tanh.
inline double tanh_exp(double z) {
  if (z > 20.0) return 1.0;
  if (z < -20.0) return -1.0;
  return 1.0 - 2.0 / (std::exp(2.0 * z) + 1.0);
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return tanh_exp(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    default: return z;
  }
}

// Derivative expressed through the activation output y.
inline double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    default: return 1.0;
  }
}

inline void init_uniform_fan_in(std::vector<double>& w, std::vector<double>& b, std::size_t fan_in,
                                Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : w) v = uniform(rng, -limit, limit);
  for (auto& v : b) v = uniform(rng, -limit, limit);
}

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::kIdentity;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;

  Dense() = default;
  Dense(std::size_t in_size, std::size_t out_size, Activation a)
      : in(in_size), out(out_size), act(a), weight(in_size * out_size, 0.0), bias(out_size, 0.0) {}

  std::size_t input_size() const { return in; }
  std::size_t output_size() const { return out; }
  std::size_t fan_in() const { return in; }

  void forward(std::span<const double> x, std::span<double> y) const {
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = weight.data() + o * in;
      double z = bias[o];
      for (std::size_t i = 0; i < in; ++i) z += w[i] * x[i];
      y[o] = activate(act, z);
    }
  }

  // Accumulates into gw/gb; overwrites dx when it is non-empty. dy is
  // overwritten with the pre-activation gradient.
  void backward(std::span<const double> x, std::span<const double> y, std::span<double> dy,
                std::span<double> dx, std::span<double> gw, std::span<double> gb) const {
    if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double dz = dy[o] * activation_slope(act, y[o]);
      dy[o] = dz;
      if (dz == 0.0) continue;
      gb[o] += dz;
      double* g = gw.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) g[i] += dz * x[i];
      if (!dx.empty()) {
        const double* w = weight.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) dx[i] += w[i] * dz;
      }
    }
  }
};

// Valid (unpadded) strided convolution over channel-major input.
struct Conv2d {
  std::size_t in_c = 0, in_h = 0, in_w = 0;
  std::size_t out_c = 0, kernel = 0, stride = 1;
  std::size_t out_h = 0, out_w = 0;
  Activation act = Activation::kIdentity;
  std::vector<double> weight;  // out_c x in_c x kernel x kernel
  std::vector<double> bias;

  Conv2d() = default;
  Conv2d(std::size_t channels, std::size_t height, std::size_t width, std::size_t filters,
         std::size_t kernel_size, std::size_t step, Activation a)
      : in_c(channels), in_h(height), in_w(width), out_c(filters), kernel(kernel_size),
        stride(step), act(a) {
    require(kernel <= in_h && kernel <= in_w && stride >= 1, "conv2d: kernel larger than input");
    out_h = (in_h - kernel) / stride + 1;
    out_w = (in_w - kernel) / stride + 1;
    weight.assign(out_c * in_c * kernel * kernel, 0.0);
    bias.assign(out_c, 0.0);
  }

  std::size_t input_size() const { return in_c * in_h * in_w; }
  std::size_t output_size() const { return out_c * out_h * out_w; }
  std::size_t fan_in() const { return in_c * kernel * kernel; }

  void forward(std::span<const double> x, std::span<double> y) const {
    const std::size_t kk = kernel * kernel;
    for (std::size_t oc = 0; oc < out_c; ++oc) {
      for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          double z = bias[oc];
          for (std::size_t ic = 0; ic < in_c; ++ic) {
            const double* w = weight.data() + (oc * in_c + ic) * kk;
            const double* src = x.data() + ic * in_h * in_w + (oy * stride) * in_w + ox * stride;
            for (std::size_t ky = 0; ky < kernel; ++ky) {
              const double* row = src + ky * in_w;
              const double* wr = w + ky * kernel;
              for (std::size_t kx = 0; kx < kernel; ++kx) z += wr[kx] * row[kx];
            }
          }
          y[(oc * out_h + oy) * out_w + ox] = activate(act, z);
        }
      }
    }
  }

  void backward(std::span<const double> x, std::span<const double> y, std::span<double> dy,
                std::span<double> dx, std::span<double> gw, std::span<double> gb) const {
    if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
    const std::size_t kk = kernel * kernel;
    for (std::size_t oc = 0; oc < out_c; ++oc) {
      for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          const std::size_t o = (oc * out_h + oy) * out_w + ox;
          const double dz = dy[o] * activation_slope(act, y[o]);
          dy[o] = dz;
          if (dz == 0.0) continue;
          gb[oc] += dz;
          for (std::size_t ic = 0; ic < in_c; ++ic) {
            const std::size_t base = ic * in_h * in_w + (oy * stride) * in_w + ox * stride;
            double* g = gw.data() + (oc * in_c + ic) * kk;
            const double* w = weight.data() + (oc * in_c + ic) * kk;
            for (std::size_t ky = 0; ky < kernel; ++ky) {
              for (std::size_t kx = 0; kx < kernel; ++kx) {
                const std::size_t xi = base + ky * in_w + kx;
                g[ky * kernel + kx] += dz * x[xi];
                if (!dx.empty()) dx[xi] += w[ky * kernel + kx] * dz;
              }
            }
          }
        }
      }
    }
  }
};

using Layer = std::variant<Dense, Conv2d>;

inline std::size_t layer_input_size(const Layer& l) {
  return std::visit([](const auto& x) { return x.input_size(); }, l);
}
inline std::size_t layer_output_size(const Layer& l) {
  return std::visit([](const auto& x) { return x.output_size(); }, l);
}

// ---------------------------------------------------------------------------
// Gradients

// Per-parameter-block gradient arrays, aligned with
// MultiHeadQNet::parameter_blocks().
struct GradBundle {
  std::vector<std::vector<double>> blocks;

  void zero() {
    for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
  }

  void add_scaled(const GradBundle& other, double scale) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (std::size_t j = 0; j < blocks[i].size(); ++j) blocks[i][j] += scale * other.blocks[i][j];
  }

  double dot(const GradBundle& other) const {
    require(other.blocks.size() == blocks.size(), "grad bundle layout mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      require(other.blocks[i].size() == blocks[i].size(), "grad bundle layout mismatch");
      for (std::size_t j = 0; j < blocks[i].size(); ++j) s += blocks[i][j] * other.blocks[i][j];
    }
    return s;
  }

  bool all_finite() const {
    for (const auto& b : blocks)
      for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }

  bool block_is_zero(std::size_t i) const {
    return std::all_of(blocks[i].begin(), blocks[i].end(), [](double v) { return v == 0.0; });
  }
};

// Activations recorded by MultiHeadQNet::trace, consumed by backward.
class ForwardPass {
 public:
  bool recorded() const { return !acts_.empty(); }
  std::span<const double> features() const { return acts_.back(); }

 private:
  friend class MultiHeadQNet;
  std::vector<std::vector<double>> acts_;   // acts_[0] = input, acts_[i+1] = layer i output
  std::vector<std::vector<double>> grads_;  // scratch, same shapes as acts_
  std::vector<double> head_scratch_;
  std::vector<double> head_dx_;
};

struct HeadSeed {
  std::size_t head;
  std::span<const double> dq;  // dL/dq for every action of that head
};

// ---------------------------------------------------------------------------
// Network

// Shared trunk followed by k identically shaped linear heads. Parameter
// blocks are ordered trunk layer 0 (weight, bias), ..., head 0 (weight,
// bias), ..., head k-1 (weight, bias).
class MultiHeadQNet {
 public:
  MultiHeadQNet() = default;

  MultiHeadQNet(std::vector<std::size_t> input_shape, std::vector<Layer> trunk, std::size_t heads,
                std::size_t actions)
      : input_shape_(std::move(input_shape)), trunk_(std::move(trunk)) {
    require(heads >= 1, "network needs at least one head");
    require(actions >= 1, "network needs at least one action");
    std::size_t expected = 1;
    for (auto d : input_shape_) expected *= d;
    for (const auto& l : trunk_) {
      require(layer_input_size(l) == expected, "trunk layer input size mismatch");
      expected = layer_output_size(l);
    }
    heads_.assign(heads, Dense(expected, actions, Activation::kIdentity));
  }

  // FC(state_dim -> 64, tanh) trunk, FC(64 -> actions) heads.
  static MultiHeadQNet classic(std::size_t state_dim, std::size_t actions, std::size_t heads,
                               Rng& rng, std::size_t hidden = 64) {
    MultiHeadQNet net({state_dim}, {Dense(state_dim, hidden, Activation::kTanh)}, heads, actions);
    net.initialize(rng);
    return net;
  }

  static std::vector<Layer> pixel_conv_stack() {
    Conv2d c1(kFrameStack, kFrameSide, kFrameSide, 32, 8, 4, Activation::kRelu);
    Conv2d c2(32, c1.out_h, c1.out_w, 64, 4, 2, Activation::kRelu);
    Conv2d c3(64, c2.out_h, c2.out_w, 64, 3, 1, Activation::kRelu);
    return {c1, c2, c3};
  }

  // Three ReLU convolutions, FC(3136 -> 512, relu), FC(512 -> actions) heads.
  static MultiHeadQNet pixel(std::size_t actions, std::size_t heads, Rng& rng) {
    auto layers = pixel_conv_stack();
    const std::size_t flat = layer_output_size(layers.back());
    layers.emplace_back(Dense(flat, 512, Activation::kRelu));
    MultiHeadQNet net({kFrameStack, kFrameSide, kFrameSide}, std::move(layers), heads, actions);
    net.initialize(rng);
    return net;
  }

  void initialize(Rng& rng) {
    for (auto& l : trunk_)
      std::visit([&](auto& x) { init_uniform_fan_in(x.weight, x.bias, x.fan_in(), rng); }, l);
    for (auto& h : heads_) init_uniform_fan_in(h.weight, h.bias, h.fan_in(), rng);
  }

  std::size_t head_count() const { return heads_.size(); }
  std::size_t action_count() const { return heads_.front().out; }
  std::size_t input_size() const {
    std::size_t n = 1;
    for (auto d : input_shape_) n *= d;
    return n;
  }
  std::size_t feature_size() const { return heads_.front().in; }
  std::size_t trunk_block_count() const { return 2 * trunk_.size(); }
  const std::vector<Layer>& trunk() const { return trunk_; }

  // Parameter block indices of head h: {weight, bias}.
  std::size_t head_block(std::size_t h) const { return trunk_block_count() + 2 * h; }

  std::vector<std::span<double>> parameter_blocks() {
    std::vector<std::span<double>> out;
    for (auto& l : trunk_)
      std::visit([&](auto& x) { out.emplace_back(x.weight); out.emplace_back(x.bias); }, l);
    for (auto& h : heads_) {
      out.emplace_back(h.weight);
      out.emplace_back(h.bias);
    }
    return out;
  }

  std::vector<std::span<const double>> parameter_blocks() const {
    std::vector<std::span<const double>> out;
    for (const auto& l : trunk_)
      std::visit([&](const auto& x) { out.emplace_back(x.weight); out.emplace_back(x.bias); }, l);
    for (const auto& h : heads_) {
      out.emplace_back(h.weight);
      out.emplace_back(h.bias);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto b : parameter_blocks()) n += b.size();
    return n;
  }

  GradBundle zero_grads() const {
    GradBundle g;
    for (auto b : parameter_blocks()) g.blocks.emplace_back(b.size(), 0.0);
    return g;
  }

  void fill(double value) {
    for (auto b : parameter_blocks()) std::fill(b.begin(), b.end(), value);
  }

  bool all_finite() const {
    for (auto b : parameter_blocks())
      for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }

  // Bitwise equality of every parameter.
  bool identical(const MultiHeadQNet& other) const {
    auto a = parameter_blocks();
    auto b = other.parameter_blocks();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].size() != b[i].size()) return false;
      if (std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(double)) != 0) return false;
    }
    return true;
  }

  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : parameter_blocks()) {
      const auto* p = reinterpret_cast<const unsigned char*>(b.data());
      for (std::size_t i = 0; i < b.size() * sizeof(double); ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
      }
    }
    return h;
  }

  // Records trunk activations for `input`.
  void trace(std::span<const double> input, ForwardPass& pass) const {
    require(input.size() == input_size(), "network input has wrong size");
    pass.acts_.resize(trunk_.size() + 1);
    pass.acts_[0].assign(input.begin(), input.end());
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
      pass.acts_[i + 1].resize(layer_output_size(trunk_[i]));
      std::visit([&](const auto& l) { l.forward(pass.acts_[i], pass.acts_[i + 1]); }, trunk_[i]);
    }
  }

  void head_values(const ForwardPass& pass, std::size_t head, std::span<double> q) const {
    require(pass.recorded(), "head_values() needs a recorded forward pass");
    require(head < heads_.size(), "head index out of range");
    require(q.size() == action_count(), "q buffer has wrong size");
    heads_[head].forward(pass.features(), q);
  }

  std::vector<double> forward(std::span<const double> input, std::size_t head) const {
    ForwardPass pass;
    trace(input, pass);
    std::vector<double> q(action_count());
    head_values(pass, head, q);
    return q;
  }

  std::vector<double> forward(const Observation& obs, std::size_t head) const {
    std::vector<double> scratch;
    return forward(network_input(obs, scratch), head);
  }

  // Reverse-mode gradient of a scalar loss whose only dependence on the
  // network is through the head outputs named in `seeds`. Accumulates into
  // `grads`; the network is not modified.
  void backward(ForwardPass& pass, std::span<const HeadSeed> seeds, GradBundle& grads) const {
    require(pass.recorded(), "backward() called without a recorded forward pass");
    require(grads.blocks.size() == trunk_block_count() + 2 * heads_.size(),
            "gradient bundle does not match network layout");
    const std::size_t n = trunk_.size();
    pass.grads_.resize(n + 1);
    auto& dfeat = pass.grads_[n];
    dfeat.assign(feature_size(), 0.0);

    auto& dx = pass.head_dx_;
    dx.resize(feature_size());
    for (const auto& seed : seeds) {
      require(seed.head < heads_.size(), "head index out of range");
      require(seed.dq.size() == action_count(), "dq has wrong size");
      const Dense& h = heads_[seed.head];
      pass.head_scratch_.assign(seed.dq.begin(), seed.dq.end());
      // Identity activation: y is not consulted, pass dq as a placeholder.
      h.backward(pass.features(), seed.dq, pass.head_scratch_, dx, grads.blocks[head_block(seed.head)],
                 grads.blocks[head_block(seed.head) + 1]);
      for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dx[i];
    }

    for (std::size_t i = n; i-- > 0;) {
      auto& dout = pass.grads_[i + 1];
      std::span<double> din;
      if (i > 0) {
        pass.grads_[i].resize(pass.acts_[i].size());
        din = pass.grads_[i];
      }
      std::visit(
          [&](const auto& l) {
            l.backward(pass.acts_[i], pass.acts_[i + 1], dout, din, grads.blocks[2 * i],
                       grads.blocks[2 * i + 1]);
          },
          trunk_[i]);
    }
  }

  // Compact, parseable description of the architecture.
  std::string layout() const {
    std::ostringstream os;
    os << "input=";
    for (std::size_t i = 0; i < input_shape_.size(); ++i) os << (i ? "x" : "") << input_shape_[i];
    for (const auto& l : trunk_) {
      if (const auto* d = std::get_if<Dense>(&l)) {
        os << ";dense=" << d->out << ":" << activation_name(d->act);
      } else {
        const auto& c = std::get<Conv2d>(l);
        os << ";conv=" << c.out_c << ":" << c.kernel << ":" << c.stride << ":" << activation_name(c.act);
      }
    }
    os << ";heads=" << heads_.size() << "x" << action_count();
    return os.str();
  }

  // Zero-initialized network for a layout() string.
  static MultiHeadQNet from_layout(const std::string& layout) {
    auto split = [](const std::string& s, char sep) {
      std::vector<std::string> parts;
      std::string cur;
      std::istringstream is(s);
      while (std::getline(is, cur, sep)) parts.push_back(cur);
      return parts;
    };
    auto to_size = [](const std::string& s) {
      std::size_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      require(ec == std::errc() && p == s.data() + s.size(), "bad number in layout: " + s);
      return v;
    };
    std::vector<std::size_t> shape;
    std::vector<Layer> layers;
    std::size_t heads = 0, actions = 0;
    for (const auto& tok : split(layout, ';')) {
      const auto eq = tok.find('=');
      require(eq != std::string::npos, "bad layout token: " + tok);
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "input") {
        for (const auto& d : split(val, 'x')) shape.push_back(to_size(d));
        continue;
      }
      std::vector<std::size_t> cur = shape;
      if (!layers.empty()) {
        if (const auto* c = std::get_if<Conv2d>(&layers.back()))
          cur = {c->out_c, c->out_h, c->out_w};
        else
          cur = {layer_output_size(layers.back())};
      }
      std::size_t flat = 1;
      for (auto d : cur) flat *= d;
      if (key == "dense") {
        auto f = split(val, ':');
        require(f.size() == 2, "bad dense token: " + tok);
        layers.emplace_back(Dense(flat, to_size(f[0]), parse_activation(f[1])));
      } else if (key == "conv") {
        auto f = split(val, ':');
        require(f.size() == 4 && cur.size() == 3, "bad conv token: " + tok);
        layers.emplace_back(Conv2d(cur[0], cur[1], cur[2], to_size(f[0]), to_size(f[1]),
                                   to_size(f[2]), parse_activation(f[3])));
      } else if (key == "heads") {
        auto f = split(val, 'x');
        require(f.size() == 2, "bad heads token: " + tok);
        heads = to_size(f[0]);
        actions = to_size(f[1]);
      } else {
        throw UsageError("unknown layout token: " + tok);
      }
    }
    require(!shape.empty() && heads > 0, "layout lacks input or heads");
    return MultiHeadQNet(shape, std::move(layers), heads, actions);
  }

 private:
  std::vector<std::size_t> input_shape_;
  std::vector<Layer> trunk_;
  std::vector<Dense> heads_;
};

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  static AdamState for_net(const MultiHeadQNet& net) {
    AdamState s;
    for (auto b : net.parameter_blocks()) {
      s.m.emplace_back(b.size(), 0.0);
      s.v.emplace_back(b.size(), 0.0);
    }
    return s;
  }
};

inline void adam_step(MultiHeadQNet& net, const GradBundle& grads, double lr, AdamState& state,
                      const AdamConfig& cfg = {}) {
  if (!grads.all_finite()) throw RunAborted("adam_step: non-finite gradient");
  auto params = net.parameter_blocks();
  require(params.size() == grads.blocks.size() && params.size() == state.m.size(),
          "adam_step: layout mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    const auto& g = grads.blocks[b];
    auto& m = state.m[b];
    auto& v = state.v[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Gradient checking

// Evaluates the loss at `net`; when `grads` is non-null also accumulates the
// analytic gradient into it.
using LossFn = std::function<double(const MultiHeadQNet& net, GradBundle* grads)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  std::size_t samples_per_block = 64;  // 0 = every parameter
  std::uint64_t seed = 0;
  double denominator_floor = 1e-6;
};

// Worst relative error between the analytic gradient and central
// differences over a random subsample of every parameter block.
inline double gradient_check(MultiHeadQNet net, const LossFn& loss_fn, const GradCheckOptions& opt = {}) {
  GradBundle analytic = net.zero_grads();
  loss_fn(net, &analytic);
  Rng rng(opt.seed);
  double worst = 0.0;
  auto blocks = net.parameter_blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto block = blocks[b];
    std::vector<std::size_t> idx;
    if (opt.samples_per_block == 0 || opt.samples_per_block >= block.size()) {
      for (std::size_t i = 0; i < block.size(); ++i) idx.push_back(i);
    } else {
      for (std::size_t s = 0; s < opt.samples_per_block; ++s) idx.push_back(uniform_index(rng, block.size()));
    }
    for (auto i : idx) {
      const double saved = block[i];
      block[i] = saved + opt.epsilon;
      const double up = loss_fn(net, nullptr);
      block[i] = saved - opt.epsilon;
      const double down = loss_fn(net, nullptr);
      block[i] = saved;
      const double numeric = (up - down) / (2.0 * opt.epsilon);
      const double exact = analytic.blocks[b][i];
      const double denom = std::max({std::abs(numeric), std::abs(exact), opt.denominator_floor});
      worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Random encoder

// Convolutional encoder with fixed random weights, used only to embed pixel
// observations for clustering. It never receives gradients.
class RandomEncoder {
 public:
  static constexpr std::size_t kDefaultDim = 50;

  explicit RandomEncoder(std::uint64_t seed, std::size_t output_dim = kDefaultDim) : seed_(seed) {
    // A single linear head of width d plays the role of the projection.
    net_ = MultiHeadQNet({kFrameStack, kFrameSide, kFrameSide}, MultiHeadQNet::pixel_conv_stack(), 1,
                         output_dim);
    Rng rng = make_rng(seed, Stream::kEncoder);
    net_.initialize(rng);
  }

  std::size_t output_dim() const { return net_.action_count(); }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t checksum() const { return net_.checksum(); }
  const MultiHeadQNet& network() const { return net_; }

  std::vector<double> encode(const PixelObservation& obs) const {
    std::vector<double> input(obs.bytes.size());
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = obs.bytes[i] / 255.0;
    return net_.forward(input, 0);
  }

 private:
  std::uint64_t seed_;
  MultiHeadQNet net_;
};

// ---------------------------------------------------------------------------
// Checkpoints
//
// Text format, one item per line:
//   cdakd-checkpoint 1
//   seed <u64>
//   layout <MultiHeadQNet::layout()>
//   blocks <count>
//   <size> <v0> <v1> ...        (one line per parameter block, declaration order)
// Values use shortest round-trip decimal, so load(save(net)) is bit-exact.

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    throw UsageError("not a number: '" + s + "'");
  }
  return v;
}

inline void save_checkpoint(std::ostream& os, const MultiHeadQNet& net, std::uint64_t seed) {
  os << "cdakd-checkpoint 1\n";
  os << "seed " << seed << "\n";
  os << "layout " << net.layout() << "\n";
  const auto blocks = net.parameter_blocks();
  os << "blocks " << blocks.size() << "\n";
  for (auto b : blocks) {
    os << b.size();
    for (double v : b) os << ' ' << format_double(v);
    os << '\n';
  }
}

struct LoadedCheckpoint {
  MultiHeadQNet net;
  std::uint64_t seed = 0;
};

inline LoadedCheckpoint load_checkpoint(std::istream& is) {
  std::string tag, version, key, layout;
  is >> tag >> version;
  require(tag == "cdakd-checkpoint" && version == "1", "not a cdakd checkpoint");
  LoadedCheckpoint out;
  is >> key >> out.seed;
  require(key == "seed", "checkpoint: expected seed");
  is >> key >> layout;
  require(key == "layout", "checkpoint: expected layout");
  out.net = MultiHeadQNet::from_layout(layout);
  std::size_t count = 0;
  is >> key >> count;
  auto blocks = out.net.parameter_blocks();
  require(key == "blocks" && count == blocks.size(), "checkpoint: block count mismatch");
  for (auto b : blocks) {
    std::size_t n = 0;
    is >> n;
    require(n == b.size(), "checkpoint: block size mismatch");
    std::string tok;
    for (auto& v : b) {
      is >> tok;
      v = parse_double(tok);
    }
  }
  require(static_cast<bool>(is), "checkpoint: truncated input");
  return out;
}

}  // namespace cdakd
