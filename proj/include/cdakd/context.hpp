#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cdakd/errors.hpp"
#include "cdakd/nn.hpp"
#include "cdakd/random.hpp"

namespace cdakd {

using ContextId = std::size_t;
using Centroid = std::vector<double>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Nearest centroid by squared Euclidean distance, lowest index on ties.
// An empty centroid set maps everything to context 0.
inline ContextId assign(std::span<const Centroid> centroids, std::span<const double> x) {
  ContextId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    require(centroids[i].size() == x.size(), "assign: dimension mismatch");
    const double d = squared_distance(centroids[i], x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Live centroids C with counts N, plus the frozen target centroids used for
// assignment. Slots fill from the first k distinct observed points unless a
// warm start installs all k at once.
class ContextModel {
 public:
  ContextModel(std::size_t k, std::size_t dim) : dim_(dim), centroids_(k, Centroid(dim, 0.0)), counts_(k, 0) {
    require(k >= 1, "context model needs k >= 1");
  }

  ContextModel(std::vector<Centroid> centroids, std::vector<std::uint64_t> counts)
      : dim_(centroids.empty() ? 0 : centroids.front().size()),
        centroids_(std::move(centroids)),
        counts_(std::move(counts)),
        filled_(centroids_.size()) {
    require(!centroids_.empty(), "context model needs k >= 1");
    require(counts_.size() == centroids_.size(), "counts and centroids differ in length");
    for (const auto& c : centroids_) require(c.size() == dim_, "centroids differ in dimension");
    sync_targets();
  }

  std::size_t k() const { return centroids_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t filled() const { return filled_; }
  const std::vector<Centroid>& centroids() const { return centroids_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::span<const Centroid> targets() const { return {targets_.data(), target_filled_}; }
  std::uint64_t total_count() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  std::uint64_t distance_evaluations() const { return distance_evals_; }

  ContextId assign_target(std::span<const double> x) const {
    require(x.size() == dim_, "assign: dimension mismatch");
    return assign(targets(), x);
  }

  // One sequential k-means step on the live centroids. While slots remain
  // empty, a point unequal to every filled centroid opens a new slot;
  // the target centroids are kept equal to C during that fill phase.
  ContextId update(std::span<const double> x) {
    require(x.size() == dim_, "skm_update: dimension mismatch");
    if (filled_ < k()) {
      bool seen = false;
      for (std::size_t i = 0; i < filled_ && !seen; ++i)
        seen = std::equal(x.begin(), x.end(), centroids_[i].begin());
      if (!seen) {
        const ContextId slot = filled_++;
        centroids_[slot].assign(x.begin(), x.end());
        counts_[slot] = 1;
        sync_targets();
        return slot;
      }
    }
    ContextId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < filled_; ++i) {
      const double d = squared_distance(centroids_[i], x);
      ++distance_evals_;
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    auto& c = centroids_[best];
    const double n = static_cast<double>(++counts_[best]);
    for (std::size_t j = 0; j < dim_; ++j) c[j] += (x[j] - c[j]) / n;
    return best;
  }

  void sync_targets() {
    targets_ = centroids_;
    target_filled_ = filled_;
  }

  void set_targets(std::vector<Centroid> targets) {
    require(targets.size() == k(), "set_targets: expected k centroids");
    for (const auto& c : targets) require(c.size() == dim_, "set_targets: dimension mismatch");
    targets_ = std::move(targets);
    target_filled_ = k();
  }

  // Replaces C and N (and Ĉ) wholesale, e.g. after a warm start.
  void install(std::vector<Centroid> centroids, std::vector<std::uint64_t> counts) {
    require(centroids.size() == k() && counts.size() == k(), "install: expected k centroids");
    for (const auto& c : centroids) require(c.size() == dim_, "install: dimension mismatch");
    centroids_ = std::move(centroids);
    counts_ = std::move(counts);
    filled_ = k();
    sync_targets();
  }

 private:
  std::size_t dim_;
  std::vector<Centroid> centroids_;
  std::vector<std::uint64_t> counts_;
  std::vector<Centroid> targets_;
  std::size_t filled_ = 0;
  std::size_t target_filled_ = 0;
  std::uint64_t distance_evals_ = 0;
};

// Free-function forms of the model operations.
inline ContextId skm_update(ContextModel& model, std::span<const double> x) { return model.update(x); }
inline void sync_targets(ContextModel& model) { model.sync_targets(); }

struct WarmStartResult {
  std::vector<Centroid> centroids;
  std::vector<std::uint64_t> counts;  // cluster sizes at convergence
  std::size_t iterations = 0;
  bool jittered = false;  // fewer than k distinct states were available
};

struct WarmStartOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-8;  // max centroid shift that counts as converged
  double jitter = 1e-6;
};

// Lloyd's k-means with k-means++ seeding over the pre-training states.
inline WarmStartResult warm_start(std::span<const std::vector<double>> states, std::size_t k, Rng& rng,
                                  const WarmStartOptions& opt = {}) {
  require(!states.empty(), "warm_start: no states");
  require(k >= 1, "warm_start: k must be >= 1");
  const std::size_t dim = states.front().size();
  for (const auto& s : states) require(s.size() == dim, "warm_start: states differ in dimension");

  WarmStartResult out;
  std::vector<std::vector<double>> points(states.begin(), states.end());
  std::vector<std::vector<double>> distinct;
  for (const auto& p : points)
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) {
      distinct.push_back(p);
      if (distinct.size() >= k) break;
    }
  if (distinct.size() < k) {
    out.jittered = true;
    const std::size_t base = points.size();
    for (std::size_t i = 0; points.size() < std::max(k, base + k); ++i) {
      auto p = points[i % base];
      for (auto& v : p) v += uniform(rng, -opt.jitter, opt.jitter);
      points.push_back(std::move(p));
    }
  }

  // k-means++ seeding
  std::vector<Centroid> centers;
  centers.push_back(points[uniform_index(rng, points.size())]);
  std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = uniform(rng, 0.0, total);
      for (pick = 0; pick + 1 < points.size(); ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = uniform_index(rng, points.size());
    }
    centers.push_back(points[pick]);
  }

  std::vector<std::size_t> label(points.size(), 0);
  std::vector<std::uint64_t> sizes(k, 0);
  for (out.iterations = 1; out.iterations <= opt.max_iterations; ++out.iterations) {
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      label[i] = assign(centers, points[i]);
      ++sizes[label[i]];
    }
    std::vector<Centroid> next(k, Centroid(dim, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = 0; j < dim; ++j) next[label[i]][j] += points[i][j];
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) {
        next[c] = centers[c];  // empty cluster keeps its position
        continue;
      }
      for (auto& v : next[c]) v /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(squared_distance(next[c], centers[c])));
    }
    centers = std::move(next);
    if (shift < opt.tolerance) break;
  }
  out.iterations = std::min(out.iterations, opt.max_iterations);
  std::fill(sizes.begin(), sizes.end(), 0);
  for (const auto& p : points) ++sizes[assign(centers, p)];
  out.centroids = std::move(centers);
  out.counts = std::move(sizes);
  return out;
}

// Game-score contextualizer: index of the half-open bin holding the score.
inline ContextId contextualize_gs(double cumulative_score, std::span<const double> bin_edges) {
  return static_cast<ContextId>(std::upper_bound(bin_edges.begin(), bin_edges.end(), cumulative_score) -
                                bin_edges.begin());
}

// k-1 equal-width interior edges over [lo, hi].
inline std::vector<double> equal_width_edges(double lo, double hi, std::size_t k) {
  std::vector<double> edges;
  for (std::size_t i = 1; i < k; ++i) edges.push_back(lo + (hi - lo) * static_cast<double>(i) / k);
  return edges;
}

// Initial-state contextualizer: nearest of the fixed initial-state centroids.
inline ContextId contextualize_is(std::span<const Centroid> initial_centroids, std::span<const double> x) {
  require(!initial_centroids.empty(), "contextualize_is: no centroids");
  return assign(initial_centroids, x);
}

// Fixed random partition of the raw space: grid cells of width `cell`
// hashed with the run seed onto k contexts.
class RandomPartition {
 public:
  RandomPartition(std::size_t k, std::uint64_t seed, double cell = 1.0) : k_(k), seed_(seed), cell_(cell) {
    require(k >= 1 && cell > 0.0, "random partition: need k >= 1 and cell > 0");
  }

  ContextId operator()(std::span<const double> x) const {
    std::uint64_t h = splitmix64(seed_);
    for (double v : x) {
      const auto q = static_cast<std::int64_t>(std::floor(v / cell_));
      h = splitmix64(h ^ static_cast<std::uint64_t>(q));
    }
    return static_cast<ContextId>(h % k_);
  }

 private:
  std::size_t k_;
  std::uint64_t seed_;
  double cell_;
};

// Centroid dump: step,context_id,count,dim_0..dim_{D-1}; one block of k
// rows per snapshot.
inline void write_centroid_header(std::ostream& os, std::size_t dim) {
  os << "step,context_id,count";
  for (std::size_t j = 0; j < dim; ++j) os << ",dim_" << j;
  os << '\n';
}

inline void write_centroid_snapshot(std::ostream& os, std::uint64_t step, const ContextModel& model) {
  for (std::size_t i = 0; i < model.k(); ++i) {
    os << step << ',' << i << ',' << model.counts()[i];
    for (double v : model.centroids()[i]) os << ',' << format_double(v);
    os << '\n';
  }
}

}  // namespace cdakd
