#pragma once

#include <cmath>
#include <vector>

#include "cdakd/context.hpp"
#include "cdakd/errors.hpp"
#include "cdakd/observation.hpp"
#include "cdakd/random.hpp"

namespace cdakd {

struct Transition {
  Observation s;
  ContextId w_s = 0;
  std::size_t a = 0;
  double r = 0.0;
  Observation s_next;
  ContextId w_s_next = 0;
  bool done = false;  // environment terminal only; truncation bootstraps
};

// Fixed-capacity FIFO ring. Index 0 is the oldest stored transition.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t contexts) : capacity_(capacity), contexts_(contexts) {
    require(capacity >= 1, "replay capacity must be >= 1");
    require(contexts >= 1, "replay needs at least one context");
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }
  bool empty() const { return storage_.empty(); }

  void push(Transition t) {
    require(t.w_s < contexts_ && t.w_s_next < contexts_, "replay push: context id >= k");
    require(std::isfinite(t.r), "replay push: non-finite reward");
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  const Transition& at(std::size_t i) const {
    require(i < storage_.size(), "replay index out of range");
    return storage_[(head_ + i) % storage_.size()];
  }

  // m uniform draws with replacement.
  std::vector<const Transition*> sample(std::size_t m, Rng& rng) const {
    require(!storage_.empty(), "replay sample: buffer is empty");
    std::vector<const Transition*> batch;
    batch.reserve(m);
    for (std::size_t i = 0; i < m; ++i) batch.push_back(&storage_[uniform_index(rng, storage_.size())]);
    return batch;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < storage_.size(); ++i) fn(at(i));
  }

 private:
  std::size_t capacity_;
  std::size_t contexts_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // slot of the oldest element once full
};

}  // namespace cdakd
