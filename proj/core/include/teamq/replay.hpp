#pragma once

#include <mutex>
#include <vector>

#include "teamq/losses.hpp"
#include "teamq/nn.hpp"

namespace teamq::training {

using nn::Vector;

// One environment step, stored with enough raw window context to rebuild
// the encoded history and next-history without touching neighbors in the
// buffer. obs_window/prev_action_window hold up to window+1 entries,
// oldest first; the last entry is the post-step observation paired with
// the action just taken.
struct Transition {
  Vector state;
  Vector next_state;
  std::vector<std::vector<Vector>> obs_window;       // [agent][<=w+1]
  std::vector<std::vector<int>> prev_action_window;  // [agent][<=w+1]
  std::vector<int> actions;
  double reward = 0.0;
  bool done = false;
  std::vector<std::vector<bool>> avail;       // at t
  std::vector<std::vector<bool>> next_avail;  // at t+1
};

// Fixed-capacity ring with FIFO eviction and uniform sampling. Appends may
// come from several rollout workers; sampling happens on the learner.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Transition t);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t index) const;

  // `count` uniform draws with replacement; throws if the buffer holds
  // fewer than one transition.
  std::vector<std::size_t> sample_indices(Rng& rng, int count) const;

 private:
  mutable std::mutex mutex_;
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

// Encodes sampled transitions into batched training inputs.
losses::Batch assemble_batch(const ReplayBuffer& buffer,
                             const std::vector<std::size_t>& indices,
                             const nn::HistoryEncoderConfig& encoder, int n_agents,
                             int num_actions, bool include_obs);

}  // namespace teamq::training
