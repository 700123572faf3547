#include "teamq/replay.hpp"

#include "teamq/errors.hpp"

namespace teamq::training {

using nn::Matrix;

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigurationError("ReplayBuffer: capacity must be >= 1");
  data_.reserve(capacity_);
}

void ReplayBuffer::add(Transition t) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return data_.size();
}

const Transition& ReplayBuffer::at(std::size_t index) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return data_.at(index);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(Rng& rng, int count) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (data_.empty()) throw ContractViolation("ReplayBuffer: sampling from an empty buffer");
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    out.push_back(static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size()))));
  return out;
}

losses::Batch assemble_batch(const ReplayBuffer& buffer,
                             const std::vector<std::size_t>& indices,
                             const nn::HistoryEncoderConfig& encoder, int n_agents,
                             int num_actions, bool include_obs) {
  losses::Batch batch;
  batch.n_agents = n_agents;
  batch.num_actions = num_actions;
  batch.size = static_cast<int>(indices.size());
  if (batch.size < 1) throw ContractViolation("assemble_batch: empty index list");

  const int enc = encoder.encoded_dim();
  const Transition& first = buffer.at(indices[0]);
  batch.state.resize(first.state.size(), batch.size);
  batch.next_state.resize(first.next_state.size(), batch.size);
  batch.actions.resize(n_agents, batch.size);
  batch.reward.resize(batch.size);
  batch.done.resize(batch.size);
  for (int i = 0; i < n_agents; ++i) {
    batch.history.emplace_back(enc, batch.size);
    batch.next_history.emplace_back(enc, batch.size);
    batch.avail.emplace_back(Matrix::Zero(num_actions, batch.size));
    batch.next_avail.emplace_back(Matrix::Zero(num_actions, batch.size));
    if (include_obs) batch.obs.emplace_back(encoder.obs_dim, batch.size);
  }

  for (int b = 0; b < batch.size; ++b) {
    const Transition& t = buffer.at(indices[static_cast<std::size_t>(b)]);
    batch.state.col(b) = t.state;
    batch.next_state.col(b) = t.next_state;
    batch.reward[b] = t.reward;
    batch.done[b] = t.done ? 1.0 : 0.0;
    for (int i = 0; i < n_agents; ++i) {
      const auto& obs_win = t.obs_window[static_cast<std::size_t>(i)];
      const auto& act_win = t.prev_action_window[static_cast<std::size_t>(i)];
      const int len = static_cast<int>(obs_win.size());  // m+1 entries
      // current window: all but the final (post-step) entry
      std::vector<Vector> cur_obs(obs_win.begin(), obs_win.end() - 1);
      std::vector<int> cur_act(act_win.begin(), act_win.end() - 1);
      batch.history[static_cast<std::size_t>(i)].col(b) =
          nn::encode_window(encoder, cur_obs, cur_act);
      // next window: the trailing `window` entries
      const int start = std::max(0, len - encoder.window);
      std::vector<Vector> nxt_obs(obs_win.begin() + start, obs_win.end());
      std::vector<int> nxt_act(act_win.begin() + start, act_win.end());
      batch.next_history[static_cast<std::size_t>(i)].col(b) =
          nn::encode_window(encoder, nxt_obs, nxt_act);

      batch.actions(i, b) = t.actions[static_cast<std::size_t>(i)];
      for (int a = 0; a < num_actions; ++a) {
        batch.avail[static_cast<std::size_t>(i)](a, b) =
            t.avail[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] ? 1.0 : 0.0;
        batch.next_avail[static_cast<std::size_t>(i)](a, b) =
            t.next_avail[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] ? 1.0 : 0.0;
      }
      if (include_obs) {
        // the observation the action was taken from: second-to-last entry
        batch.obs[static_cast<std::size_t>(i)].col(b) =
            obs_win[static_cast<std::size_t>(len - 2)];
      }
    }
  }
  batch.validate();
  return batch;
}

}  // namespace teamq::training
