#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "teamq/config.hpp"
#include "teamq/env.hpp"
#include "teamq/intrinsic.hpp"
#include "teamq/losses.hpp"
#include "teamq/metrics.hpp"
#include "teamq/replay.hpp"

namespace teamq::training {

// epsilon-greedy under an availability mask; greedy ties break toward the
// lowest action id. Always consumes exactly one bernoulli draw, plus one
// uniform draw when exploring.
int select_action(const nn::Vector& q, const std::vector<bool>& avail, double epsilon,
                  Rng& rng);

// One environment instance plus per-agent history windows. Runs episodes
// against a fixed parameter snapshot; the caller must not mutate the
// parameters while collect() is executing.
class RolloutWorker {
 public:
  RolloutWorker(const env::EnvConfig& env_config, nn::HistoryEncoderConfig encoder,
                std::uint64_t master_seed, int worker_id);

  std::vector<Transition> collect(const nn::MlpSpec& qspec,
                                  const std::vector<nn::ParameterSet>& theta, double epsilon,
                                  int steps);

  long episodes_completed() const { return episodes_completed_; }

  // resume support: mid-episode progress is dropped, the next collect()
  // starts a fresh episode with the restored counter
  nlohmann::json save_state() const;
  void restore_state(const nlohmann::json& j);

 private:
  void begin_episode();

  std::unique_ptr<env::Environment> env_;
  nn::HistoryEncoderConfig encoder_;
  std::vector<nn::HistoryWindow> windows_;
  Rng rng_;
  std::uint64_t master_seed_;
  int worker_id_;
  long episode_counter_ = 0;
  long episodes_completed_ = 0;
  bool episode_active_ = false;
};

struct EvalResult {
  double mean_return = 0.0;
  double metric = 0.0;  // win rate (combat) or final occupancy (navigation)
};

// The full learning loop: replay buffer, epsilon-greedy collection across
// rollout workers, and the learner step that trains the action models,
// computes the bootstrap target, applies the configured loss path and
// refreshes the hard target copies every target_period learner steps.
class Trainer {
 public:
  Trainer(const config::ExperimentConfig& cfg, std::uint64_t seed);

  bool finished() const { return env_steps_ >= cfg_.trainer.total_env_steps; }
  // one collection chunk (train_period env steps) + at most one learner step
  void iterate();

  struct RunPaths {
    std::filesystem::path csv;
    std::filesystem::path checkpoint;
    bool resume = false;
  };
  metrics::Row run(const RunPaths& paths);

  EvalResult evaluate(long round);

  void save_checkpoint(const std::filesystem::path& path) const;
  bool load_checkpoint(const std::filesystem::path& path);

  long env_steps() const { return env_steps_; }
  long learner_steps() const { return learner_steps_; }
  long episodes() const;
  double epsilon() const { return cfg_.trainer.epsilon_at(env_steps_); }
  const std::vector<nn::ParameterSet>& theta() const { return theta_; }
  const std::vector<nn::ParameterSet>& target_theta() const { return target_theta_; }
  const nn::ParameterSet& phi() const { return phi_; }
  const nn::ParameterSet& target_phi() const { return target_phi_; }
  const nn::MlpSpec& qspec() const { return qspec_; }
  const nn::HistoryEncoderConfig& encoder() const { return encoder_; }
  ReplayBuffer& buffer() { return buffer_; }
  const config::ExperimentConfig& config() const { return cfg_; }

 private:
  void collect_chunk();
  void learner_step();
  losses::Batch sample_batch(bool include_obs);
  double gradient_check_residual();

  config::ExperimentConfig cfg_;
  std::uint64_t seed_;

  nn::HistoryEncoderConfig encoder_;
  nn::MlpSpec qspec_;
  mixer::MixerSpec mspec_;

  std::vector<nn::ParameterSet> theta_;
  std::vector<nn::ParameterSet> target_theta_;
  std::vector<nn::AdamState> adam_q_;
  nn::ParameterSet phi_;
  nn::ParameterSet target_phi_;
  std::optional<nn::AdamState> adam_mixer_;
  std::unique_ptr<intrinsic::IntrinsicPlugin> plugin_;

  std::vector<std::unique_ptr<RolloutWorker>> workers_;
  std::unique_ptr<env::Environment> eval_env_;
  ReplayBuffer buffer_;
  Rng sampler_rng_;
  Rng gradcheck_rng_;

  long env_steps_ = 0;
  long learner_steps_ = 0;
  long eval_round_ = 0;

  // accumulated since the last metrics row
  double sum_loss_g_ = 0.0;
  double sum_r_am_ = 0.0;
  double sum_r_int_ = 0.0;
  long loss_samples_ = 0;
};

}  // namespace teamq::training
