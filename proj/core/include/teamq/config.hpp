#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "teamq/env.hpp"
#include "teamq/intrinsic.hpp"
#include "teamq/mixer.hpp"

namespace teamq::config {

// Algorithm tags. The vdn/qmix prefix fixes the mixer; the suffix picks
// the loss path: none = global CTDE loss, -ra = factorized per-agent
// losses, -iam = factorized losses with the action-model reward.
inline const std::vector<std::string> kAlgoTags = {
    "iql", "vdn", "qmix", "vdn-ra", "qmix-ra", "vdn-iam", "qmix-iam"};

struct TrainerConfig {
  std::string algo = "qmix";
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.05;
  long eps_anneal_steps = 50000;
  int batch_size = 32;
  int rollout_workers = 1;
  long total_env_steps = 200000;
  long target_period = 200;
  long train_period = 1;
  long learn_start = 1000;
  double q_lr = 5e-4;
  double mixer_lr = 5e-4;
  double am_lr = 1e-3;
  long buffer_capacity = 10000;
  long eval_period = 5000;
  int eval_episodes = 16;
  int history_window = 4;
  std::vector<int> hidden_dims{64, 64};

  void validate() const;
  bool uses_mixer() const { return algo != "iql"; }
  bool factorized() const;
  bool is_iam() const;
  mixer::MixerSpec::Kind mixer_kind() const;  // derived from the algo prefix
  double epsilon_at(long env_steps) const;
};

struct ExperimentConfig {
  env::EnvConfig env;
  int mixer_embed_dim = 32;
  int mixer_hypernet_hidden = 64;
  intrinsic::IntrinsicConfig intrinsic;
  TrainerConfig trainer;
  std::string output_dir = "runs/out";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
  nlohmann::json echo_json() const;  // full effective configuration
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// "a.b.c=value"; value parsed as JSON when possible, else as a string.
void apply_override(nlohmann::json& j, const std::string& spec);

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::vector<std::string>& overrides = {});

}  // namespace teamq::config
