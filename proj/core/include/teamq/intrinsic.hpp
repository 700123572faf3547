#pragma once

#include <memory>
#include <string>
#include <vector>

#include "teamq/imagine.hpp"
#include "teamq/losses.hpp"
#include "teamq/nn.hpp"

namespace teamq::intrinsic {

using nn::Matrix;
using nn::ParameterSet;
using nn::Vector;

// A network with the Q-net's hidden structure that maps one raw observation
// (not the windowed history) to a predicted action-tendency vector of
// length |A|.
struct ActionModel {
  nn::MlpSpec spec;
  ParameterSet params;  // omega
};

ActionModel make_action_model(int obs_dim, const std::vector<int>& hidden_dims,
                              int num_actions, Rng& rng);

Vector action_model_forward(const ActionModel& model, const Vector& obs);

// r_i = -(1/|S(i)|) sum_{j in S(i)} || F_am(o_ij) - q ||_2, the mean L2
// distance between the model's predictions on the imagined neighbor
// observations and the agent's own action-tendency vector q (a constant;
// no gradient flows through the reward). Empty S(i) gives 0.
double compute_action_model_reward(const Vector& q, const ActionModel& model,
                                   const env::ObservationLayout& layout, double sight_radius,
                                   const Vector& obs, int agent,
                                   const std::vector<int>& surrounding);

struct SupervisedLossResult {
  double loss = 0.0;
  ParameterSet grads;
  double min_kink_distance = 0.0;
};

// mean_b || F_am(o_b) - target_b ||_2^2 over the batch columns; gradients
// flow only into the model parameters (targets are detached).
SupervisedLossResult action_model_loss(const ActionModel& model, const Matrix& obs_batch,
                                       const Matrix& q_targets);

// Random-network-distillation pair: a trained predictor chasing a frozen
// randomly initialized net of the same spec.
struct RndPair {
  nn::MlpSpec spec;
  ParameterSet predictor;
  ParameterSet fixed;
};

RndPair make_rnd_pair(int obs_dim, const std::vector<int>& hidden_dims, int out_dim, Rng& rng);

double rnd_reward(const RndPair& pair, const Vector& obs);

SupervisedLossResult rnd_predictor_loss(const RndPair& pair, const Matrix& obs_batch);

enum class Kind { kNone, kActionModel, kRnd };

Kind kind_from_string(const std::string& text);
std::string to_string(Kind kind);

struct IntrinsicConfig {
  Kind kind = Kind::kNone;
  double beta = 0.05;
  double clip = 10.0;             // rewards clipped to [-clip, 0] (AM) / [0, clip] (RND)
  bool shared_model = false;      // one omega shared by all agents
  enum Adding { kPerAgent, kSharedMean } adding = kPerAgent;

  void validate() const;
};

// Per-agent intrinsic reward source trained alongside the policy. Reward
// computation treats all networks as constants; training touches only the
// plugin's own parameters.
class IntrinsicPlugin {
 public:
  virtual ~IntrinsicPlugin() = default;

  // q_outputs[i] is Q_i over the batch (A x B), evaluated with the current
  // theta_i and treated as constant. Returns clipped rewards (N x B).
  virtual Matrix compute_rewards(const losses::Batch& batch,
                                 const std::vector<Matrix>& q_outputs) = 0;

  // One supervised update per agent model; returns the mean loss.
  virtual double train(const losses::Batch& batch,
                       const std::vector<Matrix>& q_outputs) = 0;

  virtual Kind kind() const = 0;
  virtual void append_parameters(ParameterSet& out, const std::string& prefix) const = 0;
};

std::unique_ptr<IntrinsicPlugin> make_plugin(const IntrinsicConfig& config,
                                             const env::ObservationLayout& layout,
                                             double sight_radius, int obs_dim,
                                             const std::vector<int>& hidden_dims,
                                             int num_actions, int n_agents, double lr,
                                             std::uint64_t seed);

// EMC-style ablation: average the per-agent rewards and broadcast the mean
// back to every agent.
Matrix shared_mean_rewards(const Matrix& rewards);

}  // namespace teamq::intrinsic
