#include "teamq/intrinsic.hpp"

#include <algorithm>
#include <cmath>

#include "teamq/errors.hpp"

namespace teamq::intrinsic {

ActionModel make_action_model(int obs_dim, const std::vector<int>& hidden_dims,
                              int num_actions, Rng& rng) {
  ActionModel model;
  model.spec = nn::MlpSpec{obs_dim, hidden_dims, num_actions};
  model.spec.validate();
  model.params = nn::init_mlp(model.spec, rng);
  return model;
}

Vector action_model_forward(const ActionModel& model, const Vector& obs) {
  return nn::mlp_forward(model.spec, model.params, obs).col(0);
}

double compute_action_model_reward(const Vector& q, const ActionModel& model,
                                   const env::ObservationLayout& layout, double sight_radius,
                                   const Vector& obs, int agent,
                                   const std::vector<int>& surrounding) {
  if (q.size() != model.spec.output_dim)
    throw ContractViolation("compute_action_model_reward: q length != |A|");
  if (surrounding.empty()) return 0.0;

  double total = 0.0;
  for (int j : surrounding) {
    const Vector imagined =
        imagine::imagine_observation(layout, sight_radius, obs, agent, j);
    const Vector pred = action_model_forward(model, imagined);
    if (!pred.allFinite())
      throw NumericError("compute_action_model_reward: non-finite model output");
    total += (pred - q).norm();
  }
  return -total / static_cast<double>(surrounding.size());
}

SupervisedLossResult action_model_loss(const ActionModel& model, const Matrix& obs_batch,
                                       const Matrix& q_targets) {
  if (q_targets.rows() != model.spec.output_dim || q_targets.cols() != obs_batch.cols())
    throw ContractViolation("action_model_loss: target shape mismatch");
  nn::ForwardCache cache;
  const Matrix pred = nn::mlp_forward(model.spec, model.params, obs_batch, &cache);
  const Matrix diff = pred - q_targets;

  SupervisedLossResult result;
  const double batch = static_cast<double>(obs_batch.cols());
  result.loss = diff.squaredNorm() / batch;
  const Matrix upstream = diff * (2.0 / batch);
  auto back = nn::mlp_backward(model.spec, model.params, cache, upstream);
  result.grads = std::move(back.param_grads);
  result.min_kink_distance = cache.min_kink_distance;
  return result;
}

RndPair make_rnd_pair(int obs_dim, const std::vector<int>& hidden_dims, int out_dim,
                      Rng& rng) {
  RndPair pair;
  pair.spec = nn::MlpSpec{obs_dim, hidden_dims, out_dim};
  pair.spec.validate();
  pair.predictor = nn::init_mlp(pair.spec, rng);
  pair.fixed = nn::init_mlp(pair.spec, rng);
  return pair;
}

double rnd_reward(const RndPair& pair, const Vector& obs) {
  const Vector pred = nn::mlp_forward(pair.spec, pair.predictor, obs).col(0);
  const Vector target = nn::mlp_forward(pair.spec, pair.fixed, obs).col(0);
  return (pred - target).squaredNorm();
}

SupervisedLossResult rnd_predictor_loss(const RndPair& pair, const Matrix& obs_batch) {
  const Matrix target = nn::mlp_forward(pair.spec, pair.fixed, obs_batch);
  ActionModel view{pair.spec, pair.predictor};
  return action_model_loss(view, obs_batch, target);
}

Kind kind_from_string(const std::string& text) {
  if (text == "none") return Kind::kNone;
  if (text == "action_model") return Kind::kActionModel;
  if (text == "rnd") return Kind::kRnd;
  throw ConfigurationError("intrinsic.kind must be none|action_model|rnd, got '" + text + "'");
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kActionModel: return "action_model";
    case Kind::kRnd: return "rnd";
  }
  return "none";
}

void IntrinsicConfig::validate() const {
  if (beta < 0.0) throw ConfigurationError("intrinsic.beta must be >= 0");
  if (clip <= 0.0) throw ConfigurationError("intrinsic.clip must be > 0");
}

Matrix shared_mean_rewards(const Matrix& rewards) {
  Matrix out(rewards.rows(), rewards.cols());
  for (Eigen::Index b = 0; b < rewards.cols(); ++b)
    out.col(b).setConstant(rewards.col(b).mean());
  return out;
}

namespace {

class ActionModelPlugin final : public IntrinsicPlugin {
 public:
  ActionModelPlugin(const IntrinsicConfig& config, const env::ObservationLayout& layout,
                    double sight_radius, int obs_dim, const std::vector<int>& hidden_dims,
                    int num_actions, int n_agents, double lr, std::uint64_t seed)
      : config_(config), layout_(layout), sight_radius_(sight_radius), n_agents_(n_agents) {
    const int n_models = config_.shared_model ? 1 : n_agents;
    for (int i = 0; i < n_models; ++i) {
      Rng rng(stream_seed(seed, "init.action_model." + std::to_string(i)));
      models_.push_back(make_action_model(obs_dim, hidden_dims, num_actions, rng));
      optim_.emplace_back(models_.back().params, nn::AdamConfig{lr});
    }
  }

  Matrix compute_rewards(const losses::Batch& batch,
                         const std::vector<Matrix>& q_outputs) override {
    if (batch.obs.empty())
      throw ContractViolation("action model rewards need Batch::obs");
    Matrix rewards(batch.n_agents, batch.size);
    for (int i = 0; i < batch.n_agents; ++i) {
      const ActionModel& model = model_for(i);
      for (int b = 0; b < batch.size; ++b) {
        const Vector obs = batch.obs[static_cast<std::size_t>(i)].col(b);
        const auto surrounding = imagine::surrounding_set(layout_, obs, i);
        const Vector q = q_outputs[static_cast<std::size_t>(i)].col(b);
        const double r = compute_action_model_reward(q, model, layout_, sight_radius_, obs,
                                                     i, surrounding);
        rewards(i, b) = std::clamp(r, -config_.clip, 0.0);
      }
    }
    return rewards;
  }

  double train(const losses::Batch& batch, const std::vector<Matrix>& q_outputs) override {
    double total = 0.0;
    if (config_.shared_model) {
      // one update on the concatenation of every agent's pairs
      const Eigen::Index b = batch.size;
      Matrix obs(models_[0].spec.input_dim, b * batch.n_agents);
      Matrix tgt(models_[0].spec.output_dim, b * batch.n_agents);
      for (int i = 0; i < batch.n_agents; ++i) {
        obs.middleCols(i * b, b) = batch.obs[static_cast<std::size_t>(i)];
        tgt.middleCols(i * b, b) = q_outputs[static_cast<std::size_t>(i)];
      }
      auto res = action_model_loss(models_[0], obs, tgt);
      optim_[0].update(models_[0].params, res.grads);
      return res.loss;
    }
    for (int i = 0; i < batch.n_agents; ++i) {
      auto res = action_model_loss(models_[static_cast<std::size_t>(i)],
                                   batch.obs[static_cast<std::size_t>(i)],
                                   q_outputs[static_cast<std::size_t>(i)]);
      optim_[static_cast<std::size_t>(i)].update(models_[static_cast<std::size_t>(i)].params,
                                                 res.grads);
      total += res.loss;
    }
    return total / static_cast<double>(batch.n_agents);
  }

  Kind kind() const override { return Kind::kActionModel; }

  void append_parameters(ParameterSet& out, const std::string& prefix) const override {
    for (std::size_t m = 0; m < models_.size(); ++m) {
      for (const auto& t : models_[m].params.tensors()) {
        auto& dst = out.add(prefix + "am" + std::to_string(m) + "." + t.name, t.rank,
                            t.value.rows(), t.value.cols());
        dst.value = t.value;
      }
    }
  }

  const ActionModel& model_for(int agent) const {
    return models_[config_.shared_model ? 0 : static_cast<std::size_t>(agent)];
  }

 private:
  IntrinsicConfig config_;
  env::ObservationLayout layout_;
  double sight_radius_;
  int n_agents_;
  std::vector<ActionModel> models_;
  std::vector<nn::AdamState> optim_;
};

class RndPlugin final : public IntrinsicPlugin {
 public:
  RndPlugin(const IntrinsicConfig& config, int obs_dim, const std::vector<int>& hidden_dims,
            int num_actions, int n_agents, double lr, std::uint64_t seed)
      : config_(config) {
    const int n_models = config_.shared_model ? 1 : n_agents;
    for (int i = 0; i < n_models; ++i) {
      Rng rng(stream_seed(seed, "init.rnd." + std::to_string(i)));
      pairs_.push_back(make_rnd_pair(obs_dim, hidden_dims, num_actions, rng));
      optim_.emplace_back(pairs_.back().predictor, nn::AdamConfig{lr});
    }
  }

  Matrix compute_rewards(const losses::Batch& batch, const std::vector<Matrix>&) override {
    if (batch.obs.empty()) throw ContractViolation("rnd rewards need Batch::obs");
    Matrix rewards(batch.n_agents, batch.size);
    for (int i = 0; i < batch.n_agents; ++i) {
      const RndPair& pair = pair_for(i);
      for (int b = 0; b < batch.size; ++b) {
        const double r = rnd_reward(pair, batch.obs[static_cast<std::size_t>(i)].col(b));
        rewards(i, b) = std::clamp(r, 0.0, config_.clip);
      }
    }
    return rewards;
  }

  double train(const losses::Batch& batch, const std::vector<Matrix>&) override {
    double total = 0.0;
    const int n_models = static_cast<int>(pairs_.size());
    for (int m = 0; m < n_models; ++m) {
      // the shared variant trains on agent 0's observations
      auto res = rnd_predictor_loss(pairs_[static_cast<std::size_t>(m)],
                                    batch.obs[static_cast<std::size_t>(
                                        config_.shared_model ? 0 : m)]);
      optim_[static_cast<std::size_t>(m)].update(pairs_[static_cast<std::size_t>(m)].predictor,
                                                 res.grads);
      total += res.loss;
    }
    return total / static_cast<double>(n_models);
  }

  Kind kind() const override { return Kind::kRnd; }

  void append_parameters(ParameterSet& out, const std::string& prefix) const override {
    for (std::size_t m = 0; m < pairs_.size(); ++m) {
      for (const auto& t : pairs_[m].predictor.tensors()) {
        auto& dst = out.add(prefix + "rnd" + std::to_string(m) + ".predictor." + t.name,
                            t.rank, t.value.rows(), t.value.cols());
        dst.value = t.value;
      }
      for (const auto& t : pairs_[m].fixed.tensors()) {
        auto& dst = out.add(prefix + "rnd" + std::to_string(m) + ".fixed." + t.name, t.rank,
                            t.value.rows(), t.value.cols());
        dst.value = t.value;
      }
    }
  }

  const RndPair& pair_for(int agent) const {
    return pairs_[config_.shared_model ? 0 : static_cast<std::size_t>(agent)];
  }

 private:
  IntrinsicConfig config_;
  std::vector<RndPair> pairs_;
  std::vector<nn::AdamState> optim_;
};

}  // namespace

std::unique_ptr<IntrinsicPlugin> make_plugin(const IntrinsicConfig& config,
                                             const env::ObservationLayout& layout,
                                             double sight_radius, int obs_dim,
                                             const std::vector<int>& hidden_dims,
                                             int num_actions, int n_agents, double lr,
                                             std::uint64_t seed) {
  config.validate();
  switch (config.kind) {
    case Kind::kNone:
      return nullptr;
    case Kind::kActionModel:
      return std::make_unique<ActionModelPlugin>(config, layout, sight_radius, obs_dim,
                                                 hidden_dims, num_actions, n_agents, lr, seed);
    case Kind::kRnd:
      return std::make_unique<RndPlugin>(config, obs_dim, hidden_dims, num_actions, n_agents,
                                         lr, seed);
  }
  return nullptr;
}

}  // namespace teamq::intrinsic
