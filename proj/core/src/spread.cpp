#include <algorithm>
#include <cmath>

#include "env_internal.hpp"
#include "teamq/errors.hpp"

namespace teamq::env {

namespace {

// Cooperative navigation: N agents cover L landmarks. Team reward is
// -sum_l min_i dist(i, l) minus a penalty per colliding agent pair; the
// maximum 0 is attained exactly when every landmark is covered and no two
// agents collide.
class SpreadEnv final : public Environment {
 public:
  explicit SpreadEnv(const SpreadConfig& config) : config_(config) {
    config_.validate();
    layout_.n_agents = config_.n_agents;
    layout_.n_others = config_.n_landmarks;
    sight_radius_ = config_.effective_sight_radius();
    reset(0);
  }

  std::string name() const override { return "spread"; }
  int n_agents() const override { return config_.n_agents; }
  int num_actions() const override { return kMoveActions; }
  const ObservationLayout& layout() const override { return layout_; }
  double sight_radius() const override { return sight_radius_; }
  int episode_limit() const override { return config_.episode_limit; }
  int state_dim() const override {
    return state_feature_dim(config_.n_agents, config_.n_landmarks);
  }

  void reset(std::uint64_t seed) override {
    Rng rng(stream_seed(seed, "spread.reset"));
    state_.agents.assign(static_cast<std::size_t>(config_.n_agents), EntityState{});
    state_.others.assign(static_cast<std::size_t>(config_.n_landmarks), EntityState{});
    const double lo = 0.05 * config_.arena_size;
    const double hi = 0.95 * config_.arena_size;
    for (auto& a : state_.agents) {
      a.pos.x() = rng.uniform(lo, hi);
      a.pos.y() = rng.uniform(lo, hi);
      a.scalar = 0.0;
      a.alive = true;
    }
    for (auto& l : state_.others) {
      l.pos.x() = rng.uniform(lo, hi);
      l.pos.y() = rng.uniform(lo, hi);
      l.scalar = 0.0;
      l.alive = true;
    }
    state_.step = 0;
    done_ = false;
  }

  StepResult step(const std::vector<int>& joint_action) override {
    if (static_cast<int>(joint_action.size()) != config_.n_agents)
      throw ContractViolation("spread: joint action size mismatch");
    if (done_) throw ContractViolation("spread: step() after episode end");
    for (int i = 0; i < config_.n_agents; ++i) {
      const int a = joint_action[static_cast<std::size_t>(i)];
      if (a < 0 || a >= kMoveActions)
        throw ContractViolation("spread: agent " + std::to_string(i) +
                                " chose unavailable action " + std::to_string(a));
    }

    for (int i = 0; i < config_.n_agents; ++i) {
      auto& agent = state_.agents[static_cast<std::size_t>(i)];
      const Eigen::Vector2d before = agent.pos;
      agent.pos += config_.move_step * move_delta(joint_action[static_cast<std::size_t>(i)]);
      agent.pos.x() = std::clamp(agent.pos.x(), 0.0, config_.arena_size);
      agent.pos.y() = std::clamp(agent.pos.y(), 0.0, config_.arena_size);
      agent.scalar = (agent.pos - before).norm();
    }
    state_.step += 1;

    StepResult result;
    result.reward = -total_landmark_distance() -
                    config_.collision_penalty * static_cast<double>(collision_count());
    result.done = state_.step >= config_.episode_limit;
    result.won = result.done && occupancy() == 1.0;
    done_ = result.done;
    return result;
  }

  Vector observe(int agent) const override {
    return build_observation(state_, layout_, sight_radius_, agent);
  }

  std::vector<bool> available_actions(int) const override {
    return std::vector<bool>(kMoveActions, true);
  }

  Vector state_vector() const override {
    return state_feature_vector(state_, config_.episode_limit);
  }

  const GlobalState& state() const override { return state_; }

  double episode_metric() const override { return occupancy(); }

 private:
  double total_landmark_distance() const {
    double total = 0.0;
    for (const auto& l : state_.others) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& a : state_.agents) best = std::min(best, (a.pos - l.pos).norm());
      total += best;
    }
    return total;
  }

  int collision_count() const {
    int count = 0;
    for (std::size_t i = 0; i < state_.agents.size(); ++i)
      for (std::size_t j = i + 1; j < state_.agents.size(); ++j)
        if ((state_.agents[i].pos - state_.agents[j].pos).norm() < config_.collision_radius)
          ++count;
    return count;
  }

  double occupancy() const {
    int covered = 0;
    for (const auto& l : state_.others) {
      for (const auto& a : state_.agents) {
        if ((a.pos - l.pos).norm() <= config_.occupy_radius) {
          ++covered;
          break;
        }
      }
    }
    return static_cast<double>(covered) / static_cast<double>(config_.n_landmarks);
  }

  SpreadConfig config_;
  ObservationLayout layout_;
  double sight_radius_ = 0.0;
  GlobalState state_;
  bool done_ = false;
};

}  // namespace

std::unique_ptr<Environment> make_spread(const SpreadConfig& config) {
  return std::make_unique<SpreadEnv>(config);
}

}  // namespace teamq::env
