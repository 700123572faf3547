#include <algorithm>
#include <cmath>

#include "env_internal.hpp"
#include "teamq/errors.hpp"

namespace teamq::env {

namespace {

// Minimal combat task: N agents against M tougher enemies. Enemies chase
// and attack the nearest living agent. The team reward is the damage dealt
// this step normalized by the total initial enemy health, plus a bonus per
// kill. Concentrating fire removes enemy damage output early, which is the
// difference between clearing the map and being worn down.
class FocusFireEnv final : public Environment {
 public:
  explicit FocusFireEnv(const FocusFireConfig& config) : config_(config) {
    config_.validate();
    layout_.n_agents = config_.n_agents;
    layout_.n_others = config_.n_enemies;
    sight_radius_ = config_.effective_sight_radius();
    reset(0);
  }

  std::string name() const override { return "focusfire"; }
  int n_agents() const override { return config_.n_agents; }
  int num_actions() const override { return kMoveActions + config_.n_enemies; }
  const ObservationLayout& layout() const override { return layout_; }
  double sight_radius() const override { return sight_radius_; }
  int episode_limit() const override { return config_.episode_limit; }
  int state_dim() const override {
    return state_feature_dim(config_.n_agents, config_.n_enemies);
  }

  void reset(std::uint64_t seed) override {
    Rng rng(stream_seed(seed, "focusfire.reset"));
    state_.agents.assign(static_cast<std::size_t>(config_.n_agents), EntityState{});
    state_.others.assign(static_cast<std::size_t>(config_.n_enemies), EntityState{});
    agent_hp_.assign(static_cast<std::size_t>(config_.n_agents), config_.agent_health);
    enemy_hp_.assign(static_cast<std::size_t>(config_.n_enemies), config_.enemy_health);

    const double y_lo = 0.05 * config_.arena_size;
    const double y_hi = 0.95 * config_.arena_size;
    for (auto& a : state_.agents) {
      a.pos.x() = rng.uniform(0.05 * config_.arena_size, 0.35 * config_.arena_size);
      a.pos.y() = rng.uniform(y_lo, y_hi);
      a.alive = true;
    }
    for (auto& e : state_.others) {
      e.pos.x() = rng.uniform(0.65 * config_.arena_size, 0.95 * config_.arena_size);
      e.pos.y() = rng.uniform(y_lo, y_hi);
      e.alive = true;
    }
    state_.step = 0;
    done_ = false;
    won_ = false;
    sync_scalars();
  }

  StepResult step(const std::vector<int>& joint_action) override {
    if (static_cast<int>(joint_action.size()) != config_.n_agents)
      throw ContractViolation("focusfire: joint action size mismatch");
    if (done_) throw ContractViolation("focusfire: step() after episode end");
    for (int i = 0; i < config_.n_agents; ++i) {
      const auto avail = available_actions(i);
      const int a = joint_action[static_cast<std::size_t>(i)];
      if (a < 0 || a >= num_actions() || !avail[static_cast<std::size_t>(a)])
        throw ContractViolation("focusfire: agent " + std::to_string(i) +
                                " chose unavailable action " + std::to_string(a));
    }

    // moves (attack availability was checked against pre-move positions)
    for (int i = 0; i < config_.n_agents; ++i) {
      const int a = joint_action[static_cast<std::size_t>(i)];
      auto& agent = state_.agents[static_cast<std::size_t>(i)];
      if (!agent.alive || a >= kMoveActions) continue;
      agent.pos += config_.move_step * move_delta(a);
      agent.pos.x() = std::clamp(agent.pos.x(), 0.0, config_.arena_size);
      agent.pos.y() = std::clamp(agent.pos.y(), 0.0, config_.arena_size);
    }

    // agent attacks resolve simultaneously; damage countable toward the
    // reward is capped by the target's remaining health
    std::vector<double> incoming(static_cast<std::size_t>(config_.n_enemies), 0.0);
    for (int i = 0; i < config_.n_agents; ++i) {
      const int a = joint_action[static_cast<std::size_t>(i)];
      if (!state_.agents[static_cast<std::size_t>(i)].alive || a < kMoveActions) continue;
      incoming[static_cast<std::size_t>(a - kMoveActions)] += config_.agent_damage;
    }
    double counted_damage = 0.0;
    int kills = 0;
    for (int e = 0; e < config_.n_enemies; ++e) {
      auto& hp = enemy_hp_[static_cast<std::size_t>(e)];
      auto& enemy = state_.others[static_cast<std::size_t>(e)];
      if (!enemy.alive || incoming[static_cast<std::size_t>(e)] <= 0.0) continue;
      counted_damage += std::min(hp, incoming[static_cast<std::size_t>(e)]);
      hp -= incoming[static_cast<std::size_t>(e)];
      if (hp <= 1e-12) {
        hp = 0.0;
        enemy.alive = false;
        ++kills;
      }
    }

    // enemy AI: attack the nearest living agent when in range, else close in
    for (int e = 0; e < config_.n_enemies; ++e) {
      auto& enemy = state_.others[static_cast<std::size_t>(e)];
      if (!enemy.alive) continue;
      const int target = nearest_alive_agent(enemy.pos);
      if (target < 0) break;
      auto& victim = state_.agents[static_cast<std::size_t>(target)];
      const Eigen::Vector2d rel = victim.pos - enemy.pos;
      const double dist = rel.norm();
      if (dist <= config_.enemy_range) {
        agent_hp_[static_cast<std::size_t>(target)] -= config_.enemy_damage;
      } else if (dist > 0.0) {
        enemy.pos += std::min(config_.enemy_step, dist) * rel.normalized();
        enemy.pos.x() = std::clamp(enemy.pos.x(), 0.0, config_.arena_size);
        enemy.pos.y() = std::clamp(enemy.pos.y(), 0.0, config_.arena_size);
      }
    }
    for (int i = 0; i < config_.n_agents; ++i) {
      auto& hp = agent_hp_[static_cast<std::size_t>(i)];
      if (hp <= 1e-12) {
        hp = 0.0;
        state_.agents[static_cast<std::size_t>(i)].alive = false;
      }
    }

    state_.step += 1;
    sync_scalars();

    StepResult result;
    const double normalizer =
        static_cast<double>(config_.n_enemies) * config_.enemy_health;
    result.reward = counted_damage / normalizer + config_.kill_bonus * kills;
    const bool all_enemies_dead = alive_enemies() == 0;
    const bool all_agents_dead = alive_agents() == 0;
    result.done = all_enemies_dead || all_agents_dead || state_.step >= config_.episode_limit;
    result.won = all_enemies_dead;
    done_ = result.done;
    won_ = result.won;
    return result;
  }

  Vector observe(int agent) const override {
    return build_observation(state_, layout_, sight_radius_, agent);
  }

  std::vector<bool> available_actions(int agent) const override {
    if (agent < 0 || agent >= config_.n_agents)
      throw ContractViolation("focusfire: bad agent index " + std::to_string(agent));
    std::vector<bool> avail(static_cast<std::size_t>(num_actions()), false);
    avail[0] = true;  // no-op is always available
    const auto& self = state_.agents[static_cast<std::size_t>(agent)];
    if (!self.alive) return avail;  // dead agents are forced to no-op
    for (int a = 1; a < kMoveActions; ++a) avail[static_cast<std::size_t>(a)] = true;
    for (int e = 0; e < config_.n_enemies; ++e) {
      const auto& enemy = state_.others[static_cast<std::size_t>(e)];
      if (enemy.alive && (enemy.pos - self.pos).norm() <= config_.attack_range)
        avail[static_cast<std::size_t>(kMoveActions + e)] = true;
    }
    return avail;
  }

  Vector state_vector() const override {
    return state_feature_vector(state_, config_.episode_limit);
  }

  const GlobalState& state() const override { return state_; }

  double episode_metric() const override { return won_ ? 1.0 : 0.0; }

 private:
  void sync_scalars() {
    for (int i = 0; i < config_.n_agents; ++i)
      state_.agents[static_cast<std::size_t>(i)].scalar =
          agent_hp_[static_cast<std::size_t>(i)] / config_.agent_health;
    for (int e = 0; e < config_.n_enemies; ++e)
      state_.others[static_cast<std::size_t>(e)].scalar =
          enemy_hp_[static_cast<std::size_t>(e)] / config_.enemy_health;
  }

  int nearest_alive_agent(const Eigen::Vector2d& from) const {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < config_.n_agents; ++i) {
      const auto& a = state_.agents[static_cast<std::size_t>(i)];
      if (!a.alive) continue;
      const double d = (a.pos - from).norm();
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    return best;
  }

  int alive_agents() const {
    int n = 0;
    for (const auto& a : state_.agents) n += a.alive ? 1 : 0;
    return n;
  }

  int alive_enemies() const {
    int n = 0;
    for (const auto& e : state_.others) n += e.alive ? 1 : 0;
    return n;
  }

  FocusFireConfig config_;
  ObservationLayout layout_;
  double sight_radius_ = 0.0;
  GlobalState state_;
  std::vector<double> agent_hp_;
  std::vector<double> enemy_hp_;
  bool done_ = false;
  bool won_ = false;
};

}  // namespace

std::unique_ptr<Environment> make_focusfire(const FocusFireConfig& config) {
  return std::make_unique<FocusFireEnv>(config);
}

}  // namespace teamq::env
