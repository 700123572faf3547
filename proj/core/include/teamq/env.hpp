#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "teamq/layout.hpp"
#include "teamq/rng.hpp"

namespace teamq::env {

struct EntityState {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  double scalar = 0.0;  // health (combat) or last-step speed (navigation)
  bool alive = true;
};

struct GlobalState {
  std::vector<EntityState> agents;
  std::vector<EntityState> others;  // landmarks or enemies
  int step = 0;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  bool won = false;
};

struct SpreadConfig {
  int n_agents = 3;
  int n_landmarks = 3;
  double arena_size = 2.0;
  double sight_radius = -1.0;  // <= 0: half the arena diagonal
  double move_step = 0.1;
  double collision_radius = 0.12;
  double collision_penalty = 1.0;
  double occupy_radius = 0.1;
  int episode_limit = 50;

  void validate() const;
  double effective_sight_radius() const;
};

struct FocusFireConfig {
  int n_agents = 4;
  int n_enemies = 5;
  double arena_size = 2.0;
  double sight_radius = -1.0;  // <= 0: half the arena diagonal
  double move_step = 0.15;
  double attack_range = 0.62;
  double agent_health = 10.0;
  double agent_damage = 1.0;
  double enemy_health = 5.0;
  double enemy_damage = 0.6;
  double enemy_range = 0.45;
  double enemy_step = 0.07;
  double kill_bonus = 1.0;
  int episode_limit = 100;

  void validate() const;
  double effective_sight_radius() const;
};

struct EnvConfig {
  std::string name = "focusfire";  // "spread" | "focusfire"
  SpreadConfig spread;
  FocusFireConfig focusfire;

  void validate() const;
};

// A decentralized partially observable simulator. One instance is
// single-threaded; parallel rollout workers hold independent instances.
// (seed, action sequence) fully determines the trajectory.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int n_agents() const = 0;
  virtual int num_actions() const = 0;
  virtual const ObservationLayout& layout() const = 0;
  virtual double sight_radius() const = 0;
  virtual int episode_limit() const = 0;
  virtual int state_dim() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  virtual StepResult step(const std::vector<int>& joint_action) = 0;
  virtual Vector observe(int agent) const = 0;
  virtual std::vector<bool> available_actions(int agent) const = 0;
  virtual Vector state_vector() const = 0;
  virtual const GlobalState& state() const = 0;

  // evaluation metric in [0, 1]: win flag (combat) or landmark occupancy
  virtual double episode_metric() const = 0;

  std::vector<Vector> observe_all() const;
  std::vector<std::vector<bool>> available_actions_all() const;
};

std::unique_ptr<Environment> make_env(const EnvConfig& config);

// shared helpers
Vector state_feature_vector(const GlobalState& s, int episode_limit);
int state_feature_dim(int n_agents, int n_others);

// Builds agent `observer`'s observation from the global state under the
// given layout and sight radius. An entity is visible when it is alive and
// within the radius (inclusive); dead or out-of-range entities contribute
// an all-zero block. A dead observer sees an all-zero vector.
Vector build_observation(const GlobalState& s, const ObservationLayout& layout,
                         double sight_radius, int observer);

}  // namespace teamq::env
