#include "teamq/env.hpp"

#include <algorithm>
#include <cmath>

#include "env_internal.hpp"
#include "teamq/errors.hpp"

namespace teamq::env {

namespace {

double auto_sight_radius(double arena_size, double configured) {
  if (configured > 0.0) return configured;
  return 0.5 * arena_size * std::sqrt(2.0);  // half the arena diagonal
}

}  // namespace

void SpreadConfig::validate() const {
  if (n_agents < 1) throw ConfigurationError("spread: n_agents must be >= 1");
  if (n_landmarks < 1) throw ConfigurationError("spread: n_landmarks must be >= 1");
  if (arena_size <= 0.0) throw ConfigurationError("spread: arena_size must be > 0");
  if (move_step <= 0.0) throw ConfigurationError("spread: move_step must be > 0");
  if (episode_limit < 1) throw ConfigurationError("spread: episode_limit must be >= 1");
  if (collision_penalty < 0.0) throw ConfigurationError("spread: collision_penalty must be >= 0");
}

double SpreadConfig::effective_sight_radius() const {
  return auto_sight_radius(arena_size, sight_radius);
}

void FocusFireConfig::validate() const {
  if (n_agents < 2) throw ConfigurationError("focusfire: n_agents must be >= 2");
  if (n_enemies < 1) throw ConfigurationError("focusfire: n_enemies must be >= 1");
  if (arena_size <= 0.0) throw ConfigurationError("focusfire: arena_size must be > 0");
  if (agent_health <= 0.0 || enemy_health <= 0.0)
    throw ConfigurationError("focusfire: health values must be > 0");
  if (agent_damage <= 0.0) throw ConfigurationError("focusfire: agent_damage must be > 0");
  if (enemy_damage < 0.0) throw ConfigurationError("focusfire: enemy_damage must be >= 0");
  if (attack_range <= 0.0 || enemy_range < 0.0)
    throw ConfigurationError("focusfire: ranges must be positive");
  if (episode_limit < 1) throw ConfigurationError("focusfire: episode_limit must be >= 1");
}

double FocusFireConfig::effective_sight_radius() const {
  return auto_sight_radius(arena_size, sight_radius);
}

void EnvConfig::validate() const {
  if (name == "spread")
    spread.validate();
  else if (name == "focusfire")
    focusfire.validate();
  else
    throw ConfigurationError("env.name must be 'spread' or 'focusfire', got '" + name + "'");
}

std::vector<Vector> Environment::observe_all() const {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n_agents()));
  for (int i = 0; i < n_agents(); ++i) out.push_back(observe(i));
  return out;
}

std::vector<std::vector<bool>> Environment::available_actions_all() const {
  std::vector<std::vector<bool>> out;
  out.reserve(static_cast<std::size_t>(n_agents()));
  for (int i = 0; i < n_agents(); ++i) out.push_back(available_actions(i));
  return out;
}

std::unique_ptr<Environment> make_env(const EnvConfig& config) {
  config.validate();
  if (config.name == "spread") return make_spread(config.spread);
  return make_focusfire(config.focusfire);
}

Eigen::Vector2d move_delta(int action) {
  switch (action) {
    case 1: return {0.0, 1.0};
    case 2: return {0.0, -1.0};
    case 3: return {-1.0, 0.0};
    case 4: return {1.0, 0.0};
    default: return {0.0, 0.0};
  }
}

int state_feature_dim(int n_agents, int n_others) {
  return 4 * (n_agents + n_others) + 1;
}

Vector state_feature_vector(const GlobalState& s, int episode_limit) {
  const int n = static_cast<int>(s.agents.size() + s.others.size());
  Vector out(4 * n + 1);
  int k = 0;
  auto put = [&](const EntityState& e) {
    out[k++] = e.pos.x();
    out[k++] = e.pos.y();
    out[k++] = e.scalar;
    out[k++] = e.alive ? 1.0 : 0.0;
  };
  for (const auto& a : s.agents) put(a);
  for (const auto& o : s.others) put(o);
  out[k++] = static_cast<double>(s.step) / static_cast<double>(episode_limit);
  return out;
}

Vector build_observation(const GlobalState& s, const ObservationLayout& layout,
                         double sight_radius, int observer) {
  layout.validate();
  if (observer < 0 || observer >= layout.n_agents)
    throw ContractViolation("build_observation: bad observer index " + std::to_string(observer));
  if (static_cast<int>(s.agents.size()) != layout.n_agents ||
      static_cast<int>(s.others.size()) != layout.n_others)
    throw ContractViolation("build_observation: state does not match layout");

  Vector obs = Vector::Zero(layout.dim());
  const EntityState& self = s.agents[static_cast<std::size_t>(observer)];
  if (!self.alive) return obs;  // dead agents observe nothing

  obs[0] = self.pos.x();
  obs[1] = self.pos.y();
  obs[2] = self.scalar;

  auto fill = [&](int entity, const EntityState& e) {
    const int slot = layout.slot_of(observer, entity);
    if (!e.alive) return;
    const Eigen::Vector2d rel = e.pos - self.pos;
    const double dist = rel.norm();
    if (dist > sight_radius) return;
    const int off = layout.block_offset(slot);
    obs[off + ObservationLayout::kVisible] = 1.0;
    obs[off + ObservationLayout::kRelX] = rel.x();
    obs[off + ObservationLayout::kRelY] = rel.y();
    obs[off + ObservationLayout::kDistance] = dist;
    obs[off + ObservationLayout::kScalar] = e.scalar;
    obs[layout.mask_offset(slot)] = 1.0;
  };

  for (int j = 0; j < layout.n_agents; ++j) {
    if (j == observer) continue;
    fill(j, s.agents[static_cast<std::size_t>(j)]);
  }
  for (int e = 0; e < layout.n_others; ++e)
    fill(layout.n_agents + e, s.others[static_cast<std::size_t>(e)]);
  return obs;
}

}  // namespace teamq::env
