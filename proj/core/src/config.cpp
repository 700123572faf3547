#include "teamq/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "teamq/errors.hpp"

namespace teamq::config {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
  if (!j.is_object())
    throw ConfigurationError("config: '" + scope + "' must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key))
      throw ConfigurationError("config: unknown key '" +
                               (scope.empty() ? key : scope + "." + key) + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError("config: bad value for '" + scope + "." + key + "': " + e.what());
  }
}

void parse_env(const json& j, env::EnvConfig& out) {
  read_field(j, "name", out.name, "env");
  if (out.name == "spread") {
    reject_unknown_keys(j,
                        {"name", "n_agents", "n_landmarks", "arena_size", "sight_radius",
                         "move_step", "collision_radius", "collision_penalty", "occupy_radius",
                         "episode_limit"},
                        "env");
    auto& c = out.spread;
    read_field(j, "n_agents", c.n_agents, "env");
    read_field(j, "n_landmarks", c.n_landmarks, "env");
    read_field(j, "arena_size", c.arena_size, "env");
    read_field(j, "sight_radius", c.sight_radius, "env");
    read_field(j, "move_step", c.move_step, "env");
    read_field(j, "collision_radius", c.collision_radius, "env");
    read_field(j, "collision_penalty", c.collision_penalty, "env");
    read_field(j, "occupy_radius", c.occupy_radius, "env");
    read_field(j, "episode_limit", c.episode_limit, "env");
  } else if (out.name == "focusfire") {
    reject_unknown_keys(j,
                        {"name", "n_agents", "n_enemies", "arena_size", "sight_radius",
                         "move_step", "attack_range", "agent_health", "agent_damage",
                         "enemy_health", "enemy_damage", "enemy_range", "enemy_step",
                         "kill_bonus", "episode_limit"},
                        "env");
    auto& c = out.focusfire;
    read_field(j, "n_agents", c.n_agents, "env");
    read_field(j, "n_enemies", c.n_enemies, "env");
    read_field(j, "arena_size", c.arena_size, "env");
    read_field(j, "sight_radius", c.sight_radius, "env");
    read_field(j, "move_step", c.move_step, "env");
    read_field(j, "attack_range", c.attack_range, "env");
    read_field(j, "agent_health", c.agent_health, "env");
    read_field(j, "agent_damage", c.agent_damage, "env");
    read_field(j, "enemy_health", c.enemy_health, "env");
    read_field(j, "enemy_damage", c.enemy_damage, "env");
    read_field(j, "enemy_range", c.enemy_range, "env");
    read_field(j, "enemy_step", c.enemy_step, "env");
    read_field(j, "kill_bonus", c.kill_bonus, "env");
    read_field(j, "episode_limit", c.episode_limit, "env");
  } else {
    throw ConfigurationError("config: env.name must be 'spread' or 'focusfire', got '" +
                             out.name + "'");
  }
}

void parse_intrinsic(const json& j, intrinsic::IntrinsicConfig& out) {
  reject_unknown_keys(j, {"kind", "beta", "clip", "shared_model", "adding"}, "intrinsic");
  if (j.contains("kind")) out.kind = intrinsic::kind_from_string(j.at("kind").get<std::string>());
  read_field(j, "beta", out.beta, "intrinsic");
  read_field(j, "clip", out.clip, "intrinsic");
  read_field(j, "shared_model", out.shared_model, "intrinsic");
  if (j.contains("adding")) {
    const auto text = j.at("adding").get<std::string>();
    if (text == "per_agent")
      out.adding = intrinsic::IntrinsicConfig::kPerAgent;
    else if (text == "shared_mean")
      out.adding = intrinsic::IntrinsicConfig::kSharedMean;
    else
      throw ConfigurationError(
          "config: intrinsic.adding must be 'per_agent' or 'shared_mean', got '" + text + "'");
  }
}

void parse_trainer(const json& j, TrainerConfig& out) {
  reject_unknown_keys(j,
                      {"algo", "gamma", "eps_start", "eps_end", "eps_anneal_steps",
                       "batch_size", "rollout_workers", "total_env_steps", "target_period",
                       "train_period", "learn_start", "q_lr", "mixer_lr", "am_lr",
                       "buffer_capacity", "eval_period", "eval_episodes", "history_window",
                       "hidden_dims"},
                      "trainer");
  read_field(j, "algo", out.algo, "trainer");
  read_field(j, "gamma", out.gamma, "trainer");
  read_field(j, "eps_start", out.eps_start, "trainer");
  read_field(j, "eps_end", out.eps_end, "trainer");
  read_field(j, "eps_anneal_steps", out.eps_anneal_steps, "trainer");
  read_field(j, "batch_size", out.batch_size, "trainer");
  read_field(j, "rollout_workers", out.rollout_workers, "trainer");
  read_field(j, "total_env_steps", out.total_env_steps, "trainer");
  read_field(j, "target_period", out.target_period, "trainer");
  read_field(j, "train_period", out.train_period, "trainer");
  read_field(j, "learn_start", out.learn_start, "trainer");
  read_field(j, "q_lr", out.q_lr, "trainer");
  read_field(j, "mixer_lr", out.mixer_lr, "trainer");
  read_field(j, "am_lr", out.am_lr, "trainer");
  read_field(j, "buffer_capacity", out.buffer_capacity, "trainer");
  read_field(j, "eval_period", out.eval_period, "trainer");
  read_field(j, "eval_episodes", out.eval_episodes, "trainer");
  read_field(j, "history_window", out.history_window, "trainer");
  read_field(j, "hidden_dims", out.hidden_dims, "trainer");
}

}  // namespace

bool TrainerConfig::factorized() const {
  return algo.ends_with("-ra") || algo.ends_with("-iam");
}

bool TrainerConfig::is_iam() const { return algo.ends_with("-iam"); }

mixer::MixerSpec::Kind TrainerConfig::mixer_kind() const {
  if (algo.starts_with("qmix")) return mixer::MixerSpec::kQmix;
  return mixer::MixerSpec::kVdn;
}

double TrainerConfig::epsilon_at(long env_steps) const {
  if (eps_anneal_steps <= 0) return eps_end;
  const double t = std::min(1.0, static_cast<double>(env_steps) /
                                     static_cast<double>(eps_anneal_steps));
  return eps_start + (eps_end - eps_start) * t;
}

void TrainerConfig::validate() const {
  if (std::find(kAlgoTags.begin(), kAlgoTags.end(), algo) == kAlgoTags.end())
    throw ConfigurationError("trainer.algo must be one of iql|vdn|qmix|vdn-ra|qmix-ra|"
                             "vdn-iam|qmix-iam, got '" + algo + "'");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigurationError("trainer.gamma must be in [0, 1)");
  if (eps_start < eps_end)
    throw ConfigurationError("trainer.eps schedule must be non-increasing");
  if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
    throw ConfigurationError("trainer.eps bounds must lie in [0, 1]");
  if (batch_size < 1) throw ConfigurationError("trainer.batch_size must be >= 1");
  if (rollout_workers < 1) throw ConfigurationError("trainer.rollout_workers must be >= 1");
  if (total_env_steps < 1) throw ConfigurationError("trainer.total_env_steps must be >= 1");
  if (target_period < 1) throw ConfigurationError("trainer.target_period must be >= 1");
  if (train_period < 1) throw ConfigurationError("trainer.train_period must be >= 1");
  if (learn_start < 0) throw ConfigurationError("trainer.learn_start must be >= 0");
  if (q_lr <= 0.0 || mixer_lr <= 0.0 || am_lr <= 0.0)
    throw ConfigurationError("trainer learning rates must be > 0");
  if (buffer_capacity < batch_size)
    throw ConfigurationError("trainer.buffer_capacity must be >= batch_size");
  if (eval_period < 1) throw ConfigurationError("trainer.eval_period must be >= 1");
  if (eval_episodes < 1) throw ConfigurationError("trainer.eval_episodes must be >= 1");
  if (history_window < 1) throw ConfigurationError("trainer.history_window must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigurationError("trainer.hidden_dims entries must be >= 1");
}

void ExperimentConfig::validate() const {
  env.validate();
  intrinsic.validate();
  trainer.validate();
  if (mixer_embed_dim < 1) throw ConfigurationError("mixer.embed_dim must be >= 1");
  if (mixer_hypernet_hidden < 1)
    throw ConfigurationError("mixer.hypernet_hidden must be >= 1");
  if (seeds.empty()) throw ConfigurationError("config: seeds must not be empty");
  if (output_dir.empty()) throw ConfigurationError("config: output_dir must not be empty");
  if (trainer.is_iam() && intrinsic.kind != intrinsic::Kind::kActionModel)
    throw ConfigurationError("config: -iam algos require intrinsic.kind = action_model");
  if (!trainer.factorized() && intrinsic.kind != intrinsic::Kind::kNone)
    throw ConfigurationError(
        "config: intrinsic rewards require a factorized (-ra or -iam) algo");
}

nlohmann::json ExperimentConfig::echo_json() const {
  json e;
  e["name"] = env.name;
  if (env.name == "spread") {
    const auto& c = env.spread;
    e["n_agents"] = c.n_agents;
    e["n_landmarks"] = c.n_landmarks;
    e["arena_size"] = c.arena_size;
    e["sight_radius"] = c.sight_radius;
    e["move_step"] = c.move_step;
    e["collision_radius"] = c.collision_radius;
    e["collision_penalty"] = c.collision_penalty;
    e["occupy_radius"] = c.occupy_radius;
    e["episode_limit"] = c.episode_limit;
  } else {
    const auto& c = env.focusfire;
    e["n_agents"] = c.n_agents;
    e["n_enemies"] = c.n_enemies;
    e["arena_size"] = c.arena_size;
    e["sight_radius"] = c.sight_radius;
    e["move_step"] = c.move_step;
    e["attack_range"] = c.attack_range;
    e["agent_health"] = c.agent_health;
    e["agent_damage"] = c.agent_damage;
    e["enemy_health"] = c.enemy_health;
    e["enemy_damage"] = c.enemy_damage;
    e["enemy_range"] = c.enemy_range;
    e["enemy_step"] = c.enemy_step;
    e["kill_bonus"] = c.kill_bonus;
    e["episode_limit"] = c.episode_limit;
  }

  json j;
  j["env"] = e;
  j["mixer"] = {{"kind", mixer::to_string(trainer.mixer_kind())},
                {"embed_dim", mixer_embed_dim},
                {"hypernet_hidden", mixer_hypernet_hidden}};
  j["intrinsic"] = {{"kind", intrinsic::to_string(intrinsic.kind)},
                    {"beta", intrinsic.beta},
                    {"clip", intrinsic.clip},
                    {"shared_model", intrinsic.shared_model},
                    {"adding", intrinsic.adding == intrinsic::IntrinsicConfig::kPerAgent
                                   ? "per_agent"
                                   : "shared_mean"}};
  j["trainer"] = {{"algo", trainer.algo},
                  {"gamma", trainer.gamma},
                  {"eps_start", trainer.eps_start},
                  {"eps_end", trainer.eps_end},
                  {"eps_anneal_steps", trainer.eps_anneal_steps},
                  {"batch_size", trainer.batch_size},
                  {"rollout_workers", trainer.rollout_workers},
                  {"total_env_steps", trainer.total_env_steps},
                  {"target_period", trainer.target_period},
                  {"train_period", trainer.train_period},
                  {"learn_start", trainer.learn_start},
                  {"q_lr", trainer.q_lr},
                  {"mixer_lr", trainer.mixer_lr},
                  {"am_lr", trainer.am_lr},
                  {"buffer_capacity", trainer.buffer_capacity},
                  {"eval_period", trainer.eval_period},
                  {"eval_episodes", trainer.eval_episodes},
                  {"history_window", trainer.history_window},
                  {"hidden_dims", trainer.hidden_dims}};
  j["output_dir"] = output_dir;
  j["seeds"] = seeds;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown_keys(j, {"env", "mixer", "intrinsic", "trainer", "output_dir", "seeds"}, "");
  ExperimentConfig out;
  if (j.contains("env")) parse_env(j.at("env"), out.env);
  if (j.contains("trainer")) parse_trainer(j.at("trainer"), out.trainer);
  if (j.contains("mixer")) {
    const auto& m = j.at("mixer");
    reject_unknown_keys(m, {"kind", "embed_dim", "hypernet_hidden"}, "mixer");
    read_field(m, "embed_dim", out.mixer_embed_dim, "mixer");
    read_field(m, "hypernet_hidden", out.mixer_hypernet_hidden, "mixer");
    if (m.contains("kind")) {
      const auto kind = mixer::mixer_kind_from_string(m.at("kind").get<std::string>());
      if (out.trainer.algo != "iql" && kind != out.trainer.mixer_kind())
        throw ConfigurationError("config: mixer.kind contradicts trainer.algo '" +
                                 out.trainer.algo + "'");
    }
  }
  if (j.contains("intrinsic")) parse_intrinsic(j.at("intrinsic"), out.intrinsic);
  read_field(j, "output_dir", out.output_dir, "");
  read_field(j, "seeds", out.seeds, "");

  // -iam defaults the plugin to the action model when left unset
  if (out.trainer.is_iam() && out.intrinsic.kind == intrinsic::Kind::kNone &&
      (!j.contains("intrinsic") || !j.at("intrinsic").contains("kind")))
    out.intrinsic.kind = intrinsic::Kind::kActionModel;

  out.validate();
  return out;
}

void apply_override(json& j, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigurationError("override must look like key.path=value, got '" + spec + "'");
  const std::string path = spec.substr(0, eq);
  const std::string value_text = spec.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::exception&) {
    value = value_text;  // unquoted strings are taken verbatim
  }

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty())
      throw ConfigurationError("override has an empty path segment: '" + spec + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

ExperimentConfig config_from_json(const json& j, const std::vector<std::string>& overrides) {
  json work = j;
  for (const auto& o : overrides) apply_override(work, o);
  return ExperimentConfig::from_json(work);
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("config: cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    // nlohmann reports byte/line positions in the message
    throw ConfigurationError("config: parse error in '" + path.string() + "': " + e.what());
  }
  return config_from_json(j, overrides);
}

}  // namespace teamq::config
