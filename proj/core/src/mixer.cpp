#include "teamq/mixer.hpp"

#include <cmath>

#include "teamq/errors.hpp"

namespace teamq::mixer {

namespace {

nn::MlpSpec hyper_w1_spec(const MixerSpec& s) {
  return {s.state_dim, {s.hypernet_hidden}, s.n_agents * s.embed_dim};
}
nn::MlpSpec hyper_b1_spec(const MixerSpec& s) { return {s.state_dim, {}, s.embed_dim}; }
nn::MlpSpec hyper_w2_spec(const MixerSpec& s) {
  return {s.state_dim, {s.hypernet_hidden}, s.embed_dim};
}
nn::MlpSpec hyper_b2_spec(const MixerSpec& s) { return {s.state_dim, {s.hypernet_hidden}, 1}; }

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

// sign with the kink convention sign(0) = 0
inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void MixerSpec::validate() const {
  if (n_agents < 1) throw ConfigurationError("MixerSpec: n_agents must be >= 1");
  if (kind == kQmix) {
    if (state_dim < 1) throw ConfigurationError("MixerSpec: qmix needs state_dim >= 1");
    if (embed_dim < 1) throw ConfigurationError("MixerSpec: embed_dim must be >= 1");
    if (hypernet_hidden < 1)
      throw ConfigurationError("MixerSpec: hypernet_hidden must be >= 1");
  }
}

MixerSpec::Kind mixer_kind_from_string(const std::string& text) {
  if (text == "vdn") return MixerSpec::kVdn;
  if (text == "qmix") return MixerSpec::kQmix;
  throw ConfigurationError("mixer.kind must be 'vdn' or 'qmix', got '" + text + "'");
}

std::string to_string(MixerSpec::Kind kind) {
  return kind == MixerSpec::kVdn ? "vdn" : "qmix";
}

ParameterSet init_mixer(const MixerSpec& spec, Rng& rng) {
  spec.validate();
  ParameterSet phi;
  if (spec.kind == MixerSpec::kVdn) return phi;  // the sum has no parameters
  auto append = [&phi](ParameterSet&& sub) {
    for (auto& t : sub.tensors()) {
      auto& dst = phi.add(t.name, t.rank, t.value.rows(), t.value.cols());
      dst.value = t.value;
    }
  };
  append(nn::init_mlp(hyper_w1_spec(spec), rng, "hyper_w1."));
  append(nn::init_mlp(hyper_b1_spec(spec), rng, "hyper_b1."));
  append(nn::init_mlp(hyper_w2_spec(spec), rng, "hyper_w2."));
  append(nn::init_mlp(hyper_b2_spec(spec), rng, "hyper_b2."));
  return phi;
}

Vector mix_forward(const MixerSpec& spec, const ParameterSet& phi, const Matrix& qs,
                   const Matrix& state, MixCache* cache) {
  spec.validate();
  if (qs.rows() != spec.n_agents)
    throw ConfigurationError("mix_forward: qs has " + std::to_string(qs.rows()) +
                             " rows, expected " + std::to_string(spec.n_agents));
  const Eigen::Index batch = qs.cols();

  if (spec.kind == MixerSpec::kVdn) {
    if (cache) {
      cache->qs = qs;
      cache->batch = batch;
      cache->min_kink_distance = std::numeric_limits<double>::infinity();
    }
    return qs.colwise().sum().transpose();
  }

  if (state.rows() != spec.state_dim || state.cols() != batch)
    throw ConfigurationError("mix_forward: state shape does not match spec/batch");

  MixCache local;
  MixCache& c = cache ? *cache : local;
  c.qs = qs;
  c.batch = batch;
  c.w1_raw = nn::mlp_forward(hyper_w1_spec(spec), phi, state, &c.hw1, "hyper_w1.");
  c.b1 = nn::mlp_forward(hyper_b1_spec(spec), phi, state, &c.hb1, "hyper_b1.");
  c.w2_raw = nn::mlp_forward(hyper_w2_spec(spec), phi, state, &c.hw2, "hyper_w2.");
  const Matrix b2 = nn::mlp_forward(hyper_b2_spec(spec), phi, state, &c.hb2, "hyper_b2.");

  const int embed = spec.embed_dim;
  c.z1.resize(embed, batch);
  c.h.resize(embed, batch);
  Vector q_tot(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Map<const Matrix> w1(c.w1_raw.col(b).data(), embed, spec.n_agents);
    c.z1.col(b) = w1.cwiseAbs() * qs.col(b) + c.b1.col(b);
    for (int e = 0; e < embed; ++e) c.h(e, b) = elu(c.z1(e, b));
    q_tot[b] = c.w2_raw.col(b).cwiseAbs().dot(c.h.col(b)) + b2(0, b);
  }

  double kink = std::min({c.hw1.min_kink_distance, c.hw2.min_kink_distance,
                          c.hb2.min_kink_distance});
  if (c.w1_raw.size() > 0) kink = std::min(kink, c.w1_raw.cwiseAbs().minCoeff());
  if (c.w2_raw.size() > 0) kink = std::min(kink, c.w2_raw.cwiseAbs().minCoeff());
  c.min_kink_distance = kink;
  return q_tot;
}

MixBackward mix_backward(const MixerSpec& spec, const ParameterSet& phi, const MixCache& cache,
                         const Vector& upstream) {
  spec.validate();
  if (upstream.size() != cache.batch)
    throw ContractViolation("mix_backward: upstream length does not match cached batch");

  MixBackward out;
  if (spec.kind == MixerSpec::kVdn) {
    out.dqs = upstream.transpose().replicate(spec.n_agents, 1);
    out.dphi = ParameterSet{};
    return out;
  }
  if (cache.z1.cols() != cache.batch)
    throw ContractViolation("mix_backward: stale cache (missing qmix internals)");

  const int embed = spec.embed_dim;
  const Eigen::Index batch = cache.batch;
  out.dqs.resize(spec.n_agents, batch);
  Matrix d_w1raw(embed * spec.n_agents, batch);
  Matrix d_b1(embed, batch);
  Matrix d_w2raw(embed, batch);
  Matrix d_b2(1, batch);

  for (Eigen::Index b = 0; b < batch; ++b) {
    const double u = upstream[b];
    const Eigen::Map<const Matrix> w1raw(cache.w1_raw.col(b).data(), embed, spec.n_agents);
    const Matrix w1 = w1raw.cwiseAbs();
    const Vector w2 = cache.w2_raw.col(b).cwiseAbs();

    d_b2(0, b) = u;
    const Vector dh = u * w2;
    Vector dz1(embed);
    for (int e = 0; e < embed; ++e) {
      const double deriv = cache.z1(e, b) > 0.0 ? 1.0 : cache.h(e, b) + 1.0;
      dz1[e] = dh[e] * deriv;
    }
    out.dqs.col(b) = w1.transpose() * dz1;
    d_b1.col(b) = dz1;

    Eigen::Map<Matrix> dw1raw(d_w1raw.col(b).data(), embed, spec.n_agents);
    const Matrix dw1 = dz1 * cache.qs.col(b).transpose();  // embed x N
    for (int i = 0; i < spec.n_agents; ++i)
      for (int e = 0; e < embed; ++e)
        dw1raw(e, i) = dw1(e, i) * sign0(w1raw(e, i));
    for (int e = 0; e < embed; ++e)
      d_w2raw(e, b) = u * cache.h(e, b) * sign0(cache.w2_raw(e, b));
  }

  const auto g_w1 = nn::mlp_backward(hyper_w1_spec(spec), phi, cache.hw1, d_w1raw, "hyper_w1.");
  const auto g_b1 = nn::mlp_backward(hyper_b1_spec(spec), phi, cache.hb1, d_b1, "hyper_b1.");
  const auto g_w2 = nn::mlp_backward(hyper_w2_spec(spec), phi, cache.hw2, d_w2raw, "hyper_w2.");
  const auto g_b2 = nn::mlp_backward(hyper_b2_spec(spec), phi, cache.hb2, d_b2, "hyper_b2.");

  for (const auto* grads : {&g_w1.param_grads, &g_b1.param_grads, &g_w2.param_grads,
                            &g_b2.param_grads}) {
    for (const auto& t : grads->tensors()) {
      auto& dst = out.dphi.add(t.name, t.rank, t.value.rows(), t.value.cols());
      dst.value = t.value;
    }
  }
  return out;
}

MixPartials mix_partials(const MixerSpec& spec, const ParameterSet& phi, const Vector& qs,
                         const Vector& state) {
  MixCache cache;
  mix_forward(spec, phi, qs, state, &cache);
  Vector upstream(1);
  upstream[0] = 1.0;
  auto back = mix_backward(spec, phi, cache, upstream);
  return {back.dqs.col(0), std::move(back.dphi)};
}

}  // namespace teamq::mixer
