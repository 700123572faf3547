#include "teamq/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "teamq/errors.hpp"

namespace teamq::losses {

void Batch::validate() const {
  if (size < 1) throw ContractViolation("Batch: size must be >= 1");
  if (n_agents < 1) throw ContractViolation("Batch: n_agents must be >= 1");
  if (num_actions < 1) throw ContractViolation("Batch: num_actions must be >= 1");
  auto expect = [this](const std::vector<Matrix>& ms, const char* what) {
    if (static_cast<int>(ms.size()) != n_agents)
      throw ContractViolation(std::string("Batch: ") + what + " must have one matrix per agent");
    for (const auto& m : ms)
      if (m.cols() != size)
        throw ContractViolation(std::string("Batch: ") + what + " batch dim mismatch");
  };
  expect(history, "history");
  expect(next_history, "next_history");
  expect(avail, "avail");
  expect(next_avail, "next_avail");
  if (!obs.empty()) expect(obs, "obs");
  if (actions.rows() != n_agents || actions.cols() != size)
    throw ContractViolation("Batch: actions must be n_agents x size");
  if (reward.size() != size || done.size() != size)
    throw ContractViolation("Batch: reward/done must have one entry per transition");
  if (!reward.allFinite()) throw NumericError("Batch: non-finite extrinsic reward");
  for (int b = 0; b < size; ++b)
    if (done[b] != 0.0 && done[b] != 1.0)
      throw ContractViolation("Batch: done flags must be 0 or 1");
}

Vector gather_actions(const Matrix& q, const Eigen::MatrixXi& actions, int agent) {
  Vector out(q.cols());
  for (Eigen::Index b = 0; b < q.cols(); ++b) {
    const int a = actions(agent, b);
    if (a < 0 || a >= q.rows())
      throw ContractViolation("gather_actions: action id out of range");
    out[b] = q(a, b);
  }
  return out;
}

Vector masked_max(const Matrix& q, const Matrix& avail) {
  if (q.rows() != avail.rows() || q.cols() != avail.cols())
    throw ContractViolation("masked_max: shape mismatch");
  Vector out(q.cols());
  for (Eigen::Index b = 0; b < q.cols(); ++b) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.rows(); ++a)
      if (avail(a, b) != 0.0) best = std::max(best, q(a, b));
    if (!std::isfinite(best))
      throw ContractViolation("masked_max: no available action in column " + std::to_string(b));
    out[b] = best;
  }
  return out;
}

Eigen::VectorXi masked_argmax(const Matrix& q, const Matrix& avail) {
  if (q.rows() != avail.rows() || q.cols() != avail.cols())
    throw ContractViolation("masked_argmax: shape mismatch");
  Eigen::VectorXi out(q.cols());
  for (Eigen::Index b = 0; b < q.cols(); ++b) {
    double best = -std::numeric_limits<double>::infinity();
    int best_a = -1;
    for (Eigen::Index a = 0; a < q.rows(); ++a) {
      if (avail(a, b) != 0.0 && q(a, b) > best) {
        best = q(a, b);
        best_a = static_cast<int>(a);
      }
    }
    if (best_a < 0)
      throw ContractViolation("masked_argmax: no available action in column " +
                              std::to_string(b));
    out[b] = best_a;
  }
  return out;
}

Vector bootstrap_target(const Batch& batch, const nn::MlpSpec& qspec,
                        const std::vector<ParameterSet>& target_theta,
                        const mixer::MixerSpec& mspec, const ParameterSet& target_phi,
                        double gamma) {
  batch.validate();
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ContractViolation("bootstrap_target: gamma must be in [0, 1)");
  Matrix qs(batch.n_agents, batch.size);
  for (int i = 0; i < batch.n_agents; ++i) {
    const Matrix qn = nn::mlp_forward(qspec, target_theta[static_cast<std::size_t>(i)],
                                      batch.next_history[static_cast<std::size_t>(i)]);
    qs.row(i) = masked_max(qn, batch.next_avail[static_cast<std::size_t>(i)]).transpose();
  }
  const Vector q_tot_next = mix_forward(mspec, target_phi, qs, batch.next_state);
  Vector y(batch.size);
  for (int b = 0; b < batch.size; ++b)
    y[b] = batch.reward[b] + gamma * (1.0 - batch.done[b]) * q_tot_next[b];
  return y;
}

namespace {

struct ForwardPass {
  std::vector<nn::ForwardCache> caches;
  Matrix qs;  // gathered per-agent action values, N x B
  mixer::MixCache mix_cache;
  Vector q_tot;
  double min_kink_distance = std::numeric_limits<double>::infinity();
};

ForwardPass run_forward(const Batch& batch, const nn::MlpSpec& qspec,
                        const std::vector<ParameterSet>& theta, const mixer::MixerSpec& mspec,
                        const ParameterSet& phi) {
  ForwardPass fp;
  fp.caches.resize(static_cast<std::size_t>(batch.n_agents));
  fp.qs.resize(batch.n_agents, batch.size);
  for (int i = 0; i < batch.n_agents; ++i) {
    const Matrix q =
        nn::mlp_forward(qspec, theta[static_cast<std::size_t>(i)],
                        batch.history[static_cast<std::size_t>(i)],
                        &fp.caches[static_cast<std::size_t>(i)]);
    fp.qs.row(i) = gather_actions(q, batch.actions, i).transpose();
    fp.min_kink_distance = std::min(fp.min_kink_distance,
                                    fp.caches[static_cast<std::size_t>(i)].min_kink_distance);
  }
  fp.q_tot = mix_forward(mspec, phi, fp.qs, batch.state, &fp.mix_cache);
  fp.min_kink_distance = std::min(fp.min_kink_distance, fp.mix_cache.min_kink_distance);
  return fp;
}

// routes one row of mixer-level gradients into agent i's parameters
ParameterSet backprop_agent(const Batch& batch, const nn::MlpSpec& qspec,
                            const std::vector<ParameterSet>& theta,
                            const std::vector<nn::ForwardCache>& caches, int agent,
                            const Eigen::RowVectorXd& dq_row) {
  Matrix scattered = Matrix::Zero(batch.num_actions, batch.size);
  for (int b = 0; b < batch.size; ++b)
    scattered(batch.actions(agent, b), b) = dq_row[b];
  auto back = nn::mlp_backward(qspec, theta[static_cast<std::size_t>(agent)],
                               caches[static_cast<std::size_t>(agent)], scattered);
  return std::move(back.param_grads);
}

}  // namespace

GlobalLossResult ctde_global_loss(const Batch& batch, const nn::MlpSpec& qspec,
                                  const std::vector<ParameterSet>& theta,
                                  const mixer::MixerSpec& mspec, const ParameterSet& phi,
                                  const Vector& y) {
  batch.validate();
  if (y.size() != batch.size) throw ContractViolation("ctde_global_loss: y length mismatch");
  ForwardPass fp = run_forward(batch, qspec, theta, mspec, phi);

  GlobalLossResult result;
  const Vector residual = fp.q_tot - y;
  result.loss = residual.squaredNorm() / static_cast<double>(batch.size);
  const Vector upstream = residual * (2.0 / static_cast<double>(batch.size));

  auto back = mix_backward(mspec, phi, fp.mix_cache, upstream);
  result.dphi = std::move(back.dphi);
  result.dtheta.reserve(static_cast<std::size_t>(batch.n_agents));
  for (int i = 0; i < batch.n_agents; ++i)
    result.dtheta.push_back(backprop_agent(batch, qspec, theta, fp.caches, i, back.dqs.row(i)));
  result.q_tot = std::move(fp.q_tot);
  result.min_kink_distance = fp.min_kink_distance;
  return result;
}

LossBundle ra_losses_with_p(const Batch& batch, const nn::MlpSpec& qspec,
                            const std::vector<ParameterSet>& theta,
                            const mixer::MixerSpec& mspec, const ParameterSet& phi,
                            const Matrix& p_terms) {
  batch.validate();
  if (p_terms.rows() != batch.n_agents || p_terms.cols() != batch.size)
    throw ContractViolation("ra_losses_with_p: p_terms must be n_agents x size");
  ForwardPass fp = run_forward(batch, qspec, theta, mspec, phi);

  LossBundle bundle;
  bundle.p_terms = p_terms;
  bundle.agent_losses.resize(static_cast<std::size_t>(batch.n_agents));
  bundle.dtheta.reserve(static_cast<std::size_t>(batch.n_agents));

  const double inv_b = 1.0 / static_cast<double>(batch.size);
  ParameterSet dphi_sum;
  for (int i = 0; i < batch.n_agents; ++i) {
    bundle.agent_losses[static_cast<std::size_t>(i)] =
        p_terms.row(i).dot(fp.q_tot.transpose()) * inv_b;
    const Vector upstream = p_terms.row(i).transpose() * inv_b;
    auto back = mix_backward(mspec, phi, fp.mix_cache, upstream);
    bundle.dtheta.push_back(backprop_agent(batch, qspec, theta, fp.caches, i, back.dqs.row(i)));
    if (i == 0)
      dphi_sum = std::move(back.dphi);
    else
      dphi_sum.accumulate(back.dphi);
  }
  dphi_sum.scale(1.0 / static_cast<double>(batch.n_agents));
  bundle.dphi = std::move(dphi_sum);
  bundle.q_tot = std::move(fp.q_tot);
  bundle.min_kink_distance = fp.min_kink_distance;
  return bundle;
}

LossBundle ra_factorized_losses(const Batch& batch, const nn::MlpSpec& qspec,
                                const std::vector<ParameterSet>& theta,
                                const mixer::MixerSpec& mspec, const ParameterSet& phi,
                                const Vector& y, const Matrix& r_int, double beta) {
  batch.validate();
  if (y.size() != batch.size)
    throw ContractViolation("ra_factorized_losses: y length mismatch");
  if (beta < 0.0) throw ContractViolation("ra_factorized_losses: beta must be >= 0");
  if (beta != 0.0) {
    if (r_int.rows() != batch.n_agents || r_int.cols() != batch.size)
      throw ContractViolation("ra_factorized_losses: r_int must be n_agents x size");
    for (int i = 0; i < batch.n_agents; ++i)
      if (!r_int.row(i).allFinite())
        throw NumericError("ra_factorized_losses: non-finite intrinsic reward for agent " +
                           std::to_string(i));
  }

  // the forward stage: q_tot evaluated once to freeze the P scalars
  ForwardPass fp = run_forward(batch, qspec, theta, mspec, phi);
  Matrix p_terms(batch.n_agents, batch.size);
  for (int i = 0; i < batch.n_agents; ++i) {
    for (int b = 0; b < batch.size; ++b) {
      const double shaped =
          beta == 0.0 ? y[b] : y[b] + beta * r_int(i, b);
      p_terms(i, b) = -2.0 * (shaped - fp.q_tot[b]);
    }
  }
  return ra_losses_with_p(batch, qspec, theta, mspec, phi, p_terms);
}

Matrix vdn_corollary_terms(const Batch& batch, const nn::MlpSpec& qspec,
                           const std::vector<ParameterSet>& theta,
                           const std::vector<ParameterSet>& target_theta, double gamma) {
  batch.validate();
  Matrix max_next(batch.n_agents, batch.size);
  Matrix chosen(batch.n_agents, batch.size);
  for (int j = 0; j < batch.n_agents; ++j) {
    const Matrix qn = nn::mlp_forward(qspec, target_theta[static_cast<std::size_t>(j)],
                                      batch.next_history[static_cast<std::size_t>(j)]);
    max_next.row(j) = masked_max(qn, batch.next_avail[static_cast<std::size_t>(j)]).transpose();
    const Matrix qc = nn::mlp_forward(qspec, theta[static_cast<std::size_t>(j)],
                                      batch.history[static_cast<std::size_t>(j)]);
    chosen.row(j) = gather_actions(qc, batch.actions, j).transpose();
  }

  Matrix r(batch.n_agents, batch.size);
  for (int i = 0; i < batch.n_agents; ++i) {
    for (int b = 0; b < batch.size; ++b) {
      double future = 0.0;
      double current = 0.0;
      for (int j = 0; j < batch.n_agents; ++j) {
        if (j == i) continue;
        future += max_next(j, b);
        current += chosen(j, b);
      }
      r(i, b) = gamma * (1.0 - batch.done[b]) * future - current;
    }
  }
  return r;
}

IqlLossResult iql_loss(const Batch& batch, const nn::MlpSpec& qspec,
                       const ParameterSet& theta_i, const ParameterSet& target_theta_i,
                       int agent, double gamma, const Vector* extra) {
  batch.validate();
  if (agent < 0 || agent >= batch.n_agents)
    throw ContractViolation("iql_loss: bad agent index");
  if (extra && extra->size() != batch.size)
    throw ContractViolation("iql_loss: extra reward length mismatch");

  const Matrix qn = nn::mlp_forward(qspec, target_theta_i,
                                    batch.next_history[static_cast<std::size_t>(agent)]);
  const Vector max_next =
      masked_max(qn, batch.next_avail[static_cast<std::size_t>(agent)]);

  Vector y(batch.size);
  for (int b = 0; b < batch.size; ++b) {
    const double shaped = extra ? batch.reward[b] + (*extra)[b] : batch.reward[b];
    y[b] = shaped + gamma * (1.0 - batch.done[b]) * max_next[b];
  }

  nn::ForwardCache cache;
  const Matrix q = nn::mlp_forward(qspec, theta_i,
                                   batch.history[static_cast<std::size_t>(agent)], &cache);
  const Vector chosen = gather_actions(q, batch.actions, agent);
  const Vector residual = chosen - y;

  IqlLossResult result;
  result.loss = residual.squaredNorm() / static_cast<double>(batch.size);
  const Vector upstream = residual * (2.0 / static_cast<double>(batch.size));
  Matrix scattered = Matrix::Zero(batch.num_actions, batch.size);
  for (int b = 0; b < batch.size; ++b)
    scattered(batch.actions(agent, b), b) = upstream[b];
  auto back = nn::mlp_backward(qspec, theta_i, cache, scattered);
  result.dtheta = std::move(back.param_grads);
  result.min_kink_distance = cache.min_kink_distance;
  return result;
}

// ---- synthetic problems and the verifier ------------------------------

SyntheticProblem make_synthetic_problem(Rng& rng, mixer::MixerSpec::Kind kind,
                                        const SyntheticOptions& options) {
  SyntheticProblem p;
  const int n = options.n_agents_min +
                rng.uniform_int(options.n_agents_max - options.n_agents_min + 1);
  const int batch = options.batch_min +
                    rng.uniform_int(options.batch_max - options.batch_min + 1);
  const int num_actions = 2 + rng.uniform_int(4);
  const int enc = 4 + rng.uniform_int(8);
  const int hidden = 4 + rng.uniform_int(8);
  const int state_dim = 3 + rng.uniform_int(5);

  p.qspec = nn::MlpSpec{enc, {hidden}, num_actions};
  p.mspec.kind = kind;
  p.mspec.n_agents = n;
  p.mspec.state_dim = state_dim;
  p.mspec.embed_dim = 4;
  p.mspec.hypernet_hidden = 6;
  p.gamma = 0.9;

  for (int i = 0; i < n; ++i) {
    p.theta.push_back(nn::init_mlp(p.qspec, rng));
    p.target_theta.push_back(nn::init_mlp(p.qspec, rng));
  }
  p.phi = mixer::init_mixer(p.mspec, rng);
  p.target_phi = mixer::init_mixer(p.mspec, rng);

  Batch& b = p.batch;
  b.n_agents = n;
  b.num_actions = num_actions;
  b.size = batch;
  auto fill_uniform = [&rng](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
  };
  fill_uniform(b.state, state_dim, batch);
  fill_uniform(b.next_state, state_dim, batch);
  b.actions.resize(n, batch);
  b.reward.resize(batch);
  b.done.resize(batch);
  for (int k = 0; k < batch; ++k) {
    b.reward[k] = rng.uniform(-1.0, 1.0);
    b.done[k] = rng.bernoulli(0.2) ? 1.0 : 0.0;
  }
  for (int i = 0; i < n; ++i) {
    Matrix h, hn, av, avn;
    fill_uniform(h, enc, batch);
    fill_uniform(hn, enc, batch);
    av.resize(num_actions, batch);
    avn.resize(num_actions, batch);
    for (int k = 0; k < batch; ++k) {
      const int forced_cur = rng.uniform_int(num_actions);
      const int forced_next = rng.uniform_int(num_actions);
      for (int a = 0; a < num_actions; ++a) {
        av(a, k) = (a == forced_cur || rng.bernoulli(0.8)) ? 1.0 : 0.0;
        avn(a, k) = (a == forced_next || rng.bernoulli(0.8)) ? 1.0 : 0.0;
      }
      int chosen = rng.uniform_int(num_actions);
      while (av(chosen, k) == 0.0) chosen = rng.uniform_int(num_actions);
      b.actions(i, k) = chosen;
    }
    b.history.push_back(std::move(h));
    b.next_history.push_back(std::move(hn));
    b.avail.push_back(std::move(av));
    b.next_avail.push_back(std::move(avn));
    if (options.obs_dim > 0) {
      Matrix o;
      fill_uniform(o, options.obs_dim, batch);
      b.obs.push_back(std::move(o));
    }
  }
  return p;
}

double ctde_loss_value(const Batch& batch, const nn::MlpSpec& qspec,
                       const std::vector<ParameterSet>& theta, const mixer::MixerSpec& mspec,
                       const ParameterSet& phi, const Vector& y) {
  Matrix qs(batch.n_agents, batch.size);
  for (int i = 0; i < batch.n_agents; ++i) {
    const Matrix q = nn::mlp_forward(qspec, theta[static_cast<std::size_t>(i)],
                                     batch.history[static_cast<std::size_t>(i)]);
    qs.row(i) = gather_actions(q, batch.actions, i).transpose();
  }
  const Vector q_tot = mix_forward(mspec, phi, qs, batch.state);
  return (q_tot - y).squaredNorm() / static_cast<double>(batch.size);
}

}  // namespace

nlohmann::json EquivalenceReport::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["trials"] = trials;
  j["seed"] = seed;
  j["path_tolerance"] = path_tolerance;
  j["fd_tolerance"] = fd_tolerance;
  j["max_theta_discrepancy"] = max_theta_discrepancy;
  j["max_phi_discrepancy"] = max_phi_discrepancy;
  j["max_corollary_discrepancy"] = max_corollary_discrepancy;
  j["max_fd_residual"] = max_fd_residual;
  j["pass"] = pass;
  j["vacuous"] = vacuous;
  j["failures"] = nlohmann::json::array();
  for (const auto& f : failures) {
    j["failures"].push_back({{"trial_seed", f.trial_seed},
                             {"mixer", f.mixer},
                             {"n_agents", f.n_agents},
                             {"batch", f.batch},
                             {"theta_discrepancy", f.theta_discrepancy},
                             {"phi_discrepancy", f.phi_discrepancy},
                             {"corollary_discrepancy", f.corollary_discrepancy},
                             {"fd_residual", f.fd_residual}});
  }
  return j;
}

EquivalenceReport verify_gradient_equivalence(int trials, std::uint64_t seed,
                                              const std::string& mixer_filter) {
  EquivalenceReport report;
  report.kind = mixer_filter.empty() ? "theorem1" : "theorem1_" + mixer_filter;
  report.trials = trials;
  report.seed = seed;
  if (trials == 0) {
    report.vacuous = true;
    return report;
  }

  std::uint64_t seq = seed;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = splitmix64(seq);
    Rng rng(trial_seed);
    mixer::MixerSpec::Kind kind;
    if (mixer_filter == "vdn")
      kind = mixer::MixerSpec::kVdn;
    else if (mixer_filter == "qmix")
      kind = mixer::MixerSpec::kQmix;
    else
      kind = (t % 2 == 0) ? mixer::MixerSpec::kVdn : mixer::MixerSpec::kQmix;

    // redraw when a rectifier kink sits too close for central differences
    SyntheticProblem p = make_synthetic_problem(rng, kind);
    Vector y = bootstrap_target(p.batch, p.qspec, p.target_theta, p.mspec, p.target_phi,
                                p.gamma);
    GlobalLossResult global = ctde_global_loss(p.batch, p.qspec, p.theta, p.mspec, p.phi, y);
    for (int attempt = 0; attempt < 50 && global.min_kink_distance < 1e-5; ++attempt) {
      p = make_synthetic_problem(rng, kind);
      y = bootstrap_target(p.batch, p.qspec, p.target_theta, p.mspec, p.target_phi, p.gamma);
      global = ctde_global_loss(p.batch, p.qspec, p.theta, p.mspec, p.phi, y);
    }

    const Matrix r_int = Matrix::Zero(p.batch.n_agents, p.batch.size);
    const LossBundle ra =
        ra_factorized_losses(p.batch, p.qspec, p.theta, p.mspec, p.phi, y, r_int, 0.0);

    TrialRecord rec;
    rec.trial_seed = trial_seed;
    rec.mixer = mixer::to_string(kind);
    rec.n_agents = p.batch.n_agents;
    rec.batch = p.batch.size;
    for (int i = 0; i < p.batch.n_agents; ++i)
      rec.theta_discrepancy =
          std::max(rec.theta_discrepancy,
                   ParameterSet::relative_difference(ra.dtheta[static_cast<std::size_t>(i)],
                                                     global.dtheta[static_cast<std::size_t>(i)]));
    rec.phi_discrepancy = ParameterSet::relative_difference(ra.dphi, global.dphi);

    if (kind == mixer::MixerSpec::kVdn) {
      const Matrix r_vdn =
          vdn_corollary_terms(p.batch, p.qspec, p.theta, p.target_theta, p.gamma);
      rec.corollary_discrepancy = 0.0;
      for (int i = 0; i < p.batch.n_agents; ++i) {
        const Vector extra = r_vdn.row(i).transpose();
        const IqlLossResult iql = iql_loss(p.batch, p.qspec,
                                           p.theta[static_cast<std::size_t>(i)],
                                           p.target_theta[static_cast<std::size_t>(i)], i,
                                           p.gamma, &extra);
        rec.corollary_discrepancy =
            std::max(rec.corollary_discrepancy,
                     ParameterSet::relative_difference(
                         iql.dtheta, global.dtheta[static_cast<std::size_t>(i)]));
      }
    }

    // independent oracle: full central differences on the global loss
    const double h = 1e-6;
    for (int i = 0; i < p.batch.n_agents; ++i) {
      std::vector<ParameterSet> theta_work = p.theta;
      const auto fd = nn::finite_difference_grad(
          [&](const ParameterSet& cand) {
            theta_work[static_cast<std::size_t>(i)] = cand;
            return ctde_loss_value(p.batch, p.qspec, theta_work, p.mspec, p.phi, y);
          },
          p.theta[static_cast<std::size_t>(i)], h);
      rec.fd_residual = std::max(
          rec.fd_residual,
          ParameterSet::relative_difference(global.dtheta[static_cast<std::size_t>(i)], fd));
    }
    if (!p.phi.empty()) {
      const auto fd = nn::finite_difference_grad(
          [&](const ParameterSet& cand) {
            return ctde_loss_value(p.batch, p.qspec, p.theta, p.mspec, cand, y);
          },
          p.phi, h);
      rec.fd_residual =
          std::max(rec.fd_residual, ParameterSet::relative_difference(global.dphi, fd));
    }

    rec.pass = rec.theta_discrepancy <= report.path_tolerance &&
               rec.phi_discrepancy <= report.path_tolerance &&
               (rec.corollary_discrepancy < 0.0 ||
                rec.corollary_discrepancy <= report.path_tolerance) &&
               rec.fd_residual <= report.fd_tolerance;

    report.max_theta_discrepancy =
        std::max(report.max_theta_discrepancy, rec.theta_discrepancy);
    report.max_phi_discrepancy = std::max(report.max_phi_discrepancy, rec.phi_discrepancy);
    report.max_corollary_discrepancy =
        std::max(report.max_corollary_discrepancy, std::max(0.0, rec.corollary_discrepancy));
    report.max_fd_residual = std::max(report.max_fd_residual, rec.fd_residual);
    if (!rec.pass) {
      report.pass = false;
      report.failures.push_back(rec);
    }
  }
  return report;
}

}  // namespace teamq::losses
