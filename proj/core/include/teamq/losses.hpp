#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "teamq/mixer.hpp"
#include "teamq/nn.hpp"

namespace teamq::losses {

using nn::Matrix;
using nn::ParameterSet;
using nn::Vector;

// A sampled minibatch. Per-agent inputs are stored column-per-transition;
// histories are already window-encoded.
struct Batch {
  int n_agents = 0;
  int num_actions = 0;
  int size = 0;

  Matrix state;                       // state_dim x B
  Matrix next_state;                  // state_dim x B
  std::vector<Matrix> history;        // per agent: enc_dim x B
  std::vector<Matrix> next_history;   // per agent: enc_dim x B
  std::vector<Matrix> obs;            // per agent: obs_dim x B (for intrinsic rewards)
  Eigen::MatrixXi actions;            // N x B
  Vector reward;                      // B
  Vector done;                        // B, 0/1
  std::vector<Matrix> avail;          // per agent: A x B, 0/1
  std::vector<Matrix> next_avail;     // per agent: A x B, 0/1

  void validate() const;
};

// q is (A x B): per-column value of the chosen action.
Vector gather_actions(const Matrix& q, const Eigen::MatrixXi& actions, int agent);
// column-wise max of q restricted to available actions (avail must leave at
// least one action per column)
Vector masked_max(const Matrix& q, const Matrix& avail);
Eigen::VectorXi masked_argmax(const Matrix& q, const Matrix& avail);

// y_b = r_b + gamma * (1 - done_b) * F(max_a' Q1-, ..., max_a' QN-; phi-).
// The joint max is evaluated decentralized: per-agent greedy argmax under
// the availability masks, then mixed (exact for monotone mixers).
Vector bootstrap_target(const Batch& batch, const nn::MlpSpec& qspec,
                        const std::vector<ParameterSet>& target_theta,
                        const mixer::MixerSpec& mspec, const ParameterSet& target_phi,
                        double gamma);

struct GlobalLossResult {
  double loss = 0.0;
  std::vector<ParameterSet> dtheta;
  ParameterSet dphi;
  Vector q_tot;
  double min_kink_distance = 0.0;
};

// L^G = mean_b (y_b - q_tot_b)^2 with y constant; gradients by the chain
// rule through the mixer in a single backward pass.
GlobalLossResult ctde_global_loss(const Batch& batch, const nn::MlpSpec& qspec,
                                  const std::vector<ParameterSet>& theta,
                                  const mixer::MixerSpec& mspec, const ParameterSet& phi,
                                  const Vector& y);

// value-only evaluation of the same objective (finite-difference probes)
double ctde_loss_value(const Batch& batch, const nn::MlpSpec& qspec,
                       const std::vector<ParameterSet>& theta, const mixer::MixerSpec& mspec,
                       const ParameterSet& phi, const Vector& y);

// The factorized per-agent losses L_i = mean_b P_ib * q_tot_b with
// P_ib = -2 (y_b + beta * r_int_ib - q_tot_b) held constant. theta_i is
// updated from L_i only; phi receives the average of the N per-loss
// gradients.
struct LossBundle {
  std::vector<double> agent_losses;   // L_i
  Matrix p_terms;                     // N x B, the frozen scalars
  std::vector<ParameterSet> dtheta;   // dtheta[i] = dL_i/dtheta_i
  ParameterSet dphi;                  // (1/N) sum_i dL_i/dphi
  Vector q_tot;
  double min_kink_distance = 0.0;
};

LossBundle ra_factorized_losses(const Batch& batch, const nn::MlpSpec& qspec,
                                const std::vector<ParameterSet>& theta,
                                const mixer::MixerSpec& mspec, const ParameterSet& phi,
                                const Vector& y, const Matrix& r_int, double beta);

// Same computation with caller-provided frozen P terms (used to show the
// gradients ignore how P was produced).
LossBundle ra_losses_with_p(const Batch& batch, const nn::MlpSpec& qspec,
                            const std::vector<ParameterSet>& theta,
                            const mixer::MixerSpec& mspec, const ParameterSet& phi,
                            const Matrix& p_terms);

// The implicit per-agent reward that separates summed value decomposition
// from independent Q-learning:
//   R_i = gamma (1-done) sum_{j != i} max_a' Q_j-(tau'_j, a') - sum_{j != i} Q_j(tau_j, a_j)
// Returned as constants (N x B); empty sums at N = 1 give exactly 0.
Matrix vdn_corollary_terms(const Batch& batch, const nn::MlpSpec& qspec,
                           const std::vector<ParameterSet>& theta,
                           const std::vector<ParameterSet>& target_theta, double gamma);

struct IqlLossResult {
  double loss = 0.0;
  ParameterSet dtheta;
  double min_kink_distance = 0.0;
};

// Per-agent TD loss with its own bootstrap:
//   mean_b (r + extra + gamma (1-done) max_a' Q_i- - Q_i(tau_i, a_i))^2
// `extra` (nullable) injects a per-transition reward such as R_i above.
IqlLossResult iql_loss(const Batch& batch, const nn::MlpSpec& qspec, const ParameterSet& theta_i,
                       const ParameterSet& target_theta_i, int agent, double gamma,
                       const Vector* extra = nullptr);

// ---- dual-path equivalence verifier ----------------------------------

// Self-contained random problem instance for verification and testing.
struct SyntheticProblem {
  nn::MlpSpec qspec;
  std::vector<ParameterSet> theta;
  std::vector<ParameterSet> target_theta;
  mixer::MixerSpec mspec;
  ParameterSet phi;
  ParameterSet target_phi;
  Batch batch;
  double gamma = 0.9;
};

struct SyntheticOptions {
  int n_agents_min = 2;
  int n_agents_max = 5;
  int batch_min = 8;
  int batch_max = 64;
  int obs_dim = 0;  // > 0: also fill Batch::obs
};

SyntheticProblem make_synthetic_problem(Rng& rng, mixer::MixerSpec::Kind kind,
                                        const SyntheticOptions& options = {});

struct TrialRecord {
  std::uint64_t trial_seed = 0;
  std::string mixer;
  int n_agents = 0;
  int batch = 0;
  double theta_discrepancy = 0.0;      // RA path vs global path, per-agent max
  double phi_discrepancy = 0.0;        // averaged RA dphi vs global dphi
  double corollary_discrepancy = -1.0; // IQL + R^VDN path (vdn trials only)
  double fd_residual = 0.0;            // full central-difference residual
  bool pass = true;
};

struct EquivalenceReport {
  std::string kind = "theorem1";
  int trials = 0;
  std::uint64_t seed = 0;
  double path_tolerance = 1e-10;
  double fd_tolerance = 1e-5;
  double max_theta_discrepancy = 0.0;
  double max_phi_discrepancy = 0.0;
  double max_corollary_discrepancy = 0.0;
  double max_fd_residual = 0.0;
  std::vector<TrialRecord> failures;
  bool pass = true;
  bool vacuous = false;

  nlohmann::json to_json() const;
};

// Runs `trials` random instances. Each trial draws fresh dimensions,
// parameters and batch, computes gradients along (a) the global CTDE path
// and (b) the factorized RA path (beta = 0), and for vdn mixing
// additionally (c) the per-agent IQL + R^VDN path. Central finite
// differences on the global loss serve as the independent oracle.
// `mixer_filter`: restrict trials to one mixer kind (empty = alternate).
EquivalenceReport verify_gradient_equivalence(int trials, std::uint64_t seed,
                                              const std::string& mixer_filter = "");

}  // namespace teamq::losses
