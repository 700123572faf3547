#pragma once

#include <string>

#include "teamq/nn.hpp"

namespace teamq::mixer {

using nn::Matrix;
using nn::ParameterSet;
using nn::Vector;

// Value factorization q_tot = F(q_1..q_N, s; phi). VDN is the plain sum
// with no parameters. QMIX mixes through a two-layer network whose weights
// are generated from the global state by hypernetworks; the generated
// weights pass through |.| so that dq_tot/dq_i >= 0 holds structurally.
struct MixerSpec {
  enum Kind { kVdn, kQmix } kind = kVdn;
  int n_agents = 1;
  int state_dim = 0;
  int embed_dim = 32;
  int hypernet_hidden = 64;

  void validate() const;
};

MixerSpec::Kind mixer_kind_from_string(const std::string& text);
std::string to_string(MixerSpec::Kind kind);

ParameterSet init_mixer(const MixerSpec& spec, Rng& rng);

struct MixCache {
  Matrix qs;          // N x B
  Matrix w1_raw;      // (embed*N) x B hypernet outputs, before |.|
  Matrix b1;          // embed x B
  Matrix z1;          // embed x B first-layer preactivations
  Matrix h;           // embed x B = elu(z1)
  Matrix w2_raw;      // embed x B, before |.|
  nn::ForwardCache hw1, hb1, hw2, hb2;
  double min_kink_distance = std::numeric_limits<double>::infinity();
  Eigen::Index batch = 0;
};

// qs is (N x B), state (state_dim x B); returns q_tot per column.
Vector mix_forward(const MixerSpec& spec, const ParameterSet& phi, const Matrix& qs,
                   const Matrix& state, MixCache* cache = nullptr);

struct MixBackward {
  Matrix dqs;        // N x B: upstream_b * dq_tot_b/dq_i
  ParameterSet dphi; // summed over batch columns
};

MixBackward mix_backward(const MixerSpec& spec, const ParameterSet& phi, const MixCache& cache,
                         const Vector& upstream);

// Single-sample partial derivatives of q_tot itself.
struct MixPartials {
  Vector dq;          // dq_tot/dq_i, all >= 0 for qmix, all ones for vdn
  ParameterSet dphi;  // dq_tot/dphi
};

MixPartials mix_partials(const MixerSpec& spec, const ParameterSet& phi, const Vector& qs,
                         const Vector& state);

}  // namespace teamq::mixer
