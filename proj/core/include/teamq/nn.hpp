#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "teamq/rng.hpp"

namespace teamq::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One named float64 tensor. Rank-1 tensors are stored as single-column
// matrices; shapes are fixed at construction.
struct Tensor {
  std::string name;
  int rank = 2;
  Matrix value;

  Eigen::Index size() const { return value.size(); }
};

// Ordered collection of named tensors: the weights of one network.
class ParameterSet {
 public:
  Tensor& add(std::string name, int rank, Eigen::Index rows, Eigen::Index cols = 1);
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool has(std::string_view name) const;

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  bool empty() const { return tensors_.empty(); }
  std::size_t scalar_count() const;

  // true when names, ranks and shapes all match in order
  bool same_layout(const ParameterSet& other) const;
  void check_finite(std::string_view context) const;

  // zero-filled set with this set's layout
  ParameterSet zeros_like() const;

  void scale(double factor);
  void accumulate(const ParameterSet& other, double factor = 1.0);

  // max_i |a_i - b_i| / (1 + max_i |b_i|), the relative gradient metric
  static double relative_difference(const ParameterSet& a, const ParameterSet& b);
  static double max_abs_difference(const ParameterSet& a, const ParameterSet& b);

 private:
  std::vector<Tensor> tensors_;
};

// Dense rectifier stack; output layer is linear.
struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims;
  int output_dim = 1;
  enum Activation { kRelu } activation = kRelu;

  int layer_count() const { return static_cast<int>(hidden_dims.size()) + 1; }
  int layer_input_dim(int layer) const;
  int layer_output_dim(int layer) const;
  void validate() const;
};

// Weight init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
ParameterSet init_mlp(const MlpSpec& spec, Rng& rng, const std::string& prefix = "");

struct ForwardCache {
  std::vector<Matrix> inputs;    // inputs[l] = input to layer l
  std::vector<Matrix> preacts;   // preacts[l] = W_l inputs[l] + b_l
  // smallest |preactivation| seen at a rectifier; gradient checks resample
  // when a kink is too close for central differences to be trustworthy
  double min_kink_distance = std::numeric_limits<double>::infinity();
};

// input is (input_dim x batch); returns (output_dim x batch). `prefix`
// selects a sub-network inside a larger ParameterSet (tensor names are
// "<prefix>layerL.weight" / "<prefix>layerL.bias").
Matrix mlp_forward(const MlpSpec& spec, const ParameterSet& params, const Matrix& input,
                   ForwardCache* cache = nullptr, const std::string& prefix = "");

struct BackwardResult {
  ParameterSet param_grads;  // summed over batch columns
  Matrix input_grad;
};

// upstream_grad is (output_dim x batch), d(scalar objective)/d(output).
// Rectifier kink convention: derivative at exactly 0 is 0.
BackwardResult mlp_backward(const MlpSpec& spec, const ParameterSet& params,
                            const ForwardCache& cache, const Matrix& upstream_grad,
                            const std::string& prefix = "");

using LossFn = std::function<double(const ParameterSet&)>;

// Central differences (f(p+h) - f(p-h)) / 2h per scalar parameter.
ParameterSet finite_difference_grad(const LossFn& loss, const ParameterSet& params, double h);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(const ParameterSet& params, AdamConfig config);

  // Standard bias-corrected update, in place. lr = 0 leaves params bit-identical.
  // NaN/Inf in grads aborts before any state is touched.
  void update(ParameterSet& params, const ParameterSet& grads);

  long step() const { return step_; }
  const AdamConfig& config() const { return config_; }
  ParameterSet& first_moment() { return m_; }
  ParameterSet& second_moment() { return v_; }
  void set_step(long s) { step_ = s; }

 private:
  AdamConfig config_;
  ParameterSet m_;
  ParameterSet v_;
  long step_ = 0;
};

// Fixed window of the most recent (observation, previous-action) pairs,
// concatenated oldest-first as the Q input in place of the full history.
struct HistoryEncoderConfig {
  int window = 4;
  int obs_dim = 0;
  int num_actions = 0;

  int encoded_dim() const { return window * (obs_dim + num_actions); }
  void validate() const;
};

class HistoryWindow {
 public:
  explicit HistoryWindow(HistoryEncoderConfig config);

  void reset();
  // prev_action is the action taken on the step before obs; -1 at episode start
  void push(Vector obs, int prev_action);
  Vector encoded() const;
  const HistoryEncoderConfig& config() const { return config_; }
  const std::deque<std::pair<Vector, int>>& entries() const { return entries_; }

 private:
  HistoryEncoderConfig config_;
  std::deque<std::pair<Vector, int>> entries_;
};

// Encodes one window given parallel arrays of observations and previous
// actions (oldest first, length <= window; shorter windows are zero-padded
// on the old side).
Vector encode_window(const HistoryEncoderConfig& config, const std::vector<Vector>& obs,
                     const std::vector<int>& prev_actions);

}  // namespace teamq::nn
