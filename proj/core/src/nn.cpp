#include "teamq/nn.hpp"

#include <cmath>
#include <sstream>

#include "teamq/errors.hpp"

namespace teamq::nn {

Tensor& ParameterSet::add(std::string name, int rank, Eigen::Index rows, Eigen::Index cols) {
  if (has(name)) throw ConfigurationError("ParameterSet: duplicate tensor name '" + name + "'");
  if (rank != 1 && rank != 2) throw ConfigurationError("ParameterSet: rank must be 1 or 2");
  if (rank == 1 && cols != 1)
    throw ConfigurationError("ParameterSet: rank-1 tensor '" + name + "' must have cols == 1");
  Tensor t;
  t.name = std::move(name);
  t.rank = rank;
  t.value = Matrix::Zero(rows, cols);
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

Tensor& ParameterSet::at(std::string_view name) {
  for (auto& t : tensors_)
    if (t.name == name) return t;
  throw ConfigurationError("ParameterSet: no tensor named '" + std::string(name) + "'");
}

const Tensor& ParameterSet::at(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw ConfigurationError("ParameterSet: no tensor named '" + std::string(name) + "'");
}

bool ParameterSet::has(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return true;
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.rank != b.rank || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols())
      return false;
  }
  return true;
}

void ParameterSet::check_finite(std::string_view context) const {
  for (const auto& t : tensors_) {
    if (!t.value.allFinite())
      throw NumericError(std::string(context) + ": non-finite values in tensor '" + t.name + "'");
  }
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& t : tensors_) out.add(t.name, t.rank, t.value.rows(), t.value.cols());
  return out;
}

void ParameterSet::scale(double factor) {
  for (auto& t : tensors_) t.value *= factor;
}

void ParameterSet::accumulate(const ParameterSet& other, double factor) {
  if (!same_layout(other))
    throw ContractViolation("ParameterSet::accumulate: layouts differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    tensors_[i].value += factor * other.tensors_[i].value;
}

double ParameterSet::relative_difference(const ParameterSet& a, const ParameterSet& b) {
  if (!a.same_layout(b))
    throw ContractViolation("ParameterSet::relative_difference: layouts differ");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
    const auto& x = a.tensors_[i].value;
    const auto& y = b.tensors_[i].value;
    if (x.size() == 0) continue;
    num = std::max(num, (x - y).cwiseAbs().maxCoeff());
    den = std::max(den, y.cwiseAbs().maxCoeff());
  }
  return num / (1.0 + den);
}

double ParameterSet::max_abs_difference(const ParameterSet& a, const ParameterSet& b) {
  if (!a.same_layout(b))
    throw ContractViolation("ParameterSet::max_abs_difference: layouts differ");
  double num = 0.0;
  for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
    const auto& x = a.tensors_[i].value;
    const auto& y = b.tensors_[i].value;
    if (x.size() == 0) continue;
    num = std::max(num, (x - y).cwiseAbs().maxCoeff());
  }
  return num;
}

int MlpSpec::layer_input_dim(int layer) const {
  return layer == 0 ? input_dim : hidden_dims[static_cast<std::size_t>(layer - 1)];
}

int MlpSpec::layer_output_dim(int layer) const {
  return layer == layer_count() - 1 ? output_dim
                                    : hidden_dims[static_cast<std::size_t>(layer)];
}

void MlpSpec::validate() const {
  if (input_dim < 1) throw ConfigurationError("MlpSpec: input_dim must be >= 1");
  if (output_dim < 1) throw ConfigurationError("MlpSpec: output_dim must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigurationError("MlpSpec: hidden dims must be >= 1");
}

namespace {

std::string weight_name(const std::string& prefix, int layer) {
  return prefix + "layer" + std::to_string(layer) + ".weight";
}

std::string bias_name(const std::string& prefix, int layer) {
  return prefix + "layer" + std::to_string(layer) + ".bias";
}

void check_params_match(const MlpSpec& spec, const ParameterSet& params,
                        const std::string& prefix) {
  for (int l = 0; l < spec.layer_count(); ++l) {
    const auto& w = params.at(weight_name(prefix, l));
    const auto& b = params.at(bias_name(prefix, l));
    const int in = spec.layer_input_dim(l);
    const int out = spec.layer_output_dim(l);
    if (w.value.rows() != out || w.value.cols() != in) {
      std::ostringstream os;
      os << "mlp: tensor '" << w.name << "' has shape (" << w.value.rows() << ", "
         << w.value.cols() << "), expected (" << out << ", " << in << ")";
      throw ConfigurationError(os.str());
    }
    if (b.value.rows() != out) {
      std::ostringstream os;
      os << "mlp: tensor '" << b.name << "' has " << b.value.rows() << " rows, expected " << out;
      throw ConfigurationError(os.str());
    }
  }
}

}  // namespace

ParameterSet init_mlp(const MlpSpec& spec, Rng& rng, const std::string& prefix) {
  spec.validate();
  ParameterSet params;
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int in = spec.layer_input_dim(l);
    const int out = spec.layer_output_dim(l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor& w = params.add(weight_name(prefix, l), 2, out, in);
    for (Eigen::Index c = 0; c < w.value.cols(); ++c)
      for (Eigen::Index r = 0; r < w.value.rows(); ++r)
        w.value(r, c) = rng.uniform(-bound, bound);
    Tensor& b = params.add(bias_name(prefix, l), 1, out, 1);
    for (Eigen::Index r = 0; r < b.value.rows(); ++r) b.value(r, 0) = rng.uniform(-bound, bound);
  }
  return params;
}

Matrix mlp_forward(const MlpSpec& spec, const ParameterSet& params, const Matrix& input,
                   ForwardCache* cache, const std::string& prefix) {
  spec.validate();
  check_params_match(spec, params, prefix);
  if (input.rows() != spec.input_dim) {
    std::ostringstream os;
    os << "mlp_forward: input has " << input.rows() << " rows, spec.input_dim is "
       << spec.input_dim;
    throw ConfigurationError(os.str());
  }

  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->min_kink_distance = std::numeric_limits<double>::infinity();
  }

  Matrix x = input;
  const int layers = spec.layer_count();
  for (int l = 0; l < layers; ++l) {
    const auto& w = params.at(weight_name(prefix, l)).value;
    const auto& b = params.at(bias_name(prefix, l)).value;
    Matrix z = (w * x).colwise() + b.col(0);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      if (l < layers - 1 && z.size() > 0)
        cache->min_kink_distance =
            std::min(cache->min_kink_distance, z.cwiseAbs().minCoeff());
      cache->preacts.push_back(z);
    }
    if (l < layers - 1)
      x = z.cwiseMax(0.0);
    else
      x = std::move(z);
  }
  return x;
}

BackwardResult mlp_backward(const MlpSpec& spec, const ParameterSet& params,
                            const ForwardCache& cache, const Matrix& upstream_grad,
                            const std::string& prefix) {
  spec.validate();
  check_params_match(spec, params, prefix);
  const int layers = spec.layer_count();
  if (static_cast<int>(cache.inputs.size()) != layers ||
      static_cast<int>(cache.preacts.size()) != layers)
    throw ContractViolation("mlp_backward: cache does not match spec (stale or foreign cache)");
  if (upstream_grad.rows() != spec.output_dim ||
      upstream_grad.cols() != cache.inputs.front().cols())
    throw ContractViolation("mlp_backward: upstream gradient shape does not match cache");
  for (int l = 0; l < layers; ++l) {
    if (cache.inputs[static_cast<std::size_t>(l)].rows() != spec.layer_input_dim(l))
      throw ContractViolation("mlp_backward: cache layer shapes do not match spec");
  }

  BackwardResult result;
  for (int l = 0; l < layers; ++l) {
    const auto& w = params.at(weight_name(prefix, l));
    const auto& b = params.at(bias_name(prefix, l));
    result.param_grads.add(w.name, w.rank, w.value.rows(), w.value.cols());
    result.param_grads.add(b.name, b.rank, b.value.rows(), b.value.cols());
  }

  Matrix delta = upstream_grad;  // d(objective)/d(preact) once activation applied
  for (int l = layers - 1; l >= 0; --l) {
    const auto& zi = cache.preacts[static_cast<std::size_t>(l)];
    if (l < layers - 1) {
      // derivative at exactly 0 is 0
      delta = delta.cwiseProduct((zi.array() > 0.0).cast<double>().matrix());
    }
    const auto& x = cache.inputs[static_cast<std::size_t>(l)];
    result.param_grads.at(weight_name(prefix, l)).value = delta * x.transpose();
    result.param_grads.at(bias_name(prefix, l)).value = delta.rowwise().sum();
    if (l > 0) delta = params.at(weight_name(prefix, l)).value.transpose() * delta;
  }
  result.input_grad = params.at(weight_name(prefix, 0)).value.transpose() * delta;
  return result;
}

ParameterSet finite_difference_grad(const LossFn& loss, const ParameterSet& params, double h) {
  if (!(h > 0.0)) throw ContractViolation("finite_difference_grad: h must be > 0");
  ParameterSet work = params;
  ParameterSet grads = params.zeros_like();
  for (std::size_t ti = 0; ti < work.tensors().size(); ++ti) {
    auto& tensor = work.tensors()[ti];
    auto& grad = grads.tensors()[ti];
    for (Eigen::Index k = 0; k < tensor.value.size(); ++k) {
      const double saved = tensor.value.data()[k];
      tensor.value.data()[k] = saved + h;
      const double up = loss(work);
      tensor.value.data()[k] = saved - h;
      const double down = loss(work);
      tensor.value.data()[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        std::ostringstream os;
        os << "finite_difference_grad: non-finite loss at tensor '" << tensor.name
           << "' index " << k;
        throw NumericError(os.str());
      }
      grad.value.data()[k] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

AdamState::AdamState(const ParameterSet& params, AdamConfig config)
    : config_(config), m_(params.zeros_like()), v_(params.zeros_like()) {}

void AdamState::update(ParameterSet& params, const ParameterSet& grads) {
  if (!params.same_layout(grads))
    throw ContractViolation("adam_update: gradient layout does not match parameters");
  if (!m_.same_layout(params))
    throw ContractViolation("adam_update: optimizer state belongs to another parameter set");
  grads.check_finite("adam_update");

  step_ += 1;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    auto& p = params.tensors()[i].value;
    const auto& g = grads.tensors()[i].value;
    auto& m = m_.tensors()[i].value;
    auto& v = v_.tensors()[i].value;
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const Matrix mhat = m / bc1;
    const Matrix vhat = v / bc2;
    p -= config_.lr * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                          Matrix::Constant(p.rows(), p.cols(), config_.eps));
  }
}

void HistoryEncoderConfig::validate() const {
  if (window < 1) throw ConfigurationError("HistoryEncoderConfig: window must be >= 1");
  if (obs_dim < 1) throw ConfigurationError("HistoryEncoderConfig: obs_dim must be >= 1");
  if (num_actions < 1) throw ConfigurationError("HistoryEncoderConfig: num_actions must be >= 1");
}

HistoryWindow::HistoryWindow(HistoryEncoderConfig config) : config_(config) {
  config_.validate();
}

void HistoryWindow::reset() { entries_.clear(); }

void HistoryWindow::push(Vector obs, int prev_action) {
  if (obs.size() != config_.obs_dim)
    throw ContractViolation("HistoryWindow::push: observation dim mismatch");
  entries_.emplace_back(std::move(obs), prev_action);
  while (static_cast<int>(entries_.size()) > config_.window) entries_.pop_front();
}

Vector HistoryWindow::encoded() const {
  std::vector<Vector> obs;
  std::vector<int> acts;
  obs.reserve(entries_.size());
  acts.reserve(entries_.size());
  for (const auto& [o, a] : entries_) {
    obs.push_back(o);
    acts.push_back(a);
  }
  return encode_window(config_, obs, acts);
}

Vector encode_window(const HistoryEncoderConfig& config, const std::vector<Vector>& obs,
                     const std::vector<int>& prev_actions) {
  config.validate();
  if (obs.size() != prev_actions.size())
    throw ContractViolation("encode_window: obs/action counts differ");
  if (static_cast<int>(obs.size()) > config.window)
    throw ContractViolation("encode_window: more entries than the window");

  const int slot = config.obs_dim + config.num_actions;
  Vector out = Vector::Zero(config.encoded_dim());
  const int pad = config.window - static_cast<int>(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs[k].size() != config.obs_dim)
      throw ContractViolation("encode_window: observation dim mismatch");
    const int base = (pad + static_cast<int>(k)) * slot;
    out.segment(base, config.obs_dim) = obs[k];
    const int a = prev_actions[k];
    if (a >= config.num_actions)
      throw ContractViolation("encode_window: action id out of range");
    if (a >= 0) out[base + config.obs_dim + a] = 1.0;
  }
  return out;
}

}  // namespace teamq::nn
