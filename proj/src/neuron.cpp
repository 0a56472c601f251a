#include "spikezip/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikezip/errors.hpp"

namespace spikezip {

std::size_t SpikeTensor::nonzero() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values.data()[i] != 0.0) ++n;
  return n;
}

void SpikeTensor::validate() const {
  if (scaled) return;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (v != -1.0 && v != 0.0 && v != 1.0)
      throw numeric_error("spike tensor holds a non-ternary value");
  }
}

StBifLayer::StBifLayer(std::vector<std::size_t> shape, NeuronParams params, double v0)
    : params_(params), v0_(v0), v_(std::move(shape)) {
  if (!(params_.v_thr > 0.0)) throw config_error("neuron threshold must be positive");
  if (params_.s_min > 0 || params_.s_max < 0 || params_.s_min >= params_.s_max)
    throw config_error("neuron tracer bounds must satisfy s_min < s_max with s_min <= 0 <= s_max");
  tracer_.assign(v_.size(), 0);
  reset();
}

void StBifLayer::reset() {
  std::fill(tracer_.begin(), tracer_.end(), 0);
  for (std::size_t i = 0; i < v_.size(); ++i) v_.data()[i] = v0_;
}

SpikeTensor StBifLayer::step(const Tensor& v_in) {
  if (!v_in.same_shape(v_)) throw shape_error("neuron step: input shape mismatch");
  Tensor out = Tensor::zeros_like(v_);
  double* v = v_.data();
  const double* in = v_in.data();
  double* o = out.data();
  for (std::size_t i = 0; i < v_.size(); ++i) {
    const double u = v[i] + in[i];
    double theta = 0.0;
    if (u >= params_.v_thr && tracer_[i] < params_.s_max)
      theta = 1.0;
    else if (u < 0.0 && tracer_[i] > params_.s_min)
      theta = -1.0;
    v[i] = u - params_.v_thr * theta;
    tracer_[i] += static_cast<long long>(theta);
    o[i] = theta;
  }
  return SpikeTensor{std::move(out), false};
}

bool StBifLayer::quiescent() const {
  const double* v = v_.data();
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (v[i] >= params_.v_thr && tracer_[i] < params_.s_max) return false;
    if (v[i] < 0.0 && tracer_[i] > params_.s_min) return false;
  }
  return true;
}

std::pair<Tensor, long> run_to_equilibrium(StBifLayer& layer,
                                           const std::vector<Tensor>& v_in_seq, long t_max) {
  const long t_off = static_cast<long>(v_in_seq.size());
  if (t_max < t_off)
    throw config_error("run_to_equilibrium: t_max shorter than the input sequence");
  // accumulate integer spike counts and scale once, so the result is exactly
  // a v_thr multiple (count * v_thr, one rounding)
  std::vector<long long> counts(layer.membrane().size(), 0);
  const Tensor zero(layer.shape());
  auto finish = [&layer, &counts](long t) {
    Tensor acc(layer.shape());
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc.data()[i] = layer.params().v_thr * static_cast<double>(counts[i]);
    return std::pair<Tensor, long>{std::move(acc), t};
  };
  for (long t = 1; t <= t_max; ++t) {
    const Tensor& in = t <= t_off ? v_in_seq[static_cast<std::size_t>(t - 1)] : zero;
    SpikeTensor spikes = layer.step(in);
    for (std::size_t i = 0; i < counts.size(); ++i)
      counts[i] += static_cast<long long>(spikes.values.data()[i]);
    if (t >= t_off && layer.quiescent()) return finish(t);
  }
  throw convergence_error(
      "neuron layer did not reach equilibrium within t_max=" + std::to_string(t_max), t_max);
}

double closed_form(double total_input, const NeuronParams& params, double v0) {
  const double level = std::floor((total_input + v0) / params.v_thr);
  return params.v_thr * std::clamp(level, static_cast<double>(params.s_min),
                                   static_cast<double>(params.s_max));
}

Tensor closed_form(const Tensor& total_input, const NeuronParams& params, double v0) {
  Tensor out = Tensor::zeros_like(total_input);
  for (std::size_t i = 0; i < total_input.size(); ++i)
    out.data()[i] = closed_form(total_input.data()[i], params, v0);
  return out;
}

}  // namespace spikezip
