#include "spikezip/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "spikezip/errors.hpp"

namespace spikezip {

void QuantizerSpec::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) throw config_error("quantizer scale must be positive");
  if (alpha >= beta) throw config_error("quantizer clamp bounds must satisfy alpha < beta");
  if (alpha > 0 || beta < 0) throw config_error("quantizer clamp range must contain zero");
  if (!is_signed && alpha != 0) throw config_error("unsigned quantizer must have alpha == 0");
}

double quantize(double x, const QuantizerSpec& q) {
  // std::round is half-away-from-zero, the pinned rounding mode.
  const double level = std::round(x / q.s);
  const double clamped =
      std::clamp(level, static_cast<double>(q.alpha), static_cast<double>(q.beta));
  return q.s * clamped;
}

Tensor quantize(const Tensor& x, const QuantizerSpec& q) {
  q.validate();
  Tensor out = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = quantize(x.data()[i], q);
  return out;
}

QuantizerSpec calibrate(const std::vector<Tensor>& samples, std::size_t levels, bool is_signed) {
  if (samples.empty()) throw calibration_error("calibrate: sample list is empty");
  if (levels < 2) throw calibration_error("calibrate: need at least 2 levels");
  double peak = 0.0;
  for (const Tensor& t : samples) peak = std::max(peak, max_abs(t));

  QuantizerSpec q;
  q.is_signed = is_signed;
  if (is_signed) {
    q.beta = static_cast<long long>((levels - 1) / 2);
    if (q.beta < 1)
      throw calibration_error("calibrate: a signed quantizer needs at least 3 levels");
    q.alpha = -q.beta;
  } else {
    q.alpha = 0;
    q.beta = static_cast<long long>(levels - 1);
  }
  q.s = std::max(peak / static_cast<double>(q.beta), 1e-12);
  q.validate();
  return q;
}

NeuronParams to_neuron_params(const QuantizerSpec& q) {
  q.validate();
  return NeuronParams{q.s, q.alpha, q.beta};
}

QuantizerSpec from_neuron_params(const NeuronParams& p, bool is_signed) {
  QuantizerSpec q{p.v_thr, p.s_min, p.s_max, is_signed};
  q.validate();
  return q;
}

}  // namespace spikezip
