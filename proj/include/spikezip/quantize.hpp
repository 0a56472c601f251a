#pragma once

#include <cstdint>
#include <vector>

#include "spikezip/tensor.hpp"

namespace spikezip {

// Uniform activation quantizer: out = s * clamp(round(x/s), alpha, beta),
// round half away from zero. The same triple doubles as the neuron layer's
// firing parameters after conversion: v_thr = s, s_min = alpha, s_max = beta.
struct QuantizerSpec {
  double s = 1.0;
  long long alpha = 0;
  long long beta = 1;
  bool is_signed = false;

  void validate() const;  // s > 0, alpha < beta, alpha <= 0 <= beta, unsigned => alpha == 0
};

struct NeuronParams {
  double v_thr = 1.0;
  long long s_min = 0;
  long long s_max = 1;
};

double quantize(double x, const QuantizerSpec& q);
Tensor quantize(const Tensor& x, const QuantizerSpec& q);

// Max-abs calibration over a sample set. `levels` counts quantization states:
// unsigned uses [0, levels-1], signed uses +-floor((levels-1)/2). The scale is
// floored at 1e-12 so all-zero samples stay usable.
QuantizerSpec calibrate(const std::vector<Tensor>& samples, std::size_t levels, bool is_signed);

NeuronParams to_neuron_params(const QuantizerSpec& q);
QuantizerSpec from_neuron_params(const NeuronParams& p, bool is_signed);

}  // namespace spikezip
