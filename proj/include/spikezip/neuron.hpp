#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "spikezip/quantize.hpp"
#include "spikezip/tensor.hpp"

namespace spikezip {

// Ternary spike tensor. Unscaled values are exactly -1/0/+1; `scaled` marks
// tensors whose elements already carry the emitting layer's v_thr factor.
struct SpikeTensor {
  Tensor values;
  bool scaled = false;

  SpikeTensor scaled_by(double v_thr) const { return {scale(values, v_thr), true}; }
  std::size_t nonzero() const;
  void validate() const;  // unscaled elements must be exactly -1, 0 or +1
};

// A layer of bipolar integrate-and-fire neurons with a bounded spike tracer.
// Per element the layer keeps a membrane potential v and an integer tracer s;
// on each step with input charge u = v + v_in it fires
//   +1  if u >= v_thr and s < s_max,
//   -1  if u <  0     and s > s_min,
//    0  otherwise,
// then subtracts v_thr * spike from v and adds the spike to s. At most one
// spike per element per step, so large charges drain over several steps.
//
// State is mutable and owned by one simulation context; distinct layers may
// run on distinct threads.
class StBifLayer {
 public:
  StBifLayer(std::vector<std::size_t> shape, NeuronParams params, double v0);

  void reset();  // v back to v0, tracer back to 0
  SpikeTensor step(const Tensor& v_in);

  // True when no element can fire again under zero input:
  // (v < v_thr or s == s_max) and (v >= 0 or s == s_min).
  bool quiescent() const;

  const Tensor& membrane() const { return v_; }
  const std::vector<long long>& tracer() const { return tracer_; }
  const NeuronParams& params() const { return params_; }
  double v0() const { return v0_; }
  const std::vector<std::size_t>& shape() const { return v_.shape(); }

 private:
  NeuronParams params_;
  double v0_;
  Tensor v_;
  std::vector<long long> tracer_;
};

// Injects v_in_seq[t] for the first len(seq) steps, then zero input, stepping
// until the layer goes quiescent (checked from the input-off step onward).
// Returns the v_thr-scaled spike sum and the step index at which the layer
// became static. Throws convergence_error if t_max passes first.
std::pair<Tensor, long> run_to_equilibrium(StBifLayer& layer,
                                           const std::vector<Tensor>& v_in_seq, long t_max);

// Closed form of the accumulated output once the layer is static:
// v_thr * clip(floor((total_input + v0) / v_thr), s_min, s_max).
// With v0 = v_thr/2 this is round-half-up on the v_thr grid.
double closed_form(double total_input, const NeuronParams& params, double v0);
Tensor closed_form(const Tensor& total_input, const NeuronParams& params, double v0);

}  // namespace spikezip
