#pragma once

#include <cstddef>
#include <vector>

#include "spikezip/neuron.hpp"
#include "spikezip/tensor.hpp"

namespace spikezip {

// One time-step of a weight-stationary product: returns x_t * w for the
// v_thr-scaled spike tensor x_t. Linearity makes the step outputs sum to
// (sum_t x_t) * w.
Tensor aw_step(const Tensor& w, const SpikeTensor& x_t);

// Streaming product of two spike-driven operands (query*key, attention*value).
// Per step it receives the operand increments q_t [m×r] and k_t [p×r], keeps
// their running sums, and emits
//   O_t = S_q * k_t^T + q_t * S_k^T - q_t * k_t^T,
// three matmuls whose step outputs accumulate to (sum q)(sum k)^T.
// Single-owner mutable state; one instance per attention head per layer.
class AaState {
 public:
  AaState(std::size_t m, std::size_t p, std::size_t r);

  Tensor step(const Tensor& q_t, const Tensor& k_t);  // returns O_t [m×p]

  const Tensor& sum_q() const { return s_q_; }
  const Tensor& sum_k() const { return s_k_; }

 private:
  Tensor s_q_;
  Tensor s_k_;
};

enum class SigmaKind { kSoftmax, kLayerNorm };

// Differential wrapper around softmax or layernorm: accumulates the per-step
// inputs and emits sigma(acc) - sigma(previous acc). The previous output
// starts at zero, so the step outputs telescope to sigma of the total input;
// once inputs stop changing the emission is exactly zero.
class DiffOp {
 public:
  static DiffOp make_softmax(std::vector<std::size_t> shape);
  static DiffOp make_layernorm(std::vector<std::size_t> shape, Tensor gamma, Tensor beta,
                               double eps);

  Tensor step(const Tensor& x_t);

  const Tensor& accumulated_input() const { return x_acc_; }
  const Tensor& previous_output() const { return o_prev_; }
  SigmaKind kind() const { return kind_; }

 private:
  DiffOp(SigmaKind kind, std::vector<std::size_t> shape, Tensor gamma, Tensor beta, double eps);

  SigmaKind kind_;
  Tensor gamma_;
  Tensor beta_;
  double eps_ = 0.0;
  Tensor x_acc_;
  Tensor o_prev_;
};

}  // namespace spikezip
