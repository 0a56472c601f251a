#include "spikezip/spiking_ops.hpp"

#include <utility>

#include "spikezip/errors.hpp"

namespace spikezip {

Tensor aw_step(const Tensor& w, const SpikeTensor& x_t) {
  if (!x_t.scaled) throw config_error("aw_step expects v_thr-scaled spikes");
  return matmul(x_t.values, w);
}

AaState::AaState(std::size_t m, std::size_t p, std::size_t r) : s_q_({m, r}), s_k_({p, r}) {}

Tensor AaState::step(const Tensor& q_t, const Tensor& k_t) {
  if (!q_t.same_shape(s_q_) || !k_t.same_shape(s_k_))
    throw shape_error("aa_step: operand shape mismatch");
  s_q_ = add(s_q_, q_t);
  s_k_ = add(s_k_, k_t);
  Tensor o = matmul(s_q_, transpose(k_t));
  o = add(o, matmul(q_t, transpose(s_k_)));
  return sub(o, matmul(q_t, transpose(k_t)));
}

DiffOp::DiffOp(SigmaKind kind, std::vector<std::size_t> shape, Tensor gamma, Tensor beta,
               double eps)
    : kind_(kind),
      gamma_(std::move(gamma)),
      beta_(std::move(beta)),
      eps_(eps),
      x_acc_(shape),
      o_prev_(std::move(shape)) {}

DiffOp DiffOp::make_softmax(std::vector<std::size_t> shape) {
  return DiffOp(SigmaKind::kSoftmax, std::move(shape), Tensor(), Tensor(), 0.0);
}

DiffOp DiffOp::make_layernorm(std::vector<std::size_t> shape, Tensor gamma, Tensor beta,
                              double eps) {
  return DiffOp(SigmaKind::kLayerNorm, std::move(shape), std::move(gamma), std::move(beta), eps);
}

Tensor DiffOp::step(const Tensor& x_t) {
  if (!x_t.same_shape(x_acc_)) throw shape_error("diff_step: input shape mismatch");
  x_acc_ = add(x_acc_, x_t);
  Tensor o_new =
      kind_ == SigmaKind::kSoftmax ? softmax(x_acc_) : layernorm(x_acc_, gamma_, beta_, eps_);
  Tensor delta = sub(o_new, o_prev_);
  o_prev_ = std::move(o_new);
  return delta;
}

}  // namespace spikezip
