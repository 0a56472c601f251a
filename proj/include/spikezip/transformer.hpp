#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spikezip/errors.hpp"
#include "spikezip/metrics.hpp"
#include "spikezip/neuron.hpp"
#include "spikezip/quantize.hpp"
#include "spikezip/tensor.hpp"

namespace spikezip {

inline constexpr double kLayerNormEps = 1e-5;

struct EncoderConfig {
  std::size_t n = 8;        // sequence length (tokens)
  std::size_t d = 16;       // model width
  std::size_t heads = 2;    // attention heads
  std::size_t d_ff = 32;    // MLP hidden width
  std::size_t layers = 2;   // encoder depth
  std::size_t levels = 16;  // quantization states per activation site
  std::size_t classes = 4;  // head output width

  std::size_t head_dim() const { return d / heads; }
  void validate() const;
};

struct LayerWeights {
  Tensor w_q, b_q, w_k, b_k, w_v, b_v;
  Tensor w_o, b_o;
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
  Tensor w_mlp1, b_mlp1, w_mlp2, b_mlp2;
};

struct ModelWeights {
  EncoderConfig config;
  Tensor embed_w;    // [d×d] input projection
  Tensor embed_pos;  // [n×d] additive position embedding
  Tensor head_w;     // [d×classes]
  Tensor head_b;     // [classes]
  std::vector<LayerWeights> layers;

  void validate() const;
};

// Reproducible random model/input generation (counter-based streams keyed by
// seed and tensor name; same seed gives byte-identical values).
ModelWeights generate_weights(const EncoderConfig& config, std::uint64_t seed);
Tensor generate_input(const EncoderConfig& config, std::uint64_t seed, std::uint64_t index = 0);

// Quantizer sites in canonical order: "embed_out", then per layer
// "layer<i>.<site>" for qkv_in, q_out, k_out, v_out, attn_array, attn_out,
// proj_in, proj_out, mlp_in, mlp_mid, mlp_out. Every matrix multiplication
// has one site ahead of it and one behind (softmax/ReLU interposed where the
// architecture places them); mlp_mid sits after the ReLU and is the only
// unsigned site.
std::vector<std::string> quantizer_sites(const EncoderConfig& config);
std::vector<std::size_t> site_shape(const EncoderConfig& config, const std::string& site);
bool site_is_signed(const std::string& site);

// Observes the pre-quantization activation at every site during a forward
// pass (used for calibration and tests).
using SiteTap = std::function<void(const std::string& site, const Tensor& value)>;

// Float reference path: pre-LN blocks, scaled dot-product attention, ReLU
// MLP, token mean-pool, linear head. x is [n×d].
Tensor forward_ann(const ModelWeights& model, const Tensor& x, const SiteTap* tap = nullptr);

struct QannModel {
  ModelWeights weights;
  std::map<std::string, QuantizerSpec> quantizers;
};

// Post-hoc calibration: runs the float path over the calibration inputs,
// collects each site's activations and fits a max-abs quantizer per site.
// levels == 0 uses config.levels.
QannModel quantize_model(const ModelWeights& model, const std::vector<Tensor>& calib_inputs,
                         std::size_t levels = 0);

// Same forward pass with every site quantized; attention runs on the
// quantized operands.
Tensor forward_qann(const QannModel& model, const Tensor& x);

struct NeuronSite {
  NeuronParams params;
  double v0 = 0.0;  // v_thr/2 by convention, making floor realize round-half-up
};

struct SnnModel {
  ModelWeights weights;
  std::map<std::string, QuantizerSpec> quantizers;
  std::map<std::string, NeuronSite> neurons;
};

// Structural conversion: each quantizer becomes one neuron layer with
// (v_thr, s_min, s_max) = (s, alpha, beta); softmax and layernorm become
// their differential forms; both attention products become streaming
// two-operand sites. No numeric change.
SnnModel convert(const QannModel& model);

long default_t_max(const EncoderConfig& config);  // 16 * levels

struct SnnOptions {
  long t_max = 0;                  // 0 -> default_t_max(config)
  bool require_equilibrium = true;  // throw on non-convergence instead of truncating
  bool record_trace = false;
  bool record_head_trajectory = false;
};

struct SnnResult {
  Tensor logits;
  long t_eq = 0;  // first step with zero spikes network-wide
  bool converged = false;
  SpikeActivityLog trace;
  std::vector<Tensor> head_trajectory;  // accumulated head charge after each step
};

struct snn_convergence_error : convergence_error {
  snn_convergence_error(const std::string& what, long steps_run, SnnResult partial_result)
      : convergence_error(what, steps_run), partial(std::move(partial_result)) {}
  SnnResult partial;
};

// Spiking forward pass on a single global clock. The embedding output (plus
// position embedding) is injected as analog charge at t=1 together with every
// bias; afterwards only spikes move. Each step sweeps all layers in
// topological order; the head integrates the mean-pooled residual charge
// instead of spikes. Stops at the first step with zero spikes network-wide.
SnnResult forward_snn(const SnnModel& model, const Tensor& x, const SnnOptions& opts = {});

struct SweepRow {
  long t_step = 0;
  double agreement = 0.0;  // argmax agreement with the quantized path
  double max_abs_err = 0.0;
};

// Truncation study: one spiking run per input (recording the head trajectory)
// evaluated at every requested T. Entries past a run's equilibrium reuse its
// final logits. Inputs are independent, so they may run on `threads` workers;
// rows are assembled by input index and do not depend on scheduling.
std::vector<SweepRow> sweep_timesteps(const QannModel& qann, const SnnModel& snn,
                                      const std::vector<Tensor>& inputs,
                                      const std::vector<long>& t_list, long t_max = 0,
                                      unsigned threads = 1);

}  // namespace spikezip
