#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikezip/neuron.hpp"

namespace spikezip {

// How charge reaches a neuron layer. Only synaptic structures (linear fan-in
// and the streaming two-operand product) contribute pre-synaptic events;
// kDirect covers external injection and differential-operator charge, which
// the accounting model does not count.
enum class FanInKind { kDirect, kLinear, kAa };

struct SynapseDesc {
  FanInKind kind = FanInKind::kDirect;
  // linear: every neuron sums fan_in inputs; each upstream spike touches
  // fan_out outputs (the out-feature count of its row).
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  int upstream = -1;
  // streaming product of q [m×r] and k [p×r] into an [m×p] layer: a q-side
  // spike touches its output row in two of the three matmuls (2p events), a
  // k-side spike its output column (2m events).
  int upstream_q = -1;
  int upstream_k = -1;
  std::size_t fan_out_q = 0;
  std::size_t fan_out_k = 0;
};

struct LayerDesc {
  std::string name;
  std::size_t n_neurons = 0;
  SynapseDesc synapse;
};

struct SpikeEvent {
  std::uint32_t layer = 0;
  std::uint32_t step = 0;  // 1-based
  std::uint32_t element = 0;
  std::int8_t sign = 0;
};

// Per-layer, per-step spike record of one network run. Appended
// single-threaded during the forward pass; all reports below are pure
// functions over the frozen log.
class SpikeActivityLog {
 public:
  int add_layer(LayerDesc desc);
  // Counts the nonzero spikes of an unscaled tensor and appends one event per
  // firing neuron. Steps are 1-based and must not decrease.
  void record(int layer, long step, const SpikeTensor& spikes);

  long steps() const { return steps_; }
  const std::vector<LayerDesc>& layers() const { return layers_; }
  long long fired(int layer, long step) const;
  double firing_rate(int layer, long step) const;  // fired / n_neurons, in [0,1]
  const std::vector<SpikeEvent>& events() const { return events_; }

 private:
  std::vector<LayerDesc> layers_;
  std::vector<std::vector<long long>> fired_;  // [layer][step-1]
  std::vector<SpikeEvent> events_;
  long steps_ = 0;
};

// Post-synaptic spikes (events generated by neurons): sum over layers and
// steps of firing-rate * neuron-count, against the raw event count oracle.
long long count_post(const SpikeActivityLog& log);
long long count_post_by_events(const SpikeActivityLog& log);

// Pre-synaptic spikes (events delivered through synapses): per layer,
// upstream-rate * fan-in * neuron-count for linear structures and the
// documented fan-out rule for streaming products. The oracle walks the raw
// event list instead of per-step counts.
long long count_pre(const SpikeActivityLog& log);
long long count_pre_by_events(const SpikeActivityLog& log);

// pre + post per step (the per-step total spike activity)
std::vector<long long> total_spikes_per_step(const SpikeActivityLog& log);

// Fan-in and pre-synaptic counts for standalone layer shapes. The
// convolution form is provided for completeness; the encoder has none.
long long conv_fan_in(std::size_t c_in, std::size_t k_h, std::size_t k_w);
long long conv_pre_synaptic(std::size_t c_in, std::size_t k_h, std::size_t k_w,
                            std::size_t c_out, std::size_t o_h, std::size_t o_w, double rate);
long long linear_pre_synaptic(std::size_t n_in, std::size_t n_out, double rate);

struct PowerReport {
  double total_spikes_per_step = 0.0;
  double alpha_joules = 0.9e-12;  // energy per spike activity, 45nm estimate
  double step_seconds = 1e-3;
  double power_watts = 0.0;
};

// P = total_spikes_per_step / 1e-3 s * alpha
PowerReport estimate_power(double spikes_per_step, double alpha);
PowerReport power_from_log(const SpikeActivityLog& log, double alpha);

struct ComplexityRow {
  std::string op;
  std::string network;  // "snn" or "qann"
  std::string spatial_expr;
  double spatial = 0.0;
  std::string temporal_expr;
  double temporal = 0.0;
};

// Asymptotic cost table instantiated with (n, d, T). gamma is the
// user-supplied ANN-vs-SNN per-operation cost ratio; it is reported, never
// measured.
std::vector<ComplexityRow> complexity_report(std::size_t n, std::size_t d, long t_steps,
                                             double gamma);

}  // namespace spikezip
