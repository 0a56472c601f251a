#include "spikezip/metrics.hpp"

#include <cmath>
#include <utility>

#include "spikezip/errors.hpp"

namespace spikezip {

int SpikeActivityLog::add_layer(LayerDesc desc) {
  if (desc.n_neurons == 0) throw accounting_error("layer must have neurons");
  layers_.push_back(std::move(desc));
  fired_.emplace_back();
  return static_cast<int>(layers_.size()) - 1;
}

void SpikeActivityLog::record(int layer, long step, const SpikeTensor& spikes) {
  if (layer < 0 || layer >= static_cast<int>(layers_.size()))
    throw accounting_error("record: unknown layer");
  if (step <= 0) throw accounting_error("record: steps are 1-based");
  if (spikes.values.size() != layers_[static_cast<std::size_t>(layer)].n_neurons)
    throw accounting_error("record: spike tensor size does not match the layer");
  spikes.validate();
  auto& counts = fired_[static_cast<std::size_t>(layer)];
  while (static_cast<long>(counts.size()) < step) counts.push_back(0);
  long long fired = 0;
  for (std::size_t i = 0; i < spikes.values.size(); ++i) {
    const double v = spikes.values.data()[i];
    if (v == 0.0) continue;
    ++fired;
    events_.push_back(SpikeEvent{static_cast<std::uint32_t>(layer),
                                 static_cast<std::uint32_t>(step),
                                 static_cast<std::uint32_t>(i),
                                 static_cast<std::int8_t>(v)});
  }
  counts[static_cast<std::size_t>(step - 1)] += fired;
  if (step > steps_) steps_ = step;
}

long long SpikeActivityLog::fired(int layer, long step) const {
  const auto& counts = fired_[static_cast<std::size_t>(layer)];
  if (step <= 0 || step > static_cast<long>(counts.size())) return 0;
  return counts[static_cast<std::size_t>(step - 1)];
}

double SpikeActivityLog::firing_rate(int layer, long step) const {
  return static_cast<double>(fired(layer, step)) /
         static_cast<double>(layers_[static_cast<std::size_t>(layer)].n_neurons);
}

long long count_post(const SpikeActivityLog& log) {
  long long total = 0;
  for (int i = 0; i < static_cast<int>(log.layers().size()); ++i) {
    const double n = static_cast<double>(log.layers()[static_cast<std::size_t>(i)].n_neurons);
    for (long t = 1; t <= log.steps(); ++t)
      total += std::llround(log.firing_rate(i, t) * n);
  }
  return total;
}

long long count_post_by_events(const SpikeActivityLog& log) {
  return static_cast<long long>(log.events().size());
}

namespace {

void require_upstream(const SpikeActivityLog& log, int idx, const char* what) {
  if (idx < 0 || idx >= static_cast<int>(log.layers().size()))
    throw accounting_error(std::string("pre-synaptic accounting: missing ") + what +
                           " descriptor");
}

}  // namespace

long long count_pre(const SpikeActivityLog& log) {
  long long total = 0;
  for (const LayerDesc& layer : log.layers()) {
    const SynapseDesc& syn = layer.synapse;
    switch (syn.kind) {
      case FanInKind::kDirect:
        break;
      case FanInKind::kLinear: {
        require_upstream(log, syn.upstream, "linear upstream");
        const double n_up =
            static_cast<double>(log.layers()[static_cast<std::size_t>(syn.upstream)].n_neurons);
        for (long t = 1; t <= log.steps(); ++t) {
          const double rate = static_cast<double>(log.fired(syn.upstream, t)) / n_up;
          total += std::llround(rate * static_cast<double>(syn.fan_in) *
                                static_cast<double>(layer.n_neurons));
        }
        break;
      }
      case FanInKind::kAa: {
        require_upstream(log, syn.upstream_q, "q-side upstream");
        require_upstream(log, syn.upstream_k, "k-side upstream");
        for (long t = 1; t <= log.steps(); ++t) {
          total += log.fired(syn.upstream_q, t) * static_cast<long long>(syn.fan_out_q);
          total += log.fired(syn.upstream_k, t) * static_cast<long long>(syn.fan_out_k);
        }
        break;
      }
    }
  }
  return total;
}

long long count_pre_by_events(const SpikeActivityLog& log) {
  // fan-out contribution of each source layer, over all structures it feeds
  std::vector<long long> fan_out_of(log.layers().size(), 0);
  for (const LayerDesc& layer : log.layers()) {
    const SynapseDesc& syn = layer.synapse;
    switch (syn.kind) {
      case FanInKind::kDirect:
        break;
      case FanInKind::kLinear:
        require_upstream(log, syn.upstream, "linear upstream");
        fan_out_of[static_cast<std::size_t>(syn.upstream)] +=
            static_cast<long long>(syn.fan_out);
        break;
      case FanInKind::kAa:
        require_upstream(log, syn.upstream_q, "q-side upstream");
        require_upstream(log, syn.upstream_k, "k-side upstream");
        fan_out_of[static_cast<std::size_t>(syn.upstream_q)] +=
            static_cast<long long>(syn.fan_out_q);
        fan_out_of[static_cast<std::size_t>(syn.upstream_k)] +=
            static_cast<long long>(syn.fan_out_k);
        break;
    }
  }
  long long total = 0;
  for (const SpikeEvent& e : log.events()) total += fan_out_of[e.layer];
  return total;
}

std::vector<long long> total_spikes_per_step(const SpikeActivityLog& log) {
  std::vector<long long> per_step(static_cast<std::size_t>(log.steps()), 0);
  for (long t = 1; t <= log.steps(); ++t) {
    long long post = 0;
    long long pre = 0;
    for (int i = 0; i < static_cast<int>(log.layers().size()); ++i) {
      const LayerDesc& layer = log.layers()[static_cast<std::size_t>(i)];
      post += log.fired(i, t);
      const SynapseDesc& syn = layer.synapse;
      if (syn.kind == FanInKind::kLinear) {
        const double n_up =
            static_cast<double>(log.layers()[static_cast<std::size_t>(syn.upstream)].n_neurons);
        const double rate = static_cast<double>(log.fired(syn.upstream, t)) / n_up;
        pre += std::llround(rate * static_cast<double>(syn.fan_in) *
                            static_cast<double>(layer.n_neurons));
      } else if (syn.kind == FanInKind::kAa) {
        pre += log.fired(syn.upstream_q, t) * static_cast<long long>(syn.fan_out_q);
        pre += log.fired(syn.upstream_k, t) * static_cast<long long>(syn.fan_out_k);
      }
    }
    per_step[static_cast<std::size_t>(t - 1)] = pre + post;
  }
  return per_step;
}

long long conv_fan_in(std::size_t c_in, std::size_t k_h, std::size_t k_w) {
  return static_cast<long long>(c_in * k_h * k_w);
}

long long conv_pre_synaptic(std::size_t c_in, std::size_t k_h, std::size_t k_w,
                            std::size_t c_out, std::size_t o_h, std::size_t o_w, double rate) {
  const double fan_in = static_cast<double>(conv_fan_in(c_in, k_h, k_w));
  const double neurons = static_cast<double>(c_out * o_h * o_w);
  return std::llround(rate * fan_in * neurons);
}

long long linear_pre_synaptic(std::size_t n_in, std::size_t n_out, double rate) {
  return std::llround(rate * static_cast<double>(n_in) * static_cast<double>(n_out));
}

PowerReport estimate_power(double spikes_per_step, double alpha) {
  if (!(alpha > 0.0)) throw config_error("estimate_power: alpha must be positive");
  PowerReport report;
  report.total_spikes_per_step = spikes_per_step;
  report.alpha_joules = alpha;
  report.power_watts = spikes_per_step / report.step_seconds * alpha;
  return report;
}

PowerReport power_from_log(const SpikeActivityLog& log, double alpha) {
  const std::vector<long long> per_step = total_spikes_per_step(log);
  double mean = 0.0;
  for (long long c : per_step) mean += static_cast<double>(c);
  if (!per_step.empty()) mean /= static_cast<double>(per_step.size());
  return estimate_power(mean, alpha);
}

std::vector<ComplexityRow> complexity_report(std::size_t n, std::size_t d, long t_steps,
                                             double gamma) {
  const double nd = static_cast<double>(n * d);
  const double dd = static_cast<double>(d * d);
  const double nn = static_cast<double>(n * n);
  const double T = static_cast<double>(t_steps);
  std::vector<ComplexityRow> rows;
  rows.push_back({"aw-mult", "snn", "n*d + d^2", nd + dd, "T*n*d^2", T * nd * d});
  rows.push_back({"aa-mult", "snn", "n*d", nd, "T*n*d^2", T * nd * d});
  rows.push_back({"spike-softmax", "snn", "n^2", nn, "T*n^2", T * nn});
  rows.push_back({"spike-layernorm", "snn", "n*d", nd, "T*n*d", T * nd});
  rows.push_back({"aw-mult", "qann", "n*d + d^2", nd + dd, "gamma*n*d^2", gamma * nd * d});
  rows.push_back({"aa-mult", "qann", "n*d", nd, "gamma*n*d^2", gamma * nd * d});
  rows.push_back({"softmax", "qann", "1", 1.0, "gamma*n^2", gamma * nn});
  rows.push_back({"layernorm", "qann", "1", 1.0, "gamma*n*d", gamma * nd});
  return rows;
}

}  // namespace spikezip
