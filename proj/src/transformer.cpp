#include "spikezip/transformer.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "spikezip/parallel.hpp"
#include "spikezip/rng.hpp"
#include "spikezip/spiking_ops.hpp"

namespace spikezip {

namespace {

constexpr std::array<const char*, 11> kLayerSites = {
    "qkv_in",  "q_out",    "k_out",   "v_out",  "attn_array", "attn_out",
    "proj_in", "proj_out", "mlp_in",  "mlp_mid", "mlp_out"};

std::string layer_prefix(std::size_t l) { return "layer" + std::to_string(l) + "."; }

std::string site_suffix(const std::string& site) {
  const auto dot = site.rfind('.');
  return dot == std::string::npos ? site : site.substr(dot + 1);
}

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const char* name) {
  if (t.shape() != shape) throw shape_error(std::string("model tensor ") + name + ": bad shape");
}

}  // namespace

void EncoderConfig::validate() const {
  if (n < 1 || d < 1 || heads < 1 || d_ff < 1 || layers < 1 || classes < 1)
    throw config_error("config: all dimensions must be at least 1");
  if (d % heads != 0) throw config_error("config: d must be divisible by heads");
  if (levels < 2) throw config_error("config: levels must be at least 2");
}

void ModelWeights::validate() const {
  config.validate();
  require_shape(embed_w, {config.d, config.d}, "embed.w");
  require_shape(embed_pos, {config.n, config.d}, "embed.pos");
  require_shape(head_w, {config.d, config.classes}, "head.w");
  require_shape(head_b, {config.classes}, "head.b");
  if (layers.size() != config.layers)
    throw config_error("model: layer count does not match config");
  for (const LayerWeights& w : layers) {
    require_shape(w.w_q, {config.d, config.d}, "w_q");
    require_shape(w.b_q, {config.d}, "b_q");
    require_shape(w.w_k, {config.d, config.d}, "w_k");
    require_shape(w.b_k, {config.d}, "b_k");
    require_shape(w.w_v, {config.d, config.d}, "w_v");
    require_shape(w.b_v, {config.d}, "b_v");
    require_shape(w.w_o, {config.d, config.d}, "w_o");
    require_shape(w.b_o, {config.d}, "b_o");
    require_shape(w.ln1_gamma, {config.d}, "ln1_gamma");
    require_shape(w.ln1_beta, {config.d}, "ln1_beta");
    require_shape(w.ln2_gamma, {config.d}, "ln2_gamma");
    require_shape(w.ln2_beta, {config.d}, "ln2_beta");
    require_shape(w.w_mlp1, {config.d, config.d_ff}, "w_mlp1");
    require_shape(w.b_mlp1, {config.d_ff}, "b_mlp1");
    require_shape(w.w_mlp2, {config.d_ff, config.d}, "w_mlp2");
    require_shape(w.b_mlp2, {config.d}, "b_mlp2");
  }
}

ModelWeights generate_weights(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  const CounterRng root(seed);
  auto gauss = [&root](const std::string& label, std::vector<std::size_t> shape, double sd,
                       double mean = 0.0) {
    Tensor t(std::move(shape));
    root.stream(label).fill_gaussian(t, sd, mean);
    return t;
  };
  const double w_sd = 1.0 / std::sqrt(static_cast<double>(config.d));
  const double ff_sd = 1.0 / std::sqrt(static_cast<double>(config.d_ff));

  ModelWeights m;
  m.config = config;
  m.embed_w = gauss("embed.w", {config.d, config.d}, w_sd);
  m.embed_pos = gauss("embed.pos", {config.n, config.d}, 0.02);
  m.head_w = gauss("head.w", {config.d, config.classes}, w_sd);
  m.head_b = gauss("head.b", {config.classes}, 0.02);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = layer_prefix(l);
    LayerWeights w;
    w.w_q = gauss(p + "w_q", {config.d, config.d}, w_sd);
    w.b_q = gauss(p + "b_q", {config.d}, 0.02);
    w.w_k = gauss(p + "w_k", {config.d, config.d}, w_sd);
    w.b_k = gauss(p + "b_k", {config.d}, 0.02);
    w.w_v = gauss(p + "w_v", {config.d, config.d}, w_sd);
    w.b_v = gauss(p + "b_v", {config.d}, 0.02);
    w.w_o = gauss(p + "w_o", {config.d, config.d}, w_sd);
    w.b_o = gauss(p + "b_o", {config.d}, 0.02);
    w.ln1_gamma = gauss(p + "ln1_gamma", {config.d}, 0.02, 1.0);
    w.ln1_beta = gauss(p + "ln1_beta", {config.d}, 0.02);
    w.ln2_gamma = gauss(p + "ln2_gamma", {config.d}, 0.02, 1.0);
    w.ln2_beta = gauss(p + "ln2_beta", {config.d}, 0.02);
    w.w_mlp1 = gauss(p + "w_mlp1", {config.d, config.d_ff}, w_sd);
    w.b_mlp1 = gauss(p + "b_mlp1", {config.d_ff}, 0.02);
    w.w_mlp2 = gauss(p + "w_mlp2", {config.d_ff, config.d}, ff_sd);
    w.b_mlp2 = gauss(p + "b_mlp2", {config.d}, 0.02);
    m.layers.push_back(std::move(w));
  }
  return m;
}

Tensor generate_input(const EncoderConfig& config, std::uint64_t seed, std::uint64_t index) {
  config.validate();
  Tensor x({config.n, config.d});
  CounterRng(seed).stream("input/" + std::to_string(index)).fill_gaussian(x, 1.0);
  return x;
}

std::vector<std::string> quantizer_sites(const EncoderConfig& config) {
  std::vector<std::string> out{"embed_out"};
  for (std::size_t l = 0; l < config.layers; ++l)
    for (const char* s : kLayerSites) out.push_back(layer_prefix(l) + s);
  return out;
}

std::vector<std::size_t> site_shape(const EncoderConfig& config, const std::string& site) {
  const std::string s = site_suffix(site);
  if (s == "attn_array" || s == "attn_out") return {config.heads, config.n, config.n};
  if (s == "mlp_mid") return {config.n, config.d_ff};
  return {config.n, config.d};
}

bool site_is_signed(const std::string& site) { return site_suffix(site) != "mlp_mid"; }

namespace {

Tensor apply_site(const std::string& name, Tensor value,
                  const std::map<std::string, QuantizerSpec>* quantizers, const SiteTap* tap) {
  if (tap) (*tap)(name, value);
  if (quantizers) {
    const auto it = quantizers->find(name);
    if (it == quantizers->end()) throw config_error("missing quantizer for site " + name);
    value = quantize(value, it->second);
  }
  return value;
}

Tensor forward_encoder(const ModelWeights& m, const Tensor& x,
                       const std::map<std::string, QuantizerSpec>* quantizers,
                       const SiteTap* tap) {
  m.validate();
  const EncoderConfig& cfg = m.config;
  if (x.rank() != 2 || x.shape()[0] != cfg.n || x.shape()[1] != cfg.d)
    throw shape_error("forward: input must be [n×d]");
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor r = apply_site("embed_out", add(matmul(x, m.embed_w), m.embed_pos), quantizers, tap);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const LayerWeights& w = m.layers[l];
    const std::string p = layer_prefix(l);
    const Tensor u = apply_site(p + "qkv_in",
                                layernorm(r, w.ln1_gamma, w.ln1_beta, kLayerNormEps),
                                quantizers, tap);
    const Tensor q =
        apply_site(p + "q_out", add_rowwise(matmul(u, w.w_q), w.b_q), quantizers, tap);
    const Tensor k =
        apply_site(p + "k_out", add_rowwise(matmul(u, w.w_k), w.b_k), quantizers, tap);
    const Tensor v =
        apply_site(p + "v_out", add_rowwise(matmul(u, w.w_v), w.b_v), quantizers, tap);

    std::vector<Tensor> scores;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
      const Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
      scores.push_back(matmul(qh, transpose(kh)));
    }
    const Tensor a = apply_site(p + "attn_array", stack_planes(scores), quantizers, tap);
    const Tensor attn =
        apply_site(p + "attn_out", softmax(scale(a, inv_sqrt_dh)), quantizers, tap);

    std::vector<Tensor> ctx;
    for (std::size_t h = 0; h < cfg.heads; ++h)
      ctx.push_back(matmul(plane(attn, h), slice_cols(v, h * dh, (h + 1) * dh)));
    const Tensor c = apply_site(p + "proj_in", concat_cols(ctx), quantizers, tap);
    const Tensor o =
        apply_site(p + "proj_out", add_rowwise(matmul(c, w.w_o), w.b_o), quantizers, tap);
    r = add(r, o);

    const Tensor wn = apply_site(p + "mlp_in",
                                 layernorm(r, w.ln2_gamma, w.ln2_beta, kLayerNormEps),
                                 quantizers, tap);
    const Tensor hid = apply_site(
        p + "mlp_mid", relu(add_rowwise(matmul(wn, w.w_mlp1), w.b_mlp1)), quantizers, tap);
    const Tensor mo =
        apply_site(p + "mlp_out", add_rowwise(matmul(hid, w.w_mlp2), w.b_mlp2), quantizers, tap);
    r = add(r, mo);
  }
  return add(rowvec_matmul(mean_rows(r), m.head_w), m.head_b);
}

}  // namespace

Tensor forward_ann(const ModelWeights& model, const Tensor& x, const SiteTap* tap) {
  return forward_encoder(model, x, nullptr, tap);
}

QannModel quantize_model(const ModelWeights& model, const std::vector<Tensor>& calib_inputs,
                         std::size_t levels) {
  if (calib_inputs.empty()) throw calibration_error("quantize_model: no calibration inputs");
  QannModel out{model, {}};
  if (levels != 0) out.weights.config.levels = levels;
  const std::size_t use_levels = out.weights.config.levels;

  std::map<std::string, std::vector<Tensor>> captured;
  const SiteTap tap = [&captured](const std::string& site, const Tensor& value) {
    captured[site].push_back(value);
  };
  for (const Tensor& x : calib_inputs) forward_ann(model, x, &tap);
  for (const std::string& site : quantizer_sites(out.weights.config))
    out.quantizers[site] = calibrate(captured[site], use_levels, site_is_signed(site));
  return out;
}

Tensor forward_qann(const QannModel& model, const Tensor& x) {
  return forward_encoder(model.weights, x, &model.quantizers, nullptr);
}

SnnModel convert(const QannModel& model) {
  SnnModel out{model.weights, model.quantizers, {}};
  for (const std::string& site : quantizer_sites(model.weights.config)) {
    const auto it = model.quantizers.find(site);
    if (it == model.quantizers.end())
      throw config_error("convert: model has no quantizer for site " + site);
    out.neurons[site] = NeuronSite{to_neuron_params(it->second), it->second.s * 0.5};
  }
  return out;
}

long default_t_max(const EncoderConfig& config) {
  return 16 * static_cast<long>(config.levels);
}

SnnResult forward_snn(const SnnModel& model, const Tensor& x, const SnnOptions& opts) {
  model.weights.validate();
  const EncoderConfig& cfg = model.weights.config;
  if (x.rank() != 2 || x.shape()[0] != cfg.n || x.shape()[1] != cfg.d)
    throw shape_error("forward_snn: input must be [n×d]");
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const long t_max = opts.t_max > 0 ? opts.t_max : default_t_max(cfg);

  const std::vector<std::string> sites = quantizer_sites(cfg);
  std::vector<StBifLayer> neurons;
  std::vector<double> v_thr;
  neurons.reserve(sites.size());
  v_thr.reserve(sites.size());
  for (const std::string& site : sites) {
    const auto it = model.neurons.find(site);
    if (it == model.neurons.end())
      throw config_error("forward_snn: model has no neuron parameters for site " + site);
    neurons.emplace_back(site_shape(cfg, site), it->second.params, it->second.v0);
    v_thr.push_back(it->second.params.v_thr);
  }
  // canonical site index: embed_out first, then 11 sites per layer
  const auto idx = [](std::size_t l, int off) {
    return 1 + l * kLayerSites.size() + static_cast<std::size_t>(off);
  };

  std::vector<std::vector<AaState>> qk(cfg.layers), av(cfg.layers);
  std::vector<DiffOp> ln1_op, softmax_op, ln2_op;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      qk[l].emplace_back(cfg.n, cfg.n, dh);
      av[l].emplace_back(cfg.n, dh, cfg.n);
    }
    const LayerWeights& w = model.weights.layers[l];
    ln1_op.push_back(
        DiffOp::make_layernorm({cfg.n, cfg.d}, w.ln1_gamma, w.ln1_beta, kLayerNormEps));
    softmax_op.push_back(DiffOp::make_softmax({cfg.heads, cfg.n, cfg.n}));
    ln2_op.push_back(
        DiffOp::make_layernorm({cfg.n, cfg.d}, w.ln2_gamma, w.ln2_beta, kLayerNormEps));
  }

  SnnResult res;
  if (opts.record_trace) {
    const std::size_t n = cfg.n, d = cfg.d, d_ff = cfg.d_ff;
    auto neuron_count = [&](const std::string& site) {
      std::size_t c = 1;
      for (std::size_t s : site_shape(cfg, site)) c *= s;
      return c;
    };
    for (std::size_t i = 0; i < sites.size(); ++i) {
      LayerDesc desc;
      desc.name = sites[i];
      desc.n_neurons = neuron_count(sites[i]);
      const std::string suffix = site_suffix(sites[i]);
      const std::size_t l = i == 0 ? 0 : (i - 1) / kLayerSites.size();
      if (suffix == "q_out" || suffix == "k_out" || suffix == "v_out")
        desc.synapse = {FanInKind::kLinear, d, d, static_cast<int>(idx(l, 0))};
      else if (suffix == "attn_array")
        desc.synapse = {FanInKind::kAa, 0, 0, -1, static_cast<int>(idx(l, 1)),
                        static_cast<int>(idx(l, 2)), 2 * n, 2 * n};
      else if (suffix == "proj_in")
        desc.synapse = {FanInKind::kAa, 0, 0, -1, static_cast<int>(idx(l, 5)),
                        static_cast<int>(idx(l, 3)), 2 * dh, 2 * n};
      else if (suffix == "proj_out")
        desc.synapse = {FanInKind::kLinear, d, d, static_cast<int>(idx(l, 6))};
      else if (suffix == "mlp_mid")
        desc.synapse = {FanInKind::kLinear, d, d_ff, static_cast<int>(idx(l, 8))};
      else if (suffix == "mlp_out")
        desc.synapse = {FanInKind::kLinear, d_ff, d, static_cast<int>(idx(l, 9))};
      // embed_out, qkv_in, attn_out, mlp_in receive direct (analog or
      // differential) charge; no synaptic events are counted for them.
      res.trace.add_layer(std::move(desc));
    }
  }

  Tensor head_acc({cfg.classes});
  const Tensor zero_nd({cfg.n, cfg.d});
  const Tensor analog = add(matmul(x, model.weights.embed_w), model.weights.embed_pos);

  long last_step = 0;
  bool converged = false;
  for (long t = 1; t <= t_max; ++t) {
    last_step = t;
    long long fired_this_step = 0;
    const bool first = t == 1;
    auto fire = [&](std::size_t site, const Tensor& charge) {
      SpikeTensor s = neurons[site].step(charge);
      fired_this_step += static_cast<long long>(s.nonzero());
      if (opts.record_trace) res.trace.record(static_cast<int>(site), t, s);
      return s;
    };

    const SpikeTensor s_embed = fire(0, first ? analog : zero_nd);
    Tensor r = scale(s_embed.values, v_thr[0]);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const LayerWeights& w = model.weights.layers[l];

      const SpikeTensor s_u = fire(idx(l, 0), ln1_op[l].step(r));
      const Tensor u_t = scale(s_u.values, v_thr[idx(l, 0)]);

      Tensor q_in = matmul(u_t, w.w_q);
      if (first) q_in = add_rowwise(q_in, w.b_q);
      const SpikeTensor s_q = fire(idx(l, 1), q_in);
      const Tensor q_t = scale(s_q.values, v_thr[idx(l, 1)]);

      Tensor k_in = matmul(u_t, w.w_k);
      if (first) k_in = add_rowwise(k_in, w.b_k);
      const SpikeTensor s_k = fire(idx(l, 2), k_in);
      const Tensor k_t = scale(s_k.values, v_thr[idx(l, 2)]);

      Tensor v_in = matmul(u_t, w.w_v);
      if (first) v_in = add_rowwise(v_in, w.b_v);
      const SpikeTensor s_v = fire(idx(l, 3), v_in);
      const Tensor v_t = scale(s_v.values, v_thr[idx(l, 3)]);

      std::vector<Tensor> score_inc;
      for (std::size_t h = 0; h < cfg.heads; ++h)
        score_inc.push_back(qk[l][h].step(slice_cols(q_t, h * dh, (h + 1) * dh),
                                          slice_cols(k_t, h * dh, (h + 1) * dh)));
      const SpikeTensor s_a = fire(idx(l, 4), stack_planes(score_inc));

      const Tensor sm_inc =
          softmax_op[l].step(scale(s_a.values, v_thr[idx(l, 4)] * inv_sqrt_dh));
      const SpikeTensor s_p = fire(idx(l, 5), sm_inc);
      const Tensor p_t = scale(s_p.values, v_thr[idx(l, 5)]);

      std::vector<Tensor> ctx_inc;
      for (std::size_t h = 0; h < cfg.heads; ++h)
        ctx_inc.push_back(
            av[l][h].step(plane(p_t, h), transpose(slice_cols(v_t, h * dh, (h + 1) * dh))));
      const SpikeTensor s_c = fire(idx(l, 6), concat_cols(ctx_inc));
      const Tensor c_t = scale(s_c.values, v_thr[idx(l, 6)]);

      Tensor o_in = matmul(c_t, w.w_o);
      if (first) o_in = add_rowwise(o_in, w.b_o);
      const SpikeTensor s_o = fire(idx(l, 7), o_in);
      r = add(r, scale(s_o.values, v_thr[idx(l, 7)]));

      const SpikeTensor s_w = fire(idx(l, 8), ln2_op[l].step(r));
      const Tensor w_t = scale(s_w.values, v_thr[idx(l, 8)]);

      Tensor h_in = matmul(w_t, w.w_mlp1);
      if (first) h_in = add_rowwise(h_in, w.b_mlp1);
      const SpikeTensor s_mid = fire(idx(l, 9), h_in);
      const Tensor mid_t = scale(s_mid.values, v_thr[idx(l, 9)]);

      Tensor m_in = matmul(mid_t, w.w_mlp2);
      if (first) m_in = add_rowwise(m_in, w.b_mlp2);
      const SpikeTensor s_m = fire(idx(l, 10), m_in);
      r = add(r, scale(s_m.values, v_thr[idx(l, 10)]));
    }

    Tensor head_inc = rowvec_matmul(mean_rows(r), model.weights.head_w);
    if (first) head_inc = add(head_inc, model.weights.head_b);
    head_acc = add(head_acc, head_inc);
    if (opts.record_head_trajectory) res.head_trajectory.push_back(head_acc);

    if (fired_this_step == 0) {
      converged = true;
      break;
    }
  }

  res.logits = std::move(head_acc);
  res.converged = converged;
  res.t_eq = last_step;
  if (!converged && opts.require_equilibrium)
    throw snn_convergence_error(
        "spiking forward did not reach equilibrium within t_max=" + std::to_string(t_max),
        last_step, res);
  return res;
}

std::vector<SweepRow> sweep_timesteps(const QannModel& qann, const SnnModel& snn,
                                      const std::vector<Tensor>& inputs,
                                      const std::vector<long>& t_list, long t_max,
                                      unsigned threads) {
  if (inputs.empty()) throw config_error("sweep: no inputs");
  for (long t : t_list)
    if (t < 1) throw config_error("sweep: truncation steps must be at least 1");

  std::vector<std::size_t> ref_argmax(inputs.size());
  std::vector<Tensor> ref_logits(inputs.size());
  std::vector<std::vector<Tensor>> trajectories(inputs.size());
  parallel_for_index(inputs.size(), threads, [&](std::size_t i) {
    ref_logits[i] = forward_qann(qann, inputs[i]);
    ref_argmax[i] = argmax(ref_logits[i]);
    SnnOptions opts;
    opts.t_max = t_max;
    opts.require_equilibrium = false;
    opts.record_head_trajectory = true;
    trajectories[i] = forward_snn(snn, inputs[i], opts).head_trajectory;
  });

  std::vector<SweepRow> rows;
  for (long t : t_list) {
    SweepRow row;
    row.t_step = t;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::vector<Tensor>& traj = trajectories[i];
      const std::size_t at =
          std::min<std::size_t>(static_cast<std::size_t>(t), traj.size()) - 1;
      const Tensor& logits = traj[at];
      if (argmax(logits) == ref_argmax[i]) ++agree;
      row.max_abs_err = std::max(row.max_abs_err, max_abs_diff(logits, ref_logits[i]));
    }
    row.agreement = static_cast<double>(agree) / static_cast<double>(inputs.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace spikezip
