// Command-line surface for the quantized-transformer to spiking-network
// conversion pipeline: generate models and inputs, calibrate quantizers,
// convert, run the three forward paths, check equivalence, sweep truncation
// horizons and report spike/power metrics.
//
// Exit codes: 0 ok, 2 configuration/validation, 3 numeric or non-convergence,
// 4 file I/O, 5 equivalence failure.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikezip/manifest.hpp"
#include "spikezip/metrics.hpp"
#include "spikezip/parallel.hpp"
#include "spikezip/transformer.hpp"

using nlohmann::json;
using namespace spikezip;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;
constexpr int kExitEquivalence = 5;

struct equivalence_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json logits_json(const Tensor& logits) {
  json out = json::array();
  for (std::size_t i = 0; i < logits.size(); ++i) out.push_back(logits.at(i));
  return out;
}

json spike_report_json(const SpikeActivityLog& log, double alpha) {
  const long long post = count_post(log);
  const long long pre = count_pre(log);
  json per_layer = json::array();
  for (int i = 0; i < static_cast<int>(log.layers().size()); ++i) {
    const LayerDesc& layer = log.layers()[static_cast<std::size_t>(i)];
    long long fired = 0;
    for (long t = 1; t <= log.steps(); ++t) fired += log.fired(i, t);
    per_layer.push_back(json{{"site", layer.name},
                             {"neurons", layer.n_neurons},
                             {"fired", fired}});
  }
  const PowerReport power = power_from_log(log, alpha);
  return json{{"post", post},
              {"pre", pre},
              {"total", pre + post},
              {"per_step_total", total_spikes_per_step(log)},
              {"per_layer", per_layer},
              {"power",
               json{{"alpha_joules", power.alpha_joules},
                    {"step_seconds", power.step_seconds},
                    {"total_spikes_per_step", power.total_spikes_per_step},
                    {"power_watts", power.power_watts}}}};
}

std::vector<Tensor> make_inputs(const EncoderConfig& config, std::uint64_t seed,
                                std::size_t count, std::uint64_t base_index = 0) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(generate_input(config, seed, base_index + i));
  return out;
}

std::vector<long> parse_t_list(const std::string& csv) {
  std::vector<long> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                        : comma - pos);
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw config_error("sweep: bad --t-list entry '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw config_error("sweep: --t-list is empty");
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"quantized transformer to spiking network conversion toolkit"};
  app.require_subcommand(1);

  // --- gen-model ---------------------------------------------------------
  auto* gen_model = app.add_subcommand("gen-model", "generate a random model from a seed");
  std::string gm_out, gm_config;
  std::uint64_t gm_seed = 1;
  gen_model->add_option("out", gm_out, "output .manifest path")->required();
  gen_model->add_option("--seed", gm_seed, "generator seed")->required();
  gen_model->add_option("--config", gm_config, "encoder config JSON file")->required();
  gen_model->callback([&] {
    const EncoderConfig config = config_from_json_file(gm_config);
    save_model(gm_out, generate_weights(config, gm_seed), gm_seed, "ann");
  });

  // --- gen-input ---------------------------------------------------------
  auto* gen_in = app.add_subcommand("gen-input", "generate a synthetic token-embedding input");
  std::string gi_out, gi_model;
  std::uint64_t gi_seed = 1, gi_index = 0;
  gen_in->add_option("out", gi_out, "output .blob path")->required();
  gen_in->add_option("--model", gi_model, "model manifest (fixes the input shape)")->required();
  gen_in->add_option("--seed", gi_seed, "input seed")->required();
  gen_in->add_option("--index", gi_index, "input index within the seed's stream");
  gen_in->callback([&] {
    const LoadedModel model = load_model(gi_model);
    write_input_blob(gi_out, generate_input(model.manifest.config, gi_seed, gi_index));
  });

  // --- calibrate ---------------------------------------------------------
  auto* cal = app.add_subcommand("calibrate", "fit per-site quantizers from activations");
  std::string cal_model, cal_out;
  std::vector<std::string> cal_inputs;
  std::size_t cal_levels = 0, cal_gen_count = 0;
  std::uint64_t cal_gen_seed = 1;
  cal->add_option("--model", cal_model, "model manifest")->required();
  cal->add_option("--inputs", cal_inputs, "calibration input blobs");
  cal->add_option("--gen-count", cal_gen_count, "generate this many calibration inputs instead");
  cal->add_option("--gen-seed", cal_gen_seed, "seed for generated calibration inputs");
  cal->add_option("--levels", cal_levels, "quantization states (default: config levels)");
  cal->add_option("--out", cal_out, "output manifest (default: rewrite --model)");
  cal->callback([&] {
    const LoadedModel model = load_model(cal_model);
    std::vector<Tensor> samples;
    for (const std::string& path : cal_inputs)
      samples.push_back(read_input_blob(path, model.manifest.config));
    if (cal_gen_count > 0) {
      const std::vector<Tensor> extra =
          make_inputs(model.manifest.config, cal_gen_seed, cal_gen_count);
      samples.insert(samples.end(), extra.begin(), extra.end());
    }
    const QannModel qann = quantize_model(model.weights, samples, cal_levels);
    save_model(cal_out.empty() ? cal_model : cal_out, qann.weights, model.manifest.seed,
               "qann", qann.quantizers);
    // quantization drift on the calibration data itself, reported not asserted
    double drift = 0.0;
    for (const Tensor& x : samples)
      drift = std::max(drift, max_abs_diff(forward_qann(qann, x), forward_ann(model.weights, x)));
    const json report{{"sites", qann.quantizers.size()},
                      {"levels", qann.weights.config.levels},
                      {"calibration_inputs", samples.size()},
                      {"max_logit_drift", drift}};
    std::cout << report.dump(2) << '\n';
  });

  // --- convert -----------------------------------------------------------
  auto* conv = app.add_subcommand("convert", "structurally convert a calibrated model");
  std::string conv_qann, conv_out;
  conv->add_option("out", conv_out, "output .manifest path")->required();
  conv->add_option("--qann", conv_qann, "calibrated model manifest")->required();
  conv->callback([&] {
    const LoadedModel model = load_model(conv_qann);
    const SnnModel snn = convert(as_qann(model));
    save_model(conv_out, snn.weights, model.manifest.seed, "snn", snn.quantizers, snn.neurons);
  });

  // --- run ---------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run one forward pass and print a JSON report");
  std::string run_model, run_input, run_mode = "ann";
  long run_t_max = 0;
  double run_alpha = 0.9e-12;
  bool run_timing = false;
  run->add_option("--model", run_model, "model manifest")->required();
  run->add_option("--input", run_input, "input blob")->required();
  run->add_option("--mode", run_mode, "ann | qann | snn")
      ->check(CLI::IsMember({"ann", "qann", "snn"}));
  run->add_option("--t-max", run_t_max, "spiking step budget (0 = 16*levels)");
  run->add_option("--alpha", run_alpha, "energy per spike activity in joules");
  run->add_flag("--timing", run_timing, "include wall time (not byte-stable across runs)");
  run->callback([&] {
    const auto started = std::chrono::steady_clock::now();
    const LoadedModel model = load_model(run_model);
    const Tensor x = read_input_blob(run_input, model.manifest.config);
    json report;
    report["mode"] = run_mode;
    report["input"] = run_input;
    if (run_mode == "ann") {
      report["logits"] = logits_json(forward_ann(model.weights, x));
    } else if (run_mode == "qann") {
      report["logits"] = logits_json(forward_qann(as_qann(model), x));
    } else {
      SnnOptions opts;
      opts.t_max = run_t_max;
      opts.record_trace = true;
      const SnnResult res = forward_snn(as_snn(model), x, opts);
      report["logits"] = logits_json(res.logits);
      report["t_eq"] = res.t_eq;
      report["converged"] = res.converged;
      report["spikes"] = spike_report_json(res.trace, run_alpha);
    }
    if (run_timing) {
      const auto elapsed = std::chrono::steady_clock::now() - started;
      report["wall_time_ms"] =
          std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
              .count();
    }
    std::cout << report.dump(2) << '\n';
  });

  // --- check-equiv -------------------------------------------------------
  auto* chk = app.add_subcommand("check-equiv",
                                 "verify spiking logits match the quantized model");
  std::string chk_qann, chk_snn;
  std::size_t chk_inputs = 10;
  std::uint64_t chk_seed = 1;
  double chk_tol = 1e-6;
  long chk_t_max = 0;
  chk->add_option("--qann", chk_qann, "calibrated model manifest")->required();
  chk->add_option("--snn", chk_snn, "converted model manifest")->required();
  chk->add_option("--inputs", chk_inputs, "number of random inputs");
  chk->add_option("--seed", chk_seed, "input seed");
  chk->add_option("--tol", chk_tol, "max-abs logit tolerance");
  chk->add_option("--t-max", chk_t_max, "spiking step budget (0 = 16*levels)");
  chk->callback([&] {
    const QannModel qann = as_qann(load_model(chk_qann));
    const SnnModel snn = as_snn(load_model(chk_snn));
    const std::vector<Tensor> inputs =
        make_inputs(qann.weights.config, chk_seed, chk_inputs);

    std::vector<double> errs(inputs.size(), 0.0);
    std::vector<bool> agree(inputs.size(), false);
    parallel_for_index(inputs.size(), env_thread_budget(), [&](std::size_t i) {
      const Tensor expected = forward_qann(qann, inputs[i]);
      SnnOptions opts;
      opts.t_max = chk_t_max;
      const SnnResult got = forward_snn(snn, inputs[i], opts);
      errs[i] = max_abs_diff(got.logits, expected);
      agree[i] = argmax(got.logits) == argmax(expected);
    });

    std::size_t worst = 0, agreeing = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (errs[i] > errs[worst]) worst = i;
      if (agree[i]) ++agreeing;
    }
    const bool pass = errs[worst] <= chk_tol;
    const json report{{"inputs", inputs.size()},
                      {"seed", chk_seed},
                      {"tol", chk_tol},
                      {"max_abs_err", errs[worst]},
                      {"worst_input", worst},
                      {"argmax_agreement",
                       static_cast<double>(agreeing) / static_cast<double>(inputs.size())},
                      {"pass", pass}};
    std::cout << report.dump(2) << '\n';
    if (!pass) throw equivalence_failure("max_abs_err above tolerance");
  });

  // --- sweep -------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "truncation sweep, CSV to stdout");
  std::string sw_qann, sw_snn, sw_t_list = "1,2,4,8,16,32,64";
  std::size_t sw_inputs = 20;
  std::uint64_t sw_seed = 1;
  long sw_t_max = 0;
  sweep->add_option("--qann", sw_qann, "calibrated model manifest")->required();
  sweep->add_option("--snn", sw_snn, "converted model manifest")->required();
  sweep->add_option("--inputs", sw_inputs, "number of random inputs");
  sweep->add_option("--seed", sw_seed, "input seed");
  sweep->add_option("--t-list", sw_t_list, "comma-separated truncation steps");
  sweep->add_option("--t-max", sw_t_max, "spiking step budget (0 = 16*levels)");
  sweep->callback([&] {
    const QannModel qann = as_qann(load_model(sw_qann));
    const SnnModel snn = as_snn(load_model(sw_snn));
    const std::vector<Tensor> inputs = make_inputs(qann.weights.config, sw_seed, sw_inputs);
    const std::vector<SweepRow> rows = sweep_timesteps(
        qann, snn, inputs, parse_t_list(sw_t_list), sw_t_max, env_thread_budget());
    std::printf("T,agreement,max_abs_err\n");
    for (const SweepRow& row : rows)
      std::printf("%ld,%.10g,%.17g\n", row.t_step, row.agreement, row.max_abs_err);
  });

  // --- spikes ------------------------------------------------------------
  auto* spikes = app.add_subcommand("spikes", "spike accounting for one spiking run");
  std::string sp_snn, sp_input;
  long sp_t_max = 0;
  double sp_alpha = 0.9e-12;
  spikes->add_option("--snn", sp_snn, "converted model manifest")->required();
  spikes->add_option("--input", sp_input, "input blob")->required();
  spikes->add_option("--t-max", sp_t_max, "spiking step budget (0 = 16*levels)");
  spikes->add_option("--alpha", sp_alpha, "energy per spike activity in joules");
  spikes->callback([&] {
    const LoadedModel model = load_model(sp_snn);
    const Tensor x = read_input_blob(sp_input, model.manifest.config);
    SnnOptions opts;
    opts.t_max = sp_t_max;
    opts.record_trace = true;
    const SnnResult res = forward_snn(as_snn(model), x, opts);
    json report = spike_report_json(res.trace, sp_alpha);
    report["t_eq"] = res.t_eq;
    report["converged"] = res.converged;
    std::cout << report.dump(2) << '\n';
  });

  // --- power -------------------------------------------------------------
  auto* power = app.add_subcommand("power", "power estimate from a run or a raw count");
  std::string pw_snn, pw_input;
  double pw_alpha = 0.9e-12, pw_total = -1.0;
  long pw_t_max = 0;
  power->add_option("--snn", pw_snn, "converted model manifest");
  power->add_option("--input", pw_input, "input blob");
  power->add_option("--alpha", pw_alpha, "energy per spike activity in joules");
  power->add_option("--total-spikes", pw_total, "skip the run, use this per-step count");
  power->add_option("--t-max", pw_t_max, "spiking step budget (0 = 16*levels)");
  power->callback([&] {
    PowerReport report;
    if (pw_total >= 0.0) {
      report = estimate_power(pw_total, pw_alpha);
    } else {
      if (pw_snn.empty() || pw_input.empty())
        throw config_error("power: need --snn and --input, or --total-spikes");
      const LoadedModel model = load_model(pw_snn);
      const Tensor x = read_input_blob(pw_input, model.manifest.config);
      SnnOptions opts;
      opts.t_max = pw_t_max;
      opts.record_trace = true;
      report = power_from_log(forward_snn(as_snn(model), x, opts).trace, pw_alpha);
    }
    const json out{{"alpha_joules", report.alpha_joules},
                   {"step_seconds", report.step_seconds},
                   {"total_spikes_per_step", report.total_spikes_per_step},
                   {"power_watts", report.power_watts}};
    std::cout << out.dump(2) << '\n';
  });

  // --- complexity --------------------------------------------------------
  auto* cx = app.add_subcommand("complexity", "asymptotic cost table for a config");
  std::string cx_model, cx_format = "csv";
  long cx_t = 1;
  double cx_gamma = 1.0;
  cx->add_option("--model", cx_model, "model manifest (supplies n and d)")->required();
  cx->add_option("--t", cx_t, "time-steps to instantiate the temporal cells with");
  cx->add_option("--gamma", cx_gamma, "ANN-vs-SNN per-op cost ratio (report knob)");
  cx->add_option("--format", cx_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  cx->callback([&] {
    const LoadedModel model = load_model(cx_model);
    const EncoderConfig& cfg = model.manifest.config;
    const auto rows = complexity_report(cfg.n, cfg.d, cx_t, cx_gamma);
    if (cx_format == "csv") {
      std::printf("op,network,spatial_expr,spatial,temporal_expr,temporal\n");
      for (const ComplexityRow& row : rows)
        std::printf("%s,%s,%s,%.17g,%s,%.17g\n", row.op.c_str(), row.network.c_str(),
                    row.spatial_expr.c_str(), row.spatial, row.temporal_expr.c_str(),
                    row.temporal);
    } else {
      json out = json::array();
      for (const ComplexityRow& row : rows)
        out.push_back(json{{"op", row.op},
                           {"network", row.network},
                           {"spatial_expr", row.spatial_expr},
                           {"spatial", row.spatial},
                           {"temporal_expr", row.temporal_expr},
                           {"temporal", row.temporal}});
      std::cout << out.dump(2) << '\n';
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const equivalence_failure& e) {
    std::cerr << "error: equivalence check failed: " << e.what() << '\n';
    return kExitEquivalence;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
