// Acceptance suite: one line per criterion, nonzero exit if any fails.
// argv[1] is the path to the CLI binary (used by the determinism criterion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "oracle_helpers.hpp"
#include "spikezip/manifest.hpp"
#include "spikezip/metrics.hpp"
#include "spikezip/spiking_ops.hpp"
#include "spikezip/transformer.hpp"

using namespace spikezip;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string name, double budget_seconds)
      : number_(number), name_(std::move(name)), budget_(budget_seconds),
        start_(std::chrono::steady_clock::now()) {}

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!what.empty()) notes_.push_back(what);
    }
  }

  void note(const std::string& what) { notes_.push_back(what); }

  void finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (secs > budget_) {
      pass_ = false;
      notes_.push_back("over time budget");
    }
    std::string detail;
    for (const std::string& n : notes_) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("[%s] criterion %d: %s (%.2fs/%.0fs)%s%s\n", pass_ ? "PASS" : "FAIL", number_,
                name_.c_str(), secs, budget_, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass_) ++g_failures;
  }

 private:
  int number_;
  std::string name_;
  double budget_;
  std::chrono::steady_clock::time_point start_;
  bool pass_ = true;
  std::vector<std::string> notes_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

EncoderConfig desk_config() {
  EncoderConfig cfg;
  cfg.n = 8;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.d_ff = 32;
  cfg.layers = 2;
  cfg.levels = 16;
  cfg.classes = 4;
  return cfg;
}

std::vector<Tensor> calib_set(const EncoderConfig& cfg, std::uint64_t seed, std::size_t count) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_input(cfg, seed, 1000 + i));
  return out;
}

// Spearman rank correlation with average ranks for ties.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

// --- criterion bodies -------------------------------------------------------

void criterion_1() {
  Criterion c(1, "neuron equilibrium output equals the closed form", 5.0);
  std::mt19937_64 rng(20240101);
  double worst = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const auto cs = testutil::random_neuron_case(rng);
    StBifLayer layer({cs.total.size()}, cs.params, cs.v0);
    const auto [acc, t_eq] = run_to_equilibrium(layer, cs.inputs, cs.t_max);
    worst = std::max(worst, max_abs_diff(acc, closed_form(cs.total, cs.params, cs.v0)));
    (void)t_eq;
  }
  c.expect(worst <= 1e-12, "max err " + fmt(worst));
  c.note("10000 cases, max err " + fmt(worst));
  c.finish();
}

void criterion_2() {
  Criterion c(2, "neuron accumulated output equals the quantizer", 5.0);
  std::mt19937_64 rng(20240102);
  std::uniform_real_distribution<double> ss(0.05, 2.0);
  std::uniform_int_distribution<long long> bs(1, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t exact = 0;
  const std::size_t cases = 10000;
  for (std::size_t rep = 0; rep < cases; ++rep) {
    QuantizerSpec q;
    q.is_signed = rep % 2 == 0;
    q.s = ss(rng);
    q.beta = bs(rng);
    q.alpha = q.is_signed ? -q.beta : 0;
    double x;
    for (;;) {
      x = (static_cast<double>(q.alpha) - 2.0 +
           unit(rng) * static_cast<double>(q.beta - q.alpha + 4)) *
          q.s;
      const double frac = x / q.s - std::floor(x / q.s);
      if (std::fabs(frac - 0.5) > 1e-6) break;
    }
    StBifLayer layer({1}, to_neuron_params(q), q.s / 2.0);
    const auto [acc, t_eq] = run_to_equilibrium(layer, {Tensor({1}, {x})}, 400);
    if (acc.at(0) == quantize(x, q)) ++exact;
    (void)t_eq;
  }
  c.expect(exact == cases, std::to_string(cases - exact) + " mismatches");

  // pinned convention on the half grid: equality for positive halves,
  // a one-level gap (round-away vs round-half-up) for negative halves
  const QuantizerSpec q{0.25, -4, 4, true};
  const NeuronParams p = to_neuron_params(q);
  for (long long k = q.alpha; k < q.beta; ++k) {
    const double x = q.s * (static_cast<double>(k) + 0.5);
    StBifLayer layer({1}, p, q.s / 2.0);
    const double neuron = run_to_equilibrium(layer, {Tensor({1}, {x})}, 400).first.at(0);
    const double quant = quantize(x, q);
    if (x > 0.0)
      c.expect(neuron == quant && quant == q.s * static_cast<double>(k + 1),
               "positive half grid at k=" + std::to_string(k));
    else
      c.expect(quant == q.s * static_cast<double>(k) &&
                   neuron == q.s * static_cast<double>(k + 1),
               "negative half grid at k=" + std::to_string(k));
  }
  c.note("10000 exact matches off the half grid; boundary convention pinned");
  c.finish();
}

void criterion_3() {
  Criterion c(3, "streaming attention product equals the dense product", 10.0);
  std::mt19937_64 rng(20240103);
  std::uniform_int_distribution<int> dim_pick(0, 3);
  std::uniform_int_distribution<int> t_pick(1, 16);
  std::uniform_int_distribution<int> tern(-1, 1);
  std::uniform_real_distribution<double> thr(0.05, 2.0);
  const std::size_t dims[] = {1, 2, 4, 8};
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = dims[dim_pick(rng)];
    const std::size_t d = dims[dim_pick(rng)];
    const int steps = t_pick(rng);
    const double vq = thr(rng), vk = thr(rng);
    AaState state(n, n, d);
    Tensor q_total({n, d}), k_total({n, d}), acc({n, n});
    for (int t = 0; t < steps; ++t) {
      Tensor q_t({n, d}), k_t({n, d});
      for (std::size_t i = 0; i < q_t.size(); ++i) {
        q_t.data()[i] = vq * static_cast<double>(tern(rng));
        k_t.data()[i] = vk * static_cast<double>(tern(rng));
      }
      q_total = add(q_total, q_t);
      k_total = add(k_total, k_t);
      acc = add(acc, state.step(q_t, k_t));
    }
    worst = std::max(worst, max_abs_diff(acc, matmul(q_total, transpose(k_total))));
  }
  c.expect(worst <= 1e-10, "max err " + fmt(worst));
  c.note("1000 cases, max err " + fmt(worst));
  c.finish();
}

void criterion_4() {
  Criterion c(4, "differential softmax/layernorm telescope to the dense op", 10.0);
  std::mt19937_64 rng(20240104);
  std::uniform_real_distribution<double> xd(-3.0, 3.0);
  std::uniform_int_distribution<int> t_pick(1, 8);
  const Tensor gamma({6}, {1.0, 1.1, 0.9, 1.05, 0.95, 1.0});
  const Tensor beta({6}, {0.0, 0.1, -0.1, 0.2, -0.2, 0.05});
  double worst_sm = 0.0, worst_ln = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int steps = t_pick(rng);
    DiffOp sm = DiffOp::make_softmax({4, 6});
    DiffOp ln = DiffOp::make_layernorm({4, 6}, gamma, beta, kLayerNormEps);
    Tensor total({4, 6}), sm_acc({4, 6}), ln_acc({4, 6});
    for (int t = 0; t < steps; ++t) {
      Tensor x({4, 6});
      for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = xd(rng);
      total = add(total, x);
      sm_acc = add(sm_acc, sm.step(x));
      ln_acc = add(ln_acc, ln.step(x));
    }
    worst_sm = std::max(worst_sm, max_abs_diff(sm_acc, softmax(total)));
    worst_ln = std::max(
        worst_ln, max_abs_diff(ln_acc, layernorm(total, gamma, beta, kLayerNormEps)));
  }
  c.expect(worst_sm <= 1e-12, "softmax max err " + fmt(worst_sm));
  c.expect(worst_ln <= 1e-12, "layernorm max err " + fmt(worst_ln));
  c.note("1000 cases each, max err " + fmt(std::max(worst_sm, worst_ln)));
  c.finish();
}

// criterion 5's runs carry traces so criterion 8 can audit the same runs
struct EndToEndStats {
  double worst_err = 0.0;
  std::size_t argmax_misses = 0;
  bool accounting_ok = true;
  long t_eq_max = 0;
};

EndToEndStats criterion_5() {
  Criterion c(5, "spiking logits equal quantized logits at equilibrium", 120.0);
  EndToEndStats stats;
  const EncoderConfig cfg = desk_config();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const ModelWeights m = generate_weights(cfg, seed);
    const QannModel qann = quantize_model(m, calib_set(cfg, seed, 4));
    const SnnModel snn = convert(qann);
    for (std::uint64_t i = 0; i < 10; ++i) {
      const Tensor x = generate_input(cfg, seed, i);
      const Tensor expected = forward_qann(qann, x);
      SnnOptions opts;
      opts.record_trace = true;
      const SnnResult got = forward_snn(snn, x, opts);
      stats.worst_err = std::max(stats.worst_err, max_abs_diff(got.logits, expected));
      if (argmax(got.logits) != argmax(expected)) ++stats.argmax_misses;
      stats.t_eq_max = std::max(stats.t_eq_max, got.t_eq);
      if (count_post(got.trace) != count_post_by_events(got.trace) ||
          count_pre(got.trace) != count_pre_by_events(got.trace))
        stats.accounting_ok = false;
    }
  }
  c.expect(stats.worst_err <= 1e-6, "max abs err " + fmt(stats.worst_err));
  c.expect(stats.argmax_misses == 0,
           std::to_string(stats.argmax_misses) + " argmax disagreements");
  c.note("50 models x 10 inputs, max err " + fmt(stats.worst_err) + ", t_eq max " +
         std::to_string(stats.t_eq_max));
  c.finish();
  return stats;
}

void criterion_6() {
  Criterion c(6, "argmax agreement trends upward and closes at the horizon", 300.0);
  const EncoderConfig cfg = desk_config();
  const std::uint64_t seed = 606;
  const ModelWeights m = generate_weights(cfg, seed);
  const QannModel qann = quantize_model(m, calib_set(cfg, seed, 4));
  const SnnModel snn = convert(qann);

  std::vector<Tensor> inputs;
  long t_eq_max = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    inputs.push_back(generate_input(cfg, seed, i));
    t_eq_max = std::max(t_eq_max, forward_snn(snn, inputs.back()).t_eq);
  }

  // geometric ladder through [1, t_eq_max], closed with the horizon itself
  std::vector<long> t_list;
  for (long t = 1; t < t_eq_max; t *= 2) t_list.push_back(t);
  t_list.push_back(t_eq_max);
  t_list.push_back(t_eq_max + 8);

  const std::vector<SweepRow> rows = sweep_timesteps(qann, snn, inputs, t_list);
  std::vector<double> ts, agreements;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {  // trend over [1, t_eq]
    ts.push_back(static_cast<double>(rows[i].t_step));
    agreements.push_back(rows[i].agreement);
  }
  const double rho = spearman_rho(ts, agreements);
  const SweepRow& at_horizon = rows[rows.size() - 2];
  const SweepRow& beyond = rows.back();

  c.expect(rho > 0.8, "spearman rho " + fmt(rho));
  c.expect(at_horizon.agreement == 1.0, "agreement at t_eq " + fmt(at_horizon.agreement));
  c.expect(beyond.agreement == 1.0, "agreement beyond t_eq " + fmt(beyond.agreement));
  c.expect(at_horizon.max_abs_err <= 1e-6, "err at t_eq " + fmt(at_horizon.max_abs_err));
  std::string curve;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    curve += (curve.empty() ? "" : " ") + std::to_string(rows[i].t_step) + ":" +
             fmt(rows[i].agreement);
  c.note("200 inputs, rho " + fmt(rho) + ", curve " + curve);
  c.finish();
}

void criterion_7() {
  Criterion c(7, "fine-grid quantization converges to the float model", 60.0);
  const EncoderConfig base = desk_config();
  const ModelWeights m = generate_weights(base, 707);
  std::vector<Tensor> inputs;
  for (std::uint64_t i = 0; i < 100; ++i) inputs.push_back(generate_input(base, 707, i));
  // quantizers calibrated over the same inputs the bound is measured on
  const QannModel fine = quantize_model(m, inputs, 1u << 16);
  double worst = 0.0;
  for (const Tensor& x : inputs)
    worst = std::max(worst, max_abs_diff(forward_qann(fine, x), forward_ann(m, x)));
  c.expect(worst <= 1e-3, "max err " + fmt(worst));
  c.note("levels 2^16, 100 inputs, max err " + fmt(worst));
  c.finish();
}

void criterion_8(const EndToEndStats& stats) {
  Criterion c(8, "spike accounting formulas match event enumeration, power arithmetic exact",
              60.0);
  c.expect(stats.accounting_ok, "formula/event mismatch on an end-to-end run");
  const PowerReport report = estimate_power(1e6, 0.9e-12);
  c.expect(report.power_watts == 9.0e-4, "power " + fmt(report.power_watts));
  c.note("audited all 500 end-to-end runs; 1e6 spikes/step at 0.9 pJ -> 9e-4 W");
  c.finish();
}

// --- criterion 9: CLI determinism -------------------------------------------

struct Shell {
  fs::path dir;
  std::string cli;

  explicit Shell(std::string cli_path) : cli(std::move(cli_path)) {
    dir = fs::current_path() / "acceptance_tmp";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  int run(const std::string& args, const std::string& out, const std::string& env = "") const {
    const std::string cmd = env + (env.empty() ? "" : " ") + cli + " " + args + " > " +
                            path(out) + " 2> " + path("stderr.log");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  }
};

void criterion_9(const std::string& cli) {
  Criterion c(9, "CLI outputs are byte-identical across reruns and thread counts", 120.0);
  Shell sh(cli);
  std::ofstream(sh.path("cfg.json"))
      << R"({"n":8,"d":16,"heads":2,"d_ff":32,"layers":2,"levels":16,"classes":4})";

  auto twice = [&c, &sh](const std::string& what, const std::string& args) {
    c.expect(sh.run(args, what + ".1") == 0, what + " failed");
    c.expect(sh.run(args, what + ".2") == 0, what + " rerun failed");
    c.expect(sh.slurp(what + ".1") == sh.slurp(what + ".2"), what + " not byte-identical");
  };

  // generation, including the on-disk artifacts
  c.expect(sh.run("gen-model " + sh.path("a/m.manifest") + " --seed 42 --config " +
                      sh.path("cfg.json"),
                  "gen1.out") == 0,
           "gen-model failed");
  c.expect(sh.run("gen-model " + sh.path("b/m.manifest") + " --seed 42 --config " +
                      sh.path("cfg.json"),
                  "gen2.out") == 0,
           "gen-model rerun failed");
  c.expect(sh.slurp("a/m.manifest") == sh.slurp("b/m.manifest"), "manifest differs");
  c.expect(sh.slurp("a/m.blob") == sh.slurp("b/m.blob"), "blob differs");

  twice("gen-input", "gen-input " + sh.path("x.blob") + " --model " + sh.path("a/m.manifest") +
                         " --seed 7");

  c.expect(sh.run("calibrate --model " + sh.path("a/m.manifest") +
                      " --gen-count 4 --gen-seed 9 --out " + sh.path("a/q.manifest"),
                  "cal1.out") == 0,
           "calibrate failed");
  c.expect(sh.run("calibrate --model " + sh.path("b/m.manifest") +
                      " --gen-count 4 --gen-seed 9 --out " + sh.path("b/q.manifest"),
                  "cal2.out") == 0,
           "calibrate rerun failed");
  c.expect(sh.slurp("a/q.manifest") == sh.slurp("b/q.manifest"), "calibrate differs");

  c.expect(sh.run("convert " + sh.path("a/s.manifest") + " --qann " + sh.path("a/q.manifest"),
                  "conv1.out") == 0,
           "convert failed");
  c.expect(sh.run("convert " + sh.path("b/s.manifest") + " --qann " + sh.path("b/q.manifest"),
                  "conv2.out") == 0,
           "convert rerun failed");
  c.expect(sh.slurp("a/s.manifest") == sh.slurp("b/s.manifest"), "convert differs");

  for (const std::string mode : {"ann", "qann", "snn"}) {
    const std::string model = mode == "ann"    ? "a/m.manifest"
                              : mode == "qann" ? "a/q.manifest"
                                               : "a/s.manifest";
    twice("run-" + mode, "run --model " + sh.path(model) + " --input " + sh.path("x.blob") +
                             " --mode " + mode);
  }

  const std::string chk_args = "check-equiv --qann " + sh.path("a/q.manifest") + " --snn " +
                               sh.path("a/s.manifest") + " --inputs 16 --seed 3 --tol 1e-6";
  twice("check", chk_args);
  c.expect(sh.run(chk_args, "check.mt", "SPIKEZIP_THREADS=4") == 0, "threaded check failed");
  c.expect(sh.slurp("check.1") == sh.slurp("check.mt"), "check differs under threads");

  const std::string sweep_args = "sweep --qann " + sh.path("a/q.manifest") + " --snn " +
                                 sh.path("a/s.manifest") +
                                 " --inputs 16 --seed 3 --t-list 1,2,4,8,16,32,64";
  twice("sweep", sweep_args);
  c.expect(sh.run(sweep_args, "sweep.mt", "SPIKEZIP_THREADS=4") == 0, "threaded sweep failed");
  c.expect(sh.slurp("sweep.1") == sh.slurp("sweep.mt"), "sweep differs under threads");

  twice("spikes", "spikes --snn " + sh.path("a/s.manifest") + " --input " + sh.path("x.blob"));
  twice("power", "power --snn " + sh.path("a/s.manifest") + " --input " + sh.path("x.blob") +
                     " --alpha 0.9e-12");
  twice("complexity", "complexity --model " + sh.path("a/m.manifest") + " --t 32 --gamma 2.0");

  c.note("gen/calibrate/convert/run/check-equiv/sweep/spikes/power/complexity, reruns and "
         "SPIKEZIP_THREADS=4");
  c.finish();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-cli>\n");
    return 2;
  }
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  const EndToEndStats stats = criterion_5();
  criterion_6();
  criterion_7();
  criterion_8(stats);
  criterion_9(argv[1]);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
