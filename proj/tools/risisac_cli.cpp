// Monte Carlo front end: `sweep` runs a seeded NMSE sweep into a CSV table,
// `run` runs one trial and prints a JSON summary.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "risisac/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTrialFailed = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> axis;
  std::vector<double> values;
  std::optional<int> L, M, Q, B, k_s, k_c, trials, threads, outer, inner;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr, lambda, eta, zeta;
  std::vector<std::string> methods;
  std::optional<std::string> out, trace_dir, mode, channel, penalty;
};

void add_scenario_flags(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--L", o.L, "RIS elements");
  app->add_option("--M", o.M, "BS antennas");
  app->add_option("--Q", o.Q, "group size");
  app->add_option("--blocks", o.B, "pilot blocks (0 = auto)");
  app->add_option("--k-s", o.k_s, "sensing channel sparsity");
  app->add_option("--k-c", o.k_c, "communication channel sparsity");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--mode", o.mode, "grouping|puncturing");
  app->add_option("--channel", o.channel, "sparse|geometric");
  app->add_option("--penalty", o.penalty, "gmc|mcp");
  app->add_option("--lambda", o.lambda, "l1 weight (default: noise-scaled)");
  app->add_option("--eta", o.eta, "l1 weight multiplier");
  app->add_option("--zeta", o.zeta, "envelope weight in (0,1]");
  app->add_option("--outer-iters", o.outer, "outer iteration cap");
  app->add_option("--inner-iters", o.inner, "inner iteration cap");
}

void apply(risisac::SweepConfig& c, const Overrides& o) {
  using namespace risisac;
  if (!o.config_path.empty()) c = load_sweep_config(o.config_path);
  if (o.axis) c.axis = parse_sweep_axis(*o.axis);
  if (!o.values.empty()) c.values = o.values;
  if (o.L) c.fixed.L = *o.L;
  if (o.M) c.fixed.M = *o.M;
  if (o.Q) c.fixed.Q = *o.Q;
  if (o.B) c.fixed.B = *o.B;
  if (o.k_s) c.fixed.k_s = *o.k_s;
  if (o.k_c) c.fixed.k_c = *o.k_c;
  if (o.snr) c.fixed.snr_db = *o.snr;
  if (o.mode) c.fixed.mode = parse_grouping_mode(*o.mode);
  if (o.channel) c.fixed.channel = parse_channel_kind(*o.channel);
  if (o.trials) c.trials = *o.trials;
  if (o.threads) c.threads = *o.threads;
  if (o.seed) c.seed = *o.seed;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(parse_method(m));
  }
  if (o.out) c.output_path = *o.out;
  if (o.trace_dir) c.trace_dir = *o.trace_dir;
  if (o.penalty) c.estimator.penalty = parse_penalty_kind(*o.penalty);
  if (o.lambda) c.estimator.lambda = *o.lambda;
  if (o.eta) c.estimator.eta = *o.eta;
  if (o.zeta) c.estimator.zeta = *o.zeta;
  if (o.outer) c.estimator.outer_iters = *o.outer;
  if (o.inner) c.estimator.inner_iters = *o.inner;
}

int run_sweep_cmd(const Overrides& o) {
  risisac::SweepConfig config;
  try {
    apply(config, o);
    config.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const risisac::SweepTable table = risisac::run_sweep(config);
  risisac::emit_csv(table, config.output_path);
  const int failed = table.failures();
  std::cerr << "wrote " << table.rows.size() << " rows to " << config.output_path;
  if (failed > 0) std::cerr << " (" << failed << " failed trials)";
  std::cerr << '\n';
  return failed > 0 ? kExitTrialFailed : kExitOk;
}

int run_single_cmd(const Overrides& o, const std::string& method_name, const std::string& trace_path,
                   const std::string& dump_path) {
  using namespace risisac;
  SweepConfig config;
  Method method{};
  try {
    apply(config, o);
    config.values = {config.fixed.snr_db};
    config.axis = SweepAxis::snr_db;
    config.validate();
    method = parse_method(method_name);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::ofstream trace;
  EstimatorConfig est = config.estimator;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) {
      std::cerr << "cannot open trace file '" << trace_path << "'\n";
      return kExitConfig;
    }
    est.trace = jsonl_trace_sink(trace);
  }

  const Scenario s = config.fixed;
  const TrialOutcome t = run_trial(s, method, est, trial_seed(config.seed, 0, 0));
  if (t.failed) {
    std::cerr << "trial failed: " << t.error << '\n';
    return kExitTrialFailed;
  }
  nlohmann::json summary = summary_json(to_string(method), {s.L, s.M, s.Q, s.blocks()}, t.counts, t.nmse_s, t.nmse_c);
  summary["iterations"] = t.estimate.iterations_used;
  summary["converged"] = t.estimate.converged;
  summary["gamma_e"] = t.estimate.gamma_e_hat;
  if (t.warning) summary["warning"] = *t.warning;
  std::cout << summary.dump(2) << '\n';

  if (!dump_path.empty()) {
    std::ofstream dump(dump_path);
    const auto as_pairs = [](const CVec& v) {
      nlohmann::json a = nlohmann::json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
      return a;
    };
    dump << nlohmann::json{{"g_s_hat", as_pairs(t.estimate.g_s_hat)}, {"g_c_hat", as_pairs(t.estimate.g_c_hat)}}.dump()
         << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted ISAC channel estimation simulator"};
  app.require_subcommand(1);

  Overrides sweep_opts;
  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo NMSE sweep to CSV");
  add_scenario_flags(sweep, sweep_opts);
  sweep->add_option("--sweep", sweep_opts.axis, "axis: snr_db|M|L_Q|L");
  sweep->add_option("--values", sweep_opts.values, "axis values, comma separated")->delimiter(',');
  sweep->add_option("--snr", sweep_opts.snr, "fixed SNR in dB when not swept");
  sweep->add_option("--trials", sweep_opts.trials, "trials per axis value");
  sweep->add_option("--threads", sweep_opts.threads, "worker threads (0 = all cores)");
  sweep->add_option("--methods", sweep_opts.methods, "proposed,ls")->delimiter(',');
  sweep->add_option("--out", sweep_opts.out, "CSV output path");
  sweep->add_option("--trace-dir", sweep_opts.trace_dir, "per-trial JSONL traces");

  Overrides run_opts;
  std::string method = "proposed";
  std::string trace_path;
  std::string dump_path;
  CLI::App* run = app.add_subcommand("run", "single trial, JSON summary on stdout");
  add_scenario_flags(run, run_opts);
  run->add_option("--snr", run_opts.snr, "SNR in dB");
  run->add_option("--method", method, "proposed|ls");
  run->add_option("--trace", trace_path, "JSONL trace output");
  run->add_option("--dump", dump_path, "write estimated channels as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sweep->parsed()) return run_sweep_cmd(sweep_opts);
    return run_single_cmd(run_opts, method, trace_path, dump_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
