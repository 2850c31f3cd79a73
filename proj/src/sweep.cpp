#include "risisac/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "risisac/channel_model.hpp"

namespace risisac {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw std::invalid_argument("sweep config: " + msg); }

// Most square h x v factorization of n, h >= v.
UpaShape near_square(int n) {
  int v = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (v > 1 && n % v != 0) --v;
  return {n / v, v};
}

}  // namespace

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "snr_db") return SweepAxis::snr_db;
  if (s == "M") return SweepAxis::M;
  if (s == "L_Q") return SweepAxis::L_Q;
  if (s == "L") return SweepAxis::L;
  config_error("unknown sweep axis '" + s + "' (expected snr_db|M|L_Q|L)");
}

Method parse_method(const std::string& s) {
  if (s == "ls") return Method::ls;
  if (s == "proposed") return Method::proposed;
  config_error("unknown method '" + s + "' (expected proposed|ls)");
}

ChannelKind parse_channel_kind(const std::string& s) {
  if (s == "sparse") return ChannelKind::sparse;
  if (s == "geometric") return ChannelKind::geometric;
  config_error("unknown channel kind '" + s + "' (expected sparse|geometric)");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::snr_db: return "snr_db";
    case SweepAxis::M: return "M";
    case SweepAxis::L_Q: return "L_Q";
    case SweepAxis::L: return "L";
  }
  return "?";
}

std::string to_string(Method m) { return m == Method::ls ? "ls" : "proposed"; }
std::string to_string(ChannelKind k) { return k == ChannelKind::sparse ? "sparse" : "geometric"; }

int Scenario::blocks() const {
  if (B > 0) return B;
  const int rows = groups() + 1;
  return std::max(M, (2 * (k_s + k_c) + rows - 1) / rows);
}

// ---- configuration ----------------------------------------------------------

namespace {

bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

void validate_scenario(const Scenario& s, const std::string& where) {
  const auto fail = [&](const std::string& m) { config_error(where + ": " + m); };
  if (s.L < 1) fail("L must be >= 1");
  if (s.M < 1) fail("M must be >= 1");
  if (s.Q < 1 || s.L % s.Q != 0) fail("Q=" + std::to_string(s.Q) + " must divide L=" + std::to_string(s.L));
  if (s.B < 0) fail("B must be >= 0");
  const long n = static_cast<long>(s.L + 1) * s.M;
  if (s.k_s < 0 || s.k_c < 0 || s.k_s > n || s.k_c > n) fail("sparsity exceeds the channel dimension");
  if (s.channel == ChannelKind::sparse && s.k_s + s.k_c == 0) fail("at least one nonzero channel entry needed");
  if (s.clusters < 1) fail("clusters must be >= 1");
}

}  // namespace

void SweepConfig::validate() const {
  if (values.empty()) config_error("axis values must be nonempty");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) config_error("axis values must be strictly increasing");
  if (trials < 1) config_error("trials must be >= 1");
  if (methods.empty()) config_error("at least one method is required");
  if (threads < 0) config_error("threads must be >= 0");
  for (double v : values) {
    if (!std::isfinite(v)) config_error("axis values must be finite");
    if (axis != SweepAxis::snr_db && (!is_integer(v) || v < 1))
      config_error("axis " + to_string(axis) + " needs positive integer values");
    if (axis == SweepAxis::L_Q && static_cast<long>(fixed.L) % static_cast<long>(v) != 0) {
      std::ostringstream msg;
      msg << "L_Q=" << v << " does not divide L=" << fixed.L;
      config_error(msg.str());
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) validate_scenario(scenario_at(i), to_string(axis) + " value");
  estimator.validate();
}

Scenario SweepConfig::scenario_at(std::size_t index) const {
  Scenario s = fixed;
  const double v = values.at(index);
  switch (axis) {
    case SweepAxis::snr_db: s.snr_db = v; break;
    case SweepAxis::M: s.M = static_cast<int>(v); break;
    case SweepAxis::L_Q: s.Q = s.L / static_cast<int>(v); break;
    case SweepAxis::L: s.L = static_cast<int>(v); break;
  }
  return s;
}

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error("section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      config_error("unknown key '" + key + "' in section '" + section + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    out.reset();
  else
    out = j.at(key).get<T>();
}

}  // namespace

void apply_config_json(SweepConfig& c, const json& j) {
  try {
    check_keys(j, "<root>", {"sweep", "scenario", "run", "estimator"});
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      check_keys(s, "sweep", {"axis", "values"});
      if (s.contains("axis")) c.axis = parse_sweep_axis(s.at("axis").get<std::string>());
      read(s, "values", c.values);
    }
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      check_keys(s, "scenario", {"L", "M", "Q", "B", "k_s", "k_c", "snr_db", "mode", "channel", "clusters"});
      read(s, "L", c.fixed.L);
      read(s, "M", c.fixed.M);
      read(s, "Q", c.fixed.Q);
      read(s, "B", c.fixed.B);
      read(s, "k_s", c.fixed.k_s);
      read(s, "k_c", c.fixed.k_c);
      read(s, "snr_db", c.fixed.snr_db);
      read(s, "clusters", c.fixed.clusters);
      if (s.contains("mode")) c.fixed.mode = parse_grouping_mode(s.at("mode").get<std::string>());
      if (s.contains("channel")) c.fixed.channel = parse_channel_kind(s.at("channel").get<std::string>());
    }
    if (j.contains("run")) {
      const json& s = j.at("run");
      check_keys(s, "run", {"trials", "seed", "methods", "threads", "output", "trace_dir"});
      read(s, "trials", c.trials);
      read(s, "seed", c.seed);
      read(s, "threads", c.threads);
      read(s, "output", c.output_path);
      read(s, "trace_dir", c.trace_dir);
      if (s.contains("methods")) {
        c.methods.clear();
        for (const auto& m : s.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
      }
    }
    if (j.contains("estimator")) {
      const json& s = j.at("estimator");
      check_keys(s, "estimator", {"lambda", "eta", "zeta", "epsilon", "mu", "inner_iters", "outer_iters",
                                  "tol_outer", "tol_inner", "gamma_init", "penalty"});
      EstimatorConfig& e = c.estimator;
      read_opt(s, "lambda", e.lambda);
      read(s, "eta", e.eta);
      read(s, "zeta", e.zeta);
      read(s, "epsilon", e.epsilon);
      read_opt(s, "mu", e.mu);
      read(s, "inner_iters", e.inner_iters);
      read(s, "outer_iters", e.outer_iters);
      read(s, "tol_outer", e.tol_outer);
      read(s, "tol_inner", e.tol_inner);
      read_opt(s, "gamma_init", e.gamma_init);
      if (s.contains("penalty")) e.penalty = parse_penalty_kind(s.at("penalty").get<std::string>());
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  }
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  SweepConfig c;
  try {
    apply_config_json(c, json::parse(in, nullptr, true, true));
  } catch (const json::parse_error& e) {
    config_error("'" + path + "' is not valid JSON: " + e.what());
  }
  return c;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t axis_index, std::size_t trial) {
  return seed ^ mix_seed((static_cast<std::uint64_t>(axis_index) << 32) | static_cast<std::uint64_t>(trial));
}

// ---- trials -----------------------------------------------------------------

TrialOutcome run_trial(const Scenario& s, Method method, const EstimatorConfig& estimator, std::uint64_t seed) {
  TrialOutcome out;
  out.method = method;
  try {
    const ChannelPair ch =
        s.channel == ChannelKind::sparse
            ? gen_sparse_isac_channels(s.L, s.M, s.k_s, s.k_c, mix_seed(seed ^ 0x1))
            : gen_geometric_isac_channels(s.L, s.M, near_square(s.M), near_square(s.L), s.clusters,
                                          mix_seed(seed ^ 0x1));
    const GroupingMap grouping = build_grouping_matrix(s.L, s.Q, s.mode);
    Rng pilot_rng(mix_seed(seed ^ 0x2));
    const CMat sensing = qpsk_pilots(s.blocks(), s.M, pilot_rng);
    const CMat comm = qpsk_pilots(s.blocks(), s.M, pilot_rng);
    const MeasurementSet ms = synth_observation(ch, grouping, sensing, comm, s.snr_db, mix_seed(seed ^ 0x3));

    OpCounter counter;
    out.estimate = method == Method::ls ? ls_estimate(ms, &counter) : estimate(ms, estimator, &counter);
    out.counts = count_report(counter);
    out.warning = out.estimate.warning;
    out.nmse_s = observable_nmse(out.estimate.g_s_hat, ch.g_s, grouping, s.M);
    out.nmse_c = observable_nmse(out.estimate.g_c_hat, ch.g_c, grouping, s.M);
    if (!std::isfinite(out.nmse_s) || !std::isfinite(out.nmse_c)) throw NumericalError("non-finite NMSE");
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

int SweepTable::failures() const {
  int n = 0;
  for (const auto& r : rows) n += r.failures;
  return n;
}

namespace {

struct Moments {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  if (x.empty()) {
    m.mean = m.stderr_ = std::nan("");
    return m;
  }
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.stderr_ = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  }
  return m;
}

}  // namespace

SweepTable run_sweep(const SweepConfig& config) {
  config.validate();
  if (!config.trace_dir.empty()) std::filesystem::create_directories(config.trace_dir);

  const std::size_t n_axis = config.values.size();
  const std::size_t n_trials = static_cast<std::size_t>(config.trials);
  const std::size_t n_jobs = n_axis * n_trials;
  std::vector<std::vector<TrialOutcome>> slots(n_jobs);

  const auto run_job = [&](std::size_t job) {
    const std::size_t a = job / n_trials;
    const std::size_t t = job % n_trials;
    const Scenario s = config.scenario_at(a);
    const std::uint64_t seed = trial_seed(config.seed, a, t);
    auto& out = slots[job];
    for (Method m : config.methods) {
      EstimatorConfig est = config.estimator;
      std::ofstream trace;
      if (m == Method::proposed && !config.trace_dir.empty()) {
        const auto file = std::filesystem::path(config.trace_dir) /
                          ("trace_a" + std::to_string(a) + "_t" + std::to_string(t) + ".jsonl");
        trace.open(file);
        if (trace) est.trace = jsonl_trace_sink(trace);
      }
      out.push_back(run_trial(s, m, est, seed));
      out.back().estimate = EstimateResult{};  // keep memory flat on long sweeps
    }
  };

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_jobs)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) run_job(job);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
  }

  SweepTable table;
  for (std::size_t a = 0; a < n_axis; ++a) {
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      SweepRow row;
      row.axis = to_string(config.axis);
      row.axis_value = config.values[a];
      row.method = to_string(config.methods[mi]);
      std::vector<double> s, c, mul;
      for (std::size_t t = 0; t < n_trials; ++t) {
        const TrialOutcome& o = slots[a * n_trials + t][mi];
        if (o.failed) {
          ++row.failures;
          continue;
        }
        s.push_back(o.nmse_s);
        c.push_back(o.nmse_c);
        mul.push_back(static_cast<double>(o.counts.mul));
      }
      row.trials = static_cast<int>(n_trials);
      const Moments ms = moments(s), mc = moments(c), mm = moments(mul);
      row.nmse_s_mean = ms.mean;
      row.nmse_s_stderr = ms.stderr_;
      row.nmse_c_mean = mc.mean;
      row.nmse_c_stderr = mc.stderr_;
      row.mul_count_mean = mm.mean;
      table.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const SweepRow& x, const SweepRow& y) {
    if (x.axis_value != y.axis_value) return x.axis_value < y.axis_value;
    return x.method < y.method;
  });
  return table;
}

// ---- output -----------------------------------------------------------------

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace

std::string format_csv(const SweepTable& table) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.axis << ',' << fmt(r.axis_value) << ',' << r.method << ',' << fmt(r.nmse_s_mean) << ','
        << fmt(r.nmse_s_stderr) << ',' << fmt(r.nmse_c_mean) << ',' << fmt(r.nmse_c_stderr) << ',' << r.trials
        << ',' << r.failures << ',' << fmt(r.mul_count_mean) << '\n';
  }
  return out.str();
}

void emit_csv(const SweepTable& table, const std::string& path) {
  if (table.rows.empty()) throw std::invalid_argument("refusing to write an empty result table");
  const std::string text = format_csv(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace risisac
