#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "risisac/baselines.hpp"
#include "risisac/estimator.hpp"
#include "risisac/grouping.hpp"

namespace risisac {

enum class SweepAxis { snr_db, M, L_Q, L };
enum class Method { ls, proposed };
enum class ChannelKind { sparse, geometric };

SweepAxis parse_sweep_axis(const std::string& s);
Method parse_method(const std::string& s);
ChannelKind parse_channel_kind(const std::string& s);
std::string to_string(SweepAxis a);
std::string to_string(Method m);
std::string to_string(ChannelKind k);

/// Scenario knobs held fixed along the sweep axis.
struct Scenario {
  int L = 64;
  int M = 8;
  int Q = 4;
  int B = 0;  // 0 picks max(M, ceil(2 (k_s + k_c) / (L_Q + 1)))
  int k_s = 8;
  int k_c = 8;
  double snr_db = 10.0;
  GroupingMode mode = GroupingMode::grouping;
  ChannelKind channel = ChannelKind::sparse;
  int clusters = 3;  // geometric channels only

  int groups() const { return L / Q; }
  int blocks() const;
};

struct SweepConfig {
  SweepAxis axis = SweepAxis::snr_db;
  std::vector<double> values{0.0, 5.0, 10.0, 15.0, 20.0};
  Scenario fixed;
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::ls, Method::proposed};
  EstimatorConfig estimator;
  std::string output_path = "sweep.csv";
  std::string trace_dir;  // empty disables per-trial traces
  int threads = 0;        // 0 uses the hardware concurrency

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Scenario at axis_values[index].
  Scenario scenario_at(std::size_t index) const;
};

/// Overlays the sections present in `j` onto `config`; unknown keys are rejected.
void apply_config_json(SweepConfig& config, const nlohmann::json& j);
SweepConfig load_sweep_config(const std::string& path);

/// seed xor mix(axis_index << 32 | trial).
std::uint64_t trial_seed(std::uint64_t seed, std::size_t axis_index, std::size_t trial);

struct TrialOutcome {
  Method method = Method::ls;
  double nmse_s = 0.0;
  double nmse_c = 0.0;
  CountReport counts;
  bool failed = false;
  std::string error;
  std::optional<std::string> warning;
  EstimateResult estimate;
};

/// Synthesizes one trial of `scenario` and runs `method` on it. Estimator
/// exceptions are caught and reported through `failed`.
TrialOutcome run_trial(const Scenario& scenario, Method method, const EstimatorConfig& estimator,
                       std::uint64_t seed);

struct SweepRow {
  std::string axis;
  double axis_value = 0.0;
  std::string method;
  double nmse_s_mean = 0.0;
  double nmse_s_stderr = 0.0;
  double nmse_c_mean = 0.0;
  double nmse_c_stderr = 0.0;
  int trials = 0;
  int failures = 0;
  double mul_count_mean = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  int failures() const;
};

/// Runs every (axis value, trial) pair on a worker pool and aggregates per
/// (axis value, method). Output does not depend on the worker count.
SweepTable run_sweep(const SweepConfig& config);

inline constexpr const char* kCsvHeader =
    "axis,axis_value,method,nmse_s_mean,nmse_s_stderr,nmse_c_mean,nmse_c_stderr,trials,failures,mul_count_mean";

std::string format_csv(const SweepTable& table);
/// Throws on an empty table (no file is created) or an unwritable path.
void emit_csv(const SweepTable& table, const std::string& path);

}  // namespace risisac
