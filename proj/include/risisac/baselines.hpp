#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "risisac/channel_model.hpp"
#include "risisac/estimator.hpp"
#include "risisac/op_counter.hpp"

namespace risisac {

/// Condition number of [S C] above which ls_estimate attaches a warning.
inline constexpr double kLsConditionWarning = 1e10;

/// Joint least squares on the stacked system [S C]: minimum-norm solution of
/// min ||r - [S C] x||, via the pseudo-inverse of the smaller Gram matrix.
/// Counts one inversion of that dimension.
EstimateResult ls_estimate(const CVec& r, const CMat& S, const CMat& C, OpCounter* counter = nullptr);
EstimateResult ls_estimate(const MeasurementSet& measurements, OpCounter* counter = nullptr);

/// ||g_hat - g_true||^2 / ||g_true||^2. Rejects unequal lengths and an all-zero truth.
double nmse(const CVec& g_hat, const CVec& g_true);

/// (I_M (x) omega) g: the grouped channel the measurements actually observe.
CVec project_observable(const CVec& g, const GroupingMap& grouping, int M);

/// nmse after projecting both arguments with project_observable. Equals nmse
/// when every group has one element.
double observable_nmse(const CVec& g_hat, const CVec& g_true, const GroupingMap& grouping, int M);

struct CountReport {
  std::uint64_t mul = 0;
  std::uint64_t add = 0;
  std::uint64_t inversions = 0;
  std::uint64_t inversion_cost = 0;
  std::vector<std::uint64_t> inv_dims;

  nlohmann::json to_json() const;
};

CountReport count_report(const OpCounter& counter);

struct RunDims {
  int L = 0;
  int M = 0;
  int Q = 1;
  int B = 0;
};

/// {method, dims:{L,M,Q,B}, counts:{mul,add,inv_dims}, nmse_s, nmse_c}
nlohmann::json summary_json(const std::string& method, const RunDims& dims, const CountReport& counts,
                            double nmse_s, double nmse_c);

}  // namespace risisac
