#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "risisac/channel_model.hpp"
#include "risisac/measurement_operator.hpp"
#include "risisac/op_counter.hpp"
#include "risisac/types.hpp"

namespace risisac {

/// Sparsity prior on the sensing channel.
enum class PenaltyKind {
  gmc,  ///< generalized minimax-concave, ||S(g - v)||^2 inside the envelope
  mcp,  ///< plain minimax-concave, ||g - v||^2 inside the envelope
};

PenaltyKind parse_penalty_kind(const std::string& s);

/// One line of the per-iteration trace.
struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double gamma_e = 0.0;
  int nnz_gs = 0;
  int nnz_beta = 0;
};

/// Trace sink writing line-delimited JSON to `out`.
std::function<void(const TraceRecord&)> jsonl_trace_sink(std::ostream& out);

/// Starting point of the alternating solver.
enum class InitKind {
  zero,   ///< g_s = v = beta = 0, h from the matched filter
  lasso,  ///< joint l1 fit on [S C] at the reference noise level
};

InitKind parse_init_kind(const std::string& s);

struct EstimatorConfig {
  /// l1 weight of the g_s subproblem at the reference noise level. Unset:
  /// universal threshold sigma * max_j ||s_j|| * sqrt(2 log n).
  std::optional<double> lambda;
  /// Folded into lambda: the effective weight is eta * lambda.
  double eta = 0.5;
  /// Envelope weight of the g_s subproblem at the reference noise level.
  double zeta = 0.3;
  double epsilon = 1e-3;
  /// Forward-backward step. Unset: 0.95 * gmc_step_bound.
  std::optional<double> mu;
  int inner_iters = 500;
  int outer_iters = 100;
  double tol_outer = 1e-6;
  double tol_inner = 1e-8;
  /// Overrides the residual-based initial gamma_e.
  std::optional<double> gamma_init;
  /// Lower clamp on gamma_e; estimate also clamps at 1e-8 * rms(r).
  double gamma_floor = 1e-12;
  PenaltyKind penalty = PenaltyKind::gmc;
  InitKind init = InitKind::lasso;
  /// Iteration cap of the lasso warm start.
  int init_iters = 1000;
  std::function<void(const TraceRecord&)> trace;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

/// Largest stable step, 2 / (max{1, zeta/(1-zeta)} ||S||^2). Infinite-free:
/// zeta == 1 returns 0 (no admissible automatic step).
double gmc_step_bound(double zeta, double spectral_norm2);

struct EstimatorState {
  RVec h;      // Laplacian scales, >= 0
  CVec beta;   // Laplacian coefficients
  CVec g_s;
  CVec v;      // auxiliary variable of the penalty envelope
  double gamma_e = 1.0;
  int iteration = 0;
  std::vector<double> objective_trace;

  CVec g_c() const { return beta.cwiseProduct(h.cast<cplx>()); }
};

struct EstimateResult {
  CVec g_s_hat;
  CVec g_c_hat;
  double gamma_e_hat = 0.0;
  int iterations_used = 0;
  bool converged = false;
  /// Objective at the initial point followed by one entry per outer pass.
  std::vector<double> objective_trace;
  /// Count of trace increases beyond 1e-9.
  int monotonicity_violations = 0;
  /// Penalty parameters of the objective; objective_value with these
  /// reproduces objective_trace.
  double lambda_used = 0.0;
  double zeta_used = 0.0;
  /// Condition-number warning from the LS baseline.
  std::optional<std::string> warning;
  EstimatorState state;
};

// ---- scalar building blocks ------------------------------------------------

double soft_threshold(double x, double t);
cplx soft_threshold(cplx x, double t);
CVec soft_threshold(const CVec& x, double t);

/// Q(h) = a h^2 + b h + 4 gamma_e^2 log(h + epsilon).
double h_objective(double h, double a, double b, double gamma_e, double epsilon);

/// Global minimizer of Q over h >= 0 via the stationary-point case rule;
/// a == 0 returns 0.
double update_h(double a, double b, double gamma_e, double epsilon);

/// Closed-form shrinkage S_t(residual / (h + eps)), t = 2 sqrt(2) gamma_e / (h + eps).
cplx update_beta(cplx residual, double h, double gamma_e, double epsilon);

/// Exact minimizer over beta of |x - c beta h|^2 + 2 sqrt(2) gamma_e^2 |beta|
/// given p = c^H x and ||c||^2. Returns 0 when h == 0 or the column is empty.
cplx minimize_beta(cplx correlation, double column_norm2, double h, double gamma_e);

/// Noise level from the residual: sqrt(||r - S g_s - C g_c||^2 / N_r),
/// clamped below by `floor`.
double update_gamma(const CVec& r, const LinearOperator& S, const LinearOperator& C, const CVec& g_s,
                    const CVec& g_c, double floor = 1e-12);

// ---- sensing-channel subproblem ---------------------------------------------

struct PenaltyValue {
  double value = 0.0;
  CVec v;  // minimizer of the envelope
};

/// lambda ||g||_1 - min_v { lambda ||v||_1 + zeta/2 ||S(g - v)||^2 } (gmc), or the
/// identity-envelope version (mcp). `v_warm` seeds the inner solver.
PenaltyValue sparsity_penalty(const CVec& g, const LinearOperator& S, double lambda, double zeta,
                              PenaltyKind kind, const CVec* v_warm = nullptr, double tol = 1e-12,
                              int max_iters = 20000, OpCounter* counter = nullptr);

struct GsUpdate {
  CVec g_s;
  CVec v;
  int iterations = 0;
  bool converged = false;
  /// ||z_{k+1} - z_k|| with z = (g_s, v), one per iteration.
  std::vector<double> step_norms;
};

/// Forward-backward splitting on the saddle problem
///   min_g max_v 1/2 ||r - S g - C g_c||^2 + lambda ||g||_1 - lambda ||v||_1 - zeta/2 ||S(g - v)||^2.
/// `comm_term` is C diag(beta) h. The mcp kind runs firm-threshold proximal gradient.
GsUpdate update_gs_gmc(const CVec& r, const LinearOperator& S, const CVec& comm_term, double lambda,
                       const EstimatorConfig& config, const CVec& g_init, const CVec& v_init,
                       OpCounter* counter = nullptr);

/// Convenience form taking C, beta and h directly, starting from zero.
GsUpdate update_gs_gmc(const CVec& r, const LinearOperator& S, const LinearOperator& C, const CVec& beta,
                       const RVec& h, double lambda, const EstimatorConfig& config);

// ---- full objective and alternating solver ----------------------------------

struct ObjectiveTerms {
  double fit = 0.0;        // ||r - S g_s - C g_c||^2 / (2 gamma_e^2)
  double beta_l1 = 0.0;    // sqrt(2) sum |beta_i|
  double log_h = 0.0;      // 2 sum log(h_i + eps)
  double penalty = 0.0;    // sparsity penalty with (lambda, config.zeta)
  double log_gamma = 0.0;  // N_r log gamma_e
  double total() const { return fit + beta_l1 + log_h + penalty + log_gamma; }
};

ObjectiveTerms objective_terms(const EstimatorState& state, const CVec& r, const LinearOperator& S,
                               const LinearOperator& C, double lambda, const EstimatorConfig& config);

double objective_value(const EstimatorState& state, const CVec& r, const LinearOperator& S,
                       const LinearOperator& C, double lambda, const EstimatorConfig& config);

/// l1 weight of the g_s subproblem at noise level sigma, honoring config.lambda and eta.
double resolve_lambda(const EstimatorConfig& config, const LinearOperator& S, double sigma);

/// Alternating minimization over (h, beta), g_s and gamma_e.
///
/// The penalty in the objective is J(g_s; lambda / sigma^2, zeta / sigma^2) with
/// sigma the reference noise level: sqrt(noise_variance) when positive, else
/// 1e-3 times the rms of r. The g_s step at gamma_e therefore runs with (lambda, zeta)
/// scaled by gamma_e^2 / sigma^2; zeta is capped at config.zeta to keep the
/// subproblem convex, and the step is kept only if it lowers the objective.
EstimateResult estimate(const CVec& r, const LinearOperator& S, const LinearOperator& C,
                        double noise_variance, const EstimatorConfig& config,
                        OpCounter* counter = nullptr);

EstimateResult estimate(const MeasurementSet& measurements, const EstimatorConfig& config,
                        OpCounter* counter = nullptr);

}  // namespace risisac
