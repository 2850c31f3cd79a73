#include "risisac/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace risisac {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kMonotoneSlack = 1e-9;
// Reference noise level, relative to the data scale, when none is supplied.
constexpr double kNoiselessScale = 1e-3;
// gamma_e never drops below this fraction of rms(r); below it the fit term
// only amplifies rounding in the residual.
constexpr double kRelativeGammaFloor = 1e-8;

bool all_finite(const CVec& x) { return x.allFinite(); }

}  // namespace

PenaltyKind parse_penalty_kind(const std::string& s) {
  if (s == "gmc") return PenaltyKind::gmc;
  if (s == "mcp") return PenaltyKind::mcp;
  throw std::invalid_argument("unknown penalty kind '" + s + "' (expected gmc|mcp)");
}

InitKind parse_init_kind(const std::string& s) {
  if (s == "zero") return InitKind::zero;
  if (s == "lasso") return InitKind::lasso;
  throw std::invalid_argument("unknown init kind '" + s + "' (expected zero|lasso)");
}

std::function<void(const TraceRecord&)> jsonl_trace_sink(std::ostream& out) {
  return [&out](const TraceRecord& rec) {
    nlohmann::json j{{"iter", rec.iter},
                     {"objective", rec.objective},
                     {"gamma_e", rec.gamma_e},
                     {"nnz_gs", rec.nnz_gs},
                     {"nnz_beta", rec.nnz_beta}};
    out << j.dump() << '\n';
  };
}

void EstimatorConfig::validate() const {
  const auto fail = [](const std::string& m) { throw std::invalid_argument("estimator config: " + m); };
  if (!(zeta > 0.0 && zeta <= 1.0)) fail("zeta must lie in (0, 1]");
  if (lambda && !(*lambda > 0.0)) fail("lambda must be positive");
  if (!(eta >= 0.0)) fail("eta must be non-negative");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (mu && !(*mu > 0.0)) fail("mu must be positive");
  if (!mu && zeta == 1.0 && penalty == PenaltyKind::gmc)
    fail("zeta = 1 admits no automatic step size; set mu explicitly");
  if (inner_iters < 1 || outer_iters < 1 || init_iters < 1) fail("iteration limits must be positive");
  if (!(tol_outer > 0.0) || !(tol_inner > 0.0)) fail("tolerances must be positive");
  if (gamma_init && !(*gamma_init > 0.0)) fail("gamma_init must be positive");
  if (!(gamma_floor > 0.0)) fail("gamma_floor must be positive");
}

double gmc_step_bound(double zeta, double spectral_norm2) {
  if (zeta >= 1.0 || spectral_norm2 <= 0.0) return 0.0;
  return 2.0 / (std::max(1.0, zeta / (1.0 - zeta)) * spectral_norm2);
}

// ---- scalar building blocks ------------------------------------------------

double soft_threshold(double x, double t) {
  const double m = std::abs(x);
  return m > t ? x * (1.0 - t / m) : 0.0;
}

cplx soft_threshold(cplx x, double t) {
  const double m2 = std::norm(x);
  if (!(m2 > t * t)) return {};
  return x * (1.0 - t / std::sqrt(m2));
}

CVec soft_threshold(const CVec& x, double t) {
  CVec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], t);
  return out;
}

double h_objective(double h, double a, double b, double gamma_e, double epsilon) {
  return a * h * h + b * h + 4.0 * gamma_e * gamma_e * std::log(h + epsilon);
}

double update_h(double a, double b, double gamma_e, double epsilon) {
  if (!(a > 0.0)) return 0.0;
  const double g4 = 4.0 * gamma_e * gamma_e;
  const double centre = -(2.0 * a * epsilon + b) / (4.0 * a);
  const double disc = centre * centre - (b * epsilon + g4) / (2.0 * a);
  // Q'(h) has no root, so Q increases on [0, inf).
  if (disc < 0.0) return 0.0;
  const double root = std::sqrt(disc);
  double best = 0.0;
  double best_q = h_objective(0.0, a, b, gamma_e, epsilon);
  for (double cand : {centre + root, centre - root}) {
    if (!(cand >= 0.0)) continue;
    const double q = h_objective(cand, a, b, gamma_e, epsilon);
    if (q < best_q) {
      best = cand;
      best_q = q;
    }
  }
  return best;
}

cplx update_beta(cplx residual, double h, double gamma_e, double epsilon) {
  const double scale = h + epsilon;
  return soft_threshold(residual / scale, 2.0 * kSqrt2 * gamma_e / scale);
}

cplx minimize_beta(cplx correlation, double column_norm2, double h, double gamma_e) {
  if (!(h > 0.0) || !(column_norm2 > 0.0)) return {};
  return soft_threshold(h * correlation, kSqrt2 * gamma_e * gamma_e) / (column_norm2 * h * h);
}

double update_gamma(const CVec& r, const LinearOperator& S, const LinearOperator& C, const CVec& g_s,
                    const CVec& g_c, double floor) {
  if (S.rows() != r.size() || C.rows() != r.size() || S.cols() != g_s.size() || C.cols() != g_c.size())
    throw DimensionError("update_gamma: operator shapes do not match the data");
  if (r.size() == 0) return floor;
  const CVec res = r - S.apply(g_s) - C.apply(g_c);
  const double g = std::sqrt(res.squaredNorm() / static_cast<double>(r.size()));
  return std::max(g, floor);
}

// ---- sensing-channel subproblem ---------------------------------------------

namespace {

// Firm thresholding: prox of step * MCP(lambda, zeta), valid for step * zeta < 1.
cplx firm_threshold(cplx z, double step, double lambda, double zeta) {
  const double m = std::abs(z);
  if (m <= step * lambda) return {};
  if (m >= lambda / zeta) return z;
  return z / m * ((m - step * lambda) / (1.0 - step * zeta));
}

PenaltyValue penalty_impl(const CVec& g, const LinearOperator& S, double norm2, double lambda,
                          double zeta, PenaltyKind kind, const CVec* v_warm, double tol,
                          int max_iters, OpCounter* counter) {
  PenaltyValue out;
  const double l1 = g.cwiseAbs().sum();
  if (kind == PenaltyKind::mcp) {
    out.v = soft_threshold(g, lambda / zeta);
    double value = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double m = std::abs(g[i]);
      value += m < lambda / zeta ? lambda * m - 0.5 * zeta * m * m : 0.5 * lambda * lambda / zeta;
    }
    out.value = value;
    return out;
  }
  if (zeta <= 0.0 || norm2 <= 0.0) {
    out.v = CVec::Zero(g.size());
    out.value = zeta <= 0.0 ? lambda * l1 : 0.0;
    return out;
  }

  // FISTA with adaptive restart on min_v lambda ||v||_1 + zeta/2 ||S(g - v)||^2.
  const double step = 1.0 / (zeta * norm2);
  const CVec Sg = S.apply(g, counter);
  CVec v = (v_warm && v_warm->size() == g.size()) ? *v_warm : CVec::Zero(g.size());
  CVec y = v;
  double t = 1.0;
  for (int k = 0; k < max_iters; ++k) {
    const CVec grad = -zeta * S.adjoint(Sg - S.apply(y, counter), counter);
    CVec v_next = soft_threshold(y - step * grad, lambda * step);
    const double change = (v_next - v).norm();
    if (Eigen::numext::real((y - v_next).dot(v_next - v)) > 0.0) {
      t = 1.0;
      y = v_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = v_next + ((t - 1.0) / t_next) * (v_next - v);
      t = t_next;
    }
    v = std::move(v_next);
    if (change <= tol * std::max(1.0, v.norm())) break;
  }
  const double envelope = lambda * v.cwiseAbs().sum() + 0.5 * zeta * (Sg - S.apply(v, counter)).squaredNorm();
  out.value = lambda * l1 - envelope;
  out.v = std::move(v);
  return out;
}

double resolve_step(const EstimatorConfig& config, double zeta, double norm2) {
  if (config.penalty == PenaltyKind::mcp) {
    const double bound = 0.95 / std::max(norm2, zeta);
    return config.mu ? std::min(*config.mu, bound) : bound;
  }
  const double bound = gmc_step_bound(zeta, norm2);
  if (config.mu) {
    if (zeta < 1.0 && *config.mu > bound) {
      std::ostringstream msg;
      msg << "step mu=" << *config.mu << " exceeds the stability bound " << bound;
      throw std::invalid_argument(msg.str());
    }
    return *config.mu;
  }
  if (bound <= 0.0) throw std::invalid_argument("no admissible automatic step size for this zeta");
  return 0.95 * bound;
}

GsUpdate fbs_impl(const CVec& r, const LinearOperator& S, const CVec& comm_term, double norm2,
                  double lambda, double zeta, const EstimatorConfig& config, const CVec& g_init,
                  const CVec& v_init, OpCounter* counter, bool record_steps) {
  const double mu = resolve_step(config, zeta, norm2);
  const double thr = lambda * mu;
  const CVec target = r - comm_term;

  GsUpdate out;
  CVec g = g_init;
  CVec v = v_init;
  for (int k = 0; k < config.inner_iters; ++k) {
    CVec g_next;
    CVec v_next;
    const CVec Sg = S.apply(g, counter);
    if (config.penalty == PenaltyKind::gmc) {
      const CVec Sw = S.apply(g - v, counter);
      const CVec grad_g = S.adjoint(Sg - target - zeta * Sw, counter);
      const CVec grad_v = zeta * S.adjoint(Sw, counter);
      g_next = soft_threshold(g - mu * grad_g, thr);
      v_next = soft_threshold(v + mu * grad_v, thr);
    } else {
      const CVec z = g - mu * S.adjoint(Sg - target, counter);
      g_next.resize(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) g_next[i] = firm_threshold(z[i], mu, lambda, zeta);
      v_next = soft_threshold(g_next, lambda / zeta);
    }
    count_mul(counter, static_cast<std::uint64_t>(4 * g.size()));
    if (!all_finite(g_next) || !all_finite(v_next)) {
      std::ostringstream msg;
      msg << "forward-backward iterate became non-finite at inner iteration " << k
          << " (mu=" << mu << " likely violates the step bound)";
      throw NumericalError(msg.str());
    }
    const double dg = (g_next - g).norm();
    const double dv = (v_next - v).norm();
    if (record_steps) out.step_norms.push_back(std::sqrt(dg * dg + dv * dv));
    g = std::move(g_next);
    v = std::move(v_next);
    out.iterations = k + 1;
    if (std::max(dg, dv) / std::max(g.norm(), 1.0) < config.tol_inner) {
      out.converged = true;
      break;
    }
  }
  out.g_s = std::move(g);
  out.v = std::move(v);
  return out;
}

}  // namespace

PenaltyValue sparsity_penalty(const CVec& g, const LinearOperator& S, double lambda, double zeta,
                              PenaltyKind kind, const CVec* v_warm, double tol, int max_iters,
                              OpCounter* counter) {
  if (g.size() != S.cols()) throw DimensionError("sparsity_penalty: length mismatch");
  const double norm2 = kind == PenaltyKind::gmc ? S.spectral_norm2() : 0.0;
  return penalty_impl(g, S, norm2, lambda, zeta, kind, v_warm, tol, max_iters, counter);
}

GsUpdate update_gs_gmc(const CVec& r, const LinearOperator& S, const CVec& comm_term, double lambda,
                       const EstimatorConfig& config, const CVec& g_init, const CVec& v_init,
                       OpCounter* counter) {
  config.validate();
  if (r.size() != S.rows() || comm_term.size() != S.rows() || g_init.size() != S.cols() ||
      v_init.size() != S.cols())
    throw DimensionError("update_gs_gmc: operator shapes do not match the data");
  return fbs_impl(r, S, comm_term, S.spectral_norm2(), lambda, config.zeta, config, g_init, v_init, counter,
                  true);
}

GsUpdate update_gs_gmc(const CVec& r, const LinearOperator& S, const LinearOperator& C, const CVec& beta,
                       const RVec& h, double lambda, const EstimatorConfig& config) {
  if (beta.size() != C.cols() || h.size() != C.cols())
    throw DimensionError("update_gs_gmc: beta/h length does not match C");
  const CVec comm = C.apply(beta.cwiseProduct(h.cast<cplx>()));
  const CVec zero = CVec::Zero(S.cols());
  return update_gs_gmc(r, S, comm, lambda, config, zero, zero);
}

// ---- full objective ---------------------------------------------------------

namespace {

ObjectiveTerms assemble_terms(double residual_norm2, double penalty, const EstimatorState& state,
                              Eigen::Index n_rows, double epsilon) {
  ObjectiveTerms t;
  const double g2 = state.gamma_e * state.gamma_e;
  t.fit = residual_norm2 / (2.0 * g2);
  t.beta_l1 = kSqrt2 * state.beta.cwiseAbs().sum();
  t.log_h = 0.0;
  for (Eigen::Index i = 0; i < state.h.size(); ++i) t.log_h += 2.0 * std::log(state.h[i] + epsilon);
  t.penalty = penalty;
  t.log_gamma = static_cast<double>(n_rows) * std::log(state.gamma_e);
  return t;
}

}  // namespace

ObjectiveTerms objective_terms(const EstimatorState& state, const CVec& r, const LinearOperator& S,
                               const LinearOperator& C, double lambda, const EstimatorConfig& config) {
  if (state.g_s.size() != S.cols() || state.h.size() != C.cols() || state.beta.size() != C.cols() ||
      r.size() != S.rows())
    throw DimensionError("objective: state shape does not match the operators");
  const CVec res = r - S.apply(state.g_s) - C.apply(state.g_c());
  const CVec* warm = state.v.size() == state.g_s.size() ? &state.v : nullptr;
  const PenaltyValue pen =
      sparsity_penalty(state.g_s, S, lambda, config.zeta, config.penalty, warm, 1e-14, 100000);
  return assemble_terms(res.squaredNorm(), pen.value, state, r.size(), config.epsilon);
}

double objective_value(const EstimatorState& state, const CVec& r, const LinearOperator& S,
                       const LinearOperator& C, double lambda, const EstimatorConfig& config) {
  return objective_terms(state, r, S, C, lambda, config).total();
}

double resolve_lambda(const EstimatorConfig& config, const LinearOperator& S, double sigma) {
  if (config.lambda) return config.eta * *config.lambda;
  double widest = 0.0;
  for (Eigen::Index j = 0; j < S.cols(); ++j) widest = std::max(widest, S.column_norm2(j));
  const double n = std::max<double>(2.0, static_cast<double>(S.cols()));
  return config.eta * std::max(sigma, 0.0) * std::sqrt(widest) * std::sqrt(2.0 * std::log(n));
}

// ---- alternating solver -----------------------------------------------------

namespace {

struct CoordinateContext {
  double gamma_e;
  double epsilon;
};

// Scale minimizing sqrt(2) t / h + 2 log(h + eps), the cost of |beta h| = t.
double scale_for_magnitude(double t, double epsilon) {
  return (kSqrt2 * t + std::sqrt(2.0 * t * t + 8.0 * kSqrt2 * t * epsilon)) / 4.0;
}

// FISTA with adaptive restart on 1/2 ||r - S a - C b||^2 + lambda (||a||_1 + ||b||_1).
std::pair<CVec, CVec> joint_lasso(const CVec& r, const LinearOperator& S, const LinearOperator& C, double lipschitz,
                                  double lambda, int max_iters, OpCounter* counter) {
  CVec a = CVec::Zero(S.cols()), b = CVec::Zero(C.cols());
  if (!(lipschitz > 0.0)) return {a, b};
  CVec ya = a, yb = b;
  double t = 1.0;
  const double step = 1.0 / lipschitz;
  for (int k = 0; k < max_iters; ++k) {
    const CVec res = S.apply(ya, counter) + C.apply(yb, counter) - r;
    CVec a_next = soft_threshold(ya - step * S.adjoint(res, counter), lambda * step);
    CVec b_next = soft_threshold(yb - step * C.adjoint(res, counter), lambda * step);
    const double change = std::sqrt((a_next - a).squaredNorm() + (b_next - b).squaredNorm());
    const double restart = Eigen::numext::real((ya - a_next).dot(a_next - a) + (yb - b_next).dot(b_next - b));
    if (restart > 0.0) {
      t = 1.0;
      ya = a_next;
      yb = b_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double w = (t - 1.0) / t_next;
      ya = a_next + w * (a_next - a);
      yb = b_next + w * (b_next - b);
      t = t_next;
    }
    a = std::move(a_next);
    b = std::move(b_next);
    if (change <= 1e-8 * std::max(1.0, std::sqrt(a.squaredNorm() + b.squaredNorm()))) break;
  }
  return {a, b};
}

// Per-coordinate objective in (h, beta) with everything else fixed, up to a constant.
double coordinate_objective(double h, cplx beta, cplx corr, double n, const CoordinateContext& ctx) {
  const double fit = n * h * h * std::norm(beta) - 2.0 * h * Eigen::numext::real(std::conj(beta) * corr);
  return fit / (2.0 * ctx.gamma_e * ctx.gamma_e) + kSqrt2 * std::abs(beta) + 2.0 * std::log(h + ctx.epsilon);
}

// One h-step and one beta-step on coordinate i. A zero coordinate is offered a
// restart from its least-squares magnitude, kept only if it lowers the objective.
void update_coordinate(double& h, cplx& beta, cplx corr, double n, const CoordinateContext& ctx) {
  if (!(n > 0.0)) {
    h = 0.0;
    beta = {};
    return;
  }
  h = update_h(n * std::norm(beta), -2.0 * Eigen::numext::real(std::conj(beta) * corr), ctx.gamma_e, ctx.epsilon);
  beta = minimize_beta(corr, n, h, ctx.gamma_e);
  if (beta != cplx{} || std::abs(corr) == 0.0) return;

  double h_try = scale_for_magnitude(std::abs(corr) / n, ctx.epsilon);
  cplx b_try{};
  for (int round = 0; round < 2; ++round) {
    b_try = minimize_beta(corr, n, h_try, ctx.gamma_e);
    if (b_try == cplx{}) return;
    h_try = update_h(n * std::norm(b_try), -2.0 * Eigen::numext::real(std::conj(b_try) * corr), ctx.gamma_e,
                     ctx.epsilon);
  }
  b_try = minimize_beta(corr, n, h_try, ctx.gamma_e);
  if (coordinate_objective(h_try, b_try, corr, n, ctx) < coordinate_objective(h, beta, corr, n, ctx)) {
    h = h_try;
    beta = b_try;
  }
}

}  // namespace

EstimateResult estimate(const CVec& r, const LinearOperator& S, const LinearOperator& C,
                        double noise_variance, const EstimatorConfig& config, OpCounter* counter) {
  config.validate();
  if (S.rows() != r.size() || C.rows() != r.size())
    throw DimensionError("estimate: operator row count does not match the observation length");

  const Eigen::Index n_s = S.cols();
  const Eigen::Index n_c = C.cols();
  const Eigen::Index n_r = r.size();
  const double rows = static_cast<double>(std::max<Eigen::Index>(n_r, 1));
  const double norm2 = S.spectral_norm2();

  std::vector<double> col_norm(static_cast<std::size_t>(n_c));
  for (Eigen::Index j = 0; j < n_c; ++j) col_norm[static_cast<std::size_t>(j)] = C.column_norm2(j);

  EstimatorState st;
  st.g_s = CVec::Zero(n_s);
  st.v = CVec::Zero(n_s);
  st.beta = CVec::Zero(n_c);
  st.h = RVec::Zero(n_c);
  for (Eigen::Index j = 0; j < n_c; ++j) {
    const double n = col_norm[static_cast<std::size_t>(j)];
    st.h[j] = n > 0.0 ? std::abs(C.column_dot(j, r)) / n : 0.0;
  }
  const double rms_r = std::sqrt(r.squaredNorm() / rows);
  const double gamma_floor = std::max(config.gamma_floor, kRelativeGammaFloor * rms_r);
  const double gamma0 = std::max(rms_r, gamma_floor);

  // Penalty parameters of the objective, normalized so the g_s step at
  // gamma_e = sigma uses exactly (lambda, zeta) from the config.
  const double sigma = noise_variance > 0.0 ? std::sqrt(noise_variance) : kNoiselessScale * gamma0;
  const double lambda_ref = resolve_lambda(config, S, sigma);
  const double lambda_obj = lambda_ref / (sigma * sigma);
  const double zeta_obj = config.zeta / (sigma * sigma);

  CVec residual = r;  // r - S g_s - C g_c
  if (config.init == InitKind::lasso) {
    auto [a, b] = joint_lasso(r, S, C, norm2 + C.spectral_norm2(), lambda_ref, config.init_iters, counter);
    st.g_s = std::move(a);
    for (Eigen::Index j = 0; j < n_c; ++j) {
      const double t = std::abs(b[j]);
      st.h[j] = t > 0.0 ? scale_for_magnitude(t, config.epsilon) : 0.0;
      st.beta[j] = t > 0.0 ? b[j] / st.h[j] : cplx{};
    }
    residual = r - S.apply(st.g_s, counter) - C.apply(st.g_c(), counter);
  }
  st.gamma_e = config.gamma_init ? *config.gamma_init
                                 : std::max(std::sqrt(residual.squaredNorm() / rows), gamma_floor);

  CVec envelope_v = CVec::Zero(n_s);
  double penalty = 0.0;
  if (config.init == InitKind::lasso) {
    PenaltyValue pen = penalty_impl(st.g_s, S, norm2, lambda_obj, zeta_obj, config.penalty, nullptr, 1e-12, 20000,
                                    counter);
    penalty = pen.value;
    envelope_v = std::move(pen.v);
  }

  const auto emit = [&](int iter, double objective) {
    if (!config.trace) return;
    config.trace({iter, objective, st.gamma_e, count_nonzero(st.g_s, 0.0), count_nonzero(st.beta, 0.0)});
  };

  double objective = assemble_terms(residual.squaredNorm(), penalty, st, n_r, config.epsilon).total();
  st.objective_trace.push_back(objective);
  emit(0, objective);

  EstimateResult result;
  for (int it = 1; it <= config.outer_iters; ++it) {
    // (h, beta): exact per-coordinate minimization, Gauss-Seidel order.
    const CoordinateContext ctx{st.gamma_e, config.epsilon};
    for (Eigen::Index j = 0; j < n_c; ++j) {
      const double n = col_norm[static_cast<std::size_t>(j)];
      const cplx g_old = st.beta[j] * st.h[j];
      const cplx corr = (n > 0.0 ? C.column_dot(j, residual, counter) : cplx{}) + n * g_old;
      double h = st.h[j];
      cplx beta = st.beta[j];
      update_coordinate(h, beta, corr, n, ctx);
      st.h[j] = h;
      st.beta[j] = beta;
      const cplx delta = beta * h - g_old;
      if (delta != cplx{}) C.axpy_column(j, -delta, residual, counter);
    }

    // g_s: forward-backward on 1/2 ||res||^2 + gamma_e^2 J, kept only on descent.
    const double g2 = st.gamma_e * st.gamma_e;
    const double zeta_step = std::min(g2 * zeta_obj, config.zeta);
    const CVec target = residual + S.apply(st.g_s, counter);
    const GsUpdate upd = fbs_impl(target, S, CVec::Zero(n_r), norm2, g2 * lambda_obj, zeta_step, config, st.g_s,
                                  st.v, counter, false);
    const PenaltyValue pen = penalty_impl(upd.g_s, S, norm2, lambda_obj, zeta_obj, config.penalty, &envelope_v,
                                          1e-12, 20000, counter);
    const CVec residual_new = target - S.apply(upd.g_s, counter);
    const double phi_old = residual.squaredNorm() / (2.0 * g2) + penalty;
    const double phi_new = residual_new.squaredNorm() / (2.0 * g2) + pen.value;
    if (phi_new <= phi_old) {
      st.g_s = upd.g_s;
      residual = residual_new;
      penalty = pen.value;
      envelope_v = pen.v;
    }
    st.v = upd.v;

    st.gamma_e = std::max(std::sqrt(residual.squaredNorm() / rows), gamma_floor);

    const double next = assemble_terms(residual.squaredNorm(), penalty, st, n_r, config.epsilon).total();
    if (next > objective + kMonotoneSlack) ++result.monotonicity_violations;
    st.objective_trace.push_back(next);
    st.iteration = it;
    emit(it, next);

    const double decrease = (objective - next) / std::max(std::abs(objective), 1.0);
    objective = next;
    result.iterations_used = it;
    if (decrease >= 0.0 && decrease < config.tol_outer) {
      result.converged = true;
      break;
    }
  }

  result.g_s_hat = st.g_s;
  result.g_c_hat = st.g_c();
  if (!all_finite(result.g_s_hat) || !all_finite(result.g_c_hat) || !std::isfinite(st.gamma_e))
    throw NumericalError("estimate produced non-finite values");
  result.gamma_e_hat = st.gamma_e;
  result.objective_trace = st.objective_trace;
  result.lambda_used = lambda_obj;
  result.zeta_used = zeta_obj;
  result.state = std::move(st);
  return result;
}

EstimateResult estimate(const MeasurementSet& measurements, const EstimatorConfig& config, OpCounter* counter) {
  return estimate(measurements.r, measurements.s_op, measurements.c_op, measurements.noise_variance(), config,
                  counter);
}

}  // namespace risisac
