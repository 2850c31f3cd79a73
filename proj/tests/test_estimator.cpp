#include <cmath>
#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "risisac/estimator.hpp"

using namespace risisac;

namespace {

const double kSqrt2 = std::sqrt(2.0);

CMat gaussian(int rows, int cols, Rng& rng, double variance = 1.0) {
  CMat A(rows, cols);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = complex_normal(rng, variance);
  return A;
}

CVec sparse(int n, int k, Rng& rng) {
  CVec x = CVec::Zero(n);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int i = 0; i < k; ++i) x[idx[static_cast<std::size_t>(i)]] = complex_normal(rng);
  return x;
}

double rel_err(const CVec& a, const CVec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  const cplx z = soft_threshold(cplx{3.0, 4.0}, 2.5);
  CHECK(std::abs(z - cplx{1.5, 2.0}) < 1e-15);
  CHECK(soft_threshold(cplx{0.3, 0.4}, 0.5) == cplx{});
  CVec v(2);
  v << cplx{3, 4}, cplx{0.1, 0};
  const CVec out = soft_threshold(v, 2.5);
  CHECK(std::abs(out[0] - cplx{1.5, 2.0}) < 1e-15);
  CHECK(out[1] == cplx{});
}

TEST_CASE("h update: negative discriminant gives zero") {
  CHECK(update_h(1.0, 0.0, 1.0, 0.01) == 0.0);
}

TEST_CASE("h update: interior root wins") {
  // 4 gamma^2 = 1
  const double h = update_h(1.0, -4.0, 0.5, 1.0);
  CHECK(h == doctest::Approx((1.0 + std::sqrt(7.0)) / 2.0).epsilon(1e-12));
  CHECK(h == doctest::Approx(1.8229).epsilon(1e-4));
  CHECK(h_objective(h, 1.0, -4.0, 0.5, 1.0) == doctest::Approx(-2.93).epsilon(1e-3));
  double grid_q = 0.0;
  const double g = oracle::grid_min_h(1.0, -4.0, 0.5, 1.0, 1e-4, 10.0, &grid_q);
  CHECK(std::abs(g - h) < 1e-4);
  CHECK(h_objective(h, 1.0, -4.0, 0.5, 1.0) <= grid_q + 1e-12);
}

TEST_CASE("h update: boundary beats both stationary points") {
  CHECK(update_h(1.0, -4.0, 0.5, 0.01) == 0.0);
  CHECK(oracle::grid_min_h(1.0, -4.0, 0.5, 0.01, 1e-4, 10.0) == 0.0);
  CHECK(update_h(0.0, -4.0, 0.5, 0.01) == 0.0);
}

TEST_CASE("h update never loses to a grid search") {
  Rng rng(101);
  std::uniform_real_distribution<double> ua(0.01, 5.0), ub(-20.0, 5.0), ug(0.01, 2.0), ue(1e-4, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = ua(rng), b = ub(rng), g = ug(rng), e = ue(rng);
    double grid_q = 0.0;
    oracle::grid_min_h(a, b, g, e, 1e-3, 20.0, &grid_q);
    const double h = update_h(a, b, g, e);
    CHECK(h >= 0.0);
    CHECK(h_objective(h, a, b, g, e) <= grid_q + 1e-6);
  }
}

TEST_CASE("beta update closed form") {
  CHECK(update_beta(cplx{}, 0.7, 1.0, 1e-3) == cplx{});
  CHECK(std::abs(update_beta(5.0, 1.0 - 1e-3, 1.0, 1e-3) - (5.0 - 2.0 * kSqrt2)) < 1e-12);
  // |residual| / (h + eps) below the threshold 2 sqrt(2) gamma / (h + eps)
  CHECK(update_beta(2.0, 0.5, 1.0, 0.5) == cplx{});
}

TEST_CASE("beta updates satisfy their optimality conditions") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int i = 0; i < 200; ++i) {
    const cplx x = complex_normal(rng, 9.0);
    const double h = u(rng), g = u(rng), eps = 1e-3;

    // update_beta minimizes 1/2 |x/s - beta|^2 + t |beta|, s = h + eps.
    const double s = h + eps, t = 2.0 * kSqrt2 * g / s;
    const cplx b = update_beta(x, h, g, eps);
    if (b == cplx{}) {
      CHECK(std::abs(x / s) <= t + 1e-10);
    } else {
      CHECK(std::abs(x / s - b - t * b / std::abs(b)) < 1e-10);
    }

    // minimize_beta: n h^2 beta - h p + sqrt(2) g^2 beta/|beta| = 0, or |h p| <= sqrt(2) g^2.
    const double n = u(rng);
    const cplx p = x;
    const cplx m = minimize_beta(p, n, h, g);
    if (m == cplx{}) {
      CHECK(std::abs(h * p) <= kSqrt2 * g * g + 1e-10);
    } else {
      CHECK(std::abs(n * h * h * m - h * p + kSqrt2 * g * g * m / std::abs(m)) < 1e-10);
    }
  }
  CHECK(minimize_beta(cplx{4.0, 0.0}, 1.0, 0.0, 1.0) == cplx{});
  CHECK(minimize_beta(cplx{4.0, 0.0}, 0.0, 1.0, 1.0) == cplx{});
}

TEST_CASE("h and beta supports are scale invariant") {
  // Scaling the correlation, gamma_e and epsilon by c scales the optimal h by c
  // and leaves beta unchanged, so zero/nonzero patterns agree.
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (double c : {0.01, 0.5, 7.0, 300.0}) {
    for (int i = 0; i < 100; ++i) {
      const cplx beta = complex_normal(rng), p = complex_normal(rng, 4.0);
      const double n = u(rng), g = u(rng), eps = 1e-3 * u(rng);
      const double a = n * std::norm(beta), b = -2.0 * std::real(std::conj(beta) * p);
      const double h1 = update_h(a, b, g, eps);
      const double h2 = update_h(a, c * b, c * g, c * eps);
      CHECK((h1 > 0.0) == (h2 > 0.0));
      CHECK(std::abs(h2 - c * h1) <= 1e-9 * c * (1.0 + h1));
      const cplx b1 = minimize_beta(p, n, h1, g);
      const cplx b2 = minimize_beta(c * p, n, h2, c * g);
      CHECK((b1 == cplx{}) == (b2 == cplx{}));
    }
  }
}

TEST_CASE("gamma update") {
  const DenseOperator S(CMat::Zero(2, 1)), C(CMat::Zero(2, 1));
  CVec r(2);
  r << 3.0, 4.0;
  const CVec z = CVec::Zero(1);
  CHECK(update_gamma(r, S, C, z, z) == doctest::Approx(std::sqrt(12.5)));
  CHECK(update_gamma(CVec::Zero(2), S, C, z, z) == 1e-12);
  CHECK_THROWS_AS(update_gamma(CVec::Zero(3), S, C, z, z), DimensionError);

  Rng rng(3);
  const double sigma = 0.7;
  const CVec big = complex_normal_vector(rng, 10000, sigma * sigma);
  const DenseOperator S2(CMat::Zero(10000, 1));
  CHECK(std::abs(update_gamma(big, S2, S2, z, z) / sigma - 1.0) < 0.02);
}

TEST_CASE("gmc step bound") {
  CHECK(gmc_step_bound(0.3, 4.0) == doctest::Approx(0.5));
  CHECK(gmc_step_bound(0.8, 1.0) == doctest::Approx(2.0 / 4.0));
  CHECK(gmc_step_bound(1.0, 1.0) == 0.0);
}

TEST_CASE("penalty reduces to l1 as zeta vanishes") {
  Rng rng(21);
  const DenseOperator S(gaussian(6, 10, rng));
  const CVec g = complex_normal_vector(rng, 10);
  const PenaltyValue p = sparsity_penalty(g, S, 0.4, 1e-9, PenaltyKind::gmc);
  CHECK(p.value == doctest::Approx(0.4 * g.cwiseAbs().sum()).epsilon(1e-6));
  CHECK(sparsity_penalty(CVec::Zero(10), S, 0.4, 0.5, PenaltyKind::gmc).value == doctest::Approx(0.0));
}

TEST_CASE("gmc penalty matches the envelope oracle") {
  Rng rng(22);
  const CMat A = gaussian(8, 12, rng);
  const DenseOperator S(A);
  const CVec g = sparse(12, 4, rng);
  const double lambda = 0.3, zeta = 0.6;
  const CVec v = oracle::cd_lasso(A, A * g, lambda / zeta);
  const double envelope = lambda * v.cwiseAbs().sum() + 0.5 * zeta * (A * (g - v)).squaredNorm();
  const double expect = lambda * g.cwiseAbs().sum() - envelope;
  const PenaltyValue p = sparsity_penalty(g, S, lambda, zeta, PenaltyKind::gmc, nullptr, 1e-14, 100000);
  CHECK(p.value == doctest::Approx(expect).epsilon(1e-9));
  CHECK(p.value >= -1e-12);
  CHECK(p.value <= lambda * g.cwiseAbs().sum() + 1e-12);
}

TEST_CASE("mcp penalty is the scalar minimax-concave function") {
  const DenseOperator S(CMat::Identity(3, 3));
  CVec g(3);
  g << 0.1, cplx{0.0, -1.0}, 5.0;
  const double lambda = 1.0, zeta = 0.5;  // knee at lambda / zeta = 2
  const double expect = (0.1 - 0.25 * 0.01) + (1.0 - 0.25) + 0.5 * lambda * lambda / zeta;
  CHECK(sparsity_penalty(g, S, lambda, zeta, PenaltyKind::mcp).value == doctest::Approx(expect));
  CHECK(parse_penalty_kind("mcp") == PenaltyKind::mcp);
  CHECK_THROWS_AS(parse_penalty_kind("scad"), std::invalid_argument);
}

TEST_CASE("g_s step: large lambda gives zero") {
  Rng rng(30);
  const CMat A = gaussian(10, 6, rng);
  const Eigen::HouseholderQR<CMat> qr(A);
  const CMat Qm = qr.householderQ() * CMat::Identity(10, 6);
  const DenseOperator S(Qm);
  const CVec r = complex_normal_vector(rng, 10);
  const double lambda = (Qm.adjoint() * r).cwiseAbs().maxCoeff();
  EstimatorConfig cfg;
  cfg.zeta = 0.5;
  const GsUpdate u = update_gs_gmc(r, S, DenseOperator(CMat::Zero(10, 1)), CVec::Zero(1), RVec::Zero(1), lambda, cfg);
  CHECK(u.g_s.norm() < 1e-12);
}

TEST_CASE("g_s step: orthogonal design soft-thresholds") {
  const DenseOperator S(CMat::Identity(2, 2));
  CVec r(2);
  r << 3.0, 0.1;
  EstimatorConfig cfg;
  cfg.zeta = 1e-6;
  cfg.inner_iters = 10000;
  cfg.tol_inner = 1e-14;
  const GsUpdate u = update_gs_gmc(r, S, DenseOperator(CMat::Zero(2, 1)), CVec::Zero(1), RVec::Zero(1), 1.0, cfg);
  CHECK(std::abs(u.g_s[0] - 2.0) < 1e-5);
  CHECK(std::abs(u.g_s[1]) < 1e-12);
}

TEST_CASE("g_s step with tiny zeta is the lasso") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat A = gaussian(10, 30, rng);
    const CVec x = sparse(30, 3, rng);
    const CVec r = A * x + complex_normal_vector(rng, 10, 0.01);
    const double lambda = 0.2 * (A.adjoint() * r).cwiseAbs().maxCoeff();
    EstimatorConfig cfg;
    cfg.zeta = 1e-6;
    cfg.inner_iters = 200000;
    cfg.tol_inner = 1e-13;
    const DenseOperator S(A);
    const GsUpdate u = update_gs_gmc(r, S, CVec::Zero(10), lambda, cfg, CVec::Zero(30), CVec::Zero(30));
    const CVec ref = oracle::cd_lasso(A, r, lambda);
    CHECK(rel_err(u.g_s, ref) < 1e-5);
  }
}

TEST_CASE("g_s step matches the gmc oracle") {
  Rng rng(32);
  const CMat A = gaussian(8, 20, rng);
  const CVec x = sparse(20, 3, rng);
  const CVec r = A * x;
  const double lambda = 0.01, zeta = 0.8;
  EstimatorConfig cfg;
  cfg.zeta = zeta;
  cfg.inner_iters = 500000;
  cfg.tol_inner = 1e-14;
  const GsUpdate u = update_gs_gmc(r, DenseOperator(A), CVec::Zero(8), lambda, cfg, CVec::Zero(20), CVec::Zero(20));
  const CVec ref = oracle::gmc_solution(A, r, lambda, zeta, 1e-13);
  CHECK(rel_err(u.g_s, ref) < 1e-5);
}

TEST_CASE("forward-backward step norms settle monotonically") {
  Rng rng(33);
  for (double zeta : {0.2, 0.5, 0.9}) {
    const CMat A = gaussian(12, 24, rng);
    const CVec r = A * sparse(24, 4, rng) + complex_normal_vector(rng, 12, 0.01);
    EstimatorConfig cfg;
    cfg.zeta = zeta;
    cfg.inner_iters = 2000;
    cfg.tol_inner = 1e-300;
    const GsUpdate u = update_gs_gmc(r, DenseOperator(A), CVec::Zero(12), 0.05, cfg, CVec::Zero(24), CVec::Zero(24));
    const auto& s = u.step_norms;
    REQUIRE(s.size() > 8);
    for (std::size_t k = 3 * s.size() / 4 + 1; k < s.size(); ++k) CHECK(s[k] <= s[k - 1] + 1e-12);
  }
}

TEST_CASE("explicit step above the bound is rejected") {
  Rng rng(34);
  const CMat A = gaussian(4, 6, rng);
  EstimatorConfig cfg;
  cfg.zeta = 0.5;
  cfg.mu = 10.0;
  CHECK_THROWS_AS(update_gs_gmc(CVec::Zero(4), DenseOperator(A), CVec::Zero(4), 0.1, cfg, CVec::Zero(6), CVec::Zero(6)),
                  std::invalid_argument);
  CHECK_THROWS_AS(update_gs_gmc(CVec::Zero(3), DenseOperator(A), CVec::Zero(4), 0.1, EstimatorConfig{}, CVec::Zero(6),
                                CVec::Zero(6)),
                  DimensionError);
}

TEST_CASE("config validation") {
  const auto bad = [](auto mutate) {
    EstimatorConfig c;
    mutate(c);
    return c;
  };
  CHECK_NOTHROW(EstimatorConfig{}.validate());
  CHECK_THROWS_AS(bad([](auto& c) { c.zeta = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.zeta = 1.5; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.zeta = 1.0; }).validate(), std::invalid_argument);
  CHECK_NOTHROW(bad([](auto& c) { c.zeta = 1.0; c.mu = 0.1; }).validate());
  CHECK_THROWS_AS(bad([](auto& c) { c.lambda = -1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.eta = -0.1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.epsilon = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.mu = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.outer_iters = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.tol_inner = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.gamma_init = 0.0; }).validate(), std::invalid_argument);
  CHECK(parse_init_kind("zero") == InitKind::zero);
  CHECK_THROWS_AS(parse_init_kind("ones"), std::invalid_argument);
}

TEST_CASE("objective of the zero state with zero data") {
  const DenseOperator S(CMat::Identity(3, 2)), C(CMat::Identity(3, 2));
  EstimatorState st;
  st.g_s = CVec::Zero(2);
  st.beta = CVec::Zero(2);
  st.h = RVec::Zero(2);
  st.gamma_e = 1.0;
  EstimatorConfig cfg;
  cfg.epsilon = 1.0;
  CHECK(objective_value(st, CVec::Zero(3), S, C, 0.5, cfg) == doctest::Approx(0.0));
}

TEST_CASE("objective matches a term-by-term evaluation") {
  Rng rng(40);
  const CMat A = gaussian(9, 7, rng), B = gaussian(9, 5, rng);
  const CVec r = complex_normal_vector(rng, 9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  EstimatorState st;
  st.g_s = sparse(7, 3, rng);
  st.beta = complex_normal_vector(rng, 5);
  st.h = RVec(5);
  for (int i = 0; i < 5; ++i) st.h[i] = u(rng);
  st.gamma_e = 0.8;
  EstimatorConfig cfg;
  cfg.zeta = 0.4;
  cfg.epsilon = 1e-3;
  const double lambda = 0.7;

  const CVec gc = st.beta.cwiseProduct(st.h.cast<cplx>());
  const double fit = (r - A * st.g_s - B * gc).squaredNorm() / (2 * 0.64);
  double beta_l1 = 0, log_h = 0;
  for (int i = 0; i < 5; ++i) {
    beta_l1 += kSqrt2 * std::abs(st.beta[i]);
    log_h += 2 * std::log(st.h[i] + 1e-3);
  }
  const CVec v = oracle::cd_lasso(A, A * st.g_s, lambda / cfg.zeta);
  const double penalty = lambda * st.g_s.cwiseAbs().sum() -
                         (lambda * v.cwiseAbs().sum() + 0.5 * cfg.zeta * (A * (st.g_s - v)).squaredNorm());
  const double log_gamma = 9 * std::log(0.8);

  const ObjectiveTerms t = objective_terms(st, r, DenseOperator(A), DenseOperator(B), lambda, cfg);
  CHECK(t.fit == doctest::Approx(fit).epsilon(1e-12));
  CHECK(t.beta_l1 == doctest::Approx(beta_l1).epsilon(1e-12));
  CHECK(t.log_h == doctest::Approx(log_h).epsilon(1e-12));
  CHECK(std::abs(t.penalty - penalty) < 1e-10);
  CHECK(t.log_gamma == doctest::Approx(log_gamma).epsilon(1e-12));
  const double total = fit + beta_l1 + log_h + penalty + log_gamma;
  CHECK(std::abs(objective_value(st, r, DenseOperator(A), DenseOperator(B), lambda, cfg) - total) <
        1e-10 * std::max(1.0, std::abs(total)));

  cfg.zeta = 1e-10;
  const ObjectiveTerms l1 = objective_terms(st, r, DenseOperator(A), DenseOperator(B), lambda, cfg);
  CHECK(l1.penalty == doctest::Approx(lambda * st.g_s.cwiseAbs().sum()).epsilon(1e-6));
}

namespace {

struct Problem {
  CMat S, C;
  CVec g_s, g_c, r;
  double noise_variance;
};

Problem random_problem(Rng& rng, int rows, int n, int k, double snr_db) {
  Problem p;
  p.S = gaussian(rows, n, rng, 1.0 / rows);
  p.C = gaussian(rows, n, rng, 1.0 / rows);
  p.g_s = sparse(n, k, rng);
  p.g_c = sparse(n, k, rng);
  const CVec clean = p.S * p.g_s + p.C * p.g_c;
  p.noise_variance = clean.squaredNorm() / rows / std::pow(10.0, snr_db / 10.0);
  p.r = clean + complex_normal_vector(rng, rows, p.noise_variance);
  return p;
}

}  // namespace

TEST_CASE("estimate converges with a non-increasing objective") {
  Rng rng(50);
  for (int trial = 0; trial < 5; ++trial) {
    const Problem p = random_problem(rng, 60, 90, 4, 20.0);
    const EstimateResult res = estimate(p.r, DenseOperator(p.S), DenseOperator(p.C), p.noise_variance, {});
    CHECK(res.converged);
    CHECK(res.iterations_used <= 50);
    CHECK(res.monotonicity_violations == 0);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9);
    CHECK(res.objective_trace.size() == static_cast<std::size_t>(res.iterations_used) + 1);
    CHECK(rel_err(res.g_s_hat, p.g_s) < 0.5);
  }
}

TEST_CASE("reported penalty parameters reproduce the trace") {
  Rng rng(51);
  const Problem p = random_problem(rng, 40, 50, 3, 15.0);
  const DenseOperator S(p.S), C(p.C);
  const EstimateResult res = estimate(p.r, S, C, p.noise_variance, {});
  EstimatorConfig cfg;
  cfg.zeta = res.zeta_used;
  const double again = objective_value(res.state, p.r, S, C, res.lambda_used, cfg);
  CHECK(std::abs(again - res.objective_trace.back()) < 1e-6 * std::max(1.0, std::abs(again)));
  CHECK(std::abs(res.gamma_e_hat - res.state.gamma_e) == 0.0);
}

TEST_CASE("estimate on zero data returns zero") {
  Rng rng(52);
  const CMat A = gaussian(10, 12, rng), B = gaussian(10, 12, rng);
  for (double nv : {0.0, 0.1}) {
    const EstimateResult res = estimate(CVec::Zero(10), DenseOperator(A), DenseOperator(B), nv, {});
    CHECK(res.g_s_hat.norm() == 0.0);
    CHECK(res.g_c_hat.norm() == 0.0);
  }
}

TEST_CASE("noiseless estimate with tiny lambda recovers the channels") {
  Rng rng(53);
  const GroupingMap g = build_grouping_matrix(4, 1, GroupingMode::grouping);
  const CMat sp = qpsk_pilots(16, 2, rng), cp = qpsk_pilots(16, 2, rng);
  const ChannelPair ch = gen_sparse_isac_channels(4, 2, 4, 4, 77);
  const MeasurementSet ms = synth_observation(ch, g, sp, cp, kNoiseless, 1);
  EstimatorConfig cfg;
  cfg.lambda = 1e-10;
  const EstimateResult res = estimate(ms, cfg);
  CMat SC(ms.S.rows(), ms.S.cols() * 2);
  SC << ms.S, ms.C;
  const CVec ref = oracle::pinv_solve(SC, ms.r);
  CHECK(rel_err(res.g_s_hat, ch.g_s) < 1e-4);
  CHECK(rel_err(res.g_c_hat, ch.g_c) < 1e-4);
  CHECK(rel_err(res.g_s_hat, ref.head(10)) < 1e-4);
}

TEST_CASE("zero initialization and the mcp variant still descend") {
  Rng rng(54);
  const Problem p = random_problem(rng, 40, 50, 3, 15.0);
  EstimatorConfig zero;
  zero.init = InitKind::zero;
  const EstimateResult a = estimate(p.r, DenseOperator(p.S), DenseOperator(p.C), p.noise_variance, zero);
  CHECK(a.monotonicity_violations == 0);
  EstimatorConfig mcp;
  mcp.penalty = PenaltyKind::mcp;
  const EstimateResult b = estimate(p.r, DenseOperator(p.S), DenseOperator(p.C), p.noise_variance, mcp);
  CHECK(b.monotonicity_violations == 0);
  CHECK(b.converged);
}

TEST_CASE("trace sink writes one JSON object per iteration") {
  Rng rng(55);
  const Problem p = random_problem(rng, 30, 40, 3, 10.0);
  std::ostringstream out;
  EstimatorConfig cfg;
  cfg.trace = jsonl_trace_sink(out);
  const EstimateResult res = estimate(p.r, DenseOperator(p.S), DenseOperator(p.C), p.noise_variance, cfg);
  std::istringstream in(out.str());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("iter").get<int>() == count);
    CHECK(j.contains("objective"));
    CHECK(j.contains("gamma_e"));
    CHECK(j.contains("nnz_gs"));
    CHECK(j.contains("nnz_beta"));
    CHECK(j.at("objective").get<double>() == doctest::Approx(res.objective_trace[static_cast<std::size_t>(count)]));
    ++count;
  }
  CHECK(count == res.iterations_used + 1);
}

TEST_CASE("estimate rejects mismatched shapes") {
  const DenseOperator S(CMat::Identity(4, 4)), C(CMat::Identity(3, 3));
  CHECK_THROWS_AS(estimate(CVec::Zero(4), S, C, 0.1, {}), DimensionError);
}

TEST_CASE("operation counts are deterministic") {
  Rng rng(56);
  const Problem p = random_problem(rng, 30, 40, 3, 10.0);
  OpCounter a, b;
  estimate(p.r, DenseOperator(p.S), DenseOperator(p.C), p.noise_variance, {}, &a);
  estimate(p.r, DenseOperator(p.S), DenseOperator(p.C), p.noise_variance, {}, &b);
  CHECK(a.complex_multiplies == b.complex_multiplies);
  CHECK(a.complex_adds == b.complex_adds);
  CHECK(a.complex_multiplies > 0);
}
