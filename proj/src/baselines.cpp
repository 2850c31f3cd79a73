#include "risisac/baselines.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace risisac {

EstimateResult ls_estimate(const CVec& r, const CMat& S, const CMat& C, OpCounter* counter) {
  if (S.rows() != r.size() || C.rows() != r.size())
    throw DimensionError("ls_estimate: operator rows do not match the observation length");
  const Eigen::Index n_s = S.cols();
  CMat A(r.size(), n_s + C.cols());
  A << S, C;

  EstimateResult out;
  CVec x = CVec::Zero(A.cols());
  if (A.size() > 0) {
    // Pseudo-inverse through the smaller Gram matrix: x = A^H (A A^H)^+ r when
    // wide, (A^H A)^+ A^H r when tall.
    const bool wide = A.rows() < A.cols();
    const CMat gram = wide ? CMat(A * A.adjoint()) : CMat(A.adjoint() * A);
    const CVec rhs = wide ? r : CVec(A.adjoint() * r);
    Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
    const RVec& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    const double cutoff = static_cast<double>(gram.rows()) * Eigen::NumTraits<double>::epsilon() * top;
    RVec inv = RVec::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
    const CMat& V = eig.eigenvectors();
    const CVec z = V * (inv.cast<cplx>().asDiagonal() * (V.adjoint() * rhs));
    x = wide ? CVec(A.adjoint() * z) : z;

    const double bottom = ev.minCoeff();
    const double cond = top > 0.0 && bottom > cutoff ? std::sqrt(top / bottom) : std::numeric_limits<double>::infinity();
    if (top > 0.0 && cond > kLsConditionWarning) {
      std::ostringstream msg;
      msg << "stacked LS system is ill-conditioned (cond=" << cond << ")";
      out.warning = msg.str();
    }
    const auto rows = static_cast<std::uint64_t>(A.rows());
    const auto cols = static_cast<std::uint64_t>(A.cols());
    const auto d = static_cast<std::uint64_t>(gram.rows());
    // Gram product, the two matrix-vector products, and the d x d inversion.
    count_mul(counter, rows * cols * d + 2 * rows * cols);
    count_add(counter, rows * cols * d + 2 * rows * cols);
    if (counter) counter->inversion(d);
  }
  out.g_s_hat = x.head(n_s);
  out.g_c_hat = x.tail(C.cols());
  out.converged = true;
  out.iterations_used = 1;
  const CVec res = r - A * x;
  out.gamma_e_hat = r.size() > 0 ? std::sqrt(res.squaredNorm() / static_cast<double>(r.size())) : 0.0;
  return out;
}

EstimateResult ls_estimate(const MeasurementSet& measurements, OpCounter* counter) {
  return ls_estimate(measurements.r, measurements.S, measurements.C, counter);
}

double nmse(const CVec& g_hat, const CVec& g_true) {
  if (g_hat.size() != g_true.size()) {
    std::ostringstream msg;
    msg << "nmse: length " << g_hat.size() << " vs " << g_true.size();
    throw DimensionError(msg.str());
  }
  const double denom = g_true.squaredNorm();
  if (!(denom > 0.0)) throw std::invalid_argument("nmse: reference vector is all zero");
  return (g_hat - g_true).squaredNorm() / denom;
}

CVec project_observable(const CVec& g, const GroupingMap& grouping, int M) {
  const Eigen::Index cols = grouping.cols();
  const Eigen::Index rows = grouping.rows();
  if (M < 1 || g.size() != cols * M) throw DimensionError("project_observable: length mismatch");
  const std::vector<int> row = grouping.column_rows();
  CVec out = CVec::Zero(rows * M);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index l = 0; l < cols; ++l) {
      const int r = row[static_cast<std::size_t>(l)];
      if (r >= 0) out[m * rows + r] += g[m * cols + l];
    }
  return out;
}

double observable_nmse(const CVec& g_hat, const CVec& g_true, const GroupingMap& grouping, int M) {
  return nmse(project_observable(g_hat, grouping, M), project_observable(g_true, grouping, M));
}

nlohmann::json CountReport::to_json() const {
  return {{"mul", mul},
          {"add", add},
          {"inversions", inversions},
          {"inversion_cost", inversion_cost},
          {"inv_dims", inv_dims}};
}

CountReport count_report(const OpCounter& counter) {
  return {counter.complex_multiplies, counter.complex_adds, counter.matrix_inversions, counter.inversion_cost,
          counter.inversion_dims};
}

nlohmann::json summary_json(const std::string& method, const RunDims& dims, const CountReport& counts,
                            double nmse_s, double nmse_c) {
  return {{"method", method},
          {"dims", {{"L", dims.L}, {"M", dims.M}, {"Q", dims.Q}, {"B", dims.B}}},
          {"counts", counts.to_json()},
          {"nmse_s", nmse_s},
          {"nmse_c", nmse_c}};
}

}  // namespace risisac
