#include "risisac/measurement_operator.hpp"

#include <algorithm>
#include <sstream>

namespace risisac {

CVec DenseOperator::apply(const CVec& x, OpCounter* counter) const {
  if (x.size() != A_.cols()) throw DimensionError("DenseOperator::apply: length mismatch");
  count_mul(counter, static_cast<std::uint64_t>(A_.size()));
  count_add(counter, static_cast<std::uint64_t>(A_.size()));
  return A_ * x;
}

CVec DenseOperator::adjoint(const CVec& y, OpCounter* counter) const {
  if (y.size() != A_.rows()) throw DimensionError("DenseOperator::adjoint: length mismatch");
  count_mul(counter, static_cast<std::uint64_t>(A_.size()));
  count_add(counter, static_cast<std::uint64_t>(A_.size()));
  return A_.adjoint() * y;
}

cplx DenseOperator::column_dot(Eigen::Index j, const CVec& y, OpCounter* counter) const {
  count_mul(counter, static_cast<std::uint64_t>(A_.rows()));
  count_add(counter, static_cast<std::uint64_t>(A_.rows()));
  return A_.col(j).dot(y);
}

void DenseOperator::axpy_column(Eigen::Index j, cplx alpha, CVec& y, OpCounter* counter) const {
  count_mul(counter, static_cast<std::uint64_t>(A_.rows()));
  count_add(counter, static_cast<std::uint64_t>(A_.rows()));
  y += alpha * A_.col(j);
}

double DenseOperator::spectral_norm2() const {
  if (A_.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(A_);
  const double s = svd.singularValues()(0);
  return s * s;
}

KroneckerOperator::KroneckerOperator(const GroupingMap& grouping, CMat pilots)
    : pilots_(std::move(pilots)),
      omega_row_(grouping.column_rows()),
      omega_count_(static_cast<std::size_t>(grouping.rows()), 0),
      row_block_(grouping.rows()),
      col_rows_(grouping.cols()) {
  if (pilots_.rows() < 1) throw DimensionError("at least one pilot block is required");
  for (int r : omega_row_)
    if (r >= 0) ++omega_count_[static_cast<std::size_t>(r)];
}

CVec KroneckerOperator::apply(const CVec& x, OpCounter* counter) const {
  if (x.size() != cols()) throw DimensionError("KroneckerOperator::apply: length mismatch");
  const Eigen::Index M = antennas();
  Eigen::Map<const CMat> G(x.data(), col_rows_, M);
  // Sum the columns sharing an omega row, then one (rows x M)(M x B) product.
  CMat grouped = CMat::Zero(row_block_, M);
  for (Eigen::Index l = 0; l < col_rows_; ++l) {
    const int r = omega_row_[static_cast<std::size_t>(l)];
    if (r >= 0) grouped.row(r) += G.row(l);
  }
  CVec y(rows());
  Eigen::Map<CMat>(y.data(), row_block_, blocks()).noalias() = grouped * pilots_.transpose();
  count_mul(counter, static_cast<std::uint64_t>(row_block_ * M * blocks()));
  count_add(counter, static_cast<std::uint64_t>(col_rows_ * M + row_block_ * M * blocks()));
  return y;
}

CVec KroneckerOperator::adjoint(const CVec& y, OpCounter* counter) const {
  if (y.size() != rows()) throw DimensionError("KroneckerOperator::adjoint: length mismatch");
  const Eigen::Index M = antennas();
  const CMat Z = Eigen::Map<const CMat>(y.data(), row_block_, blocks()) * pilots_.conjugate();
  CVec x(cols());
  Eigen::Map<CMat> G(x.data(), col_rows_, M);
  for (Eigen::Index l = 0; l < col_rows_; ++l) {
    const int r = omega_row_[static_cast<std::size_t>(l)];
    if (r >= 0)
      G.row(l) = Z.row(r);
    else
      G.row(l).setZero();
  }
  count_mul(counter, static_cast<std::uint64_t>(row_block_ * M * blocks()));
  count_add(counter, static_cast<std::uint64_t>(row_block_ * M * blocks()));
  return x;
}

double KroneckerOperator::column_norm2(Eigen::Index j) const {
  const Eigen::Index l = j % col_rows_;
  if (omega_row_[static_cast<std::size_t>(l)] < 0) return 0.0;
  return pilots_.col(j / col_rows_).squaredNorm();
}

cplx KroneckerOperator::column_dot(Eigen::Index j, const CVec& y, OpCounter* counter) const {
  const Eigen::Index l = j % col_rows_;
  const Eigen::Index m = j / col_rows_;
  const int r = omega_row_[static_cast<std::size_t>(l)];
  if (r < 0) return {};
  cplx acc{};
  for (Eigen::Index b = 0; b < blocks(); ++b) acc += std::conj(pilots_(b, m)) * y[b * row_block_ + r];
  count_mul(counter, static_cast<std::uint64_t>(blocks()));
  count_add(counter, static_cast<std::uint64_t>(blocks()));
  return acc;
}

void KroneckerOperator::axpy_column(Eigen::Index j, cplx alpha, CVec& y, OpCounter* counter) const {
  const Eigen::Index l = j % col_rows_;
  const Eigen::Index m = j / col_rows_;
  const int r = omega_row_[static_cast<std::size_t>(l)];
  if (r < 0) return;
  for (Eigen::Index b = 0; b < blocks(); ++b) y[b * row_block_ + r] += alpha * pilots_(b, m);
  count_mul(counter, static_cast<std::uint64_t>(blocks()));
  count_add(counter, static_cast<std::uint64_t>(blocks()));
}

double KroneckerOperator::spectral_norm2() const {
  // S^H S = (sum_b conj(s_b) s_b^T) (x) (omega^T omega); omega has disjoint
  // column supports, so the second factor's top eigenvalue is its largest row count.
  const CMat P = pilots_.adjoint() * pilots_;
  Eigen::SelfAdjointEigenSolver<CMat> eig(P, Eigen::EigenvaluesOnly);
  const int widest = *std::max_element(omega_count_.begin(), omega_count_.end());
  return eig.eigenvalues().maxCoeff() * widest;
}

CMat KroneckerOperator::dense() const {
  CMat D = CMat::Zero(rows(), cols());
  for (Eigen::Index b = 0; b < blocks(); ++b)
    for (Eigen::Index m = 0; m < antennas(); ++m)
      for (Eigen::Index l = 0; l < col_rows_; ++l) {
        const int r = omega_row_[static_cast<std::size_t>(l)];
        if (r >= 0) D(b * row_block_ + r, m * col_rows_ + l) = pilots_(b, m);
      }
  return D;
}

MeasurementOperators build_measurement_operators(const GroupingMap& grouping,
                                                 const CMat& sensing_pilots,
                                                 const CMat& comm_pilots, int M) {
  if (sensing_pilots.rows() < 1 || sensing_pilots.rows() != comm_pilots.rows())
    throw DimensionError("sensing and communication pilots need the same nonzero block count");
  if (sensing_pilots.cols() != M || comm_pilots.cols() != M) {
    std::ostringstream msg;
    msg << "pilot length " << sensing_pilots.cols() << "/" << comm_pilots.cols()
        << " does not match antenna count M=" << M;
    throw DimensionError(msg.str());
  }
  return {KroneckerOperator(grouping, sensing_pilots).dense(),
          KroneckerOperator(grouping, comm_pilots).dense()};
}

}  // namespace risisac
