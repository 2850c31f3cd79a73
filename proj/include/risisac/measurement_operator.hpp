#pragma once

#include <vector>

#include "risisac/grouping.hpp"
#include "risisac/op_counter.hpp"
#include "risisac/types.hpp"

namespace risisac {

/// Linear map with the column access needed by the coordinate updates.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual CVec apply(const CVec& x, OpCounter* counter = nullptr) const = 0;
  virtual CVec adjoint(const CVec& y, OpCounter* counter = nullptr) const = 0;
  /// Squared l2 norm of column j.
  virtual double column_norm2(Eigen::Index j) const = 0;
  /// c_j^H y.
  virtual cplx column_dot(Eigen::Index j, const CVec& y, OpCounter* counter = nullptr) const = 0;
  /// y += alpha * c_j.
  virtual void axpy_column(Eigen::Index j, cplx alpha, CVec& y, OpCounter* counter = nullptr) const = 0;
  /// Largest squared singular value.
  virtual double spectral_norm2() const = 0;
};

/// Unstructured matrix, used for tests and small problems.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(CMat A) : A_(std::move(A)) {}

  Eigen::Index rows() const override { return A_.rows(); }
  Eigen::Index cols() const override { return A_.cols(); }
  CVec apply(const CVec& x, OpCounter* counter = nullptr) const override;
  CVec adjoint(const CVec& y, OpCounter* counter = nullptr) const override;
  double column_norm2(Eigen::Index j) const override { return A_.col(j).squaredNorm(); }
  cplx column_dot(Eigen::Index j, const CVec& y, OpCounter* counter = nullptr) const override;
  void axpy_column(Eigen::Index j, cplx alpha, CVec& y, OpCounter* counter = nullptr) const override;
  double spectral_norm2() const override;
  const CMat& matrix() const { return A_; }

 private:
  CMat A_;
};

/// Stacked Kronecker operator whose row block b is pilots[b]^T (x) omega.
///
/// Acts on vec(G), G of shape (L+1) x M stored column-major, so entry
/// (l, m) sits at index m*(L+1) + l. Only the structure is stored: applying
/// the operator costs B*(L_Q+1)*M complex multiplies plus (L+1)*M adds,
/// rather than the dense B*(L_Q+1)*(L+1)*M.
class KroneckerOperator final : public LinearOperator {
 public:
  KroneckerOperator() = default;
  /// `pilots` is B x M; row b holds the block-b pilot vector.
  KroneckerOperator(const GroupingMap& grouping, CMat pilots);

  Eigen::Index rows() const override { return blocks() * row_block_; }
  Eigen::Index cols() const override { return col_rows_ * antennas(); }
  Eigen::Index blocks() const { return pilots_.rows(); }
  Eigen::Index antennas() const { return pilots_.cols(); }
  Eigen::Index row_block() const { return row_block_; }
  const CMat& pilots() const { return pilots_; }

  CVec apply(const CVec& x, OpCounter* counter = nullptr) const override;
  CVec adjoint(const CVec& y, OpCounter* counter = nullptr) const override;

  double column_norm2(Eigen::Index j) const override;
  /// c_j^H y without forming the column (B multiplies).
  cplx column_dot(Eigen::Index j, const CVec& y, OpCounter* counter = nullptr) const override;
  void axpy_column(Eigen::Index j, cplx alpha, CVec& y, OpCounter* counter = nullptr) const override;

  /// From the Kronecker factorization of S^H S.
  double spectral_norm2() const override;

  CMat dense() const;

 private:
  CMat pilots_;
  std::vector<int> omega_row_;   // omega row per augmented RIS entry, -1 if unused
  std::vector<int> omega_count_; // ones per omega row
  Eigen::Index row_block_ = 0;
  Eigen::Index col_rows_ = 0;
};

/// Dense S and C as stacked Kronecker products.
struct MeasurementOperators {
  CMat S;
  CMat C;
};

/// Builds S (from sensing pilots) and C (from communication pilots); both
/// pilot matrices are B x M with row b holding block b.
MeasurementOperators build_measurement_operators(const GroupingMap& grouping,
                                                 const CMat& sensing_pilots,
                                                 const CMat& comm_pilots, int M);

}  // namespace risisac
