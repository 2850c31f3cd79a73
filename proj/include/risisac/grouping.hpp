#pragma once

#include <vector>

#include "risisac/types.hpp"

namespace risisac {

enum class GroupingMode { grouping, puncturing };
enum class PatternKind { dft, hadamard };

GroupingMode parse_grouping_mode(const std::string& s);
PatternKind parse_pattern_kind(const std::string& s);
std::string to_string(GroupingMode m);
std::string to_string(PatternKind k);

/// Binary subgroup mapping between the L+1 augmented RIS entries (index 0 is
/// the direct path) and the L_Q+1 trained rows.
struct GroupingMap {
  GroupingMode mode = GroupingMode::grouping;
  int L = 0;
  int Q = 1;
  IMat omega;  // (L_Q + 1) x (L + 1)

  int groups() const { return L / Q; }
  int rows() const { return groups() + 1; }
  int cols() const { return L + 1; }

  /// Row holding the 1 of column `col`, or -1 if the column is zero.
  int row_of(int col) const;
  /// Per-column row lookup, cached for the operator kernels.
  std::vector<int> column_rows() const;
};

/// Unit-modulus orthogonal training pattern, T x T with T = L_Q + 1.
struct ReflectionPattern {
  PatternKind kind = PatternKind::dft;
  CMat psi;

  Eigen::Index slots() const { return psi.rows(); }
};

GroupingMap build_grouping_matrix(int L, int Q, GroupingMode mode);

ReflectionPattern build_reflection_pattern(int groups, PatternKind kind);

/// LS de-spreading r = (psi^H psi)^{-1} psi^H y.
CVec despread(const CVec& y, const ReflectionPattern& pattern);

}  // namespace risisac
