#include "risisac/grouping.hpp"

#include <numbers>
#include <sstream>

namespace risisac {

GroupingMode parse_grouping_mode(const std::string& s) {
  if (s == "grouping") return GroupingMode::grouping;
  if (s == "puncturing") return GroupingMode::puncturing;
  throw std::invalid_argument("unknown grouping mode '" + s + "' (expected grouping|puncturing)");
}

PatternKind parse_pattern_kind(const std::string& s) {
  if (s == "dft") return PatternKind::dft;
  if (s == "hadamard") return PatternKind::hadamard;
  throw std::invalid_argument("unknown pattern kind '" + s + "' (expected dft|hadamard)");
}

std::string to_string(GroupingMode m) {
  return m == GroupingMode::grouping ? "grouping" : "puncturing";
}

std::string to_string(PatternKind k) { return k == PatternKind::dft ? "dft" : "hadamard"; }

int GroupingMap::row_of(int col) const {
  for (int r = 0; r < omega.rows(); ++r)
    if (omega(r, col) != 0) return r;
  return -1;
}

std::vector<int> GroupingMap::column_rows() const {
  std::vector<int> out(static_cast<std::size_t>(cols()));
  for (int c = 0; c < cols(); ++c) out[static_cast<std::size_t>(c)] = row_of(c);
  return out;
}

GroupingMap build_grouping_matrix(int L, int Q, GroupingMode mode) {
  if (L < 1) throw std::invalid_argument("RIS element count L must be >= 1");
  if (Q < 1 || L % Q != 0) {
    std::ostringstream msg;
    msg << "group size Q=" << Q << " must be a positive divisor of L=" << L;
    throw std::invalid_argument(msg.str());
  }
  GroupingMap map;
  map.mode = mode;
  map.L = L;
  map.Q = Q;
  const int groups = L / Q;
  map.omega = IMat::Zero(groups + 1, L + 1);
  map.omega(0, 0) = 1;
  for (int g = 0; g < groups; ++g) {
    const int first = 1 + g * Q;
    if (mode == GroupingMode::grouping) {
      for (int k = 0; k < Q; ++k) map.omega(g + 1, first + k) = 1;
    } else {
      map.omega(g + 1, first) = 1;
    }
  }
  return map;
}

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

ReflectionPattern build_reflection_pattern(int groups, PatternKind kind) {
  if (groups < 1) throw std::invalid_argument("group count must be >= 1");
  const int T = groups + 1;
  ReflectionPattern p;
  p.kind = kind;
  p.psi.resize(T, T);
  if (kind == PatternKind::dft) {
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < T; ++k)
        p.psi(t, k) = std::polar(1.0, -2.0 * std::numbers::pi * double(t) * double(k) / double(T));
    return p;
  }
  if (!is_power_of_two(T)) {
    std::ostringstream msg;
    msg << "hadamard pattern needs L_Q+1 to be a power of two (1, 2, 4, 8, ...); got " << T;
    throw std::invalid_argument(msg.str());
  }
  // Sylvester construction.
  p.psi(0, 0) = 1.0;
  for (int n = 1; n < T; n *= 2) {
    p.psi.block(0, n, n, n) = p.psi.block(0, 0, n, n);
    p.psi.block(n, 0, n, n) = p.psi.block(0, 0, n, n);
    p.psi.block(n, n, n, n) = -p.psi.block(0, 0, n, n);
  }
  return p;
}

CVec despread(const CVec& y, const ReflectionPattern& pattern) {
  if (y.size() != pattern.psi.rows()) {
    std::ostringstream msg;
    msg << "despread: observation length " << y.size() << " != pattern rows " << pattern.psi.rows();
    throw DimensionError(msg.str());
  }
  const CMat gram = pattern.psi.adjoint() * pattern.psi;
  return gram.ldlt().solve(pattern.psi.adjoint() * y);
}

}  // namespace risisac
