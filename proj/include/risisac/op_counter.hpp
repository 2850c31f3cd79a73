#pragma once

#include <cstdint>
#include <vector>

namespace risisac {

/// Arithmetic-operation tally for one estimator run. Counts are in complex
/// multiplies/adds; a null counter pointer disables counting.
struct OpCounter {
  std::uint64_t complex_multiplies = 0;
  std::uint64_t complex_adds = 0;
  std::uint64_t matrix_inversions = 0;
  /// Sum over inversions of dim^3, the dominant factorization cost.
  std::uint64_t inversion_cost = 0;
  std::vector<std::uint64_t> inversion_dims;

  void mul(std::uint64_t n) { complex_multiplies += n; }
  void add(std::uint64_t n) { complex_adds += n; }
  void inversion(std::uint64_t dim) {
    ++matrix_inversions;
    inversion_cost += dim * dim * dim;
    inversion_dims.push_back(dim);
  }
  void reset() { *this = OpCounter{}; }
};

inline void count_mul(OpCounter* c, std::uint64_t n) {
  if (c) c->mul(n);
}
inline void count_add(OpCounter* c, std::uint64_t n) {
  if (c) c->add(n);
}

}  // namespace risisac
