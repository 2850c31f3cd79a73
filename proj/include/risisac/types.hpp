#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace risisac {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using IMat = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

using Rng = std::mt19937_64;

/// Raised for inputs that violate an operation's preconditions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver produces non-finite iterates.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Circularly-symmetric complex Gaussian sample with E|x|^2 = variance.
inline cplx complex_normal(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline CVec complex_normal_vector(Rng& rng, Eigen::Index n, double variance = 1.0) {
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_normal(rng, variance);
  return v;
}

/// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace risisac
