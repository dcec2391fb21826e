#pragma once

// Test-only reference computations. These deliberately take a different route
// from the library (plain enumeration, full SVD, direct loops) so that the unit
// and acceptance tests check the implementation against something independent.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// max over all 2^s sign vectors of ||Hx||_1, with no symmetry shortcut.
inline double brute_inf_to_one(const Matrix& h) {
  const auto s = h.cols();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << s); ++mask) {
    Vector x(s);
    for (Eigen::Index j = 0; j < s; ++j) x(j) = (mask >> j) & 1u ? -1.0 : 1.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) total += std::abs(h.row(i).dot(x));
    best = std::max(best, total);
  }
  return best;
}

inline Vector singular_values(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues();
}

inline double svd_stable_rank(const Matrix& a) {
  Vector sv = singular_values(a);
  return sv.squaredNorm() / (sv(0) * sv(0));
}

inline double svd_spectral_norm(const Matrix& a) { return singular_values(a)(0); }

// Condition number of A A^T from the singular values of A (rows <= cols).
inline double svd_gram_condition(const Matrix& a) {
  Vector sv = singular_values(a);
  const double smin = sv(sv.size() - 1);
  return (sv(0) * sv(0)) / (smin * smin);
}

inline double direct_column_norm(const Matrix& h) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) sq += h(i, j) * h(i, j);
    total += std::sqrt(sq);
  }
  return total;
}

inline Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

inline Matrix unit_columns(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  Matrix m = gaussian(r, c, rng);
  for (Eigen::Index j = 0; j < c; ++j) m.col(j).normalize();
  return m;
}

inline Matrix orthonormal(Eigen::Index d, Eigen::Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(d, k, rng));
  return qr.householderQ() * Matrix::Identity(d, k);
}

inline Matrix symmetric_zero_diagonal(Eigen::Index s, std::mt19937_64& rng) {
  Matrix g = gaussian(s, s, rng);
  Matrix h = 0.5 * (g + g.transpose());
  h.diagonal().setZero();
  return h;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
