#pragma once

// Spectral estimators of the shared subspace and the split moment proxies
// consumed by empirical screening.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subscreen/common.hpp"
#include "subscreen/simgen.hpp"

namespace subscreen::estimators {

using simgen::SourceDataset;

/// Per-source moment vectors from two disjoint halves of the sample.
struct MomentSplit {
  Vector zbar;    // (1/h) sum_{j <= h} y_j x_j, h = floor(n/2)
  Vector ztilde;  // (1/(n-h)) sum_{j > h} y_j x_j
};

struct MomentProxies {
  Matrix zbar;        // d x M
  Matrix ztilde;      // d x M
  Matrix a_hat;       // zbar + ztilde
  Matrix z_hat;       // sum_i zbar_i ztilde_i^T
  Matrix z_weighted;  // (1/N) sum_i n_i zbar_i ztilde_i^T
  std::vector<std::size_t> sample_sizes;
};

struct SubspaceEstimate {
  Matrix basis;                // d x k, orthonormal
  Vector spectrum;             // k leading eigenvalue magnitudes, nonincreasing
  std::string estimator_name;
  bool degenerate = false;     // |lambda_k| and |lambda_{k+1}| tie within 1e-12
  std::string warning;
};

enum class EstimatorKind { split_averaging, mom, dfht };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

/// Throws ValidationError when the dataset has fewer than two rows.
MomentSplit local_moment_split(const SourceDataset& ds);

/// Throws ValidationError on an empty list or inconsistent dimensions.
MomentProxies build_moment_proxies(std::span<const SourceDataset> sources);

/// Top-k eigenvectors of (Z + Z^T)/2, Z = (1/N) sum_i n_i zbar_i ztilde_i^T.
SubspaceEstimate split_averaging_estimate(std::span<const SourceDataset> sources, std::size_t k);

/// Top-k eigenvectors of (1/N) sum_ij y_ij^2 x_ij x_ij^T.
SubspaceEstimate mom_estimate(std::span<const SourceDataset> sources, std::size_t k);

/// Dispatch by kind. EstimatorKind::dfht is a reserved slot and throws Unsupported.
SubspaceEstimate estimate(EstimatorKind kind, std::span<const SourceDataset> sources, std::size_t k);

/// Orthonormal eigenvectors of a symmetric matrix for its k largest
/// |eigenvalues|; ties are broken by eigenvalue index.
SubspaceEstimate top_eigenvectors_by_magnitude(const Matrix& symmetric, std::size_t k, std::string name);

}  // namespace subscreen::estimators
