#pragma once

// Synthetic multi-source linear regression populations.
//
// Source i draws covariates x ~ N(0, Gamma_i) and responses y = x^T theta_i + xi
// with xi ~ N(0, sigma^2), where Gamma_i theta_i = B alpha_i for a shared
// orthonormal basis B (d x k) and a per-source head alpha_i (k).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subscreen/common.hpp"

namespace subscreen::simgen {

enum class Regime { orthogonal, clustered, hetero_gaussian };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& name);

struct PopulationConfig {
  std::size_t num_sources = 100;  // M
  std::size_t ambient_dim = 30;   // d
  std::size_t latent_dim = 6;     // k
  // Per-source sample sizes are uniform on the integers [n_lo, n_hi].
  // Zero means the default [ceil(d/3), d].
  std::size_t n_lo = 0;
  std::size_t n_hi = 0;
  Regime regime = Regime::clustered;
  double cluster_prob = 0.2;  // P(G_i = 1), clustered regime
  // Orthogonal regime: number of sources carrying each distinct head,
  // nonincreasing, summing to num_sources. Empty means an even split.
  std::vector<std::size_t> multiplicities;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  // When false, sample sizes come from `size_seed` instead of `seed`, so they
  // stay fixed while the rest of the population is redrawn.
  bool resample_sizes = true;
  std::uint64_t size_seed = 0;

  std::size_t sample_size_lo() const;
  std::size_t sample_size_hi() const;
  /// Multiplicities with the even-split default applied.
  std::vector<std::size_t> head_multiplicities() const;
  /// Throws ConfigError.
  void validate() const;
};

struct GroundTruth {
  Matrix shared_basis;              // B, d x k, orthonormal
  Matrix heads;                     // k x M, columns alpha_i
  std::vector<Matrix> covariances;  // Gamma_i, d x d SPD
  double noise_std = 1.0;
  std::optional<std::vector<int>> cluster_labels;  // 0-based group id per source
  Matrix theta;                     // d x M, theta_i = Gamma_i^{-1} B alpha_i

  std::size_t num_sources() const { return static_cast<std::size_t>(heads.cols()); }
  std::size_t ambient_dim() const { return static_cast<std::size_t>(shared_basis.rows()); }
  std::size_t latent_dim() const { return static_cast<std::size_t>(shared_basis.cols()); }

  /// max_i ||Gamma_i theta_i - B alpha_i||_inf; zero up to rounding by construction.
  double reconstruction_defect() const;
};

struct SourceDataset {
  Matrix covariates;  // n x d
  Vector responses;   // n
  std::size_t source_id = 0;

  std::size_t size() const { return static_cast<std::size_t>(responses.size()); }
};

struct Population {
  PopulationConfig config;
  GroundTruth truth;
  std::vector<std::size_t> sample_sizes;
  std::vector<SourceDataset> sources;

  std::size_t total_samples() const;
};

struct ClusteredHeads {
  Matrix heads;
  std::vector<int> labels;  // 0 for G = 1 (first half of the latent space), 1 for G = 2
};

/// Group 0 with probability g, heads N(0, diag(1_{k/2}, 0_{k/2})); group 1
/// heads N(0, diag(0_{k/2}, 1_{k/2})). Throws ConfigError for odd k.
ClusteredHeads sample_heads_clustered(std::size_t num_sources, std::size_t latent_dim, double g, Rng& rng);

/// Psi = (U + U^T)/2 + 3 I with U_ij ~ Uniform[0,1), rescaled to trace k.
Matrix hetero_gaussian_covariance(std::size_t latent_dim, Rng& rng);

/// One draw from N(0, psi).
Vector sample_gaussian_head(const Matrix& psi, Rng& rng);

/// alpha_i ~ N(0, Psi_i) with a fresh Psi_i per source.
Matrix sample_heads_hetero_gaussian(std::size_t num_sources, std::size_t latent_dim, Rng& rng);

struct OrthogonalHeads {
  Matrix heads;
  Matrix distinct;          // k x k orthonormal, column j is the j-th distinct head
  std::vector<int> labels;  // distinct head index per source
};

/// k orthonormal unit heads (Haar frame); head j is carried by multiplicities[j]
/// consecutive sources. Throws ConfigError on a size mismatch.
OrthogonalHeads sample_heads_orthogonal(std::size_t latent_dim, std::span<const std::size_t> multiplicities,
                                        Rng& rng);

/// Basis, heads, isotropic covariances (1/d) I and theta for `config`.
GroundTruth sample_ground_truth(const PopulationConfig& config, Rng& rng);

/// n_i uniform on [n_lo, n_hi] for each source.
std::vector<std::size_t> sample_sizes(const PopulationConfig& config, Rng& rng);

/// n draws of (x, y) for one source. Throws ConfigError when n < 2.
SourceDataset generate_source_data(const GroundTruth& truth, std::size_t source_id, std::size_t n, Rng& rng);

/// (1/N) sum_i n_i alpha_i alpha_i^T with N = sum_i n_i.
Matrix diversity_matrix(const Matrix& heads, std::span<const std::size_t> sample_sizes);

/// Full population from config.seed: ground truth, sizes, and per-source data,
/// each from its own derived stream so sources can be generated independently.
Population sample_population(const PopulationConfig& config);

/// CSV with header source_id,row_id,x_1..x_d,y plus `<path>.json` holding the
/// config, sample sizes and the shared basis.
void write_population(const Population& population, const std::string& csv_path);

}  // namespace subscreen::simgen
