#pragma once

// Source screening: genie-aided and empirical subpopulation search, the
// admissibility check for a selected subpopulation, and baseline selectors.
//
// Both searches run the same randomized batch loop on a column-standardized
// k x M (genie) or d x M (empirical) matrix A. Each round draws s surviving
// columns, accepts the draw when ||A_S^T A_S - I||_{inf->1} <= s/8, factorizes
// that matrix as D T D, keeps the columns with d_j^2 <= 2/s and retires them.
// For an accepted batch, ||A_{S_t}^T A_{S_t} - I|| <= ||T|| (2/s) <= 0.5, so
// every batch Gram has eigenvalues in [0.5, 1.5].

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subscreen/common.hpp"
#include "subscreen/estimators.hpp"
#include "subscreen/linalg.hpp"

namespace subscreen::screening {

/// Smallest c with 320 (c + sqrt(2c)) <= 0.5, about 1.219e-6.
double theoretical_c();

struct ScreeningConfig {
  double c = 1.0;       // batch-size constant; theoretical_c() gives the proven regime
  double delta = 0.1;   // target failure probability
  std::size_t exact_norm_threshold = linalg::kDefaultExactThreshold;
  bool normalize_columns = true;
  double kappa_max = 3.0;        // admissibility: condition number ceiling
  double size_ratio_min = 0.5;   // admissibility: |S| >= ratio * k * lambda_min(A A^T)
  // Batch size is s = ceil(c * st.rank(A)), clamped to [floor, remaining]
  // with floor = k when clamp_batch_to_latent_dim is set and 1 otherwise.
  bool clamp_batch_to_latent_dim = true;
  double norm_test_ratio = 0.125;  // accept when ||H||_{inf->1} <= ratio * s
  double column_norm_warn_factor = 10.0;  // warn when ||A||^2 > factor * M / k
  linalg::FactorizationOptions factorization{};

  /// Throws ConfigError.
  void validate() const;
};

enum class TerminationReason { stable_rank_floor, round_cap, low_stable_rank, inner_loop_exhausted };

std::string to_string(TerminationReason r);
TerminationReason termination_from_string(const std::string& name);

struct BatchCertificate {
  std::size_t round = 0;
  IndexSet candidate;              // the accepted draw, original column indices
  linalg::NormBracket inf_to_one;  // ||A_cand^T A_cand - I||_{inf->1}
  double factor_norm = 0.0;        // ||T|| of the factorization
  double deviation = 0.0;          // ||A_{S_t}^T A_{S_t} - I||, recomputed
  double batch_kappa = 1.0;        // condition number of A_{S_t}^T A_{S_t}
  bool factorization_feasible = true;
};

struct SelectionResult {
  std::string method;
  std::uint64_t seed = 0;
  IndexSet selected;                        // sorted union of batches
  std::vector<IndexSet> batches;            // S_t, each sorted
  std::vector<std::size_t> attempts_per_round;
  std::vector<BatchCertificate> certificates;  // one per batch
  TerminationReason reason = TerminationReason::round_cap;
  std::size_t t_star = 0;

  // Diagnostics of the run.
  std::size_t batch_size = 0;   // s
  double stable_rank = 0.0;
  double lambda_min = 0.0;      // of A A^T (genie) or lambda_min^+ (empirical)
  double c_tilde = 0.0;
  std::size_t round_cap = 0;
  std::size_t attempt_cap = 0;
  Vector column_scales;         // norms of the columns before standardization
  std::vector<std::string> warnings;
};

/// Column-standardized head matrix with cached norms and stable rank.
struct HeadMatrix {
  Matrix columns;
  Vector norms;          // original column norms
  double stable_rank = 0.0;
  IndexSet usable;       // columns with nonzero norm

  /// Standardize when `normalize`, otherwise require unit columns to 1e-8
  /// (ValidationError).
  static HeadMatrix from(const Matrix& a, bool normalize);
};

/// Genie-aided search on the true heads (k x M).
SelectionResult genie_search(const Matrix& heads, const ScreeningConfig& cfg, Rng& rng);

/// Empirical search on A_hat = zbar + ztilde. Throws DomainError when M < k.
SelectionResult empirical_search(const estimators::MomentProxies& proxies, std::size_t latent_dim,
                                 const ScreeningConfig& cfg, Rng& rng);

struct AdmissibilityReport {
  bool admissible = false;
  double kappa = 0.0;       // condition number of sum_{i in S} a_i a_i^T
  double size_floor = 0.0;  // size_ratio_min * k * lambda_min(A A^T)
  std::size_t size = 0;
};

/// Checks a subpopulation against the standardized heads.
AdmissibilityReport is_admissible(const IndexSet& selected, const Matrix& heads, const ScreeningConfig& cfg);

/// `quota` sources drawn uniformly without replacement from each label group.
/// Throws DomainError when quota exceeds the smallest group.
IndexSet balanced_baseline(std::span<const int> labels, std::size_t quota, Rng& rng);

/// Smallest group size among the labels.
std::size_t smallest_group(std::span<const int> labels);

/// Uniform sample of m of M indices. Throws DomainError when m > M.
IndexSet random_baseline(std::size_t num_sources, std::size_t m, Rng& rng);

/// The m largest losses; ties go to the lower index. Throws DomainError when m > M.
IndexSet power_of_choice_baseline(std::span<const double> local_losses, std::size_t m);

/// Mean squared residual of each source after a least-squares head refit on `basis`.
std::vector<double> local_losses(std::span<const estimators::SourceDataset> sources, const Matrix& basis);

}  // namespace subscreen::screening
