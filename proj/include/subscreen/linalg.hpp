#pragma once

// Matrix functionals used by the screening algorithms: spectral quantities,
// the infinity-to-one norm, and the Hermitian Grothendieck factorization.

#include <cstddef>
#include <cstdint>

#include "subscreen/common.hpp"

namespace subscreen::linalg {

/// Tolerance used wherever a basis with orthonormal columns is consumed.
inline constexpr double kOrthonormalTol = 1e-8;

/// Relative eigenvalue floor below which a Gram matrix counts as singular.
inline constexpr double kSingularRelTol = 1e-12;

/// Default size limit for exhaustive sign-vector enumeration.
inline constexpr std::size_t kDefaultExactThreshold = 20;

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// ||A||_F^2 / ||A||^2. Throws DomainError on the zero matrix.
double stable_rank(const Matrix& a);

/// Sum of the Euclidean norms of the columns.
double column_norm(const Matrix& h);

/// max ||B^T B - I|| over the columns of `b`; zero for an orthonormal frame.
double orthonormality_defect(const Matrix& b);

/// Throws ValidationError unless `b` has orthonormal columns to kOrthonormalTol.
void require_orthonormal(const Matrix& b, const char* what);

enum class NormMode { exact, bracket };

/// Two-sided estimate of ||H||_{inf->1}. `exact` means the value was obtained
/// by enumeration and lower == upper.
struct NormBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;

  /// Value to use when a conservative (never underestimating) bound is needed.
  double conservative() const { return upper; }
};

struct NormOptions {
  std::size_t exact_threshold = kDefaultExactThreshold;
  int restarts = 32;              // random sign restarts for the local search
  std::uint64_t seed = 0x5eed;    // local search stream; fixed for reproducibility
};

/// ||H||_{inf->1} = max_{x in {-1,1}^s} ||H x||_1 for square H.
///
/// `exact` enumerates sign vectors with the first coordinate fixed (x and -x
/// give the same value) in Gray-code order, so each step is a rank-one update
/// of Hx. It throws DomainError when s exceeds opts.exact_threshold.
///
/// `bracket` returns a local-search lower bound (alternating sign updates from
/// several starts) and the upper bound min(s * ||H||, sum_ij |H_ij|).
NormBracket inf_to_one_norm(const Matrix& h, NormMode mode, const NormOptions& opts = {});

/// Exact when s <= opts.exact_threshold, bracket otherwise.
NormBracket inf_to_one_norm_auto(const Matrix& h, const NormOptions& opts = {});

/// H = D T D with D = diag(diag), diag >= 0, sum diag^2 = 1.
struct FactorizationResult {
  Vector diag;                        // d_j = sqrt(w_j)
  Matrix core;                        // T, zero outside the support of diag
  double certified_norm_bound = 0.0;  // ||T|| computed from `core`
  double level = 0.0;                 // smallest feasible bisection level c
  NormBracket reference;              // ||H||_{inf->1} used to bracket c
  bool feasible = true;               // false: no level <= 2 ||H||_{inf->1} certified
  int probes = 0;                     // feasibility probes run by the bisection
};

struct FactorizationOptions {
  double tol = 1e-6;        // relative bisection width on c
  int max_steps = 5000;     // subgradient steps per feasibility probe
  NormOptions norm{};
};

/// Hermitian Grothendieck (Pisier) factorization of a symmetric H.
///
/// For a level c, feasibility means some w on the simplex has
/// c diag(w) - H >= 0 and c diag(w) + H >= 0; then T = D^+ H D^+ with
/// D = diag(sqrt(w)) satisfies ||T|| <= c. Feasibility is probed by projected
/// subgradient descent on max(lmax(H - cW), lmax(-H - cW)) over the simplex,
/// and c is bisected on [||H||_{inf->1}, 2 ||H||_{inf->1}].
FactorizationResult grothendieck_factorize(const Matrix& h, const FactorizationOptions& opts = {});

/// lmax(A A^T) / lmin(A A^T); +infinity when lmin <= 1e-12 lmax.
/// Throws DomainError when `a_s` has no columns.
double gram_condition_number(const Matrix& a_s);

/// Condition number of a symmetric positive semidefinite matrix, with the
/// same singular sentinel as gram_condition_number.
double psd_condition_number(const Matrix& gram);

/// ||B1 B1^T - B2 B2^T||, the sin-theta distance between column spans.
double principal_angle_distance(const Matrix& b1, const Matrix& b2);

/// Smallest eigenvalue exceeding rank_tol * lmax of a symmetric PSD matrix.
double min_nonzero_eigenvalue(const Matrix& s, double rank_tol);

/// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);

/// Haar-distributed d x k matrix with orthonormal columns (Gaussian QR with
/// the signs of diag(R) folded into Q).
Matrix haar_orthonormal(Eigen::Index d, Eigen::Index k, Rng& rng);

/// True when `a` is symmetric to a relative tolerance.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);

}  // namespace subscreen::linalg
