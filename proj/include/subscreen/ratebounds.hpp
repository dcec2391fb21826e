#pragma once

// Closed-form subspace-error rates with absolute constants set to one. Only
// ratios between configurations are meaningful.

#include <vector>

namespace subscreen::ratebounds {

struct RateInputs {
  double d = 0, k = 0, M = 0, N = 0;
  double lambda1 = 0, lambdak = 0;  // extreme eigenvalues of the diversity matrix
  double S_size = 0;                // |S|, for the balanced genie rate
  std::vector<double> beta;         // beta_j = m_j / N

  /// Throws DomainError on nonpositive eigenvalues, lambda1 < lambdak or N < M.
  void validate() const;
};

/// min(1, sqrt(d lambda1 / (N lambdak^2)) + sqrt(M d / (N^2 lambdak^2))).
double sota_upper_general(const RateInputs& in);

/// min(1, sqrt(d / (N lambdak)) + sqrt(M d / (N^2 lambdak^2))).
double sota_lower_general(const RateInputs& in);

/// sqrt(d / (N beta_k)) + sqrt(|S| d / (N^2 beta_k^2)) with beta_k = min beta.
/// Not clamped. Throws DomainError when beta is empty or nonpositive.
double genie_balanced_upper(const RateInputs& in);

/// sqrt(d k / N), the rate when lambda1 = lambdak = 1/k.
double well_represented(double d, double k, double N);

}  // namespace subscreen::ratebounds
