#include "subscreen/ratebounds.hpp"

#include <algorithm>
#include <cmath>

#include "subscreen/common.hpp"

namespace subscreen::ratebounds {

namespace {

double m_term(const RateInputs& in, double m, double lam) { return std::sqrt(m * in.d / (in.N * in.N * lam * lam)); }

}  // namespace

void RateInputs::validate() const {
  if (!(d > 0 && k > 0 && M > 0 && N > 0)) throw DomainError("rate inputs need positive d, k, M, N");
  if (N < M) throw DomainError("rate inputs need N >= M");
  if (!(lambdak > 0)) throw DomainError("lambda_k must be positive");
  if (lambda1 < lambdak) throw DomainError("lambda_1 must be >= lambda_k");
}

double sota_upper_general(const RateInputs& in) {
  in.validate();
  const double t1 = std::sqrt(in.d * in.lambda1 / (in.N * in.lambdak * in.lambdak));
  return std::min(1.0, t1 + m_term(in, in.M, in.lambdak));
}

double sota_lower_general(const RateInputs& in) {
  in.validate();
  const double t1 = std::sqrt(in.d / (in.N * in.lambdak));
  return std::min(1.0, t1 + m_term(in, in.M, in.lambdak));
}

double genie_balanced_upper(const RateInputs& in) {
  if (in.beta.empty()) throw DomainError("genie_balanced_upper needs beta");
  const double bk = *std::min_element(in.beta.begin(), in.beta.end());
  if (!(bk > 0)) throw DomainError("beta entries must be positive");
  if (!(in.d > 0 && in.N > 0)) throw DomainError("genie_balanced_upper needs positive d and N");
  return std::sqrt(in.d / (in.N * bk)) + m_term(in, in.S_size, bk);
}

double well_represented(double d, double k, double N) {
  if (!(d > 0 && k > 0 && N > 0)) throw DomainError("well_represented needs positive d, k, N");
  return std::sqrt(d * k / N);
}

}  // namespace subscreen::ratebounds
