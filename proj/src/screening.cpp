#include "subscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace subscreen::screening {

namespace {

constexpr double kLambdaRankTol = 1e-10;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double lambda_min_sym(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(0));
}

// Shared batch loop. `a` is the standardized working matrix whose columns in
// `pool` may be selected; `lambda` plays the role of lambda_min(A A^T).
SelectionResult run_search(const Matrix& a, IndexSet pool, std::size_t latent_dim, double lambda,
                           const ScreeningConfig& cfg, Rng& rng, SelectionResult out) {
  const auto k = static_cast<double>(latent_dim);
  const auto m = static_cast<double>(a.cols());
  out.lambda_min = lambda;

  out.stable_rank = linalg::stable_rank(a);
  const double cs = cfg.c * out.stable_rank;
  if (cs < 1.0) {
    out.reason = TerminationReason::low_stable_rank;
    out.warnings.push_back("low stable rank: c * st.rank(A) = " + fmt(cs) + " < 1");
    return out;
  }
  const double a_norm2 = std::pow(linalg::spectral_norm(a), 2);
  out.c_tilde = a_norm2 / (m / k);
  if (a_norm2 > cfg.column_norm_warn_factor * m / k)
    out.warnings.push_back("||A||^2 = " + fmt(a_norm2) + " exceeds " + fmt(cfg.column_norm_warn_factor) +
                           " * M/k; the column-norm condition does not hold");

  const std::size_t floor = cfg.clamp_batch_to_latent_dim ? latent_dim : 1;
  const auto s_raw = static_cast<std::size_t>(std::ceil(cs));
  const double rank_floor = k / (2.0 * out.c_tilde);

  out.round_cap = lambda > 0.0 ? static_cast<std::size_t>(std::ceil(lambda)) : 0;
  out.attempt_cap = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::log(std::max(lambda, 1e-300) / cfg.delta) / std::log(8.0 / 7.0))));
  if (lambda <= 0.0) out.warnings.push_back("A A^T is singular; no rounds run");

  linalg::NormOptions norm_opts = cfg.factorization.norm;
  norm_opts.exact_threshold = cfg.exact_norm_threshold;
  linalg::FactorizationOptions fact_opts = cfg.factorization;
  fact_opts.norm = norm_opts;

  out.reason = TerminationReason::round_cap;
  bool last_round_passed = true;  // stable-rank test on A_{t*}
  for (std::size_t t = 1; t <= out.round_cap; ++t) {
    out.t_star = t;
    const Matrix remaining = select_columns(a, pool);
    const bool passes = !pool.empty() && linalg::stable_rank(remaining) >= rank_floor;
    if (!passes) {
      last_round_passed = false;
      out.reason = TerminationReason::stable_rank_floor;
      break;
    }
    const std::size_t s = std::min(std::max(s_raw, floor), pool.size());
    out.batch_size = s;

    std::size_t attempts = 0;
    bool accepted = false;
    for (std::size_t l = 0; l < out.attempt_cap; ++l) {
      ++attempts;
      IndexSet cand = sample_without_replacement(pool, s, rng);
      const Matrix a_c = select_columns(a, cand);
      const Matrix h = a_c.transpose() * a_c - Matrix::Identity(a_c.cols(), a_c.cols());
      const linalg::NormBracket nb = linalg::inf_to_one_norm_auto(h, norm_opts);
      if (nb.conservative() > cfg.norm_test_ratio * static_cast<double>(s)) continue;

      const linalg::FactorizationResult f = linalg::grothendieck_factorize(h, fact_opts);
      BatchCertificate cert;
      cert.round = t;
      cert.inf_to_one = nb;
      cert.factor_norm = f.certified_norm_bound;
      cert.factorization_feasible = f.feasible;
      IndexSet batch;
      for (std::size_t j = 0; j < s; ++j) {
        const double dj = f.diag(static_cast<Eigen::Index>(j));
        if (dj * dj <= 2.0 / static_cast<double>(s)) batch.push_back(cand[j]);
      }
      std::sort(cand.begin(), cand.end());
      std::sort(batch.begin(), batch.end());
      cert.candidate = std::move(cand);
      if (!batch.empty()) {
        const Matrix a_b = select_columns(a, batch);
        const Matrix g = a_b.transpose() * a_b;
        cert.deviation = linalg::spectral_norm(g - Matrix::Identity(g.rows(), g.cols()));
        cert.batch_kappa = linalg::psd_condition_number(g);
      }
      if (!f.feasible) out.warnings.push_back("round " + std::to_string(t) + ": factorization did not certify a level");

      IndexSet next;
      std::set_difference(pool.begin(), pool.end(), batch.begin(), batch.end(), std::back_inserter(next));
      pool = std::move(next);
      out.batches.push_back(std::move(batch));
      out.certificates.push_back(std::move(cert));
      accepted = true;
      break;
    }
    out.attempts_per_round.push_back(attempts);
    if (!accepted) {
      out.reason = TerminationReason::inner_loop_exhausted;
      out.warnings.push_back("round " + std::to_string(t) + ": all " + std::to_string(attempts) +
                             " draws failed the norm test");
      break;
    }
  }

  // Batches S_1..S_{t*}, or S_1..S_{t*-1} when A_{t*} failed the stable-rank
  // test. Only rounds that passed the test ever formed a batch, so both
  // branches keep every batch formed.
  const std::size_t keep = last_round_passed ? out.batches.size()
                                             : std::min(out.batches.size(), out.t_star - 1);
  for (std::size_t b = 0; b < keep; ++b)
    out.selected.insert(out.selected.end(), out.batches[b].begin(), out.batches[b].end());
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

}  // namespace

double theoretical_c() {
  // 320 (u^2/2 + u) = 1/2 with u = sqrt(2c).
  const double u = -1.0 + std::sqrt(1.0 + 2.0 / 640.0);
  return 0.5 * u * u;
}

void ScreeningConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("screening.c must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("screening.delta must lie in (0, 1)");
  if (!(kappa_max >= 1.0)) throw ConfigError("screening.kappa_max must be at least 1");
  if (!(size_ratio_min >= 0.0)) throw ConfigError("screening.size_ratio_min must be nonnegative");
  if (!(norm_test_ratio > 0.0)) throw ConfigError("screening.norm_test_ratio must be positive");
  if (!(column_norm_warn_factor > 0.0)) throw ConfigError("screening.column_norm_warn_factor must be positive");
  if (exact_norm_threshold < 1 || exact_norm_threshold > 30)
    throw ConfigError("screening.exact_norm_threshold must lie in [1, 30]");
  if (!(factorization.tol > 0.0) || factorization.max_steps < 1)
    throw ConfigError("screening.factorization needs tol > 0 and max_steps >= 1");
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::stable_rank_floor: return "stable_rank_floor";
    case TerminationReason::round_cap: return "round_cap";
    case TerminationReason::low_stable_rank: return "low_stable_rank";
    case TerminationReason::inner_loop_exhausted: return "inner_loop_exhausted";
  }
  return "unknown";
}

TerminationReason termination_from_string(const std::string& name) {
  if (name == "stable_rank_floor") return TerminationReason::stable_rank_floor;
  if (name == "round_cap") return TerminationReason::round_cap;
  if (name == "low_stable_rank") return TerminationReason::low_stable_rank;
  if (name == "inner_loop_exhausted") return TerminationReason::inner_loop_exhausted;
  throw ConfigError("unknown termination reason '" + name + "'");
}

HeadMatrix HeadMatrix::from(const Matrix& a, bool normalize) {
  if (a.size() == 0) throw ValidationError("head matrix is empty");
  if (!a.allFinite()) throw ValidationError("head matrix has non-finite entries");
  HeadMatrix out;
  out.norms = a.colwise().norm().transpose();
  out.columns = a;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double n = out.norms(j);
    if (normalize) {
      if (n > 0.0) {
        out.columns.col(j) /= n;
        out.usable.push_back(static_cast<std::size_t>(j));
      }
    } else {
      if (std::abs(n - 1.0) > linalg::kOrthonormalTol)
        throw ValidationError("column " + std::to_string(j) + " is not unit norm (norm " + fmt(n) + ")");
      out.usable.push_back(static_cast<std::size_t>(j));
    }
  }
  if (out.usable.empty()) throw DomainError("head matrix has no nonzero columns");
  out.stable_rank = linalg::stable_rank(out.columns);
  return out;
}

SelectionResult genie_search(const Matrix& heads, const ScreeningConfig& cfg, Rng& rng) {
  cfg.validate();
  const HeadMatrix hm = HeadMatrix::from(heads, cfg.normalize_columns);
  SelectionResult out;
  out.method = "genie";
  out.column_scales = hm.norms;
  if (hm.usable.size() < static_cast<std::size_t>(heads.cols()))
    out.warnings.push_back(std::to_string(heads.cols() - static_cast<Eigen::Index>(hm.usable.size())) +
                           " zero columns excluded");
  const double lambda = lambda_min_sym(hm.columns * hm.columns.transpose());
  return run_search(hm.columns, hm.usable, static_cast<std::size_t>(heads.rows()), lambda, cfg, rng,
                    std::move(out));
}

SelectionResult empirical_search(const estimators::MomentProxies& proxies, std::size_t latent_dim,
                                 const ScreeningConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto m = static_cast<std::size_t>(proxies.a_hat.cols());
  if (m < latent_dim)
    throw DomainError("insufficient sources: M = " + std::to_string(m) + " < k = " + std::to_string(latent_dim));
  if (latent_dim < 1) throw ConfigError("latent dimension must be positive");

  SelectionResult out;
  out.method = "empirical";
  const double scale = cfg.column_norm_warn_factor * static_cast<double>(m) / static_cast<double>(latent_dim);
  const double zbar2 = std::pow(linalg::spectral_norm(proxies.zbar), 2);
  const double ztilde2 = std::pow(linalg::spectral_norm(proxies.ztilde), 2);
  if (zbar2 > scale || ztilde2 > scale)
    out.warnings.push_back("proxy norms ||Zbar||^2 = " + fmt(zbar2) + ", ||Ztilde||^2 = " + fmt(ztilde2) +
                           " exceed " + fmt(cfg.column_norm_warn_factor) + " * M/k");

  const HeadMatrix hm = HeadMatrix::from(proxies.a_hat, cfg.normalize_columns);
  out.column_scales = hm.norms;
  if (hm.usable.size() < m)
    out.warnings.push_back(std::to_string(m - hm.usable.size()) + " zero proxy columns excluded");
  const Matrix gram = hm.columns * hm.columns.transpose();
  const double lambda = linalg::min_nonzero_eigenvalue(gram, kLambdaRankTol);
  return run_search(hm.columns, hm.usable, latent_dim, lambda, cfg, rng, std::move(out));
}

AdmissibilityReport is_admissible(const IndexSet& selected, const Matrix& heads, const ScreeningConfig& cfg) {
  const HeadMatrix hm = HeadMatrix::from(heads, true);
  AdmissibilityReport r;
  r.size = selected.size();
  const auto k = static_cast<double>(heads.rows());
  r.size_floor = cfg.size_ratio_min * k * lambda_min_sym(hm.columns * hm.columns.transpose());
  if (selected.empty()) {
    r.kappa = std::numeric_limits<double>::infinity();
    return r;
  }
  for (std::size_t i : selected)
    if (i >= static_cast<std::size_t>(heads.cols())) throw ValidationError("selected index out of range");
  r.kappa = linalg::gram_condition_number(select_columns(hm.columns, selected));
  r.admissible = r.kappa <= cfg.kappa_max && static_cast<double>(r.size) >= r.size_floor;
  return r;
}

std::size_t smallest_group(std::span<const int> labels) {
  if (labels.empty()) throw DomainError("no labels");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  std::size_t best = labels.size();
  for (const auto& [label, n] : counts) best = std::min(best, n);
  return best;
}

IndexSet balanced_baseline(std::span<const int> labels, std::size_t quota, Rng& rng) {
  std::map<int, IndexSet> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  IndexSet out;
  for (const auto& [label, members] : groups) {
    if (quota > members.size())
      throw DomainError("quota " + std::to_string(quota) + " exceeds group " + std::to_string(label) + " of size " +
                        std::to_string(members.size()));
    IndexSet pick = sample_without_replacement(members, quota, rng);
    out.insert(out.end(), pick.begin(), pick.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

IndexSet random_baseline(std::size_t num_sources, std::size_t m, Rng& rng) {
  IndexSet all(num_sources);
  std::iota(all.begin(), all.end(), std::size_t{0});
  IndexSet out = sample_without_replacement(all, m, rng);
  std::sort(out.begin(), out.end());
  return out;
}

IndexSet power_of_choice_baseline(std::span<const double> local_losses, std::size_t m) {
  if (m > local_losses.size())
    throw DomainError("cannot pick " + std::to_string(m) + " of " + std::to_string(local_losses.size()) + " sources");
  IndexSet order(local_losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return local_losses[a] > local_losses[b]; });
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<double> local_losses(std::span<const estimators::SourceDataset> sources, const Matrix& basis) {
  std::vector<double> out;
  out.reserve(sources.size());
  for (const auto& src : sources) {
    if (src.covariates.cols() != basis.rows()) throw ValidationError("local_losses: basis dimension mismatch");
    const Matrix features = src.covariates * basis;
    const Vector head = features.colPivHouseholderQr().solve(src.responses);
    const Vector resid = src.responses - features * head;
    out.push_back(resid.squaredNorm() / static_cast<double>(src.size()));
  }
  return out;
}

}  // namespace subscreen::screening
