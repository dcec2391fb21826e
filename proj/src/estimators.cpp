#include "subscreen/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace subscreen::estimators {

namespace {

void require_sources(std::span<const SourceDataset> sources, std::size_t k, const char* what) {
  if (sources.empty()) throw ValidationError(std::string(what) + ": no sources");
  const auto d = sources.front().covariates.cols();
  for (const auto& s : sources)
    if (s.covariates.cols() != d || s.covariates.rows() != s.responses.size())
      throw ValidationError(std::string(what) + ": inconsistent source dimensions");
  if (k < 1 || k > static_cast<std::size_t>(d)) throw ValidationError(std::string(what) + ": need 1 <= k <= d");
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::split_averaging: return "split_averaging";
    case EstimatorKind::mom: return "mom";
    case EstimatorKind::dfht: return "dfht";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "split_averaging") return EstimatorKind::split_averaging;
  if (name == "mom") return EstimatorKind::mom;
  if (name == "dfht") return EstimatorKind::dfht;
  throw ConfigError("unknown estimator '" + name + "'");
}

MomentSplit local_moment_split(const SourceDataset& ds) {
  const Eigen::Index n = ds.responses.size();
  if (n < 2) throw ValidationError("local_moment_split: need at least two samples");
  if (ds.covariates.rows() != n) throw ValidationError("local_moment_split: covariate/response size mismatch");
  const Eigen::Index half = n / 2;
  MomentSplit out;
  out.zbar = ds.covariates.topRows(half).transpose() * ds.responses.head(half) / static_cast<double>(half);
  out.ztilde = ds.covariates.bottomRows(n - half).transpose() * ds.responses.tail(n - half) /
               static_cast<double>(n - half);
  return out;
}

MomentProxies build_moment_proxies(std::span<const SourceDataset> sources) {
  if (sources.empty()) throw ValidationError("build_moment_proxies: no sources");
  const Eigen::Index d = sources.front().covariates.cols();
  const auto m = static_cast<Eigen::Index>(sources.size());
  MomentProxies out;
  out.zbar.resize(d, m);
  out.ztilde.resize(d, m);
  out.sample_sizes.reserve(sources.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& src = sources[static_cast<std::size_t>(i)];
    if (src.covariates.cols() != d) throw ValidationError("build_moment_proxies: inconsistent dimensions");
    MomentSplit split = local_moment_split(src);
    out.zbar.col(i) = split.zbar;
    out.ztilde.col(i) = split.ztilde;
    out.sample_sizes.push_back(src.size());
  }
  out.a_hat = out.zbar + out.ztilde;
  out.z_hat = out.zbar * out.ztilde.transpose();
  const double total = static_cast<double>(
      std::accumulate(out.sample_sizes.begin(), out.sample_sizes.end(), std::size_t{0}));
  Vector weights(m);
  for (Eigen::Index i = 0; i < m; ++i) weights(i) = static_cast<double>(out.sample_sizes[static_cast<std::size_t>(i)]) / total;
  out.z_weighted = out.zbar * weights.asDiagonal() * out.ztilde.transpose();
  return out;
}

SubspaceEstimate top_eigenvectors_by_magnitude(const Matrix& symmetric, std::size_t k, std::string name) {
  const Eigen::Index d = symmetric.rows();
  if (k < 1 || static_cast<Eigen::Index>(k) > d) throw ValidationError("top_eigenvectors_by_magnitude: need 1 <= k <= d");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  if (es.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
  const Vector& values = es.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values(a)) > std::abs(values(b)); });

  SubspaceEstimate out;
  out.estimator_name = std::move(name);
  const auto kk = static_cast<Eigen::Index>(k);
  out.basis.resize(d, kk);
  out.spectrum.resize(kk);
  for (Eigen::Index j = 0; j < kk; ++j) {
    out.basis.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    out.spectrum(j) = std::abs(values(order[static_cast<std::size_t>(j)]));
  }
  const double top = std::abs(values(order.front()));
  if (kk < d) {
    const double next = std::abs(values(order[static_cast<std::size_t>(kk)]));
    if (out.spectrum(kk - 1) - next <= 1e-12 * top) {
      out.degenerate = true;
      out.warning = "eigen-gap between eigenvalues k and k+1 is degenerate; ties broken by eigenvalue index";
    }
  }
  return out;
}

SubspaceEstimate split_averaging_estimate(std::span<const SourceDataset> sources, std::size_t k) {
  require_sources(sources, k, "split_averaging_estimate");
  MomentProxies proxies = build_moment_proxies(sources);
  Matrix sym = 0.5 * (proxies.z_weighted + proxies.z_weighted.transpose());
  return top_eigenvectors_by_magnitude(sym, k, "split_averaging");
}

SubspaceEstimate mom_estimate(std::span<const SourceDataset> sources, std::size_t k) {
  require_sources(sources, k, "mom_estimate");
  const Eigen::Index d = sources.front().covariates.cols();
  Matrix moment = Matrix::Zero(d, d);
  std::size_t total = 0;
  for (const auto& src : sources) {
    Vector w = src.responses.cwiseAbs2();
    moment.noalias() += src.covariates.transpose() * w.asDiagonal() * src.covariates;
    total += src.size();
  }
  moment /= static_cast<double>(total);
  return top_eigenvectors_by_magnitude(0.5 * (moment + moment.transpose()), k, "mom");
}

SubspaceEstimate estimate(EstimatorKind kind, std::span<const SourceDataset> sources, std::size_t k) {
  switch (kind) {
    case EstimatorKind::split_averaging: return split_averaging_estimate(sources, k);
    case EstimatorKind::mom: return mom_estimate(sources, k);
    case EstimatorKind::dfht: throw Unsupported("the dfht estimator slot is not implemented");
  }
  throw Unsupported("unknown estimator");
}

}  // namespace subscreen::estimators
