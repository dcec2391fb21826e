#include "subscreen/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace subscreen::linalg {

namespace {

using Solver = Eigen::SelfAdjointEigenSolver<Matrix>;

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols())
    throw ValidationError(std::string(what) + ": expected a square matrix, got " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

// Largest eigenvalue of the smaller Gram matrix.
double top_gram_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Matrix gram = a.rows() <= a.cols() ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
  Solver es(gram, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

double symmetric_spectral_norm(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Solver es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Vector signs_of(const Vector& v) {
  return v.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
}

// Alternating maximization of y^T H x over sign vectors, from `x`. Each half
// step cannot decrease ||Hx||_1.
double local_sign_search(const Matrix& h, Vector x) {
  double best = (h * x).lpNorm<1>();
  for (int iter = 0; iter < 1000; ++iter) {
    Vector next = signs_of(h.transpose() * signs_of(h * x));
    if (next == x) break;
    x = std::move(next);
    best = std::max(best, (h * x).lpNorm<1>());
  }
  return best;
}

double exact_inf_to_one(const Matrix& h) {
  const Eigen::Index s = h.rows();
  if (s == 0) return 0.0;
  Vector x = Vector::Ones(s);
  Vector hx = h * x;
  double best = hx.lpNorm<1>();
  const std::uint64_t count = std::uint64_t{1} << (s - 1);
  for (std::uint64_t g = 1; g < count; ++g) {
    // Gray code: step g flips coordinate (index of lowest set bit) + 1.
    const auto j = static_cast<Eigen::Index>(std::countr_zero(g)) + 1;
    hx.noalias() -= (2.0 * x(j)) * h.col(j);
    x(j) = -x(j);
    if ((g & 0xfffu) == 0) hx.noalias() = h * x;  // bound drift of the running update
    best = std::max(best, hx.lpNorm<1>());
  }
  return best;
}

struct ProbeResult {
  bool feasible = false;
  Vector w;
  double gap = std::numeric_limits<double>::infinity();  // best max(lmax(H-cW), lmax(-H-cW))
  double dual_bound = 0.0;                                  // certified lower bound on c*
};

// D^+ H D^+ for D = diag(sqrt(w)); rows and columns off the support are zero.
Matrix scaled_core(const Matrix& h, const Vector& w) {
  const Eigen::Index s = h.rows();
  Vector inv = Vector::Zero(s);
  for (Eigen::Index j = 0; j < s; ++j)
    if (w(j) > 0.0) inv(j) = 1.0 / std::sqrt(w(j));
  return inv.asDiagonal() * h * inv.asDiagonal();
}

bool support_covers(const Matrix& h, const Vector& w) {
  for (Eigen::Index j = 0; j < h.rows(); ++j)
    if (w(j) <= 0.0 && h.col(j).cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

// Feasibility probe at level c by projected subgradient descent over the simplex.
// Polyak steps aimed slightly below zero; witnesses of the active eigenvalue are
// averaged into a dual certificate  c* >= <P - Q, H> / max_j (P + Q)_jj.
ProbeResult probe_level(const Matrix& h, double c, const Vector& w_start, int max_steps) {
  const Eigen::Index s = h.rows();
  ProbeResult out;
  out.w = w_start;
  Vector w = w_start;
  Matrix p_sum = Matrix::Zero(s, s);
  Matrix q_sum = Matrix::Zero(s, s);
  const double target = -1e-9 * c;
  double last_improvement_gap = out.gap;
  int since_improvement = 0;

  auto dual_bound = [&]() {
    Matrix both = p_sum + q_sum;
    double scale = both.diagonal().maxCoeff();
    if (scale <= 0.0) return 0.0;
    return ((p_sum - q_sum).cwiseProduct(h)).sum() / scale;
  };

  for (int step = 1; step <= max_steps; ++step) {
    Matrix upper = h;
    upper.diagonal() -= c * w;
    Matrix lower = -h;
    lower.diagonal() -= c * w;
    Solver eu(upper);
    Solver el(lower);
    const double lu = eu.eigenvalues()(s - 1);
    const double ll = el.eigenvalues()(s - 1);
    const bool upper_active = lu >= ll;
    const double gap = upper_active ? lu : ll;
    Vector v = upper_active ? eu.eigenvectors().col(s - 1) : el.eigenvectors().col(s - 1);
    if (upper_active)
      p_sum.noalias() += v * v.transpose();
    else
      q_sum.noalias() += v * v.transpose();

    if (gap < out.gap) {
      out.gap = gap;
      out.w = w;
    }
    if (gap <= 0.0) {
      out.feasible = true;
      out.dual_bound = dual_bound();
      return out;
    }
    if (step % 100 == 0) {
      out.dual_bound = std::max(out.dual_bound, dual_bound());
      if (out.dual_bound > c) return out;
    }
    if (out.gap < last_improvement_gap - 1e-12 * c) {
      last_improvement_gap = out.gap;
      since_improvement = 0;
    } else if (++since_improvement > 1500) {
      break;
    }

    // d/dw_j of lmax(+-H - cW) is -c v_j^2.
    Vector grad = -c * v.cwiseAbs2();
    const double gn2 = grad.squaredNorm();
    if (gn2 <= 0.0) break;
    const double polyak = (gap - target) / gn2;
    const double fallback = 1.0 / (c * std::sqrt(static_cast<double>(step)));
    w = project_to_simplex(w - std::max(polyak, 0.1 * fallback) * grad);
  }
  out.dual_bound = std::max(out.dual_bound, dual_bound());
  return out;
}

}  // namespace

double spectral_norm(const Matrix& a) { return std::sqrt(top_gram_eigenvalue(a)); }

double stable_rank(const Matrix& a) {
  require_finite(a, "stable_rank");
  const double fro2 = a.squaredNorm();
  if (fro2 == 0.0) throw DomainError("stable_rank: zero matrix");
  return fro2 / top_gram_eigenvalue(a);
}

double column_norm(const Matrix& h) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < h.cols(); ++j) total += h.col(j).norm();
  return total;
}

double orthonormality_defect(const Matrix& b) {
  Matrix dev = b.transpose() * b - Matrix::Identity(b.cols(), b.cols());
  return symmetric_spectral_norm(dev);
}

void require_orthonormal(const Matrix& b, const char* what) {
  require_finite(b, what);
  if (b.cols() == 0 || b.cols() > b.rows())
    throw ValidationError(std::string(what) + ": expected a d x k frame with 1 <= k <= d");
  const double defect = orthonormality_defect(b);
  if (!(defect <= kOrthonormalTol))
    throw ValidationError(std::string(what) + ": columns are not orthonormal (||B^T B - I|| = " +
                          std::to_string(defect) + ")");
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

NormBracket inf_to_one_norm(const Matrix& h, NormMode mode, const NormOptions& opts) {
  require_square(h, "inf_to_one_norm");
  require_finite(h, "inf_to_one_norm");
  const auto s = static_cast<std::size_t>(h.rows());
  if (mode == NormMode::exact) {
    if (s > opts.exact_threshold || s > 62)
      throw DomainError("inf_to_one_norm: s = " + std::to_string(s) +
                        " is too large for enumeration (threshold " +
                        std::to_string(opts.exact_threshold) + ")");
    const double value = exact_inf_to_one(h);
    return {value, value, true};
  }

  NormBracket out;
  if (s == 0) return out;
  double lower = local_sign_search(h, Vector::Ones(h.cols()));
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeThinV);
  lower = std::max(lower, local_sign_search(h, signs_of(svd.matrixV().col(0))));
  Rng rng = make_stream(opts.seed, StreamTag::local_search, s);
  std::bernoulli_distribution coin(0.5);
  for (int r = 0; r < opts.restarts; ++r) {
    Vector x(h.cols());
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = coin(rng) ? 1.0 : -1.0;
    lower = std::max(lower, local_sign_search(h, std::move(x)));
  }
  const double by_spectral = static_cast<double>(s) * svd.singularValues()(0);
  const double by_entries = h.cwiseAbs().sum();
  out.lower = lower;
  out.upper = std::max(lower, std::min(by_spectral, by_entries));
  out.exact = false;
  return out;
}

NormBracket inf_to_one_norm_auto(const Matrix& h, const NormOptions& opts) {
  const auto s = static_cast<std::size_t>(h.rows());
  return inf_to_one_norm(h, s <= opts.exact_threshold ? NormMode::exact : NormMode::bracket, opts);
}

Vector project_to_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

FactorizationResult grothendieck_factorize(const Matrix& h, const FactorizationOptions& opts) {
  require_square(h, "grothendieck_factorize");
  require_finite(h, "grothendieck_factorize");
  if (!is_symmetric(h)) throw ValidationError("grothendieck_factorize: H is not symmetric");
  const Eigen::Index s = h.rows();
  if (s == 0) throw ValidationError("grothendieck_factorize: empty matrix");

  FactorizationResult out;
  const Vector uniform = Vector::Constant(s, 1.0 / static_cast<double>(s));
  if (h.cwiseAbs().maxCoeff() == 0.0) {
    out.diag = uniform.cwiseSqrt();
    out.core = Matrix::Zero(s, s);
    out.reference = {0.0, 0.0, true};
    return out;
  }

  out.reference = inf_to_one_norm_auto(h, opts.norm);
  const double reference = out.reference.lower;

  // Primal side: smallest level certified by a weight vector. Dual side: largest
  // lower bound on c* from Lagrange witnesses or from ||H||_{inf->1} itself.
  double lo = reference;
  double hi = std::numeric_limits<double>::infinity();
  Vector w_hi = uniform;
  Vector w_warm = uniform;
  double best_gap = std::numeric_limits<double>::infinity();
  Vector w_best_gap = uniform;

  auto record = [&](const ProbeResult& r) {
    ++out.probes;
    lo = std::max(lo, r.dual_bound);
    if (r.gap < best_gap) {
      best_gap = r.gap;
      w_best_gap = r.w;
    }
    if (r.feasible && support_covers(h, r.w)) {
      const double level = symmetric_spectral_norm(scaled_core(h, r.w));
      if (level < hi) {
        hi = level;
        w_hi = r.w;
      }
      w_warm = r.w;
      return true;
    }
    return false;
  };

  // Starting level. The real Grothendieck constant is below 1.79, so 2||H||
  // is comfortably feasible; the bracket's upper end is the fallback.
  bool found = record(probe_level(h, 2.0 * reference, w_warm, opts.max_steps));
  if (!found && !out.reference.exact)
    found = record(probe_level(h, 2.0 * out.reference.upper, w_warm, opts.max_steps));

  if (found) {
    int guard = 0;
    double search_lo = lo;
    while (hi - search_lo > opts.tol * hi && guard++ < 64) {
      const double mid = 0.5 * (search_lo + hi);
      ProbeResult r = probe_level(h, mid, w_warm, opts.max_steps);
      if (!record(r)) search_lo = std::max(mid, lo);
      search_lo = std::max(search_lo, lo);
    }
  }

  out.feasible = found;
  const Vector& w = found ? w_hi : w_best_gap;
  out.diag = w.cwiseMax(0.0).cwiseSqrt();
  out.core = scaled_core(h, w);
  out.certified_norm_bound = symmetric_spectral_norm(out.core);
  out.level = found ? hi : std::numeric_limits<double>::infinity();
  return out;
}

double psd_condition_number(const Matrix& gram) {
  Solver es(gram, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin <= kSingularRelTol * lmax) return std::numeric_limits<double>::infinity();
  return lmax / lmin;
}

double gram_condition_number(const Matrix& a_s) {
  if (a_s.cols() == 0) throw DomainError("gram_condition_number: empty column set");
  require_finite(a_s, "gram_condition_number");
  return psd_condition_number(a_s * a_s.transpose());
}

double principal_angle_distance(const Matrix& b1, const Matrix& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw ValidationError("principal_angle_distance: bases must have the same shape");
  require_orthonormal(b1, "principal_angle_distance (first basis)");
  require_orthonormal(b2, "principal_angle_distance (second basis)");
  Matrix diff = b1 * b1.transpose() - b2 * b2.transpose();
  return std::clamp(symmetric_spectral_norm(diff), 0.0, 1.0);
}

double min_nonzero_eigenvalue(const Matrix& s, double rank_tol) {
  require_square(s, "min_nonzero_eigenvalue");
  require_finite(s, "min_nonzero_eigenvalue");
  Solver es(s, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();  // ascending
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0)) throw DomainError("min_nonzero_eigenvalue: all eigenvalues are below tolerance");
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > rank_tol * lmax) return ev(i);
  throw DomainError("min_nonzero_eigenvalue: all eigenvalues are below tolerance");
}

Matrix haar_orthonormal(Eigen::Index d, Eigen::Index k, Rng& rng) {
  if (k < 1 || k > d) throw ConfigError("haar_orthonormal: need 1 <= k <= d");
  Matrix g = gaussian_matrix(d, k, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace subscreen::linalg
