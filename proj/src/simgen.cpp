#include "subscreen/simgen.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "subscreen/io.hpp"
#include "subscreen/linalg.hpp"

namespace subscreen::simgen {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::orthogonal: return "orthogonal";
    case Regime::clustered: return "clustered";
    case Regime::hetero_gaussian: return "hetero_gaussian";
  }
  return "unknown";
}

Regime regime_from_string(const std::string& name) {
  if (name == "orthogonal") return Regime::orthogonal;
  if (name == "clustered") return Regime::clustered;
  if (name == "hetero_gaussian") return Regime::hetero_gaussian;
  throw ConfigError("unknown regime '" + name + "'");
}

std::size_t PopulationConfig::sample_size_lo() const {
  if (n_lo != 0) return n_lo;
  return regime == Regime::orthogonal ? ambient_dim : (ambient_dim + 2) / 3;
}

std::size_t PopulationConfig::sample_size_hi() const {
  if (n_hi != 0) return n_hi;
  return regime == Regime::orthogonal ? sample_size_lo() : ambient_dim;
}

std::vector<std::size_t> PopulationConfig::head_multiplicities() const {
  if (!multiplicities.empty()) return multiplicities;
  std::vector<std::size_t> even(latent_dim, latent_dim ? num_sources / latent_dim : 0);
  for (std::size_t j = 0; j < (latent_dim ? num_sources % latent_dim : 0); ++j) ++even[j];
  return even;
}

void PopulationConfig::validate() const {
  if (num_sources < 1) throw ConfigError("num_sources must be >= 1");
  if (latent_dim < 1 || latent_dim > ambient_dim) throw ConfigError("need 1 <= k <= d");
  const std::size_t lo = sample_size_lo();
  const std::size_t hi = sample_size_hi();
  if (lo < 2) throw ConfigError("sample sizes must be >= 2");
  if (hi < lo) throw ConfigError("n_hi must be >= n_lo");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("noise_std must be finite and >= 0");
  switch (regime) {
    case Regime::clustered:
      if (latent_dim % 2 != 0) throw ConfigError("clustered regime needs an even latent dimension");
      if (!(cluster_prob >= 0.0 && cluster_prob <= 1.0)) throw ConfigError("cluster_prob must lie in [0, 1]");
      break;
    case Regime::orthogonal: {
      const auto m = head_multiplicities();
      if (m.size() != latent_dim) throw ConfigError("need one multiplicity per latent direction");
      if (std::accumulate(m.begin(), m.end(), std::size_t{0}) != num_sources)
        throw ConfigError("multiplicities must sum to num_sources");
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (m[j] == 0) throw ConfigError("multiplicities must be positive");
        if (j > 0 && m[j] > m[j - 1]) throw ConfigError("multiplicities must be nonincreasing");
      }
      if (lo != hi) throw ConfigError("orthogonal regime uses a common sample size (n_lo == n_hi)");
      break;
    }
    case Regime::hetero_gaussian: break;
  }
}

double GroundTruth::reconstruction_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < num_sources(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    Vector diff = covariances[i] * theta.col(c) - shared_basis * heads.col(c);
    worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  return worst;
}

std::size_t Population::total_samples() const {
  return std::accumulate(sample_sizes.begin(), sample_sizes.end(), std::size_t{0});
}

ClusteredHeads sample_heads_clustered(std::size_t num_sources, std::size_t latent_dim, double g, Rng& rng) {
  if (latent_dim % 2 != 0) throw ConfigError("clustered heads need an even latent dimension");
  const auto half = static_cast<Eigen::Index>(latent_dim / 2);
  std::bernoulli_distribution first_group(g);
  std::normal_distribution<double> normal(0.0, 1.0);
  ClusteredHeads out;
  out.heads = Matrix::Zero(static_cast<Eigen::Index>(latent_dim), static_cast<Eigen::Index>(num_sources));
  out.labels.resize(num_sources);
  for (std::size_t i = 0; i < num_sources; ++i) {
    const int label = first_group(rng) ? 0 : 1;
    out.labels[i] = label;
    const Eigen::Index offset = label == 0 ? 0 : half;
    for (Eigen::Index r = 0; r < half; ++r) out.heads(offset + r, static_cast<Eigen::Index>(i)) = normal(rng);
  }
  return out;
}

Matrix hetero_gaussian_covariance(std::size_t latent_dim, Rng& rng) {
  const auto k = static_cast<Eigen::Index>(latent_dim);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix u(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) u(i, j) = unif(rng);
  Matrix psi = 0.5 * (u + u.transpose()) + 3.0 * Matrix::Identity(k, k);
  return psi * (static_cast<double>(k) / psi.trace());
}

Vector sample_gaussian_head(const Matrix& psi, Rng& rng) {
  Eigen::LLT<Matrix> chol(psi);
  if (chol.info() != Eigen::Success) throw DomainError("head covariance is not positive definite");
  return chol.matrixL() * gaussian_matrix(psi.rows(), 1, rng);
}

Matrix sample_heads_hetero_gaussian(std::size_t num_sources, std::size_t latent_dim, Rng& rng) {
  if (latent_dim < 1) throw ConfigError("latent dimension must be >= 1");
  const auto k = static_cast<Eigen::Index>(latent_dim);
  Matrix heads(k, static_cast<Eigen::Index>(num_sources));
  for (std::size_t i = 0; i < num_sources; ++i) {
    const Matrix psi = hetero_gaussian_covariance(latent_dim, rng);
    heads.col(static_cast<Eigen::Index>(i)) = sample_gaussian_head(psi, rng);
  }
  return heads;
}

OrthogonalHeads sample_heads_orthogonal(std::size_t latent_dim, std::span<const std::size_t> multiplicities,
                                        Rng& rng) {
  if (multiplicities.size() != latent_dim) throw ConfigError("need one multiplicity per latent direction");
  const std::size_t total = std::accumulate(multiplicities.begin(), multiplicities.end(), std::size_t{0});
  for (std::size_t m : multiplicities)
    if (m == 0) throw ConfigError("multiplicities must be positive");
  const auto k = static_cast<Eigen::Index>(latent_dim);
  OrthogonalHeads out;
  out.distinct = linalg::haar_orthonormal(k, k, rng);
  out.heads.resize(k, static_cast<Eigen::Index>(total));
  out.labels.reserve(total);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < multiplicities.size(); ++j)
    for (std::size_t r = 0; r < multiplicities[j]; ++r) {
      out.heads.col(col++) = out.distinct.col(static_cast<Eigen::Index>(j));
      out.labels.push_back(static_cast<int>(j));
    }
  return out;
}

GroundTruth sample_ground_truth(const PopulationConfig& config, Rng& rng) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.ambient_dim);
  const auto k = static_cast<Eigen::Index>(config.latent_dim);
  GroundTruth gt;
  gt.shared_basis = linalg::haar_orthonormal(d, k, rng);
  gt.noise_std = config.noise_std;
  switch (config.regime) {
    case Regime::clustered: {
      auto c = sample_heads_clustered(config.num_sources, config.latent_dim, config.cluster_prob, rng);
      gt.heads = std::move(c.heads);
      gt.cluster_labels = std::move(c.labels);
      break;
    }
    case Regime::hetero_gaussian:
      gt.heads = sample_heads_hetero_gaussian(config.num_sources, config.latent_dim, rng);
      break;
    case Regime::orthogonal: {
      const auto m = config.head_multiplicities();
      auto o = sample_heads_orthogonal(config.latent_dim, m, rng);
      gt.heads = std::move(o.heads);
      gt.cluster_labels = std::move(o.labels);
      break;
    }
  }
  const Matrix gamma = Matrix::Identity(d, d) / static_cast<double>(d);
  gt.covariances.assign(config.num_sources, gamma);
  gt.theta.resize(d, static_cast<Eigen::Index>(config.num_sources));
  for (std::size_t i = 0; i < config.num_sources; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    gt.theta.col(c) = gt.covariances[i].llt().solve(gt.shared_basis * gt.heads.col(c));
  }
  return gt;
}

std::vector<std::size_t> sample_sizes(const PopulationConfig& config, Rng& rng) {
  std::uniform_int_distribution<std::size_t> size(config.sample_size_lo(), config.sample_size_hi());
  std::vector<std::size_t> out(config.num_sources);
  for (auto& n : out) n = size(rng);
  return out;
}

SourceDataset generate_source_data(const GroundTruth& truth, std::size_t source_id, std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("each source needs at least two samples");
  if (source_id >= truth.num_sources()) throw ConfigError("source id out of range");
  const auto d = static_cast<Eigen::Index>(truth.ambient_dim());
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::LLT<Matrix> chol(truth.covariances[source_id]);
  // Draw row by row so a source's first j rows do not depend on n.
  Matrix z(rows, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector noise(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) z(r, c) = normal(rng);
    noise(r) = normal(rng);
  }
  SourceDataset ds;
  ds.source_id = source_id;
  ds.covariates = z * Matrix(chol.matrixL()).transpose();
  ds.responses = ds.covariates * truth.theta.col(static_cast<Eigen::Index>(source_id)) + truth.noise_std * noise;
  return ds;
}

Matrix diversity_matrix(const Matrix& heads, std::span<const std::size_t> sample_sizes) {
  if (static_cast<std::size_t>(heads.cols()) != sample_sizes.size())
    throw ValidationError("diversity_matrix: one sample size per head is required");
  const double total = static_cast<double>(std::accumulate(sample_sizes.begin(), sample_sizes.end(), std::size_t{0}));
  if (total <= 0.0) throw DomainError("diversity_matrix: total sample size is zero");
  Vector weights(heads.cols());
  for (Eigen::Index i = 0; i < heads.cols(); ++i) weights(i) = static_cast<double>(sample_sizes[static_cast<std::size_t>(i)]) / total;
  Matrix out = heads * weights.asDiagonal() * heads.transpose();
  return 0.5 * (out + out.transpose());
}

Population sample_population(const PopulationConfig& config) {
  config.validate();
  Population pop;
  pop.config = config;
  Rng truth_rng = make_stream(config.seed, StreamTag::basis);
  pop.truth = sample_ground_truth(config, truth_rng);
  Rng size_rng = make_stream(config.resample_sizes ? config.seed : config.size_seed, StreamTag::sizes);
  pop.sample_sizes = sample_sizes(config, size_rng);
  pop.sources.reserve(config.num_sources);
  for (std::size_t i = 0; i < config.num_sources; ++i) {
    Rng data_rng = make_stream(config.seed, StreamTag::data, i);
    pop.sources.push_back(generate_source_data(pop.truth, i, pop.sample_sizes[i], data_rng));
  }
  return pop;
}

void write_population(const Population& population, const std::string& csv_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open '" + csv_path + "' for writing");
  const std::size_t d = population.truth.ambient_dim();
  csv << "source_id,row_id";
  for (std::size_t j = 1; j <= d; ++j) csv << ",x_" << j;
  csv << ",y\n";
  csv << std::setprecision(17);
  for (const auto& src : population.sources) {
    for (Eigen::Index r = 0; r < src.covariates.rows(); ++r) {
      csv << src.source_id << ',' << r;
      for (Eigen::Index c = 0; c < src.covariates.cols(); ++c) csv << ',' << src.covariates(r, c);
      csv << ',' << src.responses(r) << '\n';
    }
  }
  if (!csv) throw std::runtime_error("failed writing '" + csv_path + "'");

  std::ofstream sidecar(csv_path + ".json");
  if (!sidecar) throw std::runtime_error("cannot open '" + csv_path + ".json' for writing");
  sidecar << io::population_sidecar(population).dump(2) << '\n';
}

}  // namespace subscreen::simgen
