#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace subscreen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexSet = std::vector<std::size_t>;

// A std::mt19937_64 stream. Every stochastic operation takes one explicitly.
using Rng = std::mt19937_64;

/// Input outside the operation's domain (zero matrix for stable rank, an
/// all-zero spectrum, an index set that is too large, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input failed a structural check (shape mismatch, non-orthonormal basis,
/// non-symmetric matrix, non-finite entries).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration is invalid (bad dimensions, probabilities, sizes).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation exists as a named slot but is not implemented.
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Named purposes for derived random streams. Streams for different
/// purposes never share state, so e.g. adding a selector does not perturb
/// the generated data.
enum class StreamTag : std::uint32_t {
  basis = 1,
  heads = 2,
  sizes = 3,
  data = 4,
  selection = 5,
  local_search = 6,
};

/// Derive an independent, reproducible stream from (seed, tag, index).
inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(index & 0xffffffffu),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Fill a matrix with i.i.d. standard normals, column by column.
inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

/// Uniform sample of `count` distinct elements of `pool`, without replacement,
/// via a partial Fisher-Yates shuffle. Returned in draw order.
inline IndexSet sample_without_replacement(const IndexSet& pool, std::size_t count, Rng& rng) {
  if (count > pool.size())
    throw DomainError("cannot draw " + std::to_string(count) + " of " +
                      std::to_string(pool.size()) + " elements without replacement");
  IndexSet work = pool;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, work.size() - 1);
    std::swap(work[i], work[pick(rng)]);
  }
  work.resize(count);
  return work;
}

/// Columns of `a` listed in `cols`, in that order.
inline Matrix select_columns(const Matrix& a, const IndexSet& cols) {
  Matrix out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

}  // namespace subscreen
