#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "subscreen/linalg.hpp"

using namespace subscreen;
using namespace subscreen::linalg;

TEST_CASE("stable_rank of identical unit columns is one") {
  Matrix a(3, 5);
  for (int j = 0; j < 5; ++j) a.col(j) = Vector::Unit(3, 1);
  CHECK(stable_rank(a) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("stable_rank of the identity is its dimension") {
  for (int k : {1, 3, 8}) CHECK(stable_rank(Matrix::Identity(k, k)) == doctest::Approx(k).epsilon(1e-14));
}

TEST_CASE("stable_rank agrees with a full SVD") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = oracle::unit_columns(4, 50, rng);
    CHECK(std::abs(stable_rank(a) - oracle::svd_stable_rank(a)) < 1e-10);
  }
}

TEST_CASE("stable_rank rejects the zero matrix") {
  CHECK_THROWS_AS(stable_rank(Matrix::Zero(3, 4)), DomainError);
}

TEST_CASE("stable_rank properties") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 5;
    Matrix a = oracle::gaussian(k, 3 + trial % 7, rng);
    Eigen::FullPivLU<Matrix> lu(a);
    const double sr = stable_rank(a);
    CHECK(sr >= 1.0 - 1e-12);
    CHECK(sr <= static_cast<double>(lu.rank()) + 1e-12);
    Matrix q = oracle::orthonormal(k + 4, k, rng);
    CHECK(std::abs(stable_rank(q * a) - sr) < 1e-9);
  }
}

TEST_CASE("inf_to_one_norm hand instances") {
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  NormBracket nb = inf_to_one_norm(swap, NormMode::exact);
  CHECK(nb.exact);
  CHECK(nb.lower == doctest::Approx(2.0));
  CHECK(nb.upper == nb.lower);

  for (int s : {1, 4, 9}) CHECK(inf_to_one_norm(Matrix::Zero(s, s), NormMode::exact).lower == 0.0);
  CHECK(inf_to_one_norm(Matrix::Ones(3, 3), NormMode::exact).lower == doctest::Approx(9.0));
}

TEST_CASE("inf_to_one_norm exact matches plain enumeration") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const int s = 1 + trial % 11;
    Matrix h = oracle::gaussian(s, s, rng);
    CHECK(inf_to_one_norm(h, NormMode::exact).lower ==
          doctest::Approx(oracle::brute_inf_to_one(h)).epsilon(1e-12));
  }
}

TEST_CASE("inf_to_one_norm bracket contains the exact value") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 60; ++trial) {
    const int s = 2 + trial % 12;
    Matrix h = trial % 2 ? oracle::symmetric_zero_diagonal(s, rng) : oracle::gaussian(s, s, rng);
    const double exact = oracle::brute_inf_to_one(h);
    NormBracket b = inf_to_one_norm(h, NormMode::bracket);
    CHECK_FALSE(b.exact);
    CHECK(b.lower <= exact * (1 + 1e-12));
    CHECK(exact <= b.upper * (1 + 1e-12));
    CHECK(exact <= s * oracle::svd_spectral_norm(h) * (1 + 1e-12));
  }
}

TEST_CASE("inf_to_one_norm errors") {
  CHECK_THROWS_AS(inf_to_one_norm(Matrix::Zero(2, 3), NormMode::exact), ValidationError);
  NormOptions opts;
  opts.exact_threshold = 4;
  CHECK_THROWS_AS(inf_to_one_norm(Matrix::Zero(5, 5), NormMode::exact, opts), DomainError);
  CHECK_NOTHROW(inf_to_one_norm(Matrix::Zero(5, 5), NormMode::bracket, opts));
  CHECK_FALSE(inf_to_one_norm_auto(Matrix::Identity(5, 5), opts).exact);
  CHECK(inf_to_one_norm_auto(Matrix::Identity(4, 4), opts).exact);
}

TEST_CASE("column_norm") {
  CHECK(column_norm(Matrix::Identity(6, 6)) == doctest::Approx(6.0));
  CHECK(column_norm(Matrix::Zero(3, 3)) == 0.0);
  std::mt19937_64 rng(15);
  Matrix h = oracle::gaussian(5, 5, rng);
  CHECK(column_norm(h) == doctest::Approx(oracle::direct_column_norm(h)).epsilon(1e-13));
}

namespace {

void check_factorization(const Matrix& h, const FactorizationResult& f, double exact_norm) {
  REQUIRE(f.feasible);
  CHECK(std::abs(f.diag.squaredNorm() - 1.0) <= 1e-8);
  CHECK((f.diag.array() >= 0.0).all());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      if (f.diag(i) > 0.0 && f.diag(j) > 0.0)
        CHECK(std::abs(f.diag(i) * f.core(i, j) * f.diag(j) - h(i, j)) <= 1e-8);
  const double core_norm = oracle::svd_spectral_norm(f.core);
  CHECK(std::abs(core_norm - f.certified_norm_bound) <= 1e-9 * std::max(1.0, core_norm));
  CHECK(f.certified_norm_bound <= 2.0 * exact_norm * (1.0 + 1e-4));
  // x^T H y = (Dx)^T T (Dy) forces ||T|| >= ||H||_{inf->1}.
  CHECK(f.certified_norm_bound >= exact_norm * (1.0 - 1e-9));
}

}  // namespace

TEST_CASE("grothendieck_factorize of the zero matrix is uniform") {
  FactorizationResult f = grothendieck_factorize(Matrix::Zero(3, 3));
  CHECK(f.feasible);
  for (int j = 0; j < 3; ++j) CHECK(f.diag(j) == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(f.core.isZero());
  CHECK(f.certified_norm_bound == 0.0);
}

TEST_CASE("grothendieck_factorize of the 2x2 swap") {
  const double a = 0.7;
  Matrix h(2, 2);
  h << 0, a, a, 0;
  FactorizationResult f = grothendieck_factorize(h);
  CHECK(f.diag(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(f.diag(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(f.core(0, 1) == doctest::Approx(2 * a).epsilon(1e-6));
  CHECK(f.certified_norm_bound == doctest::Approx(2 * a).epsilon(1e-6));
  check_factorization(h, f, 2 * a);
}

TEST_CASE("grothendieck_factorize on random symmetric zero-diagonal matrices") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 12; ++trial) {
    const int s = 2 + trial % 7;
    Matrix h = oracle::symmetric_zero_diagonal(s, rng);
    check_factorization(h, grothendieck_factorize(h), oracle::brute_inf_to_one(h));
  }
}

TEST_CASE("grothendieck_factorize keeps zero rows off the support") {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 1) = h(1, 0) = 0.5;
  FactorizationResult f = grothendieck_factorize(h);
  check_factorization(h, f, 1.0);
}

TEST_CASE("grothendieck_factorize rejects non-symmetric input") {
  Matrix h(2, 2);
  h << 0, 1, 0, 0;
  CHECK_THROWS_AS(grothendieck_factorize(h), ValidationError);
}

TEST_CASE("gram_condition_number") {
  CHECK(gram_condition_number(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
  Matrix twin(2, 2);
  twin << 1, 1, 0, 0;
  CHECK(std::isinf(gram_condition_number(twin)));
  CHECK_THROWS_AS(gram_condition_number(Matrix(3, 0)), DomainError);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = oracle::gaussian(4, 9, rng);
    const double expected = oracle::svd_gram_condition(a);
    CHECK(std::abs(gram_condition_number(a) - expected) <= 1e-8 * expected);
  }
}

TEST_CASE("Weyl union bound on condition numbers") {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix a1 = oracle::gaussian(5, 5 + trial % 6, rng);
    Matrix a2 = oracle::gaussian(5, 5 + trial % 4, rng);
    Matrix both(5, a1.cols() + a2.cols());
    both << a1, a2;
    CHECK(gram_condition_number(both) <=
          std::max(gram_condition_number(a1), gram_condition_number(a2)) + 1e-8);
  }
}

TEST_CASE("principal_angle_distance") {
  std::mt19937_64 rng(19);
  Matrix b = oracle::orthonormal(7, 3, rng);
  CHECK(principal_angle_distance(b, b) <= 1e-12);

  Matrix e1 = Vector::Unit(2, 0), e2 = Vector::Unit(2, 1);
  CHECK(principal_angle_distance(e1, e2) == doctest::Approx(1.0));

  Matrix r = oracle::orthonormal(3, 3, rng);
  CHECK(principal_angle_distance(b, b * r) <= 1e-10);

  for (int trial = 0; trial < 30; ++trial) {
    Matrix b1 = oracle::orthonormal(8, 3, rng);
    Matrix b2 = oracle::orthonormal(8, 3, rng);
    Matrix rot = oracle::orthonormal(3, 3, rng);
    const double d12 = principal_angle_distance(b1, b2);
    CHECK(d12 >= 0.0);
    CHECK(d12 <= 1.0);
    CHECK(std::abs(d12 - principal_angle_distance(b2, b1)) <= 1e-12);
    CHECK(std::abs(d12 - principal_angle_distance(b1 * rot, b2)) <= 1e-10);
  }

  Matrix skewed = b;
  skewed.col(0) *= 1.01;
  CHECK_THROWS_AS(principal_angle_distance(skewed, b), ValidationError);
}

TEST_CASE("min_nonzero_eigenvalue") {
  CHECK(min_nonzero_eigenvalue(Matrix::Identity(4, 4), 1e-10) == doctest::Approx(1.0));
  Matrix d = Vector(Eigen::Vector3d(3, 2, 0)).asDiagonal();
  CHECK(min_nonzero_eigenvalue(d, 1e-10) == doctest::Approx(2.0));
  CHECK_THROWS_AS(min_nonzero_eigenvalue(Matrix::Zero(3, 3), 1e-10), DomainError);

  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix b = oracle::orthonormal(12, 4, rng);
    Matrix g = oracle::gaussian(4, 6, rng);
    Matrix psd = g * g.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(psd);
    CHECK(std::abs(min_nonzero_eigenvalue(b * psd * b.transpose(), 1e-10) - es.eigenvalues()(0)) <= 1e-9);
  }
}

TEST_CASE("haar_orthonormal is orthonormal and sign-fixed") {
  Rng rng = make_stream(1, StreamTag::basis);
  Matrix q = haar_orthonormal(30, 6, rng);
  CHECK(orthonormality_defect(q) <= 1e-12);
  Rng full = make_stream(2, StreamTag::basis);
  Matrix square = haar_orthonormal(5, 5, full);
  CHECK((square * square.transpose() - Matrix::Identity(5, 5)).norm() <= 1e-10);
}

TEST_CASE("project_to_simplex") {
  Vector v(4);
  v << 0.5, 0.5, 0.5, -3.0;
  Vector p = project_to_simplex(v);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p(3) == 0.0);
  CHECK(p(0) == doctest::Approx(1.0 / 3.0));
  Vector already(3);
  already << 0.2, 0.3, 0.5;
  CHECK((project_to_simplex(already) - already).norm() <= 1e-15);
}
