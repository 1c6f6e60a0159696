#include <doctest.h>

#include <numbers>

#include "hoif/linalg.hpp"
#include "support/oracles.hpp"

using hoif::Matrix;

TEST_CASE("matmul hand cases") {
  const Matrix m{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  CHECK(hoif::matmul(Matrix::identity(3), m) == m);
  CHECK(hoif::matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{0}, {1}}) == Matrix{{2}, {4}});
}

TEST_CASE("matmul agrees with the triple-loop oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_matrix(5, 5, rng), b = oracle::random_matrix(5, 5, rng);
    CHECK(oracle::max_abs_diff(hoif::matmul(a, b), oracle::naive_matmul(a, b)) < 1e-12);
  }
  const Matrix a = oracle::random_matrix(4, 7, rng), b = oracle::random_matrix(4, 3, rng);
  CHECK(oracle::max_abs_diff(hoif::matmul_tn(a, b), oracle::naive_matmul(oracle::naive_transpose(a), b)) < 1e-12);
}

TEST_CASE("matmul_nt agrees with the oracle") {
  std::mt19937_64 rng(12);
  const Matrix a = oracle::random_matrix(4, 6, rng), b = oracle::random_matrix(5, 6, rng);
  CHECK(oracle::max_abs_diff(hoif::matmul_nt(a, b), oracle::naive_matmul(a, oracle::naive_transpose(b))) < 1e-12);
}

TEST_CASE("matmul is associative on random triples") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_matrix(4, 6, rng), b = oracle::random_matrix(6, 5, rng),
                 c = oracle::random_matrix(5, 3, rng);
    CHECK(hoif::max_abs_diff(hoif::matmul(hoif::matmul(a, b), c), hoif::matmul(a, hoif::matmul(b, c))) < 1e-9);
  }
}

TEST_CASE("matmul dimension mismatch names both shapes") {
  try {
    hoif::matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected DimensionError");
  } catch (const hoif::DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("non-finite results are rejected") {
  Matrix a{{1e308, 1e308}};
  Matrix b{{1e308}, {1e308}};
  CHECK_THROWS_AS(hoif::matmul(a, b), hoif::NumericalError);
  Matrix bad{{std::nan("")}};
  CHECK_THROWS_AS(hoif::require_finite(bad, "x"), hoif::NumericalError);
}

TEST_CASE("sym_eigen small cases") {
  auto e = hoif::sym_eigen(Matrix::identity(2));
  CHECK(e.values[0] == doctest::Approx(1.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  e = hoif::sym_eigen(Matrix{{0, 1}, {1, 0}});
  CHECK(e.values[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sym_eigen reconstructs random symmetric matrices up to 32x32") {
  std::mt19937_64 rng(21);
  for (std::size_t n : {3u, 10u, 17u, 32u}) {
    Matrix a = oracle::random_matrix(n, n, rng);
    a = a + oracle::naive_transpose(a);
    const auto e = hoif::sym_eigen(a);
    for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
    const Matrix lam = Matrix::diagonal(e.values);
    const Matrix rec = oracle::naive_matmul(oracle::naive_matmul(e.vectors, lam), oracle::naive_transpose(e.vectors));
    CHECK(oracle::max_abs_diff(rec, a) < 1e-9);
    const Matrix utu = oracle::naive_matmul(oracle::naive_transpose(e.vectors), e.vectors);
    CHECK(oracle::max_abs_diff(utu, Matrix::identity(n)) < 1e-9);
  }
}

TEST_CASE("sym_eigen rejects non-square and asymmetric input") {
  CHECK_THROWS_AS(hoif::sym_eigen(Matrix(2, 3)), hoif::DimensionError);
  CHECK_THROWS(hoif::sym_eigen(Matrix{{1, 2}, {0, 1}}));
}

TEST_CASE("solve_spd hand cases and residual") {
  std::mt19937_64 rng(31);
  const Matrix x = oracle::random_matrix(3, 2, rng);
  CHECK(oracle::max_abs_diff(hoif::solve_spd(Matrix::identity(3), x), x) == 0.0);
  const Matrix d{{2, 0}, {0, 4}};
  CHECK(oracle::max_abs_diff(hoif::solve_spd(d, Matrix{{2}, {4}}), Matrix{{1}, {1}}) < 1e-15);

  for (int trial = 0; trial < 10; ++trial) {
    const Matrix g = oracle::random_matrix(8, 8, rng);
    Matrix m = oracle::naive_matmul(g, oracle::naive_transpose(g));
    for (std::size_t i = 0; i < 8; ++i) m(i, i) += 0.5;
    const Matrix b = oracle::random_matrix(8, 3, rng);
    const Matrix sol = hoif::solve_spd(m, b);
    CHECK(oracle::max_abs_diff(oracle::naive_matmul(m, sol), b) < 1e-9);
  }
}

TEST_CASE("cholesky reports the failing pivot on non-SPD input") {
  try {
    hoif::cholesky(Matrix{{1, 2}, {2, 1}});
    FAIL("expected NumericalError");
  } catch (const hoif::NumericalError& e) {
    CHECK(std::string(e.what()).find("pivot") != std::string::npos);
  }
}

TEST_CASE("kabsch identity, constructed rotation and similarity recovery") {
  std::mt19937_64 rng(41);
  const Matrix p = oracle::random_matrix(10, 3, rng, -100, 100);

  const auto id = hoif::kabsch_align(p, p, true);
  CHECK(oracle::max_abs_diff(id.rotation, Matrix::identity(3)) < 1e-9);
  CHECK(id.scale == doctest::Approx(1.0).epsilon(1e-12));
  for (double t : id.translation) CHECK(std::abs(t) < 1e-9);

  const Matrix rz = oracle::axis_angle(0, 0, 1, std::numbers::pi / 2);
  const Matrix q = oracle::transform_rows(p, rz, 1.0, {0, 0, 0});
  const auto rot = hoif::kabsch_align(p, q, false);
  CHECK(oracle::max_abs_diff(rot.apply(p), q) < 1e-9);

  for (int trial = 0; trial < 20; ++trial) {
    const Matrix r0 = oracle::random_rotation(rng);
    const std::vector<double> t0 = {50.0 * trial, -20.0, 7.5};
    const Matrix q2 = oracle::transform_rows(p, r0, 2.0, t0);
    const auto fit = hoif::kabsch_align(p, q2, true);
    CHECK(fit.scale == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(oracle::max_abs_diff(fit.rotation, r0) < 1e-6);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(fit.translation[a] - t0[a]) < 1e-6);
    CHECK(hoif::determinant3(fit.rotation) == doctest::Approx(1.0).epsilon(1e-9));
    const Matrix rtr = oracle::naive_matmul(oracle::naive_transpose(fit.rotation), fit.rotation);
    CHECK(oracle::max_abs_diff(rtr, Matrix::identity(3)) < 1e-9);
  }
}

TEST_CASE("kabsch resolves reflections to a proper rotation") {
  std::mt19937_64 rng(42);
  const Matrix p = oracle::random_matrix(12, 3, rng);
  Matrix q = p;
  for (std::size_t i = 0; i < q.rows(); ++i) q(i, 2) = -q(i, 2);
  const auto fit = hoif::kabsch_align(p, q, true);
  CHECK(hoif::determinant3(fit.rotation) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kabsch objective is invariant under a shared rigid motion") {
  std::mt19937_64 rng(43);
  auto objective = [](const Matrix& p, const Matrix& q) {
    const auto fit = hoif::kabsch_align(p, q, true);
    const Matrix mapped = fit.apply(p);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::pow(mapped.data()[i] - q.data()[i], 2);
    return s;
  };
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix p = oracle::random_matrix(9, 3, rng), q = oracle::random_matrix(9, 3, rng);
    const Matrix r = oracle::random_rotation(rng);
    const std::vector<double> t = {1.0, -2.0, 3.0};
    const double before = objective(p, q);
    const double after = objective(oracle::transform_rows(p, r, 1.0, t), oracle::transform_rows(q, r, 1.0, t));
    CHECK(after == doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("kabsch rejects degenerate input") {
  CHECK_THROWS(hoif::kabsch_align(Matrix(2, 3, 1.0), Matrix(2, 3, 1.0), true));
  Matrix line(5, 3);
  for (std::size_t i = 0; i < 5; ++i) line(i, 0) = static_cast<double>(i);
  CHECK_THROWS_AS(hoif::kabsch_align(line, line, true), hoif::NumericalError);
}
