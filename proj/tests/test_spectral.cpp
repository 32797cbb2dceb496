#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgraf/rng.hpp"
#include "mgraf/spectral.hpp"

using namespace mgraf;

namespace {

Matrix random_symmetric(int V, Rng& rng, double scale = 1.0) {
  Matrix m(V, V);
  for (int i = 0; i < V; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double x = scale * rng.normal();
      m(i, j) = x;
      m(j, i) = x;
    }
  }
  return m;
}

Matrix random_orthonormal(int V, int k, Rng& rng) {
  Matrix g(V, k);
  for (int c = 0; c < k; ++c) {
    for (int r = 0; r < V; ++r) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  return Matrix(qr.householderQ()).leftCols(k);
}

}  // namespace

TEST_CASE("eigen_sorted on a diagonal matrix") {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  d(2, 2) = -2.0;
  const EigenSystem sys = eigen_sorted(d);
  CHECK(sys.values[0] == doctest::Approx(3.0));
  CHECK(sys.values[1] == doctest::Approx(1.0));
  CHECK(sys.values[2] == doctest::Approx(-2.0));
  // standard basis up to the positive-sign convention
  CHECK(std::fabs(sys.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(sys.vectors(0, 0) > 0.0);
  CHECK(std::fabs(sys.vectors(1, 1)) == doctest::Approx(1.0));
  CHECK(std::fabs(sys.vectors(2, 2)) == doctest::Approx(1.0));
}

TEST_CASE("eigen_sorted invariants on random input") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix b = random_symmetric(6, rng);
    const EigenSystem sys = eigen_sorted(b);
    // orthonormality
    CHECK((sys.vectors.transpose() * sys.vectors - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <
          1e-10);
    // reconstruction
    const Matrix rec = sys.vectors * sys.values.asDiagonal() * sys.vectors.transpose();
    CHECK((rec - b).norm() / b.norm() < 1e-8);
    // descending order
    for (int j = 1; j < 6; ++j) CHECK(sys.values[j - 1] >= sys.values[j]);
  }
}

TEST_CASE("degenerate spectrum still reconstructs") {
  const Matrix id = Matrix::Identity(4, 4);
  const EigenSystem sys = eigen_sorted(id);
  for (int j = 0; j < 4; ++j) CHECK(sys.values[j] == doctest::Approx(1.0));
  const Matrix rec = sys.vectors * sys.values.asDiagonal() * sys.vectors.transpose();
  CHECK((rec - id).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("eigen_sorted rejects asymmetric input") {
  Matrix b = Matrix::Zero(3, 3);
  b(0, 1) = 1.0;
  CHECK_THROWS_AS(eigen_sorted(b), std::runtime_error);
}

TEST_CASE("select_signed_eigvecs picks both spectrum ends") {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 5.0;
  d(1, 1) = 2.0;
  d(2, 2) = -4.0;
  const Matrix q = select_signed_eigvecs(d, 1, 1);
  REQUIRE(q.cols() == 2);
  CHECK(std::fabs(q(0, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(q(2, 1)) == doctest::Approx(1.0));

  // k_neg = 0 reduces to the leading eigenvectors
  Rng rng(5);
  const Matrix b = random_symmetric(6, rng);
  const EigenSystem sys = eigen_sorted(b);
  const Matrix top = select_signed_eigvecs(b, 3, 0);
  CHECK((top - sys.vectors.leftCols(3)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(select_signed_eigvecs(b, 4, 3), std::invalid_argument);
}

TEST_CASE("proposition-2 objective: closed form and Monte-Carlo domination") {
  Rng rng(23);
  const int V = 6;
  const int k = 2;
  const Matrix b = random_symmetric(V, rng);
  const EigenSystem sys = eigen_sorted(b);
  Vector c(k);
  c << 2.0, 1.0;

  const Matrix q = select_signed_eigvecs(b, k, 0);
  double value = 0.0;
  for (int j = 0; j < k; ++j) value += c[j] * q.col(j).dot(b * q.col(j));
  double expect = 0.0;
  for (int j = 0; j < k; ++j) expect += c[j] * sys.values[j];
  CHECK(value == doctest::Approx(expect).epsilon(1e-12));

  for (int trial = 0; trial < 10000; ++trial) {
    const Matrix u = random_orthonormal(V, k, rng);
    double cand = 0.0;
    for (int j = 0; j < k; ++j) cand += c[j] * u.col(j).dot(b * u.col(j));
    CHECK(cand <= value + 1e-10);
  }
}

TEST_CASE("orthonormal_complement") {
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  const Matrix u = orthonormal_complement(e1);
  REQUIRE(u.cols() == 2);
  CHECK((u.transpose() * u - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((u.transpose() * e1).cwiseAbs().maxCoeff() < 1e-10);

  Rng rng(29);
  const Matrix q = random_orthonormal(8, 3, rng);
  const Matrix u2 = orthonormal_complement(q);
  REQUIRE(u2.cols() == 5);
  CHECK((u2.transpose() * u2 - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((u2.transpose() * q).cwiseAbs().maxCoeff() < 1e-10);

  // m = V-1 leaves a single unit vector
  const Matrix q2 = random_orthonormal(5, 4, rng);
  const Matrix u3 = orthonormal_complement(q2);
  REQUIRE(u3.cols() == 1);
  CHECK(u3.col(0).norm() == doctest::Approx(1.0));

  // rank-deficient input is rejected
  Matrix bad(3, 2);
  bad << 1, 1, 0, 0, 0, 0;
  CHECK_THROWS_AS(orthonormal_complement(bad), std::runtime_error);
}

TEST_CASE("lanczos matches dense extremes") {
  Rng rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    const int V = 40;
    const Matrix b = random_symmetric(V, rng);
    const EigenSystem dense = eigen_sorted(b);
    LanczosOptions opts;
    opts.max_steps = V;  // allow full convergence
    const EigenSystem part = lanczos_extreme(b, 2, 1, opts);
    CHECK(part.values[0] == doctest::Approx(dense.values[0]).epsilon(1e-8));
    CHECK(part.values[1] == doctest::Approx(dense.values[1]).epsilon(1e-8));
    CHECK(part.values[2] == doctest::Approx(dense.values[V - 1]).epsilon(1e-8));
    CHECK((part.vectors.transpose() * part.vectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-9);
    // vectors match up to sign (sign convention should align them)
    CHECK((part.vectors.col(0) - dense.vectors.col(0)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("top_magnitude_eigvecs") {
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = 3.0;
  d(1, 1) = -5.0;
  d(2, 2) = 1.0;
  d(3, 3) = 0.5;
  const Matrix q = top_magnitude_eigvecs(d, 2);
  // largest magnitudes are -5 (node 1) and 3 (node 0)
  CHECK(std::fabs(q(1, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(q(0, 1)) == doctest::Approx(1.0));
}
