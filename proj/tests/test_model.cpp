#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "predvar/model.hpp"
#include "support.hpp"

using namespace predvar;
using testing::gaussian;

namespace {

PredVarModel scalar_model(std::vector<double> lags, double noise = 1.0) {
  std::vector<Matrix> coefs;
  for (double b : lags) coefs.push_back(Matrix::Constant(1, 1, b));
  return make_model(Matrix::Identity(1, 1), Matrix(1, 0), coefs, Matrix::Constant(1, 1, noise),
                    Matrix(0, 0), Vector::Zero(1));
}

// Stationary covariance of the latent VAR by iterating the companion Lyapunov recursion.
Matrix stationary_latent_cov(const PredVarModel& m) {
  const int ell = m.ell, s = m.s;
  Matrix a = Matrix::Zero(ell * s, ell * s);
  for (int j = 0; j < s; ++j) a.block(0, j * ell, ell, ell) = m.coefs[j];
  if (s > 1) a.bottomLeftCorner(ell * (s - 1), ell * (s - 1)).setIdentity();
  Matrix q = Matrix::Zero(ell * s, ell * s);
  q.topLeftCorner(ell, ell) = m.latent_innovation_cov;
  Matrix x = q;
  for (int it = 0; it < 5000; ++it) x = a * x * a.transpose() + q;
  return x.topLeftCorner(ell, ell);
}

void expect_kind(auto&& fn, ErrorKind kind) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("latent_scores with identity weights returns centered data") {
  std::mt19937_64 rng(1);
  PredVarModel m = make_model(Matrix::Identity(3, 3), Matrix(3, 0), {Matrix::Zero(3, 3)},
                              Matrix::Identity(3, 3), Matrix(0, 0), Vector::Zero(3));
  const Matrix y = gaussian(rng, 10, 3);
  CHECK(numerics::max_abs(latent_scores(m, y) - y) < 1e-14);
}

TEST_CASE("latent_scores of the mean are zero") {
  std::mt19937_64 rng(2);
  const PredVarModel m = testing::random_model(rng, 5, 2, 1);
  const Matrix y = m.mean.transpose().replicate(7, 1);
  CHECK(numerics::max_abs(latent_scores(m, y)) < 1e-12);
}

TEST_CASE("latent_scores match a naive loop") {
  std::mt19937_64 rng(3);
  const PredVarModel m = testing::random_model(rng, 6, 3, 2);
  const Matrix y = gaussian(rng, 20, 6);
  const Matrix got = latent_scores(m, y);
  for (int k = 0; k < 20; ++k) {
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int j = 0; j < 6; ++j) acc += (y(k, j) - m.mean(j)) * m.weights(j, i);
      CHECK(got(k, i) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("latent_scores checks the column count") {
  std::mt19937_64 rng(4);
  const PredVarModel m = testing::random_model(rng, 4, 2, 1);
  expect_kind([&] { latent_scores(m, gaussian(rng, 5, 3)); }, ErrorKind::DimensionMismatch);
  expect_kind([&] { static_noise(m, gaussian(rng, 5, 3)); }, ErrorKind::DimensionMismatch);
}

TEST_CASE("static_noise has zero width when ell equals p") {
  const PredVarModel m = make_model(Matrix::Identity(2, 2), Matrix(2, 0), {Matrix::Zero(2, 2)},
                                    Matrix::Identity(2, 2), Matrix(0, 0), Vector::Zero(2));
  const Matrix e = static_noise(m, Matrix::Ones(4, 2));
  CHECK(e.rows() == 4);
  CHECK(e.cols() == 0);
}

TEST_CASE("static_noise with orthonormal loadings is a plain projection") {
  std::mt19937_64 rng(5);
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian(rng, 5, 5)).householderQ();
  const Vector mean = gaussian(rng, 5, 1).col(0);
  const PredVarModel m = make_model(q.leftCols(2), q.rightCols(3), {Matrix::Zero(2, 2)},
                                    Matrix::Identity(2, 2), Matrix::Identity(3, 3), mean);
  CHECK(numerics::max_abs(m.weights - q.leftCols(2)) < 1e-12);
  const Matrix y = gaussian(rng, 8, 5);
  const Matrix expect = (y.rowwise() - mean.transpose()) * q.rightCols(3);
  CHECK(numerics::max_abs(static_noise(m, y) - expect) < 1e-12);
}

TEST_CASE("decomposition identity on random models") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int p = testing::uniform_int(rng, 1, 8);
    const int ell = testing::uniform_int(rng, 1, p);
    const int s = testing::uniform_int(rng, 1, 3);
    const PredVarModel m = testing::random_model(rng, p, ell, s);
    CHECK_NOTHROW(validate(m));
    const Matrix y = 3.0 * gaussian(rng, 15, p);
    const Matrix back = latent_scores(m, y) * m.loadings.transpose() +
                        static_noise(m, y) * m.static_loadings.transpose();
    CHECK(numerics::max_abs((back.rowwise() + m.mean.transpose()) - y) <= 1e-8);
  }
}

TEST_CASE("predict_one_step with zero dynamics returns the mean") {
  std::mt19937_64 rng(7);
  PredVarModel m = testing::random_model(rng, 4, 2, 2);
  for (Matrix& b : m.coefs) b.setZero();
  const Prediction pred = predict_one_step(m, gaussian(rng, 10, 4));
  CHECK(pred.latent.rows() == 8);
  CHECK(numerics::max_abs(pred.latent) == 0.0);
  CHECK(numerics::max_abs(pred.observed.rowwise() - m.mean.transpose()) < 1e-14);
}

TEST_CASE("predict_one_step with a random-walk latent repeats the last score") {
  std::mt19937_64 rng(8);
  PredVarModel m = testing::random_model(rng, 3, 2, 1);
  m.coefs[0] = Matrix::Identity(2, 2);
  const Matrix y = gaussian(rng, 6, 3);
  const Matrix v = latent_scores(m, y);
  CHECK(numerics::max_abs(predict_one_step(m, y).latent - v.topRows(5)) < 1e-12);
}

TEST_CASE("predict_one_step hand evaluation with two lags") {
  const PredVarModel m = scalar_model({0.5, 0.25});
  Matrix y(3, 1);
  y << 1.0, 2.0, 0.0;
  const Prediction pred = predict_one_step(m, y);
  REQUIRE(pred.latent.rows() == 1);
  CHECK(pred.latent(0, 0) == doctest::Approx(1.25));
}

TEST_CASE("predict_one_step needs s + 1 rows") {
  const PredVarModel m = scalar_model({0.5, 0.25});
  expect_kind([&] { predict_one_step(m, Matrix::Ones(2, 1)); }, ErrorKind::InsufficientHistory);
  expect_kind([&] { predict_one_step(m, Matrix::Ones(4, 2)); }, ErrorKind::DimensionMismatch);
}

TEST_CASE("predict_one_step is equivariant under latent similarity transforms") {
  std::mt19937_64 rng(9);
  const PredVarModel m = testing::random_model(rng, 5, 2, 2);
  Matrix t;
  do {
    t = gaussian(rng, 2, 2);
  } while (testing::cond2(t) > 10.0);
  const Matrix ti = t.inverse();
  PredVarModel n = m;
  n.loadings = m.loadings * ti;
  n.weights = m.weights * t.transpose();
  for (Matrix& b : n.coefs) b = t * b * ti;
  const Matrix y = gaussian(rng, 12, 5);
  CHECK(numerics::max_abs(predict_one_step(m, y).observed - predict_one_step(n, y).observed) <= 1e-8);
}

TEST_CASE("simulate with no noise and no dynamics is constant") {
  PredVarModel m = make_model(Matrix::Identity(3, 3).leftCols(1), Matrix::Identity(3, 3).rightCols(2),
                              {Matrix::Zero(1, 1)}, Matrix::Zero(1, 1), Matrix::Zero(2, 2),
                              Vector::LinSpaced(3, 1.0, 3.0));
  const Matrix y = simulate(m, 50, 1);
  CHECK(numerics::max_abs(y.rowwise() - m.mean.transpose()) == 0.0);
}

TEST_CASE("simulate AR(1) stationary variance") {
  const PredVarModel m = scalar_model({0.9});
  const Matrix y = simulate(m, 20000, 42);
  const double var = (y.array() - y.mean()).square().mean();
  CHECK(std::abs(var - 1.0 / (1.0 - 0.81)) <= 0.1 * 5.263);
}

TEST_CASE("simulate matches the Lyapunov covariance") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 3; ++trial) {
    const PredVarModel m = testing::random_model(rng, 5, 2, 2);
    const Matrix y = simulate(m, 20000, 100 + trial);
    const Matrix yc = y.rowwise() - y.colwise().mean();
    const Matrix sample = yc.transpose() * yc / 20000.0;
    const Matrix expect = m.loadings * stationary_latent_cov(m) * m.loadings.transpose() +
                          m.static_loadings * m.static_noise_cov * m.static_loadings.transpose();
    CHECK((sample - expect).norm() / expect.norm() <= 0.10);
  }
}

TEST_CASE("simulate is reproducible and checks its inputs") {
  std::mt19937_64 rng(11);
  PredVarModel m = testing::random_model(rng, 4, 2, 1);
  CHECK(simulate(m, 30, 5) == simulate(m, 30, 5));
  CHECK(simulate(m, 30, 5) != simulate(m, 30, 6));
  PredVarModel unstable = m;
  unstable.coefs[0] = 1.1 * Matrix::Identity(2, 2);
  expect_kind([&] { simulate(unstable, 10, 1); }, ErrorKind::UnstableDynamics);
  PredVarModel bad = m;
  bad.latent_innovation_cov(0, 0) = -1.0;
  expect_kind([&] { simulate(bad, 10, 1); }, ErrorKind::NotPsd);
}

TEST_CASE("to_rrvar examples") {
  std::mt19937_64 rng(12);
  PredVarModel m = testing::random_model(rng, 4, 2, 2);
  for (Matrix& b : m.coefs) b.setZero();
  for (const Matrix& a : to_rrvar(m).lag_matrices) CHECK(numerics::max_abs(a) == 0.0);

  const std::vector<Matrix> b{gaussian(rng, 3, 3) * 0.2, gaussian(rng, 3, 3) * 0.1};
  const PredVarModel full = make_model(Matrix::Identity(3, 3), Matrix(3, 0), b, Matrix::Identity(3, 3),
                                       Matrix(0, 0), Vector::Zero(3));
  const RrvarView view = to_rrvar(full);
  for (int j = 0; j < 2; ++j) CHECK(numerics::max_abs(view.lag_matrices[j] - b[j]) < 1e-14);
}

TEST_CASE("to_rrvar predictions equal latent predictions mapped through P") {
  std::mt19937_64 rng(13);
  const PredVarModel m = testing::random_model(rng, 6, 2, 3);
  const Matrix y = gaussian(rng, 20, 6);
  const Matrix yc = y.rowwise() - m.mean.transpose();
  const RrvarView view = to_rrvar(m);
  const Prediction pred = predict_one_step(m, y);
  for (int k = 3; k < 20; ++k) {
    Vector direct = Vector::Zero(6);
    for (int j = 1; j <= 3; ++j) direct += view.lag_matrices[j - 1] * yc.row(k - j).transpose();
    const Vector via_latent = m.loadings * pred.latent.row(k - 3).transpose();
    CHECK((direct - via_latent).cwiseAbs().maxCoeff() <= 1e-10);
  }
  for (const Matrix& a : view.lag_matrices) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-8 * sv(0);
    CHECK(rank <= 2);
  }
}

TEST_CASE("canonicalize_rrvar fixed point") {
  std::mt19937_64 rng(14);
  const PredVarModel m = testing::random_model(rng, 5, 2, 2);
  const CanonicalRrvar c = canonicalize_rrvar(m.loadings, m.coefs, m.weights);
  CHECK(numerics::max_abs(c.loadings - m.loadings) <= 1e-12);
  CHECK(numerics::max_abs(c.weights - m.weights) <= 1e-12);
  for (int j = 0; j < 2; ++j) CHECK(numerics::max_abs(c.coefs[j] - m.coefs[j]) <= 1e-12);
}

TEST_CASE("canonicalize_rrvar undoes a scaling of the weights") {
  std::mt19937_64 rng(15);
  const PredVarModel m = testing::random_model(rng, 5, 2, 2);
  const CanonicalRrvar c = canonicalize_rrvar(m.loadings, m.coefs, 2.0 * m.weights);
  CHECK(numerics::max_abs(c.weights - m.weights) <= 1e-12);
  for (int j = 0; j < 2; ++j) {
    CHECK(numerics::max_abs(c.coefs[j] - 2.0 * m.coefs[j]) <= 1e-12);
    const Matrix before = m.loadings * m.coefs[j] * (2.0 * m.weights).transpose();
    CHECK(numerics::max_abs(c.loadings * c.coefs[j] * c.weights.transpose() - before) <= 1e-8);
  }
}

TEST_CASE("canonicalize_rrvar preserves lag products of a general factorization") {
  std::mt19937_64 rng(16);
  const Matrix p = gaussian(rng, 5, 2);
  const Matrix r = gaussian(rng, 5, 2);
  const std::vector<Matrix> b{gaussian(rng, 2, 2), gaussian(rng, 2, 2)};
  const CanonicalRrvar c = canonicalize_rrvar(p, b, r);
  CHECK(numerics::max_abs(c.weights.transpose() * c.loadings - Matrix::Identity(2, 2)) <= 1e-8);
  for (int j = 0; j < 2; ++j) {
    CHECK(numerics::max_abs(c.loadings * c.coefs[j] * c.weights.transpose() - p * b[j] * r.transpose()) <= 1e-8);
  }
}

TEST_CASE("canonicalize_rrvar rejects a singular cross product") {
  Matrix p = Matrix::Zero(3, 1), r = Matrix::Zero(3, 1);
  p(0, 0) = 1.0;
  r(1, 0) = 1.0;
  expect_kind([&] { canonicalize_rrvar(p, {Matrix::Ones(1, 1)}, r); }, ErrorKind::SingularCrossProduct);
}

TEST_CASE("log_likelihood with perfect predictions") {
  const PredVarModel m = scalar_model({1.0});
  const Matrix y = Matrix::Ones(11, 1);
  const double expect = -0.5 * 10.0 * 1.0 * std::log(2.0 * std::numbers::pi);
  CHECK(log_likelihood(m, y) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(likelihood_objective(m, y) == doctest::Approx(0.0));
}

TEST_CASE("likelihood objective is additive over duplicated samples") {
  std::mt19937_64 rng(17);
  const PredVarModel m = testing::random_model(rng, 4, 2, 1);
  const Matrix y = simulate(m, 200, 3);
  Matrix twice(400, 4);
  twice << y, y;
  Matrix seam(2, 4);
  seam << y.bottomRows(1), y.topRows(1);
  const double one = likelihood_objective(m, y);
  CHECK(likelihood_objective(m, twice) == doctest::Approx(2.0 * one + likelihood_objective(m, seam)).epsilon(1e-8));
  expect_kind([&] { likelihood_objective(m, y.topRows(1)); }, ErrorKind::InsufficientHistory);
}

TEST_CASE("validate rejects broken duality") {
  std::mt19937_64 rng(18);
  PredVarModel m = testing::random_model(rng, 4, 2, 1);
  CHECK_NOTHROW(validate(m));
  m.weights(0, 0) += 0.1;
  CHECK_THROWS_AS(validate(m), Error);
}
