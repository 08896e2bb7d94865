#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "predvar/datagen.hpp"
#include "predvar/selection.hpp"
#include "support.hpp"

using namespace predvar;
using testing::gaussian;

namespace {

void expect_kind(auto&& fn, ErrorKind kind) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector random_spectrum(std::mt19937_64& rng, int ell) {
  std::uniform_real_distribution<double> u(0.0, 0.99);
  Vector v(ell);
  for (int i = 0; i < ell; ++i) v(i) = u(rng);
  std::sort(v.data(), v.data() + ell, std::greater<>());
  return v;
}

}  // namespace

TEST_CASE("rrmfpe hand evaluation") {
  const double expect = std::pow(1.01 / 0.99, 2) * 0.1 * 0.5;
  CHECK(expect == doctest::Approx(0.0520406).epsilon(1e-6));
  CHECK(rrmfpe(vec({0.9, 0.5}), 3, 600) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("log_rrmfpe hand evaluation") {
  const double expect = std::log(0.1) + std::log(0.5) + 2.0 * 3 * 4 / 600.0;
  CHECK(expect == doctest::Approx(-2.955732).epsilon(1e-7));
  CHECK(log_rrmfpe(vec({0.9, 0.5}), 3, 600) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("no predictability and a large sample give a value near one") {
  CHECK(rrmfpe(Vector::Zero(3), 2, 100000000) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(log_rrmfpe(Vector::Zero(3), 2, 600) == 2.0 * 2 * 9 / 600.0);
}

TEST_CASE("perfectly predicted factors are excluded") {
  const double with_one = rrmfpe(vec({1.0, 0.5}), 1, 100);
  CHECK(std::isfinite(with_one));
  CHECK(with_one > 0.0);
  CHECK(with_one == doctest::Approx(std::pow(1.02 / 0.98, 2) * 0.5));
  CHECK(std::isfinite(log_rrmfpe(vec({1.0, 0.5}), 1, 100)));
}

TEST_CASE("penalty domain") {
  expect_kind([] { rrmfpe(Vector::Zero(2), 3, 6); }, ErrorKind::PenaltyDomain);
  expect_kind([] { log_rrmfpe(Vector::Zero(2), 5, 10); }, ErrorKind::PenaltyDomain);
}

TEST_CASE("log_rrmfpe grows linearly in s for a fixed spectrum") {
  const Vector lam = vec({0.7, 0.2});
  const double step = log_rrmfpe(lam, 2, 1000) - log_rrmfpe(lam, 1, 1000);
  CHECK(step == doctest::Approx(2.0 * 4 / 1000.0));
  for (int s = 2; s < 8; ++s) {
    CHECK(log_rrmfpe(lam, s + 1, 1000) - log_rrmfpe(lam, s, 1000) == doctest::Approx(step));
  }
}

TEST_CASE("rrmfpe decreases in each spectrum entry") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int ell = testing::uniform_int(rng, 1, 5);
    Vector lam = random_spectrum(rng, ell);
    const int i = testing::uniform_int(rng, 0, ell - 1);
    Vector more = lam;
    more(i) = std::min(0.999, lam(i) + 0.01);
    CHECK(rrmfpe(more, 2, 500) < rrmfpe(lam, 2, 500));
    CHECK(log_rrmfpe(more, 2, 500) < log_rrmfpe(lam, 2, 500));
  }
}

TEST_CASE("log form tracks the exact criterion when s ell / N is small") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5000;
    std::vector<std::pair<double, double>> scores;
    for (int ell = 1; ell <= 5; ++ell) {
      for (int s = 1; s <= 10; ++s) {
        const Vector lam = random_spectrum(rng, ell);
        const double x = static_cast<double>(s * ell) / n;
        REQUIRE(x <= 0.01);
        const double exact = std::log(rrmfpe(lam, s, n));
        const double approx = log_rrmfpe(lam, s, n);
        CHECK(std::abs(exact - approx) <= ell * x * x * x);
        scores.emplace_back(exact, approx);
      }
    }
    const auto by_first = std::min_element(scores.begin(), scores.end(),
                                           [](auto& a, auto& b) { return a.first < b.first; });
    const auto by_second = std::min_element(scores.begin(), scores.end(),
                                            [](auto& a, auto& b) { return a.second < b.second; });
    CHECK(by_first == by_second);
  }
}

TEST_CASE("select single cell") {
  datagen::RrvarConfig cfg;
  cfg.p = 4;
  cfg.ell = 2;
  cfg.n = 400;
  cfg.seed = 3;
  const SelectionGrid g = select(datagen::rrvar_series(cfg).y, {2, 2}, {1, 1}, FitOptions{});
  REQUIRE(g.entries.size() == 1);
  CHECK(g.best_ell == 2);
  CHECK(g.best_s == 1);
  CHECK(g.entries[0].spectrum.size() == 2);
}

TEST_CASE("select on white noise prefers the smallest ell") {
  std::mt19937_64 rng(4);
  const SelectionGrid g = select(gaussian(rng, 3000, 4), {1, 4}, {1, 2}, FitOptions{});
  CHECK(g.best_ell == 1);
}

TEST_CASE("select recovers the order of a well-separated reduced-rank VAR") {
  datagen::RrvarConfig cfg;
  cfg.p = 6;
  cfg.ell = 2;
  cfg.s = 1;
  cfg.n = 4000;
  cfg.seed = 5;
  cfg.spectral_radius = 0.9;
  const SelectionGrid g = select(datagen::rrvar_series(cfg).y, {1, 4}, {1, 3}, FitOptions{});
  CHECK(g.best_ell == 2);
  CHECK(g.best_s == 1);
  for (const SelectionEntry& e : g.entries) {
    if (e.failed) continue;
    CHECK(e.spectrum.minCoeff() >= 0.0);
    CHECK(e.spectrum.maxCoeff() <= 1.0);
  }
}

TEST_CASE("select is invariant to data scale and worker count") {
  datagen::RrvarConfig cfg;
  cfg.p = 5;
  cfg.ell = 2;
  cfg.s = 2;
  cfg.n = 800;
  cfg.seed = 6;
  const Matrix y = datagen::rrvar_series(cfg).y;
  const SelectionGrid a = select(y, {1, 3}, {1, 3}, FitOptions{}, 1);
  const SelectionGrid b = select(250.0 * y, {1, 3}, {1, 3}, FitOptions{}, 1);
  const SelectionGrid c = select(y, {1, 3}, {1, 3}, FitOptions{}, 4);
  CHECK(a.best_ell == b.best_ell);
  CHECK(a.best_s == b.best_s);
  REQUIRE(a.entries.size() == c.entries.size());
  CHECK(a.best_ell == c.best_ell);
  CHECK(a.best_s == c.best_s);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].ell == c.entries[i].ell);
    CHECK(a.entries[i].s == c.entries[i].s);
    CHECK(a.entries[i].log_rrmfpe == c.entries[i].log_rrmfpe);
    CHECK(a.entries[i].converged == c.entries[i].converged);
  }
  CHECK(a.entries.front().ell == 1);
  CHECK(a.entries.front().s == 1);
  CHECK(a.entries[1].s == 2);
}

TEST_CASE("select reports failed cells and rejects an all-failed grid") {
  std::mt19937_64 rng(7);
  Matrix y = gaussian(rng, 200, 3);
  y.col(2) = y.col(0);
  const SelectionGrid g = select(y, {1, 3}, {1, 1}, FitOptions{});
  REQUIRE(g.entries.size() == 3);
  CHECK(g.entries[2].failed);
  CHECK(g.entries[2].error.find("EllExceedsRank") != std::string::npos);
  CHECK(g.best_ell < 3);
  expect_kind([&] { select(y, {3, 3}, {1, 2}, FitOptions{}); }, ErrorKind::AllCellsFailed);
  expect_kind([&] { select(y, {2, 1}, {1, 1}, FitOptions{}); }, ErrorKind::InvalidArgument);
}
