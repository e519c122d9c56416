#include <doctest.h>

#include <cmath>
#include <limits>

#include "stormforge/cmaes.hpp"
#include "stormforge/error.hpp"

using namespace stormforge;
using stormforge::cmaes::Config;
using stormforge::cmaes::Optimizer;

namespace {

Config box(std::size_t n, double lo, double hi, std::uint64_t seed) {
  Config c;
  c.dimension = n;
  c.lower.assign(n, lo);
  c.upper.assign(n, hi);
  c.seed = seed;
  return c;
}

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

double rosenbrock(const Eigen::VectorXd& x) {
  return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
}

}  // namespace

TEST_SUITE("cmaes") {
  TEST_CASE("config validation") {
    Config c = box(3, -1, 1, 0);
    CHECK_NOTHROW(c.validate());
    CHECK(c.parent_count() == 7);
    c.population = 3;
    CHECK_THROWS_AS(c.validate(), Error);
    c = box(3, -1, 1, 0);
    c.parents = 8;
    CHECK_THROWS_AS(c.validate(), Error);
    c = box(3, -1, 1, 0);
    c.upper[1] = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = box(3, -1, 1, 0);
    c.sigma0 = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("canonical strategy parameters") {
    const auto p = cmaes::StrategyParameters::defaults(10, 10, 5);
    CHECK(p.mu_eff == doctest::Approx(3.1672).epsilon(1e-4));
    double sum = 0.0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      sum += p.weights[i];
      if (i > 0) CHECK(p.weights[i] < p.weights[i - 1]);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.c_1 + p.c_mu <= 1.0);
    CHECK(p.chi_n == doctest::Approx(std::sqrt(10.0) * (1 - 1 / 40.0 + 1 / 2100.0)).epsilon(1e-15));
  }

  TEST_CASE("candidates stay in the box and are reproducible") {
    Config c = box(5, -2, 3, 42);
    Optimizer a(c), b(c);
    for (int g = 0; g < 20; ++g) {
      const auto xs = a.ask();
      const auto ys = b.ask();
      REQUIRE(xs.size() == 15);
      std::vector<double> f;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        REQUIRE(xs[i] == ys[i]);
        for (Eigen::Index d = 0; d < 5; ++d) {
          REQUIRE(xs[i](d) >= -2.0);
          REQUIRE(xs[i](d) <= 3.0);
        }
        f.push_back(sphere(xs[i]));
      }
      a.tell(f);
      b.tell(f);
    }
  }

  TEST_CASE("vanishing step size collapses the population onto the mean") {
    Config c = box(4, -1, 1, 7);
    c.sigma0 = 1e-13;
    c.initial_mean = {0.1, -0.2, 0.3, 0.0};
    Optimizer opt(c);
    for (const auto& x : opt.ask()) {
      for (Eigen::Index d = 0; d < 4; ++d) CHECK(x(d) == doctest::Approx(c.initial_mean[d]).epsilon(1e-9));
    }
  }

  TEST_CASE("update depends only on the ranking") {
    Config c = box(6, -5, 5, 9);
    Optimizer raw(c), warped(c);
    for (int g = 0; g < 15; ++g) {
      const auto xs = raw.ask();
      warped.ask();
      std::vector<double> f, h;
      for (const auto& x : xs) {
        f.push_back(sphere(x));
        h.push_back(std::exp(f.back()) * 3.0 - 11.0);
      }
      raw.tell(f);
      warped.tell(h);
      REQUIRE(raw.sigma() == warped.sigma());
      REQUIRE(raw.internal_mean() == warped.internal_mean());
      REQUIRE(raw.covariance() == warped.covariance());
      REQUIRE(raw.path_sigma() == warped.path_sigma());
      REQUIRE(raw.path_c() == warped.path_c());
    }
  }

  TEST_CASE("covariance stays symmetric positive definite and best-so-far never rises") {
    Config c = box(8, -3, 3, 11);
    Optimizer opt(c);
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < 60; ++g) {
      std::vector<double> f;
      for (const auto& x : opt.ask()) f.push_back(rosenbrock(x.head(2)) + x.tail(6).squaredNorm());
      opt.tell(f);
      const Eigen::MatrixXd& C = opt.covariance();
      REQUIRE((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      REQUIRE(opt.eigenvalues().minCoeff() > 0.0);
      REQUIRE(opt.best_value() <= best);
      best = opt.best_value();
    }
  }

  TEST_CASE("tell rejects bad input") {
    Optimizer opt(box(2, -1, 1, 0));
    opt.ask();
    std::vector<double> f(15, 1.0);
    f[3] = std::numeric_limits<double>::quiet_NaN();
    try {
      opt.tell(f);
      FAIL("expected kNonFiniteObjective");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kNonFiniteObjective);
    }
    f[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(opt.tell(f), Error);
    CHECK_THROWS_AS(opt.tell(std::vector<double>(14, 0.0)), Error);
  }

  TEST_CASE("sphere n=10 converges on at least 19 of 20 seeds within 6000 evaluations") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Config c = box(10, -3, 3, seed);
      c.initial_mean.assign(10, 1.0);
      c.max_generations = 6000 / 15;
      c.target = 1e-8;
      const auto r = cmaes::minimize(sphere, c);
      ok += r.reached_target && r.evaluations <= 6000;
    }
    CHECK(ok >= 19);
  }

  TEST_CASE("Rosenbrock n=2 converges on at least 18 of 20 seeds within 20000 evaluations") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Config c = box(2, -3, 3, seed);
      c.initial_mean = {-1.2, 1.0};
      c.max_generations = 20000 / 15;
      c.target = 1e-6;
      const auto r = cmaes::minimize(rosenbrock, c);
      ok += r.reached_target && r.best_value < 1e-6;
    }
    CHECK(ok >= 18);
  }

  TEST_CASE("constant objective stays finite") {
    Config c = box(5, -1, 2, 3);
    c.max_generations = 100;
    const auto r = cmaes::minimize([](const Eigen::VectorXd&) { return 4.2; }, c);
    CHECK(r.history.size() == 100);
    for (const auto& h : r.history) REQUIRE(std::isfinite(h.sigma));
    CHECK(r.best_value == 4.2);
    Optimizer opt(c);
    for (int g = 0; g < 100; ++g) {
      opt.ask();
      opt.tell(std::vector<double>(15, 4.2));
    }
    const Eigen::VectorXd m = opt.mean();
    for (Eigen::Index d = 0; d < 5; ++d) {
      CHECK(m(d) >= -1.0);
      CHECK(m(d) <= 2.0);
    }
    CHECK(std::isfinite(opt.sigma()));
  }

  TEST_CASE("target stops at the first generation that reaches it") {
    Config c = box(3, -2, 2, 5);
    c.initial_mean = {1.5, 1.5, 1.5};
    c.target = 1e-3;
    c.max_generations = 500;
    const auto r = cmaes::minimize(sphere, c);
    REQUIRE(r.reached_target);
    for (std::size_t g = 0; g + 1 < r.history.size(); ++g) CHECK(r.history[g].best > 1e-3);
    CHECK(r.history.back().best <= 1e-3);
    CHECK(r.evaluations == 15 * r.history.size());
  }

  TEST_CASE("box transform round trip") {
    cmaes::BoxTransform t{Eigen::Vector2d(-1, 10), Eigen::Vector2d(3, 20)};
    const Eigen::Vector2d x(0.5, 12.0);
    CHECK(t.to_box(t.to_internal(x)).isApprox(x, 1e-12));
    const Eigen::Vector2d far = t.to_box(Eigen::Vector2d(1e6, -1e6));
    CHECK(far(0) <= 3.0);
    CHECK(far(1) >= 10.0);
  }
}
