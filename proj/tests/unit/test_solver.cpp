#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "l1pen/cv.hpp"
#include "l1pen/errors.hpp"
#include "l1pen/solver.hpp"
#include "support.hpp"

using namespace l1pen;
using testing::gaussian;
using testing::SingleFamily;

namespace {

// Unpenalized p = 1 logit: Newton on the score with a bisection safeguard.
double scalar_logit_mle(const VectorXd& x, const VectorXd& y) {
  const auto score = [&](double b) {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) s += (1.0 / (1.0 + std::exp(-b * x[i])) - y[i]) * x[i];
    return s;
  };
  double lo = -20.0, hi = 20.0, b = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double s = score(b);
    if (s > 0) hi = b;
    else lo = b;
    double h = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-b * x[i]));
      h += p * (1 - p) * x[i] * x[i];
    }
    double next = b - s / h;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - b) < 1e-15) break;
    b = next;
  }
  return b;
}

struct MultiCase {
  std::string name;
  Problem problem;
};

std::vector<MultiCase> multi_problems(Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  MatrixXd Y(n, 1);
  for (Index i = 0; i < n; ++i) Y(i, 0) = static_cast<double>(gen() % 3);
  std::vector<MultiCase> out;
  {
    MultiIndexData d;
    d.Z = gaussian(n, 6, seed + 1);
    d.L1 = 2;
    out.push_back({"mnl", make_problem(d, Y, make_loss("mnl", "J=2"))});
  }
  {
    MultiIndexData d;
    d.V = {gaussian(n, 5, seed + 2), gaussian(n, 5, seed + 3)};
    out.push_back({"clogit", make_problem(d, Y, make_loss("clogit", "J=2"))});
  }
  {
    MultiIndexData d;
    d.Z = gaussian(n, 4, seed + 4);
    d.L1 = 2;
    d.V = {gaussian(n, 3, seed + 5), gaussian(n, 3, seed + 6), gaussian(n, 3, seed + 7)};
    out.push_back({"mixed_logit", make_problem(d, Y, make_loss("mixed_logit", "J=2"))});
  }
  return out;
}

std::vector<std::pair<std::string, Problem>> all_problems(Index n, Index p, std::uint64_t seed) {
  std::vector<std::pair<std::string, Problem>> out;
  for (const SingleFamily& fam : testing::single_index_families()) {
    const LossModel m = make_loss(fam.name, fam.params);
    out.emplace_back(fam.name, make_problem(testing::family_dataset(fam, n, p, seed), m));
  }
  for (auto& c : multi_problems(n, seed)) out.emplace_back(c.name, std::move(c.problem));
  return out;
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  for (double v : {-7.25, 0.0, 1e-300, 4.5}) CHECK(soft_threshold(v, 0.0) == v);
  CHECK_THROWS_AS(soft_threshold(1.0, -1e-12), InputError);
}

TEST_CASE("lambda_max of an all-ones column with all-one outcomes") {
  const Problem P{IndexDesign(MatrixXd::Ones(7, 1)), MatrixXd::Ones(7, 1), LossModel::logit()};
  CHECK(lambda_max(P) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("lambda_max is the zero-solution threshold") {
  const MatrixXd X = gaussian(150, 30, 1);
  VectorXd theta = VectorXd::Zero(30);
  theta.head(2).setOnes();
  const Dataset data = make_dataset(X, testing::draw_outcomes(testing::single_index_families()[0], X, theta, 2),
                                    LossModel::logit());
  const double lmax = lambda_max(data, LossModel::logit());
  const FitResult above = fit(data, LossModel::logit(), 1.001 * lmax);
  CHECK(above.theta.isZero(0.0));
  CHECK(above.converged);
  const FitResult below = fit(data, LossModel::logit(), 0.9 * lmax);
  CHECK_FALSE(below.theta.isZero(0.0));
  CHECK(below.kkt_residual <= 1e-6);
}

TEST_CASE("unpenalized one-dimensional logit matches a Newton oracle") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  const Index n = 500;
  MatrixXd X(n, 1);
  MatrixXd Y(n, 1);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = z(gen);
    Y(i, 0) = testing::bernoulli(testing::sigmoid(0.8 * X(i, 0)), gen);
  }
  const Problem P{IndexDesign(X), Y, LossModel::logit()};
  FitConfig cfg;
  cfg.kkt_tol = 1e-12;
  const FitResult r = fit(P, 0.0, std::nullopt, cfg);
  REQUIRE(r.converged);
  CHECK(std::abs(r.theta[0] - scalar_logit_mle(X.col(0), Y.col(0))) < 1e-6);
}

TEST_CASE("orthogonal-design expectile(0.5) equals soft-thresholded least squares") {
  const Index n = 64;
  // Columns orthogonal with X'X / n = I.
  const MatrixXd G = gaussian(n, 2, 4);
  const Eigen::HouseholderQR<MatrixXd> qr(G);
  const MatrixXd X = qr.householderQ() * MatrixXd::Identity(n, 2) * std::sqrt(static_cast<double>(n));
  VectorXd y = X * Eigen::Vector2d(1.5, -0.2) + 0.3 * gaussian(n, 1, 5).col(0);
  const LossModel m = make_loss("expectile", "tau=0.5");
  const Dataset data = make_dataset(X, MatrixXd(y), m);
  FitConfig cfg;
  cfg.kkt_tol = 1e-10;
  const VectorXd ols = X.transpose() * y / static_cast<double>(n);
  for (double lambda : {0.0, 0.05, 0.3, 1.0, 2.0}) {
    const FitResult r = fit(data, m, lambda, std::nullopt, cfg);
    REQUIRE(r.converged);
    for (Index j = 0; j < 2; ++j) CHECK(std::abs(r.theta[j] - soft_threshold(ols[j], lambda)) <= 1e-8);
  }
}

TEST_CASE("every converged fit satisfies the KKT certificate across families") {
  for (const auto& [name, P] : all_problems(300, 25, 21)) {
    INFO(name);
    const double lmax = lambda_max(P);
    REQUIRE(std::isfinite(lmax));
    for (double frac : {0.6, 0.25, 0.08}) {
      const FitResult r = fit(P, frac * lmax);
      if (P.model.smooth()) CHECK(r.converged);
      if (r.converged) {
        const double recomputed = kkt_residual(P, r.theta, r.lambda);
        CHECK(recomputed <= 1e-6);
        CHECK(recomputed == doctest::Approx(r.kkt_residual).epsilon(1e-9));
      }
      CHECK(r.objective <= objective(P, VectorXd::Zero(P.dim()), r.lambda) + 1e-12);
    }
  }
}

TEST_CASE("zero solution at and above lambda_max across families") {
  for (const auto& [name, P] : all_problems(90, 12, 31)) {
    INFO(name);
    const double lmax = lambda_max(P);
    for (double mult : {1.0, 1.5, 10.0}) {
      const FitResult r = fit(P, mult * lmax);
      CHECK(r.theta.isZero(0.0));
      CHECK(r.converged);
      CHECK(r.iterations == 0);
    }
  }
}

TEST_CASE("fit objective never exceeds the objective at the initial point") {
  const SingleFamily fam = testing::single_index_families()[0];
  const Dataset data = testing::family_dataset(fam, 100, 40, 41);
  const Problem P = make_problem(data, LossModel::logit());
  std::mt19937_64 gen(42);
  std::normal_distribution<double> z;
  const double lambda = 0.1 * lambda_max(P);
  for (int rep = 0; rep < 5; ++rep) {
    VectorXd init(40);
    for (auto& v : init) v = z(gen);
    const FitResult r = fit(P, lambda, init);
    CHECK(r.objective <= objective(P, init, lambda) + 1e-12);
    CHECK(r.converged);
  }
}

TEST_CASE("trimmed LAD subgradient fallback improves on the start") {
  const SingleFamily fam = testing::single_index_families()[9];
  REQUIRE(fam.name == "trimmed_lad");
  const LossModel m = make_loss(fam.name);
  const Problem P = make_problem(testing::family_dataset(fam, 120, 10, 43), m);
  const double lambda = 0.2 * lambda_max(P);
  const FitResult r = fit(P, lambda);
  CHECK(r.objective < objective(P, VectorXd::Zero(10), lambda));
}

TEST_CASE("fit path") {
  const SingleFamily fam = testing::single_index_families()[0];
  const Dataset data = testing::family_dataset(fam, 200, 50, 51);
  const LossModel m = LossModel::logit();
  const double lmax = lambda_max(data, m);

  PenaltyGrid single;
  single.values = {lmax};
  const auto one = fit_path(data, m, single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].theta.isZero(0.0));

  const PenaltyGrid grid = make_grid(lmax, 100, 1e-4);
  const auto path = fit_path(data, m, grid);
  REQUIRE(path.size() == 100);
  for (const auto& r : path) {
    CHECK(r.converged);
    CHECK(kkt_residual(data, m, r.theta, r.lambda) <= 1e-6);
  }
  // Warm starts land on the same optimum as cold starts up to KKT slack.
  for (std::size_t k : {10u, 40u, 70u}) {
    const FitResult cold = fit(data, m, grid.values[k]);
    CHECK(std::abs(cold.objective - path[k].objective) <= 1e-8);
  }

  PenaltyGrid bad;
  bad.values = {1.0, 1.0};
  CHECK_THROWS_AS(fit_path(data, m, bad), InputError);
}

TEST_CASE("iteration cap reports non-convergence rather than throwing") {
  const Dataset data = testing::family_dataset(testing::single_index_families()[0], 100, 30, 61);
  FitConfig cfg;
  cfg.max_iter = 1;
  const FitResult r = fit(data, LossModel::logit(), 0.01 * lambda_max(data, LossModel::logit()), std::nullopt, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.kkt_residual > cfg.kkt_tol);
}

TEST_CASE("non-finite gradients raise a numeric error") {
  MatrixXd X = MatrixXd::Ones(5, 2);
  X(2, 1) = std::numeric_limits<double>::infinity();
  const Problem P{IndexDesign(X), MatrixXd::Zero(5, 1), LossModel::logit()};
  CHECK_THROWS_AS(fit(P, 0.1), NumericError);
}

TEST_CASE("invalid solver inputs") {
  const Dataset data = testing::family_dataset(testing::single_index_families()[0], 50, 5, 71);
  CHECK_THROWS_AS(fit(data, LossModel::logit(), -1.0), InputError);
  FitConfig cfg;
  cfg.kkt_tol = 0.0;
  CHECK_THROWS_AS(fit(data, LossModel::logit(), 0.1, std::nullopt, cfg), InputError);
  CHECK_THROWS_AS(fit(data, LossModel::logit(), 0.1, VectorXd::Zero(3)), InputError);
}
