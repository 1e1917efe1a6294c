#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "l1pen/errors.hpp"
#include "l1pen/simlab.hpp"
#include "support.hpp"

using namespace l1pen;

namespace {

double sample_cov(const VectorXd& a, const VectorXd& b) {
  const double n = static_cast<double>(a.size());
  return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() / (n - 1.0);
}

SimDesign small_design() {
  SimDesign d;
  d.n = 60;
  d.p = 30;
  d.rhos = {0.0, 0.5};
  d.n_reps = 3;
  d.base_seed = 11;
  d.methods = {"am", "bam", "bcv", "cv", "vdg16", "oracle", "zeros"};
  d.folds = 5;
  d.grid_size = 20;
  d.grid_ratio = 1e-2;
  return d;
}

BootstrapConfig small_boot() {
  BootstrapConfig b;
  b.draws = 200;
  return b;
}

}  // namespace

TEST_CASE("coefficient patterns") {
  CHECK(theta0_pattern(Pattern::sparse, 5) == (VectorXd(5) << 1, 1, 0, 0, 0).finished());
  const VectorXd dense3 = theta0_pattern(Pattern::dense, 3);
  CHECK(dense3[0] == 1.0);
  CHECK(std::abs(dense3[1] - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(dense3[2] == 0.5);
  // Squared norm of the dense pattern is a finite geometric sum.
  CHECK(std::abs(theta0_pattern(Pattern::dense, 20).squaredNorm() - (2.0 - std::ldexp(1.0, -19))) < 1e-14);
  CHECK(parse_pattern("dense") == Pattern::dense);
  CHECK(to_string(Pattern::sparse) == "sparse");
  CHECK_THROWS_AS(parse_pattern("banded"), InputError);
  CHECK_THROWS_AS(theta0_pattern(Pattern::sparse, 1), InputError);
}

TEST_CASE("independent design has unit column variances") {
  const MatrixXd X = gen_toeplitz_gaussian(10000, 6, 0.0, 1);
  for (Index j = 0; j < 6; ++j) {
    const double v = sample_cov(X.col(j), X.col(j));
    CHECK(v >= 0.9);
    CHECK(v <= 1.1);
  }
  CHECK(X == gen_toeplitz_gaussian(10000, 6, 0.0, 1));
  CHECK(X != gen_toeplitz_gaussian(10000, 6, 0.0, 2));
}

TEST_CASE("Toeplitz lag covariances match rho^|j-k|") {
  const Index n = 100000;
  const MatrixXd X = gen_toeplitz_gaussian(n, 4, 0.6, 3);
  for (Index j = 0; j < 4; ++j) {
    for (Index k = j; k < 4; ++k) {
      const double target = std::pow(0.6, static_cast<double>(k - j));
      // Var of the product of two unit normals with correlation r is 1 + r^2.
      const double se = std::sqrt((1.0 + target * target) / static_cast<double>(n));
      CHECK(std::abs(sample_cov(X.col(j), X.col(k)) - target) < 3 * se);
    }
  }
  CHECK_THROWS_AS(gen_toeplitz_gaussian(10, 3, 1.0, 1), InputError);
  CHECK_THROWS_AS(gen_toeplitz_gaussian(10, 3, -0.1, 1), InputError);
}

TEST_CASE("logit outcomes") {
  const Index n = 100000;
  const MatrixXd X = gen_toeplitz_gaussian(n, 5, 0.4, 4);
  const VectorXd y0 = gen_logit_outcomes(X, VectorXd::Zero(5), 5);
  CHECK(y0.mean() >= 0.495);
  CHECK(y0.mean() <= 0.505);
  for (Index i = 0; i < n; ++i) CHECK((y0[i] == 0.0 || y0[i] == 1.0));
  CHECK(y0 == gen_logit_outcomes(X, VectorXd::Zero(5), 5));

  // Signal variance for the sparse pattern is 2(1 + rho).
  const VectorXd index = X * theta0_pattern(Pattern::sparse, 5);
  const double se = 2.8 * std::sqrt(2.0 / static_cast<double>(n));
  CHECK(std::abs(sample_cov(index, index) - 2.8) < 3 * se);

  // Conditional mean follows the logistic link.
  const VectorXd theta = theta0_pattern(Pattern::sparse, 5);
  const VectorXd y = gen_logit_outcomes(X, theta, 6);
  double expected = 0.0;
  for (Index i = 0; i < n; ++i) expected += testing::sigmoid(index[i]);
  expected /= static_cast<double>(n);
  CHECK(std::abs(y.mean() - expected) < 3 * 0.5 / std::sqrt(static_cast<double>(n)));
  CHECK_THROWS_AS(gen_logit_outcomes(X, VectorXd::Zero(4), 5), InputError);
}

TEST_CASE("zeros baseline records the coefficient norm exactly") {
  SimDesign d;
  d.n = 50;
  d.p = 10;
  d.n_reps = 1;
  d.methods = {"zeros"};
  const MCResult r = run_mc(d, {}, small_boot());
  CHECK(r.cell("zeros", 0.0).mean_l2 == std::sqrt(2.0));
  CHECK(r.cell("zeros", 0.0).mean_l1 == 2.0);
  CHECK(r.cell("zeros", 0.0).zero_fraction == 1.0);
  CHECK(r.theta0_l2 == std::sqrt(2.0));
}

TEST_CASE("Monte Carlo results are independent of the worker count") {
  SimDesign d = small_design();
  const MCResult a = run_mc(d, {}, small_boot());
  d.workers = 4;
  const MCResult b = run_mc(d, {}, small_boot());
  REQUIRE(a.records.size() == b.records.size());
  REQUIRE(a.records.size() == 2u * 3u * 7u);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].method == b.records[k].method);
    CHECK(a.records[k].lambda == b.records[k].lambda);
    CHECK(a.records[k].l2_err == b.records[k].l2_err);
    CHECK(a.records[k].seed == b.records[k].seed);
  }
  for (std::size_t k = 0; k < a.summary.size(); ++k) CHECK(a.summary[k].mean_l2 == b.summary[k].mean_l2);
  CHECK(a.log == b.log);

  // Record order: rho-major, replication, then method order.
  CHECK(a.records[0].method == "am");
  CHECK(a.records[6].method == "zeros");
  CHECK(a.records[7].replication == 1);
  CHECK(a.records[21].rho == 0.5);
  CHECK(a.records[0].seed == replication_seed(11, 0, 0));
  CHECK(replication_seed(11, 0, 0) != replication_seed(11, 0, 1));
  CHECK(replication_seed(11, 0, 0) != replication_seed(11, 1, 0));
}

TEST_CASE("Monte Carlo cell bookkeeping") {
  const MCResult r = run_mc(small_design(), {}, small_boot());
  for (const auto& c : r.summary) {
    INFO(c.method);
    CHECK(c.reps + c.failures == 3);
    CHECK(c.se_l2 >= 0.0);
    CHECK(c.mean_l2 >= 0.0);
  }
  REQUIRE(r.diagnostics.size() == 6u);
  for (const auto& rec : r.records) {
    if (rec.method == "vdg16") {
      const auto& diag = r.diagnostics[(rec.rho == 0.5 ? 3u : 0u) + static_cast<std::size_t>(rec.replication)];
      CHECK(rec.lambda > diag.lambda_max);
      CHECK(rec.nonzeros == 0);
    }
  }
  CHECK(r.cell("vdg16", 0.5).zero_fraction == 1.0);
  CHECK(r.lambdas("am").size() == 6u);
  CHECK_THROWS(r.cell("threshold", 0.0));
}

TEST_CASE("penalties-only mode skips estimation") {
  SimDesign d = small_design();
  d.methods = {"am", "vdg16"};
  d.fit_estimates = false;
  const MCResult r = run_mc(d, {}, small_boot());
  for (const auto& rec : r.records) CHECK(rec.lambda > 0.0);
}

TEST_CASE("design validation rejects infeasible designs before computing") {
  const auto rejects = [](auto mutate) {
    SimDesign d = small_design();
    mutate(d);
    CHECK_THROWS_AS(validate_design(d), InputError);
    CHECK_THROWS_AS(run_mc(d, {}, small_boot()), InputError);
  };
  rejects([](SimDesign& d) { d.rhos = {1.0}; });
  rejects([](SimDesign& d) { d.rhos = {}; });
  rejects([](SimDesign& d) { d.p = 1; });
  rejects([](SimDesign& d) { d.n_reps = 0; });
  rejects([](SimDesign& d) { d.folds = 61; });
  rejects([](SimDesign& d) { d.folds = 1; });
  rejects([](SimDesign& d) { d.methods = {"lasso"}; });
  rejects([](SimDesign& d) { d.methods = {}; });
  rejects([](SimDesign& d) { d.grid_ratio = 1.0; });
  SimDesign ok = small_design();
  ok.methods = {"am"};
  ok.folds = 1000;  // irrelevant without cross-validation
  CHECK_NOTHROW(validate_design(ok));
}

TEST_CASE("kernel density of standard normal samples") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z;
  std::vector<double> s(10000);
  for (auto& v : s) v = z(gen);
  const DensityEstimate d = kde(s);
  REQUIRE(d.grid.size() == 512u);
  REQUIRE(d.density.size() == 512u);
  CHECK_FALSE(d.degenerate);
  CHECK(d.bandwidth > 0.0);

  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  CHECK(std::abs(d.grid.front() - (*lo - 3 * d.bandwidth)) < 1e-12);
  CHECK(std::abs(d.grid.back() - (*hi + 3 * d.bandwidth)) < 1e-12);

  // Density at the grid point nearest zero.
  std::size_t k0 = 0;
  for (std::size_t k = 0; k < d.grid.size(); ++k)
    if (std::abs(d.grid[k]) < std::abs(d.grid[k0])) k0 = k;
  const double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
  CHECK(std::abs(d.density[k0] - phi0) < 0.1 * phi0);

  double integral = 0.0;
  for (std::size_t k = 1; k < d.grid.size(); ++k)
    integral += 0.5 * (d.density[k] + d.density[k - 1]) * (d.grid[k] - d.grid[k - 1]);
  CHECK(integral >= 0.98);
  CHECK(integral <= 1.02);
  for (double v : d.density) CHECK(v >= 0.0);

  // Silverman's rule against an independent computation.
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (s.size() - 1));
  const auto quant = [&](double q) {
    const double h = (sorted.size() - 1) * q;
    const auto i = static_cast<std::size_t>(h);
    return sorted[i] + (h - i) * (sorted[i + 1] - sorted[i]);
  };
  const double iqr = quant(0.75) - quant(0.25);
  const double h = 0.9 * std::min(sd, iqr / 1.34) * std::pow(static_cast<double>(s.size()), -0.2);
  CHECK(testing::rel_diff(d.bandwidth, h) < 1e-10);

  CHECK(kde(s, 0.5).bandwidth == 0.5);
}

TEST_CASE("kernel density edge cases") {
  const DensityEstimate d = kde({2.5, 2.5, 2.5});
  CHECK(d.degenerate);
  CHECK(d.bandwidth > 0.0);
  CHECK_THROWS_AS(kde({1.0}), InputError);
  CHECK_THROWS_AS(kde({1.0, 2.0}, 0.0), InputError);
}
