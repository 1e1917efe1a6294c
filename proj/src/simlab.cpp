#include "l1pen/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "l1pen/cv.hpp"
#include "l1pen/errors.hpp"
#include "l1pen/parallel.hpp"
#include "l1pen/rng.hpp"

namespace l1pen {

Pattern parse_pattern(std::string_view name) {
  if (name == "sparse") return Pattern::sparse;
  if (name == "dense") return Pattern::dense;
  throw InputError("unknown coefficient pattern '" + std::string(name) + "'");
}

std::string_view to_string(Pattern p) { return p == Pattern::sparse ? "sparse" : "dense"; }

VectorXd theta0_pattern(Pattern pattern, Index p) {
  if (p < 2) throw InputError("coefficient patterns need p >= 2");
  VectorXd theta = VectorXd::Zero(p);
  if (pattern == Pattern::sparse) {
    theta[0] = theta[1] = 1.0;
  } else {
    // Exact powers of two on even indices.
    for (Index j = 0; j < p; ++j) {
      theta[j] = std::ldexp(j % 2 == 0 ? 1.0 : std::sqrt(0.5), -static_cast<int>(j / 2));
    }
  }
  return theta;
}

MatrixXd gen_toeplitz_gaussian(Index n, Index p, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0,1)");
  if (n < 1 || p < 1) throw InputError("n and p must be positive");
  const double innov = std::sqrt(1.0 - rho * rho);
  MatrixXd X(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::uint64_t>(i);
    X(i, 0) = rng::normal(seed, row, 0);
    for (Index j = 1; j < p; ++j) {
      X(i, j) = rho * X(i, j - 1) + innov * rng::normal(seed, row, static_cast<std::uint64_t>(j));
    }
  }
  return X;
}

VectorXd gen_logit_outcomes(const MatrixXd& X, const VectorXd& theta0, std::uint64_t seed) {
  if (X.cols() != theta0.size()) throw InputError("theta0 length must equal the column count of X");
  const VectorXd index = X * theta0;
  VectorXd y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    y[i] = index[i] + rng::logistic(seed, static_cast<std::uint64_t>(i), 0) > 0.0 ? 1.0 : 0.0;
  }
  return y;
}

const std::vector<std::string>& simulation_methods() {
  static const std::vector<std::string> names{"am", "bam", "bcv", "cv", "vdg16", "oracle", "zeros"};
  return names;
}

void validate_design(const SimDesign& d) {
  if (d.n < 3) throw InputError("simulation needs n >= 3");
  if (d.p < 2) throw InputError("simulation needs p >= 2");
  if (d.n_reps < 1) throw InputError("simulation needs at least one replication");
  if (d.rhos.empty()) throw InputError("rho grid is empty");
  for (double r : d.rhos) {
    if (!(r >= 0.0 && r < 1.0)) throw InputError("every rho must lie in [0,1)");
  }
  if (d.methods.empty()) throw InputError("no simulation methods requested");
  const auto& known = simulation_methods();
  for (const auto& m : d.methods) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw InputError("unknown simulation method '" + m + "'");
    }
  }
  const bool uses_cv = std::find(d.methods.begin(), d.methods.end(), "cv") != d.methods.end() ||
                       std::find(d.methods.begin(), d.methods.end(), "bcv") != d.methods.end();
  if (uses_cv) {
    if (d.folds < 2) throw InputError("fold count K must be at least 2");
    if (d.folds > d.n) throw InputError("fold count K exceeds the sample size");
    if (d.grid_size < 1) throw InputError("grid size must be at least 1");
    if (!(d.grid_ratio > 0.0 && d.grid_ratio < 1.0)) throw InputError("grid ratio must lie in (0,1)");
  }
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rho_index, int r) {
  return rng::derive(base_seed, rho_index, static_cast<std::uint64_t>(r));
}

namespace {

struct RepOutput {
  std::vector<RepRecord> records;
  RepDiagnostics diag;
  std::vector<std::string> log;
};

RepOutput run_replication(const SimDesign& design, std::size_t rho_index, int r, const VectorXd& theta0,
                          const PenaltyConfig& cfg, const BootstrapConfig& boot, const FitConfig& fitcfg) {
  const double rho = design.rhos[rho_index];
  const std::uint64_t seed = replication_seed(design.base_seed, rho_index, r);
  const LossModel model = LossModel::logit();
  Dataset data;
  data.X = gen_toeplitz_gaussian(design.n, design.p, rho, rng::derive(seed, 1));
  data.Y = gen_logit_outcomes(data.X, theta0, rng::derive(seed, 2));
  const Problem problem = make_problem(data, model);

  BootstrapConfig inner_boot = boot;
  inner_boot.seed = rng::derive(seed, 3);
  inner_boot.workers = 1;

  RepOutput out;
  out.diag.rho = rho;
  out.diag.replication = r;
  out.diag.seed = seed;
  out.diag.lambda_max = lambda_max(problem);
  VectorXd true_resid(data.n());
  {
    const VectorXd index = data.X * theta0;
    for (Index i = 0; i < data.n(); ++i) true_resid[i] = model.deriv(index[i], data.Y(i, 0));
    out.diag.score_sup = (data.X.transpose() * true_resid / static_cast<double>(data.n())).lpNorm<Eigen::Infinity>();
  }

  auto record = [&](const std::string& method, double lambda, const VectorXd& theta, bool converged) {
    RepRecord rec;
    rec.method = method;
    rec.rho = rho;
    rec.replication = r;
    rec.seed = seed;
    rec.lambda = lambda;
    const VectorXd err = theta - theta0;
    rec.l1_err = err.lpNorm<1>();
    rec.l2_err = err.norm();
    rec.nonzeros = (theta.array() != 0.0).count();
    rec.converged = converged;
    out.records.push_back(rec);
  };
  auto estimate = [&](const std::string& method, double lambda) {
    if (!design.fit_estimates) {
      record(method, lambda, VectorXd::Zero(design.p), true);
      return;
    }
    const FitResult f = fit(problem, lambda, std::nullopt, fitcfg);
    record(method, lambda, f.theta, f.converged);
  };
  auto scores_at = [&](const MatrixXd& G) { return problem.design.scores(G); };
  const double alpha = cfg.alpha_for(data.n());

  std::optional<FitResult> am_fit;
  std::optional<CvResult> cv;
  for (const auto& method : design.methods) {
    try {
      if (method == "am" || method == "bam") {
        const double lam_am = analytic_penalty(data, model, cfg).lambda;
        if (method == "am") {
          if (!design.fit_estimates) {
            estimate(method, lam_am);
            continue;
          }
          if (!am_fit) am_fit = fit(problem, lam_am, std::nullopt, fitcfg);
          record(method, lam_am, am_fit->theta, am_fit->converged);
        } else {
          if (!am_fit) am_fit = fit(problem, lam_am, std::nullopt, fitcfg);
          MatrixXd T, G;
          problem.design.indices(am_fit->theta, T);
          loss_and_derivs(model, T, problem.Y, G);
          estimate(method, cfg.c0 * bootstrap_quantile(scores_at(G), alpha, inner_boot));
        }
      } else if (method == "cv" || method == "bcv") {
        if (!cv) {
          const FoldPlan folds = make_folds(data.n(), design.folds, FoldScheme::even);
          const PenaltyGrid grid = make_grid(out.diag.lambda_max, design.grid_size, design.grid_ratio);
          cv = cv_select(problem, folds, grid, fitcfg, CvOptions{true, 1});
        }
        if (method == "cv") {
          estimate(method, cv->lambda_cv);
        } else {
          const FoldPlan folds = make_folds(data.n(), design.folds, FoldScheme::even);
          const MatrixXd G = cv_residuals(problem, folds, *cv);
          estimate(method, cfg.c0 * bootstrap_quantile(scores_at(G), alpha, inner_boot));
        }
      } else if (method == "vdg16") {
        estimate(method, vdg16_penalty(data, cfg).lambda);
      } else if (method == "oracle") {
        estimate(method, oracle_bootstrap(data, true_resid, cfg, inner_boot).lambda);
      } else if (method == "zeros") {
        record(method, 0.0, VectorXd::Zero(design.p), true);
      }
    } catch (const std::exception& e) {
      RepRecord rec;
      rec.method = method;
      rec.rho = rho;
      rec.replication = r;
      rec.seed = seed;
      rec.failed = true;
      rec.converged = false;
      out.records.push_back(rec);
      out.log.push_back("rho=" + std::to_string(rho) + " rep=" + std::to_string(r) + " method=" + method +
                        " failed: " + e.what());
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

const CellSummary& MCResult::cell(std::string_view method, double rho) const {
  for (const auto& c : summary) {
    if (c.method == method && c.rho == rho) return c;
  }
  throw InputError("no summary cell for method '" + std::string(method) + "'");
}

std::vector<double> MCResult::lambdas(std::string_view method) const {
  std::vector<double> out;
  for (const auto& rec : records) {
    if (rec.method == method && !rec.failed) out.push_back(rec.lambda);
  }
  return out;
}

MCResult run_mc(const SimDesign& design, const PenaltyConfig& cfg, const BootstrapConfig& boot,
                const FitConfig& fitcfg) {
  validate_design(design);
  cfg.alpha_for(design.n);
  if (boot.draws < 1) throw InputError("bootstrap draw count must be at least 1");
  const VectorXd theta0 = theta0_pattern(design.pattern, design.p);
  const std::size_t R = static_cast<std::size_t>(design.n_reps);
  const std::size_t cells = design.rhos.size() * R;

  std::vector<RepOutput> outputs(cells);
  parallel_for(cells, design.workers, [&](std::size_t c) {
    outputs[c] = run_replication(design, c / R, static_cast<int>(c % R), theta0, cfg, boot, fitcfg);
  });

  MCResult res;
  res.theta0_l2 = theta0.norm();
  res.theta0_l1 = theta0.lpNorm<1>();
  for (auto& o : outputs) {
    res.records.insert(res.records.end(), o.records.begin(), o.records.end());
    res.diagnostics.push_back(o.diag);
    res.log.insert(res.log.end(), o.log.begin(), o.log.end());
  }
  for (std::size_t k = 0; k < design.rhos.size(); ++k) {
    const double rho = design.rhos[k];
    for (const auto& method : design.methods) {
      CellSummary s;
      s.method = method;
      s.rho = rho;
      std::vector<double> l2, l1, lam;
      int zeros = 0, covered = 0;
      for (std::size_t r = 0; r < R; ++r) {
        const RepOutput& o = outputs[k * R + r];
        for (const auto& rec : o.records) {
          if (rec.method != method) continue;
          if (rec.failed) {
            ++s.failures;
            continue;
          }
          l2.push_back(rec.l2_err);
          l1.push_back(rec.l1_err);
          lam.push_back(rec.lambda);
          zeros += rec.nonzeros == 0;
          covered += rec.lambda >= cfg.c0 * o.diag.score_sup;
        }
      }
      s.reps = static_cast<int>(l2.size());
      s.mean_l2 = mean_of(l2);
      s.se_l2 = se_of(l2);
      s.mean_l1 = mean_of(l1);
      s.se_l1 = se_of(l1);
      s.mean_lambda = mean_of(lam);
      if (s.reps > 0) {
        s.zero_fraction = static_cast<double>(zeros) / s.reps;
        s.coverage = static_cast<double>(covered) / s.reps;
      }
      if (s.failures > 0) {
        res.log.push_back(method + " at rho=" + std::to_string(rho) + ": " + std::to_string(s.failures) +
                          " replication(s) failed and were excluded");
      }
      if (method != "zeros" && method != "oracle" && design.n >= 200 && design.pattern == Pattern::sparse &&
          s.reps > 0 && s.mean_l2 > res.theta0_l2) {
        res.log.push_back("red flag: " + method + " at rho=" + std::to_string(rho) +
                          " has mean l2 error above the zero estimator");
      }
      res.summary.push_back(s);
    }
  }
  return res;
}

DensityEstimate kde(const std::vector<double>& samples, std::optional<double> bandwidth) {
  if (samples.size() < 2) throw InputError("kde needs at least two samples");
  for (double x : samples) {
    if (!std::isfinite(x)) throw InputError("kde samples must be finite");
  }
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = mean_of(sorted);
  double ss = 0.0;
  for (double x : sorted) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  DensityEstimate est;
  double h = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw InputError("kde bandwidth must be positive");
    h = *bandwidth;
  } else {
    // Quantiles by linear interpolation between order statistics.
    auto quantile = [&](double prob) {
      const double pos = prob * (n - 1.0);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    double spread = std::min(sd, (quantile(0.75) - quantile(0.25)) / 1.34);
    if (!(spread > 0.0)) spread = sd;
    if (!(spread > 0.0)) {
      est.degenerate = true;
      spread = std::abs(sorted.front()) > 0.0 ? 1e-3 * std::abs(sorted.front()) : 1e-3;
    }
    h = 0.9 * spread * std::pow(n, -0.2);
  }
  est.bandwidth = h;
  constexpr int kPoints = 512;
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double step = (hi - lo) / (kPoints - 1);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  est.grid.resize(kPoints);
  est.density.resize(kPoints);
  for (int k = 0; k < kPoints; ++k) {
    const double x = lo + k * step;
    double acc = 0.0;
    for (double s : sorted) {
      const double z = (x - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    est.grid[k] = x;
    est.density[k] = acc * norm;
  }
  return est;
}

}  // namespace l1pen
