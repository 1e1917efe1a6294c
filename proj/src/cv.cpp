#include "l1pen/cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "l1pen/errors.hpp"
#include "l1pen/parallel.hpp"
#include "l1pen/rng.hpp"

namespace l1pen {

FoldScheme parse_fold_scheme(std::string_view name) {
  if (name == "even") return FoldScheme::even;
  if (name == "seeded_random") return FoldScheme::seeded_random;
  throw InputError("unknown fold scheme '" + std::string(name) + "'");
}

std::vector<Index> FoldPlan::fold(int k) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == k) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Index> FoldPlan::complement(int k) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != k) out.push_back(static_cast<Index>(i));
  }
  return out;
}

FoldPlan make_folds(Index n, int K, FoldScheme scheme, std::uint64_t seed) {
  if (K < 2) throw InputError("fold count K must be at least 2");
  if (n < K) throw InputError("fold count K exceeds the sample size");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (scheme == FoldScheme::seeded_random) {
    // Fisher-Yates driven by counter-keyed uniforms.
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng::uniform(seed, 0xf01d, static_cast<std::uint64_t>(i)) * (i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
  }
  FoldPlan plan;
  plan.K = K;
  plan.assignment.assign(static_cast<std::size_t>(n), 0);
  const Index base = n / K;
  const Index extra = n % K;
  Index pos = 0;
  for (int k = 0; k < K; ++k) {
    const Index size = base + (k < extra ? 1 : 0);
    for (Index s = 0; s < size; ++s) plan.assignment[order[pos++]] = k;
  }
  return plan;
}

PenaltyGrid make_grid(double lambda_max, std::size_t count, double ratio) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw InputError("grid needs a positive lambda_max");
  if (count < 1) throw InputError("grid count must be at least 1");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("grid ratio must lie in (0,1)");
  PenaltyGrid grid;
  grid.count = count;
  grid.ratio = ratio;
  grid.values.resize(count);
  grid.values[0] = lambda_max;
  for (std::size_t k = 1; k < count; ++k) {
    grid.values[k] = lambda_max * std::pow(ratio, static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return grid;
}

namespace {

struct FoldPath {
  std::vector<FoldFit> fits;
  std::vector<double> oos;  // hold-out total loss per fitted candidate
  std::vector<VectorXd> thetas;
};

}  // namespace

CvResult cv_select(const Problem& problem, const FoldPlan& folds, const PenaltyGrid& grid, const FitConfig& fitcfg,
                   const CvOptions& opts) {
  if (grid.values.empty()) throw InputError("penalty grid is empty");
  if (static_cast<Index>(folds.assignment.size()) != problem.n()) throw InputError("fold plan does not match n");
  const std::size_t G = grid.values.size();
  const auto K = static_cast<std::size_t>(folds.K);

  PathStop stop;
  if (opts.truncate_paths) {
    stop.on_failure = true;
    stop.saturation = problem.model.bounded_below_by_zero() ? 1e-3 : 0.0;
  }
  std::vector<FoldPath> paths(K);
  parallel_for(K, opts.workers, [&](std::size_t k) {
    const Problem train = problem.rows(folds.complement(static_cast<int>(k)));
    const Problem test = problem.rows(folds.fold(static_cast<int>(k)));
    auto path = fit_path(train, grid, fitcfg, stop);
    FoldPath& out = paths[k];
    out.fits.assign(G, FoldFit{});
    MatrixXd T;
    for (std::size_t g = 0; g < path.size(); ++g) {
      const FitResult& r = path[g];
      out.fits[g] = FoldFit{true, r.converged, r.kkt_residual, r.iterations, (r.theta.array() != 0.0).count()};
      test.design.indices(r.theta, T);
      out.oos.push_back(mean_loss(problem.model, T, test.Y) * static_cast<double>(test.n()));
      out.thetas.push_back(r.theta);
    }
  });

  CvResult res;
  res.oos_loss.assign(G, 0.0);
  res.excluded.assign(G, false);
  for (std::size_t k = 0; k < K; ++k) {
    res.per_fold_fits.push_back(paths[k].fits);
    for (std::size_t g = 0; g < G; ++g) {
      const FoldFit& f = paths[k].fits[g];
      if (!f.fitted || !f.converged) {
        res.excluded[g] = true;
      } else {
        res.oos_loss[g] += paths[k].oos[g];
      }
    }
  }
  std::size_t dropped = 0;
  for (std::size_t g = 0; g < G; ++g) {
    if (res.excluded[g]) {
      res.oos_loss[g] = std::numeric_limits<double>::infinity();
      ++dropped;
    }
  }
  if (dropped > 0) {
    res.warnings.push_back(std::to_string(dropped) + " candidate(s) excluded: not fitted to convergence in every fold");
  }
  bool found = false;
  for (std::size_t g = 0; g < G; ++g) {
    if (res.excluded[g]) continue;
    if (!found || res.oos_loss[g] < res.oos_loss[res.selected]) {
      res.selected = g;
      found = true;
    }
  }
  if (!found) throw NumericError("cross-validation: no candidate penalty was fitted in every fold");
  res.lambda_cv = grid.values[res.selected];
  for (std::size_t k = 0; k < K; ++k) res.holdout_theta.push_back(paths[k].thetas[res.selected]);
  return res;
}

CvResult cv_select(const Dataset& data, const LossModel& model, const FoldPlan& folds, const PenaltyGrid& grid,
                   const FitConfig& fitcfg) {
  return cv_select(make_problem(data, model), folds, grid, fitcfg);
}

MatrixXd holdout_derivs(const Problem& problem, const FoldPlan& folds, const std::vector<VectorXd>& thetas) {
  if (thetas.size() != static_cast<std::size_t>(folds.K)) throw InputError("need one estimate per fold");
  MatrixXd U(problem.n(), problem.design.arity());
  MatrixXd T, G;
  for (int k = 0; k < folds.K; ++k) {
    const auto idx = folds.fold(k);
    const Problem test = problem.rows(idx);
    test.design.indices(thetas[k], T);
    loss_and_derivs(problem.model, T, test.Y, G);
    for (std::size_t r = 0; r < idx.size(); ++r) U.row(idx[r]) = G.row(static_cast<Index>(r));
  }
  if (!U.allFinite()) throw NumericError("non-finite hold-out residuals");
  return U;
}

MatrixXd cv_residuals(const Problem& problem, const FoldPlan& folds, double lambda_cv, const FitConfig& fitcfg,
                      int workers) {
  if (!(lambda_cv > 0.0)) throw InputError("lambda_cv must be positive");
  if (static_cast<Index>(folds.assignment.size()) != problem.n()) throw InputError("fold plan does not match n");
  std::vector<VectorXd> thetas(static_cast<std::size_t>(folds.K));
  parallel_for(thetas.size(), workers, [&](std::size_t k) {
    const Problem train = problem.rows(folds.complement(static_cast<int>(k)));
    thetas[k] = fit(train, lambda_cv, std::nullopt, fitcfg).theta;
  });
  return holdout_derivs(problem, folds, thetas);
}

VectorXd cv_residuals(const Dataset& data, const LossModel& model, const FoldPlan& folds, double lambda_cv,
                      const FitConfig& fitcfg) {
  return cv_residuals(make_problem(data, model), folds, lambda_cv, fitcfg).col(0);
}

MatrixXd cv_residuals(const Problem& problem, const FoldPlan& folds, const CvResult& cv) {
  return holdout_derivs(problem, folds, cv.holdout_theta);
}

}  // namespace l1pen
