#include "l1pen/solver.hpp"

#include <algorithm>
#include <cmath>

#include "l1pen/errors.hpp"

namespace l1pen {

namespace {

void soft_threshold_into(const VectorXd& v, double t, VectorXd& out) {
  out.resize(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    const double a = std::abs(v[j]) - t;
    out[j] = a > 0.0 ? std::copysign(a, v[j]) : 0.0;
  }
}

void require_finite(const VectorXd& g) {
  if (!g.allFinite()) throw NumericError("non-finite gradient encountered in the solver");
}

struct InnerResult {
  VectorXd x;
  int iterations = 0;
  bool converged = false;
};

// Each iteration first tries a slightly smaller L than the last accepted
// one; backtracking restores it where the local curvature demands.
constexpr double kRelax = 0.9;

// Monotone FISTA on a (restricted) design. Convergence is certified by the
// KKT residual at the current iterate.
InnerResult fista(const IndexDesign& D, const MatrixXd& Y, const LossModel& model, VectorXd x, double lambda,
                  double L, int budget, double tol, double shrink) {
  MatrixXd Tx, Ty, Tz, Txp, G;
  VectorXd y, z, gy, gx, xp, d;
  D.indices(x, Tx);
  double Fx = mean_loss(model, Tx, Y) + lambda * x.lpNorm<1>();
  y = x;
  Ty = Tx;
  bool y_is_x = true;
  double t = 1.0;
  const double L_floor = 1e-6 * L;
  int k = 0;
  while (k < budget) {
    ++k;
    const double fy = loss_and_derivs(model, Ty, Y, G);
    D.gradient(G, gy);
    require_finite(gy);
    if (y_is_x && kkt_residual(x, gy, lambda) <= tol) return {std::move(x), k, true};

    double fz = 0.0;
    L = std::max(L * kRelax, L_floor);
    for (int bt = 0;; ++bt) {
      soft_threshold_into(y - gy / L, lambda / L, z);
      D.indices(z, Tz);
      fz = mean_loss(model, Tz, Y);
      d = z - y;
      const double model_bound = fy + gy.dot(d) + 0.5 * L * d.squaredNorm();
      if (std::isfinite(fz) && fz <= model_bound + 1e-15 * std::abs(fy)) break;
      if (bt > 200) throw NumericError("backtracking line search failed");
      L /= shrink;
    }
    const double Fz = fz + lambda * z.lpNorm<1>();
    if (Fz > Fx) {
      if (y_is_x) {
        // A plain proximal step failed to descend: the objective is flat to
        // machine precision around x.
        if (Fz > Fx + 1e-14 * std::abs(Fx)) return {std::move(x), k, false};
      } else {
        t = 1.0;
        y = x;
        Ty = Tx;
        y_is_x = true;
        continue;
      }
    }
    xp.swap(x);
    Txp.swap(Tx);
    x = z;
    Tx = Tz;
    Fx = Fz;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    t = t_next;
    if (beta == 0.0) {
      y = x;
      Ty = Tx;
      y_is_x = true;
    } else {
      y = x + beta * (x - xp);
      Ty = Tx + beta * (Tx - Txp);
      y_is_x = false;
      if (k % 5 == 0) {
        loss_and_derivs(model, Tx, Y, G);
        D.gradient(G, gx);
        require_finite(gx);
        if (kkt_residual(x, gx, lambda) <= tol) return {std::move(x), k, true};
      }
    }
  }
  return {std::move(x), k, false};
}

struct FullState {
  MatrixXd T, G;
  VectorXd grad;
  double loss = 0.0;
};

void evaluate(const Problem& P, const VectorXd& theta, FullState& s) {
  P.design.indices(theta, s.T);
  s.loss = loss_and_derivs(P.model, s.T, P.Y, s.G);
  P.design.gradient(s.G, s.grad);
  require_finite(s.grad);
}

FitResult finish(const Problem& P, VectorXd theta, double lambda, int iterations, const FitConfig& cfg) {
  FullState s;
  evaluate(P, theta, s);
  FitResult r;
  r.kkt_residual = kkt_residual(theta, s.grad, lambda);
  r.objective = s.loss + lambda * theta.lpNorm<1>();
  r.theta = std::move(theta);
  r.lambda = lambda;
  r.iterations = iterations;
  r.converged = r.kkt_residual <= cfg.kkt_tol;
  return r;
}

FitResult subgradient(const Problem& P, VectorXd x, double lambda, const FitConfig& cfg, double L) {
  const double s0 = 1.0 / std::max(L, 1e-12);
  FullState s;
  evaluate(P, x, s);
  VectorXd best = x;
  double best_F = s.loss + lambda * x.lpNorm<1>();
  int k = 0;
  while (k < cfg.max_iter) {
    if (kkt_residual(x, s.grad, lambda) <= cfg.kkt_tol) {
      best = x;
      break;
    }
    ++k;
    const double step = s0 / std::sqrt(static_cast<double>(k));
    soft_threshold_into(x - step * s.grad, lambda * step, x);
    evaluate(P, x, s);
    const double F = s.loss + lambda * x.lpNorm<1>();
    if (F < best_F) {
      best_F = F;
      best = x;
    }
  }
  return finish(P, std::move(best), lambda, k, cfg);
}

FitResult fit_impl(const Problem& P, double lambda, const std::optional<VectorXd>& init, const FitConfig& cfg,
                   double L_full) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and nonnegative");
  if (!(cfg.kkt_tol > 0.0)) throw InputError("kkt_tol must be positive");
  if (cfg.max_iter < 1) throw InputError("max_iter must be positive");
  if (!(cfg.step_shrink > 0.0 && cfg.step_shrink < 1.0)) throw InputError("step_shrink must lie in (0,1)");
  const Index p = P.dim();
  VectorXd theta = init ? *init : VectorXd::Zero(p);
  if (theta.size() != p) throw InputError("initial theta has the wrong length");

  FullState s;
  evaluate(P, theta, s);
  if (kkt_residual(theta, s.grad, lambda) <= cfg.kkt_tol) return finish(P, std::move(theta), lambda, 0, cfg);
  if (!P.model.smooth()) return subgradient(P, std::move(theta), lambda, cfg, L_full);

  std::vector<char> in_set(p, 0);
  for (Index j = 0; j < p; ++j) in_set[j] = theta[j] != 0.0 || std::abs(s.grad[j]) > lambda;
  const double inner_tol = 0.5 * cfg.kkt_tol;
  int iterations = 0;
  while (iterations < cfg.max_iter) {
    std::vector<Index> active;
    for (Index j = 0; j < p; ++j) {
      if (in_set[j]) active.push_back(j);
    }
    const IndexDesign sub = P.design.columns(active);
    const double L = std::max(std::min(L_full, sub.spectral_bound() * P.model.curvature_hint()), 1e-12);
    InnerResult inner = fista(sub, P.Y, P.model, theta(active), lambda, L, cfg.max_iter - iterations,
                              inner_tol, cfg.step_shrink);
    iterations += inner.iterations;
    theta.setZero();
    theta(active) = inner.x;
    evaluate(P, theta, s);
    if (kkt_residual(theta, s.grad, lambda) <= cfg.kkt_tol || !inner.converged) break;
    bool grew = false;
    for (Index j = 0; j < p; ++j) {
      if (!in_set[j] && std::abs(s.grad[j]) - lambda > inner_tol) {
        in_set[j] = 1;
        grew = true;
      }
    }
    if (!grew) break;
  }
  return finish(P, std::move(theta), lambda, iterations, cfg);
}

double lipschitz(const Problem& P) { return P.design.spectral_bound() * P.model.curvature_hint(); }

}  // namespace

double soft_threshold(double v, double t) {
  if (t < 0.0) throw InputError("soft_threshold requires t >= 0");
  const double a = std::abs(v) - t;
  return a > 0.0 ? std::copysign(a, v) : 0.0;
}

double lambda_max(const Problem& problem) {
  FullState s;
  evaluate(problem, VectorXd::Zero(problem.dim()), s);
  return s.grad.lpNorm<Eigen::Infinity>();
}

double lambda_max(const Dataset& data, const LossModel& model) { return lambda_max(make_problem(data, model)); }

double kkt_residual(const VectorXd& theta, const VectorXd& grad, double lambda) {
  double worst = 0.0;
  for (Index j = 0; j < theta.size(); ++j) {
    const double r = theta[j] == 0.0 ? std::max(std::abs(grad[j]) - lambda, 0.0)
                                     : std::abs(grad[j] + std::copysign(lambda, theta[j]));
    worst = std::max(worst, r);
  }
  return worst;
}

double kkt_residual(const Problem& problem, const VectorXd& theta, double lambda) {
  FullState s;
  evaluate(problem, theta, s);
  return kkt_residual(theta, s.grad, lambda);
}

double kkt_residual(const Dataset& data, const LossModel& model, const VectorXd& theta, double lambda) {
  return kkt_residual(make_problem(data, model), theta, lambda);
}

double objective(const Problem& problem, const VectorXd& theta, double lambda) {
  MatrixXd T;
  problem.design.indices(theta, T);
  return mean_loss(problem.model, T, problem.Y) + lambda * theta.lpNorm<1>();
}

FitResult fit(const Problem& problem, double lambda, const std::optional<VectorXd>& init, const FitConfig& cfg) {
  return fit_impl(problem, lambda, init, cfg, lipschitz(problem));
}

FitResult fit(const Dataset& data, const LossModel& model, double lambda, const std::optional<VectorXd>& init,
              const FitConfig& cfg) {
  return fit(make_problem(data, model), lambda, init, cfg);
}

std::vector<FitResult> fit_path(const Problem& problem, const PenaltyGrid& grid, const FitConfig& cfg,
                                const PathStop& stop) {
  for (std::size_t k = 1; k < grid.values.size(); ++k) {
    if (!(grid.values[k] < grid.values[k - 1])) throw InputError("penalty grid must be strictly decreasing");
  }
  const double L = lipschitz(problem);
  const double null_loss = objective(problem, VectorXd::Zero(problem.dim()), 0.0);
  std::vector<FitResult> path;
  path.reserve(grid.values.size());
  std::optional<VectorXd> init;
  for (double lambda : grid.values) {
    path.push_back(fit_impl(problem, lambda, init, cfg, L));
    const FitResult& r = path.back();
    init = r.theta;
    if (stop.on_failure && !r.converged) break;
    if (stop.saturation > 0.0) {
      const double loss = r.objective - lambda * r.theta.lpNorm<1>();
      if (loss <= stop.saturation * null_loss) break;
    }
  }
  return path;
}

std::vector<FitResult> fit_path(const Dataset& data, const LossModel& model, const PenaltyGrid& grid,
                                const FitConfig& cfg) {
  return fit_path(make_problem(data, model), grid, cfg);
}

}  // namespace l1pen
