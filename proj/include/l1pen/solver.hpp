#pragma once

#include <optional>
#include <vector>

#include "l1pen/design.hpp"

namespace l1pen {

struct FitConfig {
  double kkt_tol = 1e-6;
  int max_iter = 10000;
  double step_shrink = 0.5;
};

struct FitResult {
  VectorXd theta;
  double lambda = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// sign(v) max(|v| - t, 0). Throws InputError for t < 0.
double soft_threshold(double v, double t);

/// max_j |E_n[m'_1(0, Y_i) X_ij]|, the smallest lambda with zero solution.
double lambda_max(const Dataset& data, const LossModel& model);
double lambda_max(const Problem& problem);

/// max_j of |g_j| - lambda (clipped at 0) if theta_j = 0, else |g_j + lambda sign(theta_j)|.
double kkt_residual(const VectorXd& theta, const VectorXd& grad, double lambda);
/// Recomputes the gradient from scratch and evaluates the KKT residual.
double kkt_residual(const Problem& problem, const VectorXd& theta, double lambda);
double kkt_residual(const Dataset& data, const LossModel& model, const VectorXd& theta, double lambda);

/// Mean loss plus lambda times the l1 norm.
double objective(const Problem& problem, const VectorXd& theta, double lambda);

/// l1-penalized M-estimator at a fixed lambda.
///
/// Smooth losses use monotone FISTA with adaptive backtracking and
/// function-value restarts on a KKT-driven working set; trimmed_lad uses a
/// diminishing-step proximal subgradient method with best-iterate tracking.
/// Non-convergence is reported through `converged`; a non-finite gradient
/// throws NumericError.
FitResult fit(const Problem& problem, double lambda, const std::optional<VectorXd>& init = std::nullopt,
              const FitConfig& cfg = {});
FitResult fit(const Dataset& data, const LossModel& model, double lambda,
              const std::optional<VectorXd>& init = std::nullopt, const FitConfig& cfg = {});

/// Options for truncating a path once further fits are uninformative.
struct PathStop {
  bool on_failure = false;    // stop after the first non-converged fit
  double saturation = 0.0;    // stop once mean loss <= saturation * loss at zero (0 disables)
};

/// Warm-started fits along a descending grid. With the default PathStop the
/// result has one entry per grid value.
std::vector<FitResult> fit_path(const Problem& problem, const PenaltyGrid& grid, const FitConfig& cfg = {},
                                const PathStop& stop = {});
std::vector<FitResult> fit_path(const Dataset& data, const LossModel& model, const PenaltyGrid& grid,
                                const FitConfig& cfg = {});

}  // namespace l1pen
