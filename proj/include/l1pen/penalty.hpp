#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l1pen/cv.hpp"
#include "l1pen/design.hpp"
#include "l1pen/solver.hpp"

namespace l1pen {

enum class Method { am, bam, bcv, cv, vdg16, oracle, threshold };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct PenaltyConfig {
  double c0 = 1.1;
  /// Probability tolerance; unset means 10/n.
  std::optional<double> alpha;

  /// Resolved alpha for sample size n. Throws InputError if outside (0,1).
  double alpha_for(Index n) const;
};

struct BootstrapConfig {
  int draws = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct PenaltyResult {
  double lambda = 0.0;
  Method method = Method::am;
  std::optional<double> quantile;
  double alpha = 0.0;
  double c0 = 0.0;
  std::optional<std::uint64_t> seed;
  /// Named diagnostics, in insertion order.
  std::vector<std::pair<std::string, double>> details;
  /// Set when an internal fit did not converge.
  bool flagged = false;
  std::vector<std::string> warnings;

  std::optional<double> detail(std::string_view key) const;
};

/// max_j E_n[X_ij^2] with raw (uncentered) moments.
double max_mean_square(const MatrixXd& X);

/// c0 d sqrt(ln(2p/alpha) / (2n) max_j E_n[X_ij^2]).
PenaltyResult analytic_penalty(const Dataset& data, double d, const PenaltyConfig& cfg);
/// Uses the loss diameter; throws InputError when the loss has none.
PenaltyResult analytic_penalty(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg);
/// 8 c0 sqrt(2 ln(2p/alpha) / n max_j E_n[X_ij^2]), i.e. 16 times the d = 1 analytic level.
PenaltyResult vdg16_penalty(const Dataset& data, const PenaltyConfig& cfg);
/// The threshold level lambda_max as a penalty result.
PenaltyResult threshold_penalty(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg);

/// (1 - alpha) order statistic, at rank ceil((1 - alpha) B), of
/// T_b = max_j |n^-1 sum_i e_bi S_ij| over B Gaussian multiplier draws.
/// S holds per-observation score contributions (n x p).
double bootstrap_quantile(const MatrixXd& scores, double alpha, const BootstrapConfig& boot);
/// Single-index form with S_ij = U_i X_ij.
double bootstrap_quantile(const VectorXd& residuals, const Dataset& data, double alpha, const BootstrapConfig& boot);
/// All B bootstrap maxima in draw order.
std::vector<double> bootstrap_draws(const MatrixXd& scores, const BootstrapConfig& boot);
/// Rank ceil((1 - alpha) B), guarded against rounding in the product.
std::size_t quantile_rank(double alpha, std::size_t B);

/// (2 + sqrt 2) sigma sqrt(ln(p / alpha)) with sigma^2 = max_j n^-1 E_n[S_ij^2].
double gaussian_quantile_bound(const MatrixXd& scores, double alpha);

/// Bootstrap after the analytic method: fit at the analytic level, then
/// bootstrap the plug-in residuals.
PenaltyResult bam(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg,
                  const BootstrapConfig& boot, const FitConfig& fitcfg = {});
/// Bootstrap after cross-validation. Multi-index problems bootstrap the
/// out-of-fold score contributions.
PenaltyResult bcv(const Problem& problem, const PenaltyConfig& cfg, const FoldPlan& folds, const PenaltyGrid& grid,
                  const BootstrapConfig& boot, const FitConfig& fitcfg = {});
PenaltyResult bcv(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg, const FoldPlan& folds,
                  const PenaltyGrid& grid, const BootstrapConfig& boot, const FitConfig& fitcfg = {});
/// Cross-validated level as a penalty result.
PenaltyResult cv_penalty(const Problem& problem, const PenaltyConfig& cfg, const FoldPlan& folds,
                         const PenaltyGrid& grid, const FitConfig& fitcfg = {}, int workers = 1);
/// c0 times the bootstrap quantile of the true residuals.
PenaltyResult oracle_bootstrap(const Dataset& data, const VectorXd& true_residuals, const PenaltyConfig& cfg,
                               const BootstrapConfig& boot);

/// Conjugate exponent q* with 1/q + 1/q* = 1 (infinity maps to 1 and back).
double conjugate_exponent(double q);
/// max_j E_n[||V_{i.j}||_{q*}^2] over the alternative-varying blocks.
double max_mean_sq_norm(const std::vector<MatrixXd>& V, double q_star);

/// c0 sqrt(ln(2(L1 p1 + p2)/alpha) / n max{d_(L1)^2/2 max_j E_n Z^2, 2 d~^2 max_j E_n ||V_.j||_{q*}^2}).
PenaltyResult analytic_penalty_multi(const MultiIndexData& data, const std::vector<double>& d_vec, double d_tilde,
                                     double q_norm, const PenaltyConfig& cfg);
/// Multinomial logit: L1 = J indices on Z with unit widths.
PenaltyResult mnl_penalty(const MatrixXd& Z, int J, const PenaltyConfig& cfg);
/// Conditional logit: minimizes over q in the grid with widths 2^(1/q).
PenaltyResult cl_penalty(const MultiIndexData& data, std::vector<double> q_grid, const PenaltyConfig& cfg);
/// Mixed logit: L1 = J, L2 = J + 1, q-minimized varying-regressor branch.
PenaltyResult ml_penalty(const MultiIndexData& data, std::vector<double> q_grid, const PenaltyConfig& cfg);
/// {1, 1.25, 1.5, 2, 3, 4, 8, inf}.
std::vector<double> default_q_grid();

}  // namespace l1pen
