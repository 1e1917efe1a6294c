#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l1pen/design.hpp"
#include "l1pen/solver.hpp"

namespace l1pen {

enum class FoldScheme { even, seeded_random };

FoldScheme parse_fold_scheme(std::string_view name);

/// K-fold partition. `assignment[i]` is the 0-based fold of observation i.
struct FoldPlan {
  int K = 10;
  std::vector<int> assignment;

  std::vector<Index> fold(int k) const;
  std::vector<Index> complement(int k) const;
};

/// Even scheme: contiguous blocks, remainders go to the leading folds.
/// seeded_random applies a seeded permutation before blocking.
FoldPlan make_folds(Index n, int K, FoldScheme scheme = FoldScheme::even, std::uint64_t seed = 0);

/// values[k] = lambda_max * ratio^(k / (count - 1)).
PenaltyGrid make_grid(double lambda_max, std::size_t count = 100, double ratio = 1e-4);

struct FoldFit {
  bool fitted = false;
  bool converged = false;
  double kkt_residual = 0.0;
  int iterations = 0;
  Index nonzeros = 0;
};

struct CvResult {
  double lambda_cv = 0.0;
  std::size_t selected = 0;
  /// Total out-of-sample loss per candidate; +inf for excluded candidates.
  std::vector<double> oos_loss;
  std::vector<bool> excluded;
  std::vector<std::vector<FoldFit>> per_fold_fits;  // K x |grid|
  /// Hold-out estimates at lambda_cv, one per fold.
  std::vector<VectorXd> holdout_theta;
  std::vector<std::string> warnings;
};

struct CvOptions {
  /// Stop each fold path at its first non-converged fit and, for losses
  /// bounded below by zero, once the training loss falls to 1e-3 of its
  /// value at zero. Candidates not fitted in every fold are excluded.
  bool truncate_paths = true;
  int workers = 1;
};

/// Selects the candidate minimizing the total hold-out loss; ties go to the
/// largest lambda. Fits warm-start along the grid within each fold.
CvResult cv_select(const Problem& problem, const FoldPlan& folds, const PenaltyGrid& grid,
                   const FitConfig& fitcfg = {}, const CvOptions& opts = {});
CvResult cv_select(const Dataset& data, const LossModel& model, const FoldPlan& folds, const PenaltyGrid& grid,
                   const FitConfig& fitcfg = {});

/// Out-of-fold derivatives m'_l(X_i' theta_{-k}, Y_i) for i in fold k (n x arity),
/// from cold-started hold-out fits at lambda_cv.
MatrixXd cv_residuals(const Problem& problem, const FoldPlan& folds, double lambda_cv, const FitConfig& fitcfg = {},
                      int workers = 1);
VectorXd cv_residuals(const Dataset& data, const LossModel& model, const FoldPlan& folds, double lambda_cv,
                      const FitConfig& fitcfg = {});
/// Same, reusing the hold-out estimates stored by cv_select.
MatrixXd cv_residuals(const Problem& problem, const FoldPlan& folds, const CvResult& cv);

/// Derivatives for the rows of each fold evaluated at that fold's estimate.
MatrixXd holdout_derivs(const Problem& problem, const FoldPlan& folds, const std::vector<VectorXd>& thetas);

}  // namespace l1pen
