#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "l1pen/design.hpp"
#include "l1pen/penalty.hpp"
#include "l1pen/solver.hpp"

namespace l1pen {

enum class Pattern { sparse, dense };

Pattern parse_pattern(std::string_view name);
std::string_view to_string(Pattern p);

/// Sparse: (1, 1, 0, ..., 0). Dense: theta_j = 2^(-(j-1)/2).
VectorXd theta0_pattern(Pattern pattern, Index p);

/// Rows i.i.d. N(0, Sigma) with Sigma_jk = rho^|j-k|, via the AR(1) recursion.
MatrixXd gen_toeplitz_gaussian(Index n, Index p, double rho, std::uint64_t seed);

/// Y_i = 1(X_i' theta0 + eps_i > 0) with standard logistic eps.
VectorXd gen_logit_outcomes(const MatrixXd& X, const VectorXd& theta0, std::uint64_t seed);

/// Estimator identifiers accepted in SimDesign::methods.
const std::vector<std::string>& simulation_methods();

struct SimDesign {
  Index n = 100;
  Index p = 100;
  std::vector<double> rhos{0.0};
  Pattern pattern = Pattern::sparse;
  int n_reps = 200;
  std::uint64_t base_seed = 0;
  std::vector<std::string> methods{"am", "bam", "bcv", "oracle"};
  int folds = 10;
  std::size_t grid_size = 100;
  double grid_ratio = 1e-4;
  /// Fit the estimator at each selected level; off records penalties only.
  bool fit_estimates = true;
  int workers = 1;
};

/// Checks the design before any computation. Throws InputError.
void validate_design(const SimDesign& design);

/// Seed of replication r at correlation index k.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rho_index, int r);

struct RepRecord {
  std::string method;
  double rho = 0.0;
  int replication = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double l1_err = 0.0;
  double l2_err = 0.0;
  Index nonzeros = 0;
  bool converged = true;
  bool failed = false;
};

/// Per-replication quantities shared by all methods.
struct RepDiagnostics {
  double rho = 0.0;
  int replication = 0;
  std::uint64_t seed = 0;
  double lambda_max = 0.0;
  double score_sup = 0.0;  // ||E_n[U_i X_i]||_inf at the true parameter
};

struct CellSummary {
  std::string method;
  double rho = 0.0;
  int reps = 0;
  int failures = 0;
  double mean_l2 = 0.0;
  double se_l2 = 0.0;
  double mean_l1 = 0.0;
  double se_l1 = 0.0;
  double zero_fraction = 0.0;
  double mean_lambda = 0.0;
  /// Fraction of replications with lambda >= c0 ||S||_inf.
  double coverage = 0.0;
};

struct MCResult {
  std::vector<RepRecord> records;         // rho-major, then replication, then method order
  std::vector<RepDiagnostics> diagnostics;
  std::vector<CellSummary> summary;       // rho-major, then method order
  std::vector<std::string> log;
  double theta0_l2 = 0.0;
  double theta0_l1 = 0.0;

  const CellSummary& cell(std::string_view method, double rho) const;
  std::vector<double> lambdas(std::string_view method) const;
};

/// Runs every replication and method. Failing (method, replication) pairs
/// are logged and excluded from the summaries.
MCResult run_mc(const SimDesign& design, const PenaltyConfig& cfg, const BootstrapConfig& boot,
                const FitConfig& fitcfg = {});

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  bool degenerate = false;
};

/// Gaussian kernel density on 512 points over [min - 3h, max + 3h].
/// The default bandwidth is 0.9 min(sd, IQR/1.34) n^(-1/5).
DensityEstimate kde(const std::vector<double>& samples, std::optional<double> bandwidth = std::nullopt);

}  // namespace l1pen
