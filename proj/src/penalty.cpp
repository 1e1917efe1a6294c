#include "l1pen/penalty.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "l1pen/errors.hpp"
#include "l1pen/parallel.hpp"
#include "l1pen/rng.hpp"

namespace l1pen {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodNames{{
    {Method::am, "am"},
    {Method::bam, "bam"},
    {Method::bcv, "bcv"},
    {Method::cv, "cv"},
    {Method::vdg16, "vdg16"},
    {Method::oracle, "oracle"},
    {Method::threshold, "threshold"},
}};

constexpr double kInf = std::numeric_limits<double>::infinity();

PenaltyResult base_result(Method m, double alpha, const PenaltyConfig& cfg) {
  PenaltyResult r;
  r.method = m;
  r.alpha = alpha;
  r.c0 = cfg.c0;
  return r;
}

void check_c0(const PenaltyConfig& cfg) {
  if (!(cfg.c0 > 0.0) || !std::isfinite(cfg.c0)) throw InputError("c0 must be positive");
}

PenaltyResult bootstrap_result(Method m, const MatrixXd& scores, Index n, const PenaltyConfig& cfg,
                               const BootstrapConfig& boot) {
  check_c0(cfg);
  const double alpha = cfg.alpha_for(n);
  PenaltyResult r = base_result(m, alpha, cfg);
  r.quantile = bootstrap_quantile(scores, alpha, boot);
  r.lambda = cfg.c0 * *r.quantile;
  r.seed = boot.seed;
  if (boot.draws < 100) r.warnings.push_back("fewer than 100 bootstrap draws; quantile may be unstable");
  return r;
}

MatrixXd residual_scores(const VectorXd& residuals, const MatrixXd& X) {
  if (residuals.size() != X.rows()) throw InputError("residual length must equal n");
  if (!residuals.allFinite()) throw InputError("residuals must be finite");
  return X.array().colwise() * residuals.array();
}

}  // namespace

std::string_view to_string(Method m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [k, n] : kMethodNames) {
    if (n == name) return k;
  }
  throw InputError("unknown penalty method '" + std::string(name) + "'");
}

double PenaltyConfig::alpha_for(Index n) const {
  const double a = alpha ? *alpha : 10.0 / static_cast<double>(n);
  if (!(a > 0.0 && a < 1.0)) {
    throw InputError(alpha ? "alpha must lie in (0,1)" : "default alpha = 10/n requires n > 10");
  }
  return a;
}

std::optional<double> PenaltyResult::detail(std::string_view key) const {
  for (const auto& [k, v] : details) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double max_mean_square(const MatrixXd& X) {
  if (X.cols() == 0 || X.rows() == 0) return 0.0;
  return X.array().square().colwise().mean().maxCoeff();
}

PenaltyResult analytic_penalty(const Dataset& data, double d, const PenaltyConfig& cfg) {
  if (!(d > 0.0) || !std::isfinite(d)) throw InputError("diameter d must be positive");
  check_c0(cfg);
  const double alpha = cfg.alpha_for(data.n());
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  PenaltyResult r = base_result(Method::am, alpha, cfg);
  r.lambda = cfg.c0 * d * std::sqrt(std::log(2.0 * p / alpha) / (2.0 * n) * max_mean_square(data.X));
  r.details.emplace_back("diameter", d);
  return r;
}

PenaltyResult analytic_penalty(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg) {
  const auto d = model.diameter();
  if (!d) {
    throw InputError("analytic method unavailable for this loss ('" + std::string(to_string(model.kind())) +
                     "' has no residual diameter)");
  }
  return analytic_penalty(data, *d, cfg);
}

PenaltyResult vdg16_penalty(const Dataset& data, const PenaltyConfig& cfg) {
  PenaltyResult r = analytic_penalty(data, 1.0, cfg);
  r.method = Method::vdg16;
  r.lambda *= 16.0;
  r.details.clear();
  return r;
}

PenaltyResult threshold_penalty(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg) {
  PenaltyResult r = base_result(Method::threshold, cfg.alpha_for(data.n()), cfg);
  r.lambda = lambda_max(data, model);
  return r;
}

std::size_t quantile_rank(double alpha, std::size_t B) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  if (B < 1) throw InputError("bootstrap draw count must be at least 1");
  const double x = (1.0 - alpha) * static_cast<double>(B);
  const double r = std::ceil(x - 1e-9 * std::max(1.0, x));
  return std::clamp<std::size_t>(static_cast<std::size_t>(r), 1, B);
}

std::vector<double> bootstrap_draws(const MatrixXd& scores, const BootstrapConfig& boot) {
  if (boot.draws < 1) throw InputError("bootstrap draw count must be at least 1");
  if (!scores.allFinite()) throw InputError("score contributions must be finite");
  const Index n = scores.rows();
  const auto B = static_cast<std::size_t>(boot.draws);
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (B + kChunk - 1) / kChunk;
  std::vector<double> T(B, 0.0);
  if (scores.cols() == 0 || n == 0) return T;
  parallel_for(chunks, boot.workers, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const auto m = static_cast<Index>(std::min(kChunk, B - first));
    MatrixXd E(m, n);
    for (Index r = 0; r < m; ++r) {
      for (Index i = 0; i < n; ++i) E(r, i) = rng::normal(boot.seed, first + r, static_cast<std::uint64_t>(i));
    }
    const MatrixXd M = E * scores;
    for (Index r = 0; r < m; ++r) T[first + r] = M.row(r).cwiseAbs().maxCoeff() / static_cast<double>(n);
  });
  return T;
}

double bootstrap_quantile(const MatrixXd& scores, double alpha, const BootstrapConfig& boot) {
  const std::size_t rank = quantile_rank(alpha, static_cast<std::size_t>(std::max(boot.draws, 0)));
  auto T = bootstrap_draws(scores, boot);
  std::nth_element(T.begin(), T.begin() + static_cast<std::ptrdiff_t>(rank - 1), T.end());
  return T[rank - 1];
}

double bootstrap_quantile(const VectorXd& residuals, const Dataset& data, double alpha, const BootstrapConfig& boot) {
  return bootstrap_quantile(residual_scores(residuals, data.X), alpha, boot);
}

double gaussian_quantile_bound(const MatrixXd& scores, double alpha) {
  const double n = static_cast<double>(scores.rows());
  const double p = static_cast<double>(scores.cols());
  const double sigma2 = scores.array().square().colwise().sum().maxCoeff() / (n * n);
  return (2.0 + std::sqrt(2.0)) * std::sqrt(sigma2) * std::sqrt(std::log(p / alpha));
}

PenaltyResult bam(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg, const BootstrapConfig& boot,
                  const FitConfig& fitcfg) {
  const PenaltyResult am = analytic_penalty(data, model, cfg);
  const Problem problem = make_problem(data, model);
  const FitResult f = fit(problem, am.lambda, std::nullopt, fitcfg);
  MatrixXd T, G;
  problem.design.indices(f.theta, T);
  loss_and_derivs(model, T, problem.Y, G);
  PenaltyResult r = bootstrap_result(Method::bam, problem.design.scores(G), data.n(), cfg, boot);
  r.details.emplace_back("lambda_am", am.lambda);
  r.details.emplace_back("am_kkt_residual", f.kkt_residual);
  r.details.emplace_back("am_iterations", f.iterations);
  r.details.emplace_back("am_converged", f.converged ? 1.0 : 0.0);
  if (!f.converged) {
    r.flagged = true;
    r.warnings.push_back("analytic-level fit did not converge; residuals taken from the last iterate");
  }
  return r;
}

PenaltyResult bcv(const Problem& problem, const PenaltyConfig& cfg, const FoldPlan& folds, const PenaltyGrid& grid,
                  const BootstrapConfig& boot, const FitConfig& fitcfg) {
  const CvResult cv = cv_select(problem, folds, grid, fitcfg, CvOptions{true, boot.workers});
  const MatrixXd G = cv_residuals(problem, folds, cv);
  PenaltyResult r = bootstrap_result(Method::bcv, problem.design.scores(G), problem.n(), cfg, boot);
  r.details.emplace_back("lambda_cv", cv.lambda_cv);
  r.details.emplace_back("cv_index", static_cast<double>(cv.selected));
  r.details.emplace_back("cv_excluded",
                         static_cast<double>(std::count(cv.excluded.begin(), cv.excluded.end(), true)));
  r.warnings.insert(r.warnings.end(), cv.warnings.begin(), cv.warnings.end());
  return r;
}

PenaltyResult bcv(const Dataset& data, const LossModel& model, const PenaltyConfig& cfg, const FoldPlan& folds,
                  const PenaltyGrid& grid, const BootstrapConfig& boot, const FitConfig& fitcfg) {
  return bcv(make_problem(data, model), cfg, folds, grid, boot, fitcfg);
}

PenaltyResult cv_penalty(const Problem& problem, const PenaltyConfig& cfg, const FoldPlan& folds,
                         const PenaltyGrid& grid, const FitConfig& fitcfg, int workers) {
  check_c0(cfg);
  const CvResult cv = cv_select(problem, folds, grid, fitcfg, CvOptions{true, workers});
  PenaltyResult r = base_result(Method::cv, cfg.alpha_for(problem.n()), cfg);
  r.lambda = cv.lambda_cv;
  r.details.emplace_back("cv_index", static_cast<double>(cv.selected));
  r.warnings = cv.warnings;
  return r;
}

PenaltyResult oracle_bootstrap(const Dataset& data, const VectorXd& true_residuals, const PenaltyConfig& cfg,
                               const BootstrapConfig& boot) {
  return bootstrap_result(Method::oracle, residual_scores(true_residuals, data.X), data.n(), cfg, boot);
}

double conjugate_exponent(double q) {
  if (!(q >= 1.0)) throw InputError("norm exponent q must be at least 1");
  if (q == 1.0) return kInf;
  if (std::isinf(q)) return 1.0;
  return q / (q - 1.0);
}

double max_mean_sq_norm(const std::vector<MatrixXd>& V, double q_star) {
  if (V.empty()) return 0.0;
  const Index n = V.front().rows();
  const Index p2 = V.front().cols();
  double best = 0.0;
  for (Index j = 0; j < p2; ++j) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      double norm = 0.0;
      if (std::isinf(q_star)) {
        for (const auto& v : V) norm = std::max(norm, std::abs(v(i, j)));
      } else if (q_star == 1.0) {
        for (const auto& v : V) norm += std::abs(v(i, j));
      } else {
        for (const auto& v : V) norm += std::pow(std::abs(v(i, j)), q_star);
        norm = std::pow(norm, 1.0 / q_star);
      }
      total += norm * norm;
    }
    best = std::max(best, total / static_cast<double>(n));
  }
  return best;
}

PenaltyResult analytic_penalty_multi(const MultiIndexData& data, const std::vector<double>& d_vec, double d_tilde,
                                     double q_norm, const PenaltyConfig& cfg) {
  validate_multi(data);
  check_c0(cfg);
  if (d_vec.size() != data.L1) throw InputError("need one width per common-regressor index");
  for (double d : d_vec) {
    if (!(d > 0.0)) throw InputError("index widths must be positive");
  }
  if (data.L2() > 0 && !(d_tilde > 0.0)) throw InputError("varying-regressor width must be positive");
  const double q_star = conjugate_exponent(q_norm);
  const double alpha = cfg.alpha_for(data.n());
  const double n = static_cast<double>(data.n());
  const double dim = static_cast<double>(data.dim());
  double common = 0.0;
  if (data.L1 > 0) {
    const double d_max = *std::max_element(d_vec.begin(), d_vec.end());
    common = d_max * d_max / 2.0 * max_mean_square(data.Z);
  }
  double varying = 0.0;
  if (data.L2() > 0) varying = 2.0 * d_tilde * d_tilde * max_mean_sq_norm(data.V, q_star);
  PenaltyResult r = base_result(Method::am, alpha, cfg);
  r.lambda = cfg.c0 * std::sqrt(std::log(2.0 * dim / alpha) / n * std::max(common, varying));
  r.details.emplace_back("q", q_norm);
  return r;
}

PenaltyResult mnl_penalty(const MatrixXd& Z, int J, const PenaltyConfig& cfg) {
  if (J < 1) throw InputError("J must be at least 1");
  MultiIndexData data;
  data.Z = Z;
  data.L1 = static_cast<std::size_t>(J);
  return analytic_penalty_multi(data, std::vector<double>(data.L1, 1.0), 0.0, kInf, cfg);
}

std::vector<double> default_q_grid() { return {1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0, kInf}; }

namespace {

PenaltyResult minimize_over_q(const MultiIndexData& data, std::vector<double> q_grid, const PenaltyConfig& cfg) {
  if (q_grid.empty()) throw InputError("q grid is empty");
  for (double q : {1.0, 2.0, kInf}) {
    if (std::find(q_grid.begin(), q_grid.end(), q) == q_grid.end()) q_grid.push_back(q);
  }
  std::sort(q_grid.begin(), q_grid.end());
  const std::vector<double> d_vec(data.L1, 1.0);
  std::optional<PenaltyResult> best;
  double at_one = 0.0;
  for (double q : q_grid) {
    PenaltyResult r = analytic_penalty_multi(data, d_vec, std::pow(2.0, 1.0 / q), q, cfg);
    if (q == 1.0) at_one = r.lambda;
    if (!best || r.lambda < best->lambda) best = std::move(r);
  }
  best->details.emplace_back("lambda_q1", at_one);
  return *best;
}

}  // namespace

PenaltyResult cl_penalty(const MultiIndexData& data, std::vector<double> q_grid, const PenaltyConfig& cfg) {
  if (data.L1 != 0 || data.L2() < 1) throw InputError("conditional logit needs L1 = 0 and L2 = J >= 1");
  return minimize_over_q(data, std::move(q_grid), cfg);
}

PenaltyResult ml_penalty(const MultiIndexData& data, std::vector<double> q_grid, const PenaltyConfig& cfg) {
  if (data.L1 < 1 || data.L2() != data.L1 + 1) throw InputError("mixed logit needs L1 = J >= 1 and L2 = J + 1");
  return minimize_over_q(data, std::move(q_grid), cfg);
}

}  // namespace l1pen
