#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace l1pen {

enum class LossKind {
  logit,
  probit,
  ordered_logit,
  tdist_binary,
  calibration,
  balancing,
  expectile,
  panel_logit,
  panel_duration,
  trimmed_lad,
  trimmed_ls,
  mnl,
  clogit,
  mixed_logit,
};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Family-specific parameters. Only the fields relevant to `kind` are read.
struct LossParams {
  std::vector<double> cutoffs;  // ordered_logit: alpha_1 < ... < alpha_J
  double dof = 1.0;             // tdist_binary: nu > 0
  double tau = 0.5;             // expectile: asymmetry in (0,1)
  int alternatives = 1;         // mnl, clogit, mixed_logit: J >= 1
};

struct LossFamily {
  LossKind kind = LossKind::logit;
  LossParams params;
};

/// A convex loss m(t, y) over one or more linear indices t.
///
/// `value` and `deriv` take the index vector (length index_arity) and the
/// outcome vector (length outcome_arity). The derivative is taken with
/// respect to the indices; at kinks of trimmed_lad the middle-branch
/// one-sided limit is returned, with sign(0) := 0.
class LossModel {
 public:
  LossModel() : LossModel(LossFamily{}) {}
  explicit LossModel(LossFamily family);

  static LossModel logit() { return LossModel(LossFamily{LossKind::logit, {}}); }

  const LossFamily& family() const noexcept { return family_; }
  LossKind kind() const noexcept { return family_.kind; }
  std::size_t index_arity() const noexcept { return index_arity_; }
  std::size_t outcome_arity() const noexcept { return outcome_arity_; }
  bool is_multi_index() const noexcept;

  double value(std::span<const double> t, std::span<const double> y) const;
  void deriv(std::span<const double> t, std::span<const double> y, std::span<double> out) const;

  // Single-index, single-outcome shorthands.
  double value(double t, double y) const;
  double deriv(double t, double y) const;

  /// Width of an interval that contains m'_1(X'theta0, Y) almost surely,
  /// or nullopt when the residual is unbounded. For mnl and mixed_logit this
  /// is the per-index width d_l of the common-regressor residuals.
  std::optional<double> diameter() const;

  /// Throws InputError if y lies outside the family's outcome support.
  void validate_outcome(std::span<const double> y) const;

  /// Upper bound (or starting guess) on the second derivative in t, used to
  /// seed the solver's step size before backtracking.
  double curvature_hint() const noexcept;
  bool smooth() const noexcept { return family_.kind != LossKind::trimmed_lad; }
  /// True when m >= 0 everywhere with infimum 0 (saturating fits possible).
  bool bounded_below_by_zero() const noexcept;

 private:
  LossFamily family_;
  std::size_t index_arity_ = 1;
  std::size_t outcome_arity_ = 1;
};

/// Parses "key=value,key=value" parameter strings. List values (cutoffs)
/// are colon-separated, e.g. "cutoffs=-1:0:1.5".
LossParams parse_loss_params(LossKind kind, std::string_view text);
LossModel make_loss(std::string_view name, std::string_view params = {});

/// sup_t f(t) / (F(t) (1 - F(t))) for the Student-t distribution with nu
/// degrees of freedom, by grid search plus golden-section refinement.
double tdist_diameter(double nu);

// Numerically stable scalar helpers shared with tests.
double logistic(double t);
double softplus(double t);  // ln(1 + e^t)
double log_normal_cdf(double t);
/// phi(t) / (1 - Phi(t)), the inverse Mills ratio.
double inverse_mills(double t);

}  // namespace l1pen
