#include "l1pen/losses.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "l1pen/errors.hpp"

namespace l1pen {

namespace {

constexpr std::array<std::pair<LossKind, std::string_view>, 14> kKindNames{{
    {LossKind::logit, "logit"},
    {LossKind::probit, "probit"},
    {LossKind::ordered_logit, "ordered_logit"},
    {LossKind::tdist_binary, "tdist_binary"},
    {LossKind::calibration, "calibration"},
    {LossKind::balancing, "balancing"},
    {LossKind::expectile, "expectile"},
    {LossKind::panel_logit, "panel_logit"},
    {LossKind::panel_duration, "panel_duration"},
    {LossKind::trimmed_lad, "trimmed_lad"},
    {LossKind::trimmed_ls, "trimmed_ls"},
    {LossKind::mnl, "mnl"},
    {LossKind::clogit, "clogit"},
    {LossKind::mixed_logit, "mixed_logit"},
}};

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// (1 - Phi(x)) / phi(x) for x >= 8 via the Laplace continued fraction.
double mills_ratio_tail(double x) {
  double acc = x;
  for (int k = 80; k >= 1; --k) acc = x + k / acc;
  return 1.0 / acc;
}

constexpr double kTailSwitch = 8.0;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

bool is_binary(double y) { return y == 0.0 || y == 1.0; }

bool is_category(double y, int max_category) {
  return std::isfinite(y) && y >= 0.0 && y <= max_category && std::floor(y) == y;
}

// log(sum_h exp(v_h)) over v with an implicit extra zero entry when
// `with_zero` is set.
double log_sum_exp(std::span<const double> v, bool with_zero) {
  double m = with_zero ? 0.0 : -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = with_zero ? std::exp(-m) : 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

boost::math::students_t_distribution<double> student(double nu) {
  return boost::math::students_t_distribution<double>(nu);
}

double tdist_ratio(double nu, double t) {
  const auto dist = student(nu);
  const double f = boost::math::pdf(dist, t);
  const double denom = boost::math::cdf(dist, t) * boost::math::cdf(dist, -t);
  // Far-tail points where both factors underflow lie well below the interior maximum.
  if (!(denom > 0.0) || !(f > 0.0)) return 0.0;
  return f / denom;
}

}  // namespace

std::string_view to_string(LossKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw InputError("unknown loss family '" + std::string(name) + "'");
}

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double log_normal_cdf(double t) {
  if (t < -kTailSwitch) return -0.5 * t * t - kLogSqrt2Pi + std::log(mills_ratio_tail(-t));
  if (t > 0.0) return std::log1p(-0.5 * std::erfc(t / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
}

double inverse_mills(double t) {
  if (t > kTailSwitch) return 1.0 / mills_ratio_tail(t);
  const double phi = std::exp(-0.5 * t * t - kLogSqrt2Pi);
  return phi / (0.5 * std::erfc(t / std::numbers::sqrt2));
}

LossModel::LossModel(LossFamily family) : family_(std::move(family)) {
  const auto& prm = family_.params;
  switch (family_.kind) {
    case LossKind::ordered_logit:
      if (prm.cutoffs.empty()) throw InputError("ordered_logit requires at least one cutoff");
      for (std::size_t j = 0; j < prm.cutoffs.size(); ++j) {
        if (!std::isfinite(prm.cutoffs[j])) throw InputError("ordered_logit cutoffs must be finite");
        if (j > 0 && !(prm.cutoffs[j] > prm.cutoffs[j - 1])) {
          throw InputError("ordered_logit cutoffs must be strictly increasing");
        }
      }
      break;
    case LossKind::tdist_binary:
      if (!(prm.dof > 0.0) || !std::isfinite(prm.dof)) throw InputError("tdist_binary requires nu > 0");
      break;
    case LossKind::expectile:
      if (!(prm.tau > 0.0 && prm.tau < 1.0)) throw InputError("expectile requires tau in (0,1)");
      break;
    case LossKind::panel_logit:
    case LossKind::panel_duration:
    case LossKind::trimmed_lad:
    case LossKind::trimmed_ls:
      outcome_arity_ = 2;
      break;
    case LossKind::mnl:
    case LossKind::clogit:
      if (prm.alternatives < 1) throw InputError("J must be at least 1");
      index_arity_ = static_cast<std::size_t>(prm.alternatives);
      break;
    case LossKind::mixed_logit:
      if (prm.alternatives < 1) throw InputError("J must be at least 1");
      index_arity_ = 2 * static_cast<std::size_t>(prm.alternatives) + 1;
      break;
    default:
      break;
  }
}

bool LossModel::is_multi_index() const noexcept {
  return family_.kind == LossKind::mnl || family_.kind == LossKind::clogit ||
         family_.kind == LossKind::mixed_logit;
}

double LossModel::value(double t, double y) const {
  return value(std::span<const double>(&t, 1), std::span<const double>(&y, 1));
}

double LossModel::deriv(double t, double y) const {
  double out = 0.0;
  deriv(std::span<const double>(&t, 1), std::span<const double>(&y, 1), std::span<double>(&out, 1));
  return out;
}

double LossModel::value(std::span<const double> tv, std::span<const double> yv) const {
  const double t = tv[0];
  const double y = yv[0];
  const auto& prm = family_.params;
  switch (family_.kind) {
    case LossKind::logit:
      return softplus(t) - y * t;
    case LossKind::probit:
      return y == 1.0 ? -log_normal_cdf(t) : -log_normal_cdf(-t);
    case LossKind::ordered_logit: {
      const auto& a = prm.cutoffs;
      const auto top = static_cast<int>(a.size());
      const int k = static_cast<int>(y);
      if (k == 0) return softplus(t - a.front());
      if (k == top) return softplus(a.back() - t);
      const double lo = a[k - 1] - t;
      const double hi = a[k] - t;
      return softplus(-hi) + softplus(lo) - std::log(-std::expm1(lo - hi));
    }
    case LossKind::tdist_binary: {
      const auto dist = student(prm.dof);
      return y == 1.0 ? -std::log(boost::math::cdf(dist, t)) : -std::log(boost::math::cdf(dist, -t));
    }
    case LossKind::calibration:
      return y * std::exp(-t) + (1.0 - y) * t;
    case LossKind::balancing:
      return (1.0 - y) * std::exp(t) + y * std::exp(-t) + (1.0 - 2.0 * y) * t;
    case LossKind::expectile: {
      const double u = y - t;
      const double w = u < 0.0 ? 1.0 - prm.tau : prm.tau;
      return w * u * u;
    }
    case LossKind::panel_logit:
      return yv[0] != yv[1] ? softplus(t) - yv[0] * t : 0.0;
    case LossKind::panel_duration:
      return softplus(t) - (yv[0] < yv[1] ? t : 0.0);
    case LossKind::trimmed_lad: {
      const double y1 = yv[0], y2 = yv[1];
      if (t <= -y2) return std::abs(y1) - (y2 + t) * sgn(y1);
      if (t < y1) return std::abs(y1 - y2 - t);
      return std::abs(y2) - (t - y1) * sgn(-y2);
    }
    case LossKind::trimmed_ls: {
      const double y1 = yv[0], y2 = yv[1];
      if (t <= -y2) return y1 * y1 - (y2 + t) * 2.0 * y1;
      if (t < y1) return (y1 - y2 - t) * (y1 - y2 - t);
      return y2 * y2 + 2.0 * y2 * (t - y1);
    }
    case LossKind::mnl:
    case LossKind::clogit: {
      const int k = static_cast<int>(y);
      return log_sum_exp(tv, true) - (k >= 1 ? tv[k - 1] : 0.0);
    }
    case LossKind::mixed_logit: {
      const auto J = static_cast<std::size_t>(prm.alternatives);
      std::vector<double> utility(J + 1);
      utility[0] = tv[J];
      for (std::size_t h = 1; h <= J; ++h) utility[h] = tv[h - 1] + tv[J + h];
      return log_sum_exp(utility, false) - utility[static_cast<std::size_t>(y)];
    }
  }
  return 0.0;
}

void LossModel::deriv(std::span<const double> tv, std::span<const double> yv,
                      std::span<double> out) const {
  const double t = tv[0];
  const double y = yv[0];
  const auto& prm = family_.params;
  switch (family_.kind) {
    case LossKind::logit:
      out[0] = logistic(t) - y;
      return;
    case LossKind::probit:
      out[0] = y == 1.0 ? -inverse_mills(-t) : inverse_mills(t);
      return;
    case LossKind::ordered_logit: {
      const auto& a = prm.cutoffs;
      const auto top = static_cast<int>(a.size());
      const int k = static_cast<int>(y);
      const double lower = k == 0 ? 0.0 : logistic(a[k - 1] - t);
      const double upper = k == top ? 1.0 : logistic(a[k] - t);
      out[0] = 1.0 - upper - lower;
      return;
    }
    case LossKind::tdist_binary: {
      const auto dist = student(prm.dof);
      const double f = boost::math::pdf(dist, t);
      out[0] = y == 1.0 ? -f / boost::math::cdf(dist, t) : f / boost::math::cdf(dist, -t);
      return;
    }
    case LossKind::calibration:
      out[0] = -y * std::exp(-t) + (1.0 - y);
      return;
    case LossKind::balancing:
      out[0] = (1.0 - y) * std::exp(t) - y * std::exp(-t) + (1.0 - 2.0 * y);
      return;
    case LossKind::expectile: {
      const double u = y - t;
      const double w = u < 0.0 ? 1.0 - prm.tau : prm.tau;
      out[0] = -2.0 * w * u;
      return;
    }
    case LossKind::panel_logit:
      out[0] = yv[0] != yv[1] ? logistic(t) - yv[0] : 0.0;
      return;
    case LossKind::panel_duration:
      out[0] = logistic(t) - (yv[0] < yv[1] ? 1.0 : 0.0);
      return;
    case LossKind::trimmed_lad: {
      const double y1 = yv[0], y2 = yv[1];
      if (t <= -y2) out[0] = -sgn(y1);
      else if (t < y1) out[0] = -sgn(y1 - y2 - t);
      else out[0] = -sgn(-y2);
      return;
    }
    case LossKind::trimmed_ls: {
      const double y1 = yv[0], y2 = yv[1];
      if (t <= -y2) out[0] = -2.0 * y1;
      else if (t < y1) out[0] = -2.0 * (y1 - y2 - t);
      else out[0] = 2.0 * y2;
      return;
    }
    case LossKind::mnl:
    case LossKind::clogit: {
      const double lse = log_sum_exp(tv, true);
      const int k = static_cast<int>(y);
      for (std::size_t l = 0; l < tv.size(); ++l) {
        out[l] = std::exp(tv[l] - lse) - (static_cast<int>(l) + 1 == k ? 1.0 : 0.0);
      }
      return;
    }
    case LossKind::mixed_logit: {
      const auto J = static_cast<std::size_t>(prm.alternatives);
      std::vector<double> utility(J + 1);
      utility[0] = tv[J];
      for (std::size_t h = 1; h <= J; ++h) utility[h] = tv[h - 1] + tv[J + h];
      const double lse = log_sum_exp(utility, false);
      const auto k = static_cast<std::size_t>(y);
      for (std::size_t h = 0; h <= J; ++h) {
        const double resid = std::exp(utility[h] - lse) - (h == k ? 1.0 : 0.0);
        out[J + h] = resid;
        if (h >= 1) out[h - 1] = resid;
      }
      return;
    }
  }
}

std::optional<double> LossModel::diameter() const {
  switch (family_.kind) {
    case LossKind::logit:
    case LossKind::panel_logit:
    case LossKind::panel_duration:
    case LossKind::mnl:
    case LossKind::mixed_logit:
      return 1.0;
    case LossKind::ordered_logit: {
      const auto& a = family_.params.cutoffs;
      return 2.0 * logistic(0.5 * (a.back() - a.front()));
    }
    case LossKind::tdist_binary:
      return tdist_diameter(family_.params.dof);
    case LossKind::trimmed_lad:
      return 2.0;
    default:
      return std::nullopt;
  }
}

void LossModel::validate_outcome(std::span<const double> y) const {
  const auto fail = [&](const char* what) {
    throw InputError(std::string("outcome outside the support of loss '") +
                     std::string(to_string(family_.kind)) + "': " + what);
  };
  if (y.size() != outcome_arity_) fail("wrong number of outcome columns");
  for (double v : y) {
    if (!std::isfinite(v)) fail("non-finite value");
  }
  switch (family_.kind) {
    case LossKind::logit:
    case LossKind::probit:
    case LossKind::tdist_binary:
    case LossKind::calibration:
    case LossKind::balancing:
      if (!is_binary(y[0])) fail("expected y in {0,1}");
      break;
    case LossKind::panel_logit:
      if (!is_binary(y[0]) || !is_binary(y[1])) fail("expected y1, y2 in {0,1}");
      break;
    case LossKind::ordered_logit:
      if (!is_category(y[0], static_cast<int>(family_.params.cutoffs.size()))) fail("expected y in {0,...,J}");
      break;
    case LossKind::trimmed_lad:
    case LossKind::trimmed_ls:
      if (y[0] < 0.0 || y[1] < 0.0) fail("censored outcomes must be nonnegative");
      break;
    case LossKind::mnl:
    case LossKind::clogit:
    case LossKind::mixed_logit:
      if (!is_category(y[0], family_.params.alternatives)) fail("expected y in {0,...,J}");
      break;
    default:
      break;
  }
}

double LossModel::curvature_hint() const noexcept {
  switch (family_.kind) {
    case LossKind::logit:
    case LossKind::panel_logit:
    case LossKind::panel_duration:
      return 0.25;
    case LossKind::ordered_logit:
    case LossKind::mnl:
    case LossKind::clogit:
      return 0.5;
    case LossKind::expectile:
      return 2.0 * std::max(family_.params.tau, 1.0 - family_.params.tau);
    case LossKind::trimmed_ls:
    case LossKind::balancing:
      return 2.0;
    default:
      return 1.0;
  }
}

bool LossModel::bounded_below_by_zero() const noexcept {
  return family_.kind != LossKind::calibration && family_.kind != LossKind::balancing;
}

double tdist_diameter(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InputError("tdist_diameter requires nu > 0");
  const double half_width = 10.0 * std::sqrt(nu);
  constexpr int kGrid = 10001;
  const double step = 2.0 * half_width / (kGrid - 1);
  double best_t = 0.0;
  double best = tdist_ratio(nu, 0.0);
  for (int k = 0; k < kGrid; ++k) {
    const double t = -half_width + k * step;
    const double v = tdist_ratio(nu, t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  // Golden-section refinement on the bracketing grid cell pair.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_t - step, hi = best_t + step;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = tdist_ratio(nu, x1), f2 = tdist_ratio(nu, x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = tdist_ratio(nu, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = tdist_ratio(nu, x1);
    }
  }
  return std::max({best, f1, f2, tdist_ratio(nu, 0.5 * (lo + hi))});
}

namespace {

double parse_double(std::string_view s, std::string_view key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InputError("invalid number '" + std::string(s) + "' for loss parameter '" + std::string(key) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

LossParams parse_loss_params(LossKind kind, std::string_view text) {
  LossParams prm;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw InputError("loss parameter '" + std::string(item) + "' is not key=value");
    const auto key = trim(item.substr(0, eq));
    const auto val = trim(item.substr(eq + 1));
    if (key == "cutoffs" && kind == LossKind::ordered_logit) {
      prm.cutoffs.clear();
      std::string_view rest = val;
      while (!rest.empty()) {
        const auto colon = rest.find(':');
        prm.cutoffs.push_back(parse_double(trim(rest.substr(0, colon)), key));
        rest = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
      }
    } else if ((key == "nu" || key == "dof") && kind == LossKind::tdist_binary) {
      prm.dof = parse_double(val, key);
    } else if (key == "tau" && kind == LossKind::expectile) {
      prm.tau = parse_double(val, key);
    } else if (key == "J" &&
               (kind == LossKind::mnl || kind == LossKind::clogit || kind == LossKind::mixed_logit)) {
      const double j = parse_double(val, key);
      if (std::floor(j) != j) throw InputError("J must be an integer");
      prm.alternatives = static_cast<int>(j);
    } else {
      throw InputError("unknown parameter '" + std::string(key) + "' for loss '" + std::string(to_string(kind)) + "'");
    }
  }
  return prm;
}

LossModel make_loss(std::string_view name, std::string_view params) {
  const auto kind = parse_loss_kind(name);
  return LossModel(LossFamily{kind, parse_loss_params(kind, params)});
}

}  // namespace l1pen
