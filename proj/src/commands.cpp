#include "l1pen/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "l1pen/csv_io.hpp"
#include "l1pen/cv.hpp"
#include "l1pen/errors.hpp"
#include "l1pen/simlab.hpp"
#include "l1pen/svg.hpp"

namespace l1pen {

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : parse_name_list(text)) {
    double v = 0.0;
    const auto* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw InputError("invalid number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

namespace {

struct Loaded {
  LossModel model;
  std::optional<Dataset> single;
  std::optional<MultiIndexDataset> multi;
  Problem problem;
};

void check_common(const RunConfig& cfg) {
  if (!(cfg.c0 > 0.0) || !std::isfinite(cfg.c0)) throw InputError("--c0 must be positive");
  if (cfg.alpha && !(*cfg.alpha > 0.0 && *cfg.alpha < 1.0)) throw InputError("--alpha must lie in (0,1)");
  if (cfg.boot_draws && *cfg.boot_draws < 1) throw InputError("--boot-draws must be at least 1");
  if (cfg.workers < 1) throw InputError("--workers must be at least 1");
  if (!(cfg.kkt_tol > 0.0)) throw InputError("--kkt-tol must be positive");
  if (cfg.max_iter < 1) throw InputError("--max-iter must be positive");
  if (cfg.grid_size < 1) throw InputError("--grid-size must be at least 1");
  if (!(cfg.grid_ratio > 0.0 && cfg.grid_ratio < 1.0)) throw InputError("--grid-ratio must lie in (0,1)");
}

Loaded load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw InputError("--input is required");
  if (!std::filesystem::exists(cfg.input)) throw InputError("input file '" + cfg.input + "' does not exist");
  Loaded L{make_loss(cfg.loss, cfg.loss_params), {}, {}, {}};
  if (L.model.is_multi_index()) {
    L.multi = load_multi_csv(cfg.input, L.model);
    L.problem = make_problem(L.multi->data, L.multi->Y, L.model);
  } else {
    L.single = load_csv(cfg.input, L.model);
    L.problem = make_problem(*L.single, L.model);
  }
  return L;
}

FitConfig fit_config(const RunConfig& cfg) { return FitConfig{cfg.kkt_tol, cfg.max_iter, 0.5}; }
PenaltyConfig penalty_config(const RunConfig& cfg) { return PenaltyConfig{cfg.c0, cfg.alpha}; }
BootstrapConfig boot_config(const RunConfig& cfg, int fallback) {
  return BootstrapConfig{cfg.boot_draws.value_or(fallback), cfg.seed, cfg.workers};
}

PenaltyResult select_penalty(const Loaded& L, Method method, const RunConfig& cfg) {
  const PenaltyConfig pcfg = penalty_config(cfg);
  const BootstrapConfig boot = boot_config(cfg, 1000);
  const FitConfig fcfg = fit_config(cfg);
  auto cv_inputs = [&] {
    const FoldPlan folds = make_folds(L.problem.n(), cfg.folds, parse_fold_scheme(cfg.fold_scheme), cfg.seed);
    const PenaltyGrid grid = make_grid(lambda_max(L.problem), cfg.grid_size, cfg.grid_ratio);
    return std::make_pair(folds, grid);
  };
  switch (method) {
    case Method::am:
      if (L.single) return analytic_penalty(*L.single, L.model, pcfg);
      switch (L.model.kind()) {
        case LossKind::mnl: return mnl_penalty(L.multi->data.Z, L.model.family().params.alternatives, pcfg);
        case LossKind::clogit: return cl_penalty(L.multi->data, default_q_grid(), pcfg);
        default: return ml_penalty(L.multi->data, default_q_grid(), pcfg);
      }
    case Method::bam:
      if (!L.single) throw InputError("bam is available for single-index losses only");
      return bam(*L.single, L.model, pcfg, boot, fcfg);
    case Method::bcv: {
      const auto [folds, grid] = cv_inputs();
      return bcv(L.problem, pcfg, folds, grid, boot, fcfg);
    }
    case Method::cv: {
      const auto [folds, grid] = cv_inputs();
      return cv_penalty(L.problem, pcfg, folds, grid, fcfg, cfg.workers);
    }
    case Method::vdg16:
      if (!L.single) throw InputError("vdg16 is available for single-index losses only");
      return vdg16_penalty(*L.single, pcfg);
    case Method::threshold: {
      PenaltyResult r;
      r.method = Method::threshold;
      r.alpha = pcfg.alpha_for(L.problem.n());
      r.c0 = pcfg.c0;
      r.lambda = lambda_max(L.problem);
      return r;
    }
    case Method::oracle:
      throw InputError("oracle needs the true residuals and is available in simulate only");
  }
  throw InputError("unsupported method");
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string penalty_table(const std::vector<PenaltyResult>& results) {
  std::string out = "method,lambda,quantile,alpha,c0,seed\n";
  for (const auto& r : results) {
    out += std::string(to_string(r.method)) + "," + format_double(r.lambda) + "," + optional_text(r.quantile) + "," +
           format_double(r.alpha) + "," + format_double(r.c0) + "," + (r.seed ? std::to_string(*r.seed) : "") + "\n";
  }
  return out;
}

std::string details_table(const PenaltyResult& r) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : r.details) out += k + "," + format_double(v) + "\n";
  return out;
}

std::string theta_table(const FitResult& f) {
  std::string out = "index,theta\n";
  for (Index j = 0; j < f.theta.size(); ++j) out += std::to_string(j + 1) + "," + format_double(f.theta[j]) + "\n";
  return out;
}

std::string fit_summary_table(const FitResult& f) {
  return "lambda,objective,kkt_residual,iterations,converged,nonzeros\n" + format_double(f.lambda) + "," +
         format_double(f.objective) + "," + format_double(f.kkt_residual) + "," + std::to_string(f.iterations) + "," +
         (f.converged ? "1" : "0") + "," + std::to_string((f.theta.array() != 0.0).count()) + "\n";
}

void echo_common(Report& rep, const RunConfig& cfg, std::optional<double> alpha) {
  auto put = [&](const std::string& k, const std::string& v) { rep.manifest.emplace_back(k, v); };
  put("version", kVersion);
  if (!cfg.input.empty()) put("input", cfg.input);
  put("output-dir", cfg.output_dir);
  put("loss", cfg.loss);
  put("loss-params", cfg.loss_params);
  if (cfg.method) put("method", *cfg.method);
  if (cfg.lambda) put("lambda", format_double(*cfg.lambda));
  put("c0", format_double(cfg.c0));
  if (alpha) put("alpha", format_double(*alpha));
  put("folds", std::to_string(cfg.folds));
  put("fold-scheme", cfg.fold_scheme);
  put("grid-size", std::to_string(cfg.grid_size));
  put("grid-ratio", format_double(cfg.grid_ratio));
  put("seed", std::to_string(cfg.seed));
  put("workers", std::to_string(cfg.workers));
  put("kkt-tol", format_double(cfg.kkt_tol));
  put("max-iter", std::to_string(cfg.max_iter));
}

void add_fit(Report& rep, const FitResult& f) {
  rep.tables.emplace_back("fit.csv", theta_table(f));
  rep.tables.emplace_back("fit_summary.csv", fit_summary_table(f));
  if (!f.converged) {
    rep.exit_code = 4;
    rep.warnings.push_back("final fit did not reach the KKT tolerance");
  }
}

}  // namespace

Report cmd_fit(const RunConfig& cfg) {
  check_common(cfg);
  if (!cfg.lambda && !cfg.method) throw InputError("fit needs --lambda or --method");
  if (cfg.lambda && cfg.method) throw InputError("pass only one of --lambda and --method");
  const Loaded L = load_input(cfg);
  Report rep;
  // A fixed --lambda never consults alpha.
  std::optional<double> alpha;
  if (cfg.method) alpha = penalty_config(cfg).alpha_for(L.problem.n());
  echo_common(rep, cfg, alpha);
  rep.manifest.emplace_back("boot-draws", std::to_string(cfg.boot_draws.value_or(1000)));
  double lambda = 0.0;
  if (cfg.lambda) {
    if (!(*cfg.lambda >= 0.0)) throw InputError("--lambda must be nonnegative");
    lambda = *cfg.lambda;
  } else {
    const PenaltyResult pr = select_penalty(L, parse_method(*cfg.method), cfg);
    rep.warnings.insert(rep.warnings.end(), pr.warnings.begin(), pr.warnings.end());
    lambda = pr.lambda;
  }
  add_fit(rep, fit(L.problem, lambda, std::nullopt, fit_config(cfg)));
  return rep;
}

Report cmd_select(const RunConfig& cfg) {
  check_common(cfg);
  if (!cfg.method) throw InputError("select needs --method");
  const Method method = parse_method(*cfg.method);
  const Loaded L = load_input(cfg);
  Report rep;
  echo_common(rep, cfg, penalty_config(cfg).alpha_for(L.problem.n()));
  rep.manifest.emplace_back("boot-draws", std::to_string(cfg.boot_draws.value_or(1000)));
  const PenaltyResult pr = select_penalty(L, method, cfg);
  rep.tables.emplace_back("penalty.csv", penalty_table({pr}));
  rep.tables.emplace_back("penalty_details.csv", details_table(pr));
  rep.warnings.insert(rep.warnings.end(), pr.warnings.begin(), pr.warnings.end());
  add_fit(rep, fit(L.problem, pr.lambda, std::nullopt, fit_config(cfg)));
  if (pr.flagged) rep.exit_code = 4;
  return rep;
}

Report cmd_compare(const RunConfig& cfg) {
  check_common(cfg);
  const Loaded L = load_input(cfg);
  std::vector<std::string> names = parse_name_list(cfg.methods);
  if (names.empty()) {
    names = {"threshold", "cv", "bcv"};
    if (L.single && L.model.diameter()) names.insert(names.begin() + 1, {"am", "bam"});
    if (!L.single) names.insert(names.begin() + 1, "am");
    if (L.single) names.push_back("vdg16");
  }
  Report rep;
  echo_common(rep, cfg, penalty_config(cfg).alpha_for(L.problem.n()));
  rep.manifest.emplace_back("boot-draws", std::to_string(cfg.boot_draws.value_or(1000)));
  std::string methods_echo;
  for (const auto& m : names) methods_echo += (methods_echo.empty() ? "" : ",") + m;
  rep.manifest.emplace_back("methods", methods_echo);
  std::string table = "method,lambda,quantile,nonzeros,objective,kkt_residual,converged\n";
  std::vector<PenaltyResult> penalties;
  for (const auto& name : names) {
    const PenaltyResult pr = select_penalty(L, parse_method(name), cfg);
    const FitResult f = fit(L.problem, pr.lambda, std::nullopt, fit_config(cfg));
    table += name + "," + format_double(pr.lambda) + "," + optional_text(pr.quantile) + "," +
             std::to_string((f.theta.array() != 0.0).count()) + "," + format_double(f.objective) + "," +
             format_double(f.kkt_residual) + "," + (f.converged ? "1" : "0") + "\n";
    if (!f.converged) rep.exit_code = 4;
    rep.warnings.insert(rep.warnings.end(), pr.warnings.begin(), pr.warnings.end());
    penalties.push_back(pr);
  }
  rep.tables.emplace_back("comparison.csv", table);
  rep.tables.emplace_back("penalty.csv", penalty_table(penalties));
  return rep;
}

Report cmd_simulate(const RunConfig& cfg) {
  check_common(cfg);
  if (cfg.loss != "logit") throw InputError("simulate supports the logit design only");
  SimDesign design;
  design.n = cfg.n;
  design.p = cfg.p;
  design.rhos = parse_number_list(cfg.rho_grid);
  design.pattern = parse_pattern(cfg.pattern);
  design.n_reps = cfg.reps;
  design.base_seed = cfg.seed;
  if (!cfg.methods.empty()) design.methods = parse_name_list(cfg.methods);
  design.folds = cfg.folds;
  design.grid_size = cfg.grid_size;
  design.grid_ratio = cfg.grid_ratio;
  design.workers = cfg.workers;
  validate_design(design);
  const PenaltyConfig pcfg = penalty_config(cfg);
  const double alpha = pcfg.alpha_for(design.n);
  const BootstrapConfig boot = boot_config(cfg, 500);

  Report rep;
  echo_common(rep, cfg, alpha);
  rep.manifest.emplace_back("boot-draws", std::to_string(boot.draws));
  rep.manifest.emplace_back("reps", std::to_string(cfg.reps));
  rep.manifest.emplace_back("rho-grid", cfg.rho_grid);
  rep.manifest.emplace_back("pattern", cfg.pattern);
  rep.manifest.emplace_back("n", std::to_string(cfg.n));
  rep.manifest.emplace_back("p", std::to_string(cfg.p));
  std::string methods_echo;
  for (const auto& m : design.methods) methods_echo += (methods_echo.empty() ? "" : ",") + m;
  rep.manifest.emplace_back("methods", methods_echo);

  const MCResult mc = run_mc(design, PenaltyConfig{cfg.c0, alpha}, boot, fit_config(cfg));
  rep.warnings = mc.log;

  std::string reps = "method,rho,replication,seed,lambda,l1_err,l2_err,nonzeros,converged\n";
  for (const auto& r : mc.records) {
    if (r.failed) continue;
    reps += r.method + "," + format_double(r.rho) + "," + std::to_string(r.replication) + "," +
            std::to_string(r.seed) + "," + format_double(r.lambda) + "," + format_double(r.l1_err) + "," +
            format_double(r.l2_err) + "," + std::to_string(r.nonzeros) + "," + (r.converged ? "1" : "0") + "\n";
  }
  rep.tables.emplace_back("replications.csv", reps);

  std::string summary =
      "method,rho,reps,failures,mean_l2,se_l2,mean_l1,se_l1,zero_fraction,mean_lambda,coverage\n";
  for (const auto& c : mc.summary) {
    summary += c.method + "," + format_double(c.rho) + "," + std::to_string(c.reps) + "," +
               std::to_string(c.failures) + "," + format_double(c.mean_l2) + "," + format_double(c.se_l2) + "," +
               format_double(c.mean_l1) + "," + format_double(c.se_l1) + "," + format_double(c.zero_fraction) + "," +
               format_double(c.mean_lambda) + "," + format_double(c.coverage) + "\n";
  }
  rep.tables.emplace_back("summary.csv", summary);

  std::string thresholds = "rho,replication,seed,lambda_max,score_sup\n";
  for (const auto& d : mc.diagnostics) {
    thresholds += format_double(d.rho) + "," + std::to_string(d.replication) + "," + std::to_string(d.seed) + "," +
                  format_double(d.lambda_max) + "," + format_double(d.score_sup) + "\n";
  }
  rep.tables.emplace_back("thresholds.csv", thresholds);

  std::vector<Series> error_series;
  for (const auto& m : design.methods) {
    Series s{m, {}, {}};
    for (double rho : design.rhos) {
      s.x.push_back(rho);
      s.y.push_back(mc.cell(m, rho).mean_l2);
    }
    error_series.push_back(std::move(s));
  }
  rep.figures.emplace_back("error_vs_rho.svg",
                           render_svg_line(error_series, {"Mean l2 estimation error", "rho", "mean l2 error"}));

  for (std::size_t k = 0; k < design.rhos.size(); ++k) {
    const double rho = design.rhos[k];
    std::vector<std::pair<std::string, std::vector<double>>> samples;
    for (const auto& m : design.methods) {
      if (m == "zeros") continue;
      std::vector<double> v;
      for (const auto& r : mc.records) {
        if (r.method == m && r.rho == rho && !r.failed) v.push_back(r.lambda);
      }
      samples.emplace_back(m, std::move(v));
    }
    std::vector<double> thr;
    for (const auto& d : mc.diagnostics) {
      if (d.rho == rho) thr.push_back(d.lambda_max);
    }
    samples.emplace_back("threshold", std::move(thr));
    std::vector<Series> dens_series;
    for (const auto& [name, v] : samples) {
      if (v.size() < 2) continue;
      const DensityEstimate est = kde(v);
      const std::string file = "density_" + name + "_rho" + std::to_string(k) + ".csv";
      std::string csv = "lambda,density\n";
      for (std::size_t g = 0; g < est.grid.size(); ++g) {
        csv += format_double(est.grid[g]) + "," + format_double(est.density[g]) + "\n";
      }
      rep.tables.emplace_back(file, csv);
      if (est.degenerate) {
        rep.warnings.push_back(name + " penalties at rho=" + format_double(rho) + " are constant; density degenerate");
      } else {
        dens_series.push_back(Series{name, est.grid, est.density});
      }
    }
    if (!dens_series.empty()) {
      rep.figures.emplace_back(
          "penalty_density_rho" + std::to_string(k) + ".svg",
          render_svg_line(dens_series, {"Penalty densities, rho = " + format_double(rho), "lambda", "density"}));
    }
  }
  return rep;
}

Report run_command(const RunConfig& cfg) {
  if (cfg.subcommand == "fit") return cmd_fit(cfg);
  if (cfg.subcommand == "select") return cmd_select(cfg);
  if (cfg.subcommand == "simulate") return cmd_simulate(cfg);
  if (cfg.subcommand == "compare") return cmd_compare(cfg);
  throw InputError("unknown subcommand '" + cfg.subcommand + "'");
}

std::string manifest_text(const Report& report, const std::string& subcommand, bool with_timestamp) {
  std::string out = "# l1pen " + std::string(kVersion) + " manifest; rerun with: l1pen " + subcommand +
                    " --config manifest.txt\n";
  if (with_timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out += "# created " + std::string(buf) + "\n";
  }
  for (const auto& [k, v] : report.manifest) {
    if (k == "version") continue;
    out += k + "=\"" + v + "\"\n";
  }
  return out;
}

void write_report(const Report& report, const std::string& subcommand, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  for (const auto& [name, text] : report.tables) write_text((base / name).string(), text);
  for (const auto& [name, text] : report.figures) write_text((base / name).string(), text);
  write_text((base / "manifest.txt").string(), manifest_text(report, subcommand));
}

}  // namespace l1pen
