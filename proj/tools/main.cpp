#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "l1pen/commands.hpp"
#include "l1pen/errors.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

void add_shared_flags(CLI::App& app, l1pen::RunConfig& cfg) {
  app.add_option("--input", cfg.input, "CSV with header y (or y1,y2) and x1..xp");
  app.add_option("--output-dir", cfg.output_dir, "Directory for tables, figures and manifest")->capture_default_str();
  app.add_option("--loss", cfg.loss, "Loss family identifier")->capture_default_str();
  app.add_option("--loss-params", cfg.loss_params, "Family parameters as key=value pairs, e.g. cutoffs=-1:1");
  app.add_option("--method", cfg.method, "Penalty method: am, bam, bcv, cv, vdg16, threshold");
  app.add_option("--lambda", cfg.lambda, "Fixed penalty level for fit");
  app.add_option("--c0", cfg.c0, "Penalty scaling constant")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "Probability tolerance (default 10/n)");
  app.add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--fold-scheme", cfg.fold_scheme, "even or seeded_random")->capture_default_str();
  app.add_option("--grid-size", cfg.grid_size, "Candidate penalties in the CV grid")->capture_default_str();
  app.add_option("--grid-ratio", cfg.grid_ratio, "Smallest over largest grid value")->capture_default_str();
  app.add_option("--boot-draws", cfg.boot_draws, "Gaussian multiplier draws (default 1000; 500 for simulate)");
  app.add_option("--reps", cfg.reps, "Monte Carlo replications per rho")->capture_default_str();
  app.add_option("--rho-grid", cfg.rho_grid, "Comma-separated correlation levels")->capture_default_str();
  app.add_option("--pattern", cfg.pattern, "Coefficient pattern: sparse or dense")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Base seed")->capture_default_str();
  app.add_option("--workers", cfg.workers, "Worker threads; results do not depend on it")->capture_default_str();
  app.add_option("--n", cfg.n, "Simulated sample size")->capture_default_str();
  app.add_option("--p", cfg.p, "Simulated number of regressors")->capture_default_str();
  app.add_option("--methods", cfg.methods, "Comma-separated methods for simulate or compare");
  app.add_option("--kkt-tol", cfg.kkt_tol, "Solver KKT tolerance")->capture_default_str();
  app.add_option("--max-iter", cfg.max_iter, "Solver iteration cap")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l1-penalized M-estimation with analytic and bootstrap penalty selection"};
  app.set_version_flag("--version", l1pen::kVersion);
  app.set_config("--config", "", "Flat key=value file; keys are long flag names");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  l1pen::RunConfig cfg;
  add_shared_flags(app, cfg);
  for (const char* name : {"fit", "select", "simulate", "compare"}) {
    app.add_subcommand(name, std::string("Run ") + name)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    const l1pen::Report report = l1pen::run_command(cfg);
    l1pen::write_report(report, cfg.subcommand, cfg.output_dir);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << report.tables.size() + report.figures.size() + 1 << " file(s) to " << cfg.output_dir
              << '\n';
    return report.exit_code;
  } catch (const l1pen::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const l1pen::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
