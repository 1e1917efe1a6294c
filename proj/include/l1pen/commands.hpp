#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l1pen/penalty.hpp"

namespace l1pen {

inline constexpr const char* kVersion = "1.0.0";

/// One field per command-line flag; names match the long flags.
struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output_dir = "out";
  std::string loss = "logit";
  std::string loss_params;
  std::optional<std::string> method;
  std::optional<double> lambda;
  double c0 = 1.1;
  std::optional<double> alpha;  // unset: 10/n
  int folds = 10;
  std::string fold_scheme = "even";
  std::size_t grid_size = 100;
  double grid_ratio = 1e-4;
  std::optional<int> boot_draws;  // unset: 1000, or 500 for simulate
  int reps = 200;
  std::string rho_grid = "0,0.3,0.6";
  std::string pattern = "sparse";
  std::uint64_t seed = 0;
  int workers = 1;
  Index n = 100;
  Index p = 100;
  std::string methods;  // comma list; empty means the subcommand default
  double kkt_tol = 1e-6;
  int max_iter = 10000;
};

using NamedText = std::pair<std::string, std::string>;

struct Report {
  std::vector<NamedText> tables;    // file name, CSV text
  std::vector<NamedText> figures;   // file name, SVG text
  std::vector<NamedText> manifest;  // flag name, value
  std::vector<std::string> warnings;
  int exit_code = 0;  // 0, or 4 when a reported fit did not converge
};

Report cmd_fit(const RunConfig& cfg);
Report cmd_select(const RunConfig& cfg);
Report cmd_simulate(const RunConfig& cfg);
Report cmd_compare(const RunConfig& cfg);
Report run_command(const RunConfig& cfg);

/// key=value lines loadable as a config file, preceded by comment lines
/// holding the subcommand, version and creation time.
std::string manifest_text(const Report& report, const std::string& subcommand, bool with_timestamp = true);
/// Writes tables, figures and manifest.txt into `dir`, creating it.
void write_report(const Report& report, const std::string& subcommand, const std::string& dir);

std::vector<double> parse_number_list(const std::string& text);
std::vector<std::string> parse_name_list(const std::string& text);

}  // namespace l1pen
