#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "l1pen/design.hpp"

namespace l1pen {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// A numeric CSV: one header row, then rows of finite numbers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position of `name`, or -1.
  int column(std::string_view name) const;
};

/// Throws ParseError (with the 1-based line) on malformed or non-finite cells.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::string& path);

/// Dataset from a header naming y (or y1,y2) and x1..xp. The outcome columns
/// are checked against the loss support.
Dataset load_csv(const std::string& path, const LossModel& model);
Dataset dataset_from_table(const CsvTable& table, const LossModel& model);

std::string dataset_to_csv(const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);
void write_text(const std::string& path, const std::string& text);

/// Multi-index layouts: mnl reads x1..xp as the common regressors; clogit
/// reads v{l}_{j} for l = 1..J; mixed_logit reads z1..zp1 and v{l}_{j} for
/// l = 0..J.
struct MultiIndexDataset {
  MultiIndexData data;
  MatrixXd Y;
};

MultiIndexDataset multi_from_table(const CsvTable& table, const LossModel& model);
MultiIndexDataset load_multi_csv(const std::string& path, const LossModel& model);

}  // namespace l1pen
