#include "l1pen/csv_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "l1pen/errors.hpp"

namespace l1pen {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<int>(c);
  }
  return -1;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!have_header) {
      for (auto c : cells) {
        if (c.empty()) throw ParseError(line_no, "empty column name");
        table.header.emplace_back(c);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                    std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = cells[c];
      const auto* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, row[c]);
      if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(row[c])) {
        throw ParseError(line_no, "non-numeric or non-finite value '" + std::string(cell) + "' in column '" +
                                      table.header[c] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(1, "missing header row");
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(slurp(path)); }

namespace {

int require_column(const CsvTable& t, const std::string& name) {
  const int c = t.column(name);
  if (c < 0) throw InputError("missing column '" + name + "'");
  return c;
}

// Columns prefix1..prefixK for the largest contiguous K >= 1.
std::vector<int> numbered_columns(const CsvTable& t, const std::string& prefix) {
  std::vector<int> cols;
  for (int j = 1;; ++j) {
    const int c = t.column(prefix + std::to_string(j));
    if (c < 0) break;
    cols.push_back(c);
  }
  return cols;
}

MatrixXd gather(const CsvTable& t, const std::vector<int>& cols) {
  MatrixXd M(static_cast<Index>(t.rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) M(static_cast<Index>(i), static_cast<Index>(c)) = t.rows[i][cols[c]];
  }
  return M;
}

std::vector<int> outcome_columns(const CsvTable& t, std::size_t arity) {
  if (arity == 1) return {require_column(t, "y")};
  return {require_column(t, "y1"), require_column(t, "y2")};
}

void check_all_used(const CsvTable& t, std::size_t used) {
  if (used != t.header.size()) throw InputError("unexpected extra columns in the header");
}

}  // namespace

Dataset dataset_from_table(const CsvTable& table, const LossModel& model) {
  if (model.is_multi_index()) throw InputError("multi-index losses use the multi-index CSV layout");
  const auto ycols = outcome_columns(table, model.outcome_arity());
  const auto xcols = numbered_columns(table, "x");
  check_all_used(table, ycols.size() + xcols.size());
  return make_dataset(gather(table, xcols), gather(table, ycols), model);
}

Dataset load_csv(const std::string& path, const LossModel& model) { return dataset_from_table(read_csv(path), model); }

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  const Index ny = data.Y.cols();
  if (ny == 1) {
    out += "y";
  } else {
    for (Index c = 0; c < ny; ++c) out += (c ? ",y" : "y") + std::to_string(c + 1);
  }
  for (Index j = 0; j < data.p(); ++j) out += ",x" + std::to_string(j + 1);
  out += '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index c = 0; c < ny; ++c) {
      if (c) out += ',';
      out += format_double(data.Y(i, c));
    }
    for (Index j = 0; j < data.p(); ++j) out += ',' + format_double(data.X(i, j));
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

void write_csv(const std::string& path, const Dataset& data) { write_text(path, dataset_to_csv(data)); }

MultiIndexDataset multi_from_table(const CsvTable& table, const LossModel& model) {
  if (!model.is_multi_index()) throw InputError("loss is not multi-index");
  const int J = model.family().params.alternatives;
  MultiIndexDataset out;
  const int yc = require_column(table, "y");
  out.Y = gather(table, {yc});
  std::size_t used = 1;
  auto varying = [&](int first_alt) {
    for (int l = first_alt; l <= J; ++l) {
      const auto cols = numbered_columns(table, "v" + std::to_string(l) + "_");
      if (cols.empty()) throw InputError("missing columns v" + std::to_string(l) + "_1..");
      if (!out.data.V.empty() && static_cast<Index>(cols.size()) != out.data.V.front().cols()) {
        throw InputError("alternative-varying blocks must have equal widths");
      }
      out.data.V.push_back(gather(table, cols));
      used += cols.size();
    }
  };
  switch (model.kind()) {
    case LossKind::mnl: {
      const auto cols = numbered_columns(table, "x");
      out.data.Z = gather(table, cols);
      out.data.L1 = static_cast<std::size_t>(J);
      used += cols.size();
      break;
    }
    case LossKind::clogit:
      out.data.Z = MatrixXd(static_cast<Index>(table.rows.size()), 0);
      varying(1);
      break;
    default: {
      const auto cols = numbered_columns(table, "z");
      out.data.Z = gather(table, cols);
      out.data.L1 = static_cast<std::size_t>(J);
      used += cols.size();
      varying(0);
      break;
    }
  }
  check_all_used(table, used);
  validate_multi(out.data);
  if (out.data.n() < 3) throw InputError("dataset needs n >= 3 observations");
  for (Index i = 0; i < out.Y.rows(); ++i) {
    const double y = out.Y(i, 0);
    model.validate_outcome(std::span<const double>(&y, 1));
  }
  return out;
}

MultiIndexDataset load_multi_csv(const std::string& path, const LossModel& model) {
  return multi_from_table(read_csv(path), model);
}

}  // namespace l1pen
