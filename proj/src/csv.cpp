#include "relu_lqr/csv.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "relu_lqr/errors.hpp"

namespace relu_lqr {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw SchemaMismatchError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace schemas {

const CsvSchema& history() {
  static const CsvSchema s{"relu_lqr.history/1",
                           {"k", "K1", "K2", "J", "gap", "grad_norm", "xi", "crossings",
                            "g1_mass", "g2_mass", "cum_grad", "safe"}};
  return s;
}

const CsvSchema& neurons() {
  static const CsvSchema s{"relu_lqr.neurons/1", {"k", "j", "w", "v"}};
  return s;
}

const CsvSchema& snapshot() {
  static const CsvSchema s{"relu_lqr.snapshot/1", {"j", "w", "v"}};
  return s;
}

const CsvSchema& sweep() {
  static const CsvSchema s{"relu_lqr.sweep/1",
                           {"a", "b", "K_star", "K1", "K2", "gap", "gain_error", "rel_gain_error",
                            "iters", "seed", "status", "message"}};
  return s;
}

const CsvSchema& init_stats() {
  static const CsvSchema s{"relu_lqr.init_stats/1",
                           {"m", "seeds", "freq_stable", "freq_norm", "freq_backbone",
                            "freq_bad_mass", "freq_all", "mean_c1_frac", "mean_c2_frac",
                            "mean_M_w", "mean_M_v"}};
  return s;
}

const CsvSchema& beta_sweep() {
  static const CsvSchema s{"relu_lqr.beta_sweep/1",
                           {"beta", "lambda_star", "B", "tau_w", "Xi_star", "L_star", "C_star",
                            "rho_m", "m0", "benign", "controller_regime"}};
  return s;
}

}  // namespace schemas

CsvWriter::CsvWriter(std::filesystem::path path, const CsvSchema& schema)
    : path_(std::move(path)), tmp_(path_), width_(schema.columns.size()) {
  tmp_ += ".tmp";
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(tmp_, std::ios::out | std::ios::trunc);
  if (!out_) throw InvalidInputError("cannot write " + tmp_.string());
  out_ << "# schema: " << schema.id << '\n';
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    out_ << (i ? "," : "") << schema.columns[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (!closed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw InvalidInputError("CSV row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
  out_ << '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  out_.close();
  if (!out_) throw InvalidInputError("failed writing " + tmp_.string());
  std::filesystem::rename(tmp_, path_);
  closed_ = true;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw SchemaMismatchError("missing column " + std::string(name));
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  return parse_number(rows.at(row).at(column(name)));
}

CsvTable read_csv(const std::filesystem::path& path, const CsvSchema& expected) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot read " + path.string());
  CsvTable table;
  std::string line;
  const std::string prefix = "# schema: ";
  if (!std::getline(in, line) || line.rfind(prefix, 0) != 0) {
    throw SchemaMismatchError(path.string() + ": missing schema line");
  }
  table.schema_id = line.substr(prefix.size());
  if (table.schema_id != expected.id) {
    throw SchemaMismatchError(path.string() + ": schema " + table.schema_id + ", expected " +
                              expected.id);
  }
  if (!std::getline(in, line)) throw SchemaMismatchError(path.string() + ": missing header");
  table.columns = split(line);
  if (table.columns != expected.columns) {
    throw SchemaMismatchError(path.string() + ": column header differs from " + expected.id);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != table.columns.size()) {
      throw SchemaMismatchError(path.string() + ": row with " + std::to_string(fields.size()) +
                                " fields");
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace relu_lqr
