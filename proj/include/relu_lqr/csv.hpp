#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace relu_lqr {

/// Shortest decimal string that parses back to the same double. NaN and
/// infinities are written as nan, inf, -inf.
std::string format_number(double x);

/// A versioned CSV layout. Every file starts with "# schema: <id>" followed
/// by the column header line.
struct CsvSchema {
  std::string id;  // e.g. "relu_lqr.history/1"
  std::vector<std::string> columns;
};

namespace schemas {
const CsvSchema& history();    // k,K1,K2,J,gap,grad_norm,xi,crossings,g1_mass,g2_mass,cum_grad,safe
const CsvSchema& neurons();    // k,j,w,v
const CsvSchema& snapshot();   // j,w,v
const CsvSchema& sweep();      // one row per (a, b) system
const CsvSchema& init_stats(); // one row per width
const CsvSchema& beta_sweep(); // one row per beta
}  // namespace schemas

/// Writes rows to `<path>.tmp` and renames onto `path` in close(), so readers
/// never observe a partial file. The destructor discards an unclosed file.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const CsvSchema& schema);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  /// Throws InvalidInputError if the field count differs from the schema.
  void row(const std::vector<std::string>& fields);

  void close();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::size_t width_;
  std::ofstream out_;
  bool closed_ = false;
};

struct CsvTable {
  std::string schema_id;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws SchemaMismatchError when absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

/// Reads a file written by CsvWriter. Throws SchemaMismatchError when the
/// schema line or column header differ from `expected`, or a row has the
/// wrong field count.
CsvTable read_csv(const std::filesystem::path& path, const CsvSchema& expected);

/// Parses a number written by format_number.
double parse_number(std::string_view text);

}  // namespace relu_lqr
