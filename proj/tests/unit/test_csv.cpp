#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "relu_lqr/csv.hpp"
#include "relu_lqr/errors.hpp"

namespace relu_lqr {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "relu_lqr_unit";
  fs::create_directories(dir);
  return dir / name;
}

TEST(FormatNumber, RoundTripsExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> exponent(-300, 300);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::pow(10.0, exponent(rng)) * (i % 2 ? -1.0 : 1.0);
    EXPECT_EQ(parse_number(format_number(x)), x);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_TRUE(std::isnan(parse_number("nan")));
  EXPECT_EQ(parse_number("-inf"), -std::numeric_limits<double>::infinity());
}

TEST(CsvWriter, WritesSchemaHeaderAndReadsBack) {
  const fs::path path = scratch("snapshot.csv");
  {
    CsvWriter out(path, schemas::snapshot());
    out.row({"0", "0.5", "-1.25"});
    out.row({"1", format_number(1e-300), "nan"});
    out.close();
  }
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# schema: relu_lqr.snapshot/1");
  const CsvTable table = read_csv(path, schemas::snapshot());
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.number(0, "v"), -1.25);
  EXPECT_EQ(table.number(1, "w"), 1e-300);
  EXPECT_TRUE(std::isnan(table.number(1, "v")));
  EXPECT_THROW(table.column("K1"), SchemaMismatchError);
}

TEST(CsvWriter, RejectsWrongFieldCount) {
  CsvWriter out(scratch("bad_row.csv"), schemas::neurons());
  EXPECT_THROW(out.row({"1", "2"}), InvalidInputError);
}

TEST(CsvWriter, UnclosedFileLeavesNoOutput) {
  const fs::path path = scratch("unclosed.csv");
  fs::remove(path);
  {
    CsvWriter out(path, schemas::neurons());
    out.row({"0", "0", "1", "2"});
  }
  EXPECT_FALSE(fs::exists(path));
}

TEST(ReadCsv, SchemaMismatchIsReported) {
  const fs::path path = scratch("mismatch.csv");
  {
    CsvWriter out(path, schemas::neurons());
    out.close();
  }
  EXPECT_THROW(read_csv(path, schemas::history()), SchemaMismatchError);
  std::ofstream(scratch("no_schema.csv")) << "j,w,v\n0,1,2\n";
  EXPECT_THROW(read_csv(scratch("no_schema.csv"), schemas::snapshot()), SchemaMismatchError);
}

TEST(Schemas, HistoryColumnsAreStable) {
  EXPECT_EQ(schemas::history().id, "relu_lqr.history/1");
  EXPECT_EQ(schemas::history().columns,
            (std::vector<std::string>{"k", "K1", "K2", "J", "gap", "grad_norm", "xi", "crossings",
                                      "g1_mass", "g2_mass", "cum_grad", "safe"}));
}

}  // namespace
}  // namespace relu_lqr
