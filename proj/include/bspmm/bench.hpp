// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bspmm/engine.hpp"
#include "bspmm/generate.hpp"
#include "json.hpp"

namespace bspmm {

enum class Mode { sequential, batched, both };

std::string_view to_string(Mode m) noexcept;
Mode parse_mode(std::string_view s);

enum class ReportFormat { csv, json };

struct BenchConfig {
  std::size_t batch_size = 100;
  SizeRange dim{50, 50};
  SizeRange nnz_per_row{3, 3};
  std::vector<std::size_t> n_b_values{8, 16, 32, 64, 128, 256, 512};
  std::vector<Algorithm> algorithms{Algorithm::baseline, Algorithm::swa_st, Algorithm::swa_csr};
  Mode mode = Mode::both;
  std::size_t repeats = 10;
  std::uint64_t seed = 42;
  Precision precision = Precision::single;
  std::size_t budget_bytes = kDefaultScratchpadBytes;
  std::size_t threads_per_block = 128;
  std::size_t threads = 0;  // engine workers; 0 = hardware concurrency
  std::vector<std::filesystem::path> inputs;  // MatrixMarket files; override generation
  std::filesystem::path out;                  // empty = stdout
  ReportFormat format = ReportFormat::csv;

  /// Throws UsageError describing the first problem.
  void validate() const;
  bool mixed() const noexcept { return !dim.is_point() || !nnz_per_row.is_point(); }
  std::string dim_spec() const;
  std::string nnz_spec() const;
};

struct BenchRow {
  std::string algorithm;
  std::string mode;
  std::size_t batch_size = 0;
  std::string dim_spec;
  std::string nnz_spec;
  std::size_t n_b = 0;
  std::uint64_t total_nnz = 0;
  double mean_seconds = 0.0;
  double table_seconds = 0.0;  // descriptor-table construction share (batched only)
  double flops = 0.0;
  std::uint64_t launches = 0;
  std::uint64_t work_units = 0;
  std::string blocking_case;
  std::size_t p = 0;
  std::size_t subwarp = 0;
  std::string precision;

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// 2 * nnz * n_B / seconds; 0 when seconds is not positive.
double flops_metric(std::uint64_t total_nnz, std::size_t n_b, double seconds) noexcept;

/// Fixed dim and nnz/row (or MatrixMarket inputs).
BenchReport run_benchmark(const BenchConfig& config);
/// Each item draws dim and nnz/row uniformly from the configured ranges.
BenchReport run_mixed_benchmark(const BenchConfig& config);

/// Plans for each selected algorithm layout at n_b, without executing.
nlohmann::json explain_plan(const BenchConfig& config, std::size_t n_b);

void write_csv(std::ostream& out, const BenchReport& report);
BenchReport read_csv(std::istream& in);
nlohmann::json to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);

/// Writes to config.out (or stdout when empty) in config.format.
void emit_report(const BenchConfig& config, const BenchReport& report);

}  // namespace bspmm
