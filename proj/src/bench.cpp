// SPDX-License-Identifier: Apache-2.0
#include "bspmm/bench.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bspmm/convert.hpp"
#include "bspmm/matrix_market.hpp"

namespace bspmm {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::sequential: return "sequential";
    case Mode::batched: return "batched";
    case Mode::both: return "both";
  }
  return "unknown";
}

Mode parse_mode(std::string_view s) {
  if (s == "sequential") return Mode::sequential;
  if (s == "batched") return Mode::batched;
  if (s == "both") return Mode::both;
  throw UsageError("unknown mode '" + std::string(s) + "'");
}

namespace {

std::string range_spec(SizeRange r) {
  return r.is_point() ? std::to_string(r.min) : std::to_string(r.min) + ":" + std::to_string(r.max);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string_view precision_name(Precision p) { return p == Precision::single ? "f32" : "f64"; }

template <typename T>
std::vector<SparseTensorMatrix<T>> make_items(const BenchConfig& c) {
  if (!c.inputs.empty()) {
    std::vector<SparseTensorMatrix<T>> items;
    for (const auto& path : c.inputs) items.push_back(load_matrix_market<T>(path));
    return items;
  }
  return random_mixed_batch<T>(c.batch_size, c.dim, c.nnz_per_row, c.seed);
}

struct Context {
  const BenchConfig& config;
  BatchEngine& engine;
  std::string dim_spec;
  std::string nnz_spec;
  std::uint64_t total_nnz;
  BenchReport& report;
};

template <typename M>
void measure(Context& ctx, const std::vector<M>& items,
             DenseView<const typename M::value_type> stacked, Algorithm algorithm,
             std::size_t n_b) {
  const BenchConfig& cfg = ctx.config;
  BatchEngine& engine = ctx.engine;
  auto req = request_from_stacked(make_batch(std::span<const M>(items), n_b), stacked, algorithm);

  BenchRow base;
  base.algorithm = to_string(algorithm);
  base.batch_size = items.size();
  base.dim_spec = ctx.dim_spec;
  base.nnz_spec = ctx.nnz_spec;
  base.n_b = n_b;
  base.total_nnz = ctx.total_nnz;
  base.subwarp = compute_subwarp(n_b).width();
  base.precision = precision_name(precision_of<typename M::value_type>);

  if (cfg.mode != Mode::batched) {
    BenchRow row = base;
    row.mode = "sequential";
    engine.counter().reset();
    (void)engine.sequential_spmm(req);  // warm-up, also yields the per-run counts
    row.launches = engine.counter().launches();
    row.work_units = engine.counter().work_units();
    const auto t0 = Clock::now();
    for (std::size_t r = 0; r < cfg.repeats; ++r) (void)engine.sequential_spmm(req);
    row.mean_seconds = seconds_since(t0) / static_cast<double>(cfg.repeats);
    row.flops = flops_metric(row.total_nnz, n_b, row.mean_seconds);
    row.blocking_case = "sequential";
    row.p = 1;
    ctx.report.rows.push_back(std::move(row));
  }

  if (cfg.mode != Mode::sequential) {
    BenchRow row = base;
    row.mode = "batched";
    const LaunchPlan plan =
        plan_batch(plan_input_for(req, cfg.budget_bytes, cfg.threads_per_block));
    engine.counter().reset();
    (void)engine.batched_spmm(req, plan, copy_pointer_table(req));
    row.launches = engine.counter().launches();
    row.work_units = engine.counter().work_units();

    auto t0 = Clock::now();
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const auto table = copy_pointer_table(req);
      (void)engine.batched_spmm(req, plan, table);
    }
    row.mean_seconds = seconds_since(t0) / static_cast<double>(cfg.repeats);

    std::size_t sink = 0;
    t0 = Clock::now();
    for (std::size_t r = 0; r < cfg.repeats; ++r) sink += copy_pointer_table(req).size();
    row.table_seconds = seconds_since(t0) / static_cast<double>(cfg.repeats);
    if (sink != cfg.repeats * items.size()) throw InternalError("pointer table size mismatch");

    row.flops = flops_metric(row.total_nnz, n_b, row.mean_seconds);
    row.blocking_case = to_string(plan.blocking);
    row.p = plan.p;
    row.subwarp = plan.subwarp.width();
    ctx.report.rows.push_back(std::move(row));
  }
}

template <typename T>
BenchReport run_typed(const BenchConfig& cfg) {
  const auto items = make_items<T>(cfg);
  std::vector<CsrMatrix<T>> csr;
  const bool wants_csr = std::ranges::find(cfg.algorithms, Algorithm::swa_csr) != cfg.algorithms.end();
  if (wants_csr) {
    csr.reserve(items.size());
    for (const auto& a : items) csr.push_back(coo_to_csr(a));
  }
  std::uint64_t total_nnz = 0;
  std::size_t stacked_rows = 0;
  for (const auto& a : items) {
    total_nnz += a.nnz();
    stacked_rows += a.cols();
  }

  BenchReport report;
  BatchEngine engine(EngineOptions{cfg.threads, false, KernelPath::vectorized});
  Context ctx{cfg,
              engine,
              cfg.inputs.empty() ? cfg.dim_spec() : "file",
              cfg.inputs.empty() ? cfg.nnz_spec() : "file",
              total_nnz,
              report};
  for (Algorithm algorithm : cfg.algorithms) {
    for (std::size_t n_b : cfg.n_b_values) {
      const auto stacked = random_dense<T>(stacked_rows, n_b, cfg.seed ^ (0x9e3779b97f4a7c15ULL * n_b));
      if (algorithm == Algorithm::swa_csr) {
        measure(ctx, csr, stacked.cview(), algorithm, n_b);
      } else {
        measure(ctx, items, stacked.cview(), algorithm, n_b);
      }
    }
  }
  return report;
}

BenchReport run_any(const BenchConfig& cfg) {
  cfg.validate();
  return cfg.precision == Precision::single ? run_typed<float>(cfg) : run_typed<double>(cfg);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename N>
N parse_number(const std::string& s, std::size_t line) {
  N v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "bad numeric field '" + s + "'");
  }
  return v;
}

constexpr const char* kCsvHeader =
    "algorithm,mode,batch_size,dim_spec,nnz_spec,n_b,total_nnz,mean_seconds,table_seconds,flops,"
    "launches,work_units,case,p,subwarp,precision";

}  // namespace

void BenchConfig::validate() const {
  if (inputs.empty()) {
    if (batch_size == 0) throw UsageError("--batch-size must be >= 1");
    if (dim.min == 0 || dim.min > dim.max) throw UsageError("--dim must be N or MIN:MAX with 1 <= MIN <= MAX");
    if (nnz_per_row.min > nnz_per_row.max) throw UsageError("--nnz-per-row range is empty");
    if (nnz_per_row.min > dim.min) throw UsageError("--nnz-per-row exceeds --dim");
  }
  if (repeats == 0) throw UsageError("--repeats must be >= 1");
  if (n_b_values.empty()) throw UsageError("--nb needs at least one value");
  for (std::size_t nb : n_b_values) {
    if (nb == 0) throw UsageError("--nb values must be >= 1");
  }
  if (algorithms.empty()) throw UsageError("at least one --algo is required");
  if (budget_bytes == 0) throw UsageError("--budget-bytes must be >= 1");
  if (threads_per_block == 0 || threads_per_block % 32 != 0) {
    throw UsageError("--threads-per-block must be a positive multiple of 32");
  }
}

std::string BenchConfig::dim_spec() const { return range_spec(dim); }
std::string BenchConfig::nnz_spec() const { return range_spec(nnz_per_row); }

double flops_metric(std::uint64_t total_nnz, std::size_t n_b, double seconds) noexcept {
  if (!(seconds > 0.0)) return 0.0;
  return 2.0 * static_cast<double>(total_nnz) * static_cast<double>(n_b) / seconds;
}

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.inputs.empty() && config.mixed()) {
    throw UsageError("ranged --dim/--nnz-per-row need the mixed benchmark");
  }
  return run_any(config);
}

BenchReport run_mixed_benchmark(const BenchConfig& config) { return run_any(config); }

nlohmann::json explain_plan(const BenchConfig& config, std::size_t n_b) {
  config.validate();
  std::vector<std::size_t> rows;
  if (!config.inputs.empty()) {
    for (const auto& path : config.inputs) rows.push_back(load_matrix_market<double>(path).rows());
  } else {
    // Shapes depend only on the seed, not on the value type.
    for (const auto& a : random_mixed_batch<float>(config.batch_size, config.dim,
                                                   config.nnz_per_row, config.seed)) {
      rows.push_back(a.rows());
    }
  }
  nlohmann::json out = nlohmann::json::array();
  for (Algorithm algorithm : config.algorithms) {
    const PlanInput input{layout_of(algorithm), rows, n_b,
                          config.precision == Precision::single ? 4u : 8u, config.budget_bytes,
                          config.threads_per_block};
    out.push_back({{"algorithm", to_string(algorithm)}, {"n_b", n_b}, {"plan", plan_to_json(plan_batch(input))}});
  }
  return out;
}

void write_csv(std::ostream& out, const BenchReport& report) {
  out << kCsvHeader << '\n';
  for (const BenchRow& r : report.rows) {
    out << r.algorithm << ',' << r.mode << ',' << r.batch_size << ',' << r.dim_spec << ','
        << r.nnz_spec << ',' << r.n_b << ',' << r.total_nnz << ',' << format_real(r.mean_seconds)
        << ',' << format_real(r.table_seconds) << ',' << format_real(r.flops) << ','
        << r.launches << ',' << r.work_units << ',' << r.blocking_case << ',' << r.p << ','
        << r.subwarp << ',' << r.precision << '\n';
  }
}

BenchReport read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError(1, "unexpected CSV header");
  BenchReport report;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16) throw ParseError(line_no, "expected 16 fields");
    BenchRow r;
    r.algorithm = f[0];
    r.mode = f[1];
    r.batch_size = parse_number<std::size_t>(f[2], line_no);
    r.dim_spec = f[3];
    r.nnz_spec = f[4];
    r.n_b = parse_number<std::size_t>(f[5], line_no);
    r.total_nnz = parse_number<std::uint64_t>(f[6], line_no);
    r.mean_seconds = parse_number<double>(f[7], line_no);
    r.table_seconds = parse_number<double>(f[8], line_no);
    r.flops = parse_number<double>(f[9], line_no);
    r.launches = parse_number<std::uint64_t>(f[10], line_no);
    r.work_units = parse_number<std::uint64_t>(f[11], line_no);
    r.blocking_case = f[12];
    r.p = parse_number<std::size_t>(f[13], line_no);
    r.subwarp = parse_number<std::size_t>(f[14], line_no);
    r.precision = f[15];
    report.rows.push_back(std::move(r));
  }
  return report;
}

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow& r : report.rows) {
    rows.push_back({{"algorithm", r.algorithm},     {"mode", r.mode},
                    {"batch_size", r.batch_size},   {"dim_spec", r.dim_spec},
                    {"nnz_spec", r.nnz_spec},       {"n_b", r.n_b},
                    {"total_nnz", r.total_nnz},     {"mean_seconds", r.mean_seconds},
                    {"table_seconds", r.table_seconds}, {"flops", r.flops},
                    {"launches", r.launches},       {"work_units", r.work_units},
                    {"case", r.blocking_case},      {"p", r.p},
                    {"subwarp", r.subwarp},         {"precision", r.precision}});
  }
  return {{"rows", std::move(rows)}};
}

BenchReport report_from_json(const nlohmann::json& j) {
  BenchReport report;
  for (const auto& o : j.at("rows")) {
    BenchRow r;
    o.at("algorithm").get_to(r.algorithm);
    o.at("mode").get_to(r.mode);
    o.at("batch_size").get_to(r.batch_size);
    o.at("dim_spec").get_to(r.dim_spec);
    o.at("nnz_spec").get_to(r.nnz_spec);
    o.at("n_b").get_to(r.n_b);
    o.at("total_nnz").get_to(r.total_nnz);
    o.at("mean_seconds").get_to(r.mean_seconds);
    o.at("table_seconds").get_to(r.table_seconds);
    o.at("flops").get_to(r.flops);
    o.at("launches").get_to(r.launches);
    o.at("work_units").get_to(r.work_units);
    o.at("case").get_to(r.blocking_case);
    o.at("p").get_to(r.p);
    o.at("subwarp").get_to(r.subwarp);
    o.at("precision").get_to(r.precision);
    report.rows.push_back(std::move(r));
  }
  return report;
}

void emit_report(const BenchConfig& config, const BenchReport& report) {
  auto write = [&](std::ostream& os) {
    if (config.format == ReportFormat::csv) {
      write_csv(os, report);
    } else {
      os << to_json(report).dump(2) << '\n';
    }
  };
  if (config.out.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(config.out);
  if (!os) throw IoError("cannot write " + config.out.string());
  write(os);
  if (!os) throw IoError("write failed for " + config.out.string());
}

}  // namespace bspmm
