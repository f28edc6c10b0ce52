// SPDX-License-Identifier: Apache-2.0
#include "bspmm/matrix_market.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "bspmm/errors.hpp"

namespace bspmm {

namespace {

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool blank(const std::string& line) {
  return std::ranges::all_of(line, [](unsigned char c) { return std::isspace(c); });
}

template <typename F>
std::string shortest(F v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

template <typename F>
bool parse_real(const std::string& token, F& out) {
  const char* first = token.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, token.data() + token.size(), out);
  return res.ec == std::errc{} && res.ptr == token.data() + token.size();
}

}  // namespace

std::string format_real(double v) { return shortest(v); }
std::string format_real(float v) { return shortest(v); }

template <typename T>
SparseTensorMatrix<T> read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++line_no;
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry, extra;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError(line_no, "missing %%MatrixMarket banner");
    if (lower(object) != "matrix" || lower(format) != "coordinate") {
      throw ParseError(line_no, "only 'matrix coordinate' files are supported");
    }
    if (lower(field) != "real" && lower(field) != "integer") {
      throw ParseError(line_no, "unsupported field '" + field + "'");
    }
    if (lower(symmetry) != "general") {
      throw ParseError(line_no, "unsupported symmetry '" + symmetry + "'");
    }
    if (hs >> extra) throw ParseError(line_no, "trailing text in header");
  }

  std::size_t rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with('%') || blank(line)) continue;
    std::istringstream ss(line);
    std::string extra;
    long long r = -1, c = -1, n = -1;
    if (!(ss >> r >> c >> n) || (ss >> extra) || r < 0 || c < 0 || n < 0) {
      throw ParseError(line_no, "malformed size line");
    }
    rows = static_cast<std::size_t>(r);
    cols = static_cast<std::size_t>(c);
    nnz = static_cast<std::size_t>(n);
    have_size = true;
    break;
  }
  if (!have_size) throw ParseError(line_no + 1, "missing size line");
  if (nnz > rows * cols) throw ParseError(line_no, "more entries than matrix cells");

  std::vector<index_t> ids;
  std::vector<T> values;
  ids.reserve(2 * nnz);
  values.reserve(nnz);
  std::unordered_map<std::uint64_t, std::size_t> seen;
  seen.reserve(nnz);

  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with('%') || blank(line)) continue;
    if (values.size() == nnz) throw ParseError(line_no, "more entries than declared");
    std::istringstream ss(line);
    std::string extra;
    long long i = 0, j = 0;
    std::string token;
    T v{};
    if (!(ss >> i >> j >> token) || (ss >> extra) || !parse_real(token, v)) {
      throw ParseError(line_no, "malformed entry");
    }
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > rows || static_cast<std::size_t>(j) > cols) {
      throw ParseError(line_no, "index (" + std::to_string(i) + ", " + std::to_string(j) +
                                    ") out of range");
    }
    const auto r = static_cast<index_t>(i - 1);
    const auto c = static_cast<index_t>(j - 1);
    const std::uint64_t key = (std::uint64_t{r} << 32) | c;
    if (auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      throw ParseError(line_no, "duplicate entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                    "), first seen on line " + std::to_string(it->second));
    }
    ids.push_back(r);
    ids.push_back(c);
    values.push_back(v);
  }
  if (values.size() != nnz) {
    throw ParseError(line_no, "expected " + std::to_string(nnz) + " entries, found " +
                                  std::to_string(values.size()));
  }
  return SparseTensorMatrix<T>(rows, cols, std::move(ids), std::move(values));
}

template <typename T>
SparseTensorMatrix<T> load_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_matrix_market<T>(in);
}

template <typename T>
void write_matrix_market(std::ostream& out, const SparseTensorMatrix<T>& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    out << a.row_of(k) + 1 << ' ' << a.col_of(k) + 1 << ' ' << format_real(a.values()[k]) << '\n';
  }
}

template <typename T>
void save_matrix_market(const std::filesystem::path& path, const SparseTensorMatrix<T>& a) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_matrix_market(out, a);
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
nlohmann::json to_json(const SparseTensorMatrix<T>& a) {
  nlohmann::json triples = nlohmann::json::array();
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    triples.push_back({a.row_of(k), a.col_of(k), a.values()[k]});
  }
  return {{"rows", a.rows()}, {"cols", a.cols()}, {"triples", std::move(triples)}};
}

template SparseTensorMatrix<float> read_matrix_market<float>(std::istream&);
template SparseTensorMatrix<double> read_matrix_market<double>(std::istream&);
template SparseTensorMatrix<float> load_matrix_market<float>(const std::filesystem::path&);
template SparseTensorMatrix<double> load_matrix_market<double>(const std::filesystem::path&);
template void write_matrix_market<float>(std::ostream&, const SparseTensorMatrix<float>&);
template void write_matrix_market<double>(std::ostream&, const SparseTensorMatrix<double>&);
template void save_matrix_market<float>(const std::filesystem::path&, const SparseTensorMatrix<float>&);
template void save_matrix_market<double>(const std::filesystem::path&, const SparseTensorMatrix<double>&);
template nlohmann::json to_json<float>(const SparseTensorMatrix<float>&);
template nlohmann::json to_json<double>(const SparseTensorMatrix<double>&);

}  // namespace bspmm
