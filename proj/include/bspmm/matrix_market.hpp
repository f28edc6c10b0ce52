// SPDX-License-Identifier: Apache-2.0
#pragma once

// MatrixMarket coordinate I/O (real/integer, general) and a JSON debug dump.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "bspmm/matrix.hpp"
#include "json.hpp"

namespace bspmm {

/// Parses a coordinate MatrixMarket stream; indices become 0-based.
/// Throws ParseError (with line number) on malformed headers, out-of-range
/// indices, duplicate coordinates, or an entry count that disagrees with the
/// size line.
template <typename T = float>
SparseTensorMatrix<T> read_matrix_market(std::istream& in);

template <typename T = float>
SparseTensorMatrix<T> load_matrix_market(const std::filesystem::path& path);

/// Entries are written in storage order with shortest round-trip values.
template <typename T>
void write_matrix_market(std::ostream& out, const SparseTensorMatrix<T>& a);

template <typename T>
void save_matrix_market(const std::filesystem::path& path, const SparseTensorMatrix<T>& a);

/// {"rows": m, "cols": n, "triples": [[row, col, value], ...]}
template <typename T>
nlohmann::json to_json(const SparseTensorMatrix<T>& a);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);
std::string format_real(float v);

}  // namespace bspmm
