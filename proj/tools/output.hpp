#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "config.hpp"

namespace stokesheat::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

/// A versioned result table. CSV starts with "# stokesheat <name> v<version>"
/// and a column line; the structured form is a JSON document with the same
/// columns and rows. Floats carry 17 significant digits in both.
struct Table {
  std::string name;
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string csv() const;
  std::string json() const;
};

/// Writes the table atomically to out_dir/<name>.csv or .json and returns
/// the path.
std::filesystem::path emit(const Table& table, const RunConfig& cfg);

/// Atomic write of an already encoded document under out_dir.
std::filesystem::path emit_text(const std::string& filename,
                                const std::string& content,
                                const RunConfig& cfg);

}  // namespace stokesheat::cli
