#include "output.hpp"

#include "json.hpp"
#include "stokesheat/error.hpp"
#include "stokesheat/format.hpp"
#include "stokesheat/hilbert_ops.hpp"

namespace stokesheat::cli {

namespace {

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return fmt17(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

std::string json_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return json_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return nlohmann::json(std::get<std::string>(c)).dump();
}

}  // namespace

void Table::add(std::vector<Cell> row) {
  require(row.size() == columns.size(), "table " + name + ": row width mismatch");
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::string s = "# stokesheat " + name + " v" + std::to_string(version) + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
  s += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + csv_cell(r[i]);
    s += "\n";
  }
  return s;
}

std::string Table::json() const {
  std::string s = "{\n  \"kind\": \"stokesheat." + name + "\",\n  \"version\": " +
                  std::to_string(version) + ",\n  \"columns\": [";
  for (std::size_t i = 0; i < columns.size(); ++i)
    s += (i ? ", " : "") + nlohmann::json(columns[i]).dump();
  s += "],\n  \"rows\": [";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s += r ? ",\n    [" : "\n    [";
    for (std::size_t i = 0; i < rows[r].size(); ++i) s += (i ? ", " : "") + json_cell(rows[r][i]);
    s += "]";
  }
  s += rows.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return s;
}

std::filesystem::path emit_text(const std::string& filename,
                                const std::string& content,
                                const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.io.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::configuration, "io.out_dir: cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / filename;
  write_atomic(path, content);
  return path;
}

std::filesystem::path emit(const Table& table, const RunConfig& cfg) {
  const bool csv = cfg.io.format == OutputFormat::csv;
  return emit_text(table.name + (csv ? ".csv" : ".json"), csv ? table.csv() : table.json(), cfg);
}

}  // namespace stokesheat::cli
