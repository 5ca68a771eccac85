#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stokesheat/error.hpp"
#include "stokesheat/hilbert_ops.hpp"

namespace stokesheat {

namespace {

using nlohmann::json;

// Floats travel as C99 hex literals, which round-trip binary64 exactly.
std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const json& j, const char* what) {
  if (!j.is_string())
    fail(ErrorKind::malformed_file, std::string("basis file: ") + what +
                                        " is not a hex-float string");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    fail(ErrorKind::malformed_file,
         std::string("basis file: bad number in ") + what + ": '" + s + "'");
  return v;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    fail(ErrorKind::malformed_file,
         std::string("basis file: missing key '") + key + "'");
  return obj.at(key);
}

int as_int(const json& j, const char* what) {
  if (!j.is_number_integer())
    fail(ErrorKind::malformed_file,
         std::string("basis file: ") + what + " is not an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const char* what) {
  if (!j.is_string())
    fail(ErrorKind::malformed_file,
         std::string("basis file: ") + what + " is not a string");
  return j.get<std::string>();
}

}  // namespace

void write_atomic(const std::filesystem::path& path,
                  const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::configuration, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::configuration, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(ErrorKind::configuration,
         "cannot move " + tmp.string() + " to " + path.string());
}

void save_basis(const EigenBasis& basis, const std::filesystem::path& path) {
  const auto& md = basis.metadata;
  json doc;
  doc["schema_version"] = kBasisSchemaVersion;
  doc["kind"] = "stokesheat.eigenbasis";
  doc["cutoff"] = hex(basis.cutoff);
  doc["k_range"] = basis.k_range;
  doc["metadata"] = {
      {"lambda_max", hex(md.lambda_max)},
      {"k_max", md.k_max},
      {"quad_panels", md.quad_panels},
      {"build_timestamp", md.build_timestamp},
      {"tolerances",
       {{"degeneracy", hex(md.tolerances.degeneracy)},
        {"scan_density", hex(md.tolerances.scan_density)},
        {"root_tol", hex(md.tolerances.root_tol)},
        {"residual_gate", hex(md.tolerances.residual_gate)},
        {"multiplicity_gate", hex(md.tolerances.multiplicity_gate)},
        {"quad_nodes", md.tolerances.quad_nodes}}},
  };
  json modes = json::array();
  for (const auto& m : basis.modes) {
    json c = json::array();
    for (double v : m.profile.c) c.push_back(hex(v));
    modes.push_back({{"k", m.k},
                     {"n", m.n},
                     {"phase", to_string(m.phase)},
                     {"lambda", hex(m.lambda)},
                     {"branch", to_string(m.profile.branch)},
                     {"c", c},
                     {"norm_factor", hex(m.profile.norm_factor)},
                     {"eta_trace", hex(m.eta_trace)},
                     {"amplitude", hex(m.amplitude)}});
  }
  doc["modes"] = std::move(modes);
  write_atomic(path, doc.dump(1) + "\n");
}

EigenBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::malformed_file, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();

  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception& e) {
    fail(ErrorKind::malformed_file,
         "basis file " + path.string() + " is not valid JSON: " + e.what());
  }
  const int version = as_int(field(doc, "schema_version"), "schema_version");
  if (version != kBasisSchemaVersion)
    fail(ErrorKind::version_mismatch,
         "basis file schema_version " + std::to_string(version) +
             ", expected " + std::to_string(kBasisSchemaVersion));
  if (as_string(field(doc, "kind"), "kind") != "stokesheat.eigenbasis")
    fail(ErrorKind::malformed_file, "basis file: wrong document kind");

  EigenBasis b;
  b.cutoff = unhex(field(doc, "cutoff"), "cutoff");
  b.k_range = as_int(field(doc, "k_range"), "k_range");
  const json& md = field(doc, "metadata");
  b.metadata.schema_version = version;
  b.metadata.lambda_max = unhex(field(md, "lambda_max"), "lambda_max");
  b.metadata.k_max = as_int(field(md, "k_max"), "k_max");
  b.metadata.quad_panels = as_int(field(md, "quad_panels"), "quad_panels");
  b.metadata.build_timestamp =
      as_string(field(md, "build_timestamp"), "build_timestamp");
  const json& tol = field(md, "tolerances");
  auto& t = b.metadata.tolerances;
  t.degeneracy = unhex(field(tol, "degeneracy"), "degeneracy");
  t.scan_density = unhex(field(tol, "scan_density"), "scan_density");
  t.root_tol = unhex(field(tol, "root_tol"), "root_tol");
  t.residual_gate = unhex(field(tol, "residual_gate"), "residual_gate");
  t.multiplicity_gate =
      unhex(field(tol, "multiplicity_gate"), "multiplicity_gate");
  t.quad_nodes = as_int(field(tol, "quad_nodes"), "quad_nodes");

  const json& modes = field(doc, "modes");
  if (!modes.is_array())
    fail(ErrorKind::malformed_file, "basis file: modes is not an array");
  for (const json& r : modes) {
    EigenMode m;
    m.k = as_int(field(r, "k"), "k");
    m.n = as_int(field(r, "n"), "n");
    m.phase = phase_from_string(as_string(field(r, "phase"), "phase"));
    m.lambda = unhex(field(r, "lambda"), "lambda");
    m.eta_trace = unhex(field(r, "eta_trace"), "eta_trace");
    m.amplitude = unhex(field(r, "amplitude"), "amplitude");
    auto& p = m.profile;
    if (m.k >= 1) {
      p.k = m.k;
      p.lambda = m.lambda;
    }
    p.branch = branch_from_string(as_string(field(r, "branch"), "branch"));
    const json& c = field(r, "c");
    if (!c.is_array() || c.size() != 4)
      fail(ErrorKind::malformed_file, "basis file: c must hold 4 values");
    for (int i = 0; i < 4; ++i) p.c[i] = unhex(c[i], "c");
    p.norm_factor = unhex(field(r, "norm_factor"), "norm_factor");
    if (m.k < 0 || m.n < 1 || !(m.lambda > 0) ||
        (m.k == 0) != (m.phase == Phase::none))
      fail(ErrorKind::malformed_file, "basis file: inconsistent mode record");
    b.modes.push_back(std::move(m));
  }
  return b;
}

}  // namespace stokesheat
