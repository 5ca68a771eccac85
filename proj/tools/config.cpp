#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stokesheat/error.hpp"
#include "stokesheat/format.hpp"

namespace stokesheat::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorKind::configuration, key + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(where.empty() ? "config" : where, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.contains(k))
      bad(where.empty() ? k : where + "." + k, "unknown key");
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(key, "must be finite");
  return d;
}

std::int64_t integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::array<double, 2> interval(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2) bad(key, "expected [lo, hi]");
  return {number(v[0], key + "[0]"), number(v[1], key + "[1]")};
}

std::vector<double> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) bad(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

std::string text(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

OutputFormat format_from(const std::string& s, const std::string& key) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "structured") return OutputFormat::structured;
  bad(key, "expected \"csv\" or \"structured\", got \"" + s + "\"");
}

void read_file_values(const json& doc, RunConfig& c) {
  check_keys(doc, "", {"basis", "region", "kernel", "schedule", "sweeps", "io"});

  if (doc.contains("basis")) {
    const json& b = doc["basis"];
    check_keys(b, "basis", {"Lambda_max", "k_max", "tolerances"});
    if (b.contains("Lambda_max")) c.basis.lambda_max = number(b["Lambda_max"], "basis.Lambda_max");
    if (b.contains("k_max")) c.basis.k_max = static_cast<int>(integer(b["k_max"], "basis.k_max"));
    if (b.contains("tolerances")) {
      const json& t = b["tolerances"];
      auto& tol = c.basis.tolerances;
      check_keys(t, "basis.tolerances",
                 {"degeneracy", "scan_density", "root_tol", "residual_gate",
                  "multiplicity_gate", "quad_nodes"});
      if (t.contains("degeneracy")) tol.degeneracy = number(t["degeneracy"], "basis.tolerances.degeneracy");
      if (t.contains("scan_density")) tol.scan_density = number(t["scan_density"], "basis.tolerances.scan_density");
      if (t.contains("root_tol")) tol.root_tol = number(t["root_tol"], "basis.tolerances.root_tol");
      if (t.contains("residual_gate")) tol.residual_gate = number(t["residual_gate"], "basis.tolerances.residual_gate");
      if (t.contains("multiplicity_gate"))
        tol.multiplicity_gate = number(t["multiplicity_gate"], "basis.tolerances.multiplicity_gate");
      if (t.contains("quad_nodes"))
        tol.quad_nodes = static_cast<int>(integer(t["quad_nodes"], "basis.tolerances.quad_nodes"));
    }
  }
  if (doc.contains("region")) {
    const json& r = doc["region"];
    check_keys(r, "region", {"x1", "x2"});
    if (r.contains("x1")) c.region.x1 = interval(r["x1"], "region.x1");
    if (r.contains("x2")) c.region.x2 = interval(r["x2"], "region.x2");
  }
  if (doc.contains("kernel")) {
    const json& k = doc["kernel"];
    check_keys(k, "kernel", {"S0", "support"});
    if (k.contains("S0")) c.kernel.S0 = number(k["S0"], "kernel.S0");
    if (k.contains("support")) c.kernel.support = interval(k["support"], "kernel.support");
  }
  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    auto& sc = c.schedule;
    check_keys(s, "schedule",
               {"T", "gamma", "epsilon", "Lambda_cap", "reg_threshold", "tolerance",
                "seed", "z0_modes"});
    if (s.contains("T")) sc.T = number(s["T"], "schedule.T");
    if (s.contains("gamma")) sc.gamma = number(s["gamma"], "schedule.gamma");
    if (s.contains("epsilon")) sc.epsilon = number(s["epsilon"], "schedule.epsilon");
    if (s.contains("Lambda_cap")) sc.lambda_cap = number(s["Lambda_cap"], "schedule.Lambda_cap");
    if (s.contains("reg_threshold")) sc.reg_threshold = number(s["reg_threshold"], "schedule.reg_threshold");
    if (s.contains("tolerance")) sc.tolerance = number(s["tolerance"], "schedule.tolerance");
    if (s.contains("seed")) {
      const auto v = integer(s["seed"], "schedule.seed");
      if (v < 0) bad("schedule.seed", "must be >= 0");
      sc.seed = static_cast<std::uint64_t>(v);
    }
    if (s.contains("z0_modes")) {
      const auto v = integer(s["z0_modes"], "schedule.z0_modes");
      if (v < 0) bad("schedule.z0_modes", "must be >= 0");
      sc.z0_modes = static_cast<std::size_t>(v);
    }
  }
  if (doc.contains("sweeps")) {
    const json& s = doc["sweeps"];
    check_keys(s, "sweeps", {"Lambda_list", "T_list"});
    if (s.contains("Lambda_list")) c.sweeps.lambda_list = number_list(s["Lambda_list"], "sweeps.Lambda_list");
    if (s.contains("T_list")) c.sweeps.t_list = number_list(s["T_list"], "sweeps.T_list");
  }
  if (doc.contains("io")) {
    const json& io = doc["io"];
    check_keys(io, "io", {"cache_path", "out_dir", "format"});
    if (io.contains("cache_path")) c.io.cache_path = text(io["cache_path"], "io.cache_path");
    if (io.contains("out_dir")) c.io.out_dir = text(io["out_dir"], "io.out_dir");
    if (io.contains("format")) c.io.format = format_from(text(io["format"], "io.format"), "io.format");
  }
}

void apply(const Overrides& ov, RunConfig& c) {
  if (ov.lambda_max) c.basis.lambda_max = *ov.lambda_max;
  if (ov.gamma) c.schedule.gamma = *ov.gamma;
  if (ov.epsilon) c.schedule.epsilon = *ov.epsilon;
  if (ov.horizon) c.schedule.T = *ov.horizon;
  if (ov.region) {
    c.region.x1 = {(*ov.region)[0], (*ov.region)[1]};
    c.region.x2 = {(*ov.region)[2], (*ov.region)[3]};
  }
  if (ov.seed) c.schedule.seed = *ov.seed;
  if (ov.out_dir) c.io.out_dir = *ov.out_dir;
  if (ov.cache) c.io.cache_path = *ov.cache;
  if (ov.format) c.io.format = format_from(*ov.format, "--format");
}

void validate(const RunConfig& c) {
  if (!(c.basis.lambda_max > 0)) bad("basis.Lambda_max", "required, must be > 0");
  if (c.basis.k_max < 0) bad("basis.k_max", "must be >= 0 (0 selects the default)");
  const auto& t = c.basis.tolerances;
  if (!(t.degeneracy > 0)) bad("basis.tolerances.degeneracy", "must be > 0");
  if (!(t.scan_density > 0)) bad("basis.tolerances.scan_density", "must be > 0");
  if (!(t.root_tol > 0)) bad("basis.tolerances.root_tol", "must be > 0");
  if (!(t.residual_gate > 0)) bad("basis.tolerances.residual_gate", "must be > 0");
  if (!(t.multiplicity_gate > 0)) bad("basis.tolerances.multiplicity_gate", "must be > 0");
  if (t.quad_nodes < 2) bad("basis.tolerances.quad_nodes", "must be >= 2");

  const auto& r = c.region;
  if (!(0 <= r.x1[0] && r.x1[0] < r.x1[1] && r.x1[1] <= 2 * 3.141592653589793))
    bad("region.x1", "need 0 <= lo < hi <= 2 pi");
  if (!(0 < r.x2[0] && r.x2[0] < r.x2[1] && r.x2[1] < 1))
    bad("region.x2", "need 0 < lo < hi < 1");

  if (!(c.kernel.S0 > 0)) bad("kernel.S0", "must be > 0");
  if (c.kernel.support) {
    const auto [a, b] = *c.kernel.support;
    if (!(0 < a && a < b && b < c.kernel.S0)) bad("kernel.support", "need 0 < a < b < S0");
  }

  const auto& s = c.schedule;
  if (!(s.T > 0 && s.T <= 1)) bad("schedule.T", "must lie in (0, 1]");
  if (!(s.gamma > 1)) bad("schedule.gamma", "must be > 1");
  if (!(s.epsilon > 0 && s.epsilon < 1)) bad("schedule.epsilon", "must lie in (0, 1)");
  if (!(s.lambda_cap > 0)) bad("schedule.Lambda_cap", "must be > 0");
  if (!(s.reg_threshold > 0 && s.reg_threshold < 1)) bad("schedule.reg_threshold", "must lie in (0, 1)");
  if (!(s.tolerance > 0)) bad("schedule.tolerance", "must be > 0");

  for (std::size_t i = 0; i < c.sweeps.lambda_list.size(); ++i) {
    const double v = c.sweeps.lambda_list[i];
    const std::string key = "sweeps.Lambda_list[" + std::to_string(i) + "]";
    if (!(v > 0)) bad(key, "must be > 0");
  }
  for (std::size_t i = 0; i < c.sweeps.t_list.size(); ++i)
    if (!(c.sweeps.t_list[i] > 0))
      bad("sweeps.T_list[" + std::to_string(i) + "]", "must be > 0");

  if (c.io.out_dir.empty()) bad("io.out_dir", "must not be empty");
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt17(v[i]);
  return s + "]";
}

std::string pair(const std::array<double, 2>& v) {
  return "[" + fmt17(v[0]) + ", " + fmt17(v[1]) + "]";
}

}  // namespace

int RunConfig::effective_k_max() const {
  return basis.k_max > 0 ? basis.k_max : default_k_max(basis.lambda_max);
}

ObservationRegion RunConfig::observation_region() const {
  return ObservationRegion(region.x1[0], region.x1[1], region.x2[0], region.x2[1]);
}

Kernel RunConfig::make_kernel() const {
  if (!kernel.support) return Kernel::canonical(kernel.S0);
  return Kernel(kernel.S0, (*kernel.support)[0], (*kernel.support)[1]);
}

RunConfig parse_config(const std::string& json_text, const Overrides& ov) {
  RunConfig c;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::configuration, std::string("config: not valid JSON: ") + e.what());
  }
  read_file_values(doc, c);
  apply(ov, c);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, const Overrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::configuration, "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), ov);
}

std::string config_json(const RunConfig& c) {
  const auto& t = c.basis.tolerances;
  const auto& s = c.schedule;
  std::ostringstream o;
  o << "{\n"
    << "  \"basis\": {\"Lambda_max\": " << fmt17(c.basis.lambda_max)
    << ", \"k_max\": " << c.effective_k_max() << ", \"tolerances\": {"
    << "\"degeneracy\": " << fmt17(t.degeneracy)
    << ", \"scan_density\": " << fmt17(t.scan_density)
    << ", \"root_tol\": " << fmt17(t.root_tol)
    << ", \"residual_gate\": " << fmt17(t.residual_gate)
    << ", \"multiplicity_gate\": " << fmt17(t.multiplicity_gate)
    << ", \"quad_nodes\": " << t.quad_nodes << "}},\n"
    << "  \"region\": {\"x1\": " << pair(c.region.x1) << ", \"x2\": " << pair(c.region.x2) << "},\n";
  const Kernel k = c.make_kernel();
  o << "  \"kernel\": {\"S0\": " << fmt17(k.S0()) << ", \"support\": " << pair({k.a(), k.b()}) << "},\n"
    << "  \"schedule\": {\"T\": " << fmt17(s.T) << ", \"gamma\": " << fmt17(s.gamma)
    << ", \"epsilon\": " << fmt17(s.epsilon) << ", \"Lambda_cap\": " << fmt17(s.lambda_cap)
    << ", \"reg_threshold\": " << fmt17(s.reg_threshold)
    << ", \"tolerance\": " << fmt17(s.tolerance) << ", \"seed\": " << s.seed
    << ", \"z0_modes\": " << s.z0_modes << "},\n"
    << "  \"sweeps\": {\"Lambda_list\": " << list(c.sweeps.lambda_list)
    << ", \"T_list\": " << list(c.sweeps.t_list) << "},\n"
    << "  \"io\": {\"cache_path\": " << json(c.io.cache_path).dump()
    << ", \"out_dir\": " << json(c.io.out_dir).dump() << ", \"format\": \""
    << (c.io.format == OutputFormat::csv ? "csv" : "structured") << "\"}\n"
    << "}\n";
  return o.str();
}

}  // namespace stokesheat::cli
