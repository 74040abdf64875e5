#include "porofrac/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace porofrac {

double parse_quantity(const std::string& text) {
  std::istringstream in(text);
  double value;
  if (!(in >> value)) throw ConfigError("not a number: '" + text + "'");
  std::string unit;
  in >> unit;
  if (unit.empty()) return value;
  static const std::map<std::string, double> factors = {
      {"Pa", 1.0},    {"kPa", 1e3},     {"MPa", 1e6},          {"GPa", 1e9},
      {"m", 1.0},     {"mm", 1e-3},     {"cm", 1e-2},          {"m2", 1.0},
      {"s", 1.0},     {"day", 86400.0}, {"year", 365.0 * 86400.0},
      {"days", 86400.0}, {"years", 365.0 * 86400.0}};
  auto it = factors.find(unit);
  if (it == factors.end()) throw ConfigError("unknown unit '" + unit + "'");
  return value * it->second;
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line, section = "scenario";
  std::vector<std::string> missing, unknown;
  bool preset_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("bad section header, line " + std::to_string(line_no));
      section = line.substr(1, line.size() - 2);
      if (section != "scenario" && section != "material" && section != "time" &&
          section != "output")
        throw ConfigError("unknown section [" + section + "], line " + std::to_string(line_no));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value, line " + std::to_string(line_no));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    auto number = [&]() {
      try {
        return parse_quantity(value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()) + " at line " + std::to_string(line_no));
      }
    };
    std::string qualified = section + "." + key;
    if (qualified == "scenario.preset") {
      cfg.preset = value;
      preset_seen = true;
    } else if (qualified == "scenario.mesh") {
      cfg.mesh_path = value;
    } else if (qualified == "scenario.contact") {
      if (value == "ns-newton")
        cfg.contact_method = ContactMethod::NsNewton;
      else if (value == "active-set")
        cfg.contact_method = ContactMethod::ActiveSet;
      else
        throw ConfigError("contact must be ns-newton or active-set, line " +
                          std::to_string(line_no));
    } else if (qualified == "scenario.coupling") {
      if (value == "gp")
        cfg.coupling_method = CouplingMethod::Gp;
      else if (value == "gu")
        cfg.coupling_method = CouplingMethod::Gu;
      else
        throw ConfigError("coupling must be gp or gu, line " + std::to_string(line_no));
    } else if (qualified == "scenario.model") {
      if (value == "original")
        cfg.variant = ModelVariant::Original;
      else if (value == "modified")
        cfg.variant = ModelVariant::Modified;
      else
        throw ConfigError("model must be original or modified, line " + std::to_string(line_no));
    } else if (qualified == "scenario.c") {
      cfg.contact_c = number();
    } else if (qualified == "scenario.levels") {
      cfg.levels = (int)number();
    } else if (qualified == "scenario.refine") {
      cfg.refine = (int)number();
    } else if (qualified == "material.E") {
      cfg.young = number();
    } else if (qualified == "material.nu") {
      cfg.poisson = number();
    } else if (qualified == "material.b") {
      cfg.biot_b = number();
    } else if (qualified == "material.M") {
      cfg.biot_m = number();
    } else if (qualified == "material.F") {
      cfg.friction = number();
    } else if (qualified == "material.K0") {
      cfg.k_m0 = number();
    } else if (qualified == "material.phi0") {
      cfg.phi_m0 = number();
    } else if (qualified == "material.lambda_f") {
      cfg.lambda_f = number();
    } else if (qualified == "material.d0") {
      cfg.d0 = number();
    } else if (qualified == "time.T") {
      cfg.t_end = number();
    } else if (qualified == "time.dt_init") {
      cfg.dt_init = number();
    } else if (qualified == "time.dt_max") {
      cfg.dt_max = number();
    } else if (qualified == "time.rho") {
      cfg.growth = number();
    } else if (qualified == "output.dir") {
      cfg.out_dir = value;
    } else if (qualified == "output.snapshot_every") {
      cfg.snapshot_every = (int)number();
    } else {
      unknown.push_back(qualified + " (line " + std::to_string(line_no) + ")");
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (auto& u : unknown) msg += " " + u;
    throw ConfigError(msg);
  }
  if (!preset_seen && cfg.mesh_path.empty()) missing.push_back("scenario.preset");
  if (!missing.empty()) {
    std::string msg = "missing required keys:";
    for (auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace porofrac
