#ifndef POROFRAC_CONFIG_HPP
#define POROFRAC_CONFIG_HPP

#include <optional>
#include <string>

#include "porofrac/coupling.hpp"

namespace porofrac {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parsed run configuration. Sectioned key = value text with units; see
/// parse_config for the grammar.
struct ScenarioConfig {
  std::string preset;  // compression | network6 | drying-plane
  std::string mesh_path;
  // material overrides (optional; presets provide defaults)
  std::optional<double> young, poisson, biot_b, biot_m, friction, k_m0, phi_m0, lambda_f, d0;
  // solver choices
  ContactMethod contact_method = ContactMethod::ActiveSet;
  std::optional<double> contact_c;
  CouplingMethod coupling_method = CouplingMethod::Gp;
  ModelVariant variant = ModelVariant::Original;
  // time controls
  double t_end = 2.0 * 365.0 * 86400.0;
  double dt_init = 0.001 * 86400.0;
  double dt_max = 10.0 * 365.0 * 86400.0;
  double growth = 1.1;
  // output
  std::string out_dir = "out";
  int snapshot_every = 0;
  // benchmark knobs
  int levels = 3;
  int refine = 0;
};

/// Parses `key = value [unit]` lines grouped under [section] headers
/// (sections scenario, material, time, output are recognized). Pressure
/// units Pa/kPa/MPa/GPa, lengths m/mm/cm, times s/day/year. Unknown keys are
/// fatal; missing required keys are reported together.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

/// Value with optional unit suffix -> SI.
double parse_quantity(const std::string& text);

}  // namespace porofrac

#endif
