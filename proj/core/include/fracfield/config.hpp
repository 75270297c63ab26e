#pragma once

#include <string>
#include <vector>

#include "fracfield/constitutive.hpp"
#include "fracfield/length_scale.hpp"

namespace fracfield {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshConfig {
  int divisions_per_side = 64;
  int max_extra_levels = 4;
  bool amr_enabled = true;
};

struct LoadingConfig {
  double c = 1.0;    // loading rate
  double dt = 0.01;  // time step
  double t_end = 10.0;
  int max_steps = 1000;
};

struct SolverConfig {
  double tol_stagger = 1e-5;
  int max_stagger = 200;
  double tol_picard = 1e-8;
  int max_picard = 30;
  double linear_tol = 1e-10;
};

struct CrackConfig {
  double x0 = 0.5;
  double y_top = 1.0;
  double y_bot = 0.575;
  double threshold = 0.1;  // crack-mask pin threshold
};

struct OutputConfig {
  std::string directory = "out";
  int vtk_every = 0;  // 0 disables VTK output
  std::string csv_name = "energies.csv";
};

struct RunConfig {
  MeshConfig mesh;
  MaterialModel material;
  LengthScaleConfig length_scale;
  LoadingConfig loading;
  SolverConfig solver;
  CrackConfig crack;
  OutputConfig output;
  // Recalibrate eta/delta from the base mesh size on load.
  bool auto_calibrate = true;
  double xi_iv_multiplier = 10.0;  // xi_iv = multiplier * base h
  // Keep stepping this many steps after full fracture so the terminal
  // energy plateau is observable.
  int post_fracture_steps = 10;
  bool reequilibrate_after_amr = false;

  double base_h() const { return 1.0 / mesh.divisions_per_side; }
  void finalize();  // applies auto-calibration and validates everything
};

/// Parses the flat dotted key-value format ("section.key = value", '#'
/// comments). Unknown keys and constraint violations are all collected
/// and reported together. The special key `preset = NAME` starts from a
/// named built-in configuration.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
RunConfig preset_config(const std::string& name);

/// Applies one "section.key=value" override onto a config.
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);

}  // namespace fracfield
