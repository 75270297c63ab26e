#include "fracfield/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fracfield {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto d = [](double RunConfig::* ptr) {
      return [ptr](RunConfig& c, const std::string& v) { c.*ptr = std::stod(v); };
    };
    (void)d;
    t["mesh.divisions_per_side"] = [](RunConfig& c, const std::string& v) {
      c.mesh.divisions_per_side = std::stoi(v);
    };
    t["mesh.max_extra_levels"] = [](RunConfig& c, const std::string& v) {
      c.mesh.max_extra_levels = std::stoi(v);
    };
    t["mesh.amr_enabled"] = [](RunConfig& c, const std::string& v) {
      c.mesh.amr_enabled = parse_bool(v);
    };
    t["material.mu"] = [](RunConfig& c, const std::string& v) {
      c.material.mu = std::stod(v);
    };
    t["material.Gc"] = [](RunConfig& c, const std::string& v) {
      c.material.Gc = std::stod(v);
    };
    t["material.beta"] = [](RunConfig& c, const std::string& v) {
      c.material.beta = std::stod(v);
    };
    t["material.alpha"] = [](RunConfig& c, const std::string& v) {
      c.material.alpha = std::stod(v);
    };
    t["material.kappa"] = [](RunConfig& c, const std::string& v) {
      c.material.kappa = std::stod(v);
    };
    t["length_scale.mode"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.mode = parse_xi_mode(v);
    };
    t["length_scale.c_v"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.c_v = std::stod(v);
    };
    t["length_scale.eta"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.eta = std::stod(v);
    };
    t["length_scale.delta"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.delta = std::stod(v);
    };
    t["length_scale.xi_iv_multiplier"] = [](RunConfig& c,
                                            const std::string& v) {
      c.xi_iv_multiplier = std::stod(v);
    };
    t["length_scale.xi_refine"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.xi_refine = std::stod(v);
    };
    t["length_scale.xi_coarsen"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.xi_coarsen = std::stod(v);
    };
    t["length_scale.xi_floor"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.xi_floor = std::stod(v);
    };
    t["length_scale.delta_per_cell"] = [](RunConfig& c, const std::string& v) {
      c.length_scale.delta_per_cell = parse_bool(v);
    };
    t["length_scale.auto_calibrate"] = [](RunConfig& c, const std::string& v) {
      c.auto_calibrate = parse_bool(v);
    };
    t["loading.c"] = [](RunConfig& c, const std::string& v) {
      c.loading.c = std::stod(v);
    };
    t["loading.dt"] = [](RunConfig& c, const std::string& v) {
      c.loading.dt = std::stod(v);
    };
    t["loading.t_end"] = [](RunConfig& c, const std::string& v) {
      c.loading.t_end = std::stod(v);
    };
    t["loading.max_steps"] = [](RunConfig& c, const std::string& v) {
      c.loading.max_steps = std::stoi(v);
    };
    t["loading.post_fracture_steps"] = [](RunConfig& c, const std::string& v) {
      c.post_fracture_steps = std::stoi(v);
    };
    t["solver.tol_stagger"] = [](RunConfig& c, const std::string& v) {
      c.solver.tol_stagger = std::stod(v);
    };
    t["solver.max_stagger"] = [](RunConfig& c, const std::string& v) {
      c.solver.max_stagger = std::stoi(v);
    };
    t["solver.tol_picard"] = [](RunConfig& c, const std::string& v) {
      c.solver.tol_picard = std::stod(v);
    };
    t["solver.max_picard"] = [](RunConfig& c, const std::string& v) {
      c.solver.max_picard = std::stoi(v);
    };
    t["solver.linear_tol"] = [](RunConfig& c, const std::string& v) {
      c.solver.linear_tol = std::stod(v);
    };
    t["solver.reequilibrate_after_amr"] = [](RunConfig& c,
                                             const std::string& v) {
      c.reequilibrate_after_amr = parse_bool(v);
    };
    t["crack.x0"] = [](RunConfig& c, const std::string& v) {
      c.crack.x0 = std::stod(v);
    };
    t["crack.y_top"] = [](RunConfig& c, const std::string& v) {
      c.crack.y_top = std::stod(v);
    };
    t["crack.y_bot"] = [](RunConfig& c, const std::string& v) {
      c.crack.y_bot = std::stod(v);
    };
    t["crack.threshold"] = [](RunConfig& c, const std::string& v) {
      c.crack.threshold = std::stod(v);
    };
    t["output.directory"] = [](RunConfig& c, const std::string& v) {
      c.output.directory = v;
    };
    t["output.vtk_every"] = [](RunConfig& c, const std::string& v) {
      c.output.vtk_every = std::stoi(v);
    };
    t["output.csv_name"] = [](RunConfig& c, const std::string& v) {
      c.output.csv_name = v;
    };
    return t;
  }();
  return table;
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
  try {
    it->second(cfg, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  auto table2 = [&](int divisions, double xi_iv_mult) {
    cfg.mesh.divisions_per_side = divisions;
    cfg.mesh.amr_enabled = false;
    cfg.mesh.max_extra_levels = 0;
    cfg.length_scale.mode = XiMode::GlobalOptimal;
    cfg.length_scale.delta_per_cell = false;
    // The published benchmark tabulates eta = 9.36 (not the 3.125 the
    // calibration formula yields); the optimal-xi column is only
    // reproduced with the tabulated value, so the presets pin it.
    cfg.auto_calibrate = false;
    cfg.length_scale.delta =
        calibrate_delta(1.0 / divisions, cfg.material.Gc, cfg.length_scale.c_v);
    cfg.length_scale.eta = 9.36;
    cfg.xi_iv_multiplier = xi_iv_mult;
    cfg.loading.c = 0.5;
    cfg.loading.dt = 0.01;
    cfg.loading.max_steps = 20;
    cfg.post_fracture_steps = 3;
  };
  if (name == "table2_128") {
    table2(128, 5.0);
  } else if (name == "table2_256") {
    table2(256, 8.0);
  } else if (name == "table2_512") {
    table2(512, 12.0);
  } else if (name == "local64") {
    cfg.mesh.divisions_per_side = 64;
    cfg.mesh.amr_enabled = true;
    cfg.mesh.max_extra_levels = 4;
    cfg.length_scale.mode = XiMode::Local;
    cfg.auto_calibrate = false;
    // Recalibrating delta per cell ties the intact length scale to the
    // local cell size, and with it the damage threshold Gc/(c_v mu xi):
    // coarse far-field cells end up weaker than the refined crack tip and
    // fail first, along the loaded edge. One fixed delta, calibrated at
    // the 256-cell resolution, keeps the threshold nearly uniform: intact
    // cells sit near xi = 0.039 at every level and only steep transition
    // cells inside the damage band drop below it.
    cfg.length_scale.delta_per_cell = false;
    cfg.length_scale.delta = calibrate_delta(1.0 / 256.0, cfg.material.Gc,
                                             cfg.length_scale.c_v);
    cfg.length_scale.eta = 3.125;
    // Sits between the transition-cell xi (floored at 0.018) and the
    // intact 0.039, so marking refines the band and leaves the far field
    // alone.
    cfg.length_scale.xi_refine = 0.028;
    cfg.length_scale.xi_coarsen = 0.1;
    cfg.length_scale.xi_floor = 0.018;
    // The equilibrium phase profile next to a pinned node rises with
    // slope ~1/xi, so the first free node on a finest-level flank cell
    // sits near phi = h/xi = 0.05 even with zero driving energy, and
    // moderate flank strain pushes it lower still. The mask threshold has
    // to sit well below that foot value or the crack widens sideways
    // column by column; at 0.01 only the strain blow-up at the tip can
    // extend the crack set.
    cfg.crack.threshold = 0.01;
    cfg.loading.c = 0.5;
    cfg.loading.dt = 0.01;
    cfg.loading.max_steps = 400;
    cfg.post_fracture_steps = 10;
    // The failure event runs down the whole ligament inside one load
    // step, advancing roughly a node per sweep, so the sweep budget has
    // to cover the full crack length at the finest resolution.
    cfg.solver.max_stagger = 2000;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> errors;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "preset") {
        RunConfig base = preset_config(value);
        cfg = base;
      } else {
        apply_override(cfg, key, value);
      }
    } catch (const std::exception& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "configuration errors:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void RunConfig::finalize() {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) errors.emplace_back(msg);
  };
  check(mesh.divisions_per_side >= 2 &&
            (mesh.divisions_per_side & (mesh.divisions_per_side - 1)) == 0,
        "mesh.divisions_per_side must be a power of two >= 2");
  check(mesh.max_extra_levels >= 0, "mesh.max_extra_levels >= 0");
  check(material.mu > 0, "material.mu > 0");
  check(material.Gc > 0, "material.Gc > 0");
  check(material.beta >= 0, "material.beta >= 0");
  check(material.alpha > 0, "material.alpha > 0");
  check(material.kappa > 0 && material.kappa < 1, "material.kappa in (0,1)");
  check(loading.dt > 0, "loading.dt > 0");
  check(loading.max_steps >= 0, "loading.max_steps >= 0");
  check(solver.tol_stagger > 0, "solver.tol_stagger > 0");
  check(solver.tol_picard > 0, "solver.tol_picard > 0");
  check(solver.linear_tol > 0, "solver.linear_tol > 0");
  check(solver.max_stagger > 0, "solver.max_stagger > 0");
  check(solver.max_picard > 0, "solver.max_picard > 0");
  check(crack.x0 > 0 && crack.x0 < 1, "crack.x0 in (0,1)");
  check(crack.y_bot >= 0 && crack.y_bot <= crack.y_top && crack.y_top <= 1,
        "crack segment must satisfy 0 <= y_bot <= y_top <= 1");
  check(crack.threshold > 0 && crack.threshold < 1, "crack.threshold in (0,1)");
  check(xi_iv_multiplier > 0, "length_scale.xi_iv_multiplier > 0");
  if (!errors.empty()) {
    std::string msg = "configuration constraint violations:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  if (auto_calibrate) {
    length_scale.delta = calibrate_delta(base_h(), material.Gc,
                                         length_scale.c_v);
    length_scale.eta = calibrate_eta(base_h(), material.Gc, length_scale.c_v,
                                     length_scale.delta);
  }
  length_scale.xi_iv = xi_iv_multiplier * base_h();
  length_scale.validate();
  material.validate();
}

}  // namespace fracfield
