#pragma once

#include <string>
#include <vector>

namespace fracfield {

/// One accepted load step in the CSV energy log.
struct EnergyRecord {
  int step = 0;
  double time = 0.0;
  double load = 0.0;
  double bulk = 0.0;
  double surface = 0.0;
  double total = 0.0;
  double xi_min = 0.0;
  double xi_max = 0.0;
  double xi_mean = 0.0;
  int cells = 0;
  int dofs = 0;
  int stagger_iters = 0;
};

inline constexpr const char* kEnergyCsvHeader =
    "step,time,load,bulk,surface,total,xi_min,xi_max,xi_mean,cells,dofs,"
    "stagger_iters";

void write_energy_csv(const std::string& path,
                      const std::vector<EnergyRecord>& records);

std::vector<EnergyRecord> read_energy_csv(const std::string& path);

}  // namespace fracfield
