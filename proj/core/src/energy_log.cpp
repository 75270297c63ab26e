#include "fracfield/energy_log.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace fracfield {

void write_energy_csv(const std::string& path,
                      const std::vector<EnergyRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("write_energy_csv: empty record list");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kEnergyCsvHeader << "\n";
  out << std::setprecision(15);
  for (const auto& r : records) {
    out << r.step << ',' << r.time << ',' << r.load << ',' << r.bulk << ','
        << r.surface << ',' << r.total << ',' << r.xi_min << ',' << r.xi_max
        << ',' << r.xi_mean << ',' << r.cells << ',' << r.dofs << ','
        << r.stagger_iters << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<EnergyRecord> read_energy_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kEnergyCsvHeader) {
    throw std::runtime_error("bad energy CSV header in " + path);
  }
  std::vector<EnergyRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    EnergyRecord r;
    char comma;
    ss >> r.step >> comma >> r.time >> comma >> r.load >> comma >> r.bulk >>
        comma >> r.surface >> comma >> r.total >> comma >> r.xi_min >> comma >>
        r.xi_max >> comma >> r.xi_mean >> comma >> r.cells >> comma >> r.dofs >>
        comma >> r.stagger_iters;
    if (ss.fail()) throw std::runtime_error("bad energy CSV row in " + path);
    records.push_back(r);
  }
  return records;
}

}  // namespace fracfield
