#include "binaria/measure.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace binaria {

DiscreteMeasure::DiscreteMeasure(std::vector<Vec3> a, double m) : atoms(std::move(a)), total_mass(m) {
  if (atoms.empty()) throw DomainError("discrete measure needs at least one atom");
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) throw DomainError("discrete measure mass must be positive");
  for (const auto& p : atoms)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw DomainError("discrete measure atoms must be finite");
}

Vec3 DiscreteMeasure::center_of_mass() const {
  Vec3 c;
  for (const auto& p : atoms) c += p;
  return c * (1.0 / double(atoms.size()));
}

void write_atoms_csv(const DiscreteMeasure& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "# total_mass=" << m.total_mass << "\n";
  out << "x,y,z\n";
  for (const auto& p : m.atoms) out << p.x << "," << p.y << "," << p.z << "\n";
}

DiscreteMeasure read_atoms_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open atom cloud " + path.string());
  double total = 1.0;
  std::vector<Vec3> atoms;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("total_mass=");
      if (pos != std::string::npos) total = std::stod(line.substr(pos + 11));
      continue;
    }
    if (line == "x,y,z") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    Vec3 p;
    if (!(is >> p.x >> p.y >> p.z))
      throw ConfigurationError(path.string() + ":" + std::to_string(lineno) + ": expected 'x,y,z'");
    atoms.push_back(p);
  }
  return DiscreteMeasure(std::move(atoms), total);
}

}  // namespace binaria
