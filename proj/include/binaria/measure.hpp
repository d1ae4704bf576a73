#pragma once

#include <filesystem>
#include <vector>

#include "binaria/common.hpp"

namespace binaria {

/// Equal-weight atom cloud. Each atom carries total_mass / n.
struct DiscreteMeasure {
  std::vector<Vec3> atoms;
  double total_mass = 1.0;

  DiscreteMeasure() = default;
  /// Throws DomainError for an empty cloud, non-finite atoms or non-positive mass.
  DiscreteMeasure(std::vector<Vec3> atoms, double total_mass);

  std::size_t size() const { return atoms.size(); }
  double weight() const { return total_mass / double(atoms.size()); }
  Vec3 center_of_mass() const;
};

/// CSV with one "x,y,z" row per atom and a "# total_mass=<m>" header comment.
void write_atoms_csv(const DiscreteMeasure& m, const std::filesystem::path& path);
DiscreteMeasure read_atoms_csv(const std::filesystem::path& path);

}  // namespace binaria
