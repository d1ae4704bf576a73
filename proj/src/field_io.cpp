#include "binaria/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>

#include "json.hpp"

namespace binaria {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  stem += ext;
  return stem;
}

}  // namespace

void write_field(const ScalarField& f, const std::filesystem::path& stem) {
  {
    std::ofstream raw(with_ext(stem, ".raw"), std::ios::binary);
    if (!raw) throw ConfigurationError("cannot write " + with_ext(stem, ".raw").string());
    for (double v : f.values) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
      raw.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  nlohmann::ordered_json meta;
  meta["format"] = "float64-le";
  meta["order"] = "x-fastest";
  meta["origin"] = {f.grid.origin.x, f.grid.origin.y, f.grid.origin.z};
  meta["spacing"] = f.grid.h;
  meta["dims"] = {f.grid.nx, f.grid.ny, f.grid.nz};
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw ConfigurationError("cannot write " + with_ext(stem, ".json").string());
  js << std::setprecision(17) << meta.dump(2) << "\n";
}

ScalarField read_field(const std::filesystem::path& stem) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw ConfigurationError("cannot open " + with_ext(stem, ".json").string());
  nlohmann::json meta;
  try {
    js >> meta;
    const auto o = meta.at("origin");
    const auto d = meta.at("dims");
    const Grid3 g({o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()}, meta.at("spacing").get<double>(),
                  d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(), d.at(2).get<std::size_t>());
    std::ifstream raw(with_ext(stem, ".raw"), std::ios::binary);
    if (!raw) throw ConfigurationError("cannot open " + with_ext(stem, ".raw").string());
    std::vector<double> values(g.size());
    for (auto& v : values) {
      std::uint64_t bits = 0;
      if (!raw.read(reinterpret_cast<char*>(&bits), sizeof bits))
        throw ConfigurationError(with_ext(stem, ".raw").string() + " is shorter than its sidecar dims");
      v = std::bit_cast<double>(to_little(bits));
    }
    return ScalarField(g, std::move(values));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("malformed field sidecar " + with_ext(stem, ".json").string() + ": " + e.what());
  }
}

void write_slice_csv(const ScalarField& f, Axis axis, double position, const std::filesystem::path& path) {
  const Grid3& g = f.grid;
  const int a = axis == Axis::x ? 0 : (axis == Axis::y ? 1 : 2);
  const std::size_t n = a == 0 ? g.nx : (a == 1 ? g.ny : g.nz);
  const double u = (position - g.origin[std::size_t(a)]) / g.h - 0.5;
  const auto layer = std::size_t(std::clamp(std::lround(u), 0L, long(n) - 1));
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << std::setprecision(17) << "x,y,z,value\n";
  for (std::size_t k = 0; k < g.nz; ++k)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const std::size_t c = a == 0 ? i : (a == 1 ? j : k);
        if (c != layer) continue;
        const Vec3 x = g.center(i, j, k);
        out << x.x << "," << x.y << "," << x.z << "," << f.values[g.index(i, j, k)] << "\n";
      }
}

}  // namespace binaria
