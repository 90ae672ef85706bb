#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "h4ev/core.hpp"

namespace h4ev {

struct Atom {
  std::string label;
  Eigen::Vector3d position;  // Angstrom
};

enum class Provenance { Reference, Distorted };

/// An H4+ nuclear configuration. Coordinates are kept in Angstrom and
/// converted to Bohr only at the integrals boundary.
struct Geometry {
  std::array<Atom, 4> atoms;
  Provenance provenance = Provenance::Reference;

  void validate() const {
    for (const auto& a : atoms) {
      if (a.label != "H") throw DomainError("geometry: all atoms must be H");
      if (!a.position.allFinite())
        throw DomainError("geometry: non-finite coordinate");
    }
  }

  /// Positions in Bohr, one column per atom.
  Eigen::Matrix<double, 3, 4> positions_bohr() const {
    Eigen::Matrix<double, 3, 4> r;
    for (int i = 0; i < 4; ++i) r.col(i) = atoms[i].position * kAngstromToBohr;
    return r;
  }
};

/// Shifts applied to the tetrahedral reference, in Angstrom.
struct Distortion {
  double dx2 = 0.0;  // atom 2 along x
  double dy3 = 0.0;  // atom 3 along y
  double dz1 = 0.0;  // atom 1 along z
};

/// Optimized tetrahedral reference configuration.
inline Geometry td_reference() {
  Geometry g;
  g.atoms = {Atom{"H", {0.000000000000, 0.000000000000, 1.142278716718}},
             Atom{"H", {0.807713026596, 0.000000000000, 0.000000000000}},
             Atom{"H", {-0.403856513298, 0.699500000000, 0.000000000000}},
             Atom{"H", {-0.403856513298, -0.699500000000, 0.000000000000}}};
  g.provenance = Provenance::Reference;
  return g;
}

inline Geometry distort(const Geometry& base, const Distortion& d) {
  if (!std::isfinite(d.dx2) || !std::isfinite(d.dy3) || !std::isfinite(d.dz1))
    throw DomainError("distort: non-finite shift");
  Geometry g = base;
  g.atoms[0].position.z() += d.dz1;
  g.atoms[1].position.x() += d.dx2;
  g.atoms[2].position.y() += d.dy3;
  g.provenance = Provenance::Distorted;
  return g;
}

inline std::string to_xyz(const Geometry& g, const std::string& comment = "") {
  std::ostringstream os;
  os << g.atoms.size() << "\n" << comment << "\n";
  os.setf(std::ios::fixed);
  os.precision(12);
  for (const auto& a : g.atoms)
    os << a.label << " " << a.position.x() << " " << a.position.y() << " "
       << a.position.z() << "\n";
  return os.str();
}

inline Geometry from_xyz(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("xyz: missing atom count");
  int n = std::stoi(line);
  if (n != 4) throw DomainError("xyz: expected 4 atoms");
  std::getline(in, line);  // comment
  Geometry g;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(in, line)) throw DomainError("xyz: truncated file");
    std::istringstream ls(line);
    Atom a;
    ls >> a.label >> a.position.x() >> a.position.y() >> a.position.z();
    if (!ls) throw DomainError("xyz: malformed atom line");
    g.atoms[i] = a;
  }
  g.provenance = Provenance::Distorted;
  g.validate();
  return g;
}

inline Geometry from_xyz(const std::string& text) {
  std::istringstream is(text);
  return from_xyz(is);
}

}  // namespace h4ev
