#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "h4ev/core.hpp"
#include "h4ev/geometry.hpp"

namespace h4ev {

struct Primitive {
  double exponent;     // 1/Bohr^2
  double coefficient;  // on normalized primitives until normalize() is called
};

/// A contracted s-type Gaussian shell.
struct BasisShell {
  Eigen::Vector3d center;  // Bohr
  std::vector<Primitive> primitives;

  /// Folds primitive norms into the coefficients and rescales so the
  /// contracted self-overlap is exactly 1.
  void normalize() {
    if (primitives.empty()) throw DomainError("basis: empty shell");
    const double pi = std::numbers::pi;
    for (auto& p : primitives) {
      if (!(p.exponent > 0.0)) throw DomainError("basis: exponent must be > 0");
      p.coefficient *= std::pow(2.0 * p.exponent / pi, 0.75);
    }
    double s = 0.0;
    for (const auto& a : primitives)
      for (const auto& b : primitives)
        s += a.coefficient * b.coefficient *
             std::pow(pi / (a.exponent + b.exponent), 1.5);
    const double scale = 1.0 / std::sqrt(s);
    for (auto& p : primitives) p.coefficient *= scale;
  }
};

/// Parses the bundled basis text format: one "exponent coefficient" pair per
/// line, blank lines separate shells, '#' starts a comment.
inline std::vector<std::vector<Primitive>> parse_basis(std::istream& in) {
  std::vector<std::vector<Primitive>> shells;
  std::vector<Primitive> current;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    Primitive p;
    if (ls >> p.exponent >> p.coefficient) {
      current.push_back(p);
    } else if (!current.empty()) {
      shells.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) shells.push_back(std::move(current));
  if (shells.empty()) throw DomainError("basis: no shells in file");
  return shells;
}

inline std::vector<std::vector<Primitive>> load_basis_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("basis: cannot open " + path);
  return parse_basis(in);
}

inline std::string default_hydrogen_basis_path() {
#ifdef H4EV_DATA_DIR
  return std::string(H4EV_DATA_DIR) + "/sto-3g.h.basis";
#else
  return "data/sto-3g.h.basis";
#endif
}

/// One normalized shell per atom, centered on the atoms of g (in Bohr).
inline std::vector<BasisShell> basis_for_geometry(
    const Geometry& g,
    const std::string& basis_path = default_hydrogen_basis_path()) {
  auto shells = load_basis_file(basis_path);
  if (shells.size() != 1)
    throw DomainError("basis: expected a single hydrogen s shell");
  std::vector<BasisShell> out;
  const auto r = g.positions_bohr();
  for (int i = 0; i < 4; ++i) {
    BasisShell sh;
    sh.center = r.col(i);
    sh.primitives = shells[0];
    sh.normalize();
    out.push_back(std::move(sh));
  }
  return out;
}

}  // namespace h4ev
