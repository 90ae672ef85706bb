#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "h4ev/basis.hpp"
#include "h4ev/core.hpp"
#include "h4ev/geometry.hpp"

namespace h4ev {

/// Boys function F0(x) = int_0^1 exp(-x u^2) du.
/// Taylor branch below 1e-7 avoids cancellation in erf(sqrt(x))/sqrt(x).
inline double boys_f0(double x) {
  if (!(x >= 0.0) || !std::isfinite(x))
    throw DomainError("boys_f0: x must be finite and >= 0");
  if (x < 1e-7) return 1.0 - x / 3.0 + x * x / 10.0;
  return 0.5 * std::sqrt(std::numbers::pi / x) * std::erf(std::sqrt(x));
}

/// Dense two-electron tensor in chemists' notation (pq|rs).
class EriTensor {
 public:
  explicit EriTensor(int n = 0) : n_(n), data_(size_t(n) * n * n * n, 0.0) {}
  int n() const { return n_; }
  double& operator()(int p, int q, int r, int s) {
    return data_[((size_t(p) * n_ + q) * n_ + r) * n_ + s];
  }
  double operator()(int p, int q, int r, int s) const {
    return data_[((size_t(p) * n_ + q) * n_ + r) * n_ + s];
  }

 private:
  int n_;
  std::vector<double> data_;
};

struct AOIntegrals {
  Eigen::MatrixXd S;  // overlap
  Eigen::MatrixXd T;  // kinetic, Hartree
  Eigen::MatrixXd V;  // nuclear attraction, Hartree
  EriTensor eri;      // (pq|rs), Hartree
  double e_nuc = 0.0;
};

namespace detail {

inline double s_prim(double a, const Eigen::Vector3d& A, double b,
                     const Eigen::Vector3d& B) {
  const double p = a + b;
  const double ab2 = (A - B).squaredNorm();
  return std::pow(std::numbers::pi / p, 1.5) * std::exp(-a * b / p * ab2);
}

inline double t_prim(double a, const Eigen::Vector3d& A, double b,
                     const Eigen::Vector3d& B) {
  const double p = a + b;
  const double ab2 = (A - B).squaredNorm();
  const double mu = a * b / p;
  return mu * (3.0 - 2.0 * mu * ab2) * std::pow(std::numbers::pi / p, 1.5) *
         std::exp(-mu * ab2);
}

inline double v_prim(double a, const Eigen::Vector3d& A, double b,
                     const Eigen::Vector3d& B, const Eigen::Vector3d& C) {
  const double p = a + b;
  const double ab2 = (A - B).squaredNorm();
  const Eigen::Vector3d P = (a * A + b * B) / p;
  return -2.0 * std::numbers::pi / p * std::exp(-a * b / p * ab2) *
         boys_f0(p * (P - C).squaredNorm());
}

inline double eri_prim(double a, const Eigen::Vector3d& A, double b,
                       const Eigen::Vector3d& B, double c,
                       const Eigen::Vector3d& C, double d,
                       const Eigen::Vector3d& D) {
  const double p = a + b, q = c + d;
  const Eigen::Vector3d P = (a * A + b * B) / p;
  const Eigen::Vector3d Q = (c * C + d * D) / q;
  const double kab = std::exp(-a * b / p * (A - B).squaredNorm());
  const double kcd = std::exp(-c * d / q * (C - D).squaredNorm());
  return 2.0 * std::pow(std::numbers::pi, 2.5) / (p * q * std::sqrt(p + q)) *
         kab * kcd * boys_f0(p * q / (p + q) * (P - Q).squaredNorm());
}

template <typename F>
double contract2(const BasisShell& sa, const BasisShell& sb, F&& f) {
  double v = 0.0;
  for (const auto& pa : sa.primitives)
    for (const auto& pb : sb.primitives)
      v += pa.coefficient * pb.coefficient * f(pa.exponent, pb.exponent);
  return v;
}

}  // namespace detail

/// Coulomb repulsion of unit point charges, positions in Bohr.
inline double nuclear_repulsion(const std::vector<Eigen::Vector3d>& nuclei) {
  double e = 0.0;
  for (size_t i = 0; i < nuclei.size(); ++i)
    for (size_t j = i + 1; j < nuclei.size(); ++j) {
      const double d = (nuclei[i] - nuclei[j]).norm();
      if (d < 1e-8) throw DomainError("nuclear_repulsion: coincident nuclei");
      e += 1.0 / d;
    }
  return e;
}

inline double nuclear_repulsion(const Geometry& g) {
  const auto r = g.positions_bohr();
  std::vector<Eigen::Vector3d> nuclei;
  for (int i = 0; i < 4; ++i) nuclei.push_back(r.col(i));
  return nuclear_repulsion(nuclei);
}

/// Closed-form s-Gaussian integrals over an arbitrary set of unit charges.
inline AOIntegrals compute_ao_integrals(
    const std::vector<Eigen::Vector3d>& nuclei,
    const std::vector<BasisShell>& basis) {
  const int n = int(basis.size());
  AOIntegrals ao;
  ao.S.resize(n, n);
  ao.T.resize(n, n);
  ao.V.resize(n, n);
  ao.eri = EriTensor(n);
  ao.e_nuc = nuclear_repulsion(nuclei);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto& A = basis[i].center;
      const auto& B = basis[j].center;
      ao.S(i, j) = detail::contract2(
          basis[i], basis[j],
          [&](double a, double b) { return detail::s_prim(a, A, b, B); });
      ao.T(i, j) = detail::contract2(
          basis[i], basis[j],
          [&](double a, double b) { return detail::t_prim(a, A, b, B); });
      double v = 0.0;
      for (const auto& C : nuclei)
        v += detail::contract2(basis[i], basis[j], [&](double a, double b) {
          return detail::v_prim(a, A, b, B, C);
        });
      ao.V(i, j) = v;
    }

  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s <= r; ++s) {
          if (p * n + q < r * n + s) continue;
          double v = 0.0;
          for (const auto& pa : basis[p].primitives)
            for (const auto& pb : basis[q].primitives)
              for (const auto& pc : basis[r].primitives)
                for (const auto& pd : basis[s].primitives)
                  v += pa.coefficient * pb.coefficient * pc.coefficient *
                       pd.coefficient *
                       detail::eri_prim(pa.exponent, basis[p].center,
                                        pb.exponent, basis[q].center,
                                        pc.exponent, basis[r].center,
                                        pd.exponent, basis[s].center);
          // 8-fold permutational symmetry of real s orbitals
          ao.eri(p, q, r, s) = v;
          ao.eri(q, p, r, s) = v;
          ao.eri(p, q, s, r) = v;
          ao.eri(q, p, s, r) = v;
          ao.eri(r, s, p, q) = v;
          ao.eri(s, r, p, q) = v;
          ao.eri(r, s, q, p) = v;
          ao.eri(s, r, q, p) = v;
        }
  return ao;
}

inline AOIntegrals compute_ao_integrals(const Geometry& g,
                                        const std::vector<BasisShell>& basis) {
  g.validate();
  const auto r = g.positions_bohr();
  std::vector<Eigen::Vector3d> nuclei;
  for (int i = 0; i < 4; ++i) nuclei.push_back(r.col(i));
  return compute_ao_integrals(nuclei, basis);
}

/// M(i,j) = <chi_i at gA | chi_j at gB>, same basis rule on both geometries.
inline Eigen::MatrixXd cross_ao_overlap(
    const Geometry& gA, const Geometry& gB,
    const std::string& basis_path = default_hydrogen_basis_path()) {
  const auto basA = basis_for_geometry(gA, basis_path);
  const auto basB = basis_for_geometry(gB, basis_path);
  const int n = int(basA.size());
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M(i, j) = detail::contract2(basA[i], basB[j], [&](double a, double b) {
        return detail::s_prim(a, basA[i].center, b, basB[j].center);
      });
  return M;
}

}  // namespace h4ev
