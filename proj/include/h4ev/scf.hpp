#pragma once

#include <Eigen/Dense>
#include <deque>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "h4ev/core.hpp"
#include "h4ev/integrals.hpp"

namespace h4ev {

enum class MOKind { CanonicalROHF, Lowdin, Diabatic };

inline std::string to_string(MOKind k) {
  switch (k) {
    case MOKind::CanonicalROHF: return "canonical-rohf";
    case MOKind::Lowdin: return "lowdin";
    case MOKind::Diabatic: return "diabatic";
  }
  throw DomainError("mo: bad kind");
}

inline MOKind mo_kind_from_string(const std::string& s) {
  if (s == "canonical-rohf") return MOKind::CanonicalROHF;
  if (s == "lowdin") return MOKind::Lowdin;
  if (s == "diabatic") return MOKind::Diabatic;
  throw DomainError("mo: unknown kind '" + s + "'");
}

/// AO->MO coefficients, columns are MOs.
struct MOBasis {
  Eigen::MatrixXd C;
  MOKind kind = MOKind::CanonicalROHF;
  std::optional<Eigen::VectorXd> orbital_energies;
  std::string reference;  // geometry tag, diabatic only
  double scf_energy = 0.0;
};

namespace detail {

/// Fix each column phase: largest-|coeff| entry positive.
inline void fix_column_phases(Eigen::MatrixXd& C) {
  for (int j = 0; j < C.cols(); ++j) {
    int imax = 0;
    C.col(j).cwiseAbs().maxCoeff(&imax);
    if (C(imax, j) < 0.0) C.col(j) = -C.col(j);
  }
}

inline Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& S,
                                        double floor = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.eigenvalues().minCoeff() < floor)
    throw DomainError("scf: overlap matrix near-singular");
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Coulomb J[D] and exchange K[D] from the dense (pq|rs) tensor.
inline Eigen::MatrixXd coulomb(const EriTensor& g, const Eigen::MatrixXd& D) {
  const int n = g.n();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) J(p, q) += g(p, q, r, s) * D(r, s);
  return J;
}

inline Eigen::MatrixXd exchange(const EriTensor& g, const Eigen::MatrixXd& D) {
  const int n = g.n();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) K(p, q) += g(p, r, q, s) * D(r, s);
  return K;
}

}  // namespace detail

/// Restricted open-shell HF with the Roothaan single effective Fock matrix.
/// DIIS (subspace 8) plus 0.3 damping on the first 5 iterations.
inline MOBasis rohf(const AOIntegrals& ao, int n_alpha = 2, int n_beta = 1) {
  const int n = int(ao.S.rows());
  if (!(n_alpha >= n_beta && n_beta >= 0) || n_alpha + n_beta > 2 * n)
    throw DomainError("rohf: bad electron counts");

  const Eigen::MatrixXd h = ao.T + ao.V;
  const Eigen::MatrixXd X = detail::inverse_sqrt_spd(ao.S);

  // core guess
  Eigen::MatrixXd C;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X.transpose() * h * X);
    C = X * es.eigenvectors();
  }

  constexpr int kMaxIter = 200, kDiisSize = 8, kDampIters = 5;
  constexpr double kDamping = 0.3;
  std::deque<Eigen::MatrixXd> diis_f, diis_e;
  Eigen::MatrixXd F_prev;
  Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
  double e_prev = 0.0, de = 1.0, dd = 1.0;
  Eigen::MatrixXd D_prev = Eigen::MatrixXd::Zero(n, n);
  double energy = 0.0;

  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::MatrixXd Ca = C.leftCols(n_alpha);
    const Eigen::MatrixXd Cb = C.leftCols(n_beta);
    const Eigen::MatrixXd Da = Ca * Ca.transpose();
    const Eigen::MatrixXd Db = Cb * Cb.transpose();
    const Eigen::MatrixXd J = detail::coulomb(ao.eri, Da + Db);
    const Eigen::MatrixXd Fa = h + J - detail::exchange(ao.eri, Da);
    const Eigen::MatrixXd Fb = h + J - detail::exchange(ao.eri, Db);

    energy = 0.5 * ((Da * (h + Fa)).trace() + (Db * (h + Fb)).trace()) +
             ao.e_nuc;

    // Roothaan coupling in the current MO basis:
    // closed-closed/virtual and closed-virtual blocks take Fc=(Fa+Fb)/2,
    // closed-open takes Fb, open-virtual takes Fa.
    const Eigen::MatrixXd Fa_mo = C.transpose() * Fa * C;
    const Eigen::MatrixXd Fb_mo = C.transpose() * Fb * C;
    const Eigen::MatrixXd Fc_mo = 0.5 * (Fa_mo + Fb_mo);
    Eigen::MatrixXd Feff_mo = Fc_mo;
    auto block_of = [&](int p) {
      return p < n_beta ? 0 : (p < n_alpha ? 1 : 2);  // closed/open/virtual
    };
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        const int bp = block_of(p), bq = block_of(q);
        if ((bp == 0 && bq == 1) || (bp == 1 && bq == 0))
          Feff_mo(p, q) = Fb_mo(p, q);
        else if ((bp == 1 && bq == 2) || (bp == 2 && bq == 1))
          Feff_mo(p, q) = Fa_mo(p, q);
      }
    const Eigen::MatrixXd SC = ao.S * C;
    Eigen::MatrixXd Feff = SC * Feff_mo * SC.transpose();

    if (it < kDampIters && it > 0) Feff = (1.0 - kDamping) * Feff + kDamping * F_prev;
    F_prev = Feff;

    // DIIS on the orthogonalized effective-Fock commutator residual
    const Eigen::MatrixXd D = Da + Db;
    const Eigen::MatrixXd err =
        X.transpose() * (Feff * D * ao.S - ao.S * D * Feff) * X;
    diis_f.push_back(Feff);
    diis_e.push_back(err);
    if (int(diis_f.size()) > kDiisSize) {
      diis_f.pop_front();
      diis_e.pop_front();
    }
    if (diis_f.size() >= 2) {
      const int m = int(diis_f.size());
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m + 1, m + 1);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          B(i, j) = (diis_e[i].array() * diis_e[j].array()).sum();
      B.row(m).setConstant(-1.0);
      B.col(m).setConstant(-1.0);
      B(m, m) = 0.0;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
      rhs(m) = -1.0;
      const Eigen::VectorXd c = B.fullPivLu().solve(rhs);
      if (c.allFinite()) {
        Feff.setZero();
        for (int i = 0; i < m; ++i) Feff += c(i) * diis_f[i];
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X.transpose() * Feff * X);
    C = X * es.eigenvectors();
    eps = es.eigenvalues();

    de = std::abs(energy - e_prev);
    dd = (D - D_prev).cwiseAbs().maxCoeff();
    e_prev = energy;
    D_prev = D;
    // the ΔE/ΔD tests alone can fire on a transient stall, so also require a
    // small orbital-gradient (commutator) residual
    if (it > 0 && de < 1e-10 && dd < 1e-8 && err.norm() < 1e-7) {
      detail::fix_column_phases(C);
      MOBasis mo;
      mo.C = C;
      mo.kind = MOKind::CanonicalROHF;
      mo.orbital_energies = eps;
      mo.scf_energy = energy;
      return mo;
    }
  }
  throw ConvergenceError("rohf: not converged after 200 iterations",
                         std::max(de, dd));
}

/// Symmetric (Lowdin) orthogonalization: C = S^{-1/2}.
inline MOBasis lowdin_orbitals(const AOIntegrals& ao) {
  MOBasis mo;
  mo.C = detail::inverse_sqrt_spd(ao.S);
  mo.kind = MOKind::Lowdin;
  return mo;
}

/// Rotates C_cur by the orthogonal Procrustes transform that maximizes the
/// summed overlap with the reference orbitals. M(i,j) = <chi_i(ref)|chi_j(cur)>.
inline MOBasis diabatic_mos(const MOBasis& mo_ref, const MOBasis& mo_cur,
                            const Eigen::MatrixXd& M,
                            const std::string& reference_tag = "") {
  const Eigen::MatrixXd O_mo = mo_ref.C.transpose() * M * mo_cur.C;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      O_mo, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() < 1e-6)
    throw DomainError("diabatic_mos: MO overlap near-singular, "
                      "reference geometry ill-matched");
  MOBasis mo;
  mo.C = mo_cur.C * (svd.matrixV() * svd.matrixU().transpose());
  mo.kind = MOKind::Diabatic;
  mo.reference = reference_tag;
  return mo;
}

inline void save_mo_basis(const MOBasis& mo, std::ostream& os,
                          const std::string& geometry_hash) {
  os << "mo-basis " << to_string(mo.kind) << " " << geometry_hash << " "
     << mo.C.rows() << "\n";
  os.precision(17);
  for (int i = 0; i < mo.C.rows(); ++i) {
    for (int j = 0; j < mo.C.cols(); ++j) os << (j ? " " : "") << mo.C(i, j);
    os << "\n";
  }
}

inline MOBasis load_mo_basis(std::istream& is, std::string* geometry_hash = nullptr) {
  std::string magic, kind, hash;
  int n = 0;
  if (!(is >> magic >> kind >> hash >> n) || magic != "mo-basis" || n <= 0)
    throw DomainError("mo: malformed basis file header");
  MOBasis mo;
  mo.kind = mo_kind_from_string(kind);
  mo.C.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(is >> mo.C(i, j))) throw DomainError("mo: truncated basis file");
  if (geometry_hash) *geometry_hash = hash;
  return mo;
}

}  // namespace h4ev
