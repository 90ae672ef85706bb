#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "h4ev/scf.hpp"

namespace h4ev {

/// One- and two-electron integrals in an orthonormal MO basis.
struct MOIntegrals {
  Eigen::MatrixXd h;  // h_pq, Hartree
  EriTensor g;        // (pq|rs) chemists' notation, Hartree
  double e_nuc = 0.0;
  MOKind basis_kind = MOKind::CanonicalROHF;
  int n_orb() const { return int(h.rows()); }
};

inline MOIntegrals ao_to_mo(const AOIntegrals& ao, const MOBasis& mo) {
  const int n = int(ao.S.rows());
  if (mo.C.rows() != n || mo.C.cols() != n)
    throw DomainError("ao_to_mo: dimension mismatch");
  MOIntegrals mi;
  mi.h = mo.C.transpose() * (ao.T + ao.V) * mo.C;
  mi.e_nuc = ao.e_nuc;
  mi.basis_kind = mo.kind;
  mi.g = EriTensor(n);
  // four sequential quarter-transforms
  std::vector<double> t1(size_t(n) * n * n * n, 0.0), t2(t1);
  auto idx = [n](int p, int q, int r, int s) {
    return ((size_t(p) * n + q) * n + r) * n + s;
  };
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          double v = 0.0;
          for (int mu = 0; mu < n; ++mu) v += mo.C(mu, p) * ao.eri(mu, q, r, s);
          t1[idx(p, q, r, s)] = v;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          double v = 0.0;
          for (int nu = 0; nu < n; ++nu) v += mo.C(nu, q) * t1[idx(p, nu, r, s)];
          t2[idx(p, q, r, s)] = v;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          double v = 0.0;
          for (int la = 0; la < n; ++la) v += mo.C(la, r) * t2[idx(p, q, la, s)];
          t1[idx(p, q, r, s)] = v;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          double v = 0.0;
          for (int si = 0; si < n; ++si) v += mo.C(si, s) * t1[idx(p, q, r, si)];
          mi.g(p, q, r, s) = v;
        }
  return mi;
}

/// Occupation-number vector over 2*n_orb spin-orbitals, alpha block
/// (spin-orbitals 0..n_orb-1) before beta. Spin-orbital s occupies bit
/// position (2*n_orb - 1 - s), so the integer reads like the ket string and
/// doubles as the state-vector basis index.
struct Determinant {
  std::uint32_t onv = 0;
  int n_so = 8;  // spin-orbital count

  bool occupied(int s) const { return (onv >> (n_so - 1 - s)) & 1u; }
  int n_el() const { return std::popcount(onv); }
  bool operator==(const Determinant&) const = default;

  std::string to_ket() const {
    std::string k(n_so, '0');
    for (int s = 0; s < n_so; ++s)
      if (occupied(s)) k[s] = '1';
    return k;
  }
  static Determinant from_ket(const std::string& k) {
    Determinant d;
    d.n_so = int(k.size());
    d.onv = 0;
    for (int s = 0; s < d.n_so; ++s) {
      if (k[s] == '1')
        d.onv |= 1u << (d.n_so - 1 - s);
      else if (k[s] != '0')
        throw DomainError("determinant: ket must be 0/1 characters");
    }
    return d;
  }
};

namespace detail {

/// Parity of occupied spin-orbitals with index < s (the Jordan-Wigner /
/// ascending-creation sign convention).
inline int phase_below(std::uint32_t onv, int n_so, int s) {
  return std::popcount(onv >> (n_so - s)) & 1 ? -1 : 1;
}

struct SpinOrb {
  int spatial;
  bool beta;
};

inline SpinOrb spin_orb(int s, int n_orb) {
  return {s < n_orb ? s : s - n_orb, s >= n_orb};
}

}  // namespace detail

/// All determinants with n_el electrons (optionally in the given M_S sector),
/// ordered by ascending ONV integer (lexicographic on the ket string).
inline std::vector<Determinant> determinant_basis(int n_spatial, int n_el,
                                                  const double* ms = nullptr) {
  if (n_el < 0 || n_el > 2 * n_spatial)
    throw DomainError("determinant_basis: infeasible electron count");
  const int n_so = 2 * n_spatial;
  std::vector<Determinant> out;
  for (std::uint32_t i = 0; i < (1u << n_so); ++i) {
    if (std::popcount(i) != n_el) continue;
    if (ms) {
      int na = 0;
      for (int s = 0; s < n_spatial; ++s) na += (i >> (n_so - 1 - s)) & 1;
      const double m = na - 0.5 * n_el;
      if (std::abs(m - *ms) > 1e-9) continue;
    }
    out.push_back({i, n_so});
  }
  return out;
}

/// <di|H|dj> by the Slater-Condon rules; diagonal includes e_nuc.
inline double slater_condon_element(const Determinant& di,
                                    const Determinant& dj,
                                    const MOIntegrals& mi) {
  const int n = mi.n_orb();
  const int n_so = 2 * n;
  if (di.n_el() != dj.n_el())
    throw DomainError("slater_condon: particle numbers differ");
  const std::uint32_t diff = di.onv ^ dj.onv;
  const int ndiff = std::popcount(diff) / 2;
  if (ndiff > 2) return 0.0;

  auto h_so = [&](int p, int q) {
    const auto a = detail::spin_orb(p, n), b = detail::spin_orb(q, n);
    return a.beta == b.beta ? mi.h(a.spatial, b.spatial) : 0.0;
  };
  // chemists' (pq|rs) over spin-orbitals
  auto g_so = [&](int p, int q, int r, int s) {
    const auto a = detail::spin_orb(p, n), b = detail::spin_orb(q, n);
    const auto c = detail::spin_orb(r, n), d = detail::spin_orb(s, n);
    if (a.beta != b.beta || c.beta != d.beta) return 0.0;
    return mi.g(a.spatial, b.spatial, c.spatial, d.spatial);
  };

  if (ndiff == 0) {
    double e = mi.e_nuc;
    for (int s = 0; s < n_so; ++s) {
      if (!di.occupied(s)) continue;
      e += h_so(s, s);
      for (int t = 0; t < n_so; ++t)
        if (di.occupied(t))
          e += 0.5 * (g_so(s, s, t, t) - g_so(s, t, t, s));
    }
    return e;
  }

  if (ndiff == 1) {
    int i = -1, a = -1;  // i occupied in dj only, a in di only
    for (int s = 0; s < n_so; ++s) {
      if (!((diff >> (n_so - 1 - s)) & 1u)) continue;
      (dj.occupied(s) ? i : a) = s;
    }
    const int sign = detail::phase_below(dj.onv, n_so, i) *
                     detail::phase_below(dj.onv & ~(1u << (n_so - 1 - i)),
                                         n_so, a);
    double e = h_so(a, i);
    for (int k = 0; k < n_so; ++k)
      if (dj.occupied(k) && k != i)
        e += g_so(a, i, k, k) - g_so(a, k, k, i);
    return sign * e;
  }

  // two-orbital difference: dj exclusive {i<j}, di exclusive {a<b}
  int i = -1, j = -1, a = -1, b = -1;
  for (int s = 0; s < n_so; ++s) {
    if (!((diff >> (n_so - 1 - s)) & 1u)) continue;
    if (dj.occupied(s))
      (i < 0 ? i : j) = s;
    else
      (a < 0 ? a : b) = s;
  }
  // sign of <di| a+_a a+_b a_j a_i |dj>
  std::uint32_t w = dj.onv;
  int sign = detail::phase_below(w, n_so, i);
  w &= ~(1u << (n_so - 1 - i));
  sign *= detail::phase_below(w, n_so, j);
  w &= ~(1u << (n_so - 1 - j));
  sign *= detail::phase_below(w, n_so, b);
  w |= 1u << (n_so - 1 - b);
  sign *= detail::phase_below(w, n_so, a);
  return sign * (g_so(a, i, b, j) - g_so(a, j, b, i));
}

struct FCIResult {
  std::vector<Determinant> basis;
  Eigen::VectorXd eigenvalues;   // ascending, Hartree
  Eigen::MatrixXd eigenvectors;  // columns over the Determinant basis
};

inline Eigen::MatrixXd fci_matrix(const MOIntegrals& mi,
                                  const std::vector<Determinant>& basis) {
  const int m = int(basis.size());
  Eigen::MatrixXd H(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = r; c < m; ++c) {
      H(r, c) = slater_condon_element(basis[r], basis[c], mi);
      H(c, r) = H(r, c);
    }
  return H;
}

/// Dense FCI in an (n_el, M_S) sector; eigenvector phases fixed so the
/// largest-magnitude coefficient of each column is positive.
inline FCIResult fci_solve(const MOIntegrals& mi, int n_el = 3,
                           double ms = 0.5) {
  FCIResult res;
  res.basis = determinant_basis(mi.n_orb(), n_el, &ms);
  if (res.basis.empty()) throw DomainError("fci_solve: empty sector");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fci_matrix(mi, res.basis));
  res.eigenvalues = es.eigenvalues();
  res.eigenvectors = es.eigenvectors();
  detail::fix_column_phases(res.eigenvectors);
  return res;
}

/// S^2 = S-S+ + Sz(Sz+1) over the given determinant basis.
inline Eigen::MatrixXd s2_matrix(const std::vector<Determinant>& basis) {
  if (basis.empty()) throw DomainError("s2_matrix: empty basis");
  const int n_so = basis[0].n_so;
  const int n = n_so / 2;
  const int m = int(basis.size());

  std::unordered_map<std::uint32_t, int> index;
  for (int k = 0; k < m; ++k) index.emplace(basis[k].onv, k);

  Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(m, m);
  for (int c = 0; c < m; ++c) {
    const Determinant& d = basis[c];
    int na = 0, nb = 0;
    for (int s = 0; s < n; ++s) {
      na += d.occupied(s);
      nb += d.occupied(s + n);
    }
    const double sz = 0.5 * (na - nb);
    S2(c, c) += sz * (sz + 1.0);

    // S-S+ |d> : S+ = sum_p a+_{p,alpha} a_{p,beta}
    for (int p = 0; p < n; ++p) {
      if (!d.occupied(p + n) || d.occupied(p)) continue;
      std::uint32_t w = d.onv;
      int sign = detail::phase_below(w, n_so, p + n);
      w &= ~(1u << (n_so - 1 - (p + n)));
      sign *= detail::phase_below(w, n_so, p);
      w |= 1u << (n_so - 1 - p);
      // S- = sum_q a+_{q,beta} a_{q,alpha}
      for (int q = 0; q < n; ++q) {
        const bool occ_qa = (w >> (n_so - 1 - q)) & 1u;
        const bool occ_qb = (w >> (n_so - 1 - (q + n))) & 1u;
        if (!occ_qa || occ_qb) continue;
        std::uint32_t v = w;
        int sgn2 = detail::phase_below(v, n_so, q);
        v &= ~(1u << (n_so - 1 - q));
        sgn2 *= detail::phase_below(v, n_so, q + n);
        v |= 1u << (n_so - 1 - (q + n));
        auto it = index.find(v);
        if (it != index.end()) S2(it->second, c) += sign * sgn2;
      }
    }
  }
  return S2;
}

}  // namespace h4ev
