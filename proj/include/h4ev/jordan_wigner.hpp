#pragma once

#include "h4ev/pauli.hpp"
#include "h4ev/secondq.hpp"

namespace h4ev {

namespace detail {

/// a+_s = Z_0...Z_{s-1} (X_s - iY_s)/2 on an n_so-qubit register.
inline PauliSum jw_creation(int s, int n_so) {
  std::string zx(n_so, 'I'), zy(n_so, 'I');
  for (int q = 0; q < s; ++q) {
    zx[q] = 'Z';
    zy[q] = 'Z';
  }
  zx[s] = 'X';
  zy[s] = 'Y';
  PauliSum op(n_so);
  op += PauliString::from_letters(zx, {0.5, 0.0});
  op += PauliString::from_letters(zy, {0.0, -0.5});
  return op;
}

inline PauliSum jw_annihilation(int s, int n_so) {
  return jw_creation(s, n_so).adjoint();
}

}  // namespace detail

/// Qubit image of the second-quantized Hamiltonian, including e_nuc * I.
/// Spin-orbital s maps to qubit s (alpha block 0..n-1, then beta).
inline PauliSum jordan_wigner(const MOIntegrals& mi) {
  const int n = mi.n_orb();
  const int n_so = 2 * n;

  std::vector<PauliSum> cr, an;
  for (int s = 0; s < n_so; ++s) {
    cr.push_back(detail::jw_creation(s, n_so));
    an.push_back(detail::jw_annihilation(s, n_so));
  }

  PauliSum H = PauliSum::identity(n_so, {mi.e_nuc, 0.0});
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (std::abs(mi.h(p, q)) < 1e-15) continue;
      for (int sp : {0, n})
        H += cplx{mi.h(p, q), 0.0} * (cr[p + sp] * an[q + sp]);
    }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          const double g = mi.g(p, q, r, s);
          if (std::abs(g) < 1e-15) continue;
          for (int sp : {0, n})
            for (int tp : {0, n})
              H += cplx{0.5 * g, 0.0} *
                   (cr[p + sp] * cr[r + tp] * an[s + tp] * an[q + sp]);
        }
  return H.prune();
}

/// Qubit image of S^2 = S-S+ + Sz(Sz+1) on the 2*n_spatial register.
inline PauliSum jw_s2(int n_spatial = 4) {
  const int n_so = 2 * n_spatial;
  PauliSum s_plus(n_so), s_z(n_so);
  for (int p = 0; p < n_spatial; ++p) {
    s_plus += detail::jw_creation(p, n_so) *
              detail::jw_annihilation(p + n_spatial, n_so);
    // n_s = (I - Z_s)/2
    std::string za(n_so, 'I'), zb(n_so, 'I');
    za[p] = 'Z';
    zb[p + n_spatial] = 'Z';
    s_z += PauliString::from_letters(za, {-0.5, 0.0});
    s_z += PauliString::from_letters(zb, {0.5, 0.0});
  }
  s_z *= cplx{0.5, 0.0};
  const PauliSum s_minus = s_plus.adjoint();
  return (s_minus * s_plus + s_z * s_z + s_z).prune();
}

}  // namespace h4ev
