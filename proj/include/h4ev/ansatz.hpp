#pragma once

#include <array>
#include <optional>

#include "h4ev/jordan_wigner.hpp"
#include "h4ev/statevector.hpp"

namespace h4ev {

/// One anti-Hermitian generator of the ansatz pool.
struct Generator {
  enum class Kind { Single, Double };
  Kind kind;
  // Single: {p, q, -1, -1} spatial, p > q (spin-complemented E_pq - E_qp).
  // Double: {c1, c2, a1, a2} spin-orbitals, a+_c1 a+_c2 a_a2 a_a1 - h.c.
  std::array<int, 4> idx;
  PauliSum jw;  // anti-Hermitian qubit image
};

struct ExcitationPool {
  int n_spatial = 0;
  int n_qubits = 0;
  std::vector<Generator> generators;
  std::size_t size() const { return generators.size(); }
};

struct AnsatzParams {
  Eigen::VectorXd t;
  int repetitions = 2;

  static AnsatzParams zeros(std::size_t pool_size, int repetitions = 2) {
    AnsatzParams p;
    p.repetitions = repetitions;
    p.t = Eigen::VectorXd::Zero(pool_size * repetitions);
    return p;
  }
};

namespace detail {

inline bool strings_commute(const PauliString& a, const PauliString& b) {
  const int anti = (std::popcount(a.xmask & b.zmask) +
                    std::popcount(a.zmask & b.xmask)) & 1;
  return anti == 0;
}

inline PauliSum commutator(const PauliSum& a, const PauliSum& b) {
  return (a * b + cplx{-1.0, 0.0} * (b * a)).prune();
}

}  // namespace detail

/// Generalized UCCSD pool: spin-complemented singles over spatial pairs
/// p > q, then all distinct M_S-conserving doubles over unordered pairs of
/// spin-orbital pairs, both in frozen lexicographic order.
inline ExcitationPool build_guccsd_pool(int n_spatial) {
  if (n_spatial < 1) throw DomainError("pool: need at least one orbital");
  const int n = n_spatial, n_so = 2 * n;
  ExcitationPool pool;
  pool.n_spatial = n;
  pool.n_qubits = n_so;

  auto cr = [&](int s) { return detail::jw_creation(s, n_so); };
  auto an = [&](int s) { return detail::jw_annihilation(s, n_so); };

  for (int p = 1; p < n; ++p)
    for (int q = 0; q < p; ++q) {
      PauliSum g(n_so);
      for (int sp : {0, n}) {
        g += cr(p + sp) * an(q + sp);
        g += cplx{-1.0, 0.0} * (cr(q + sp) * an(p + sp));
      }
      pool.generators.push_back(
          {Generator::Kind::Single, {p, q, -1, -1}, g.prune()});
    }

  std::vector<std::array<int, 2>> pairs;
  for (int s1 = 0; s1 < n_so; ++s1)
    for (int s2 = s1 + 1; s2 < n_so; ++s2) pairs.push_back({s1, s2});
  auto beta_count = [&](const std::array<int, 2>& p) {
    return int(p[0] >= n) + int(p[1] >= n);
  };
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (beta_count(pairs[i]) != beta_count(pairs[j])) continue;
      const auto& c = pairs[i];
      const auto& a = pairs[j];
      PauliSum e = cr(c[0]) * cr(c[1]) * an(a[1]) * an(a[0]);
      PauliSum g = (e + cplx{-1.0, 0.0} * e.adjoint()).prune();
      if (g.size() == 0) continue;  // degenerate index combination
      pool.generators.push_back(
          {Generator::Kind::Double, {c[0], c[1], a[0], a[1]}, g});
    }

  for (const auto& gen : pool.generators) {
    if (!gen.jw.is_anti_hermitian())
      throw DomainError("pool: generator is not anti-Hermitian");
    const auto ss = gen.jw.strings();
    for (std::size_t i = 0; i < ss.size(); ++i)
      for (std::size_t j = i + 1; j < ss.size(); ++j)
        if (!detail::strings_commute(ss[i], ss[j]))
          throw DomainError("pool: generator strings do not commute");
  }
  return pool;
}

/// exp(t G) applied exactly: the strings of one generator commute, so the
/// product of the individual Pauli exponentials is the exact exponential.
inline void apply_generator_exp(StateVector& sv, const Generator& gen,
                                double t) {
  for (const auto& p : gen.jw.strings()) {
    // coefficient is i*gamma with gamma real
    PauliString up = p;
    up.coeff = 1.0;
    apply_gate(sv, PauliExpGate{t * p.coeff.imag(), up});
  }
}

/// U(t)|sv>: repetitions applied in order, generators in pool order inside
/// each repetition (parameter layout is repetition-major).
inline StateVector apply_ansatz(StateVector sv, const ExcitationPool& pool,
                                const AnsatzParams& params) {
  const std::size_t m = pool.size();
  if (std::size_t(params.t.size()) != m * params.repetitions)
    throw DomainError("ansatz: parameter length mismatch");
  if (!params.t.allFinite())
    throw DomainError("ansatz: non-finite parameter");
  for (int rep = 0; rep < params.repetitions; ++rep)
    for (std::size_t k = 0; k < m; ++k)
      apply_generator_exp(sv, pool.generators[k], params.t(rep * m + k));
  return sv;
}

/// Reverse-sweep gradient contraction. For an objective whose linearization
/// is df = sum_I 2 Re<lambda_I | d psi_I> with psi_I = U(t) phi_I, returns
/// grad_k = sum_I 2 Re<U_{>k}^dag lambda_I | G_k | U_{<=k} phi_I>.
/// Exact because dU_k/dt_k = G_k U_k (the strings of G_k commute).
inline Eigen::VectorXd ansatz_vjp(const ExcitationPool& pool,
                                  const AnsatzParams& params,
                                  const std::vector<StateVector>& phis,
                                  const std::vector<StateVector>& lambdas) {
  if (phis.size() != lambdas.size())
    throw DomainError("ansatz_vjp: state/cotangent count mismatch");
  const std::size_t m = pool.size();
  const std::size_t M = m * params.repetitions;
  if (std::size_t(params.t.size()) != M)
    throw DomainError("ansatz_vjp: parameter length mismatch");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(M);
  for (std::size_t I = 0; I < phis.size(); ++I) {
    StateVector K = apply_ansatz(phis[I], pool, params);  // U_{<=M-1} phi
    StateVector B = lambdas[I];                            // U_{>M-1}^dag lambda
    for (std::size_t k = M; k-- > 0;) {
      const Generator& gen = pool.generators[k % m];
      grad(k) += 2.0 * inner_product(B, apply(gen.jw, K)).real();
      apply_generator_exp(K, gen, -params.t(k));
      apply_generator_exp(B, gen, -params.t(k));
    }
  }
  return grad;
}

/// Value and exact gradient of f(t) = sum_I <phi_I| U^dag A U |phi_I>.
inline std::pair<double, Eigen::VectorXd> expectation_with_gradient(
    const ExcitationPool& pool, const AnsatzParams& params,
    const std::vector<StateVector>& phis, const PauliSum& A) {
  if (!A.is_hermitian())
    throw DomainError("expectation_with_gradient: operator not Hermitian");
  double value = 0.0;
  std::vector<StateVector> lambdas;
  for (const auto& phi : phis) {
    const StateVector psi = apply_ansatz(phi, pool, params);
    lambdas.push_back(apply(A, psi));
    const cplx v = inner_product(psi, lambdas.back());
    if (std::abs(v.imag()) > 1e-10)
      throw DomainError("expectation_with_gradient: imaginary residue");
    value += v.real();
  }
  return {value, ansatz_vjp(pool, params, phis, lambdas)};
}

}  // namespace h4ev
