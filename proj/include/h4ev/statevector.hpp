#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <variant>
#include <vector>

#include "h4ev/pauli.hpp"

namespace h4ev {

/// Dense 2^N complex state; basis index read as the ket string (qubit q at
/// bit position N-1-q), so an ONV integer is its own basis index.
class StateVector {
 public:
  explicit StateVector(int n_qubits)
      : n_(n_qubits), amps_(Eigen::VectorXcd::Zero(std::size_t(1) << n_qubits)) {}

  int n_qubits() const { return n_; }
  std::size_t dim() const { return amps_.size(); }
  Eigen::VectorXcd& amplitudes() { return amps_; }
  const Eigen::VectorXcd& amplitudes() const { return amps_; }

  cplx amplitude(std::uint32_t basis_index) const {
    return amps_(basis_index);
  }
  cplx amplitude(const std::string& ket) const {
    return amps_(index_of(ket, n_));
  }

  double norm() const { return amps_.norm(); }

  static std::uint32_t index_of(const std::string& ket, int n_qubits) {
    if (int(ket.size()) != n_qubits)
      throw DomainError("statevector: ket length mismatch");
    std::uint32_t idx = 0;
    for (int q = 0; q < n_qubits; ++q) {
      if (ket[q] == '1')
        idx |= 1u << (n_qubits - 1 - q);
      else if (ket[q] != '0')
        throw DomainError("statevector: ket must be 0/1 characters");
    }
    return idx;
  }

 private:
  int n_;
  Eigen::VectorXcd amps_;
};

inline StateVector prepare_onv(const std::string& ket) {
  StateVector sv(int(ket.size()));
  sv.amplitudes()(StateVector::index_of(ket, sv.n_qubits())) = 1.0;
  return sv;
}

inline StateVector prepare_onv(std::uint32_t onv, int n_qubits) {
  StateVector sv(n_qubits);
  sv.amplitudes()(onv) = 1.0;
  return sv;
}

inline cplx inner_product(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits())
    throw DomainError("statevector: qubit-count mismatch");
  return a.amplitudes().dot(b.amplitudes());  // Eigen dot conjugates the left
}

// ---------------------------------------------------------------- gates

struct XGate { int target; };
struct ZGate { int target; };
struct RyGate { int target; double angle; };         // exp(-i angle Y/2)
struct CXGate { int control, target; };
struct CRyGate { int control, target; double angle; };
struct PauliExpGate {                                // exp(i angle P)
  double angle;
  PauliString p;  // coefficient must be real; it scales the angle
};

using Gate = std::variant<XGate, ZGate, RyGate, CXGate, CRyGate, PauliExpGate>;

namespace detail {

inline std::uint32_t qbit(int q, int n) {
  if (q < 0 || q >= n) throw DomainError("gate: qubit index out of range");
  return 1u << (n - 1 - q);
}

/// out += coeff * P * in, exploiting P's permutation-with-phase structure.
inline void accumulate_pauli(const PauliString& p, const Eigen::VectorXcd& in,
                             Eigen::VectorXcd& out, cplx scale = {1.0, 0.0}) {
  static const cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const cplx pref = p.coeff * scale * kIPow[p.y_count() & 3];
  const std::size_t dim = in.size();
  for (std::size_t i = 0; i < dim; ++i) {
    const cplx a = in(i);
    if (a == cplx{0.0, 0.0}) continue;
    const double sgn = std::popcount(std::uint32_t(i) & p.zmask) & 1 ? -1.0 : 1.0;
    out(i ^ p.xmask) += pref * sgn * a;
  }
}

}  // namespace detail

/// P|v> for a single Pauli string.
inline StateVector apply(const PauliString& p, const StateVector& sv) {
  if (p.n_qubits != sv.n_qubits())
    throw DomainError("pauli apply: qubit-count mismatch");
  StateVector out(sv.n_qubits());
  detail::accumulate_pauli(p, sv.amplitudes(), out.amplitudes());
  return out;
}

/// (sum of strings)|v>.
inline StateVector apply(const PauliSum& op, const StateVector& sv) {
  if (op.n_qubits() != sv.n_qubits())
    throw DomainError("pauli apply: qubit-count mismatch");
  StateVector out(sv.n_qubits());
  for (const auto& p : op.strings())
    detail::accumulate_pauli(p, sv.amplitudes(), out.amplitudes());
  return out;
}

inline void apply_gate(StateVector& sv, const Gate& gate) {
  const int n = sv.n_qubits();
  auto& a = sv.amplitudes();
  const std::size_t dim = sv.dim();

  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, XGate>) {
          const std::uint32_t t = detail::qbit(g.target, n);
          for (std::size_t i = 0; i < dim; ++i)
            if (!(i & t)) std::swap(a(i), a(i | t));
        } else if constexpr (std::is_same_v<T, ZGate>) {
          const std::uint32_t t = detail::qbit(g.target, n);
          for (std::size_t i = 0; i < dim; ++i)
            if (i & t) a(i) = -a(i);
        } else if constexpr (std::is_same_v<T, RyGate>) {
          const std::uint32_t t = detail::qbit(g.target, n);
          const double c = std::cos(0.5 * g.angle), s = std::sin(0.5 * g.angle);
          for (std::size_t i = 0; i < dim; ++i)
            if (!(i & t)) {
              const cplx lo = a(i), hi = a(i | t);
              a(i) = c * lo - s * hi;
              a(i | t) = s * lo + c * hi;
            }
        } else if constexpr (std::is_same_v<T, CXGate>) {
          const std::uint32_t t = detail::qbit(g.target, n);
          const std::uint32_t c = detail::qbit(g.control, n);
          if (t == c) throw DomainError("gate: control equals target");
          for (std::size_t i = 0; i < dim; ++i)
            if ((i & c) && !(i & t)) std::swap(a(i), a(i | t));
        } else if constexpr (std::is_same_v<T, CRyGate>) {
          const std::uint32_t t = detail::qbit(g.target, n);
          const std::uint32_t c = detail::qbit(g.control, n);
          if (t == c) throw DomainError("gate: control equals target");
          const double co = std::cos(0.5 * g.angle), s = std::sin(0.5 * g.angle);
          for (std::size_t i = 0; i < dim; ++i)
            if ((i & c) && !(i & t)) {
              const cplx lo = a(i), hi = a(i | t);
              a(i) = co * lo - s * hi;
              a(i | t) = s * lo + co * hi;
            }
        } else if constexpr (std::is_same_v<T, PauliExpGate>) {
          if (g.p.n_qubits != n)
            throw DomainError("gate: Pauli-exponential qubit-count mismatch");
          if (std::abs(g.p.coeff.imag()) > 1e-14)
            throw DomainError("gate: Pauli-exponential needs a real coefficient");
          // exp(i a P) v = cos(a) v + i sin(a) P v, P unsigned (P^2 = I)
          const double alpha = g.angle * g.p.coeff.real();
          PauliString unsigned_p = g.p;
          unsigned_p.coeff = 1.0;
          Eigen::VectorXcd pv = Eigen::VectorXcd::Zero(dim);
          detail::accumulate_pauli(unsigned_p, a, pv);
          a = std::cos(alpha) * a + cplx{0.0, 1.0} * std::sin(alpha) * pv;
        }
      },
      gate);
}

inline StateVector apply_circuit(StateVector sv, const std::vector<Gate>& circuit) {
  for (const auto& g : circuit) apply_gate(sv, g);
  return sv;
}

/// <v|op|v> for Hermitian op; the residual imaginary part is asserted small.
inline double expectation(const StateVector& sv, const PauliSum& op) {
  if (!op.is_hermitian())
    throw DomainError("expectation: operator is not Hermitian");
  const cplx val = inner_product(sv, apply(op, sv));
  if (std::abs(val.imag()) > 1e-10)
    throw DomainError("expectation: imaginary residue exceeds tolerance");
  return val.real();
}

/// Dense matrix of a Pauli sum (test oracle; guarded to small registers).
inline Eigen::MatrixXcd pauli_sum_matrix(const PauliSum& op) {
  const int n = op.n_qubits();
  if (n > 12) throw DomainError("pauli_sum_matrix: register too large");
  const std::size_t dim = std::size_t(1) << n;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
  static const cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (const auto& p : op.strings()) {
    const cplx pref = p.coeff * kIPow[p.y_count() & 3];
    for (std::size_t i = 0; i < dim; ++i) {
      const double sgn =
          std::popcount(std::uint32_t(i) & p.zmask) & 1 ? -1.0 : 1.0;
      M(i ^ p.xmask, i) += pref * sgn;
    }
  }
  return M;
}

}  // namespace h4ev
