#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "h4ev/core.hpp"

namespace h4ev {

using cplx = std::complex<double>;

/// One tensor product of single-qubit Paulis times a complex coefficient.
/// Qubit q lives at bit position (n_qubits - 1 - q), so masks read like ket
/// strings. xmask marks X and Y qubits, zmask marks Z and Y qubits.
struct PauliString {
  std::uint32_t xmask = 0;
  std::uint32_t zmask = 0;
  int n_qubits = 0;
  cplx coeff{1.0, 0.0};

  char letter(int q) const {
    const std::uint32_t bit = 1u << (n_qubits - 1 - q);
    const bool x = xmask & bit, z = zmask & bit;
    return x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
  }

  int y_count() const { return std::popcount(xmask & zmask); }

  static PauliString from_letters(const std::string& letters,
                                  cplx coeff = {1.0, 0.0}) {
    PauliString p;
    p.n_qubits = int(letters.size());
    p.coeff = coeff;
    for (int q = 0; q < p.n_qubits; ++q) {
      const std::uint32_t bit = 1u << (p.n_qubits - 1 - q);
      switch (letters[q]) {
        case 'I': break;
        case 'X': p.xmask |= bit; break;
        case 'Y': p.xmask |= bit; p.zmask |= bit; break;
        case 'Z': p.zmask |= bit; break;
        default: throw DomainError("pauli: bad letter in string");
      }
    }
    return p;
  }

  std::string letters() const {
    std::string s(n_qubits, 'I');
    for (int q = 0; q < n_qubits; ++q) s[q] = letter(q);
    return s;
  }
};

/// Product of two Pauli strings, tracking the accumulated phase.
inline PauliString operator*(const PauliString& a, const PauliString& b) {
  if (a.n_qubits != b.n_qubits)
    throw DomainError("pauli: qubit-count mismatch in product");
  PauliString r;
  r.n_qubits = a.n_qubits;
  r.xmask = a.xmask ^ b.xmask;
  r.zmask = a.zmask ^ b.zmask;
  // per-qubit phase of L_a * L_b = phase * L_r
  static const cplx kI{0.0, 1.0};
  cplx phase{1.0, 0.0};
  for (int q = 0; q < a.n_qubits; ++q) {
    const char la = a.letter(q), lb = b.letter(q);
    if (la == 'I' || lb == 'I' || la == lb) continue;
    // XY=iZ, YZ=iX, ZX=iY; reversed order gives -i
    const bool forward = (la == 'X' && lb == 'Y') ||
                         (la == 'Y' && lb == 'Z') ||
                         (la == 'Z' && lb == 'X');
    phase *= forward ? kI : -kI;
  }
  r.coeff = a.coeff * b.coeff * phase;
  return r;
}

/// Canonicalized linear combination of Pauli strings.
class PauliSum {
 public:
  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_(n_qubits) {}

  int n_qubits() const { return n_; }

  static PauliSum identity(int n_qubits, cplx coeff = {1.0, 0.0}) {
    PauliSum s(n_qubits);
    PauliString p;
    p.n_qubits = n_qubits;
    p.coeff = coeff;
    s += p;
    return s;
  }

  PauliSum& operator+=(const PauliString& p) {
    if (n_ == 0) n_ = p.n_qubits;
    if (p.n_qubits != n_) throw DomainError("pauli: qubit-count mismatch");
    terms_[{p.xmask, p.zmask}] += p.coeff;
    return *this;
  }

  PauliSum& operator+=(const PauliSum& o) {
    for (const auto& p : o.strings()) *this += p;
    return *this;
  }

  PauliSum& operator*=(cplx c) {
    for (auto& [k, v] : terms_) v *= c;
    return *this;
  }

  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator*(PauliSum a, cplx c) { return a *= c; }
  friend PauliSum operator*(cplx c, PauliSum a) { return a *= c; }

  friend PauliSum operator*(const PauliSum& a, const PauliSum& b) {
    PauliSum r(a.n_ ? a.n_ : b.n_);
    for (const auto& pa : a.strings())
      for (const auto& pb : b.strings()) r += pa * pb;
    return r;
  }

  /// Drops terms with |coeff| below the threshold.
  PauliSum& prune(double threshold = 1e-14) {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = std::abs(it->second) < threshold ? terms_.erase(it) : ++it;
    return *this;
  }

  std::size_t size() const { return terms_.size(); }

  std::vector<PauliString> strings() const {
    std::vector<PauliString> out;
    out.reserve(terms_.size());
    for (const auto& [k, v] : terms_) {
      PauliString p;
      p.xmask = k.first;
      p.zmask = k.second;
      p.n_qubits = n_;
      p.coeff = v;
      out.push_back(p);
    }
    return out;
  }

  /// A sum of distinct Pauli strings is Hermitian iff all coefficients are real.
  bool is_hermitian(double tol = 1e-12) const {
    for (const auto& [k, v] : terms_)
      if (std::abs(v.imag()) > tol) return false;
    return true;
  }

  bool is_anti_hermitian(double tol = 1e-12) const {
    for (const auto& [k, v] : terms_)
      if (std::abs(v.real()) > tol) return false;
    return true;
  }

  PauliSum adjoint() const {
    PauliSum r(n_);
    for (const auto& [k, v] : terms_) r.terms_[k] = std::conj(v);
    return r;
  }

  /// One term per line: "re im letters".
  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& p : strings())
      os << p.coeff.real() << " " << p.coeff.imag() << " " << p.letters()
         << "\n";
    return os.str();
  }

  static PauliSum from_text(std::istream& in) {
    PauliSum s;
    double re, im;
    std::string letters;
    while (in >> re >> im >> letters)
      s += PauliString::from_letters(letters, {re, im});
    if (s.size() == 0) throw DomainError("pauli: empty serialized sum");
    return s;
  }

 private:
  int n_ = 0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, cplx> terms_;
};

}  // namespace h4ev
