#pragma once

#include "h4ev/ansatz.hpp"
#include "h4ev/secondq.hpp"

namespace h4ev {

/// A fixed (N_el, M_S) determinant subspace. Every pool generator, the
/// Hamiltonian, and S^2 preserve it, so the hot optimization loop can run on
/// real vectors of this dimension instead of the full 2^N register.
struct SectorSpace {
  std::vector<Determinant> basis;  // ascending ONV order
  std::unordered_map<std::uint32_t, int> index;
  int n_so = 8;

  static SectorSpace build(int n_spatial, int n_el, double ms) {
    SectorSpace s;
    s.n_so = 2 * n_spatial;
    s.basis = determinant_basis(n_spatial, n_el, &ms);
    if (s.basis.empty()) throw DomainError("sector: empty subspace");
    for (int k = 0; k < int(s.basis.size()); ++k)
      s.index.emplace(s.basis[k].onv, k);
    return s;
  }

  int dim() const { return int(basis.size()); }

  int index_of(std::uint32_t onv) const {
    const auto it = index.find(onv);
    if (it == index.end()) throw DomainError("sector: ONV outside subspace");
    return it->second;
  }

  Eigen::VectorXd unit(std::uint32_t onv) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim());
    v(index_of(onv)) = 1.0;
    return v;
  }

  /// Embeds a sector vector into the full register.
  StateVector embed(const Eigen::VectorXd& v) const {
    StateVector sv(n_so);
    for (int k = 0; k < dim(); ++k) sv.amplitudes()(basis[k].onv) = v(k);
    return sv;
  }

  /// Projects a full-register state onto the sector (no renormalization).
  Eigen::VectorXd project(const StateVector& sv) const {
    Eigen::VectorXd v(dim());
    for (int k = 0; k < dim(); ++k)
      v(k) = sv.amplitude(basis[k].onv).real();
    return v;
  }
};

namespace detail {

/// Applies a creation/annihilation sequence (rightmost first) to an ONV.
/// Returns false if the operator annihilates the state.
inline bool apply_ladder(std::uint32_t& onv, int n_so,
                         std::initializer_list<std::pair<int, bool>> ops,
                         int& sign) {
  sign = 1;
  for (const auto& [s, create] : ops) {
    const std::uint32_t bit = 1u << (n_so - 1 - s);
    if (create == bool(onv & bit)) return false;  // Pauli exclusion / vacuum
    sign *= phase_below(onv, n_so, s);
    onv ^= bit;
  }
  return true;
}

}  // namespace detail

/// Sector-compiled ansatz. Each generator restricted to the sector is a
/// direct sum of 2x2 antisymmetric blocks (one commuting block family per
/// spin for the spin-complemented singles), so exp(t G) is a set of Givens
/// rotations and all arithmetic stays real. Agrees with the full-register
/// path exactly.
class SectorAnsatz {
 public:
  SectorAnsatz(const ExcitationPool& pool, const SectorSpace& space)
      : dim_(space.dim()), pool_size_(pool.size()) {
    const int n = pool.n_spatial, n_so = pool.n_qubits;
    gens_.reserve(pool.size());
    for (const auto& gen : pool.generators) {
      Gen g;
      if (gen.kind == Generator::Kind::Single) {
        const int p = gen.idx[0], q = gen.idx[1];
        for (int sp : {0, n}) {
          std::vector<Pair> group;
          for (int a = 0; a < dim_; ++a) {
            std::uint32_t w = space.basis[a].onv;
            int sign;
            if (!detail::apply_ladder(w, n_so,
                                      {{q + sp, false}, {p + sp, true}}, sign))
              continue;
            group.push_back({a, space.index_of(w), double(sign)});
          }
          if (!group.empty()) g.groups.push_back(std::move(group));
        }
      } else {
        std::vector<Pair> group;
        for (int a = 0; a < dim_; ++a) {
          std::uint32_t w = space.basis[a].onv;
          int sign;
          if (!detail::apply_ladder(w, n_so,
                                    {{gen.idx[2], false},
                                     {gen.idx[3], false},
                                     {gen.idx[1], true},
                                     {gen.idx[0], true}},
                                    sign))
            continue;
          group.push_back({a, space.index_of(w), double(sign)});
        }
        if (!group.empty()) g.groups.push_back(std::move(group));
      }
      gens_.push_back(std::move(g));
    }
  }

  int dim() const { return dim_; }
  std::size_t pool_size() const { return pool_size_; }

  /// v <- exp(t G_k) v
  void apply_generator_exp(int k, double t, Eigen::VectorXd& v) const {
    const double c = std::cos(t), s = std::sin(t);
    for (const auto& group : gens_[k].groups)
      for (const auto& pr : group) {
        const double va = v(pr.a), vb = v(pr.b);
        v(pr.a) = c * va - pr.s * s * vb;
        v(pr.b) = pr.s * s * va + c * vb;
      }
  }

  /// out <- G_k v
  Eigen::VectorXd apply_generator(int k, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    for (const auto& group : gens_[k].groups)
      for (const auto& pr : group) {
        out(pr.b) += pr.s * v(pr.a);
        out(pr.a) -= pr.s * v(pr.b);
      }
    return out;
  }

  Eigen::VectorXd apply(Eigen::VectorXd v, const AnsatzParams& params) const {
    if (std::size_t(params.t.size()) != pool_size_ * params.repetitions)
      throw DomainError("sector ansatz: parameter length mismatch");
    for (int rep = 0; rep < params.repetitions; ++rep)
      for (std::size_t k = 0; k < pool_size_; ++k)
        apply_generator_exp(int(k), params.t(rep * pool_size_ + k), v);
    return v;
  }

  /// grad_k = factor * sum_I <U_{>k} lambda_I | G_k | U_{<=k} phi_I> (all
  /// real). factor 2 covers expectation values <U phi|A|U phi> with
  /// lambda = A U phi; factor 1 covers plain overlaps <lambda|U phi> with a
  /// fixed lambda.
  Eigen::VectorXd vjp(const AnsatzParams& params,
                      const std::vector<Eigen::VectorXd>& phis,
                      const std::vector<Eigen::VectorXd>& lambdas,
                      double factor = 2.0) const {
    if (phis.size() != lambdas.size())
      throw DomainError("sector vjp: state/cotangent count mismatch");
    const std::size_t M = pool_size_ * params.repetitions;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(M);
    for (std::size_t I = 0; I < phis.size(); ++I) {
      Eigen::VectorXd K = apply(phis[I], params);
      Eigen::VectorXd B = lambdas[I];
      for (std::size_t k = M; k-- > 0;) {
        const int g = int(k % pool_size_);
        grad(k) += factor * B.dot(apply_generator(g, K));
        apply_generator_exp(g, -params.t(k), K);
        apply_generator_exp(g, -params.t(k), B);
      }
    }
    return grad;
  }

 private:
  struct Pair {
    int a, b;
    double s;  // G e_a = s e_b, G e_b = -s e_a
  };
  struct Gen {
    std::vector<std::vector<Pair>> groups;  // mutually commuting families
  };
  std::vector<Gen> gens_;
  int dim_;
  std::size_t pool_size_;
};

}  // namespace h4ev
