#pragma once

#include <array>

#include "h4ev/optim.hpp"
#include "h4ev/sector.hpp"

namespace h4ev {

/// Three-state equi-weighted ensemble problem over the (3, +1/2) sector.
struct EnsembleProblem {
  enum class Mode { Penalty, Constrained };

  SectorSpace space;
  ExcitationPool pool;
  SectorAnsatz fast;
  PauliSum h_qubit;            // emulator-path Hamiltonian
  PauliSum s2_qubit;           // emulator-path S^2
  Eigen::MatrixXd h_sector;    // same operators restricted to the sector
  Eigen::MatrixXd s2_sector;
  std::array<std::uint32_t, 3> models;  // ONVs of |Phi0_A>, |Phi0_B>, |Phi0_C>
  int repetitions = 2;
  Mode mode = Mode::Penalty;
  double lambda = 1.0;    // penalty weight
  double epsilon = 1e-8;  // constrained-mode tolerance
  double spin_target = 0.75;  // S(S+1) for S = 1/2
};

inline EnsembleProblem make_ensemble_problem(
    const MOIntegrals& mi, int repetitions = 2,
    EnsembleProblem::Mode mode = EnsembleProblem::Mode::Penalty) {
  auto space = SectorSpace::build(mi.n_orb(), 3, 0.5);
  auto pool = build_guccsd_pool(mi.n_orb());
  SectorAnsatz fast(pool, space);
  EnsembleProblem p{std::move(space),
                    std::move(pool),
                    std::move(fast),
                    jordan_wigner(mi),
                    jw_s2(mi.n_orb()),
                    {},
                    {},
                    {0b11001000, 0b10101000, 0b10011000},
                    repetitions,
                    mode};
  p.h_sector = fci_matrix(mi, p.space.basis);
  p.s2_sector = s2_matrix(p.space.basis);
  for (const auto m : p.models) p.space.index_of(m);  // validate sector membership
  return p;
}

/// H_AA + H_BB + H_CC evaluated on the emulator (three circuit runs).
inline double ensemble_energy(const EnsembleProblem& p,
                              const AnsatzParams& params) {
  double e = 0.0;
  for (const auto m : p.models)
    e += expectation(
        apply_ansatz(prepare_onv(m, p.pool.n_qubits), p.pool, params),
        p.h_qubit);
  return e;
}

/// sum_I |<S^2>_I - S(S+1)|, emulator path.
inline double spin_deviation(const EnsembleProblem& p,
                             const AnsatzParams& params) {
  double dev = 0.0;
  for (const auto m : p.models)
    dev += std::abs(
        expectation(
            apply_ansatz(prepare_onv(m, p.pool.n_qubits), p.pool, params),
            p.s2_qubit) -
        p.spin_target);
  return dev;
}

struct EnsembleResult {
  AnsatzParams t_star;
  std::array<double, 3> state_energies{};  // H_AA, H_BB, H_CC
  double ensemble = 0.0;
  std::array<double, 3> spin_expectations{};
  double spin_dev = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

namespace detail {

struct EnsembleEval {
  double energy = 0.0;
  double spin_dev = 0.0;
  Eigen::VectorXd grad_energy;
  Eigen::VectorXd grad_spin;
};

/// Sector-path value + exact gradients of the energy and the spin deviation.
inline EnsembleEval evaluate_ensemble(const EnsembleProblem& p,
                                      const AnsatzParams& params,
                                      bool need_spin_grad) {
  EnsembleEval ev;
  std::vector<Eigen::VectorXd> phis, lam_h, lam_s;
  for (const auto m : p.models) {
    phis.push_back(p.space.unit(m));
    const Eigen::VectorXd psi = p.fast.apply(phis.back(), params);
    const Eigen::VectorXd hp = p.h_sector * psi;
    const Eigen::VectorXd sp = p.s2_sector * psi;
    ev.energy += psi.dot(hp);
    const double dev = psi.dot(sp) - p.spin_target;
    ev.spin_dev += std::abs(dev);
    lam_h.push_back(hp);
    // d|u|/dt = sign(u) du; the subgradient 0 is used at the kink
    const double sgn = dev > 0.0 ? 1.0 : (dev < 0.0 ? -1.0 : 0.0);
    lam_s.push_back(sgn * sp);
  }
  ev.grad_energy = p.fast.vjp(params, phis, lam_h);
  if (need_spin_grad) ev.grad_spin = p.fast.vjp(params, phis, lam_s);
  return ev;
}

}  // namespace detail

/// Minimizes the ensemble energy with the configured spin handling. Never
/// throws on non-convergence: scans must keep going, so the flag reports it.
inline EnsembleResult optimize_ensemble(const EnsembleProblem& p,
                                        const AnsatzParams* initial = nullptr,
                                        const OptimOptions* options = nullptr) {
  AnsatzParams t0 = initial ? *initial
                            : AnsatzParams::zeros(p.pool.size(), p.repetitions);
  if (std::size_t(t0.t.size()) != p.pool.size() * t0.repetitions)
    throw DomainError("optimize_ensemble: parameter length mismatch");

  EnsembleResult res;
  OptimOptions inner;
  inner.ftol = 1e-10;
  inner.max_iterations = 500;
  if (options) inner = *options;

  AnsatzParams cur = t0;
  if (p.mode == EnsembleProblem::Mode::Penalty) {
    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
      AnsatzParams pr{x, t0.repetitions};
      const auto ev = detail::evaluate_ensemble(p, pr, true);
      grad = ev.grad_energy + p.lambda * ev.grad_spin;
      return ev.energy + p.lambda * ev.spin_dev;
    };
    const auto opt = minimize_bfgs(objective, t0.t, inner);
    cur.t = opt.x;
    res.iterations = opt.iterations;
    res.converged = opt.converged;
    res.trace = opt.trace;
  } else {
    auto fc = [&](const Eigen::VectorXd& x, Eigen::VectorXd& gf,
                  Eigen::VectorXd& gc) {
      AnsatzParams pr{x, t0.repetitions};
      const auto ev = detail::evaluate_ensemble(p, pr, true);
      gf = ev.grad_energy;
      gc = ev.grad_spin;
      return std::pair{ev.energy, ev.spin_dev};
    };
    ConstrainedOptions copt;
    copt.inner = inner;
    copt.constraint_tol = p.epsilon;
    const auto opt = minimize_constrained(fc, t0.t, copt);
    cur.t = opt.inner.x;
    res.iterations = opt.inner.iterations;
    res.converged = opt.inner.converged && opt.feasible;
    res.trace = opt.inner.trace;
  }

  res.t_star = cur;
  for (int I = 0; I < 3; ++I) {
    const Eigen::VectorXd psi = p.fast.apply(p.space.unit(p.models[I]), cur);
    res.state_energies[I] = psi.dot(p.h_sector * psi);
    res.spin_expectations[I] = psi.dot(p.s2_sector * psi);
  }
  res.ensemble =
      res.state_energies[0] + res.state_energies[1] + res.state_energies[2];
  res.spin_dev = std::abs(res.spin_expectations[0] - p.spin_target) +
                 std::abs(res.spin_expectations[1] - p.spin_target) +
                 std::abs(res.spin_expectations[2] - p.spin_target);
  return res;
}

}  // namespace h4ev
