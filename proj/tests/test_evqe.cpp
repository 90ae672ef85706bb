#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "h4ev/evqe.hpp"

using namespace h4ev;

namespace {

MOIntegrals mo_integrals_at(const Geometry& g) {
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  return ao_to_mo(ao, rohf(ao));
}

AnsatzParams random_params(std::size_t pool_size, unsigned seed,
                           double scale = 0.1) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  auto p = AnsatzParams::zeros(pool_size, 2);
  for (int k = 0; k < p.t.size(); ++k) p.t(k) = u(rng);
  return p;
}

}  // namespace

TEST_CASE("quasi-newton minimizer on smooth test functions") {
  // quadratic
  auto quad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  auto r = minimize_bfgs(quad, Eigen::VectorXd::Constant(5, 3.0));
  CHECK(r.converged);
  CHECK(r.f < 1e-12);

  // Rosenbrock
  auto rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  auto rr = minimize_bfgs(rosen, x0);
  CHECK(rr.converged);
  CHECK((rr.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-4);

  // iteration cap reported, not thrown
  OptimOptions tight;
  tight.max_iterations = 2;
  tight.ftol = 0.0;
  tight.gtol = 0.0;
  auto capped = minimize_bfgs(rosen, x0, tight);
  CHECK(capped.iterations == 2);
  CHECK(!capped.converged);

  CHECK_THROWS_AS(
      minimize_bfgs([](const Eigen::VectorXd&, Eigen::VectorXd& g) {
        g.setZero(1);
        return std::nan("");
      }, Eigen::VectorXd::Zero(1)),
      DomainError);
}

TEST_CASE("augmented lagrangian honors an inequality constraint") {
  // minimize x^2 subject to 1 - x <= tol  ->  x* = 1
  auto fc = [](const Eigen::VectorXd& x, Eigen::VectorXd& gf,
               Eigen::VectorXd& gc) {
    gf.resize(1);
    gc.resize(1);
    gf(0) = 2.0 * x(0);
    gc(0) = -1.0;
    return std::pair{x(0) * x(0), 1.0 - x(0)};
  };
  ConstrainedOptions opt;
  opt.constraint_tol = 1e-8;
  auto r = minimize_constrained(fc, Eigen::VectorXd::Zero(1), opt);
  CHECK(r.feasible);
  CHECK(std::abs(r.inner.x(0) - 1.0) < 1e-6);
  CHECK(r.constraint_value <= 1e-8 + 1e-12);
}

TEST_CASE("identity-ansatz ensemble energy is the model-diagonal sum") {
  const auto mi = mo_integrals_at(td_reference());
  const auto p = make_ensemble_problem(mi);
  const auto t0 = AnsatzParams::zeros(p.pool.size(), 2);
  double expected = 0.0;
  for (const char* k : {"11001000", "10101000", "10011000"}) {
    const auto d = Determinant::from_ket(k);
    expected += slater_condon_element(d, d, mi);
  }
  CHECK(ensemble_energy(p, t0) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(spin_deviation(p, t0) < 1e-12);
}

TEST_CASE("sector evaluation agrees with the emulator") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.0, -0.1}));
  const auto p = make_ensemble_problem(mi);
  const auto t = random_params(p.pool.size(), 17, 0.2);
  const auto ev = detail::evaluate_ensemble(p, t, false);
  CHECK(ensemble_energy(p, t) == doctest::Approx(ev.energy).epsilon(1e-10));
  CHECK(spin_deviation(p, t) == doctest::Approx(ev.spin_dev).epsilon(1e-9));
}

TEST_CASE("ensemble energy respects the variational bound") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.05, 0.2}));
  const double fci_sum = fci_solve(mi).eigenvalues.head(3).sum();
  const auto p = make_ensemble_problem(mi);
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    const auto t = random_params(p.pool.size(), seed, 0.4);
    CHECK(detail::evaluate_ensemble(p, t, false).energy >= fci_sum - 1e-9);
  }
}

TEST_CASE("optimization reaches the exact threefold-degenerate sum") {
  const auto mi = mo_integrals_at(td_reference());
  const auto p = make_ensemble_problem(mi);
  const auto res = optimize_ensemble(p);
  CHECK(res.converged);
  CHECK(res.ensemble == doctest::Approx(-4.690860189063).epsilon(1e-6));
  CHECK(std::abs(res.ensemble - (res.state_energies[0] + res.state_energies[1] +
                                 res.state_energies[2])) < 1e-12);
  for (double s : res.spin_expectations)
    CHECK(s == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("optimization matches the exact sum at a distorted geometry") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.05, 0.2}));
  const auto p = make_ensemble_problem(mi);
  const auto res = optimize_ensemble(p);
  CHECK(res.converged);
  CHECK(res.ensemble == doctest::Approx(-4.670886534314).epsilon(1e-6));
  // monotone best-so-far trace
  double best = res.trace.front();
  for (double v : res.trace) {
    CHECK(v <= best + 1e-12);
    best = std::min(best, v);
  }
}

TEST_CASE("constrained mode keeps the spin deviation below tolerance") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.0, -0.1}));
  const double fci_sum = fci_solve(mi).eigenvalues.head(3).sum();
  const auto p =
      make_ensemble_problem(mi, 2, EnsembleProblem::Mode::Constrained);
  const auto res = optimize_ensemble(p);
  CHECK(res.converged);
  CHECK(res.spin_dev <= 1e-8 + 1e-10);
  CHECK(res.ensemble == doctest::Approx(fci_sum).epsilon(1e-6));
}

TEST_CASE("warm start lands on the same minimum") {
  const auto mi1 = mo_integrals_at(distort(td_reference(), {0.1, 0.05, 0.20}));
  const auto mi2 = mo_integrals_at(distort(td_reference(), {0.1, 0.05, 0.21}));
  const auto p1 = make_ensemble_problem(mi1);
  const auto p2 = make_ensemble_problem(mi2);
  const auto cold2 = optimize_ensemble(p2);
  const auto r1 = optimize_ensemble(p1);
  const auto warm2 = optimize_ensemble(p2, &r1.t_star);
  CHECK(warm2.ensemble == doctest::Approx(cold2.ensemble).epsilon(1e-8));
}

TEST_CASE("expressibility across random scan geometries") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> dx(-0.15, 0.15);
  for (int trial = 0; trial < 5; ++trial) {
    const Distortion d{dx(rng), dx(rng), dx(rng)};
    const auto mi = mo_integrals_at(distort(td_reference(), d));
    const double fci_sum = fci_solve(mi).eigenvalues.head(3).sum();
    const auto res = optimize_ensemble(make_ensemble_problem(mi));
    CHECK(res.ensemble == doctest::Approx(fci_sum).epsilon(1e-6));
  }
}

TEST_CASE("generator ordering is a gauge choice for the minimum") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.0, -0.1}));
  const double fci_sum = fci_solve(mi).eigenvalues.head(3).sum();
  auto p = make_ensemble_problem(mi);
  const auto fwd = optimize_ensemble(p);
  std::reverse(p.pool.generators.begin(), p.pool.generators.end());
  p.fast = SectorAnsatz(p.pool, p.space);
  const auto rev = optimize_ensemble(p);
  CHECK(fwd.ensemble == doctest::Approx(fci_sum).epsilon(1e-6));
  CHECK(rev.ensemble == doctest::Approx(fci_sum).epsilon(1e-6));
  CHECK(fwd.ensemble == doctest::Approx(rev.ensemble).epsilon(1e-6));
}
