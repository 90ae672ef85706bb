#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "h4ev/secondq.hpp"

using namespace h4ev;

namespace {

MOIntegrals mo_integrals_at(const Geometry& g) {
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  return ao_to_mo(ao, rohf(ao));
}

}  // namespace

TEST_CASE("identity transform leaves integrals unchanged") {
  const auto g = td_reference();
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  MOBasis unit;
  unit.C = Eigen::MatrixXd::Identity(4, 4);
  const auto mi = ao_to_mo(ao, unit);
  CHECK((mi.h - (ao.T + ao.V)).cwiseAbs().maxCoeff() < 1e-13);
  double dmax = 0.0;
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s)
          dmax = std::max(dmax,
                          std::abs(mi.g(p, q, r, s) - ao.eri(p, q, r, s)));
  CHECK(dmax < 1e-13);
  CHECK(mi.e_nuc == ao.e_nuc);
}

TEST_CASE("transformed integrals keep their symmetries") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.05, 0.2}));
  CHECK((mi.h - mi.h.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) {
          const double v = mi.g(p, q, r, s);
          CHECK(std::abs(mi.g(q, p, r, s) - v) < 1e-10);
          CHECK(std::abs(mi.g(r, s, p, q) - v) < 1e-10);
          CHECK(std::abs(mi.g(p, q, s, r) - v) < 1e-10);
        }
}

TEST_CASE("determinant basis sizes") {
  CHECK(determinant_basis(4, 3).size() == 56);
  const double half = 0.5;
  CHECK(determinant_basis(4, 3, &half).size() == 24);
  const double zero = 0.0;
  CHECK(determinant_basis(4, 0, &zero).size() == 1);
  const double bad = 1.5;
  CHECK(determinant_basis(4, 0, &bad).empty());
  CHECK_THROWS_AS(determinant_basis(4, 9), DomainError);
  // ascending ONV order
  const auto b = determinant_basis(4, 3, &half);
  for (size_t k = 1; k < b.size(); ++k) CHECK(b[k - 1].onv < b[k].onv);
}

TEST_CASE("determinant ket string round trip") {
  const auto d = Determinant::from_ket("11001000");
  CHECK(d.to_ket() == "11001000");
  CHECK(d.n_el() == 3);
  CHECK(d.occupied(0));
  CHECK(d.occupied(1));
  CHECK(d.occupied(4));
  CHECK(!d.occupied(2));
  CHECK(d.onv == 0b11001000u);
  CHECK_THROWS_AS(Determinant::from_ket("1100x000"), DomainError);
}

TEST_CASE("diagonal matrix element in closed form") {
  const auto mi = mo_integrals_at(td_reference());
  const auto d = Determinant::from_ket("11001000");
  const double expected = 2.0 * mi.h(0, 0) + mi.h(1, 1) + mi.g(0, 0, 1, 1) -
                          mi.g(0, 1, 1, 0) + mi.g(0, 0, 0, 0) +
                          mi.g(1, 1, 0, 0) + mi.e_nuc;
  CHECK(slater_condon_element(d, d, mi) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("diagonal element of the mean-field determinant is the SCF energy") {
  const auto g = td_reference();
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  const auto mo = rohf(ao);
  const auto mi = ao_to_mo(ao, mo);
  const auto d = Determinant::from_ket("11001000");
  CHECK(slater_condon_element(d, d, mi) ==
        doctest::Approx(mo.scf_energy).epsilon(1e-8));
}

TEST_CASE("elements vanish beyond double substitutions") {
  const auto mi = mo_integrals_at(td_reference());
  const auto di = Determinant::from_ket("11100000");
  const auto dj = Determinant::from_ket("00011100");
  CHECK(slater_condon_element(di, dj, mi) == 0.0);
}

TEST_CASE("particle-number mismatch is rejected") {
  const auto mi = mo_integrals_at(td_reference());
  CHECK_THROWS_AS(slater_condon_element(Determinant::from_ket("11000000"),
                                        Determinant::from_ket("11100000"), mi),
                  DomainError);
}

TEST_CASE("threefold-degenerate ground state at the reference geometry") {
  const auto res = fci_solve(mo_integrals_at(td_reference()));
  REQUIRE(res.basis.size() == 24);
  CHECK(res.eigenvalues(0) == doctest::Approx(-1.563620063021).epsilon(1e-9));
  CHECK(res.eigenvalues(1) == doctest::Approx(-1.563620063021).epsilon(1e-9));
  CHECK(res.eigenvalues(2) == doctest::Approx(-1.563620063021).epsilon(1e-9));
  CHECK(res.eigenvalues(3) == doctest::Approx(-1.282458727494).epsilon(1e-9));
  // ascending order and variational bound
  for (int k = 1; k < 24; ++k)
    CHECK(res.eigenvalues(k - 1) <= res.eigenvalues(k) + 1e-14);
}

TEST_CASE("exact energies at two distorted geometries") {
  const auto r1 =
      fci_solve(mo_integrals_at(distort(td_reference(), {0.1, 0.05, 0.2})));
  CHECK(r1.eigenvalues(0) == doctest::Approx(-1.585337764472).epsilon(1e-9));
  CHECK(r1.eigenvalues(1) == doctest::Approx(-1.552577214598).epsilon(1e-9));
  CHECK(r1.eigenvalues(2) == doctest::Approx(-1.532971555244).epsilon(1e-9));

  const auto r2 =
      fci_solve(mo_integrals_at(distort(td_reference(), {0.1, 0.0, -0.1})));
  CHECK(r2.eigenvalues(0) == doctest::Approx(-1.598767484198).epsilon(1e-9));
  CHECK(r2.eigenvalues(1) == doctest::Approx(-1.564559325697).epsilon(1e-9));
  CHECK(r2.eigenvalues(2) == doctest::Approx(-1.522860529997).epsilon(1e-9));
}

TEST_CASE("ground state lies below the mean-field energy") {
  const auto g = distort(td_reference(), {0.1, 0.0, -0.1});
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  const auto mo = rohf(ao);
  const auto res = fci_solve(ao_to_mo(ao, mo));
  CHECK(res.eigenvalues(0) < mo.scf_energy);
}

TEST_CASE("spectrum is invariant under the MO gauge") {
  const auto g = distort(td_reference(), {0.1, 0.0, -0.1});
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  const auto mo_can = rohf(ao);
  const auto mo_low = lowdin_orbitals(ao);
  const auto gref = td_reference();
  const auto ao_ref = compute_ao_integrals(gref, basis_for_geometry(gref));
  const auto mo_dia =
      diabatic_mos(rohf(ao_ref), mo_can, cross_ao_overlap(gref, g));

  const auto e_can = fci_solve(ao_to_mo(ao, mo_can)).eigenvalues;
  const auto e_low = fci_solve(ao_to_mo(ao, mo_low)).eigenvalues;
  const auto e_dia = fci_solve(ao_to_mo(ao, mo_dia)).eigenvalues;
  CHECK((e_can - e_low).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((e_can - e_dia).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("energy curves split with the symmetry-breaking coordinate") {
  // quasi-degenerate excited pair near dz1 = 0, splitting as |dz1| grows
  auto gap12 = [](double dz1) {
    const auto r = fci_solve(
        mo_integrals_at(distort(td_reference(), {0.1, 0.05, dz1})));
    return r.eigenvalues(2) - r.eigenvalues(1);
  };
  CHECK(gap12(0.0) < gap12(0.15));
  CHECK(gap12(0.0) < gap12(-0.15));
}

TEST_CASE("spin-squared matrix") {
  const double half = 0.5;
  const auto basis = determinant_basis(4, 3, &half);
  const Eigen::MatrixXd S2 = s2_matrix(basis);
  CHECK((S2 - S2.transpose()).cwiseAbs().maxCoeff() < 1e-14);

  // single unpaired electron on top of a closed pair
  int idx = -1;
  for (size_t k = 0; k < basis.size(); ++k)
    if (basis[k].to_ket() == "11001000") idx = int(k);
  REQUIRE(idx >= 0);
  CHECK(S2(idx, idx) == doctest::Approx(0.75).epsilon(1e-14));

  // eigenvalues: doublets 0.75 and quartets 3.75 only
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S2);
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double v = es.eigenvalues()(k);
    CHECK((std::abs(v - 0.75) < 1e-10 || std::abs(v - 3.75) < 1e-10));
  }

  // commutes with the Hamiltonian
  const auto mi = mo_integrals_at(td_reference());
  const Eigen::MatrixXd H = fci_matrix(mi, basis);
  CHECK((H * S2 - S2 * H).norm() < 1e-10);
}

TEST_CASE("eigenvector phase convention") {
  const auto res = fci_solve(mo_integrals_at(distort(td_reference(),
                                                     {0.1, 0.0, -0.1})));
  for (int j = 0; j < res.eigenvectors.cols(); ++j) {
    int imax = 0;
    res.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(res.eigenvectors(imax, j) > 0.0);
  }
}
