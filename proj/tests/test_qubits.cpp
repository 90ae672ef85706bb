#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "h4ev/jordan_wigner.hpp"
#include "h4ev/statevector.hpp"

using namespace h4ev;

namespace {

MOIntegrals mo_integrals_at(const Geometry& g) {
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  return ao_to_mo(ao, rohf(ao));
}

}  // namespace

TEST_CASE("single-qubit pauli products") {
  auto X = PauliString::from_letters("X");
  auto Y = PauliString::from_letters("Y");
  auto Z = PauliString::from_letters("Z");
  CHECK((X * Y).letters() == "Z");
  CHECK((X * Y).coeff == cplx{0.0, 1.0});
  CHECK((Y * X).coeff == cplx{0.0, -1.0});
  CHECK((Y * Z).letters() == "X");
  CHECK((Y * Z).coeff == cplx{0.0, 1.0});
  CHECK((Z * X).letters() == "Y");
  CHECK((Z * X).coeff == cplx{0.0, 1.0});
  CHECK((X * X).letters() == "I");
  CHECK((X * X).coeff == cplx{1.0, 0.0});
}

TEST_CASE("pauli string letters map to ket-ordered masks") {
  const auto p = PauliString::from_letters("IZXY");
  CHECK(p.letters() == "IZXY");
  CHECK(p.letter(1) == 'Z');
  CHECK(p.letter(3) == 'Y');
  CHECK(p.y_count() == 1);
  CHECK_THROWS_AS(PauliString::from_letters("IQ"), DomainError);
}

TEST_CASE("pauli sum canonicalization") {
  PauliSum s(2);
  s += PauliString::from_letters("XZ", {0.5, 0.0});
  s += PauliString::from_letters("XZ", {0.5, 0.0});
  s += PauliString::from_letters("YY", {1e-16, 0.0});
  s.prune();
  CHECK(s.size() == 1);
  CHECK(s.strings()[0].coeff == cplx{1.0, 0.0});
  CHECK(s.is_hermitian());
  s += PauliString::from_letters("ZI", {0.0, 0.3});
  CHECK(!s.is_hermitian());
}

TEST_CASE("pauli sum text round trip") {
  PauliSum s(3);
  s += PauliString::from_letters("XYZ", {0.25, 0.0});
  s += PauliString::from_letters("IIZ", {-1.5, 0.5});
  std::istringstream in(s.to_text());
  const auto back = PauliSum::from_text(in);
  CHECK(back.size() == s.size());
  const auto a = s.strings(), b = back.strings();
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].letters() == b[k].letters());
    CHECK(std::abs(a[k].coeff - b[k].coeff) < 1e-15);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(PauliSum::from_text(empty), DomainError);
}

TEST_CASE("basis-state preparation and amplitudes") {
  const auto sv = prepare_onv("10001000");
  CHECK(sv.amplitude("10001000") == cplx{1.0, 0.0});
  CHECK(sv.amplitude("11001000") == cplx{0.0, 0.0});
  CHECK(sv.amplitude(std::uint32_t(0b10001000)) == cplx{1.0, 0.0});
  CHECK(sv.norm() == doctest::Approx(1.0).epsilon(1e-15));
  const auto vac = prepare_onv("00000000");
  CHECK(vac.amplitude(std::uint32_t(0)) == cplx{1.0, 0.0});
}

TEST_CASE("elementary gates") {
  auto sv = prepare_onv("0");
  apply_gate(sv, XGate{0});
  CHECK(std::abs(sv.amplitude("1") - cplx{1.0, 0.0}) < 1e-15);
  apply_gate(sv, ZGate{0});
  CHECK(std::abs(sv.amplitude("1") + cplx{1.0, 0.0}) < 1e-15);

  auto ry = prepare_onv("0");
  const double theta = 0.37;
  apply_gate(ry, RyGate{0, 2.0 * theta});
  CHECK(std::abs(ry.amplitude("0") - std::cos(theta)) < 1e-14);
  CHECK(std::abs(ry.amplitude("1") - std::sin(theta)) < 1e-14);

  auto cx = prepare_onv("10");
  apply_gate(cx, CXGate{0, 1});
  CHECK(std::abs(cx.amplitude("11") - cplx{1.0, 0.0}) < 1e-15);
  auto cx0 = prepare_onv("01");
  apply_gate(cx0, CXGate{0, 1});  // control 0 -> no-op
  CHECK(std::abs(cx0.amplitude("01") - cplx{1.0, 0.0}) < 1e-15);

  auto cry = prepare_onv("10");
  apply_gate(cry, CRyGate{0, 1, 2.0 * theta});
  CHECK(std::abs(cry.amplitude("10") - std::cos(theta)) < 1e-14);
  CHECK(std::abs(cry.amplitude("11") - std::sin(theta)) < 1e-14);

  CHECK_THROWS_AS(apply_gate(cry, CXGate{1, 1}), DomainError);
  CHECK_THROWS_AS(apply_gate(cry, XGate{5}), DomainError);
}

TEST_CASE("pauli exponential is exact") {
  // exp(i a X) |0> = cos a |0> + i sin a |1>
  auto sv = prepare_onv("0");
  const double a = 0.81;
  apply_gate(sv, PauliExpGate{a, PauliString::from_letters("X")});
  CHECK(std::abs(sv.amplitude("0") - std::cos(a)) < 1e-14);
  CHECK(std::abs(sv.amplitude("1") - cplx{0.0, std::sin(a)}) < 1e-14);
  CHECK(sv.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(
      apply_gate(sv, PauliExpGate{1.0, PauliString::from_letters("X", {0, 1})}),
      DomainError);
}

TEST_CASE("expectation values") {
  const auto z = PauliSum::identity(1) * cplx{0.0, 0.0} +
                 [] {
                   PauliSum s(1);
                   s += PauliString::from_letters("Z");
                   return s;
                 }();
  CHECK(expectation(prepare_onv("0"), z) == doctest::Approx(1.0));
  CHECK(expectation(prepare_onv("1"), z) == doctest::Approx(-1.0));
  CHECK(expectation(prepare_onv("1"), PauliSum::identity(1)) ==
        doctest::Approx(1.0));
  PauliSum bad(1);
  bad += PauliString::from_letters("Z", {0.0, 1.0});
  CHECK_THROWS_AS(expectation(prepare_onv("0"), bad), DomainError);
}

TEST_CASE("inner products") {
  const auto a = prepare_onv("10");
  const auto b = prepare_onv("01");
  CHECK(inner_product(a, a) == cplx{1.0, 0.0});
  CHECK(inner_product(a, b) == cplx{0.0, 0.0});
}

TEST_CASE("dense matrix assembly") {
  PauliSum z(1);
  z += PauliString::from_letters("Z");
  const auto Mz = pauli_sum_matrix(z);
  CHECK(std::abs(Mz(0, 0) - cplx{1.0, 0.0}) < 1e-15);
  CHECK(std::abs(Mz(1, 1) + cplx{1.0, 0.0}) < 1e-15);

  PauliSum xx(2);
  xx += PauliString::from_letters("XX");
  const auto Mxx = pauli_sum_matrix(xx);
  CHECK(std::abs(Mxx(3, 0) - cplx{1.0, 0.0}) < 1e-15);

  PauliSum big(13);
  big += PauliString::from_letters("IIIIIIIIIIIII");
  CHECK_THROWS_AS(pauli_sum_matrix(big), DomainError);
}

TEST_CASE("single-mode number operator under the mapping") {
  // a+ a on one qubit = (I - Z)/2
  const auto n_op = (detail::jw_creation(0, 1) * detail::jw_annihilation(0, 1))
                        .prune();
  const auto M = pauli_sum_matrix(n_op);
  CHECK(std::abs(M(0, 0)) < 1e-15);
  CHECK(std::abs(M(1, 1) - cplx{1.0, 0.0}) < 1e-15);
  // canonical anticommutator {a, a+} = 1
  const auto acomm = (detail::jw_creation(0, 2) * detail::jw_annihilation(0, 2) +
                      detail::jw_annihilation(0, 2) * detail::jw_creation(0, 2))
                         .prune();
  CHECK(acomm.size() == 1);
  CHECK(std::abs(acomm.strings()[0].coeff - cplx{1.0, 0.0}) < 1e-14);
  CHECK(acomm.strings()[0].letters() == "II");
}

TEST_CASE("qubit hamiltonian agrees with the determinant-basis matrix") {
  const Distortion cases[] = {{0.0, 0.0, 0.0}, {0.1, 0.05, 0.2},
                              {-0.07, 0.12, -0.15}};
  for (const auto& d : cases) {
    const auto mi = mo_integrals_at(distort(td_reference(), d));
    const auto H = jordan_wigner(mi);
    CHECK(H.is_hermitian());
    const auto M = pauli_sum_matrix(H);
    const double half = 0.5;
    const auto basis = determinant_basis(4, 3, &half);
    const auto Hdet = fci_matrix(mi, basis);
    for (size_t r = 0; r < basis.size(); ++r)
      for (size_t c = 0; c < basis.size(); ++c)
        CHECK(std::abs(M(basis[r].onv, basis[c].onv) - Hdet(r, c)) < 1e-10);
  }
}

TEST_CASE("hamiltonian expectation on model and eigenstates") {
  const auto g = td_reference();
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  const auto mi = ao_to_mo(ao, rohf(ao));
  const auto H = jordan_wigner(mi);

  const auto dA = Determinant::from_ket("11001000");
  CHECK(expectation(prepare_onv("11001000"), H) ==
        doctest::Approx(slater_condon_element(dA, dA, mi)).epsilon(1e-10));

  // FCI ground eigenvector embedded in the register
  const auto res = fci_solve(mi);
  StateVector sv(8);
  for (size_t k = 0; k < res.basis.size(); ++k)
    sv.amplitudes()(res.basis[k].onv) = res.eigenvectors(k, 0);
  CHECK(expectation(sv, H) ==
        doctest::Approx(res.eigenvalues(0)).epsilon(1e-10));
}

TEST_CASE("spin-squared operator image") {
  const auto S2 = jw_s2();
  CHECK(S2.is_hermitian());
  CHECK(expectation(prepare_onv("11001000"), S2) ==
        doctest::Approx(0.75).epsilon(1e-12));

  // dense agreement with the determinant-basis matrix
  const auto M = pauli_sum_matrix(S2);
  const double half = 0.5;
  const auto basis = determinant_basis(4, 3, &half);
  const auto S2det = s2_matrix(basis);
  for (size_t r = 0; r < basis.size(); ++r)
    for (size_t c = 0; c < basis.size(); ++c)
      CHECK(std::abs(M(basis[r].onv, basis[c].onv) - S2det(r, c)) < 1e-10);

  // hand-built open-shell quartet component: (|110> + |011> + |101>)/sqrt(3)
  // on alpha orbitals 1..3 with a single beta electron gives a pure quartet
  StateVector q(8);
  q.amplitudes()(StateVector::index_of("10101010", 8)) = 1.0 / std::sqrt(3.0);
  q.amplitudes()(StateVector::index_of("10011010", 8)) = 1.0 / std::sqrt(3.0);
  q.amplitudes()(StateVector::index_of("11001010", 8)) = 1.0 / std::sqrt(3.0);
  // this combination is not an S^2 eigenstate in general; check against the
  // dense oracle instead of a closed-form value
  const Eigen::VectorXcd v = q.amplitudes();
  const cplx dense = v.dot(pauli_sum_matrix(S2) * v);
  CHECK(expectation(q, S2) == doctest::Approx(dense.real()).epsilon(1e-12));

  // commutes with the Hamiltonian
  const auto mi = mo_integrals_at(td_reference());
  const auto H = jordan_wigner(mi);
  const auto MH = pauli_sum_matrix(H);
  CHECK((MH * M - M * MH).norm() < 1e-10);
}

TEST_CASE("random circuits preserve the norm and act linearly") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  std::uniform_int_distribution<int> qpick(0, 5), kind(0, 5);
  const int n = 6;

  std::vector<Gate> circuit;
  for (int k = 0; k < 500; ++k) {
    const int q = qpick(rng);
    int q2 = qpick(rng);
    while (q2 == q) q2 = qpick(rng);
    switch (kind(rng)) {
      case 0: circuit.push_back(XGate{q}); break;
      case 1: circuit.push_back(ZGate{q}); break;
      case 2: circuit.push_back(RyGate{q, angle(rng)}); break;
      case 3: circuit.push_back(CXGate{q, q2}); break;
      case 4: circuit.push_back(CRyGate{q, q2, angle(rng)}); break;
      default: {
        std::string letters(n, 'I');
        letters[q] = 'X';
        letters[q2] = 'Y';
        circuit.push_back(PauliExpGate{angle(rng),
                                       PauliString::from_letters(letters)});
      }
    }
  }

  StateVector a(n), b(n);
  std::normal_distribution<double> nrm;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    a.amplitudes()(i) = cplx{nrm(rng), nrm(rng)};
    b.amplitudes()(i) = cplx{nrm(rng), nrm(rng)};
  }
  a.amplitudes().normalize();
  b.amplitudes().normalize();

  const auto ua = apply_circuit(a, circuit);
  const auto ub = apply_circuit(b, circuit);
  CHECK(ua.norm() == doctest::Approx(1.0).epsilon(1e-10));

  const cplx al{0.3, -0.2}, be{0.5, 0.1};
  StateVector mix(n);
  mix.amplitudes() = al * a.amplitudes() + be * b.amplitudes();
  const auto umix = apply_circuit(mix, circuit);
  const Eigen::VectorXcd lin = al * ua.amplitudes() + be * ub.amplitudes();
  CHECK((umix.amplitudes() - lin).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hamiltonian respects particle-number and spin blocks") {
  const auto mi = mo_integrals_at(distort(td_reference(), {0.1, 0.0, -0.1}));
  const auto M = pauli_sum_matrix(jordan_wigner(mi));

  auto sector = [](std::uint32_t i) {
    const Determinant d{i, 8};
    int na = 0, nb = 0;
    for (int s = 0; s < 4; ++s) {
      na += d.occupied(s);
      nb += d.occupied(s + 4);
    }
    return std::pair{na + nb, na - nb};
  };
  // no coupling across (N_el, 2 M_S) sectors
  for (std::size_t r = 0; r < 256; ++r)
    for (std::size_t c = 0; c < 256; ++c)
      if (sector(std::uint32_t(r)) != sector(std::uint32_t(c)))
        CHECK(std::abs(M(r, c)) < 1e-12);

  // hence evolution under H leaves the (3, +1/2) sector amplitude-tight
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  const Eigen::VectorXcd evolved =
      es.eigenvectors() *
      (cplx{0.0, 1.0} * 0.37 * es.eigenvalues().array().cast<cplx>())
          .exp()
          .matrix()
          .asDiagonal() *
      es.eigenvectors().adjoint() *
      prepare_onv("11001000").amplitudes();
  double leak = 0.0;
  for (std::size_t i = 0; i < 256; ++i)
    if (sector(std::uint32_t(i)) != std::pair{3, 1})
      leak += std::norm(evolved(i));
  CHECK(leak < 1e-12);
}
