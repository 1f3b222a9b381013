#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace irrevkit;
using namespace support;
using doctest::Approx;

TEST_CASE("tensor products") {
  const Space a{{"A", 2}}, b{{"B", 2}};
  SUBCASE("identities") {
    Observable i = tensor(Observable(a, Mat::Identity(2, 2)), Observable(b, Mat::Identity(2, 2)));
    CHECK(max_abs(i.data() - Mat::Identity(4, 4)) == 0);
    CHECK(i.space().size() == 2);
  }
  SUBCASE("product basis projector") {
    DensityMatrix r = tensor(pure(ket(0), a), pure(ket(1), b));
    CHECK(max_abs(r.data() - proj(ket(1, 4))) < 1e-15);
  }
  SUBCASE("zz on a Bell state") {
    Vec phi = (ket(0, 4) + ket(3, 4)) / std::sqrt(2.0);
    Observable zz = tensor(Observable(a, linalg::pauli('Z')), Observable(b, linalg::pauli('Z')));
    CHECK(raw::expectation(proj(phi), zz.data()) == Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("repeated labels are rejected") {
    CHECK_THROWS_AS(tensor(pure(ket(0), a), pure(ket(0), a)), CompositeSpaceError);
  }
}

TEST_CASE("partial trace") {
  const Space a{{"A", 2}}, b{{"B", 3}};
  Mat ra(2, 2);
  ra << 0.7, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.3;
  Mat sb = Mat::Identity(3, 3) / 3.0;
  DensityMatrix r = tensor(DensityMatrix(a, ra), DensityMatrix(b, sb));
  CHECK(max_abs(partial_trace(r, {"A"}).data() - ra) < 1e-14);

  DensityMatrix all = partial_trace(r, {});
  CHECK(all.dim() == 1);
  CHECK(all.data()(0, 0).real() == Approx(1.0));

  const Space q2{{"A", 2}, {"B", 2}};
  DensityMatrix bell = DensityMatrix::pure(q2, (ket(0, 4) + ket(3, 4)) / std::sqrt(2.0));
  CHECK(max_abs(partial_trace(bell, {"B"}).data() - Mat::Identity(2, 2) / 2.0) < 1e-15);
  CHECK_THROWS_AS(partial_trace(bell, {"C"}), CompositeSpaceError);
}

TEST_CASE("channels and instruments") {
  DensityMatrix zero = pure(ket(0));
  CHECK(max_abs(apply(KrausChannel::identity(kS), zero).data() - zero.data()) == 0);
  CHECK(max_abs(apply(depolarizing(kS, 1.0), zero).data() - Mat::Identity(2, 2) / 2.0) < 1e-15);

  auto out = apply(z_projective(), pure(plus()));
  REQUIRE(out.size() == 2);
  CHECK(out[0].probability == Approx(0.5));
  CHECK(out[1].probability == Approx(0.5));

  SUBCASE("non trace-preserving Kraus sets are rejected") {
    CHECK_THROWS_AS(KrausChannel(kS, kS, {Mat::Identity(2, 2) * 2.0}), ChannelValidityError);
  }
  SUBCASE("Choi matrix of the identity is the unnormalized maximally entangled projector") {
    Mat c = KrausChannel::identity(kS).choi();
    Vec omega = ket(0, 4) + ket(3, 4);
    CHECK(max_abs(c - proj(omega)) < 1e-15);
  }
}

TEST_CASE("dual maps") {
  Mat o(2, 2);
  o << 1.0, cplx(0.3, 0.4), cplx(0.3, -0.4), -0.5;
  Observable obs(kS, o);
  CHECK(max_abs(dual(KrausChannel::identity(kS))(obs).data() - o) < 1e-15);

  Mat u = linalg::expi_herm<double>(linalg::pauli('Y'), 0.37);
  CHECK(max_abs(dual(KrausChannel::unitary(kS, u))(obs).data() - u.adjoint() * o * u) < 1e-14);

  const Mat expect = o.trace() * Mat::Identity(2, 2) / 2.0;
  CHECK(max_abs(dual(depolarizing(kS, 1.0))(obs).data() - expect) < 1e-14);
}

TEST_CASE("fidelity and purified distance") {
  DensityMatrix z0 = pure(ket(0)), z1 = pure(ket(1)), p = pure(plus());
  CHECK(uhlmann_fidelity(z0, z0) == Approx(1.0));
  CHECK(uhlmann_fidelity(z0, z1) == Approx(0.0));
  CHECK(uhlmann_fidelity(z0, p) == Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(purified_distance(z0, z0) == Approx(0.0));
  CHECK(purified_distance(z0, z1) == Approx(1.0));
  CHECK(purified_distance(z0, p) == Approx(1 / std::sqrt(2.0)).epsilon(1e-12));

  SUBCASE("small negative eigenvalues are clipped, larger ones rejected") {
    Mat m = z0.data();
    m(1, 1) = -5e-11;
    CHECK_NOTHROW(uhlmann_fidelity(DensityMatrix(kS, m / m.trace()), p));
    Mat bad = z0.data();
    bad(1, 1) = -1e-6;
    bad /= bad.trace();
    CHECK_THROWS_AS(DensityMatrix(kS, bad), StateValidityError);
  }
}

TEST_CASE("variance and quantum Fisher information") {
  Observable z(kS, linalg::pauli('Z')), x(kS, linalg::pauli('X'));
  CHECK(variance(pure(ket(0)), z) == Approx(0.0));
  CHECK(variance(pure(plus()), z) == Approx(1.0));
  CHECK(variance(DensityMatrix::maximally_mixed(kS), z) == Approx(1.0));

  CHECK(qfi(DensityMatrix::maximally_mixed(kS), z) == Approx(0.0));
  CHECK(qfi(pure(ket(0)), z) == Approx(0.0));
  CHECK(qfi(pure(plus()), z) == Approx(4.0).epsilon(1e-12));
  Mat r = Mat::Zero(2, 2);
  r(0, 0) = 0.75;
  r(1, 1) = 0.25;
  CHECK(qfi(DensityMatrix(kS, r), x) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(Observable(kS, Mat::Identity(3, 3)), ShapeError);
  Mat nh = Mat::Zero(2, 2);
  nh(0, 1) = 1;
  CHECK_THROWS(Observable(kS, nh));
  CHECK_THROWS_AS(check_space({{"A", 2}, {"A", 3}}), CompositeSpaceError);
  CHECK_THROWS_AS(check_space({{"A", 0}}), CompositeSpaceError);
}
