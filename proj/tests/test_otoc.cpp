#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "irrevkit/otoc.hpp"
#include "irrevkit/random.hpp"
#include "support.hpp"

#include <numbers>

using namespace irrevkit;
using namespace support;
using doctest::Approx;

namespace {

Observable op(const Space& s, const Mat& m) { return Observable(s, m); }

ScramblingScenario qubit(const Mat& h, const Mat& w, const Mat& v, double tau) {
  return {op(kS, h), op(kS, w), op(kS, v), tau, std::nullopt};
}

ScramblingScenario chain(double tau) {
  const Space s{{"S", 8}};
  Mat h = Mat::Zero(8, 8);
  for (const char* t : {"ZZI", "IZZ", "XII", "IXI", "IIX"}) h += linalg::pauli_string(t);
  return {op(s, h), op(s, linalg::pauli_string("XII")), op(s, linalg::pauli_string("IIZ")), tau, std::nullopt};
}

const Mat kX = linalg::pauli('X'), kY = linalg::pauli('Y'), kZ = linalg::pauli('Z');

}  // namespace

TEST_CASE("Heisenberg evolution") {
  CHECK(max_abs(heisenberg(op(kS, kX), op(kS, kZ), 0.0).data() - kX) < 1e-15);
  CHECK(max_abs(heisenberg(op(kS, kZ), op(kS, kZ), 1.3).data() - kZ) < 1e-14);
  CHECK(max_abs(heisenberg(op(kS, kX), op(kS, kZ), std::numbers::pi / 4).data() + kY) < 1e-14);
}

TEST_CASE("direct OTOC") {
  const Mat zero = Mat::Zero(2, 2);
  CHECK(otoc_direct(qubit(zero, kZ, kZ, 0.0)) == Approx(0.0));
  CHECK(otoc_direct(qubit(zero, kX, kZ, 0.0)) == Approx(4.0).epsilon(1e-14));
  CHECK(otoc_direct(qubit(kX, kX, kZ, 0.7)) == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("OTOC as irreversibility") {
  const Mat zero = Mat::Zero(2, 2);
  CHECK(std::abs(otoc_iep(qubit(zero, kZ, kZ, 0.0)).value) < 1e-8);
  CHECK(otoc_iep(qubit(zero, kX, kZ, 0.0)).value == Approx(4.0).epsilon(1e-9));

  ScramblingScenario c = chain(1.0);
  IepResult r = otoc_iep(c);
  CHECK(std::abs(r.value - otoc_direct(c)) < 1e-6);

  SUBCASE("W must square to the identity") {
    CHECK_THROWS_AS(otoc_iep(qubit(zero, 2.0 * kX, kZ, 0.0)), AssumptionError);
  }
  SUBCASE("equal-time value on the chain") {
    ScramblingScenario c0 = chain(0.0);
    CHECK(std::abs(otoc_iep(c0).value) < 1e-8);
  }
}

TEST_CASE("CP-map extension") {
  const Mat zero = Mat::Zero(2, 2);
  OtocCpResult u = otoc_iep_cp(qubit(kZ, kX, kZ, 0.4));
  CHECK(u.q == Approx(1.0).epsilon(1e-12));
  CHECK(u.iep.value == Approx(otoc_iep(qubit(kZ, kX, kZ, 0.4)).value).epsilon(1e-8));

  Mat w = Mat::Zero(2, 2);
  w(0, 0) = 2;
  ScramblingScenario s = qubit(zero, w, kX, 0.0);

  OtocCpResult tr = otoc_iep_cp(s, {}, WNormalization::Trace);
  CHECK(tr.scale == Approx(2.0));
  CHECK(tr.q == Approx(0.5));
  CHECK(tr.direct == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(tr.iep.value * tr.q - tr.direct) < 1e-6);
  CHECK_FALSE(tr.warnings.empty());

  OtocCpResult rms = otoc_iep_cp(s);
  CHECK(rms.q == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(rms.iep.value - rms.direct) < 1e-6);
  CHECK(rms.iep.value == Approx(tr.iep.value).epsilon(1e-6));

  OtocCpResult none = otoc_iep_cp(qubit(zero, zero, kX, 0.0));
  CHECK(none.iep.value == 0.0);
  CHECK_FALSE(none.warnings.empty());

  ScramblingScenario gibbs = s;
  Mat r = Mat::Zero(2, 2);
  r(0, 0) = 0.7;
  r(1, 1) = 0.3;
  gibbs.rho = DensityMatrix(kS, r);
  CHECK_THROWS_AS(otoc_iep_cp(gibbs), AssumptionError);
}
