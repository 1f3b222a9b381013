#pragma once

#include "irrevkit/comb.hpp"
#include "irrevkit/qcore.hpp"

#include <string>
#include <utility>
#include <vector>

namespace irrevkit {

// Root values throughout: callers compare squares.
double ozawa_error(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                   const OutcomeFunction& f);
double ozawa_disturbance(const DensityMatrix& rho, const Observable& b, const Instrument& meas);

struct UnbiasednessCheck {
  bool unbiased;
  double deviation;
};
// sum_m f(m) M_m^dag M_m == A within 1e-9.
UnbiasednessCheck akg_unbiasedness_check(const Instrument& meas, const Observable& a,
                                         const OutcomeFunction& f);

struct LtErrorResult {
  double value;
  OutcomeFunction argmin;            // pushforward; 0 on excluded outcomes
  std::vector<std::string> excluded;  // outcomes with p < 1e-12
};
LtErrorResult lt_error(const DensityMatrix& rho, const Observable& a, const Instrument& meas);
// eps_LT(rho, A, P_M, f).
double lt_error_for(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                    const OutcomeFunction& f);
// ||f - f*||^2 weighted by the outcome distribution.
double lt_gap(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
              const OutcomeFunction& f);

struct LtDisturbanceResult {
  double value;
  Mat argmin;  // on the instrument output
};
LtDisturbanceResult lt_disturbance(const DensityMatrix& rho, const Observable& b,
                                   const Instrument& meas);
double lt_disturbance_for(const DensityMatrix& rho, const Observable& b, const Instrument& meas,
                          const Mat& x);

struct BlochVector {
  double x = 0, y = 0, z = 0;
  double norm() const;
  double dot(const BlochVector& o) const;
  Mat sigma() const;  // x X + y Y + z Z
};

double blw_calibration_error_qubit(const BlochVector& a, const BlochVector& a_prime);

// Calibration setups for the two-copy comb.
struct BlwErrorSetup {
  DensityMatrix rho;  // (I + a.sigma)/2
  Observable a;
  Instrument meas;    // projectors of a'.sigma, outcomes "+1", "-1"
  OutcomeFunction f;  // +-1
};
BlwErrorSetup blw_error_setup(const BlochVector& a, const BlochVector& a_prime);

struct BlwDisturbanceSetup {
  DensityMatrix rho;  // (I + b.sigma)/2
  Observable b;
  Instrument meas;    // single unitary branch with U^dag (b.sigma) U = b'.sigma
};
BlwDisturbanceSetup blw_disturbance_setup(const BlochVector& b, const BlochVector& b_prime);

// (value, mass) pairs.
using Distribution = std::vector<std::pair<double, double>>;
double wasserstein2_discrete(const Distribution& mu, const Distribution& nu);

}  // namespace irrevkit
