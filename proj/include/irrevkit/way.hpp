#pragma once

#include "irrevkit/comb.hpp"
#include "irrevkit/otoc.hpp"
#include "irrevkit/qcore.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace irrevkit {

// Conserved charge per label name; a name shared by an input and an output
// label carries the same charge.
using ChargeAssignment = std::map<std::string, Mat>;

// U on alpha + beta -> alpha' + beta', with beta prepared in rho_beta.
struct Implementation {
  Space alpha, beta, alpha_out, beta_out;
  DensityMatrix rho_beta;
  Mat u;
  ChargeAssignment charges;
};

// Sum of the local charges of every label in s.
Mat total_charge(const Space& s, const ChargeAssignment& charges);

// max-abs of U^dag (X_alpha' + X_beta') U - (X_alpha + X_beta).
double check_conservation(const Implementation& impl);

// alpha -> alpha': Tr_beta'[U (. (x) rho_beta) U^dag].
KrausChannel implemented_channel(const Implementation& impl);

// max-abs gap between the Choi matrices of the implemented and target maps.
double implementation_gap(const Implementation& impl, const KrausChannel& target);

double fisher_cost_upper(const Implementation& impl);

// X_in - N^dag(X_out).
Observable y_operator(const KrausChannel& n, const Mat& x_in, const Mat& x_out);

struct WayTerms {
  double commutator_expectation = 0;  // |<[Y, A]>|
  double fisher_cost_upper = 0;       // F_{rho_beta}(X_beta)
  double qfi_state = 0;               // F_rho(X_S)
  double variance_out = 0;            // V of the output charge
  double delta = 0;                   // Delta_F, Delta'_F or Delta''_1
  double conservation_gap = 0;
  double implementation_gap = 0;
};

struct WayReport {
  std::string bound;  // error | disturbance | error-yanase | otoc
  double lhs = 0;
  double rhs = 0;
  double slack = 0;
  bool pass = true;
  std::string lhs_method;
  WayTerms terms;
  std::optional<IepResult> lhs_detail;
};

enum class WayLhs { Optimize, Canonical };

struct WayConfig {
  WayLhs lhs = WayLhs::Optimize;
  ExtractionConfig extraction;
  // Externally supplied lhs (e.g. a measured value); skips the extraction.
  std::optional<double> lhs_value;
  double slack_tol = 1e-9;
};

WayReport way_bound_error(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                          const Implementation& impl, const WayConfig& cfg = {});
WayReport way_bound_disturbance(const DensityMatrix& rho, const Observable& b,
                                const Instrument& meas, const Implementation& impl,
                                const WayConfig& cfg = {});
WayReport way_bound_error_yanase(const DensityMatrix& rho, const Observable& a,
                                 const Instrument& meas, const Implementation& impl,
                                 const WayConfig& cfg = {});
WayReport way_bound_otoc(const ScramblingScenario& s, const Implementation& impl,
                         const WayConfig& cfg = {});

// Seeded fixtures.
enum class AncillaKind { Incoherent, Coherent };

struct WayErrorFixture {
  DensityMatrix rho;
  Observable a;
  Instrument meas;  // outcomes e0..e{n-1}, the probe basis
  Implementation impl;
};
// Probe E couples to S by a charge-conserving unitary, is copied to F and
// swapped into the pointer P.
WayErrorFixture way_error_fixture(std::uint64_t seed, int ds, int de, AncillaKind kind);

struct WayDisturbanceFixture {
  DensityMatrix rho;
  Observable b;
  Instrument meas;
  Implementation impl;
};
WayDisturbanceFixture way_disturbance_fixture(std::uint64_t seed, int ds, int de, AncillaKind kind);
// S and E exchanged; S' receives rho_E.
WayDisturbanceFixture way_swap_fixture(std::uint64_t seed, int d);

struct WayOtocFixture {
  ScramblingScenario scenario;
  Implementation impl;
};
// W(tau) (x) U_E with X_S' = W X_S W^dag.
WayOtocFixture way_otoc_fixture(std::uint64_t seed, int qubits, int de);

// Charge-conserving unitary for a diagonal total charge: random blocks on
// each degenerate sector.
Mat conserving_unitary(std::uint64_t seed, const RVec& charge_diag);

}  // namespace irrevkit
