#pragma once

#include "irrevkit/irrev.hpp"
#include "irrevkit/qcore.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace irrevkit {

using OutcomeFunction = std::map<std::string, double>;

inline const std::string kAncilla = "Q";
inline const std::string kPointer = "P";

enum class LossKind { Error, Disturbance, Scrambling };
const char* to_string(LossKind k);

// What gets appended on S, how it couples to Q, and what happens to S
// afterwards. `process` may be a sub-normalized branch when `branch` is set.
struct LossSpec {
  LossKind kind;
  DensityMatrix rho;
  Observable generator;
  KrausChannel process;
  bool branch = false;
};

struct LossProcess {
  LossKind kind;
  DensityMatrix rho;
  Observable generator;
  double theta;
  KrausChannel process;
  // Q -> Q + (output of process)
  KrausChannel channel;
};

// P_M: S -> P, rho -> sum_m Tr[M_m rho M_m^dag] |m><m|.
KrausChannel measurement_to_register(const Instrument& meas, const std::string& label = kPointer);

// (process (x) id_Q) o U_{G,theta} o A_rho with U_{X,theta} = exp(-i theta X (x) sigma_z).
LossProcess build_loss(const LossSpec& spec, double theta);
LossProcess build_loss_error(const DensityMatrix& rho, const Observable& a, double theta,
                             const Instrument& meas);
LossProcess build_loss_disturbance(const DensityMatrix& rho, const Observable& b, double theta,
                                   const Instrument& meas);

// Two copies S1, S2 of S: the generator couples S1 to Q, meas acts on S2
// and S1 is discarded.
LossSpec two_copy_spec(const DensityMatrix& rho, const Observable& generator,
                       const Instrument& meas, LossKind kind);
LossProcess build_loss_two_copy(const DensityMatrix& rho, const Observable& generator,
                                double theta, const Instrument& meas, LossKind kind);

LossSpec error_spec(const DensityMatrix& rho, const Observable& a, const Instrument& meas);
LossSpec disturbance_spec(const DensityMatrix& rho, const Observable& b, const Instrument& meas);

struct CanonicalRecovery {
  Observable x;
  double theta;
  KrausChannel channel;
};

// J o U^dag_{X,theta}: undo the coupling with X on the target, trace the
// target out and dephase Q in the {|+>, |->} basis.
CanonicalRecovery canonical_recovery(const Observable& x, double theta);

// M = sum_m f(m) |m><m| on P; throws OutcomeFunctionError on a missing outcome.
Observable pointer_observable(const Instrument& meas, const OutcomeFunction& f,
                              const std::string& label = kPointer);

// Minimizer over Hermitian X of the second-order coefficient for the
// canonical recovery: solves N(rho) X + X N(rho) = N(G rho + rho G).
Mat optimal_target_observable(const LossSpec& spec);

struct Recovery {
  enum class Type { Canonical, Explicit, Optimize };
  Type type = Type::Canonical;
  std::optional<Mat> x;              // canonical: observable on the process output
  std::optional<OutcomeFunction> f;  // canonical, error kind: pointer labels
  std::optional<KrausChannel> channel;

  static Recovery canonical_f(OutcomeFunction f);
  static Recovery canonical_x(Mat x);
  static Recovery optimize();
  static Recovery explicit_channel(KrausChannel r);
};

enum class ExtractionMethod { Extrapolated, Analytic };

struct ExtractionConfig {
  ExtractionMethod method = ExtractionMethod::Extrapolated;
  std::vector<double> theta_grid{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  double tol = 1e-6;
  // Even powers kept in the fit: 2 -> c2, c4; 3 -> c2, c4, c6.
  int fit_terms = 3;
  OptimizerConfig optimizer;
};

struct IepResult {
  double value = 0;
  std::vector<std::pair<double, double>> theta_grid;  // (theta, delta^2)
  double fit_residual = 0;
  std::string method;
  std::vector<double> coefficients;  // c2, c4, ...
  std::string recovery;
  // Branch probabilities per theta (sub-normalized processes only).
  std::vector<double> branch_probabilities;
  std::vector<std::string> warnings;
};

const char* to_string(ExtractionMethod m);

// delta^2 of the loss at theta under the given recovery.
double delta_sq_at(const LossSpec& spec, const Recovery& rec, double theta,
                   const OptimizerConfig& opt, DeltaReport* report = nullptr);

// Second-order coefficient for the canonical recovery with X, in closed form.
double analytic_coefficient(const LossSpec& spec, const Mat& x);

IepResult extract(const LossSpec& spec, const Recovery& rec, const ExtractionConfig& cfg);

IepResult extract_epsilon(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                          const Recovery& rec, const ExtractionConfig& cfg = {});
IepResult extract_eta(const DensityMatrix& rho, const Observable& b, const Instrument& meas,
                      const Recovery& rec, const ExtractionConfig& cfg = {});

// Least-squares fit of y = sum_j c_j theta^(2j+2); returns coefficients and
// the max relative residual.
std::pair<std::vector<double>, double> fit_even(const std::vector<std::pair<double, double>>& pts,
                                                int terms);

}  // namespace irrevkit
