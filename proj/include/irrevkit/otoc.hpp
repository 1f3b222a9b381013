#pragma once

#include "irrevkit/comb.hpp"
#include "irrevkit/qcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace irrevkit {

struct ScramblingScenario {
  Observable h;
  Observable w0;
  Observable v0;
  double tau = 0;
  std::optional<DensityMatrix> rho;  // I/d when empty

  DensityMatrix state() const;
};

// e^{iH tau} W0 e^{-iH tau}.
Observable heisenberg(const Observable& w0, const Observable& h, double tau);

// -Tr[rho [W(tau), V]^2] for a Hermitian W(tau).
double otoc_direct(const ScramblingScenario& s);
double otoc_commutator(const Mat& rho, const Mat& w, const Mat& v);

// Output labels of D_W: input names with a trailing prime.
Space primed(const Space& s);

// (D_W (x) id_Q) o U_{V,theta} o A_rho with D_W(.) = W (.) W^dag; `branch`
// marks a sub-normalized W.
LossSpec scrambling_spec(const DensityMatrix& rho, const Observable& v, const Mat& w, bool branch);

IepResult otoc_iep(const ScramblingScenario& s, const ExtractionConfig& cfg = {});

enum class WNormalization {
  Rms,    // W / sqrt(Tr[W^2 rho]); branch probability 1
  Trace,  // W / sum |w_i|
};
const char* to_string(WNormalization n);

struct OtocCpResult {
  IepResult iep;
  WNormalization normalization;
  double scale = 0;   // W~ = W(tau) / scale
  double q = 0;       // Tr[W~^2 rho]
  double direct = 0;  // -Tr[rho [W~, V]^2]
  std::vector<std::string> warnings;
};

OtocCpResult otoc_iep_cp(const ScramblingScenario& s, const ExtractionConfig& cfg = {},
                         WNormalization norm = WNormalization::Rms);

}  // namespace irrevkit
