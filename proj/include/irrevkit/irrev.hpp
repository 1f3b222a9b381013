#pragma once

#include "irrevkit/qcore.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace irrevkit {

struct OptimizerConfig {
  std::uint64_t seed = 1;
  int max_iters = 2000;
  double step = 0.1;
  int restarts = 4;
  double tol = 1e-10;
};

struct DeltaReport {
  double delta = 0;
  std::vector<std::pair<int, double>> per_state;
  std::optional<KrausChannel> recovery_used;
  std::optional<std::vector<std::pair<int, double>>> optimizer_trace;
  // Output traces q_k of a sub-normalized branch; empty for channels.
  std::vector<double> branch_probabilities;
  bool converged = true;
  // Set by delta_min: the optimum is local, never certified global.
  bool local_optimum_only = false;
  std::string start_used;
  double petz_delta = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

DeltaReport delta_with_recovery(const KrausChannel& loss, const KrausChannel& recovery,
                                const TestEnsemble& omega);

// Petz map with respect to sigma_ref; the kernel of loss(sigma_ref) is sent to
// sigma_ref so the result is trace preserving.
KrausChannel petz_recovery(const KrausChannel& loss, const DensityMatrix& sigma_ref);

struct WarmStart {
  std::string name;
  KrausChannel recovery;
};

// Maximizes sum_k p_k F^2 over recoveries parameterized by Stinespring
// isometries. The Petz map for the ensemble average is always a start point;
// `extra` adds further warm starts ahead of the random restarts.
DeltaReport delta_min(const KrausChannel& loss, const TestEnsemble& omega,
                      const OptimizerConfig& cfg, const std::vector<WarmStart>& extra = {});

DeltaReport delta_cp(const KrausChannel& branch, const TestEnsemble& omega,
                     const KrausChannel& recovery);

namespace stinespring {
// V = sum_a K_a (x) |a>_env, rows ordered as in (x) env.
Mat from_kraus(const KrausChannel& r, int env_dim);
KrausChannel to_kraus(const Mat& v, const Space& in, const Space& out, int env_dim);
}  // namespace stinespring

}  // namespace irrevkit
