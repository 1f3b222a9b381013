#include "irrevkit/otoc.hpp"

#include <cmath>

namespace irrevkit {

DensityMatrix ScramblingScenario::state() const {
  return rho ? *rho : DensityMatrix::maximally_mixed(h.space());
}

Observable heisenberg(const Observable& w0, const Observable& h, double tau) {
  if (w0.space() != h.space()) throw ShapeError("W0 and H live on different spaces");
  const Mat u = linalg::expi_herm<double>(h.data(), tau);
  return Observable(w0.space(), linalg::hermitize<double>(Mat(u.adjoint() * w0.data() * u)));
}

double otoc_commutator(const Mat& rho, const Mat& w, const Mat& v) {
  const Mat c = w * v - v * w;
  return -(rho * c * c).trace().real();
}

namespace {
void check_scenario(const ScramblingScenario& s) {
  if (s.w0.space() != s.h.space() || s.v0.space() != s.h.space())
    throw ShapeError("H, W0 and V0 must share one space");
  if (s.rho && s.rho->space() != s.h.space()) throw ShapeError("state lives on a different space");
}
}  // namespace

double otoc_direct(const ScramblingScenario& s) {
  check_scenario(s);
  const Observable w = heisenberg(s.w0, s.h, s.tau);
  return otoc_commutator(s.state().data(), w.data(), s.v0.data());
}

Space primed(const Space& s) {
  Space r = s;
  for (auto& l : r) l.name += "'";
  return r;
}

LossSpec scrambling_spec(const DensityMatrix& rho, const Observable& v, const Mat& w, bool branch) {
  const Space& s = rho.space();
  KrausChannel d(s, primed(s), {w}, branch ? TraceCondition::Unchecked : TraceCondition::Preserving);
  return {LossKind::Scrambling, rho, v, std::move(d), branch};
}

IepResult otoc_iep(const ScramblingScenario& s, const ExtractionConfig& cfg) {
  check_scenario(s);
  const Mat& w0 = s.w0.data();
  const double gap = linalg::max_abs<double>(Mat(w0 * w0 - Mat::Identity(w0.rows(), w0.cols())));
  if (gap > 1e-9)
    throw AssumptionError("W0 must be unitary and self-adjoint (|W0^2 - I| = " + std::to_string(gap) + ")");
  const Observable w = heisenberg(s.w0, s.h, s.tau);
  const LossSpec spec = scrambling_spec(s.state(), s.v0, w.data(), false);
  return extract(spec, Recovery::canonical_x(s.v0.data()), cfg);
}

const char* to_string(WNormalization n) { return n == WNormalization::Rms ? "rms" : "trace"; }

OtocCpResult otoc_iep_cp(const ScramblingScenario& s, const ExtractionConfig& cfg,
                         WNormalization norm) {
  check_scenario(s);
  const DensityMatrix rho = s.state();
  const int d = rho.dim();
  if (linalg::max_abs<double>(Mat(rho.data() - Mat::Identity(d, d) / double(d))) > tol::trace)
    throw AssumptionError("the CP-map extension requires rho proportional to the identity");

  const Observable w = heisenberg(s.w0, s.h, s.tau);
  OtocCpResult r;
  r.normalization = norm;
  if (norm == WNormalization::Rms) {
    r.scale = std::sqrt(std::max(0.0, raw::expectation(rho.data(), w.data() * w.data())));
  } else {
    auto e = linalg::eigh<double>(s.w0.data());
    r.scale = e.values.cwiseAbs().sum();
  }
  r.iep.method = to_string(cfg.method);
  r.iep.recovery = "canonical";
  if (r.scale < 1e-12) {
    r.warnings.push_back("W vanishes; normalization is degenerate and the OTOC is 0");
    return r;
  }
  const Mat wt = w.data() / r.scale;
  r.q = raw::expectation(rho.data(), wt * wt);
  r.direct = otoc_commutator(rho.data(), wt, s.v0.data());
  if (std::abs(r.q - 1) > 1e-9)
    r.warnings.push_back("branch probability Tr[W~^2 rho] = " + std::to_string(r.q) +
                         " differs from 1; the extracted value is C(W~)/q");
  const LossSpec spec = scrambling_spec(rho, s.v0, wt, true);
  r.iep = extract(spec, Recovery::canonical_x(s.v0.data()), cfg);
  return r;
}

}  // namespace irrevkit
