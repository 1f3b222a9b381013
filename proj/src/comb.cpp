#include "irrevkit/comb.hpp"

#include "irrevkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace irrevkit {

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::Error: return "error";
    case LossKind::Disturbance: return "disturbance";
    case LossKind::Scrambling: return "scrambling";
  }
  return "?";
}

const char* to_string(ExtractionMethod m) {
  return m == ExtractionMethod::Analytic ? "analytic" : "extrapolated";
}

KrausChannel measurement_to_register(const Instrument& meas, const std::string& label) {
  const int dp = int(meas.outcomes().size());
  const int ds = total_dim(meas.in_space());
  std::vector<Mat> ks;
  for (const auto& b : meas.branches()) {
    const int m = meas.outcome_index(b.label);
    for (Eigen::Index i = 0; i < b.kraus.rows(); ++i) {
      Mat k = Mat::Zero(dp, ds);
      k.row(m) = b.kraus.row(i);
      ks.push_back(std::move(k));
    }
  }
  return KrausChannel(meas.in_space(), {{label, dp}}, std::move(ks));
}

LossProcess build_loss(const LossSpec& spec, double theta) {
  const Space& s = spec.rho.space();
  if (spec.generator.space() != s)
    throw ShapeError("generator space " + describe(spec.generator.space()) +
                     " differs from state space " + describe(s));
  if (spec.process.in_space() != s)
    throw ShapeError("process input " + describe(spec.process.in_space()) +
                     " differs from state space " + describe(s));
  for (const auto& l : spec.process.out_space())
    if (l.name == kAncilla) throw CompositeSpaceError("label Q is reserved for the ancilla");

  auto st = raw::clip_state(spec.rho.data());
  const Mat u0 = linalg::expi_herm<double>(spec.generator.data(), theta);
  const Mat u1 = u0.adjoint();
  const int dout = spec.process.out_dim();

  std::vector<Mat> ks;
  for (Eigen::Index k = 0; k < st.values.size(); ++k) {
    if (st.values(k) <= 0) continue;
    const Vec psi = std::sqrt(st.values(k)) * st.vectors.col(k);
    const Vec a0 = u0 * psi, a1 = u1 * psi;
    for (const auto& n : spec.process.kraus()) {
      Mat kk = Mat::Zero(2 * dout, 2);
      kk.block(0, 0, dout, 1) = n * a0;
      kk.block(dout, 1, dout, 1) = n * a1;
      ks.push_back(std::move(kk));
    }
  }
  const Space in{{kAncilla, 2}};
  KrausChannel ch(in, concat(in, spec.process.out_space()), std::move(ks),
                  spec.branch ? TraceCondition::Unchecked : TraceCondition::Preserving);
  return {spec.kind, spec.rho, spec.generator, theta, spec.process, std::move(ch)};
}

LossSpec error_spec(const DensityMatrix& rho, const Observable& a, const Instrument& meas) {
  return {LossKind::Error, rho, a, measurement_to_register(meas)};
}

LossSpec disturbance_spec(const DensityMatrix& rho, const Observable& b, const Instrument& meas) {
  return {LossKind::Disturbance, rho, b, meas.channel()};
}

LossProcess build_loss_error(const DensityMatrix& rho, const Observable& a, double theta,
                             const Instrument& meas) {
  return build_loss(error_spec(rho, a, meas), theta);
}

LossProcess build_loss_disturbance(const DensityMatrix& rho, const Observable& b, double theta,
                                   const Instrument& meas) {
  return build_loss(disturbance_spec(rho, b, meas), theta);
}

LossSpec two_copy_spec(const DensityMatrix& rho, const Observable& generator,
                       const Instrument& meas, LossKind kind) {
  if (rho.space() != generator.space() || meas.in_space() != rho.space())
    throw ShapeError("state, generator and instrument must share one space");
  const int d = rho.dim();
  const Space s1{{"S1", d}}, s2{{"S2", d}};
  const Space both = concat(s1, s2);
  DensityMatrix rho2(both, linalg::kron<double>(rho.data(), rho.data()));
  Observable g2(both, linalg::kron<double>(generator.data(), Mat::Identity(d, d)));

  const KrausChannel inner = kind == LossKind::Error
                                 ? measurement_to_register(meas)
                                 : meas.channel();
  std::vector<Mat> ks;
  for (int i = 0; i < d; ++i) {
    Mat bra = linalg::basis(d, i).adjoint();
    for (const auto& k : inner.kraus()) ks.push_back(linalg::kron<double>(bra, k));
  }
  KrausChannel process(both, inner.out_space(), std::move(ks));
  return {kind, rho2, g2, std::move(process)};
}

LossProcess build_loss_two_copy(const DensityMatrix& rho, const Observable& generator,
                                double theta, const Instrument& meas, LossKind kind) {
  return build_loss(two_copy_spec(rho, generator, meas, kind), theta);
}

CanonicalRecovery canonical_recovery(const Observable& x, double theta) {
  for (const auto& l : x.space())
    if (l.name == kAncilla) throw CompositeSpaceError("label Q is reserved for the ancilla");
  const int dt = x.dim();
  // e^{+i theta s_q X}, s_0 = +1, s_1 = -1
  const Mat v0 = linalg::expi_herm<double>(x.data(), -theta);
  const Mat v1 = v0.adjoint();
  const double r = 1.0 / std::sqrt(2.0);
  Vec plus(2), minus(2);
  plus << r, r;
  minus << r, -r;

  std::vector<Mat> ks;
  for (const Vec* j : {&plus, &minus})
    for (int e = 0; e < dt; ++e) {
      Mat k = Mat::Zero(2, 2 * dt);
      for (int q = 0; q < 2; ++q) {
        const Mat& v = q == 0 ? v0 : v1;
        const cplx jq = std::conj((*j)(q));
        for (int b = 0; b < dt; ++b)
          k.col(q * dt + b) += (*j) * (jq * v(e, b));
      }
      ks.push_back(std::move(k));
    }
  const Space out{{kAncilla, 2}};
  KrausChannel ch(concat(out, x.space()), out, std::move(ks));
  return {x, theta, std::move(ch)};
}

Observable pointer_observable(const Instrument& meas, const OutcomeFunction& f,
                              const std::string& label) {
  const auto& outs = meas.outcomes();
  Mat m = Mat::Zero(int(outs.size()), int(outs.size()));
  for (std::size_t i = 0; i < outs.size(); ++i) {
    auto it = f.find(outs[i]);
    if (it == f.end()) throw OutcomeFunctionError("outcome function misses outcome '" + outs[i] + "'");
    m(i, i) = it->second;
  }
  return Observable({{label, int(outs.size())}}, m);
}

Mat optimal_target_observable(const LossSpec& spec) {
  const Mat& rho = spec.rho.data();
  const Mat& g = spec.generator.data();
  const Mat sigma = spec.process(rho);
  const Mat rhs = spec.process(Mat(g * rho + rho * g));
  auto e = linalg::eigh<double>(linalg::hermitize<double>(sigma));
  Mat r = e.vectors.adjoint() * rhs * e.vectors;
  const Eigen::Index n = r.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = e.values(i) + e.values(j);
      r(i, j) = s > tol::eig ? r(i, j) / s : cplx(0);
    }
  return linalg::hermitize<double>(Mat(e.vectors * r * e.vectors.adjoint()));
}

Recovery Recovery::canonical_f(OutcomeFunction f) {
  Recovery r;
  r.f = std::move(f);
  return r;
}

Recovery Recovery::canonical_x(Mat x) {
  Recovery r;
  r.x = std::move(x);
  return r;
}

Recovery Recovery::optimize() {
  Recovery r;
  r.type = Type::Optimize;
  return r;
}

Recovery Recovery::explicit_channel(KrausChannel c) {
  Recovery r;
  r.type = Type::Explicit;
  r.channel = std::move(c);
  return r;
}

namespace {

// X for a canonical recovery: given, or the generator carried over to a
// same-shaped output, or the optimal one.
Mat resolve_x(const LossSpec& spec, const Recovery& rec) {
  if (rec.x) {
    if (rec.x->rows() != spec.process.out_dim() || rec.x->cols() != spec.process.out_dim())
      throw ShapeError("recovery observable does not match the process output " +
                       describe(spec.process.out_space()));
    return *rec.x;
  }
  if (rec.f) throw ShapeError("an outcome function needs the instrument; resolve it to X first");
  if (spec.kind != LossKind::Error && spec.process.out_dim() == spec.generator.dim())
    return spec.generator.data();
  return optimal_target_observable(spec);
}

std::string describe_recovery(const Recovery& rec) {
  switch (rec.type) {
    case Recovery::Type::Canonical: return "canonical";
    case Recovery::Type::Explicit: return "explicit";
    case Recovery::Type::Optimize: return "optimize";
  }
  return "?";
}

}  // namespace

double delta_sq_at(const LossSpec& spec, const Recovery& rec, double theta,
                   const OptimizerConfig& opt, DeltaReport* report) {
  const LossProcess loss = build_loss(spec, theta);
  const TestEnsemble omega = TestEnsemble::plus_minus(kAncilla);
  DeltaReport rep;
  switch (rec.type) {
    case Recovery::Type::Canonical: {
      Observable x(spec.process.out_space(), resolve_x(spec, rec));
      KrausChannel r = canonical_recovery(x, theta).channel;
      rep = spec.branch ? delta_cp(loss.channel, omega, r) : delta_with_recovery(loss.channel, r, omega);
      break;
    }
    case Recovery::Type::Explicit: {
      if (!rec.channel) throw ShapeError("explicit recovery without a channel");
      rep = spec.branch ? delta_cp(loss.channel, omega, *rec.channel)
                        : delta_with_recovery(loss.channel, *rec.channel, omega);
      break;
    }
    case Recovery::Type::Optimize: {
      if (spec.branch) throw ShapeError("optimized recovery needs a trace-preserving loss");
      const Space& out = spec.process.out_space();
      std::vector<WarmStart> starts{
          {"canonical:optimal", canonical_recovery(Observable(out, optimal_target_observable(spec)),
                                                   theta).channel}};
      if (rec.x)
        starts.push_back({"canonical:given", canonical_recovery(Observable(out, *rec.x), theta).channel});
      OptimizerConfig cfg = opt;
      // The objective moves by O(theta^2) in total, so the stopping rule scales with it.
      cfg.tol = opt.tol * theta * theta;
      rep = delta_min(loss.channel, omega, cfg, starts);
      break;
    }
  }
  const double d2 = rep.delta * rep.delta;
  if (report) *report = std::move(rep);
  return d2;
}

double analytic_coefficient(const LossSpec& spec, const Mat& x) {
  const Mat& rho = spec.rho.data();
  const Mat& g = spec.generator.data();
  const KrausChannel& n = spec.process;
  if (x.rows() != n.out_dim()) throw ShapeError("observable does not match the process output");
  const Mat n_rho = n(rho);
  const double q0 = n_rho.trace().real();
  if (q0 <= tol::prob) throw BranchProbabilityError("branch probability vanishes");
  const double grg = n(Mat(g * rho * g)).trace().real();
  const double cross = (x * n(Mat(g * rho + rho * g))).trace().real();
  const double xx = (x * x * n_rho).trace().real();
  return (grg - cross + xx) / q0;
}

std::pair<std::vector<double>, double> fit_even(const std::vector<std::pair<double, double>>& pts,
                                                int terms) {
  if (terms < 1 || int(pts.size()) < terms)
    throw ExtractionError("fit needs at least " + std::to_string(terms) + " grid points, got " +
                          std::to_string(pts.size()));
  // Fit g = y/theta^2 = c2 + c4 theta^2 + ... ; same relative residuals as fitting y.
  Eigen::MatrixXd a(pts.size(), terms);
  Eigen::VectorXd g(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double t = pts[i].first;
    if (t == 0) throw ExtractionError("theta grid contains 0");
    g(i) = pts[i].second / (t * t);
    double p = 1;
    for (int j = 0; j < terms; ++j, p *= t * t) a(i, j) = p;
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(g);
  Eigen::VectorXd fitted = a * c;
  double res = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    res = std::max(res, std::abs(g(i) - fitted(i)) / std::max(std::abs(g(i)), 1e-2));
  return {std::vector<double>(c.data(), c.data() + c.size()), res};
}

IepResult extract(const LossSpec& spec, const Recovery& rec, const ExtractionConfig& cfg) {
  IepResult out;
  out.recovery = describe_recovery(rec);
  out.method = to_string(cfg.method);

  if (cfg.method == ExtractionMethod::Analytic) {
    if (rec.type != Recovery::Type::Canonical)
      throw ExtractionError("analytic extraction applies to canonical recoveries only");
    out.value = analytic_coefficient(spec, resolve_x(spec, rec));
    out.coefficients = {out.value};
    return out;
  }

  if (cfg.theta_grid.empty()) throw ExtractionError("empty theta grid");
  const std::size_t n = cfg.theta_grid.size();
  std::vector<double> d2(n);
  std::vector<DeltaReport> reps(n);
  parallel_for(n, [&](std::size_t i) {
    d2[i] = delta_sq_at(spec, rec, cfg.theta_grid[i], cfg.optimizer, &reps[i]);
  });
  for (std::size_t i = 0; i < n; ++i) {
    out.theta_grid.emplace_back(cfg.theta_grid[i], d2[i]);
    if (!reps[i].branch_probabilities.empty()) {
      const auto& bp = reps[i].branch_probabilities;
      double mean = 0;
      for (double v : bp) mean += v;
      out.branch_probabilities.push_back(mean / double(bp.size()));
    }
    for (const auto& w : reps[i].warnings) {
      std::ostringstream s;
      s << "theta=" << cfg.theta_grid[i] << ": " << w;
      out.warnings.push_back(s.str());
    }
  }

  auto [c, res] = fit_even(out.theta_grid, cfg.fit_terms);
  out.coefficients = c;
  out.fit_residual = res;
  out.value = c.front();
  if (!(res <= cfg.tol)) {
    std::ostringstream s;
    s << "theta extrapolation failed: residual " << res << " > tol " << cfg.tol << "; grid:";
    for (const auto& [t, v] : out.theta_grid) s << " (" << t << ", " << v << ")";
    throw ExtractionError(s.str());
  }
  return out;
}

IepResult extract_epsilon(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                          const Recovery& rec, const ExtractionConfig& cfg) {
  LossSpec spec = error_spec(rho, a, meas);
  Recovery r = rec;
  if (r.type != Recovery::Type::Explicit && r.f && !r.x) r.x = pointer_observable(meas, *r.f).data();
  return extract(spec, r, cfg);
}

IepResult extract_eta(const DensityMatrix& rho, const Observable& b, const Instrument& meas,
                      const Recovery& rec, const ExtractionConfig& cfg) {
  return extract(disturbance_spec(rho, b, meas), rec, cfg);
}

}  // namespace irrevkit
