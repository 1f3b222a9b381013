#include "irrevkit/irrev.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace irrevkit {

namespace {

void check_pair(const KrausChannel& loss, const KrausChannel& recovery,
                const TestEnsemble& omega) {
  if (loss.in_space() != omega.space())
    throw ShapeError("loss input " + describe(loss.in_space()) + " differs from ensemble space " +
                     describe(omega.space()));
  if (recovery.in_space() != loss.out_space())
    throw ShapeError("recovery input " + describe(recovery.in_space()) +
                     " differs from loss output " + describe(loss.out_space()));
  if (recovery.out_space() != loss.in_space())
    throw ShapeError("recovery output " + describe(recovery.out_space()) +
                     " differs from loss input " + describe(loss.in_space()));
}

DeltaReport assemble(const std::vector<double>& p, const std::vector<double>& d2) {
  DeltaReport r;
  double s = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double dk2 = std::max(0.0, d2[k]);
    r.per_state.emplace_back(int(k), std::sqrt(dk2));
    s += p[k] * dk2;
  }
  r.delta = std::sqrt(std::max(0.0, s));
  return r;
}

}  // namespace

DeltaReport delta_with_recovery(const KrausChannel& loss, const KrausChannel& recovery,
                                const TestEnsemble& omega) {
  check_pair(loss, recovery, omega);
  std::vector<double> p, d2;
  for (const auto& e : omega.entries()) {
    Mat out = recovery(loss(e.rho.data()));
    p.push_back(e.p);
    d2.push_back(1.0 - raw::fidelity_sq(e.rho.data(), out));
  }
  DeltaReport r = assemble(p, d2);
  r.recovery_used = recovery;
  return r;
}

DeltaReport delta_cp(const KrausChannel& branch, const TestEnsemble& omega,
                     const KrausChannel& recovery) {
  check_pair(branch, recovery, omega);
  std::vector<double> p, d2, q;
  for (const auto& e : omega.entries()) {
    Mat mid = branch(e.rho.data());
    const double qk = mid.trace().real();
    if (qk <= tol::prob) throw BranchProbabilityError("branch probability vanishes for a test state");
    Mat out = recovery(mid) / qk;
    p.push_back(e.p);
    q.push_back(qk);
    d2.push_back(1.0 - raw::fidelity_sq(e.rho.data(), out));
  }
  DeltaReport r = assemble(p, d2);
  r.recovery_used = recovery;
  r.branch_probabilities = q;
  return r;
}

KrausChannel petz_recovery(const KrausChannel& loss, const DensityMatrix& sigma_ref) {
  if (sigma_ref.space() != loss.in_space())
    throw ShapeError("reference state must live on the loss input space");
  auto sig = raw::clip_state(sigma_ref.data());
  Mat sqrt_sigma = linalg::apply_spectral<double>(
      {sig.values, sig.vectors}, [](double x) -> cplx { return std::sqrt(std::max(0.0, x)); });
  auto out = linalg::eigh<double>(loss(sigma_ref.data()));
  Mat inv_sqrt = linalg::apply_spectral<double>(out, [](double x) -> cplx {
    return x > tol::eig ? 1.0 / std::sqrt(x) : 0.0;
  });
  std::vector<Mat> ks;
  for (const auto& k : loss.kraus()) ks.push_back(sqrt_sigma * k.adjoint() * inv_sqrt);
  // kernel of loss(sigma) -> sigma_ref
  for (Eigen::Index b = 0; b < out.values.size(); ++b) {
    if (out.values(b) > tol::eig) continue;
    for (Eigen::Index a = 0; a < sig.values.size(); ++a) {
      if (sig.values(a) <= 0) continue;
      ks.push_back(std::sqrt(sig.values(a)) * sig.vectors.col(a) * out.vectors.col(b).adjoint());
    }
  }
  KrausChannel r =
      KrausChannel(loss.out_space(), loss.in_space(), ks, TraceCondition::Unchecked).minimal();
  // Remove residual round-off from the trace condition.
  Mat s = Mat::Zero(r.in_dim(), r.in_dim());
  for (const auto& k : r.kraus()) s += k.adjoint() * k;
  Mat fix = linalg::func_herm<double>(s, [](double x) -> cplx { return 1.0 / std::sqrt(x); });
  std::vector<Mat> fixed;
  for (const auto& k : r.kraus()) fixed.push_back(k * fix);
  return KrausChannel(loss.out_space(), loss.in_space(), std::move(fixed));
}

namespace stinespring {

Mat from_kraus(const KrausChannel& r, int env_dim) {
  const KrausChannel m = int(r.kraus().size()) > env_dim ? r.minimal() : r;
  if (int(m.kraus().size()) > env_dim) throw ShapeError("too many Kraus operators for the environment");
  const int n = m.out_dim(), d = m.in_dim();
  Mat v = Mat::Zero(n * env_dim, d);
  for (std::size_t a = 0; a < m.kraus().size(); ++a)
    for (int i = 0; i < n; ++i) v.row(i * env_dim + a) = m.kraus()[a].row(i);
  return v;
}

KrausChannel to_kraus(const Mat& v, const Space& in, const Space& out, int env_dim) {
  const int n = total_dim(out);
  std::vector<Mat> ks;
  for (int a = 0; a < env_dim; ++a) {
    Mat k(n, v.cols());
    for (int i = 0; i < n; ++i) k.row(i) = v.row(i * env_dim + a);
    if (k.norm() > 1e-15) ks.push_back(k);
  }
  if (ks.empty()) ks.push_back(Mat::Zero(n, v.cols()));
  return KrausChannel(in, out, std::move(ks), TraceCondition::Unchecked);
}

}  // namespace stinespring

namespace {

// sum_k p_k F^2(rho_k, Tr_env[V sigma_k V^dag]) and its Euclidean gradient.
struct Objective {
  int n = 0, e = 0;
  std::vector<double> p;
  std::vector<Mat> sigma;
  std::vector<Mat> target;
  std::vector<Mat> sqrt_target;
  std::vector<Vec> psi;  // set when the target is pure

  double operator()(const Mat& v, Mat* grad) const {
    double f = 0;
    if (grad) grad->setZero(v.rows(), v.cols());
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (psi[k].size()) {
        const Vec& s = psi[k];
        Mat y = Mat::Zero(e, v.cols());
        for (int i = 0; i < n; ++i) y += std::conj(s(i)) * v.middleRows(i * e, e);
        Mat ys = y * sigma[k];
        f += p[k] * (ys.cwiseProduct(y.conjugate())).sum().real();
        if (grad)
          for (int i = 0; i < n; ++i) grad->middleRows(i * e, e) += (2.0 * p[k] * s(i)) * ys;
      } else {
        Mat vs = v * sigma[k];
        Mat tau = linalg::trace_out_last<double>(Mat(vs * v.adjoint()), e);
        Mat m = sqrt_target[k] * tau * sqrt_target[k];
        auto me = linalg::eigh<double>(m);
        double fk = 0;
        for (Eigen::Index j = 0; j < me.values.size(); ++j)
          if (me.values(j) > 0) fk += std::sqrt(me.values(j));
        f += p[k] * fk * fk;
        if (grad) {
          Mat inv = linalg::apply_spectral<double>(me, [](double x) -> cplx {
            return x > 1e-14 ? 1.0 / std::sqrt(x) : 0.0;
          });
          Mat h = fk * sqrt_target[k] * inv * sqrt_target[k];
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (h(i, j) != cplx(0))
                grad->middleRows(i * e, e) += (2.0 * p[k] * h(i, j)) * vs.middleRows(j * e, e);
        }
      }
    }
    return f;
  }
};

struct RunResult {
  Mat v;
  double value;
  bool converged;
  std::vector<std::pair<int, double>> trace;
};

RunResult ascend(const Objective& obj, Mat v, const OptimizerConfig& cfg) {
  Mat g;
  double f = obj(v, &g);
  RunResult r{v, f, false, {{0, f}}};
  Mat v_prev, rg_prev;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Mat vg = v.adjoint() * g;
    Mat rg = g - v * linalg::hermitize<double>(vg);
    const double gn2 = rg.squaredNorm();
    if (gn2 < 1e-28) { r.converged = true; break; }
    // Barzilai-Borwein trial step, cfg.step on the first iteration.
    double t = cfg.step;
    if (it > 1) {
      const Mat s = v - v_prev;
      const double sy = -(s.cwiseProduct((rg - rg_prev).conjugate())).sum().real();
      if (sy > 0) t = std::clamp(s.squaredNorm() / sy, 1e-6 * cfg.step, 1e4 * cfg.step);
    }
    v_prev = v;
    rg_prev = rg;
    Mat vn;
    double fn = -1;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      vn = linalg::qf<double>(Mat(v + t * rg));
      fn = obj(vn, nullptr);
      if (fn >= f + 1e-4 * t * gn2) { accepted = true; break; }
      t *= 0.5;
    }
    if (!accepted) { r.converged = true; break; }
    const double change = fn - f;
    v = vn;
    f = obj(v, &g);
    r.trace.emplace_back(it, f);
    if (change < cfg.tol) { r.converged = true; break; }
  }
  r.v = v;
  r.value = f;
  return r;
}

Mat random_isometry(int rows, int cols, std::uint64_t seed, int restart) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(restart)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> g;
  Mat a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = cplx(g(rng), g(rng));
  return linalg::qf<double>(a);
}

}  // namespace

DeltaReport delta_min(const KrausChannel& loss, const TestEnsemble& omega,
                      const OptimizerConfig& cfg, const std::vector<WarmStart>& extra) {
  if (loss.in_space() != omega.space())
    throw ShapeError("loss input differs from ensemble space");
  const int n = loss.in_dim(), m = loss.out_dim(), e = n * m;
  Objective obj;
  obj.n = n;
  obj.e = e;
  for (const auto& en : omega.entries()) {
    obj.p.push_back(en.p);
    obj.sigma.push_back(loss(en.rho.data()));
    obj.target.push_back(en.rho.data());
    auto c = raw::clip_state(en.rho.data());
    obj.sqrt_target.push_back(linalg::apply_spectral<double>(
        {c.values, c.vectors}, [](double x) -> cplx { return std::sqrt(std::max(0.0, x)); }));
    obj.psi.push_back(c.rank == 1 ? Vec(c.vectors.col(c.values.size() - 1)) : Vec());
  }

  KrausChannel petz = petz_recovery(loss, omega.average());
  std::vector<WarmStart> starts{{"petz", petz}};
  starts.insert(starts.end(), extra.begin(), extra.end());
  for (const auto& s : starts)
    if (s.recovery.in_space() != loss.out_space() || s.recovery.out_space() != loss.in_space())
      throw ShapeError("warm start '" + s.name + "' has the wrong spaces");

  std::vector<std::pair<std::string, Mat>> inits;
  for (const auto& s : starts) inits.emplace_back(s.name, stinespring::from_kraus(s.recovery, e));
  for (int r = 0; r < cfg.restarts; ++r)
    inits.emplace_back("random:" + std::to_string(r), random_isometry(n * e, m, cfg.seed, r));

  std::optional<RunResult> best;
  std::string best_name;
  for (const auto& [name, v0] : inits) {
    RunResult rr = ascend(obj, v0, cfg);
    if (!best || rr.value > best->value) {
      best = std::move(rr);
      best_name = name;
    }
  }

  KrausChannel rec = stinespring::to_kraus(best->v, loss.out_space(), loss.in_space(), e);
  DeltaReport rep = delta_with_recovery(loss, rec, omega);
  rep.optimizer_trace = best->trace;
  rep.converged = best->converged;
  rep.local_optimum_only = true;
  rep.start_used = best_name;
  rep.petz_delta = delta_with_recovery(loss, petz, omega).delta;
  // The optimizer never returns worse than the Petz start.
  if (rep.delta > rep.petz_delta) {
    DeltaReport p = delta_with_recovery(loss, petz, omega);
    p.optimizer_trace = rep.optimizer_trace;
    p.converged = rep.converged;
    p.local_optimum_only = true;
    p.start_used = "petz";
    p.petz_delta = rep.petz_delta;
    rep = std::move(p);
  }
  if (!rep.converged) rep.warnings.push_back("optimizer reached max_iters before convergence");
  return rep;
}

}  // namespace irrevkit
