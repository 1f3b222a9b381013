#include "irrevkit/way.hpp"

#include "irrevkit/random.hpp"

#include <cmath>
#include <limits>

namespace irrevkit {

Mat total_charge(const Space& s, const ChargeAssignment& charges) {
  const int d = total_dim(s);
  Mat x = Mat::Zero(d, d);
  int left = 1;
  for (const auto& l : s) {
    auto it = charges.find(l.name);
    if (it == charges.end()) throw ImplementationError("no charge assigned to label '" + l.name + "'");
    if (it->second.rows() != l.dim || it->second.cols() != l.dim)
      throw ShapeError("charge on '" + l.name + "' has the wrong size");
    if (linalg::hermiticity_gap<double>(it->second) > tol::herm)
      throw ShapeError("charge on '" + l.name + "' is not Hermitian");
    x += raw::embed(it->second, left, d / (left * l.dim));
    left *= l.dim;
  }
  return x;
}

namespace {

void check_shapes(const Implementation& impl) {
  const int din = total_dim(impl.alpha) * total_dim(impl.beta);
  const int dout = total_dim(impl.alpha_out) * total_dim(impl.beta_out);
  if (din != dout) throw ImplementationError("input and output dimensions of U differ");
  if (impl.u.rows() != dout || impl.u.cols() != din) throw ShapeError("U has the wrong size");
  if (impl.rho_beta.space() != impl.beta) throw ShapeError("rho_beta must live on beta");
  const double gap = linalg::max_abs<double>(Mat(impl.u.adjoint() * impl.u - Mat::Identity(din, din)));
  if (gap > tol::tp) throw ImplementationError("U is not unitary (gap " + std::to_string(gap) + ")");
}

double spread(const Mat& x) {
  auto e = linalg::eigh<double>(x);
  return e.values.maxCoeff() - e.values.minCoeff();
}

double ratio(double num, double den) {
  if (den > 0) return num / den;
  return num > 0 ? std::numeric_limits<double>::infinity() : 0.0;
}

double commutator_expectation(const Mat& rho, const Mat& y, const Mat& a) {
  return std::abs((rho * (y * a - a * y)).trace());
}

struct Checked {
  double conservation;
  double implementation;
};

Checked validate(const Implementation& impl, const Space& alpha, const KrausChannel& target) {
  if (impl.alpha != alpha)
    throw ShapeError("implementation input " + describe(impl.alpha) + " differs from " + describe(alpha));
  const double c = check_conservation(impl);
  if (c > 1e-9) throw ConservationError("conservation law violated by " + std::to_string(c));
  const double g = implementation_gap(impl, target);
  if (g > 1e-8) throw ImplementationError("implementation misses the target map by " + std::to_string(g));
  return {c, g};
}

void finish(WayReport& r, const WayConfig& cfg) {
  r.slack = r.lhs - r.rhs;
  r.pass = r.slack >= -cfg.slack_tol;
}

double extracted_root(const IepResult& r) { return std::sqrt(std::max(0.0, r.value)); }

}  // namespace

double check_conservation(const Implementation& impl) {
  check_shapes(impl);
  const Mat xin = total_charge(concat(impl.alpha, impl.beta), impl.charges);
  const Mat xout = total_charge(concat(impl.alpha_out, impl.beta_out), impl.charges);
  return linalg::max_abs<double>(Mat(impl.u.adjoint() * xout * impl.u - xin));
}

KrausChannel implemented_channel(const Implementation& impl) {
  check_shapes(impl);
  auto st = raw::clip_state(impl.rho_beta.data());
  const int da = total_dim(impl.alpha), db = total_dim(impl.beta);
  const int dao = total_dim(impl.alpha_out), dbo = total_dim(impl.beta_out);
  std::vector<Mat> ks;
  for (Eigen::Index k = 0; k < st.values.size(); ++k) {
    if (st.values(k) <= 0) continue;
    // U (I (x) |k>)
    Mat uk = Mat::Zero(dao * dbo, da);
    for (int a = 0; a < da; ++a) uk.col(a) = impl.u.middleCols(a * db, db) * st.vectors.col(k);
    uk *= std::sqrt(st.values(k));
    for (int j = 0; j < dbo; ++j) {
      Mat kk(dao, da);
      for (int ap = 0; ap < dao; ++ap) kk.row(ap) = uk.row(ap * dbo + j);
      ks.push_back(std::move(kk));
    }
  }
  return KrausChannel(impl.alpha, impl.alpha_out, std::move(ks));
}

double implementation_gap(const Implementation& impl, const KrausChannel& target) {
  const KrausChannel n = implemented_channel(impl);
  if (n.in_dim() != target.in_dim() || n.out_dim() != target.out_dim())
    throw ShapeError("implementation and target map have different dimensions");
  return linalg::max_abs<double>(Mat(n.choi() - target.choi()));
}

double fisher_cost_upper(const Implementation& impl) {
  return raw::qfi(impl.rho_beta.data(), total_charge(impl.beta, impl.charges));
}

Observable y_operator(const KrausChannel& n, const Mat& x_in, const Mat& x_out) {
  if (x_in.rows() != n.in_dim() || x_out.rows() != n.out_dim())
    throw ShapeError("charges do not match the channel");
  return Observable(n.in_space(), linalg::hermitize<double>(Mat(x_in - n.adjoint_apply(x_out))));
}

WayReport way_bound_error(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                          const Implementation& impl, const WayConfig& cfg) {
  const KrausChannel pm = measurement_to_register(meas);
  const Checked chk = validate(impl, rho.space(), pm);
  const Mat xs = total_charge(impl.alpha, impl.charges);
  const Mat xp = total_charge(impl.alpha_out, impl.charges);
  const Mat y = y_operator(pm, xs, xp).data();

  WayReport r;
  r.bound = "error";
  r.terms.conservation_gap = chk.conservation;
  r.terms.implementation_gap = chk.implementation;
  r.terms.commutator_expectation = commutator_expectation(rho.data(), y, a.data());
  r.terms.fisher_cost_upper = fisher_cost_upper(impl);
  r.terms.qfi_state = raw::qfi(rho.data(), xs);
  r.terms.variance_out = raw::variance(pm(rho.data()), xp);
  r.terms.delta = std::sqrt(r.terms.qfi_state) + 2 * std::sqrt(r.terms.variance_out);
  r.rhs = ratio(r.terms.commutator_expectation, std::sqrt(r.terms.fisher_cost_upper) + r.terms.delta);

  if (cfg.lhs_value) {
    r.lhs = *cfg.lhs_value;
    r.lhs_method = "given";
  } else {
    Recovery rec = cfg.lhs == WayLhs::Optimize
                       ? Recovery::optimize()
                       : Recovery::canonical_x(optimal_target_observable(error_spec(rho, a, meas)));
    r.lhs_detail = extract_epsilon(rho, a, meas, rec, cfg.extraction);
    r.lhs = extracted_root(*r.lhs_detail);
    r.lhs_method = cfg.lhs == WayLhs::Optimize ? "optimize" : "canonical";
  }
  finish(r, cfg);
  return r;
}

WayReport way_bound_disturbance(const DensityMatrix& rho, const Observable& b,
                                const Instrument& meas, const Implementation& impl,
                                const WayConfig& cfg) {
  const KrausChannel im = meas.channel();
  const Checked chk = validate(impl, rho.space(), im);
  const Mat xs = total_charge(impl.alpha, impl.charges);
  const Mat xso = total_charge(impl.alpha_out, impl.charges);
  const Mat y = y_operator(im, xs, xso).data();

  WayReport r;
  r.bound = "disturbance";
  r.terms.conservation_gap = chk.conservation;
  r.terms.implementation_gap = chk.implementation;
  r.terms.commutator_expectation = commutator_expectation(rho.data(), y, b.data());
  r.terms.fisher_cost_upper = fisher_cost_upper(impl);
  r.terms.qfi_state = raw::qfi(rho.data(), xs);
  r.terms.variance_out = raw::variance(im(rho.data()), xso);
  r.terms.delta = std::sqrt(r.terms.qfi_state) + 2 * std::sqrt(r.terms.variance_out);
  r.rhs = ratio(r.terms.commutator_expectation, std::sqrt(r.terms.fisher_cost_upper) + r.terms.delta);

  if (cfg.lhs_value) {
    r.lhs = *cfg.lhs_value;
    r.lhs_method = "given";
  } else {
    Recovery rec =
        cfg.lhs == WayLhs::Optimize
            ? Recovery::optimize()
            : Recovery::canonical_x(optimal_target_observable(disturbance_spec(rho, b, meas)));
    r.lhs_detail = extract_eta(rho, b, meas, rec, cfg.extraction);
    r.lhs = extracted_root(*r.lhs_detail);
    r.lhs_method = cfg.lhs == WayLhs::Optimize ? "optimize" : "canonical";
  }
  finish(r, cfg);
  return r;
}

WayReport way_bound_error_yanase(const DensityMatrix& rho, const Observable& a,
                                 const Instrument& meas, const Implementation& impl,
                                 const WayConfig& cfg) {
  const KrausChannel pm = measurement_to_register(meas);
  const Mat xp = total_charge(impl.alpha_out, impl.charges);
  Mat off = xp;
  off.diagonal().setZero();
  if (linalg::max_abs<double>(off) > tol::herm)
    throw YanaseConditionError("pointer charge does not commute with the pointer basis");
  const Checked chk = validate(impl, rho.space(), pm);
  const Mat xs = total_charge(impl.alpha, impl.charges);

  WayReport r;
  r.bound = "error-yanase";
  r.terms.conservation_gap = chk.conservation;
  r.terms.implementation_gap = chk.implementation;
  r.terms.commutator_expectation = commutator_expectation(rho.data(), xs, a.data());
  r.terms.fisher_cost_upper = fisher_cost_upper(impl);
  r.terms.qfi_state = raw::qfi(rho.data(), xs);
  r.terms.variance_out = raw::variance(pm(rho.data()), xp);
  r.rhs = ratio(r.terms.commutator_expectation,
                std::sqrt(r.terms.fisher_cost_upper + r.terms.qfi_state));

  if (cfg.lhs_value) {
    r.lhs = *cfg.lhs_value;
    r.lhs_method = "given";
  } else {
    Recovery rec = cfg.lhs == WayLhs::Optimize
                       ? Recovery::optimize()
                       : Recovery::canonical_x(optimal_target_observable(error_spec(rho, a, meas)));
    r.lhs_detail = extract_epsilon(rho, a, meas, rec, cfg.extraction);
    r.lhs = extracted_root(*r.lhs_detail);
    r.lhs_method = cfg.lhs == WayLhs::Optimize ? "optimize" : "canonical";
  }
  finish(r, cfg);
  return r;
}

WayReport way_bound_otoc(const ScramblingScenario& s, const Implementation& impl,
                         const WayConfig& cfg) {
  const DensityMatrix rho = s.state();
  const Observable w = heisenberg(s.w0, s.h, s.tau);
  const KrausChannel dw(rho.space(), impl.alpha_out, {w.data()});
  const Checked chk = validate(impl, rho.space(), dw);
  const Mat xs = total_charge(impl.alpha, impl.charges);
  const Mat xso = total_charge(impl.alpha_out, impl.charges);
  const Mat y = y_operator(dw, xs, xso).data();

  WayReport r;
  r.bound = "otoc";
  r.terms.conservation_gap = chk.conservation;
  r.terms.implementation_gap = chk.implementation;
  r.terms.commutator_expectation = commutator_expectation(rho.data(), y, s.v0.data());
  r.terms.fisher_cost_upper = fisher_cost_upper(impl);
  r.terms.qfi_state = raw::qfi(rho.data(), xs);
  r.terms.variance_out = raw::variance(dw(rho.data()), xso);
  r.terms.delta = spread(xs) + spread(xso);
  r.rhs = ratio(r.terms.commutator_expectation, std::sqrt(r.terms.fisher_cost_upper) + r.terms.delta);
  if (cfg.lhs_value) {
    r.lhs = *cfg.lhs_value;
    r.lhs_method = "given";
  } else {
    r.lhs = std::sqrt(std::max(0.0, otoc_direct(s)));
    r.lhs_method = "direct";
  }
  finish(r, cfg);
  return r;
}

// ---------------------------------------------------------------- fixtures

Mat conserving_unitary(std::uint64_t seed, const RVec& charge_diag) {
  auto g = rnd::engine(seed, 0xc0);
  const int d = int(charge_diag.size());
  std::vector<bool> used(d, false);
  Mat u = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    if (used[i]) continue;
    std::vector<int> block;
    for (int j = i; j < d; ++j)
      if (!used[j] && std::abs(charge_diag(j) - charge_diag(i)) < 1e-9) {
        block.push_back(j);
        used[j] = true;
      }
    const Mat b = rnd::unitary(g, int(block.size()));
    for (std::size_t r = 0; r < block.size(); ++r)
      for (std::size_t c = 0; c < block.size(); ++c) u(block[r], block[c]) = b(r, c);
  }
  return u;
}

namespace {

struct Coupling {
  Mat xs, xe, u;  // u conserves xs (x) I + I (x) xe
};

Coupling random_coupling(rnd::Engine& g, std::uint64_t seed, int ds, int de) {
  RVec s(ds);
  for (int i = 0; i < ds; ++i) s(i) = rnd::uniform_int(g, 0, 2);
  const Mat vs = rnd::unitary(g, ds);
  Coupling c;
  c.xs = linalg::hermitize<double>(Mat(vs * s.cast<cplx>().asDiagonal() * vs.adjoint()));
  c.xe = Mat::Zero(de, de);
  for (int e = 0; e < de; ++e) c.xe(e, e) = e;
  RVec total(ds * de);
  for (int i = 0; i < ds; ++i)
    for (int e = 0; e < de; ++e) total(i * de + e) = s(i) + e;
  const Mat rot = linalg::kron<double>(vs, Mat::Identity(de, de));
  c.u = rot * conserving_unitary(seed, total) * rot.adjoint();
  return c;
}

DensityMatrix ancilla_state(rnd::Engine& g, const Space& e, AncillaKind kind) {
  const int de = total_dim(e);
  if (kind == AncillaKind::Coherent) return DensityMatrix::pure(e, rnd::pure(g, de));
  Mat r = Mat::Zero(de, de);
  double t = 0;
  for (int i = 0; i < de; ++i) t += (r(i, i) = rnd::uniform(g, 0.05, 1)).real();
  return DensityMatrix(e, r / t);
}

// Branches (I (x) <j|) U (I (x) sqrt(l_k)|k>), labelled by j.
std::vector<Branch> probe_branches(const Mat& u, const DensityMatrix& rho_e, int ds, int de) {
  auto st = raw::clip_state(rho_e.data());
  std::vector<Branch> bs;
  for (int j = 0; j < de; ++j)
    for (Eigen::Index k = 0; k < st.values.size(); ++k) {
      if (st.values(k) <= 0) continue;
      const Vec kv = std::sqrt(st.values(k)) * st.vectors.col(k);
      Mat m(ds, ds);
      for (int a = 0; a < ds; ++a)
        for (int b = 0; b < ds; ++b) {
          cplx acc = 0;
          for (int e = 0; e < de; ++e) acc += u(a * de + j, b * de + e) * kv(e);
          m(a, b) = acc;
        }
      bs.push_back({"e" + std::to_string(j), m});
    }
  return bs;
}

// Permutation unitary sending basis state `in` (digits over in_dims) to `f(in)`.
template <class F>
Mat basis_map(const std::vector<int>& dims, F f) {
  const int d = linalg::product(dims);
  Mat p = Mat::Zero(d, d);
  std::vector<int> digits(dims.size());
  for (int idx = 0; idx < d; ++idx) {
    int rem = idx;
    for (int i = int(dims.size()) - 1; i >= 0; --i) {
      digits[i] = rem % dims[i];
      rem /= dims[i];
    }
    const int out = f(digits);
    p(out, idx) = 1;
  }
  return p;
}

DensityMatrix random_system_state(rnd::Engine& g, const Space& s) {
  const int d = total_dim(s);
  return DensityMatrix(s, rnd::state(g, d, rnd::uniform_int(g, 1, d)));
}

}  // namespace

WayErrorFixture way_error_fixture(std::uint64_t seed, int ds, int de, AncillaKind kind) {
  auto g = rnd::engine(seed, 0xe1);
  const Coupling c = random_coupling(g, seed, ds, de);
  const Space s{{"S", ds}}, e{{"E", de}};
  const DensityMatrix rho_e = ancilla_state(g, e, kind);
  Instrument meas(s, s, probe_branches(c.u, rho_e, ds, de));

  // Input order [S, E, F, P].
  const std::vector<int> dims{ds, de, de, de};
  const Mat u1 = linalg::kron<double>(c.u, Mat::Identity(de * de, de * de));
  const Mat copy = basis_map(dims, [&](const std::vector<int>& x) {
    return ((x[0] * de + x[1]) * de + (x[2] + x[1]) % de) * de + x[3];
  });
  const Mat swap = basis_map(dims, [&](const std::vector<int>& x) {
    return ((x[0] * de + x[3]) * de + x[2]) * de + x[1];
  });
  // [S, E, F, P] -> [P, S, E, F]
  const Mat reorder = basis_map(dims, [&](const std::vector<int>& x) {
    return ((x[3] * ds + x[0]) * de + x[1]) * de + x[2];
  });
  Mat u = reorder * swap * copy * u1;

  Mat zero = Mat::Zero(de, de);
  zero(0, 0) = 1;
  const Space beta{{"E", de}, {"F", de}, {"P", de}};
  DensityMatrix rho_beta(beta, linalg::kron<double>(linalg::kron<double>(rho_e.data(), zero), zero));
  Implementation impl{s,
                      beta,
                      {{"P", de}},
                      {{"S", ds}, {"E", de}, {"F", de}},
                      rho_beta,
                      u,
                      {{"S", c.xs}, {"E", c.xe}, {"F", Mat::Zero(de, de)}, {"P", c.xe}}};
  return {random_system_state(g, s), Observable(s, rnd::hermitian(g, ds)), std::move(meas),
          std::move(impl)};
}

WayDisturbanceFixture way_disturbance_fixture(std::uint64_t seed, int ds, int de, AncillaKind kind) {
  auto g = rnd::engine(seed, 0xd1);
  const Coupling c = random_coupling(g, seed, ds, de);
  const Space s{{"S", ds}}, so{{"S'", ds}}, e{{"E", de}};
  const DensityMatrix rho_e = ancilla_state(g, e, kind);
  Instrument meas(s, so, probe_branches(c.u, rho_e, ds, de));
  Implementation impl{s, e, so, e, rho_e, c.u, {{"S", c.xs}, {"S'", c.xs}, {"E", c.xe}}};
  return {random_system_state(g, s), Observable(s, rnd::hermitian(g, ds)), std::move(meas),
          std::move(impl)};
}

WayDisturbanceFixture way_swap_fixture(std::uint64_t seed, int d) {
  auto g = rnd::engine(seed, 0x5a);
  RVec spec(d);
  for (int i = 0; i < d; ++i) spec(i) = rnd::uniform_int(g, 0, 2);
  const Mat v = rnd::unitary(g, d);
  const Mat x = linalg::hermitize<double>(Mat(v * spec.cast<cplx>().asDiagonal() * v.adjoint()));
  const Space s{{"S", d}}, so{{"S'", d}}, e{{"E", d}};
  const DensityMatrix rho_e = random_system_state(g, e);
  const Mat swap = basis_map({d, d}, [&](const std::vector<int>& xs) { return xs[1] * d + xs[0]; });

  auto st = raw::clip_state(rho_e.data());
  std::vector<Branch> bs;
  for (Eigen::Index k = 0; k < st.values.size(); ++k) {
    if (st.values(k) <= 0) continue;
    for (int i = 0; i < d; ++i)
      bs.push_back({"r", std::sqrt(st.values(k)) * st.vectors.col(k) * linalg::basis(d, i).adjoint()});
  }
  Instrument meas(s, so, std::move(bs));
  Implementation impl{s, e, so, e, rho_e, swap, {{"S", x}, {"S'", x}, {"E", x}}};
  return {random_system_state(g, s), Observable(s, rnd::hermitian(g, d)), std::move(meas),
          std::move(impl)};
}

WayOtocFixture way_otoc_fixture(std::uint64_t seed, int qubits, int de) {
  auto g = rnd::engine(seed, 0x07);
  const int d = 1 << qubits;
  const Space s{{"S", d}}, so{{"S'", d}}, e{{"E", de}};
  ScramblingScenario sc{Observable(s, rnd::hermitian(g, d)),
                        Observable(s, linalg::pauli_string(rnd::pauli_string(g, qubits))),
                        Observable(s, linalg::pauli_string(rnd::pauli_string(g, qubits))),
                        rnd::uniform(g, 0, 2),
                        std::nullopt};
  const Mat w = heisenberg(sc.w0, sc.h, sc.tau).data();
  RVec spec(d);
  for (int i = 0; i < d; ++i) spec(i) = rnd::uniform_int(g, 0, 2);
  const Mat v = rnd::unitary(g, d);
  const Mat xs = linalg::hermitize<double>(Mat(v * spec.cast<cplx>().asDiagonal() * v.adjoint()));
  const Mat xso = linalg::hermitize<double>(Mat(w * xs * w.adjoint()));
  Mat xe = Mat::Zero(de, de);
  RVec ediag(de);
  for (int i = 0; i < de; ++i) xe(i, i) = ediag(i) = i;
  const Mat ue = conserving_unitary(seed, ediag);
  const DensityMatrix rho_e = DensityMatrix::pure(e, rnd::pure(g, de));
  Implementation impl{s, e, so, e, rho_e, linalg::kron<double>(w, ue),
                      {{"S", xs}, {"S'", xso}, {"E", xe}}};
  return {std::move(sc), std::move(impl)};
}

}  // namespace irrevkit
