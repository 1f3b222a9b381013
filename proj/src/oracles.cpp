#include "irrevkit/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace irrevkit {

namespace {

Mat sqrt_state(const DensityMatrix& rho) {
  auto c = raw::clip_state(rho.data());
  return linalg::apply_spectral<double>({c.values, c.vectors},
                                        [](double x) -> cplx { return std::sqrt(std::max(0.0, x)); });
}

void check_on(const Space& s, const Space& t, const char* what) {
  if (s != t) throw ShapeError(std::string(what) + " lives on " + describe(t) + ", expected " + describe(s));
}

double f_of(const OutcomeFunction& f, const std::string& m) {
  auto it = f.find(m);
  if (it == f.end()) throw OutcomeFunctionError("outcome function misses outcome '" + m + "'");
  return it->second;
}

// Re Tr[Pi_m A rho] and p_m per outcome, in instrument outcome order.
void outcome_moments(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                     std::vector<double>& moment, std::vector<double>& p) {
  moment.clear();
  p.clear();
  for (const auto& m : meas.outcomes()) {
    Mat e = meas.effect(m);
    moment.push_back((e * a.data() * rho.data()).trace().real());
    p.push_back(std::max(0.0, (e * rho.data()).trace().real()));
  }
}

}  // namespace

double ozawa_error(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                   const OutcomeFunction& f) {
  check_on(rho.space(), a.space(), "observable");
  check_on(rho.space(), meas.in_space(), "instrument input");
  const Mat s = sqrt_state(rho);
  const int d = rho.dim();
  double acc = 0;
  for (const auto& b : meas.branches()) {
    Mat shifted = a.data() - f_of(f, b.label) * Mat::Identity(d, d);
    acc += (b.kraus * shifted * s).squaredNorm();
  }
  return std::sqrt(acc);
}

double ozawa_disturbance(const DensityMatrix& rho, const Observable& b, const Instrument& meas) {
  check_on(rho.space(), b.space(), "observable");
  check_on(rho.space(), meas.in_space(), "instrument input");
  if (meas.out_space().size() != meas.in_space().size() ||
      total_dim(meas.out_space()) != total_dim(meas.in_space()))
    throw ShapeError("disturbance needs square Kraus operators (S' = S)");
  const Mat s = sqrt_state(rho);
  double acc = 0;
  for (const auto& br : meas.branches())
    acc += ((br.kraus * b.data() - b.data() * br.kraus) * s).squaredNorm();
  return std::sqrt(acc);
}

UnbiasednessCheck akg_unbiasedness_check(const Instrument& meas, const Observable& a,
                                         const OutcomeFunction& f) {
  check_on(meas.in_space(), a.space(), "observable");
  Mat acc = Mat::Zero(a.dim(), a.dim());
  for (const auto& m : meas.outcomes()) acc += f_of(f, m) * meas.effect(m);
  const double dev = linalg::max_abs<double>(Mat(acc - a.data()));
  return {dev <= 1e-9, dev};
}

LtErrorResult lt_error(const DensityMatrix& rho, const Observable& a, const Instrument& meas) {
  check_on(rho.space(), a.space(), "observable");
  check_on(rho.space(), meas.in_space(), "instrument input");
  std::vector<double> mom, p;
  outcome_moments(rho, a, meas, mom, p);
  LtErrorResult r{0, {}, {}};
  double v = raw::expectation(rho.data(), a.data() * a.data());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& m = meas.outcomes()[i];
    if (p[i] < tol::prob) {
      r.argmin[m] = 0;
      r.excluded.push_back(m);
      continue;
    }
    r.argmin[m] = mom[i] / p[i];
    v -= mom[i] * mom[i] / p[i];
  }
  r.value = std::sqrt(std::max(0.0, v));
  return r;
}

double lt_error_for(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
                    const OutcomeFunction& f) {
  std::vector<double> mom, p;
  outcome_moments(rho, a, meas, mom, p);
  double v = raw::expectation(rho.data(), a.data() * a.data());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double fm = f_of(f, meas.outcomes()[i]);
    v += -2 * fm * mom[i] + fm * fm * p[i];
  }
  return std::sqrt(std::max(0.0, v));
}

double lt_gap(const DensityMatrix& rho, const Observable& a, const Instrument& meas,
              const OutcomeFunction& f) {
  const LtErrorResult lt = lt_error(rho, a, meas);
  std::vector<double> mom, p;
  outcome_moments(rho, a, meas, mom, p);
  double g = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& m = meas.outcomes()[i];
    const double diff = f_of(f, m) - lt.argmin.at(m);
    g += p[i] * diff * diff;
  }
  return g;
}

LtDisturbanceResult lt_disturbance(const DensityMatrix& rho, const Observable& b,
                                   const Instrument& meas) {
  check_on(rho.space(), b.space(), "observable");
  check_on(rho.space(), meas.in_space(), "instrument input");
  const LossSpec spec = disturbance_spec(rho, b, meas);
  Mat x = optimal_target_observable(spec);
  const Mat j = meas.channel()(Mat(b.data() * rho.data() + rho.data() * b.data()));
  const double v = raw::expectation(rho.data(), b.data() * b.data()) - 0.5 * (x * j).trace().real();
  return {std::sqrt(std::max(0.0, v)), std::move(x)};
}

double lt_disturbance_for(const DensityMatrix& rho, const Observable& b, const Instrument& meas,
                          const Mat& x) {
  const KrausChannel ch = meas.channel();
  const Mat sigma = ch(rho.data());
  const Mat j = ch(Mat(b.data() * rho.data() + rho.data() * b.data()));
  const double v = raw::expectation(rho.data(), b.data() * b.data()) - (x * j).trace().real() +
                   (x * x * sigma).trace().real();
  return std::sqrt(std::max(0.0, v));
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }
double BlochVector::dot(const BlochVector& o) const { return x * o.x + y * o.y + z * o.z; }
Mat BlochVector::sigma() const {
  return x * linalg::pauli('X') + y * linalg::pauli('Y') + z * linalg::pauli('Z');
}

namespace {
void require_unit(const BlochVector& v, const char* name) {
  if (std::abs(v.norm() - 1) > 1e-9)
    throw BlochError(std::string(name) + " must be a unit Bloch vector, norm " + std::to_string(v.norm()));
}
const Space kQubit{{"S", 2}};
}  // namespace

double blw_calibration_error_qubit(const BlochVector& a, const BlochVector& a_prime) {
  require_unit(a, "a");
  require_unit(a_prime, "a'");
  const double d = a.dot(a) - a.dot(a_prime);
  return std::sqrt(2 * std::abs(d));
}

BlwErrorSetup blw_error_setup(const BlochVector& a, const BlochVector& a_prime) {
  require_unit(a, "a");
  require_unit(a_prime, "a'");
  const Mat id = Mat::Identity(2, 2);
  DensityMatrix rho(kQubit, (id + a.sigma()) / 2);
  Observable obs(kQubit, a.sigma());
  Instrument meas(kQubit, {{"P'", 2}},
                  {{"+1", (id + a_prime.sigma()) / 2}, {"-1", (id - a_prime.sigma()) / 2}});
  return {rho, obs, meas, {{"+1", 1.0}, {"-1", -1.0}}};
}

BlwDisturbanceSetup blw_disturbance_setup(const BlochVector& b, const BlochVector& b_prime) {
  require_unit(b, "b");
  require_unit(b_prime, "b'");
  // Rotation taking b' to b: U (b'.sigma) U^dag = b.sigma.
  BlochVector axis{b_prime.y * b.z - b_prime.z * b.y, b_prime.z * b.x - b_prime.x * b.z,
                   b_prime.x * b.y - b_prime.y * b.x};
  const double c = std::clamp(b_prime.dot(b), -1.0, 1.0);
  double s = axis.norm();
  if (s < 1e-12) {
    // parallel or antiparallel: any axis orthogonal to b'
    axis = std::abs(b_prime.x) < 0.9 ? BlochVector{0, b_prime.z, -b_prime.y}
                                     : BlochVector{-b_prime.z, 0, b_prime.x};
    s = axis.norm();
  }
  axis = {axis.x / s, axis.y / s, axis.z / s};
  const double ang = std::acos(c);
  Mat u = std::cos(ang / 2) * Mat::Identity(2, 2) - cplx(0, 1) * std::sin(ang / 2) * axis.sigma();
  DensityMatrix rho(kQubit, (Mat::Identity(2, 2) + b.sigma()) / 2);
  Observable obs(kQubit, b.sigma());
  Instrument meas(kQubit, {{"S'", 2}}, {{"u", u}});
  return {rho, obs, meas};
}

double wasserstein2_discrete(const Distribution& mu, const Distribution& nu) {
  auto prep = [](Distribution d, const char* name) {
    double total = 0;
    for (const auto& [x, m] : d) {
      if (m < 0 || !std::isfinite(m) || !std::isfinite(x))
        throw DistributionError(std::string(name) + " has an invalid atom");
      total += m;
    }
    std::sort(d.begin(), d.end());
    return std::make_pair(d, total);
  };
  auto [a, ta] = prep(mu, "mu");
  auto [b, tb] = prep(nu, "nu");
  if (std::abs(ta - tb) > 1e-12 * std::max(1.0, std::max(ta, tb)))
    throw DistributionError("total masses differ: " + std::to_string(ta) + " vs " + std::to_string(tb));
  // Monotone (quantile) coupling.
  std::size_t i = 0, j = 0;
  double ra = a.empty() ? 0 : a[0].second, rb = b.empty() ? 0 : b[0].second, cost = 0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    const double dx = a[i].first - b[j].first;
    cost += m * dx * dx;
    ra -= m;
    rb -= m;
    if (ra <= 1e-15 && ++i < a.size()) ra = a[i].second;
    if (rb <= 1e-15 && ++j < b.size()) rb = b[j].second;
  }
  return std::sqrt(cost);
}

}  // namespace irrevkit
