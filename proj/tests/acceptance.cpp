// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
#include "irrevkit/comb.hpp"
#include "irrevkit/irrev.hpp"
#include "irrevkit/oracles.hpp"
#include "irrevkit/otoc.hpp"
#include "irrevkit/parallel.hpp"
#include "irrevkit/random.hpp"
#include "irrevkit/way.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace irrevkit;
namespace fs = std::filesystem;

namespace {

// Worst deviation and failure count for one criterion.
struct Tally {
  int cases = 0;
  int failures = 0;
  double worst = 0;
  std::string worst_what;
  std::vector<std::string> notes;
  std::mutex mu;

  // Records |value - reference| against tol.
  void equal(const std::string& what, double value, double reference, double tol) {
    const double dev = std::abs(value - reference);
    record(what, dev, !(dev <= tol));
  }
  // Records value <= bound + tol; the deviation is the overshoot.
  void le(const std::string& what, double value, double bound, double tol) {
    const double over = value - bound;
    record(what, std::max(0.0, over), !(over <= tol));
  }
  void fail(const std::string& what) {
    std::lock_guard<std::mutex> g(mu);
    ++cases;
    ++failures;
    if (notes.size() < 5) notes.push_back(what);
  }

 private:
  void record(const std::string& what, double dev, bool failed) {
    std::lock_guard<std::mutex> g(mu);
    ++cases;
    if (failed) {
      ++failures;
      if (notes.size() < 5) notes.push_back(what + " dev=" + std::to_string(dev));
    }
    if (dev > worst || std::isnan(dev)) {
      worst = dev;
      worst_what = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

bool report(int n, const char* title, Tally& t, Clock::time_point start, double budget_s = 0) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  bool ok = t.failures == 0 && t.cases > 0;
  std::string extra;
  if (budget_s > 0 && secs > budget_s) {
    ok = false;
    extra = " over time budget " + std::to_string(int(budget_s)) + " s";
  }
  std::printf("criterion %d %-28s %s  checks=%d failures=%d worst=%.3g (%s) %.2f s%s\n", n, title,
              ok ? "PASS" : "FAIL", t.cases, t.failures, t.worst, t.worst_what.c_str(), secs,
              extra.c_str());
  for (const auto& note : t.notes) std::printf("    %s\n", note.c_str());
  std::fflush(stdout);
  return ok;
}

std::string tag(const char* kind, int i) { return std::string(kind) + "#" + std::to_string(i); }

// Runs body and turns a library exception into a recorded failure.
void guarded(Tally& t, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    t.fail(what + ": " + e.what());
  }
}

// Random measurement instance on a d-dimensional system.
struct Instance {
  DensityMatrix rho;
  Observable a, b;
  Instrument meas;
  OutcomeFunction f;
};

Instance random_instance(std::uint64_t seed) {
  rnd::Engine g = rnd::engine(seed, 101);
  const int d = rnd::uniform_int(g, 2, 4);
  const int branches = rnd::uniform_int(g, 2, 4);
  const Space s{{"S", d}}, out{{"S'", d}};
  DensityMatrix rho(s, rnd::state(g, d, rnd::uniform_int(g, 1, d)));
  Observable a(s, rnd::hermitian(g, d)), b(s, rnd::hermitian(g, d));
  Instrument meas = rnd::instrument(g, s, out, branches);
  OutcomeFunction f;
  for (const auto& o : meas.outcomes()) f[o] = rnd::uniform(g, -2, 2);
  return {rho, a, b, meas, f};
}

constexpr int kCorpus = 100;

std::vector<Instance> corpus() {
  std::vector<Instance> c;
  for (int i = 0; i < kCorpus; ++i) c.push_back(random_instance(std::uint64_t(i + 1)));
  return c;
}

bool cptp(const KrausChannel& k, double tol = 1e-9) {
  return k.tp_gap() <= tol && k.choi_min_eig() >= -tol;
}

// 1. canonical extraction reproduces the closed-form error and disturbance.
bool criterion1(const std::vector<Instance>& c) {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(c.size(), [&](std::size_t i) {
    const Instance& x = c[i];
    guarded(t, tag("error", int(i)), [&] {
      const double e = extract_epsilon(x.rho, x.a, x.meas, Recovery::canonical_f(x.f)).value;
      const double o = ozawa_error(x.rho, x.a, x.meas, x.f);
      t.equal(tag("error", int(i)), e, o * o, 1e-6);
    });
    guarded(t, tag("disturbance", int(i)), [&] {
      const double e = extract_eta(x.rho, x.b, x.meas, Recovery{}).value;
      const double o = ozawa_disturbance(x.rho, x.b, x.meas);
      t.equal(tag("disturbance", int(i)), e, o * o, 1e-6);
    });
  });
  return report(1, "ozawa-equivalence", t, t0, 60);
}

// 2. the optimized recovery never does worse than the canonical one or Petz.
bool criterion2(const std::vector<Instance>& c) {
  const auto t0 = Clock::now();
  Tally t;
  const TestEnsemble omega = TestEnsemble::plus_minus(kAncilla);
  const ExtractionConfig cfg;
  parallel_for(c.size(), [&](std::size_t i) {
    const Instance& x = c[i];
    const LossSpec specs[2] = {error_spec(x.rho, x.a, x.meas), disturbance_spec(x.rho, x.b, x.meas)};
    const Recovery canon[2] = {
        Recovery::canonical_x(pointer_observable(x.meas, x.f).data()), Recovery{}};
    for (int k = 0; k < 2; ++k) {
      const std::string what = tag(k == 0 ? "error" : "disturbance", int(i));
      guarded(t, what, [&] {
        Recovery opt = Recovery::optimize();
        opt.x = canon[k].x;
        const double v_opt = extract(specs[k], opt, cfg).value;
        const double v_can = extract(specs[k], canon[k], cfg).value;
        t.le(what + " optimize<=canonical", v_opt, v_can, 1e-6);
      });
      guarded(t, what + " petz", [&] {
        const LossProcess l = build_loss(specs[k], 0.05);
        const DeltaReport r = delta_min(l.channel, omega, cfg.optimizer);
        t.le(what + " delta_min<=petz", r.delta, r.petz_delta, 1e-9);
      });
    }
  });
  return report(2, "ordering", t, t0);
}

// 3. the LT error is the minimum of the Ozawa error over outcome functions.
bool criterion3(const std::vector<Instance>& c) {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(20, [&](std::size_t i) {
    const Instance& x = c[i];
    const std::string what = tag("instance", int(i));
    guarded(t, what, [&] {
      const LtErrorResult lt = lt_error(x.rho, x.a, x.meas);
      const double lt2 = lt.value * lt.value;
      rnd::Engine g = rnd::engine(i + 1, 303);
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < 50; ++j) {
        OutcomeFunction f;
        for (const auto& o : x.meas.outcomes()) f[o] = rnd::uniform(g, -3, 3);
        const double o = ozawa_error(x.rho, x.a, x.meas, f);
        best = std::min(best, o * o);
      }
      t.le(what + " lt<=min_f", lt2, best, 1e-12);
      const double at = ozawa_error(x.rho, x.a, x.meas, lt.argmin);
      t.equal(what + " pushforward", at * at, lt2, 1e-8);
    });
  });
  return report(3, "lt-inclusion", t, t0);
}

BlochVector bloch(rnd::Engine& g) {
  auto v = rnd::unit_vector3(g);
  return {v[0], v[1], v[2]};
}

// 4. two-copy comb coefficient equals the qubit calibration error squared.
bool criterion4() {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(20, [&](std::size_t i) {
    rnd::Engine g = rnd::engine(i + 1, 404);
    const BlochVector a = bloch(g), ap = bloch(g), b = bloch(g), bp = bloch(g);
    guarded(t, tag("error", int(i)), [&] {
      const BlwErrorSetup s = blw_error_setup(a, ap);
      const double c2 = extract(two_copy_spec(s.rho, s.a, s.meas, LossKind::Error),
                                Recovery::canonical_x(pointer_observable(s.meas, s.f).data()), {})
                            .value;
      const double dot = a.x * (a.x - ap.x) + a.y * (a.y - ap.y) + a.z * (a.z - ap.z);
      t.equal(tag("error", int(i)), c2, 2 * std::abs(dot), 1e-6);
    });
    guarded(t, tag("disturbance", int(i)), [&] {
      const BlwDisturbanceSetup s = blw_disturbance_setup(b, bp);
      const double c2 = extract(two_copy_spec(s.rho, s.b, s.meas, LossKind::Disturbance),
                                Recovery::canonical_x(s.b.data()), {})
                            .value;
      const double dot = b.x * (b.x - bp.x) + b.y * (b.y - bp.y) + b.z * (b.z - bp.z);
      t.equal(tag("disturbance", int(i)), c2, 2 * std::abs(dot), 1e-6);
    });
  });
  return report(4, "blw-calibration", t, t0);
}

ScramblingScenario chain(double tau) {
  const Space s{{"S", 8}};
  Mat h = Mat::Zero(8, 8);
  for (const char* p : {"ZZI", "IZZ", "XII", "IXI", "IIX"}) h += linalg::pauli_string(p);
  return {Observable(s, h), Observable(s, linalg::pauli_string("XII")),
          Observable(s, linalg::pauli_string("IIZ")), tau, std::nullopt};
}

// 5. the OTOC equals the irreversibility coefficient of its comb.
bool criterion5() {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(50, [&](std::size_t i) {
    rnd::Engine g = rnd::engine(i + 1, 505);
    const int n = rnd::uniform_int(g, 1, 3), d = 1 << n;
    const Space s{{"S", d}};
    ScramblingScenario sc{Observable(s, rnd::hermitian(g, d)),
                          Observable(s, linalg::pauli_string(rnd::pauli_string(g, n))),
                          Observable(s, rnd::hermitian(g, d)), rnd::uniform(g, 0, 2), std::nullopt};
    if (i % 2) sc.rho = DensityMatrix(s, rnd::state(g, d, rnd::uniform_int(g, 1, d)));
    const std::string what = tag("scenario", int(i)) + " d=" + std::to_string(d);
    guarded(t, what, [&] { t.equal(what, otoc_iep(sc).value, otoc_direct(sc), 1e-6); });
  });
  for (double tau : {0.0, 0.5, 1.0, 2.0}) {
    const std::string what = "chain tau=" + std::to_string(tau);
    guarded(t, what, [&] {
      const ScramblingScenario c = chain(tau);
      t.equal(what, otoc_iep(c).value, otoc_direct(c), 1e-6);
    });
  }
  guarded(t, "qubit X,Z", [&] {
    const Space q{{"S", 2}};
    ScramblingScenario s{Observable(q, Mat::Zero(2, 2)), Observable(q, linalg::pauli('X')),
                         Observable(q, linalg::pauli('Z')), 0.0, std::nullopt};
    t.equal("qubit X,Z exact", otoc_iep(s).value, 4.0, 1e-9);
  });
  return report(5, "otoc-irreversibility", t, t0);
}

// 6. non-unitary W through the normalized CP branch.
bool criterion6() {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(20, [&](std::size_t i) {
    rnd::Engine g = rnd::engine(i + 1, 606);
    const int d = rnd::uniform_int(g, 2, 8);
    const Space s{{"S", d}};
    ScramblingScenario sc{Observable(s, rnd::hermitian(g, d)), Observable(s, rnd::hermitian(g, d)),
                          Observable(s, rnd::hermitian(g, d)), rnd::uniform(g, 0, 2), std::nullopt};
    const std::string what = tag("scenario", int(i)) + " d=" + std::to_string(d);
    guarded(t, what, [&] {
      const OtocCpResult r = otoc_iep_cp(sc);
      const Mat wt = heisenberg(sc.w0, sc.h, sc.tau).data() / r.scale;
      const double direct = otoc_commutator(sc.state().data(), wt, sc.v0.data());
      t.equal(what + " iep", r.iep.value, direct, 1e-6);
      t.equal(what + " q", r.q, 1.0, 1e-9);
    });
  });
  return report(6, "otoc-cp-extension", t, t0);
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + IRREVKIT_CLI + "\" " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// 7. WAY bounds hold on seeded conserving implementations.
bool criterion7() {
  const auto t0 = Clock::now();
  Tally t;
  constexpr int kSeeds = 50;
  std::vector<double> slack(3 * kSeeds, std::nan("")), rhs(3 * kSeeds, 0);
  parallel_for(3 * kSeeds, [&](std::size_t j) {
    const int variant = int(j) / kSeeds;
    const std::uint64_t seed = j % kSeeds + 1;
    const AncillaKind k = seed % 2 ? AncillaKind::Incoherent : AncillaKind::Coherent;
    const int de = seed % 3 ? 2 : 3;
    std::string what;
    guarded(t, "way seed " + std::to_string(seed), [&] {
      WayReport r;
      if (variant == 0) {
        what = "error seed " + std::to_string(seed);
        const WayErrorFixture f = way_error_fixture(seed, 2, de, k);
        r = way_bound_error(f.rho, f.a, f.meas, f.impl);
      } else if (variant == 1) {
        what = "disturbance seed " + std::to_string(seed);
        const WayDisturbanceFixture f = seed % 5 == 0 ? way_swap_fixture(seed, 2)
                                                      : way_disturbance_fixture(seed, 2, de, k);
        r = way_bound_disturbance(f.rho, f.b, f.meas, f.impl);
      } else {
        what = "otoc seed " + std::to_string(seed);
        const WayOtocFixture f = way_otoc_fixture(seed, 1 + int(seed % 2), 2);
        r = way_bound_otoc(f.scenario, f.impl);
      }
      t.le(what + " slack", -r.slack, 0.0, 1e-9);
      slack[j] = r.slack;
      rhs[j] = r.rhs;
    });
  });
  for (int v = 0; v < 3; ++v) {
    double lo = std::numeric_limits<double>::infinity();
    int live = 0;
    for (int s = 0; s < kSeeds; ++s) {
      lo = std::min(lo, slack[v * kSeeds + s]);
      live += rhs[v * kSeeds + s] > 1e-6;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%s: min slack %.3g, rhs > 1e-6 on %d of %d",
                  v == 0 ? "error" : v == 1 ? "disturbance" : "otoc", lo, live, kSeeds);
    t.notes.push_back(line);
  }

  // The same gate through the command line: a clean batch exits 0, a violation exits 4.
  const fs::path dir = fs::path(IRREVKIT_ACCEPT_WORKDIR);
  fs::remove_all(dir);
  fs::create_directories(dir);
  using json = nlohmann::json;
  std::string files;
  for (int s = 1; s <= kSeeds; s += 7) {
    const json e = {{"schema", "irrevkit/1"}, {"kind", "way-error"}, {"seed", s},
                    {"payload", {{"fixture", {{"ds", 2}, {"de", 2}}}}}};
    const json dd = {{"schema", "irrevkit/1"}, {"kind", "way-disturbance"}, {"seed", s},
                     {"payload", {{"fixture", {{"ds", 2}, {"de", 2}}}}}};
    const json o = {{"schema", "irrevkit/1"}, {"kind", "way-otoc"}, {"seed", s},
                    {"payload", {{"fixture", {{"qubits", 1}, {"de", 2}}}}}};
    for (const auto& [name, doc] : {std::pair{"error", e}, {"disturbance", dd}, {"otoc", o}}) {
      const fs::path p = dir / (std::string(name) + "_" + std::to_string(s) + ".json");
      std::ofstream(p) << doc.dump(2);
      files += " " + q(p);
    }
  }
  const int clean = cli("run" + files);
  t.equal("cli clean batch exit", clean, 0, 0);
  const fs::path bad = dir / "violation.json";
  std::ofstream(bad) << json{{"schema", "irrevkit/1"}, {"kind", "way-error"}, {"seed", 11},
                             {"payload",
                              {{"fixture", {{"ds", 2}, {"de", 2}}},
                               {"lhs", {{"method", "value"}, {"value", 0.0}}}}}}
                            .dump(2);
  t.equal("cli violation exit", cli("run " + q(bad)), 4, 0);
  return report(7, "way-falsification", t, t0);
}

// 8. spectral QFI against the fidelity-based limit.
bool criterion8() {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(50, [&](std::size_t i) {
    rnd::Engine g = rnd::engine(i + 1, 808);
    const int d = rnd::uniform_int(g, 2, 5);
    const Space s{{"S", d}};
    const DensityMatrix rho(s, rnd::state(g, d, rnd::uniform_int(g, 1, d)));
    const Observable x(s, rnd::hermitian(g, d));
    const std::string what = tag("case", int(i));
    guarded(t, what, [&] {
      std::vector<std::pair<double, double>> pts;
      for (double eps : {0.04, 0.02, 0.01, 0.005}) {
        const Mat u = linalg::expi_herm<double>(x.data(), eps);
        const DensityMatrix moved(s, u * rho.data() * u.adjoint());
        const double df = purified_distance(moved, rho);
        pts.emplace_back(eps, 4 * df * df);
      }
      const double limit = fit_even(pts, 3).first.front();
      const double f = qfi(rho, x);
      t.equal(what + " limit", f / std::max(limit, 1e-12), 1.0, 1e-5);

      const DensityMatrix p = DensityMatrix::pure(s, rnd::pure(g, d));
      t.equal(what + " pure", qfi(p, x), 4 * variance(p, x), 1e-9);
    });
  });
  return report(8, "qfi-cross-validation", t, t0);
}

// 9. metric properties and CPTP validity of constructed channels.
bool criterion9(const std::vector<Instance>& c) {
  const auto t0 = Clock::now();
  Tally t;
  parallel_for(100, [&](std::size_t i) {
    rnd::Engine g = rnd::engine(i + 1, 909);
    const int d = rnd::uniform_int(g, 2, 4);
    const Space s{{"S", d}};
    auto st = [&] { return DensityMatrix(s, rnd::state(g, d, rnd::uniform_int(g, 1, d))); };
    const DensityMatrix r1 = st(), r2 = st(), r3 = st();
    const std::string what = tag("triple", int(i));
    guarded(t, what, [&] {
      t.equal(what + " symmetry", uhlmann_fidelity(r1, r2), uhlmann_fidelity(r2, r1), 1e-9);
      t.le(what + " triangle", purified_distance(r1, r3),
           purified_distance(r1, r2) + purified_distance(r2, r3), 1e-8);
    });
  });

  const TestEnsemble omega = TestEnsemble::plus_minus(kAncilla);
  parallel_for(c.size(), [&](std::size_t i) {
    const Instance& x = c[i];
    const std::string what = tag("instance", int(i));
    guarded(t, what, [&] {
      const Observable px = pointer_observable(x.meas, x.f);
      const LossSpec specs[2] = {error_spec(x.rho, x.a, x.meas),
                                 disturbance_spec(x.rho, x.b, x.meas)};
      const Mat xs[2] = {px.data(), x.b.data()};
      int bad = 0, n = 0;
      auto count = [&](const KrausChannel& k) {
        ++n;
        bad += !cptp(k);
      };
      count(x.meas.channel());
      for (int k = 0; k < 2; ++k) {
        const Observable ox(specs[k].process.out_space(), xs[k]);
        const Observable opt(specs[k].process.out_space(), optimal_target_observable(specs[k]));
        for (double th : {1e-2, 1.25e-3, 0.3}) {
          const LossProcess l = build_loss(specs[k], th);
          count(l.channel);
          count(canonical_recovery(ox, th).channel);
          count(canonical_recovery(opt, th).channel);
          count(petz_recovery(l.channel, omega.average()));
        }
      }
      count(petz_recovery(x.meas.channel(), x.rho));
      const DensityMatrix full(x.rho.space(),
                               0.5 * x.rho.data() + 0.5 * Mat::Identity(x.rho.dim(), x.rho.dim()) /
                                                        double(x.rho.dim()));
      count(petz_recovery(x.meas.channel(), full));
      t.equal(what + " non-CPTP channels of " + std::to_string(n), bad, 0, 0);
    });
  });
  return report(9, "metric-and-cptp", t, t0);
}

}  // namespace

int main() {
  const std::vector<Instance> c = corpus();
  std::vector<std::function<bool()>> run = {
      [&] { return criterion1(c); }, [&] { return criterion2(c); }, [&] { return criterion3(c); },
      criterion4,                    criterion5,                    criterion6,
      criterion7,                    criterion8,                    [&] { return criterion9(c); }};
  int failed = 0;
  for (auto& r : run) failed += !r();
  std::printf("acceptance: %d of %zu criteria passed\n", int(run.size()) - failed, run.size());
  return failed ? 1 : 0;
}
