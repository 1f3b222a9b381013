#include "irrevkit/comb.hpp"
#include "irrevkit/io.hpp"
#include "irrevkit/oracles.hpp"
#include "irrevkit/otoc.hpp"
#include "irrevkit/parallel.hpp"
#include "irrevkit/way.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace irrevkit;
using io::json;
using io::Node;

namespace {

constexpr const char* kSchema = "irrevkit/1";

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kExtraction = 3, kViolation = 4 };

const std::vector<std::string> kKinds = {"delta",     "epsilon",         "eta",  "blw",
                                         "lt",        "way-error",       "way-disturbance",
                                         "otoc",      "otoc-cp",         "way-otoc"};

struct Ctx {
  std::uint64_t seed = 1;
  bool dry = false;
  json echo;  // payload with defaults expanded
};

struct Verdict {
  json result = json::object();
  std::optional<bool> pass;
  json checks = json::array();

  void check(const std::string& name, double value, double reference, const std::string& relation,
             double tol) {
    const double diff = value - reference;
    bool ok = relation == "equal" ? std::abs(diff) <= tol
              : relation == "le"  ? diff <= tol
                                  : diff >= -tol;
    checks.push_back({{"name", name},
                      {"value", value},
                      {"reference", reference},
                      {"relation", relation},
                      {"difference", diff},
                      {"tol", tol},
                      {"pass", ok}});
    pass = pass.value_or(true) && ok;
  }
};

// Re-throws library validation errors raised while building an object as
// schema errors at the node that produced it.
template <class F>
auto at_node(const Node& n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

std::optional<Node> opt(const Node& p, const std::string& key) {
  if (!p.has(key)) return std::nullopt;
  return p.at(key);
}

double number_or(const Node& p, const std::string& key, double def, Ctx& c) {
  const double v = p.has(key) ? p.at(key).number() : def;
  c.echo[key] = v;
  return v;
}

ExtractionConfig parse_extraction(const Node& p, Ctx& c) {
  auto ex = opt(p, "extraction");
  std::optional<Node> on;
  if (ex && ex->has("optimizer")) on = ex->at("optimizer");
  OptimizerConfig oc = io::optimizer(on ? &*on : nullptr, c.seed);
  ExtractionConfig cfg = io::extraction(ex ? &*ex : nullptr, oc);
  c.echo["extraction"] = io::to_json(cfg);
  return cfg;
}

struct MeasSetup {
  Instrument meas;
  DensityMatrix rho;
  Observable obs;
};

MeasSetup parse_meas(const Node& p, const std::string& obs_key) {
  Instrument meas = io::instrument(p.at("instrument"));
  const Space& s = meas.in_space();
  DensityMatrix rho = io::state(p.at("state"), s);
  Node on = p.at(obs_key);
  Observable o = at_node(on, [&] { return Observable(s, io::operator_matrix(on, total_dim(s))); });
  return {meas, rho, o};
}

Recovery parse_recovery(const Node& p, Ctx& c) {
  json echo = {{"type", "canonical"}};
  Recovery rec;
  if (p.has("recovery")) {
    Node r = p.at("recovery");
    echo = r.raw();
    const std::string type = r.has("type") ? r.at("type").string() : "canonical";
    echo["type"] = type;
    if (type == "canonical" || type == "optimize") {
      rec = type == "canonical" ? Recovery{} : Recovery::optimize();
      if (r.has("f")) rec.f = io::outcome_function(r.at("f"));
      if (r.has("x")) rec.x = io::matrix(r.at("x"));
      if (rec.f && rec.x) r.fail("give either f or x, not both");
    } else if (type == "explicit") {
      rec = Recovery::explicit_channel(io::channel(r.at("channel")));
    } else {
      r.at("type").fail("expected \"canonical\", \"optimize\" or \"explicit\"");
    }
  }
  c.echo["recovery"] = echo;
  return rec;
}

// --- kinds ---------------------------------------------------------------

Verdict run_delta(const Node& p, Ctx& c) {
  KrausChannel loss = io::channel(p.at("loss"));
  TestEnsemble omega = p.has("ensemble") ? io::ensemble(p.at("ensemble")) : TestEnsemble::plus_minus("Q");
  if (!p.has("ensemble")) c.echo["ensemble"] = "plus_minus";
  if (omega.space() != loss.in_space()) (p.has("ensemble") ? p.at("ensemble") : p).fail("ensemble space does not match the loss input");
  json rec_echo = {{"type", "optimize"}};
  std::optional<Node> r = opt(p, "recovery");
  const std::string type = r && r->has("type") ? r->at("type").string() : "optimize";
  rec_echo["type"] = type;
  std::optional<KrausChannel> explicit_r;
  std::optional<DensityMatrix> ref;
  OptimizerConfig oc;
  if (type == "explicit") {
    explicit_r = io::channel(r->at("channel"));
  } else if (type == "petz") {
    if (r->has("reference")) ref = io::state(r->at("reference"), loss.in_space());
  } else if (type == "optimize") {
    std::optional<Node> on;
    if (r && r->has("optimizer")) on = r->at("optimizer");
    oc = io::optimizer(on ? &*on : nullptr, c.seed);
    rec_echo["optimizer"] = io::to_json(oc);
  } else {
    r->at("type").fail("expected \"optimize\", \"petz\" or \"explicit\"");
  }
  c.echo["recovery"] = rec_echo;
  const double tol = number_or(p, "oracle_tol", 1e-9, c);
  if (c.dry) return {};

  Verdict v;
  const KrausChannel petz = petz_recovery(loss, ref ? *ref : omega.average());
  const DeltaReport petz_rep = delta_with_recovery(loss, petz, omega);
  DeltaReport rep;
  if (type == "explicit") rep = delta_with_recovery(loss, *explicit_r, omega);
  else if (type == "petz") rep = petz_rep;
  else {
    rep = delta_min(loss, omega, oc);
    v.check("delta_min_vs_petz", rep.delta, petz_rep.delta, "le", tol);
  }
  v.result = {{"delta", rep.delta}, {"report", io::to_json(rep)}, {"petz_delta", petz_rep.delta}};
  return v;
}

Verdict run_epsilon(const Node& p, Ctx& c) {
  MeasSetup m = parse_meas(p, "observable");
  Recovery rec = parse_recovery(p, c);
  ExtractionConfig cfg = parse_extraction(p, c);
  const double tol = number_or(p, "oracle_tol", 1e-6, c);
  if (rec.f) {
    for (const auto& o : m.meas.outcomes())
      if (!rec.f->count(o)) p.at("recovery").at("f").fail("no value for outcome \"" + o + "\"");
  }
  if (c.dry) return {};

  Verdict v;
  IepResult r = extract_epsilon(m.rho, m.obs, m.meas, rec, cfg);
  LtErrorResult lt = lt_error(m.rho, m.obs, m.meas);
  v.result = {{"epsilon_sq", r.value}, {"iep", io::to_json(r)}, {"lt_error_sq", lt.value * lt.value}};
  if (rec.type == Recovery::Type::Canonical) {
    if (rec.f) {
      const double oz = ozawa_error(m.rho, m.obs, m.meas, *rec.f);
      const auto akg = akg_unbiasedness_check(m.meas, m.obs, *rec.f);
      v.result["akg"] = {{"unbiased", akg.unbiased}, {"deviation", akg.deviation}};
      v.check("ozawa_error_sq", r.value, oz * oz, "equal", tol);
    } else if (rec.x) {
      v.check("analytic_c2", r.value, analytic_coefficient(error_spec(m.rho, m.obs, m.meas), *rec.x),
              "equal", tol);
    } else {
      v.check("lt_error_sq", r.value, lt.value * lt.value, "equal", tol);
    }
  } else if (rec.type == Recovery::Type::Optimize) {
    v.check("lt_error_sq", r.value, lt.value * lt.value, "le", tol);
  }
  return v;
}

Verdict run_eta(const Node& p, Ctx& c) {
  MeasSetup m = parse_meas(p, "observable");
  Recovery rec = parse_recovery(p, c);
  if (rec.f) p.at("recovery").at("f").fail("an outcome function applies to error scenarios");
  ExtractionConfig cfg = parse_extraction(p, c);
  const double tol = number_or(p, "oracle_tol", 1e-6, c);
  if (c.dry) return {};

  Verdict v;
  IepResult r = extract_eta(m.rho, m.obs, m.meas, rec, cfg);
  LtDisturbanceResult lt = lt_disturbance(m.rho, m.obs, m.meas);
  v.result = {{"eta_sq", r.value}, {"iep", io::to_json(r)}, {"lt_disturbance_sq", lt.value * lt.value}};
  const bool square = total_dim(m.meas.out_space()) == total_dim(m.meas.in_space());
  if (rec.type == Recovery::Type::Canonical) {
    if (rec.x) {
      const double d = lt_disturbance_for(m.rho, m.obs, m.meas, *rec.x);
      v.check("lt_disturbance_for_x_sq", r.value, d * d, "equal", tol);
    } else if (square) {
      const double oz = ozawa_disturbance(m.rho, m.obs, m.meas);
      v.check("ozawa_disturbance_sq", r.value, oz * oz, "equal", tol);
    } else {
      v.check("lt_disturbance_sq", r.value, lt.value * lt.value, "equal", tol);
    }
  } else if (rec.type == Recovery::Type::Optimize) {
    v.check("lt_disturbance_sq", r.value, lt.value * lt.value, "le", tol);
  }
  return v;
}

BlochVector bloch(const Node& n) {
  if (n.size() != 3) n.fail("expected three components");
  return {n.at(0).number(), n.at(1).number(), n.at(2).number()};
}

Verdict run_blw(const Node& p, Ctx& c) {
  const std::string mode = p.has("mode") ? p.at("mode").string() : "error";
  if (mode != "error" && mode != "disturbance") p.at("mode").fail("expected \"error\" or \"disturbance\"");
  c.echo["mode"] = mode;
  const BlochVector a = bloch(p.at("a")), ap = bloch(p.at("a_prime"));
  ExtractionConfig cfg = parse_extraction(p, c);
  const double tol = number_or(p, "oracle_tol", 1e-6, c);
  const double oracle = at_node(p, [&] { return blw_calibration_error_qubit(a, ap); });
  if (c.dry) return {};

  Verdict v;
  IepResult r;
  if (mode == "error") {
    const BlwErrorSetup s = blw_error_setup(a, ap);
    r = extract(two_copy_spec(s.rho, s.a, s.meas, LossKind::Error),
                Recovery::canonical_x(pointer_observable(s.meas, s.f).data()), cfg);
  } else {
    const BlwDisturbanceSetup s = blw_disturbance_setup(a, ap);
    r = extract(two_copy_spec(s.rho, s.b, s.meas, LossKind::Disturbance),
                Recovery::canonical_x(s.b.data()), cfg);
  }
  v.result = {{"c2", r.value}, {"iep", io::to_json(r)}, {"calibration_error", oracle}};
  v.check("calibration_error_sq", r.value, oracle * oracle, "equal", tol);
  return v;
}

Verdict run_lt(const Node& p, Ctx& c) {
  const std::string mode = p.has("mode") ? p.at("mode").string() : "error";
  if (mode != "error" && mode != "disturbance") p.at("mode").fail("expected \"error\" or \"disturbance\"");
  c.echo["mode"] = mode;
  MeasSetup m = parse_meas(p, "observable");
  std::optional<OutcomeFunction> f;
  std::optional<Mat> x;
  if (p.has("f")) {
    if (mode != "error") p.at("f").fail("an outcome function applies to mode \"error\"");
    f = io::outcome_function(p.at("f"));
    for (const auto& o : m.meas.outcomes())
      if (!f->count(o)) p.at("f").fail("no value for outcome \"" + o + "\"");
  }
  if (p.has("x")) {
    if (mode != "disturbance") p.at("x").fail("an output observable applies to mode \"disturbance\"");
    x = io::operator_matrix(p.at("x"), total_dim(m.meas.out_space()));
  }
  const double tol = number_or(p, "oracle_tol", 1e-8, c);
  if (c.dry) return {};

  Verdict v;
  if (mode == "error") {
    LtErrorResult lt = lt_error(m.rho, m.obs, m.meas);
    v.result = {{"lt_error", lt.value}, {"argmin", lt.argmin}, {"excluded", lt.excluded}};
    const double at_min = ozawa_error(m.rho, m.obs, m.meas, lt.argmin);
    v.check("ozawa_sq_at_argmin", at_min * at_min, lt.value * lt.value, "equal", tol);
    if (f) {
      const double oz = ozawa_error(m.rho, m.obs, m.meas, *f);
      const double gap = lt_gap(m.rho, m.obs, m.meas, *f);
      v.result["ozawa_error_f"] = oz;
      v.result["gap_f"] = gap;
      v.check("ozawa_sq_f", oz * oz, lt.value * lt.value, "ge", tol);
      v.check("ozawa_sq_f_decomposition", oz * oz, lt.value * lt.value + gap, "equal", tol);
    }
  } else {
    LtDisturbanceResult lt = lt_disturbance(m.rho, m.obs, m.meas);
    v.result = {{"lt_disturbance", lt.value}, {"argmin", io::to_json(lt.argmin)}};
    if (x) {
      const double d = lt_disturbance_for(m.rho, m.obs, m.meas, *x);
      v.result["lt_disturbance_x"] = d;
      v.check("lt_disturbance_sq_x", d * d, lt.value * lt.value, "ge", tol);
    }
  }
  return v;
}

WayConfig parse_way_config(const Node& p, Ctx& c) {
  WayConfig w;
  w.extraction = parse_extraction(p, c);
  json echo = {{"method", "optimize"}};
  if (p.has("lhs")) {
    Node l = p.at("lhs");
    const std::string m = l.has("method") ? l.at("method").string() : "optimize";
    echo["method"] = m;
    if (m == "optimize") w.lhs = WayLhs::Optimize;
    else if (m == "canonical") w.lhs = WayLhs::Canonical;
    else if (m == "value") {
      w.lhs_value = l.at("value").number();
      echo["value"] = *w.lhs_value;
    } else {
      l.at("method").fail("expected \"optimize\", \"canonical\" or \"value\"");
    }
  }
  c.echo["lhs"] = echo;
  w.slack_tol = number_or(p, "slack_tol", 1e-9, c);
  return w;
}

AncillaKind ancilla(const Node& f, json& echo) {
  const std::string k = f.has("ancilla") ? f.at("ancilla").string() : "incoherent";
  echo["ancilla"] = k;
  if (k == "incoherent") return AncillaKind::Incoherent;
  if (k == "coherent") return AncillaKind::Coherent;
  f.at("ancilla").fail("expected \"incoherent\" or \"coherent\"");
}

int int_or(const Node& f, const std::string& key, int def, int lo, int hi, json& echo) {
  const int v = f.has(key) ? f.at(key).integer() : def;
  if (v < lo || v > hi) f.at(key).fail("expected " + std::to_string(lo) + ".." + std::to_string(hi));
  echo[key] = v;
  return v;
}

std::uint64_t seed_or(const Node& f, std::uint64_t def, json& echo) {
  const std::uint64_t s = f.has("seed") ? f.at("seed").uint64() : def;
  echo["seed"] = s;
  return s;
}

Verdict way_verdict(const WayReport& r) {
  Verdict v;
  v.result = io::to_json(r);
  v.pass = r.pass;
  return v;
}

Verdict run_way_error(const Node& p, Ctx& c) {
  const bool yanase = p.has("yanase") && p.at("yanase").boolean();
  c.echo["yanase"] = yanase;
  std::optional<WayErrorFixture> fx;
  if (p.has("fixture")) {
    Node f = p.at("fixture");
    json e = json::object();
    const std::uint64_t seed = seed_or(f, c.seed, e);
    const int ds = int_or(f, "ds", 2, 2, 6, e), de = int_or(f, "de", 2, 2, 6, e);
    const AncillaKind k = ancilla(f, e);
    c.echo["fixture"] = e;
    fx = at_node(f, [&] { return way_error_fixture(seed, ds, de, k); });
  } else {
    MeasSetup m = parse_meas(p, "observable");
    Implementation impl = io::implementation(p.at("implementation"));
    fx = WayErrorFixture{m.rho, m.obs, m.meas, impl};
  }
  WayConfig w = parse_way_config(p, c);
  if (c.dry) return {};
  return way_verdict(yanase ? way_bound_error_yanase(fx->rho, fx->a, fx->meas, fx->impl, w)
                            : way_bound_error(fx->rho, fx->a, fx->meas, fx->impl, w));
}

Verdict run_way_disturbance(const Node& p, Ctx& c) {
  std::optional<WayDisturbanceFixture> fx;
  if (p.has("fixture")) {
    Node f = p.at("fixture");
    json e = json::object();
    const std::string type = f.has("type") ? f.at("type").string() : "random";
    e["type"] = type;
    const std::uint64_t seed = seed_or(f, c.seed, e);
    if (type == "random") {
      const int ds = int_or(f, "ds", 2, 2, 6, e), de = int_or(f, "de", 2, 2, 6, e);
      const AncillaKind k = ancilla(f, e);
      fx = at_node(f, [&] { return way_disturbance_fixture(seed, ds, de, k); });
    } else if (type == "swap") {
      const int d = int_or(f, "d", 2, 2, 6, e);
      fx = at_node(f, [&] { return way_swap_fixture(seed, d); });
    } else {
      f.at("type").fail("expected \"random\" or \"swap\"");
    }
    c.echo["fixture"] = e;
  } else {
    MeasSetup m = parse_meas(p, "observable");
    Implementation impl = io::implementation(p.at("implementation"));
    fx = WayDisturbanceFixture{m.rho, m.obs, m.meas, impl};
  }
  WayConfig w = parse_way_config(p, c);
  if (c.dry) return {};
  return way_verdict(way_bound_disturbance(fx->rho, fx->b, fx->meas, fx->impl, w));
}

ScramblingScenario parse_scrambling(const Node& p, Ctx& c) {
  Space s;
  if (p.has("system")) {
    s = io::space(p.at("system"));
  } else if (p.has("qubits")) {
    const int q = p.at("qubits").integer();
    if (q < 1 || q > 6) p.at("qubits").fail("expected 1..6");
    s = {{"S", 1 << q}};
  } else {
    p.fail("missing \"system\" or \"qubits\"");
  }
  c.echo["system"] = io::to_json(s);
  const int d = total_dim(s);
  auto op = [&](const std::string& key) {
    Node n = p.at(key);
    return at_node(n, [&] { return Observable(s, io::operator_matrix(n, d)); });
  };
  Observable h = p.has("hamiltonian") ? op("hamiltonian") : Observable(s, Mat::Zero(d, d));
  if (!p.has("hamiltonian")) c.echo["hamiltonian"] = io::to_json(h.data());
  ScramblingScenario sc{h, op("w"), op("v"), number_or(p, "tau", 0.0, c), std::nullopt};
  if (p.has("state")) sc.rho = io::state(p.at("state"), s);
  else c.echo["state"] = "maximally_mixed";
  return sc;
}

Verdict run_otoc(const Node& p, Ctx& c) {
  ScramblingScenario s = parse_scrambling(p, c);
  ExtractionConfig cfg = parse_extraction(p, c);
  const double tol = number_or(p, "oracle_tol", 1e-6, c);
  if (c.dry) return {};
  Verdict v;
  const double direct = otoc_direct(s);
  IepResult r = otoc_iep(s, cfg);
  v.result = {{"c_iep", r.value}, {"c_direct", direct}, {"iep", io::to_json(r)}};
  v.check("otoc_direct", r.value, direct, "equal", tol);
  return v;
}

WNormalization parse_normalization(const Node& p, Ctx& c) {
  const std::string n = p.has("normalization") ? p.at("normalization").string() : "rms";
  c.echo["normalization"] = n;
  if (n == "rms") return WNormalization::Rms;
  if (n == "trace") return WNormalization::Trace;
  p.at("normalization").fail("expected \"rms\" or \"trace\"");
}

Verdict run_otoc_cp(const Node& p, Ctx& c) {
  ScramblingScenario s = parse_scrambling(p, c);
  WNormalization norm = parse_normalization(p, c);
  ExtractionConfig cfg = parse_extraction(p, c);
  const double tol = number_or(p, "oracle_tol", 1e-6, c);
  if (c.dry) return {};
  Verdict v;
  OtocCpResult r = otoc_iep_cp(s, cfg, norm);
  v.result = {{"c_iep", r.iep.value},
              {"c_direct", r.direct},
              {"scale", r.scale},
              {"branch_probability", r.q},
              {"normalization", to_string(r.normalization)},
              {"iep", io::to_json(r.iep)},
              {"warnings", r.warnings}};
  // The extracted value is C(W~)/q; q = 1 under the rms normalization.
  v.check("otoc_direct_normalized", r.iep.value * r.q, r.direct, "equal", tol);
  return v;
}

Verdict run_way_otoc(const Node& p, Ctx& c) {
  std::optional<WayOtocFixture> fx;
  if (p.has("fixture")) {
    Node f = p.at("fixture");
    json e = json::object();
    const std::uint64_t seed = seed_or(f, c.seed, e);
    const int q = int_or(f, "qubits", 1, 1, 3, e), de = int_or(f, "de", 2, 2, 6, e);
    c.echo["fixture"] = e;
    fx = at_node(f, [&] { return way_otoc_fixture(seed, q, de); });
  } else {
    ScramblingScenario s = parse_scrambling(p, c);
    fx = WayOtocFixture{s, io::implementation(p.at("implementation"))};
  }
  WayConfig w = parse_way_config(p, c);
  if (c.dry) return {};
  return way_verdict(way_bound_otoc(fx->scenario, fx->impl, w));
}

Verdict dispatch(const std::string& kind, const Node& p, Ctx& c) {
  p.object();
  if (kind == "delta") return run_delta(p, c);
  if (kind == "epsilon") return run_epsilon(p, c);
  if (kind == "eta") return run_eta(p, c);
  if (kind == "blw") return run_blw(p, c);
  if (kind == "lt") return run_lt(p, c);
  if (kind == "way-error") return run_way_error(p, c);
  if (kind == "way-disturbance") return run_way_disturbance(p, c);
  if (kind == "otoc") return run_otoc(p, c);
  if (kind == "otoc-cp") return run_otoc_cp(p, c);
  return run_way_otoc(p, c);
}

// --- scenario files -------------------------------------------------------

struct Scenario {
  fs::path file;
  json doc;
  std::string kind;
  std::uint64_t seed = 1;
  fs::path output;
};

Scenario load(const fs::path& file) {
  Scenario s;
  s.file = file;
  std::ifstream in(file);
  if (!in) throw SchemaError("/", "cannot open " + file.string());
  try {
    s.doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("/", std::string("malformed JSON: ") + e.what());
  }
  Node root(s.doc, "");
  root.object();
  if (root.at("schema").string() != kSchema)
    root.at("schema").fail(std::string("expected \"") + kSchema + "\"");
  s.kind = root.at("kind").string();
  if (std::find(kKinds.begin(), kKinds.end(), s.kind) == kKinds.end()) root.at("kind").fail("unknown kind");
  if (root.has("seed")) s.seed = root.at("seed").uint64();
  if (root.has("output")) {
    s.output = root.at("output").string();
    if (s.output.empty()) root.at("output").fail("empty path");
  } else {
    s.output = file.stem().string() + ".report.json";
  }
  if (s.output.is_relative()) s.output = file.parent_path() / s.output;
  root.at("payload").object();
  return s;
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct RunResult {
  int code = kOk;
  std::string message;
};

RunResult run_one(const fs::path& file, const std::optional<fs::path>& out_dir, bool dry) {
  RunResult rr;
  std::optional<Scenario> sc;
  json report;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    sc = load(file);
    if (out_dir) sc->output = *out_dir / sc->output.filename();
    Ctx c;
    c.seed = sc->seed;
    c.dry = dry;
    c.echo = sc->doc.at("payload");
    Verdict v = dispatch(sc->kind, Node(sc->doc.at("payload"), "/payload"), c);
    if (dry) {
      rr.message = "valid " + file.string();
      return rr;
    }
    report = {{"schema", kSchema},
              {"kind", sc->kind},
              {"seed", sc->seed},
              {"config", c.echo},
              {"result", v.result},
              {"checks", v.checks}};
    if (v.pass) {
      report["pass"] = *v.pass;
      if (!*v.pass) rr.code = kViolation;
    }
    report["status"] = rr.code == kOk ? "ok" : "violation";
    report["exit_code"] = rr.code;
    rr.message = (rr.code == kOk ? "ok " : "VIOLATION ") + file.string() + " -> " + sc->output.string();
  } catch (const SchemaError& e) {
    rr = {kInput, file.string() + ": schema error " + e.what()};
  } catch (const ExtractionError& e) {
    rr = {kExtraction, file.string() + ": extraction failed: " + e.what()};
  } catch (const BranchProbabilityError& e) {
    rr = {kExtraction, file.string() + ": extraction failed: " + e.what()};
  } catch (const Error& e) {
    rr = {kInput, file.string() + ": invalid input at /payload: " + e.what()};
  } catch (const std::exception& e) {
    rr = {kInternal, file.string() + ": internal error: " + e.what()};
  }
  if (!sc || rr.code == kInput || rr.code == kInternal) return rr;
  if (rr.code == kExtraction) {
    report = {{"schema", kSchema}, {"kind", sc->kind}, {"seed", sc->seed},
              {"status", "extraction_failed"}, {"exit_code", rr.code}, {"diagnostics", rr.message}};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_atomic(sc->output, report.dump(2) + "\n");
    fs::path meta = sc->output;
    meta += ".meta.json";
    json m = {{"scenario", file.string()}, {"report", sc->output.string()}, {"generated_at", timestamp()},
              {"wall_seconds", secs}, {"threads", worker_count()}};
    write_atomic(meta, m.dump(2) + "\n");
  } catch (const std::exception& e) {
    rr = {kInternal, file.string() + ": " + e.what()};
  }
  return rr;
}

int run_batch(const std::vector<std::string>& files, const std::optional<fs::path>& out_dir, bool dry) {
  std::vector<RunResult> res(files.size());
  parallel_for(files.size(), [&](std::size_t i) { res[i] = run_one(files[i], out_dir, dry); });
  int code = kOk;
  for (const auto& r : res) {
    (r.code == kOk ? std::cout : std::cerr) << r.message << "\n";
    code = std::max(code, r.code);
  }
  return code;
}

// --- sweep ----------------------------------------------------------------

std::string fmt(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> g;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    std::string tok = s.substr(pos, next - pos);
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
      throw SchemaError("--grid", "cannot parse \"" + tok + "\" as a number");
    g.push_back(v);
    pos = next + 1;
  }
  return g;
}

int sweep(const std::string& file, const std::string& param, const std::string& grid_text,
          const std::string& out_csv, const std::string& out_json) {
  try {
    if (grid_text.find_first_not_of(" ,") == std::string::npos) throw SchemaError("--grid", "empty grid");
    const std::vector<double> grid = parse_grid(grid_text);
    Scenario sc = load(file);
    Node p(sc.doc.at("payload"), "/payload");
    Ctx c;
    c.seed = sc.seed;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows(grid.size());

    if (param == "tau") {
      if (sc.kind != "otoc" && sc.kind != "otoc-cp")
        throw SchemaError("/kind", "a tau sweep needs an otoc or otoc-cp scenario");
      ScramblingScenario s = parse_scrambling(p, c);
      ExtractionConfig cfg = parse_extraction(p, c);
      const bool cp = sc.kind == "otoc-cp";
      const WNormalization norm = cp ? parse_normalization(p, c) : WNormalization::Rms;
      header = {"tau", "C_T", "C_iep", "gap"};
      parallel_for(grid.size(), [&](std::size_t i) {
        ScramblingScenario si = s;
        si.tau = grid[i];
        double direct, iep;
        if (cp) {
          OtocCpResult r = otoc_iep_cp(si, cfg, norm);
          direct = r.direct;
          iep = r.iep.value;
        } else {
          direct = otoc_direct(si);
          iep = otoc_iep(si, cfg).value;
        }
        rows[i] = {grid[i], direct, iep, iep - direct};
      });
    } else if (param == "theta") {
      for (double t : grid)
        if (!(t > 0)) throw SchemaError("--grid", "theta must be positive");
      std::optional<LossSpec> spec;
      Recovery rec;
      if (sc.kind == "epsilon" || sc.kind == "eta") {
        MeasSetup m = parse_meas(p, "observable");
        rec = parse_recovery(p, c);
        if (sc.kind == "epsilon") {
          spec = error_spec(m.rho, m.obs, m.meas);
          if (rec.f && rec.type != Recovery::Type::Explicit) rec.x = pointer_observable(m.meas, *rec.f).data();
        } else {
          spec = disturbance_spec(m.rho, m.obs, m.meas);
        }
      } else if (sc.kind == "otoc") {
        ScramblingScenario s = parse_scrambling(p, c);
        spec = scrambling_spec(s.state(), s.v0, heisenberg(s.w0, s.h, s.tau).data(), false);
        rec = Recovery::canonical_x(spec->generator.data());
      } else {
        throw SchemaError("/kind", "a theta sweep needs an epsilon, eta or otoc scenario");
      }
      ExtractionConfig cfg = parse_extraction(p, c);
      header = {"theta", "delta2"};
      parallel_for(grid.size(), [&](std::size_t i) {
        rows[i] = {grid[i], delta_sq_at(*spec, rec, grid[i], cfg.optimizer)};
      });
    } else {
      throw SchemaError("--param", "expected tau or theta");
    }

    std::ostringstream csv;
    for (std::size_t j = 0; j < header.size(); ++j) csv << (j ? "," : "") << header[j];
    csv << "\n";
    json jrows = json::array();
    for (const auto& r : rows) {
      json jr = json::object();
      for (std::size_t j = 0; j < r.size(); ++j) {
        csv << (j ? "," : "") << fmt(r[j]);
        jr[header[j]] = r[j];
      }
      csv << "\n";
      jrows.push_back(jr);
    }
    if (out_csv.empty()) std::cout << csv.str();
    else write_atomic(out_csv, csv.str());
    if (!out_json.empty()) {
      json j = {{"schema", kSchema}, {"kind", sc.kind}, {"seed", sc.seed}, {"parameter", param},
                {"config", c.echo}, {"rows", jrows}};
      write_atomic(out_json, j.dump(2) + "\n");
    }
    return kOk;
  } catch (const SchemaError& e) {
    std::cerr << file << ": schema error " << e.what() << "\n";
    return kInput;
  } catch (const ExtractionError& e) {
    std::cerr << file << ": extraction failed: " << e.what() << "\n";
    return kExtraction;
  } catch (const Error& e) {
    std::cerr << file << ": invalid input: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << file << ": internal error: " << e.what() << "\n";
    return kInternal;
  }
}

// --- built-in corpus ------------------------------------------------------

json scenario(const std::string& kind, std::uint64_t seed, const std::string& output, json payload) {
  return {{"schema", kSchema}, {"kind", kind}, {"seed", seed}, {"output", output}, {"payload", payload}};
}

json qubit_projective_z() {
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  json s = json::array({{{"name", "S"}, {"dim", 2}}});
  return {{"in", s},
          {"out", json::array({{{"name", "S'"}, {"dim", 2}}})},
          {"branches",
           json::array({{{"label", "+1"}, {"kraus", io::to_json(p0)}},
                        {{"label", "-1"}, {"kraus", io::to_json(p1)}}})}};
}

json pauli(const std::string& s, double coeff = 1) { return {{"pauli", json::array({{{"coeff", coeff}, {"string", s}}})}}; }

json chain_hamiltonian() {
  json terms = json::array();
  for (const char* s : {"ZZI", "IZZ", "XII", "IXI", "IIX"}) terms.push_back({{"coeff", 1.0}, {"string", s}});
  return {{"pauli", terms}};
}

std::map<std::string, json> corpus() {
  std::map<std::string, json> c;
  const json zero_state = {{"pure", json::array({1, 0})}};
  c["epsilon_qubit.json"] = scenario(
      "epsilon", 1, "epsilon_qubit.report.json",
      {{"instrument", qubit_projective_z()}, {"state", zero_state}, {"observable", pauli("X")},
       {"recovery", {{"type", "canonical"}, {"f", {{"+1", 1}, {"-1", -1}}}}}});
  c["epsilon_qubit_optimize.json"] = scenario(
      "epsilon", 1, "epsilon_qubit_optimize.report.json",
      {{"instrument", qubit_projective_z()}, {"state", zero_state}, {"observable", pauli("X")},
       {"recovery", {{"type", "optimize"}}}});
  c["eta_qubit.json"] = scenario(
      "eta", 1, "eta_qubit.report.json",
      {{"instrument", qubit_projective_z()}, {"state", zero_state}, {"observable", pauli("X")}});

  // Qubit dephasing with strength 0.3, recovered against the |+>, |-> ensemble.
  {
    const double p = 0.3;
    json ch = {{"in", json::array({{{"name", "Q"}, {"dim", 2}}})},
               {"kraus", json::array({io::to_json(std::sqrt(1 - p) * Mat::Identity(2, 2)),
                                      io::to_json(std::sqrt(p) * linalg::pauli('Z'))})}};
    c["delta_dephasing.json"] = scenario("delta", 1, "delta_dephasing.report.json",
                                         {{"loss", ch}, {"recovery", {{"type", "optimize"}}}});
  }

  c["blw_error.json"] = scenario("blw", 1, "blw_error.report.json",
                                 {{"mode", "error"}, {"a", {0, 0, 1}}, {"a_prime", {1, 0, 0}}});
  c["blw_disturbance.json"] = scenario(
      "blw", 1, "blw_disturbance.report.json",
      {{"mode", "disturbance"}, {"a", {0, 0, 1}}, {"a_prime", {0.6, 0, 0.8}}});

  c["lt_error.json"] = scenario(
      "lt", 1, "lt_error.report.json",
      {{"mode", "error"}, {"instrument", qubit_projective_z()},
       {"state", {{"pure", json::array({0.8, 0.6})}}}, {"observable", pauli("X")},
       {"f", {{"+1", 1}, {"-1", -1}}}});

  c["way_error.json"] = scenario("way-error", 11, "way_error.report.json",
                                 {{"fixture", {{"seed", 11}, {"ds", 2}, {"de", 2}}}});
  c["way_error_yanase.json"] = scenario(
      "way-error", 2, "way_error_yanase.report.json",
      {{"fixture", {{"seed", 2}, {"ds", 2}, {"de", 3}}}, {"yanase", true}});
  {
    WayErrorFixture f = way_error_fixture(3, 2, 2, AncillaKind::Coherent);
    c["way_error_explicit.json"] = scenario(
        "way-error", 3, "way_error_explicit.report.json",
        {{"instrument", io::to_json(f.meas)}, {"state", io::to_json(f.rho.data())},
         {"observable", io::to_json(f.a.data())}, {"implementation", io::to_json(f.impl)},
         {"lhs", {{"method", "canonical"}}}});
  }
  c["way_disturbance.json"] = scenario("way-disturbance", 3, "way_disturbance.report.json",
                                       {{"fixture", {{"seed", 3}, {"ds", 2}, {"de", 2}}}});
  c["way_swap.json"] = scenario("way-disturbance", 5, "way_swap.report.json",
                                {{"fixture", {{"type", "swap"}, {"seed", 5}, {"d", 2}}}});
  c["way_otoc.json"] = scenario("way-otoc", 6, "way_otoc.report.json",
                                {{"fixture", {{"seed", 6}, {"qubits", 1}, {"de", 2}}}});

  c["otoc_qubit.json"] = scenario("otoc", 1, "otoc_qubit.report.json",
                                  {{"qubits", 1}, {"w", pauli("X")}, {"v", pauli("Z")}, {"tau", 0.0}});
  c["otoc_chain.json"] = scenario(
      "otoc", 1, "otoc_chain.report.json",
      {{"qubits", 3}, {"hamiltonian", chain_hamiltonian()}, {"w", pauli("XII")}, {"v", pauli("IIZ")},
       {"tau", 1.0}});
  {
    json w = {{"pauli", json::array({{{"coeff", 0.7}, {"string", "XI"}},
                                     {{"coeff", 0.4}, {"string", "ZZ"}},
                                     {{"coeff", 0.2}, {"string", "II"}}})}};
    json h = {{"pauli", json::array({{{"coeff", 1.0}, {"string", "ZZ"}},
                                     {{"coeff", 0.5}, {"string", "XI"}},
                                     {{"coeff", 0.5}, {"string", "IX"}}})}};
    c["otoc_cp.json"] = scenario("otoc-cp", 1, "otoc_cp.report.json",
                                 {{"qubits", 2}, {"hamiltonian", h}, {"w", w}, {"v", pauli("IZ")},
                                  {"tau", 0.7}});
  }
  return c;
}

std::map<std::string, json> negative_corpus() {
  std::map<std::string, json> c;
  // A recorded lhs of 0 cannot satisfy a bound with a positive right side.
  c["way_error_violation.json"] = scenario(
      "way-error", 11, "way_error_violation.report.json",
      {{"fixture", {{"seed", 11}, {"ds", 2}, {"de", 2}}}, {"lhs", {{"method", "value"}, {"value", 0.0}}}});
  c["missing_field.json"] = scenario("epsilon", 1, "missing_field.report.json",
                                     {{"instrument", qubit_projective_z()}, {"observable", pauli("X")}});
  return c;
}

int fixtures(const fs::path& dir) {
  try {
    for (const auto& [name, doc] : corpus()) write_atomic(dir / name, doc.dump(2) + "\n");
    for (const auto& [name, doc] : negative_corpus()) write_atomic(dir / "negative" / name, doc.dump(2) + "\n");
    std::cout << "wrote " << corpus().size() << " scenarios to " << dir.string() << " and "
              << negative_corpus().size() << " to " << (dir / "negative").string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irrevkit: error, disturbance and scrambling as irreversibility"};
  app.require_subcommand(1);

  std::vector<std::string> run_files;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Evaluate scenario files and write reports");
  run->add_option("files", run_files, "Scenario JSON files")->required();
  run->add_option("--output-dir", out_dir, "Write reports here instead of each scenario's output path");

  std::vector<std::string> val_files;
  auto* validate = app.add_subcommand("validate", "Check scenario files against their schema");
  validate->add_option("files", val_files, "Scenario JSON files")->required();

  std::string sweep_file, param, grid, out_csv, out_json;
  auto* sw = app.add_subcommand("sweep", "Evaluate one scenario over a parameter grid");
  sw->add_option("file", sweep_file, "Scenario JSON file")->required();
  sw->add_option("--param", param, "tau or theta")->required();
  sw->add_option("--grid", grid, "Comma-separated values")->required();
  sw->add_option("--out", out_csv, "CSV path (default: stdout)");
  sw->add_option("--json", out_json, "Also write the rows as JSON");

  std::string fixture_dir = "fixtures";
  auto* fx = app.add_subcommand("fixtures", "Write the built-in example corpus");
  fx->add_option("--dir", fixture_dir, "Target directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }

  if (*run) {
    std::optional<fs::path> od;
    if (!out_dir.empty()) od = out_dir;
    return run_batch(run_files, od, false);
  }
  if (*validate) return run_batch(val_files, std::nullopt, true);
  if (*sw) return sweep(sweep_file, param, grid, out_csv, out_json);
  return fixtures(fixture_dir);
}
