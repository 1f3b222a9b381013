#include "irrevkit/io.hpp"

#include <cmath>

namespace irrevkit::io {

namespace {
std::string escape(const std::string& key) {
  std::string r;
  for (char c : key) {
    if (c == '~') r += "~0";
    else if (c == '/') r += "~1";
    else r += c;
  }
  return r;
}
}  // namespace

bool Node::has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

Node Node::at(const std::string& key) const {
  if (!j_->is_object()) fail("expected an object");
  auto it = j_->find(key);
  if (it == j_->end()) Node(*j_, ptr_ + "/" + escape(key)).fail("missing required field");
  return Node(*it, ptr_ + "/" + escape(key));
}

Node Node::at(std::size_t i) const {
  if (!j_->is_array()) fail("expected an array");
  if (i >= j_->size()) fail("index out of range");
  return Node((*j_)[i], ptr_ + "/" + std::to_string(i));
}

std::size_t Node::size() const {
  if (!j_->is_array() && !j_->is_object()) fail("expected an array");
  return j_->size();
}

double Node::number() const {
  if (!j_->is_number()) fail("expected a number");
  return j_->get<double>();
}

int Node::integer() const {
  if (!j_->is_number_integer()) fail("expected an integer");
  return j_->get<int>();
}

std::uint64_t Node::uint64() const {
  if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<long long>() >= 0))
    fail("expected a non-negative integer");
  return j_->get<std::uint64_t>();
}

bool Node::boolean() const {
  if (!j_->is_boolean()) fail("expected a boolean");
  return j_->get<bool>();
}

std::string Node::string() const {
  if (!j_->is_string()) fail("expected a string");
  return j_->get<std::string>();
}

const json& Node::array() const {
  if (!j_->is_array()) fail("expected an array");
  return *j_;
}

const json& Node::object() const {
  if (!j_->is_object()) fail("expected an object");
  return *j_;
}

void Node::fail(const std::string& msg) const { throw SchemaError(ptr_.empty() ? "/" : ptr_, msg); }

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix(const Node& n) {
  const json& rows = n.array();
  if (rows.empty()) n.fail("empty matrix");
  const std::size_t cols = n.at(0).array().size();
  Mat m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Node row = n.at(i);
    if (row.array().size() != cols) row.fail("ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) {
      Node e = row.at(j);
      if (e.raw().is_number()) {
        m(i, j) = e.number();
      } else {
        if (!e.raw().is_array() || e.raw().size() != 2) e.fail("expected [re, im]");
        m(i, j) = cplx(e.at(0).number(), e.at(1).number());
      }
    }
  }
  return m;
}

Space space(const Node& n) {
  Space s;
  for (std::size_t i = 0; i < n.array().size(); ++i) {
    Node l = n.at(i);
    const int d = l.at("dim").integer();
    if (d < 1) l.at("dim").fail("dimension must be positive");
    s.push_back({l.at("name").string(), d});
  }
  try {
    check_space(s);
  } catch (const Error& e) {
    n.fail(e.what());
  }
  return s;
}

json to_json(const Space& s) {
  json a = json::array();
  for (const auto& l : s) a.push_back({{"name", l.name}, {"dim", l.dim}});
  return a;
}

Mat operator_matrix(const Node& n, int dim) {
  Mat m;
  if (n.raw().is_object() && n.has("pauli")) {
    Node terms = n.at("pauli");
    m = Mat::Zero(dim, dim);
    for (std::size_t i = 0; i < terms.array().size(); ++i) {
      Node t = terms.at(i);
      const std::string s = t.at("string").string();
      if (s.find_first_not_of("IXYZ") != std::string::npos) t.at("string").fail("Pauli letters are I, X, Y, Z");
      if ((1 << s.size()) != dim) t.at("string").fail("length does not match dimension " + std::to_string(dim));
      const double c = t.has("coeff") ? t.at("coeff").number() : 1.0;
      m += c * linalg::pauli_string(s);
    }
  } else if (n.raw().is_object() && n.has("matrix")) {
    m = matrix(n.at("matrix"));
  } else {
    m = matrix(n);
  }
  if (m.rows() != dim || m.cols() != dim) n.fail("expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " operator");
  return m;
}

DensityMatrix state(const Node& n, const Space& s) {
  try {
    if (n.raw().is_string()) {
      if (n.string() != "maximally_mixed") n.fail("unknown state keyword");
      return DensityMatrix::maximally_mixed(s);
    }
    if (n.raw().is_object() && n.has("pure")) {
      Node p = n.at("pure");
      Vec v(p.array().size());
      for (std::size_t i = 0; i < p.array().size(); ++i) {
        Node e = p.at(i);
        v(i) = e.raw().is_number() ? cplx(e.number(), 0) : cplx(e.at(0).number(), e.at(1).number());
      }
      if (v.size() != total_dim(s)) p.fail("amplitude count does not match the space");
      if (v.norm() == 0) p.fail("zero vector");
      return DensityMatrix::pure(s, v / v.norm());
    }
    Mat m = n.raw().is_object() ? matrix(n.at("matrix")) : matrix(n);
    if (m.rows() != total_dim(s) || m.cols() != total_dim(s)) n.fail("state size does not match the space");
    return DensityMatrix(s, m);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

Instrument instrument(const Node& n) {
  const Space in = space(n.at("in"));
  const Space out = n.has("out") ? space(n.at("out")) : in;
  Node bs = n.at("branches");
  std::vector<Branch> branches;
  for (std::size_t i = 0; i < bs.array().size(); ++i) {
    Node b = bs.at(i);
    Mat k = matrix(b.at("kraus"));
    if (k.rows() != total_dim(out) || k.cols() != total_dim(in)) b.at("kraus").fail("Kraus operator has the wrong shape");
    branches.push_back({b.at("label").string(), k});
  }
  try {
    return Instrument(in, out, std::move(branches));
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

KrausChannel channel(const Node& n) {
  const Space in = space(n.at("in"));
  const Space out = n.has("out") ? space(n.at("out")) : in;
  Node ks = n.at("kraus");
  std::vector<Mat> kraus;
  for (std::size_t i = 0; i < ks.array().size(); ++i) {
    Mat k = matrix(ks.at(i));
    if (k.rows() != total_dim(out) || k.cols() != total_dim(in)) ks.at(i).fail("Kraus operator has the wrong shape");
    kraus.push_back(k);
  }
  try {
    return KrausChannel(in, out, std::move(kraus));
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

TestEnsemble ensemble(const Node& n) {
  if (n.raw().is_string()) {
    if (n.string() != "plus_minus") n.fail("unknown ensemble keyword");
    return TestEnsemble::plus_minus("Q");
  }
  const Space s = space(n.at("space"));
  Node es = n.at("entries");
  std::vector<EnsembleEntry> entries;
  for (std::size_t i = 0; i < es.array().size(); ++i) {
    Node e = es.at(i);
    entries.push_back({e.at("p").number(), state(e.at("state"), s)});
  }
  try {
    return TestEnsemble(std::move(entries));
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

OutcomeFunction outcome_function(const Node& n) {
  OutcomeFunction f;
  for (auto it = n.object().begin(); it != n.object().end(); ++it)
    f[it.key()] = n.at(it.key()).number();
  return f;
}

OptimizerConfig optimizer(const Node* n, std::uint64_t default_seed) {
  OptimizerConfig c;
  c.seed = default_seed;
  if (!n) return c;
  n->object();
  if (n->has("seed")) c.seed = n->at("seed").uint64();
  if (n->has("max_iters")) c.max_iters = n->at("max_iters").integer();
  if (n->has("step")) c.step = n->at("step").number();
  if (n->has("restarts")) c.restarts = n->at("restarts").integer();
  if (n->has("tol")) c.tol = n->at("tol").number();
  if (c.max_iters < 1) n->at("max_iters").fail("must be positive");
  if (c.restarts < 0) n->at("restarts").fail("must be non-negative");
  if (!(c.step > 0)) n->at("step").fail("must be positive");
  return c;
}

json to_json(const OptimizerConfig& c) {
  return {{"seed", c.seed}, {"max_iters", c.max_iters}, {"step", c.step}, {"restarts", c.restarts}, {"tol", c.tol}};
}

ExtractionConfig extraction(const Node* n, const OptimizerConfig& opt) {
  ExtractionConfig c;
  c.optimizer = opt;
  if (!n) return c;
  n->object();
  if (n->has("method")) {
    const std::string m = n->at("method").string();
    if (m == "analytic") c.method = ExtractionMethod::Analytic;
    else if (m == "extrapolated") c.method = ExtractionMethod::Extrapolated;
    else n->at("method").fail("expected \"extrapolated\" or \"analytic\"");
  }
  if (n->has("theta_grid")) {
    Node g = n->at("theta_grid");
    c.theta_grid.clear();
    for (std::size_t i = 0; i < g.array().size(); ++i) {
      const double t = g.at(i).number();
      if (!(t > 0)) g.at(i).fail("theta must be positive");
      c.theta_grid.push_back(t);
    }
    if (c.theta_grid.empty()) g.fail("empty theta grid");
  }
  if (n->has("tol")) c.tol = n->at("tol").number();
  if (n->has("fit_terms")) {
    c.fit_terms = n->at("fit_terms").integer();
    if (c.fit_terms < 1 || c.fit_terms > 4) n->at("fit_terms").fail("expected 1..4");
  }
  if (c.method == ExtractionMethod::Extrapolated && int(c.theta_grid.size()) < c.fit_terms)
    n->fail("theta grid shorter than fit_terms");
  return c;
}

json to_json(const ExtractionConfig& c) {
  return {{"method", to_string(c.method)},
          {"theta_grid", c.theta_grid},
          {"tol", c.tol},
          {"fit_terms", c.fit_terms},
          {"optimizer", to_json(c.optimizer)}};
}

Implementation implementation(const Node& n) {
  const Space alpha = space(n.at("alpha"));
  const Space beta = space(n.at("beta"));
  const Space alpha_out = space(n.at("alpha_out"));
  const Space beta_out = space(n.at("beta_out"));
  DensityMatrix rho_beta = state(n.at("rho_beta"), beta);
  Mat u = matrix(n.at("u"));
  ChargeAssignment charges;
  Node cs = n.at("charges");
  for (auto it = cs.object().begin(); it != cs.object().end(); ++it) charges[it.key()] = matrix(cs.at(it.key()));
  return {alpha, beta, alpha_out, beta_out, rho_beta, u, charges};
}

json to_json(const Implementation& impl) {
  json cs = json::object();
  for (const auto& [k, v] : impl.charges) cs[k] = to_json(v);
  return {{"alpha", to_json(impl.alpha)},         {"beta", to_json(impl.beta)},
          {"alpha_out", to_json(impl.alpha_out)}, {"beta_out", to_json(impl.beta_out)},
          {"rho_beta", to_json(impl.rho_beta.data())}, {"u", to_json(impl.u)},
          {"charges", cs}};
}

namespace {
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
}  // namespace

json to_json(const IepResult& r) {
  json grid = json::array();
  for (const auto& [t, d] : r.theta_grid) grid.push_back({{"theta", t}, {"delta2", d}});
  return {{"value", r.value},
          {"method", r.method},
          {"recovery", r.recovery},
          {"fit_residual", r.fit_residual},
          {"coefficients", r.coefficients},
          {"theta_grid", grid},
          {"branch_probabilities", r.branch_probabilities},
          {"warnings", r.warnings}};
}

json to_json(const DeltaReport& r) {
  json per = json::array();
  for (const auto& [k, d] : r.per_state) per.push_back({{"k", k}, {"delta", d}});
  json j = {{"delta", r.delta},
            {"per_state", per},
            {"converged", r.converged},
            {"local_optimum_only", r.local_optimum_only},
            {"petz_delta", number_or_null(r.petz_delta)},
            {"branch_probabilities", r.branch_probabilities},
            {"warnings", r.warnings}};
  if (!r.start_used.empty()) j["start_used"] = r.start_used;
  if (r.optimizer_trace) {
    json tr = json::array();
    for (const auto& [it, f] : *r.optimizer_trace) tr.push_back({it, f});
    j["optimizer_trace"] = tr;
  }
  if (r.recovery_used) j["recovery_used"] = to_json(*r.recovery_used);
  return j;
}

json to_json(const WayReport& r) {
  json j = {{"bound", r.bound},
            {"lhs", r.lhs},
            {"rhs", number_or_null(r.rhs)},
            {"slack", number_or_null(r.slack)},
            {"pass", r.pass},
            {"lhs_method", r.lhs_method},
            {"terms",
             {{"commutator_expectation", r.terms.commutator_expectation},
              {"fisher_cost_upper", r.terms.fisher_cost_upper},
              {"qfi_state", r.terms.qfi_state},
              {"variance_out", r.terms.variance_out},
              {"delta", r.terms.delta},
              {"conservation_gap", r.terms.conservation_gap},
              {"implementation_gap", r.terms.implementation_gap}}}};
  if (r.lhs_detail) j["lhs_detail"] = to_json(*r.lhs_detail);
  return j;
}

json to_json(const Instrument& m) {
  json bs = json::array();
  for (const auto& b : m.branches()) bs.push_back({{"label", b.label}, {"kraus", to_json(b.kraus)}});
  return {{"in", to_json(m.in_space())}, {"out", to_json(m.out_space())}, {"branches", bs}};
}

json to_json(const KrausChannel& k) {
  json ks = json::array();
  for (const auto& m : k.kraus()) ks.push_back(to_json(m));
  return {{"in", to_json(k.in_space())}, {"out", to_json(k.out_space())}, {"kraus", ks}};
}

json state_json(const Mat& rho) { return to_json(rho); }

}  // namespace irrevkit::io
