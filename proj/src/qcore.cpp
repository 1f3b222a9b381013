#include "irrevkit/qcore.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace irrevkit {

using linalg::eigh;
using linalg::hermiticity_gap;
using linalg::max_abs;

int total_dim(const Space& s) {
  int d = 1;
  for (const auto& l : s) d *= l.dim;
  return d;
}

std::vector<int> dims_of(const Space& s) {
  std::vector<int> d;
  for (const auto& l : s) d.push_back(l.dim);
  return d;
}

std::string describe(const Space& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << (i ? ", " : "") << s[i].name << ":" << s[i].dim;
  os << "]";
  return os.str();
}

void check_space(const Space& s) {
  std::set<std::string> seen;
  for (const auto& l : s) {
    if (l.dim < 1) throw CompositeSpaceError("label '" + l.name + "' has non-positive dim");
    if (!seen.insert(l.name).second)
      throw CompositeSpaceError("label '" + l.name + "' appears twice in " + describe(s));
  }
}

Space concat(const Space& a, const Space& b) {
  Space r = a;
  r.insert(r.end(), b.begin(), b.end());
  check_space(r);
  return r;
}

Space relabel(const Space& s, const std::vector<std::string>& names) {
  if (names.size() != s.size()) throw ShapeError("relabel: name count mismatch");
  Space r = s;
  for (std::size_t i = 0; i < s.size(); ++i) r[i].name = names[i];
  check_space(r);
  return r;
}

namespace {

void check_square(const Mat& m, int d, const char* what) {
  if (m.rows() != d || m.cols() != d) {
    std::ostringstream os;
    os << what << ": expected " << d << "x" << d << " matrix, got " << m.rows() << "x"
       << m.cols();
    throw ShapeError(os.str());
  }
}

}  // namespace

DensityMatrix::DensityMatrix(Space space, const Mat& data) : space_(std::move(space)) {
  check_space(space_);
  check_square(data, total_dim(space_), "DensityMatrix");
  if (hermiticity_gap<double>(data) > tol::herm)
    throw StateValidityError("density matrix is not Hermitian");
  data_ = linalg::hermitize<double>(data);
  if (std::abs(data_.trace().real() - 1.0) > tol::trace)
    throw StateValidityError("density matrix trace differs from 1");
  if (eigh<double>(data_).values.minCoeff() < -tol::neg_eig)
    throw StateValidityError("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::pure(Space space, const Vec& psi) {
  Vec v = psi / psi.norm();
  return DensityMatrix(std::move(space), v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Space space) {
  const int d = total_dim(space);
  return DensityMatrix(std::move(space), Mat::Identity(d, d) / double(d));
}

Observable::Observable(Space space, const Mat& data) : space_(std::move(space)) {
  check_space(space_);
  check_square(data, total_dim(space_), "Observable");
  if (hermiticity_gap<double>(data) > tol::herm)
    throw ShapeError("observable is not Hermitian");
  data_ = linalg::hermitize<double>(data);
}

KrausChannel::KrausChannel(Space in, Space out, std::vector<Mat> kraus, TraceCondition cond)
    : in_(std::move(in)), out_(std::move(out)), kraus_(std::move(kraus)) {
  check_space(in_);
  check_space(out_);
  if (kraus_.empty()) throw ShapeError("channel needs at least one Kraus operator");
  const int di = total_dim(in_), dout = total_dim(out_);
  for (const auto& k : kraus_)
    if (k.rows() != dout || k.cols() != di) {
      std::ostringstream os;
      os << "Kraus operator is " << k.rows() << "x" << k.cols() << ", expected " << dout << "x"
         << di;
      throw ShapeError(os.str());
    }
  if (cond == TraceCondition::Preserving && tp_gap() > tol::tp)
    throw ChannelValidityError("channel is not trace preserving");
  if (cond == TraceCondition::NonIncreasing) {
    Mat s = Mat::Zero(di, di);
    for (const auto& k : kraus_) s += k.adjoint() * k;
    if (eigh<double>(s).values.maxCoeff() > 1.0 + tol::tp)
      throw ChannelValidityError("CP map increases trace");
  }
}

KrausChannel KrausChannel::identity(const Space& s) {
  const int d = total_dim(s);
  return KrausChannel(s, s, {Mat::Identity(d, d)});
}

KrausChannel KrausChannel::unitary(const Space& s, const Mat& u) {
  return KrausChannel(s, s, {u});
}

Mat KrausChannel::operator()(const Mat& x) const {
  Mat r = Mat::Zero(out_dim(), out_dim());
  for (const auto& k : kraus_) r.noalias() += k * x * k.adjoint();
  return r;
}

Mat KrausChannel::adjoint_apply(const Mat& o) const {
  Mat r = Mat::Zero(in_dim(), in_dim());
  for (const auto& k : kraus_) r.noalias() += k.adjoint() * o * k;
  return r;
}

Mat KrausChannel::choi() const {
  const int di = in_dim(), dout = out_dim();
  Mat j = Mat::Zero(di * dout, di * dout);
  for (const auto& k : kraus_) {
    // column-stacked so that J = sum_{ij} |i><j| (x) N(|i><j|)
    Vec v(di * dout);
    for (int i = 0; i < di; ++i)
      for (int a = 0; a < dout; ++a) v(i * dout + a) = k(a, i);
    j.noalias() += v * v.adjoint();
  }
  return j;
}

double KrausChannel::tp_gap() const {
  const int di = in_dim();
  Mat s = Mat::Zero(di, di);
  for (const auto& k : kraus_) s.noalias() += k.adjoint() * k;
  return max_abs<double>(s - Mat::Identity(di, di));
}

double KrausChannel::choi_min_eig() const {
  return eigh<double>(choi()).values.minCoeff();
}

KrausChannel KrausChannel::minimal() const {
  const int di = in_dim(), dout = out_dim();
  if (int(kraus_.size()) <= di * dout) return *this;
  auto e = eigh<double>(choi());
  std::vector<Mat> ks;
  const double scale = std::max(1.0, e.values.maxCoeff());
  for (Eigen::Index c = e.values.size(); c-- > 0;) {
    if (e.values(c) <= 1e-14 * scale) continue;
    Mat k(dout, di);
    const double s = std::sqrt(e.values(c));
    for (int i = 0; i < di; ++i)
      for (int a = 0; a < dout; ++a) k(a, i) = s * e.vectors(i * dout + a, c);
    ks.push_back(k);
  }
  if (ks.empty()) ks.push_back(Mat::Zero(dout, di));
  return KrausChannel(in_, out_, std::move(ks), TraceCondition::Unchecked);
}

KrausChannel KrausChannel::relabeled(Space in, Space out) const {
  if (total_dim(in) != in_dim() || total_dim(out) != out_dim())
    throw ShapeError("relabeled: dimension mismatch");
  return KrausChannel(std::move(in), std::move(out), kraus_, TraceCondition::Unchecked);
}

KrausChannel compose(const KrausChannel& second, const KrausChannel& first) {
  if (first.out_dim() != second.in_dim()) throw ShapeError("compose: dimension mismatch");
  std::vector<Mat> ks;
  ks.reserve(first.kraus().size() * second.kraus().size());
  for (const auto& b : second.kraus())
    for (const auto& a : first.kraus()) ks.push_back(b * a);
  return KrausChannel(first.in_space(), second.out_space(), std::move(ks),
                      TraceCondition::Unchecked);
}

Instrument::Instrument(Space in, Space out, std::vector<Branch> branches)
    : in_(std::move(in)), out_(std::move(out)), branches_(std::move(branches)) {
  check_space(in_);
  check_space(out_);
  if (branches_.empty()) throw ShapeError("instrument needs at least one branch");
  const int di = total_dim(in_), dout = total_dim(out_);
  Mat s = Mat::Zero(di, di);
  for (const auto& b : branches_) {
    if (b.kraus.rows() != dout || b.kraus.cols() != di)
      throw ShapeError("instrument branch '" + b.label + "' has the wrong shape");
    s += b.kraus.adjoint() * b.kraus;
    if (std::find(outcomes_.begin(), outcomes_.end(), b.label) == outcomes_.end())
      outcomes_.push_back(b.label);
  }
  if (max_abs<double>(s - Mat::Identity(di, di)) > tol::tp)
    throw ChannelValidityError("instrument branches do not sum to a trace-preserving map");
}

int Instrument::outcome_index(const std::string& label) const {
  auto it = std::find(outcomes_.begin(), outcomes_.end(), label);
  if (it == outcomes_.end()) throw OutcomeFunctionError("unknown outcome '" + label + "'");
  return int(it - outcomes_.begin());
}

Mat Instrument::effect(const std::string& label) const {
  const int di = total_dim(in_);
  Mat e = Mat::Zero(di, di);
  for (const auto& b : branches_)
    if (b.label == label) e += b.kraus.adjoint() * b.kraus;
  return e;
}

KrausChannel Instrument::channel() const {
  std::vector<Mat> ks;
  for (const auto& b : branches_) ks.push_back(b.kraus);
  return KrausChannel(in_, out_, std::move(ks));
}

TestEnsemble::TestEnsemble(std::vector<EnsembleEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ShapeError("empty test ensemble");
  double total = 0;
  for (const auto& e : entries_) {
    if (e.p < 0) throw StateValidityError("negative ensemble weight");
    if (e.rho.space() != entries_.front().rho.space())
      throw CompositeSpaceError("ensemble states live on different spaces");
    total += e.p;
  }
  if (std::abs(total - 1.0) > tol::ensemble)
    throw StateValidityError("ensemble weights do not sum to 1");
}

TestEnsemble TestEnsemble::plus_minus(const std::string& label) {
  Space q{{label, 2}};
  Vec plus(2), minus(2);
  plus << 1, 1;
  minus << 1, -1;
  return TestEnsemble({{0.5, DensityMatrix::pure(q, plus)}, {0.5, DensityMatrix::pure(q, minus)}});
}

DensityMatrix TestEnsemble::average() const {
  Mat m = Mat::Zero(entries_.front().rho.dim(), entries_.front().rho.dim());
  for (const auto& e : entries_) m += e.p * e.rho.data();
  m /= m.trace().real();
  return DensityMatrix(space(), m);
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(concat(a.space(), b.space()), linalg::kron<double>(a.data(), b.data()));
}

Observable tensor(const Observable& a, const Observable& b) {
  return Observable(concat(a.space(), b.space()), linalg::kron<double>(a.data(), b.data()));
}

KrausChannel tensor(const KrausChannel& a, const KrausChannel& b) {
  Space in = concat(a.in_space(), b.in_space());
  Space out = concat(a.out_space(), b.out_space());
  std::vector<Mat> ks;
  for (const auto& ka : a.kraus())
    for (const auto& kb : b.kraus()) ks.push_back(linalg::kron<double>(ka, kb));
  return KrausChannel(std::move(in), std::move(out), std::move(ks), TraceCondition::Unchecked);
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  std::vector<bool> mask(rho.space().size(), false);
  for (const auto& k : keep) {
    auto it = std::find_if(rho.space().begin(), rho.space().end(),
                           [&](const HilbertLabel& l) { return l.name == k; });
    if (it == rho.space().end()) throw CompositeSpaceError("unknown label '" + k + "'");
    mask[it - rho.space().begin()] = true;
  }
  Space kept;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) kept.push_back(rho.space()[i]);
  Mat r = linalg::partial_trace<double>(rho.data(), dims_of(rho.space()), mask);
  if (kept.empty()) return DensityMatrix({}, r);
  return DensityMatrix(kept, r);
}

namespace {

// Locates the channel's input labels as a contiguous run inside `s`.
std::size_t locate(const Space& s, const Space& in) {
  for (std::size_t start = 0; start + in.size() <= s.size(); ++start) {
    bool ok = true;
    for (std::size_t j = 0; j < in.size() && ok; ++j) ok = s[start + j].name == in[j].name;
    if (!ok) continue;
    for (std::size_t j = 0; j < in.size(); ++j)
      if (s[start + j].dim != in[j].dim)
        throw ShapeError("label '" + in[j].name + "' has a different dimension in the state");
    return start;
  }
  throw ShapeError("channel input " + describe(in) + " is not a contiguous part of " +
                   describe(s));
}

struct Embedding {
  int left, right;
  Space out;
};

Embedding embedding(const Space& s, const Space& in, const Space& out) {
  const std::size_t start = locate(s, in);
  Embedding e;
  e.left = total_dim(Space(s.begin(), s.begin() + start));
  e.right = total_dim(Space(s.begin() + start + in.size(), s.end()));
  e.out.assign(s.begin(), s.begin() + start);
  e.out.insert(e.out.end(), out.begin(), out.end());
  e.out.insert(e.out.end(), s.begin() + start + in.size(), s.end());
  check_space(e.out);
  return e;
}

}  // namespace

DensityMatrix apply(const KrausChannel& n, const DensityMatrix& rho) {
  auto e = embedding(rho.space(), n.in_space(), n.out_space());
  const int dout = total_dim(e.out);
  Mat r = Mat::Zero(dout, dout);
  for (const auto& k : n.kraus()) {
    Mat kk = raw::embed(k, e.left, e.right);
    r.noalias() += kk * rho.data() * kk.adjoint();
  }
  return DensityMatrix(e.out, r);
}

std::vector<BranchOutput> apply(const Instrument& m, const DensityMatrix& rho) {
  auto e = embedding(rho.space(), m.in_space(), m.out_space());
  const int dout = total_dim(e.out);
  std::vector<BranchOutput> out;
  for (const auto& label : m.outcomes()) {
    Mat r = Mat::Zero(dout, dout);
    for (const auto& b : m.branches()) {
      if (b.label != label) continue;
      Mat kk = raw::embed(b.kraus, e.left, e.right);
      r.noalias() += kk * rho.data() * kk.adjoint();
    }
    out.push_back({label, r.trace().real(), e.out, r});
  }
  return out;
}

Observable DualMap::operator()(const Observable& o) const {
  if (o.space() != n_.out_space())
    throw ShapeError("dual map expects an observable on " + describe(n_.out_space()));
  return Observable(n_.in_space(), n_.adjoint_apply(o.data()));
}

DualMap dual(const KrausChannel& n) { return DualMap(n); }

namespace {
void same_space(const Space& a, const Space& b) {
  if (a != b) throw ShapeError("operands live on " + describe(a) + " and " + describe(b));
}
}  // namespace

double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  same_space(rho.space(), sigma.space());
  return raw::fidelity(rho.data(), sigma.data());
}

double purified_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  same_space(rho.space(), sigma.space());
  return std::sqrt(std::max(0.0, 1.0 - raw::fidelity_sq(rho.data(), sigma.data())));
}

double variance(const DensityMatrix& rho, const Observable& z) {
  same_space(rho.space(), z.space());
  return raw::variance(rho.data(), z.data());
}

double qfi(const DensityMatrix& rho, const Observable& x) {
  same_space(rho.space(), x.space());
  return raw::qfi(rho.data(), x.data());
}

namespace raw {

ClippedState clip_state(const Mat& rho) {
  auto e = eigh<double>(rho);
  if (e.values.size() && e.values.minCoeff() < -tol::neg_eig)
    throw StateValidityError("state has an eigenvalue below -1e-10");
  ClippedState c{e.values.cwiseMax(0.0), e.vectors, 0};
  const double s = c.values.sum();
  if (s <= 0) throw StateValidityError("state has zero trace");
  c.values /= s;
  for (Eigen::Index i = 0; i < c.values.size(); ++i)
    if (c.values(i) > tol::eig) ++c.rank;
  return c;
}

namespace {

// Fidelity squared against the pure state given by the top eigenvector of
// `c`. The other operand is used directly unless clipping changed it.
double pure_overlap(const ClippedState& c, const ClippedState& o, const Mat& other) {
  Vec psi = c.vectors.col(c.values.size() - 1);
  auto raw_eig = eigh<double>(other).values;
  if (raw_eig.minCoeff() >= 0)
    return std::max(0.0, (psi.adjoint() * other * psi)(0, 0).real() / other.trace().real());
  double s = 0;
  for (Eigen::Index k = 0; k < o.values.size(); ++k)
    s += o.values(k) * std::norm(o.vectors.col(k).dot(psi));
  return std::max(0.0, s);
}

}  // namespace

double fidelity_sq(const Mat& rho, const Mat& sigma) {
  if (rho.rows() != sigma.rows()) throw ShapeError("fidelity: dimension mismatch");
  auto a = clip_state(rho);
  auto b = clip_state(sigma);
  if (a.rank == 1) return std::min(1.0, pure_overlap(a, b, sigma));
  if (b.rank == 1) return std::min(1.0, pure_overlap(b, a, rho));
  Mat sa = a.vectors;
  for (Eigen::Index k = 0; k < a.values.size(); ++k) sa.col(k) *= std::sqrt(a.values(k));
  sa = sa * a.vectors.adjoint();
  Mat sb = b.vectors;
  for (Eigen::Index k = 0; k < b.values.size(); ++k) sb.col(k) *= std::sqrt(b.values(k));
  sb = sb * b.vectors.adjoint();
  // Trace norm of sqrt(rho) sqrt(sigma). Square roots of the eigenvalues of
  // sqrt(rho) sigma sqrt(rho) would turn 1e-17 round-off into 3e-9 errors.
  Eigen::JacobiSVD<Mat> svd(sa * sb);
  const double f = std::min(1.0, svd.singularValues().sum());
  return f * f;
}

double fidelity(const Mat& rho, const Mat& sigma) { return std::sqrt(fidelity_sq(rho, sigma)); }

double expectation(const Mat& rho, const Mat& z) { return (rho * z).trace().real(); }

double variance(const Mat& rho, const Mat& z) {
  const double m = expectation(rho, z);
  return std::max(0.0, expectation(rho, z * z) - m * m);
}

double qfi(const Mat& rho, const Mat& x) {
  if (rho.rows() != x.rows()) throw ShapeError("qfi: dimension mismatch");
  auto c = clip_state(rho);
  Mat xe = c.vectors.adjoint() * x * c.vectors;
  double f = 0;
  const Eigen::Index d = c.values.size();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = c.values(i) + c.values(j);
      if (s <= tol::eig) continue;
      const double diff = c.values(i) - c.values(j);
      f += 2.0 * diff * diff / s * std::norm(xe(i, j));
    }
  return f;
}

Mat embed(const Mat& op, int left, int right) {
  if (left == 1 && right == 1) return op;
  Mat r = op;
  if (left > 1) r = linalg::kron<double>(Mat::Identity(left, left), r);
  if (right > 1) r = linalg::kron<double>(r, Mat::Identity(right, right));
  return r;
}

Mat conj_exp(const Mat& x, const Mat& rho, double t) {
  Mat u = linalg::expi_herm<double>(x, t);
  return u * rho * u.adjoint();
}

}  // namespace raw
}  // namespace irrevkit
