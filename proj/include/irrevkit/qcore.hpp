#pragma once

#include "irrevkit/errors.hpp"
#include "irrevkit/linalg.hpp"

#include <string>
#include <vector>

namespace irrevkit {

namespace tol {
inline constexpr double herm = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double neg_eig = 1e-10;
inline constexpr double tp = 1e-9;
inline constexpr double choi = 1e-9;
inline constexpr double ensemble = 1e-12;
inline constexpr double eig = 1e-12;
inline constexpr double prob = 1e-12;
}  // namespace tol

struct HilbertLabel {
  std::string name;
  int dim = 1;
  bool operator==(const HilbertLabel&) const = default;
};

using Space = std::vector<HilbertLabel>;

int total_dim(const Space& s);
std::vector<int> dims_of(const Space& s);
std::string describe(const Space& s);
// Throws CompositeSpaceError on repeated names or non-positive dims.
void check_space(const Space& s);
Space concat(const Space& a, const Space& b);
Space relabel(const Space& s, const std::vector<std::string>& names);

class DensityMatrix {
 public:
  DensityMatrix(Space space, const Mat& data);
  static DensityMatrix pure(Space space, const Vec& psi);
  static DensityMatrix maximally_mixed(Space space);

  const Space& space() const { return space_; }
  const Mat& data() const { return data_; }
  int dim() const { return int(data_.rows()); }

 private:
  Space space_;
  Mat data_;
};

class Observable {
 public:
  Observable(Space space, const Mat& data);
  const Space& space() const { return space_; }
  const Mat& data() const { return data_; }
  int dim() const { return int(data_.rows()); }

 private:
  Space space_;
  Mat data_;
};

enum class TraceCondition { Preserving, NonIncreasing, Unchecked };

class KrausChannel {
 public:
  KrausChannel(Space in, Space out, std::vector<Mat> kraus,
               TraceCondition cond = TraceCondition::Preserving);
  static KrausChannel identity(const Space& s);
  static KrausChannel unitary(const Space& s, const Mat& u);

  const Space& in_space() const { return in_; }
  const Space& out_space() const { return out_; }
  const std::vector<Mat>& kraus() const { return kraus_; }
  int in_dim() const { return total_dim(in_); }
  int out_dim() const { return total_dim(out_); }

  // Action on an operator of the full input space.
  Mat operator()(const Mat& x) const;
  // Heisenberg-picture action: sum_i K_i^dag o K_i.
  Mat adjoint_apply(const Mat& o) const;
  Mat choi() const;
  // max-abs of sum K^dag K - I.
  double tp_gap() const;
  double choi_min_eig() const;
  // Equivalent channel with at most in_dim*out_dim Kraus operators.
  KrausChannel minimal() const;
  KrausChannel relabeled(Space in, Space out) const;

 private:
  Space in_, out_;
  std::vector<Mat> kraus_;
};

KrausChannel compose(const KrausChannel& second, const KrausChannel& first);

struct Branch {
  std::string label;
  Mat kraus;
};

class Instrument {
 public:
  Instrument(Space in, Space out, std::vector<Branch> branches);

  const Space& in_space() const { return in_; }
  const Space& out_space() const { return out_; }
  const std::vector<Branch>& branches() const { return branches_; }
  // Distinct outcome labels in order of first appearance.
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  int outcome_index(const std::string& label) const;
  // POVM element of an outcome: sum of M^dag M over its branches.
  Mat effect(const std::string& label) const;
  // The outcome-forgetting channel.
  KrausChannel channel() const;

 private:
  Space in_, out_;
  std::vector<Branch> branches_;
  std::vector<std::string> outcomes_;
};

struct EnsembleEntry {
  double p;
  DensityMatrix rho;
};

class TestEnsemble {
 public:
  explicit TestEnsemble(std::vector<EnsembleEntry> entries);
  // {(1/2, |+><+|), (1/2, |-><-|)} on a qubit.
  static TestEnsemble plus_minus(const std::string& label = "Q");

  const std::vector<EnsembleEntry>& entries() const { return entries_; }
  const Space& space() const { return entries_.front().rho.space(); }
  DensityMatrix average() const;

 private:
  std::vector<EnsembleEntry> entries_;
};

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
Observable tensor(const Observable& a, const Observable& b);
KrausChannel tensor(const KrausChannel& a, const KrausChannel& b);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

DensityMatrix apply(const KrausChannel& n, const DensityMatrix& rho);

struct BranchOutput {
  std::string label;
  double probability;
  Space space;
  Mat state;  // sub-normalized
};
std::vector<BranchOutput> apply(const Instrument& m, const DensityMatrix& rho);

class DualMap {
 public:
  explicit DualMap(KrausChannel n) : n_(std::move(n)) {}
  Observable operator()(const Observable& o) const;

 private:
  KrausChannel n_;
};
DualMap dual(const KrausChannel& n);

double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
double purified_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double variance(const DensityMatrix& rho, const Observable& z);
double qfi(const DensityMatrix& rho, const Observable& x);

// Unlabeled kernels shared by the higher modules.
namespace raw {
struct ClippedState {
  RVec values;  // clipped at zero, renormalized
  Mat vectors;
  int rank;
};
// Throws StateValidityError when an eigenvalue is below -neg_eig.
ClippedState clip_state(const Mat& rho);
double fidelity(const Mat& rho, const Mat& sigma);
double fidelity_sq(const Mat& rho, const Mat& sigma);
double expectation(const Mat& rho, const Mat& z);
double variance(const Mat& rho, const Mat& z);
double qfi(const Mat& rho, const Mat& x);
// I_left (x) op (x) I_right.
Mat embed(const Mat& op, int left, int right);
Mat conj_exp(const Mat& x, const Mat& rho, double t);
}  // namespace raw

}  // namespace irrevkit
