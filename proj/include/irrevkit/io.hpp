#pragma once

#include "irrevkit/comb.hpp"
#include "irrevkit/irrev.hpp"
#include "irrevkit/qcore.hpp"
#include "irrevkit/way.hpp"

#include <json.hpp>

#include <string>

namespace irrevkit::io {

using json = nlohmann::json;

// Field access that reports failures as SchemaError with a JSON pointer.
class Node {
 public:
  Node(const json& j, std::string ptr) : j_(&j), ptr_(std::move(ptr)) {}

  const json& raw() const { return *j_; }
  const std::string& pointer() const { return ptr_; }
  bool has(const std::string& key) const;
  Node at(const std::string& key) const;
  Node at(std::size_t i) const;
  std::size_t size() const;

  double number() const;
  int integer() const;
  std::uint64_t uint64() const;
  bool boolean() const;
  std::string string() const;
  const json& array() const;
  const json& object() const;

  [[noreturn]] void fail(const std::string& msg) const;

 private:
  const json* j_;
  std::string ptr_;
};

json to_json(const Mat& m);
Mat matrix(const Node& n);
Space space(const Node& n);
json to_json(const Space& s);

// Dense matrix or {"pauli": [{"coeff": c, "string": "XZ"}, ...]}.
Mat operator_matrix(const Node& n, int dim);
// Dense matrix, {"pure": [...]}, or "maximally_mixed".
DensityMatrix state(const Node& n, const Space& s);
Instrument instrument(const Node& n);
KrausChannel channel(const Node& n);
TestEnsemble ensemble(const Node& n);
OutcomeFunction outcome_function(const Node& n);

OptimizerConfig optimizer(const Node* n, std::uint64_t default_seed);
json to_json(const OptimizerConfig& c);
ExtractionConfig extraction(const Node* n, const OptimizerConfig& opt);
json to_json(const ExtractionConfig& c);

Implementation implementation(const Node& n);
json to_json(const Implementation& impl);

json to_json(const IepResult& r);
json to_json(const DeltaReport& r);
json to_json(const WayReport& r);
json to_json(const Instrument& m);
json to_json(const KrausChannel& k);
json state_json(const Mat& rho);

}  // namespace irrevkit::io
