#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "irrevkit/io.hpp"
#include "support.hpp"

using namespace irrevkit;
using namespace support;
using io::json;
using io::Node;

namespace {
std::string pointer_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.pointer;
  }
  return "<no error>";
}
}  // namespace

TEST_CASE("matrices") {
  json j = json::parse(R"([[1, [0, -1]], [[0, 1], 2.5]])");
  Mat m = io::matrix(Node(j, "/m"));
  CHECK(m(0, 1) == cplx(0, -1));
  CHECK(m(1, 1) == cplx(2.5, 0));
  CHECK(max_abs(io::matrix(Node(io::to_json(m), "")) - m) == 0);

  json ragged = json::parse(R"([[1, 0], [0]])");
  CHECK(pointer_of([&] { io::matrix(Node(ragged, "/m")); }) == "/m/1");
  json bad = json::parse(R"([[1, [0, 1, 2]], [0, 1]])");
  CHECK(pointer_of([&] { io::matrix(Node(bad, "/m")); }) == "/m/0/1");
}

TEST_CASE("operators and states") {
  json p = json::parse(R"({"pauli": [{"coeff": 0.5, "string": "XZ"}, {"string": "II"}]})");
  Mat m = io::operator_matrix(Node(p, "/h"), 4);
  CHECK(max_abs(m - 0.5 * linalg::pauli_string("XZ") - Mat::Identity(4, 4)) < 1e-15);
  CHECK(pointer_of([&] { io::operator_matrix(Node(p, "/h"), 8); }) == "/h/pauli/0/string");

  json pure = json::parse(R"({"pure": [1, 1]})");
  CHECK(max_abs(io::state(Node(pure, "/s"), kS).data() - proj(plus())) < 1e-15);
  CHECK(max_abs(io::state(Node(json("maximally_mixed"), "/s"), kS).data() - Mat::Identity(2, 2) / 2.0) == 0);
  json neg = json::parse(R"([[1.5, 0], [0, -0.5]])");
  CHECK(pointer_of([&] { io::state(Node(neg, "/s"), kS); }) == "/s");
}

TEST_CASE("instruments and implementations round-trip") {
  Instrument m = z_projective();
  Instrument back = io::instrument(Node(io::to_json(m), ""));
  CHECK(back.outcomes() == m.outcomes());
  CHECK(back.out_space() == m.out_space());

  json missing = io::to_json(m);
  missing["branches"][1].erase("kraus");
  CHECK(pointer_of([&] { io::instrument(Node(missing, "/payload/instrument")); }) ==
        "/payload/instrument/branches/1/kraus");
  json dup = io::to_json(m);
  dup["in"] = json::parse(R"([{"name": "S", "dim": 2}, {"name": "S", "dim": 1}])");
  CHECK(pointer_of([&] { io::instrument(Node(dup, "")); }) == "/in");
}

TEST_CASE("configs expand their defaults") {
  json ex = json::parse(R"({"method": "analytic", "optimizer": {"restarts": 2}})");
  Node on(ex["optimizer"], "/e/optimizer");
  OptimizerConfig oc = io::optimizer(&on, 9);
  CHECK(oc.seed == 9);
  CHECK(oc.restarts == 2);
  Node en(ex, "/e");
  ExtractionConfig c = io::extraction(&en, oc);
  CHECK(c.method == ExtractionMethod::Analytic);
  json out = io::to_json(c);
  CHECK(out["theta_grid"].size() == 4);
  CHECK(out["optimizer"]["max_iters"] == 2000);

  json bad = json::parse(R"({"theta_grid": []})");
  Node bn(bad, "/e");
  CHECK(pointer_of([&] { io::extraction(&bn, oc); }) == "/e/theta_grid");
  json wrong = json::parse(R"({"method": "spline"})");
  Node wn(wrong, "/e");
  CHECK(pointer_of([&] { io::extraction(&wn, oc); }) == "/e/method");
}
