#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kWork = IRREVKIT_CLI_WORKDIR;

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + IRREVKIT_CLI + "\" " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

fs::path corpus() {
  static const fs::path dir = [] {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const fs::path d = kWork / "corpus";
    REQUIRE(cli("fixtures --dir \"" + d.string() + "\"") == 0);
    return d;
  }();
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("epsilon scenario reports 2") {
  const fs::path d = corpus();
  REQUIRE(cli("run " + q(d / "epsilon_qubit.json")) == 0);
  json r = load(d / "epsilon_qubit.report.json");
  CHECK(std::abs(r["result"]["epsilon_sq"].get<double>() - 2.0) < 1e-6);
  CHECK(r["pass"] == true);
  CHECK(r["config"]["extraction"]["fit_terms"] == 3);
  CHECK(r["result"]["iep"]["theta_grid"].size() == 4);
  CHECK(fs::exists(d / "epsilon_qubit.report.json.meta.json"));
}

TEST_CASE("way-error scenario with a conserving implementation passes") {
  const fs::path d = corpus();
  REQUIRE(cli("run " + q(d / "way_error_explicit.json") + " " + q(d / "way_error.json")) == 0);
  for (const char* f : {"way_error_explicit.report.json", "way_error.report.json"}) {
    json r = load(d / f);
    CHECK(r["pass"] == true);
    CHECK(r["result"]["slack"].get<double>() >= 0);
  }
}

TEST_CASE("the whole corpus runs clean") {
  const fs::path d = corpus();
  std::string files;
  for (const auto& e : fs::directory_iterator(d))
    if (e.path().extension() == ".json" && e.path().string().find(".report") == std::string::npos)
      files += " " + q(e.path());
  CHECK(cli("validate" + files) == 0);
  CHECK(cli("run --output-dir " + q(kWork / "all") + files) == 0);
}

TEST_CASE("exit codes") {
  const fs::path d = corpus();
  CHECK(cli("run " + q(d / "negative" / "way_error_violation.json")) == 4);
  json r = load(d / "negative" / "way_error_violation.report.json");
  CHECK(r["pass"] == false);
  CHECK(r["status"] == "violation");

  CHECK(cli("run " + q(d / "negative" / "missing_field.json")) == 2);
  CHECK(cli("validate " + q(d / "negative" / "missing_field.json")) == 2);

  const fs::path bad = kWork / "malformed.json";
  std::ofstream(bad) << "{\"schema\": \"irrevkit/1\", \"kind\": ";
  CHECK(cli("run " + q(bad)) == 2);

  const fs::path wrong = kWork / "wrong_schema.json";
  std::ofstream(wrong) << R"({"schema": "irrevkit/0", "kind": "otoc", "payload": {}})";
  CHECK(cli("run " + q(wrong)) == 2);

  // A non-Hermitian W is rejected at its field.
  json o = load(d / "otoc_qubit.json");
  o["payload"]["w"] = json::parse(R"([[0, 1], [0, 0]])");
  const fs::path nh = kWork / "non_hermitian.json";
  std::ofstream(nh) << o.dump();
  CHECK(cli("run " + q(nh)) == 2);

  // One failing scenario decides the batch exit code.
  CHECK(cli("run " + q(d / "otoc_qubit.json") + " " + q(d / "negative" / "way_error_violation.json")) == 4);
}

TEST_CASE("extraction failure exits 3") {
  const fs::path d = corpus();
  json e = load(d / "epsilon_qubit.json");
  e["payload"]["extraction"] = {{"fit_terms", 1}, {"tol", 1e-15}};
  e["output"] = "strict.report.json";
  const fs::path f = kWork / "strict.json";
  std::ofstream(f) << e.dump();
  CHECK(cli("run " + q(f)) == 3);
  CHECK(load(kWork / "strict.report.json")["status"] == "extraction_failed");
}

TEST_CASE("tau sweep on the chain") {
  const fs::path d = corpus();
  const fs::path out = kWork / "tau.csv";
  REQUIRE(cli("sweep " + q(d / "otoc_chain.json") + " --param tau --grid 0,0.5,1.0 --out " + q(out)) == 0);
  CHECK(slurp(out).rfind("tau,C_T,C_iep,gap\n", 0) == 0);
  auto rows = csv_rows(out);
  REQUIRE(rows.size() == 3);
  // W and V sit on different sites, so they commute at tau = 0.
  CHECK(std::abs(rows[0][1]) < 1e-12);
  CHECK(std::abs(rows[0][2] - rows[0][1]) < 1e-6);
  for (const auto& r : rows) CHECK(std::abs(r[3]) < 1e-6);

  REQUIRE(cli("run " + q(d / "otoc_chain.json")) == 0);
  json rep = load(d / "otoc_chain.report.json");
  CHECK(std::abs(rows[2][1] - rep["result"]["c_direct"].get<double>()) < 1e-12);
}

TEST_CASE("theta sweep reproduces the extraction grid") {
  const fs::path d = corpus();
  REQUIRE(cli("run " + q(d / "epsilon_qubit.json")) == 0);
  json grid = load(d / "epsilon_qubit.report.json")["result"]["iep"]["theta_grid"];
  const fs::path out = kWork / "theta.csv";
  REQUIRE(cli("sweep " + q(d / "epsilon_qubit.json") + " --param theta --grid 0.01,0.005,0.0025,0.00125 --out " +
              q(out)) == 0);
  auto rows = csv_rows(out);
  REQUIRE(rows.size() == grid.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i][0] == grid[i]["theta"].get<double>());
    CHECK(rows[i][1] == doctest::Approx(grid[i]["delta2"].get<double>()).epsilon(1e-14));
  }
}

TEST_CASE("sweep input errors exit 2") {
  const fs::path d = corpus();
  CHECK(cli("sweep " + q(d / "otoc_chain.json") + " --param tau --grid \"\"") == 2);
  CHECK(cli("sweep " + q(d / "otoc_chain.json") + " --param tau --grid 0,abc") == 2);
  CHECK(cli("sweep " + q(d / "otoc_chain.json") + " --param gamma --grid 0") == 2);
  CHECK(cli("sweep " + q(d / "epsilon_qubit.json") + " --param tau --grid 0") == 2);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  const fs::path d = corpus();
  const std::string files = q(d / "epsilon_qubit_optimize.json") + " " + q(d / "way_disturbance.json") + " " +
                            q(d / "otoc_cp.json");
  REQUIRE(cli("run --output-dir " + q(kWork / "r1") + " " + files) == 0);
  REQUIRE(cli("run --output-dir " + q(kWork / "r2") + " " + files) == 0);
  for (const char* f : {"epsilon_qubit_optimize.report.json", "way_disturbance.report.json", "otoc_cp.report.json"})
    CHECK(slurp(kWork / "r1" / f) == slurp(kWork / "r2" / f));
}
