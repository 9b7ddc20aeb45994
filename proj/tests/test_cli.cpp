#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pqc/cli.hpp"
#include "pqc/io.hpp"

using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = pqc::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pqc_test_" + name);
}

}  // namespace

TEST_CASE("bound") {
  const auto r = run({"bound", "--n", "2", "--m", "3", "--d", "2"});
  CHECK(r.code == 0);
  CHECK(r.out == "2250\n");
  CHECK(run({"bound", "--n", "2", "--m", "3", "--d", "1", "--r", "4"}).out == "27\n");
  CHECK(run({"bound", "--n", "0", "--m", "3", "--d", "2"}).code == 2);
}

TEST_CASE("usage errors exit 2") {
  auto r = run({"bound", "--n", "2", "--m", "3", "--d", "2", "--bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"scan", "--problem", "cusp"}).code == 2);
  CHECK(run({"mfcq", "--problem", "nope", "--point", "0,0"}).code == 2);
  CHECK(run({"mfcq", "--file", "/nonexistent.json", "--point", "0,0"}).code == 2);
}

TEST_CASE("mfcq point checks") {
  auto r = run({"mfcq", "--problem", "cusp", "--alpha", "0", "--point", "0,0"});
  CHECK(r.code == 1);
  CHECK(r.out.find("verdict: Fails") != std::string::npos);
  r = run({"mfcq", "--problem", "cusp", "--alpha", "0.1", "--point", "0.4641588833612779,0"});
  CHECK(r.code == 0);
  CHECK(r.out.find("verdict: Holds") != std::string::npos);
  CHECK(run({"mfcq", "--problem", "cusp", "--alpha", "0", "--point", "1,0"}).code == 2);
  CHECK(run({"mfcq", "--problem", "interval_pair", "--mu", "0,0", "--point", "1"}).code == 1);
}

TEST_CASE("mfcq sweep") {
  const auto r = run({"mfcq", "--problem", "cusp", "--alpha", "0.1", "--samples", "200", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("seed 3") != std::string::npos);
  CHECK(r.out.find("fails 0, degenerate 0") != std::string::npos);
  CHECK(run({"mfcq", "--problem", "ball_box", "--n", "2", "--a", "0.4,0.2", "--alpha", "1", "--samples", "10"}).code == 1);
}

TEST_CASE("scan writes a report") {
  const auto path = tmp("scan.json");
  const auto r = run({"scan", "--problem", "ball_box", "--n", "2", "--a", "0.4,0.2", "--window", "0,8", "--starts",
                      "500", "--seed", "7", "--out", path.string()});
  CHECK(r.code == 0);
  const auto doc = json::parse(slurp(path));
  CHECK(doc["singular_values"].size() == 8);
  CHECK(doc["seed"] == 7);
  CHECK(r.out.find("singular values: 8") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("output is deterministic") {
  const std::vector<std::string> args{"scan", "--problem", "cusp", "--window", "-0.5,0.5", "--starts", "50",
                                      "--format", "json", "--out", tmp("a.json").string()};
  auto other = args;
  other.back() = tmp("b.json").string();
  other.push_back("--workers");
  other.push_back("1");
  CHECK(run(args).code == 0);
  CHECK(run(other).code == 0);
  CHECK(slurp(tmp("a.json")) == slurp(tmp("b.json")));
  std::filesystem::remove(tmp("a.json"));
  std::filesystem::remove(tmp("b.json"));
}

TEST_CASE("catalog") {
  auto r = run({"catalog"});
  CHECK(r.code == 0);
  CHECK(r.out.find("grid_boxes") != std::string::npos);
  const auto path = tmp("cusp.json");
  r = run({"catalog", "--problem", "cusp", "--out", path.string()});
  CHECK(r.code == 0);
  CHECK(pqc::parse_problem_file(path.string()) == pqc::catalog("cusp"));
  r = run({"mfcq", "--file", path.string(), "--alpha", "0", "--point", "0,0"});
  CHECK(r.code == 1);
  std::filesystem::remove(path);
}

TEST_CASE("esqm and homotopy") {
  auto r = run({"esqm", "--problem", "ball_box", "--n", "2", "--a", "0.4,0.2", "--alpha", "6.8", "--linear", "1,1",
                "--x0", "-0.5,-0.9"});
  CHECK(r.code == 0);
  CHECK(r.out.find("status converged") != std::string::npos);

  const auto csv = tmp("trace.csv");
  r = run({"esqm", "--problem", "cusp_boxed", "--alpha", "0.1", "--linear", "-1,0", "--x0", "-0.5,0", "--out",
           csv.string()});
  CHECK(r.code == 0);
  CHECK(slurp(csv).rfind("k,x1,x2,s,beta,kkt_residual,merit", 0) == 0);
  std::filesystem::remove(csv);

  r = run({"homotopy", "--problem", "cusp_boxed", "--linear", "-1,0", "--x0", "-0.5,0", "--schedule",
           "0.1,0.01,0.001,0.0001"});
  CHECK(r.code == 0);
  CHECK(run({"homotopy", "--problem", "cusp_boxed", "--linear", "-1,0", "--schedule", "0.01,0.1"}).code == 2);
  CHECK(run({"homotopy", "--problem", "ball_box", "--n", "2", "--a", "0.4,0.2", "--linear", "1,1", "--x0", "-1,-1",
             "--max-iter", "200", "--schedule", "4"})
            .code == 1);
}
