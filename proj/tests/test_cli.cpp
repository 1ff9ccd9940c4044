#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"

using namespace qg;
using qgtest::data_path;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> tsv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("spectrum subcommand lists the Neumann interval eigenvalues") {
  const auto r = run({"spectrum", data_path("interval_pi.graph"), "--lmin", "-1", "--lmax", "10"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# schema_version\t1") == 0);
  const auto rows = tsv_rows(r.out);
  REQUIRE(rows.size() == 4);
  const double expect[] = {0.0, 1.0, 4.0, 9.0};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i][0] == "edge");
    CHECK(std::abs(std::stod(rows[i][1]) - expect[i]) < 1e-9);
    CHECK(rows[i][2] == "1");
  }
}

TEST_CASE("spectrum oracles can be cross-run from the CLI") {
  const auto r = run({"spectrum", data_path("interval_pi.graph"), "--lmin", "0.5", "--lmax", "10",
                      "--oracle", "all", "--count", "4"});
  REQUIRE(r.code == 0);
  const auto rows = tsv_rows(r.out);
  int edge = 0, vertex = 0, fem = 0;
  for (const auto& row : rows) {
    if (row[0] == "edge") ++edge;
    if (row[0] == "vertex") ++vertex;
    if (row[0] == "fem") ++fem;
  }
  CHECK(edge == 3);
  CHECK(vertex == 3);
  CHECK(fem == 3);
}

TEST_CASE("trace subcommand reports vanishing residuals for the reflection pair") {
  const auto r = run({"trace", data_path("interval_unit.graph"), "--b1", data_path("ab.cpl"), "--b2",
                      data_path("ba.cpl"), "--orders", "6"});
  REQUIRE(r.code == 0);
  const auto rows = tsv_rows(r.out);
  int checked = 0;
  for (const auto& row : rows) {
    if (row.size() == 2 && row[0] != "gate") {
      CHECK(std::abs(std::stod(row[1])) < 1e-12);
      ++checked;
    }
    if (row[0] == "gate") CHECK(row[1] == "inconclusive");
  }
  CHECK(checked == 6);
}

TEST_CASE("check subcommand flags the lasso loop on stderr") {
  const auto r = run({"check", data_path("lasso.graph")});
  CHECK(r.code == 0);
  CHECK(r.err.find("NOT simple") != std::string::npos);
  CHECK(r.err.find("e5") != std::string::npos);
  CHECK(r.err.find("may miss spectrum") != std::string::npos);
  CHECK(r.out.find("simplicity\tnot_simple") != std::string::npos);

  const auto quiet = run({"check", data_path("lasso.graph"), "--quiet"});
  CHECK(quiet.code == 0);
  CHECK(quiet.err.empty());
}

TEST_CASE("json output is schema-versioned and parseable") {
  const auto r = run({"check", data_path("star3.graph"), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("valid") == true);
  CHECK(j.at("simplicity").at("verdict") == "simple");
  CHECK(j.at("delta_prime").at("zero_eigenvalue_possible") == false);

  const auto m = run({"mfun", data_path("star3.graph"), "--lambda", "2.5,1.0", "--format", "json"});
  REQUIRE(m.code == 0);
  const auto jm = nlohmann::json::parse(m.out);
  CHECK(jm.at("entries").size() == 16);
}

TEST_CASE("recover subcommand round trips and reports no-match") {
  const auto ok = run({"recover", data_path("interval_pi.graph"), "--target",
                       data_path("interval_pi_neumann.target"), "--scalar", "--lo", "-1", "--hi", "2"});
  REQUIRE(ok.code == 0);
  const auto rows = tsv_rows(ok.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][0] == "alpha");
  CHECK(std::abs(std::stod(rows[0][1])) < 1e-6);

  const auto miss = run({"recover", data_path("interval_pi.graph"), "--target",
                         data_path("interval_pi_neumann.target"), "--scalar", "--lo", "3", "--hi", "5"});
  CHECK(miss.code == 4);
  CHECK(miss.err.find("error:") != std::string::npos);
}

TEST_CASE("exit codes distinguish the failure classes") {
  SUBCASE("usage errors") {
    CHECK(run({"bogus"}).code == 1);
    CHECK(run({"spectrum", data_path("star3.graph")}).code == 1);  // missing window
    CHECK(run({"recover", data_path("interval_pi.graph"), "--target",
               data_path("interval_pi_neumann.target"), "--lo", "0", "--hi", "1"})
              .code == 1);  // neither --scalar nor --vertex
  }
  SUBCASE("invalid input") {
    CHECK(run({"check", data_path("does_not_exist.graph")}).code == 2);
    CHECK(run({"mfun", data_path("ab.cpl"), "--lambda", "1"}).code == 2);  // not a graph document
  }
  SUBCASE("numerical failure") {
    // lambda = 1 on the interval of length pi sits on the Dirichlet grid
    CHECK(run({"mfun", data_path("interval_pi.graph"), "--lambda", "1"}).code == 3);
  }
  SUBCASE("help exits cleanly") { CHECK(run({"--help"}).code == 0); }
}

TEST_CASE("output is deterministic across runs") {
  const std::vector<std::string> args = {"spectrum", data_path("triangle.graph"), "--lmin", "-1",
                                         "--lmax", "30", "--format", "json"};
  const auto a = run(args);
  const auto b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);

  const auto j1 = run({"spectrum", data_path("triangle.graph"), "--lmin", "-1", "--lmax", "30", "--jobs", "4"});
  const auto j2 = run({"spectrum", data_path("triangle.graph"), "--lmin", "-1", "--lmax", "30"});
  CHECK(j1.out == j2.out);
}

TEST_CASE("graph documents round trip through serialization") {
  std::ifstream in(data_path("example4.graph"));
  std::stringstream ss;
  ss << in.rdbuf();
  const GraphDocument doc = parse_graph_document(ss.str());
  const GraphDocument again = parse_graph_document(serialize_graph_document(doc));
  CHECK(again.graph.vertex_count == doc.graph.vertex_count);
  REQUIRE(again.graph.edges.size() == doc.graph.edges.size());
  for (std::size_t t = 0; t < doc.graph.edges.size(); ++t) {
    CHECK(again.graph.edges[t].id == doc.graph.edges[t].id);
    CHECK(again.graph.edges[t].tail == doc.graph.edges[t].tail);
    CHECK(again.graph.edges[t].head == doc.graph.edges[t].head);
    CHECK(again.graph.edges[t].length.coeff == doc.graph.edges[t].length.coeff);
    CHECK(again.graph.edges[t].length.numeric == doc.graph.edges[t].length.numeric);
  }
  CHECK(again.coupling.type == doc.coupling.type);
  CHECK((again.coupling.alpha - doc.coupling.alpha).cwiseAbs().maxCoeff() == 0.0);
  // serialization is stable
  CHECK(serialize_graph_document(again) == serialize_graph_document(doc));
}

TEST_CASE("document parser rejects malformed input") {
  CHECK_THROWS_AS(parse_graph_document("not json"), InvalidGraphError);
  CHECK_THROWS_AS(parse_graph_document(R"({"vertices": ["A"]})"), InvalidGraphError);
  CHECK_THROWS_AS(parse_graph_document(
                      R"({"vertices": ["A", "A"], "edges": []})"),
                  InvalidGraphError);
  CHECK_THROWS_AS(parse_graph_document(
                      R"({"symbols": {"u": -1.0}, "vertices": ["A", "B"],
                          "edges": [{"id": "e", "from": "A", "to": "B",
                                     "length": {"num": 1, "den": 1, "symbol": "u"}}]})"),
                  InvalidGraphError);
  CHECK_THROWS_AS(parse_graph_document(
                      R"({"vertices": ["A", "B"],
                          "edges": [{"id": "e", "from": "A", "to": "C",
                                     "length": {"num": 1, "den": 1, "symbol": "u"}}]})"),
                  InvalidGraphError);
}
