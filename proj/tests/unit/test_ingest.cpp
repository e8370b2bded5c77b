#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bdn/error.hpp"
#include "bdn/ingest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace bdn;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io;
}

double num(const Cell& c) { return std::get<double>(c); }

}  // namespace

TEST_CASE("cells") {
  CHECK(is_missing(parse_cell("")));
  CHECK(is_missing(parse_cell("NA")));
  CHECK(num(parse_cell("87.6")) == 87.6);
  CHECK(std::get<std::string>(parse_cell("Cook County")) == "Cook County");
  CHECK(std::holds_alternative<std::string>(parse_cell("12abc")));
  CHECK(cell_text(Cell{0.1}) == "0.1");
}

TEST_CASE("csv with one NA cell") {
  const auto t = parse_csv("id,a,b\n1,2,x\n2,NA,y\n3,4,z\n", "id");
  CHECK(t.rows() == 3);
  CHECK(t.missing_count() == 1);
  CHECK(t.is_numeric(t.column_index("a")));
  CHECK_FALSE(t.is_numeric(t.column_index("b")));
}

TEST_CASE("csv quoting, CRLF, BOM and blank lines") {
  const auto t = parse_csv("\xEF\xBB\xBFid,name\r\n1,\"Smith, \"\"Jr\"\"\"\r\n\r\n2,\"multi\nline\"\r\n");
  REQUIRE(t.rows() == 2);
  CHECK(t.columns()[0] == "id");
  CHECK(std::get<std::string>(t.at(0, 1)) == "Smith, \"Jr\"");
  CHECK(std::get<std::string>(t.at(1, 1)) == "multi\nline");
  CHECK(parse_csv(to_csv(t)) == t);
}

TEST_CASE("header-only csv") {
  const auto t = parse_csv("id,a\n", "id");
  CHECK(t.rows() == 0);
  CHECK(t.cols() == 2);
}

TEST_CASE("csv errors") {
  CHECK(code_of([] { parse_csv("id,a\n1,2\n1,3\n", "id"); }) == ErrorCode::merge_key);
  CHECK(code_of([] { parse_csv("id,a\n1,2\n,3\n", "id"); }) == ErrorCode::merge_key);
  try {
    parse_csv("id,a\n1,2\n2,3,4\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  CHECK(code_of([] { parse_csv("id,a\n1,2\n", "county"); }) == ErrorCode::schema);
  CHECK(code_of([] { load_csv("/nonexistent/file.csv"); }) == ErrorCode::io);
}

TEST_CASE("load_csv reads a file") {
  const auto path = std::filesystem::temp_directory_path() / "bdn_ingest_test.csv";
  std::ofstream(path) << "county,x\nA,1\nB,2\n";
  const auto t = load_csv(path, "county");
  CHECK(t.rows() == 2);
  CHECK(t.key_column() == "county");
  std::filesystem::remove(path);
}

TEST_CASE("merge") {
  const auto left = parse_csv("id,a,v\n1,10,x\n2,20,y\n3,30,z\n", "id");
  const auto right = parse_csv("id,b,v\n2,200,p\n3,300,q\n4,400,r\n", "id");
  const auto m = merge(left, right, "id");
  CHECK(m.rows() == 2);
  CHECK(m.columns() == std::vector<std::string>{"id", "a", "v_x", "b", "v_y"});
  CHECK(num(m.at(0, 0)) == 2);
  CHECK(num(m.at(1, 3)) == 300);
  CHECK(std::get<std::string>(m.at(1, 4)) == "q");

  const auto disjoint = parse_csv("id,c\n7,1\n", "id");
  CHECK(merge(left, disjoint, "id").rows() == 0);
  CHECK(code_of([&] { merge(left, parse_csv("k,c\n1,1\n"), "id"); }) == ErrorCode::schema);
}

TEST_CASE("select keeps the key in front") {
  const auto t = parse_csv("a,id,b,c\n1,k1,2,3\n4,k2,5,6\n", "id");
  const auto s = t.select({"c", "a"});
  CHECK(s.columns() == std::vector<std::string>{"id", "c", "a"});
  CHECK(s.key_column() == "id");
  CHECK(num(s.at(1, 1)) == 6);
  CHECK(t.select({"id", "b"}).columns() == std::vector<std::string>{"id", "b"});
  CHECK(code_of([&] { t.select({"nope"}); }) == ErrorCode::schema);
  CHECK(code_of([&] { t.select({"a", "a"}); }) == ErrorCode::schema);
  // Projecting the right table first avoids suffixed duplicates.
  const auto right = parse_csv("id,b,name\nk2,9,x\n", "id");
  CHECK(merge(t, right.select({"name"}), "id").columns() == std::vector<std::string>{"a", "id", "b", "c", "name"});
}

TEST_CASE("derive") {
  const auto t = parse_csv(
      "id,m,f,q1,q2,q3,q4,w1,w2,w3,w4,s1,s2,pop,total,label\n"
      "1,87.6,78.6,80,80,80,80,1,2,3,4,1,3,25,100,a\n"
      "2,85,NA,70,80,90,100,0,0,0,1,2,2,0,0,b\n",
      "id");
  const auto spec = derived_spec_from_json(json::parse(R"([
    {"op": "gap", "name": "gap", "args": {"minuend": "m", "subtrahend": "f"}},
    {"op": "pooled_mean", "name": "pm", "args": {"columns": ["q1", "q2", "q3", "q4"], "weights": ["w1", "w2", "w3", "w4"]}},
    {"op": "pooled_sd", "name": "psd", "args": {"columns": ["s1", "s2"]}},
    {"op": "proportion", "name": "prop", "args": {"column": "pop", "total": "total"}}])"));
  CHECK(derived_spec_to_json(spec) == derived_spec_to_json(derived_spec_from_json(derived_spec_to_json(spec))));
  const auto d = derive(t, spec);
  CHECK(d.cols() == t.cols() + spec.size());
  for (std::size_t c = 0; c < t.cols(); ++c) CHECK(d.column(c) == t.column(c));
  CHECK(num(d.at(0, d.column_index("gap"))) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(is_missing(d.at(1, d.column_index("gap"))));
  CHECK(num(d.at(0, d.column_index("pm"))) == 80.0);
  CHECK(num(d.at(1, d.column_index("pm"))) == 100.0);
  // Population convention: sqrt(((1-2)^2 + (3-2)^2) / 2) = 1.
  CHECK(num(d.at(0, d.column_index("psd"))) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(num(d.at(1, d.column_index("psd"))) == 0.0);
  CHECK(num(d.at(0, d.column_index("prop"))) == 0.25);
  CHECK(is_missing(d.at(1, d.column_index("prop"))));

  CHECK(code_of([&] {
          derive(t, derived_spec_from_json(json::parse(R"([{"op": "gap", "name": "g", "args": {"minuend": "label", "subtrahend": "m"}}])")));
        }) == ErrorCode::type_error);
  CHECK(code_of([&] {
          derive(t, derived_spec_from_json(json::parse(R"([{"op": "gap", "name": "g", "args": {"minuend": "nope", "subtrahend": "m"}}])")));
        }) == ErrorCode::schema);
  CHECK(code_of([&] {
          derive(t, derived_spec_from_json(json::parse(R"([{"op": "pooled_mean", "name": "g", "args": {"columns": ["q1", "q2"], "weights": ["pop", "total"]}}])")));
        }) == ErrorCode::validation);
  CHECK(code_of([] { derived_spec_from_json(json::parse(R"([{"op": "ratio", "name": "r", "args": {}}])")); }) ==
        ErrorCode::schema);
}

TEST_CASE("impute") {
  const auto t = parse_csv("id,x,c\n1,1,a\n2,,a\n3,3,b\n4,NA,\n", "id");
  const auto r = impute(t);
  CHECK(num(r.table.at(1, 1)) == 2.0);
  CHECK(num(r.table.at(3, 1)) == 2.0);
  CHECK(std::get<std::string>(r.table.at(3, 2)) == "a");
  CHECK(r.table.missing_count() == 0);
  CHECK(r.report.at("x") == 2);
  CHECK(r.report.at("c") == 1);
  CHECK(imputation_report_to_json(r.report)["x"] == 2);
  CHECK(impute(r.table).table == r.table);

  const auto tied = impute(parse_csv("id,c\n1,b\n2,a\n3,NA\n", "id"));
  CHECK(std::get<std::string>(tied.table.at(2, 1)) == "a");

  CHECK(code_of([] { impute(parse_csv("id,x\n1,NA\n2,\n", "id")); }) == ErrorCode::unimputable_column);
  MedianModeImputer imputer;
  CHECK(imputer.name() == "median_mode");
}
