#include <doctest.h>

#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bsm/csv.hpp"

using namespace bsm;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("csv parsing") {
  const CsvTable t = parse("\xEF\xBB\xBF" "a, \"b,c\" ,d\r\n1,\"say \"\"hi\"\"\",3\r\n\r\n4,5,6\n");
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[0] == "a");
  CHECK(t.header[1] == "b,c");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[1][2] == "6");
  CHECK(t.column("d") == 2);
  CHECK_THROWS_AS(t.column("e"), std::invalid_argument);
}

TEST_CASE("csv structural errors") {
  CHECK_THROWS_AS(parse(""), std::invalid_argument);
  const std::string msg = message_of([] { parse("a,b\n1,2\n3\n"); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK_THROWS_AS(read_csv_file("/nonexistent/file.csv"), std::invalid_argument);
}

TEST_CASE("numeric covariates and boundary handling") {
  const CsvTable t = parse("y,x\n0.2,1\n0.5,2.5\n0.9,-1\n");
  const Dataset d = dataset_from_csv(t, "y", {"x"}, BoundaryPolicy::Reject);
  CHECK(d.size() == 3);
  CHECK(d.column_names() == std::vector<std::string>{"(Intercept)", "x"});
  CHECK(d.design()(1, 1) == 2.5);
  CHECK(d.response()[2] == 0.9);

  const CsvTable edge = parse("y,x\n0.2,1\n1,2\n0.4,3\n0,4\n");
  const std::string msg = message_of([&] { dataset_from_csv(edge, "y", {"x"}, BoundaryPolicy::Reject); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("squeeze") != std::string::npos);
  CHECK_THROWS_AS(dataset_from_csv(edge, "y", {"x"}, BoundaryPolicy::Reject), std::domain_error);

  const Dataset s = dataset_from_csv(edge, "y", {"x"}, BoundaryPolicy::Squeeze);
  CHECK(s.response()[1] == doctest::Approx(3.5 / 4.0));
  CHECK(s.response()[3] == doctest::Approx(0.5 / 4.0));

  const CsvTable bad = parse("y,x\n0.2,1\n1.5,2\n0.4,3\n");
  CHECK_THROWS_AS(dataset_from_csv(bad, "y", {"x"}, BoundaryPolicy::Squeeze), std::domain_error);
  const CsvTable text = parse("y,x\n0.2,1\nabc,2\n");
  const std::string m2 = message_of([&] { dataset_from_csv(text, "y", {"x"}, BoundaryPolicy::Reject); });
  CHECK(m2.find("row 2") != std::string::npos);
  CHECK_THROWS_AS(dataset_from_csv(t, "z", {"x"}, BoundaryPolicy::Reject), std::invalid_argument);
  CHECK_THROWS_AS(dataset_from_csv(t, "y", {"w"}, BoundaryPolicy::Reject), std::invalid_argument);
}

TEST_CASE("squeeze formula") {
  const auto out = squeeze_unit_interval({0.0, 0.5, 1.0});
  CHECK(out[0] == doctest::Approx(0.5 / 3.0));
  CHECK(out[1] == doctest::Approx(0.5));
  CHECK(out[2] == doctest::Approx(2.5 / 3.0));
}

TEST_CASE("categorical covariates") {
  const CsvTable t = parse("y,g\n0.1,b\n0.2,a\n0.3,c\n0.4,b\n0.5,a\n");
  SUBCASE("treatment") {
    const Dataset d = dataset_from_csv(t, "y", {"g"}, BoundaryPolicy::Reject, Contrast::Treatment);
    CHECK(d.column_names() == std::vector<std::string>{"(Intercept)", "g[b]", "g[c]"});
    CHECK(d.design()(0, 1) == 1.0);
    CHECK(d.design()(1, 1) == 0.0);
    CHECK(d.design()(1, 2) == 0.0);
    CHECK(d.design()(2, 2) == 1.0);
  }
  SUBCASE("sum") {
    const Dataset d = dataset_from_csv(t, "y", {"g"}, BoundaryPolicy::Reject, Contrast::Sum);
    CHECK(d.column_names() == std::vector<std::string>{"(Intercept)", "g[a]", "g[b]"});
    CHECK(d.design()(1, 1) == 1.0);
    CHECK(d.design()(1, 2) == 0.0);
    CHECK(d.design()(0, 2) == 1.0);
    CHECK(d.design()(2, 1) == -1.0);
    CHECK(d.design()(2, 2) == -1.0);
  }
}
