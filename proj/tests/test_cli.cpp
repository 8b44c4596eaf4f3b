#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsm/cli.hpp"
#include "bsm/distribution.hpp"
#include "bsm/regression.hpp"

using namespace bsm;
using nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int s = run_cli(args, out, err);
  return {s, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("bsm_cli_" + name);
  std::ofstream(path) << content;
  return path.string();
}

// Clean beta-regression data with one numeric covariate.
std::string clean_csv(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::ostringstream s;
  s.precision(17);
  s << "y,x\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double x = z(rng);
    const double mu = link_inverse(0.5 + x);
    s << sample_beta(mu / 0.1, (1.0 - mu) / 0.1, rng) << ',' << x << '\n';
  }
  return temp_file("clean_" + std::to_string(seed) + ".csv", s.str());
}

std::vector<std::pair<double, double>> csv_points(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<double, double>> pts;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'y') continue;
    const auto comma = line.find(',');
    pts.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return pts;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).status == kExitInputError);
  CHECK(run({"frobnicate"}).status == kExitInputError);
  CHECK(run({"fit", "x.csv", "--response", "y"}).status == kExitInputError);
  CHECK(run({"pdf-table", "--family", "gb"}).status == kExitInputError);
  CHECK(run({"pdf-table", "--family", "nope"}).status == kExitInputError);
  CHECK(run({"pdf-table", "--family", "beta", "--mu", "1.5"}).status == kExitInputError);
  CHECK(run({"pdf-table", "--family", "beta", "--format", "xml"}).status == kExitInputError);
  CHECK(run({"simulate", "--rate", "1.2"}).status == kExitInputError);
  CHECK(run({"simulate", "--families", "beta,beta"}).status == kExitInputError);
  CHECK(run({"--help"}).status == kExitOk);
}

TEST_CASE("fit rejects boundary responses and unknown columns") {
  const std::string f = temp_file("boundary.csv", "y,x\n0.2,1\n1.0,2\n0.5,3\n");
  const Run r = run({"fit", f, "--family", "beta", "--response", "y", "--covariates", "x"});
  CHECK(r.status == kExitInputError);
  CHECK(r.err.find("row 2") != std::string::npos);

  const std::string ok = temp_file("ok.csv", "y,x\n0.2,1\n0.7,2\n0.5,3\n");
  const Run u = run({"fit", ok, "--family", "beta", "--response", "y", "--covariates", "nope"});
  CHECK(u.status == kExitInputError);
  CHECK(u.err.find("nope") != std::string::npos);

  CHECK(run({"fit", "/nonexistent.csv", "--family", "beta", "--response", "y"}).status == kExitInputError);
}

TEST_CASE("fit report contents and format independence") {
  const std::string f = clean_csv(150, 3);
  const Run j = run({"fit", f, "--family", "beta", "--response", "y", "--covariates", "x", "--seed", "9"});
  REQUIRE(j.status == kExitOk);
  const json rep = json::parse(j.out);
  CHECK(rep["config"]["seed"] == 9);
  CHECK(rep["config"]["family"] == "beta");
  CHECK(rep["parameters"] == 3);
  CHECK(rep["observations"] == 150);
  CHECK(rep["converged"] == true);
  for (const char* key : {"estimates", "se", "loglik", "aic", "bic", "iterations"}) CHECK(rep.contains(key));
  const double ll = rep["loglik"];
  CHECK(rep["aic"].get<double>() == doctest::Approx(6.0 - 2.0 * ll));

  const Run c = run({"fit", f, "--family", "beta", "--response", "y", "--covariates", "x", "--seed", "9",
                     "--format", "csv"});
  REQUIRE(c.status == kExitOk);
  CHECK(c.out.rfind("# config: ", 0) == 0);
  CHECK(c.out.find("fit,loglik," + rep["loglik"].dump() + "\n") != std::string::npos);
  for (auto& [k, v] : rep["estimates"].items())
    CHECK(c.out.find("estimate," + k + "," + v.dump() + "\n") != std::string::npos);
  for (auto& [k, v] : rep["se"].items())
    CHECK(c.out.find("se," + k + "," + v.dump() + "\n") != std::string::npos);
}

// Without contamination the fit collapses onto a single beta: either the
// contaminant weight goes to its clip, or the two components merge and the
// weight stops being identified. Every row is classified as reference.
TEST_CASE("fit tpb by EM on clean data") {
  for (std::uint64_t seed : {4, 6}) {
    const std::string f = clean_csv(200, seed);
    const Run r = run({"fit", f, "--family", "tpb", "--em", "--response", "y", "--covariates", "x"});
    REQUIRE(r.status == kExitOk);
    const json rep = json::parse(r.out);
    const double theta1 = rep["estimates"]["theta1"];
    const double theta2 = rep["estimates"]["theta2"];
    CHECK((theta1 > 0.99 || theta2 < 1.05));
    const auto& path = rep["em"]["loglik_path"];
    for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i].get<double>() >= path[i - 1].get<double>() - 1e-10);
    REQUIRE(rep["posteriors"].size() == 200);
    for (const auto& p : rep["posteriors"]) {
      CHECK(p["probability"].get<double>() > 0.9);
      CHECK(p["reference"] == true);
    }
    const json beta = json::parse(run({"fit", f, "--family", "beta", "--response", "y", "--covariates", "x"}).out);
    CHECK(rep["loglik"].get<double>() - beta["loglik"].get<double>() < 2.0);
    CHECK(rep["estimates"]["beta1"].get<double>() == doctest::Approx(beta["estimates"]["beta1"].get<double>()).epsilon(0.02));
  }
}

TEST_CASE("rank") {
  const std::string f = clean_csv(150, 5);
  const Run one = run({"rank", f, "--response", "y", "--covariates", "x", "--families", "beta"});
  REQUIRE(one.status == kExitOk);
  const json rep = json::parse(one.out);
  REQUIRE(rep["models"].size() == 1);
  CHECK(rep["models"][0]["aic_rank"] == 1);
  CHECK(rep["models"][0]["bic_rank"] == 1);

  CHECK(run({"rank", f, "--response", "y", "--families", "beta,beta"}).status == kExitInputError);
  CHECK(run({"rank", f, "--response", "y", "--families", "beta,nope"}).status == kExitInputError);

  const Run two = run({"rank", f, "--response", "y", "--covariates", "x", "--families", "beta,gb", "--format", "csv"});
  REQUIRE(two.status == kExitOk);
  CHECK(two.out.find("model,k,loglik,aic,aic_rank,bic,bic_rank,status\n") != std::string::npos);
  CHECK(two.out.find("\nbeta,3,") != std::string::npos);
  CHECK(two.out.find("\ngb,4,") != std::string::npos);
}

TEST_CASE("rank on the mock jurors export" * doctest::skip(std::getenv("BSM_MOCKJURORS_CSV") == nullptr)) {
  const std::string f = std::getenv("BSM_MOCKJURORS_CSV");
  const Run r = run({"rank", f, "--response", "confidence", "--covariates", "verdict", "--families",
                     "beta,tpb,gb,lnb,igb"});
  REQUIRE(r.status == kExitOk);
  const json rep = json::parse(r.out);
  const double expected[] = {28.5806, 38.9206, 38.0714, 38.4423, 38.4982};
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(rep["models"][i]["loglik"].get<double>() - expected[i]) < 0.1);
  CHECK(rep["models"][4]["aic_rank"] == 1);
  CHECK(rep["models"][4]["bic_rank"] == 1);
}

TEST_CASE("simulate is reproducible") {
  const std::vector<std::string> args = {"simulate", "--replicates", "4", "--n", "120", "--rate", "0.05",
                                         "--seed", "7", "--families", "beta,tpb", "--format", "csv"};
  const Run a = run(args);
  const Run b = run(args);
  REQUIRE(a.status == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find("measure,parameter,beta,tpb\n") != std::string::npos);
  CHECK(a.out.find("\"seed\":7") != std::string::npos);

  auto json_args = args;
  json_args.back() = "json";
  const Run j = run(json_args);
  REQUIRE(j.status == kExitOk);
  const json rep = json::parse(j.out);
  const auto& beta = rep["families"][0];
  CHECK(beta["family"] == "beta");
  CHECK(a.out.find("bias,beta1," + beta["cells"][1]["bias"].dump() + ",") != std::string::npos);
}

TEST_CASE("pdf-table") {
  SUBCASE("uniform") {
    const Run r = run({"pdf-table", "--family", "beta", "--mu", "0.5", "--phi", "0.5", "--grid", "5"});
    REQUIRE(r.status == kExitOk);
    const auto pts = csv_points(r.out);
    REQUIRE(pts.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(pts[i].first == doctest::Approx((i + 1) / 6.0));
      CHECK(pts[i].second == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("two-point limit") {
    const auto beta = csv_points(run({"pdf-table", "--family", "beta", "--mu", "0.3", "--phi", "0.2"}).out);
    const auto tpb = csv_points(run({"pdf-table", "--family", "tpb", "--mu", "0.3", "--phi", "0.2", "--theta1",
                                     "0.999999999999", "--theta2", "4"}).out);
    REQUIRE(beta.size() == 99);
    REQUIRE(tpb.size() == 99);
    for (std::size_t i = 0; i < 99; ++i) CHECK(std::abs(beta[i].second - tpb[i].second) < 1e-9);
  }
  SUBCASE("gamma mixing symmetry") {
    const auto g = csv_points(run({"pdf-table", "--family", "gb", "--mu", "0.5", "--phi", "0.3", "--theta", "1"}).out);
    REQUIRE(g.size() == 99);
    for (std::size_t i = 0; i < 99; ++i) CHECK(std::abs(g[i].second - g[98 - i].second) < 1e-8);
  }
  SUBCASE("json and csv agree") {
    const std::vector<std::string> base = {"pdf-table", "--family", "igb", "--theta", "0.7", "--grid", "9"};
    auto js = base;
    js.insert(js.end(), {"--format", "json"});
    const json rep = json::parse(run(js).out);
    const std::string csv = run(base).out;
    REQUIRE(rep["points"].size() == 9);
    for (const auto& p : rep["points"])
      CHECK(csv.find("\n" + p["y"].dump() + "," + p["density"].dump() + "\n") != std::string::npos);
  }
}
