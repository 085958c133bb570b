#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbf/cli.hpp"
#include "fbf/error.hpp"
#include "fbf/io.hpp"

using namespace fbf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fbf_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("double formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv tables") {
  CsvTable t({"a", "b"});
  t.add_row(std::vector<double>{1.0, 0.25});
  t.add_row(std::vector<std::string>{"x", "y"});
  CHECK(t.str() == "a,b\n1,0.25\nx,y\n");
  CHECK_THROWS_AS(t.add_row(std::vector<std::string>{"only"}), Error);
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  t.write(dir / "t.csv");
  CHECK(read_csv(dir / "t.csv").str() == t.str());
  CHECK_THROWS_AS(read_csv(dir / "missing.csv"), Error);
  fs::remove_all(dir);
}

TEST_CASE("index functions round-trip through csv and json") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(2), 4);
  const auto f = indicator_of_rect(space, RectPoint{0.5, 0.75});
  const auto dir = scratch("index");
  fs::create_directories(dir);
  index_function_csv(f).write(dir / "f.csv");
  const auto g = read_index_function_csv(dir / "f.csv");
  CHECK(g.space()->same_as(*f.space()));
  CHECK(std::equal(f.values().begin(), f.values().end(), g.values().begin(), g.values().end()));

  const auto h = index_function_from_json(json::parse(to_json(f).dump()));
  CHECK(h.space()->same_as(*space));
  CHECK(norm_sq(h) == norm_sq(f));
  CHECK_THROWS_AS(index_function_from_json(json{{"values", {1.0}}}), Error);
  fs::remove_all(dir);
}

TEST_CASE("model and provenance json") {
  const FieldModel model(make_grid_space(ProductMeasure::lebesgue(1), 32), 4);
  const json j = to_json(model);
  CHECK(j.at("basis_size") == 4);
  CHECK(j.at("fingerprint").get<std::string>().size() == 16);
  Provenance p;
  p.seed = 9;
  const json pj = to_json(p);
  CHECK(pj.at("generator") == "philox4x32-10");
  CHECK(pj.at("seed") == 9);
}

TEST_CASE("config resolution") {
  for (const auto& cmd : command_names()) {
    const json d = default_config(cmd);
    CHECK(d.contains("seed"));
    CHECK(resolve_config(cmd, json::object()) == d);
  }
  CHECK_THROWS_AS(default_config("nope"), Error);
  CHECK_THROWS_AS(resolve_config("covariance", json{{"unknown_key", 1}}), Error);
  CHECK_THROWS_AS(resolve_config("covariance", json::array()), Error);
  const json c = resolve_config("covariance", json{{"h", 0.3}});
  CHECK(c.at("h") == json::array({0.3}));
}

TEST_CASE("exit codes") {
  std::ostringstream log;
  const auto dir = scratch("exit");
  CHECK(run("nope", json::object(), dir, log) == kExitInvalid);
  CHECK(run("covariance", json{{"h", 0.7}}, dir, log) == kExitInvalid);
  CHECK(run("covariance", json{{"bogus", true}}, dir, log) == kExitInvalid);
  CHECK(run("covariance", json{{"h", "a string"}}, dir, log) == kExitInvalid);
  // Every eps level below the smallest sup draw: no hits at all.
  CHECK(run("smallball", json{{"paths", 20}, {"grid", 32}, {"eps", {1e-4, 1e-5}}}, dir, log) == kExitNumerical);
  fs::remove_all(dir);
}

TEST_CASE("covariance command") {
  std::ostringstream log;
  const auto dir = scratch("cov");
  REQUIRE(run("covariance", json::object(), dir, log) == kExitOk);
  CHECK(fs::exists(dir / "results.csv"));
  CHECK(fs::exists(dir / "provenance.json"));
  CHECK(fs::exists(dir / "summary.txt"));
  const std::string csv = slurp(dir / "results.csv");
  CHECK(csv.find(",1,0,closed_form") != std::string::npos);
  const json prov = json::parse(slurp(dir / "provenance.json"));
  CHECK(prov.at("command") == "covariance");
  CHECK(prov.at("config").at("h") == json::array({0.5}));

  const auto dir2 = scratch("cov2");
  REQUIRE(run("covariance", json{{"h", {0.2, 0.3}}, {"f", {0.5}}, {"g", {0.25}}}, dir2, log) == kExitOk);
  const std::string csv2 = slurp(dir2 / "results.csv");
  // k_h = (m(f^2)^{2h} + m(g^2)^{2h} - m(|f-g|^2)^{2h}) / 2 with m = Lebesgue.
  const double expect = 0.5 * (std::pow(0.5, 0.4) + std::pow(0.25, 0.4) - std::pow(0.25, 0.4));
  CHECK(csv2.find(format_double(expect)) != std::string::npos);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("identical seeds give identical results") {
  std::ostringstream log;
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  const json cfg{{"grid", 32}, {"paths", 3}, {"seed", 5}};
  REQUIRE(run("simulate-fbm", cfg, a, log) == kExitOk);
  REQUIRE(run("simulate-fbm", cfg, b, log) == kExitOk);
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}
