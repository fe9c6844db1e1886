#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bykov/cli.hpp"
#include "bykov/error.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bykov;
namespace fs = std::filesystem;

namespace {

cli::RunConfig config(const std::string& sub, std::map<std::string, std::string> values) {
  cli::RunConfig c;
  c.subcommand = sub;
  c.values = std::move(values);
  return c;
}

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(const cli::RunConfig& c) {
  std::ostringstream out, err;
  const int s = cli::run(c, out, err);
  return {s, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bykov_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("value parsers") {
  CHECK(cli::parse_double("A", " 0.25 ") == 0.25);
  CHECK_THROWS_AS(cli::parse_double("A", "0.25x"), InvalidArgument);
  CHECK_THROWS_AS(cli::parse_double("A", "inf"), InvalidArgument);
  CHECK(cli::parse_int("n", "42") == 42);
  CHECK_THROWS_AS(cli::parse_int("n", "4.2"), InvalidArgument);
  const cli::Range r = cli::parse_range("omega", "0.5:10");
  CHECK(r.min == 0.5);
  CHECK(r.max == 10.0);
  CHECK(r.is_range());
  CHECK_FALSE(cli::parse_range("omega", "3").is_range());
  CHECK_THROWS_AS(cli::parse_range("omega", "5:1"), InvalidArgument);
  CHECK(cli::parse_int_list("grid", "3,4") == std::vector<long>{3, 4});
  CHECK(cli::parse_double_list("s0", "0.1,0.1,0,-0.99").size() == 4);
}

TEST_CASE("format_double round-trips every double") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 20000; ++k) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const std::string s = cli::format_double(v);
    REQUIRE(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(cli::format_double(0.1) == "0.10000000000000001");
  CHECK(cli::format_double(std::nan("")) == "nan");
  CHECK(cli::format_double(-HUGE_VAL) == "-inf");
}

TEST_CASE("validation errors name the problem") {
  SUBCASE("delta <= 1") {
    const Outcome o = run(config("constants", {{"delta", "0.8"}}));
    CHECK(o.status == 2);
    CHECK(o.err.find("not weakly attracting") != std::string::npos);
    const auto rec = nlohmann::json::parse(o.err);
    CHECK(rec["error"]["kind"] == "validation");
  }
  SUBCASE("missing required keys are listed") {
    try {
      cli::validate(config("fixed-points", {{"A", "0.3"}}));
      FAIL("expected a validation error");
    } catch (const InvalidArgument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("missing lambda, omega") != std::string::npos);
      CHECK(msg.find("required keys: A, lambda, omega") != std::string::npos);
    }
  }
  SUBCASE("unknown keys are rejected with the known list") {
    CHECK_THROWS_WITH_AS(cli::validate(config("constants", {{"gamma", "1"}})), doctest::Contains("unknown key 'gamma'"),
                         InvalidArgument);
  }
  SUBCASE("grid commands need an output file") {
    CHECK_THROWS_WITH_AS(cli::validate(config("wedge", {{"lambda", "0.1"}, {"A", "0:0.5"}, {"omega", "1:5"}})),
                         doctest::Contains("--out"), InvalidArgument);
  }
  SUBCASE("ODE parameter inequalities") {
    CHECK(run(config("ode-check", {{"beta", "0.2"}})).status == 2);
    CHECK(run(config("ode-check", {{"tau1", "2"}})).status == 2);
  }
}

TEST_CASE("lambda > A warns but proceeds") {
  const Outcome o = run(config("fixed-points", {{"A", "0.05"}, {"lambda", "0.1"}, {"omega", "3"}}));
  CHECK(o.status == 0);
  CHECK(o.err.find("warning: outside V") != std::string::npos);
  CHECK(o.err.find("run proceeds") != std::string::npos);
  const auto j = nlohmann::json::parse(o.out);
  CHECK(j.contains("records"));
}

TEST_CASE("config file values are overridden by flags") {
  const fs::path cfg = scratch("fp.cfg");
  {
    std::ofstream f(cfg);
    f << "# fixed point run\n--A = 0.35\nlambda=0.05\n\nomega = 2   # overridden\n";
  }
  auto values = cli::read_config_file(cfg.string());
  CHECK(values.at("A") == "0.35");
  CHECK(values.at("omega") == "2");
  values["omega"] = "8";  // as a command-line flag would
  const Outcome o = run(config("fixed-points", values));
  REQUIRE(o.status == 0);
  const auto j = nlohmann::json::parse(o.out);
  CHECK(j["params"]["omega"].get<double>() == 8.0);
  CHECK(j["records"].size() == 2);

  {
    std::ofstream f(cfg);
    f << "A 0.3\n";
  }
  CHECK_THROWS_WITH_AS(cli::read_config_file(cfg.string()), doctest::Contains(":1:"), InvalidArgument);
  CHECK_THROWS_AS(cli::read_config_file("/nonexistent/bykov.cfg"), IoError);
}

TEST_CASE("JSON numbers re-parse bit-for-bit") {
  const Outcome o = run(config("constants", {{"delta", "3"}, {"K", "1"}, {"ell", "2"}}));
  REQUIRE(o.status == 0);
  const auto j = nlohmann::json::parse(o.out);
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  CHECK(j["omega_star"].get<double>() == omega_star(2, c));
  CHECK(j["G_at_omega_star"].get<double>() == g_ell(omega_star(2, c), 2, c));
  CHECK(j["constants"]["M"].get<double>() == c.M);

  std::ostringstream os;
  cli::JsonWriter w(os);
  w.begin_object().field("x", 0.1).field("bad", std::nan("")).key("list").begin_array();
  w.value(1).value("a\"b").end_array().end_object();
  w.finish();
  const auto k = nlohmann::json::parse(os.str());
  CHECK(k["x"].get<double>() == 0.1);
  CHECK(k["bad"].is_null());
  CHECK(k["list"][1] == "a\"b");
}

TEST_CASE("grid CSV and sidecar are byte-identical across thread counts") {
  auto scan = [&](const std::string& threads) {
    const fs::path out = scratch("scan_" + threads + ".csv");
    const Outcome o = run(config("scan-map", {{"A", "0.05:0.3"},
                                              {"lambda", "0.1"},
                                              {"omega", "1:8"},
                                              {"K", "2"},
                                              {"grid", "4,3"},
                                              {"iterations", "600"},
                                              {"transient", "100"},
                                              {"random-seeds", "2"},
                                              {"seed", "5"},
                                              {"threads", threads},
                                              {"out", out.string()}}));
    REQUIRE(o.status == 0);
    return std::make_pair(slurp(out), slurp(out.string() + ".meta.json"));
  };
  const auto a = scan("1");
  const auto b = scan("3");
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  std::istringstream lines(a.first);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "i,j,param1,param2,class,lyap1,lyap2,rotation,flags");
  int rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  CHECK(rows == 12);
  CHECK(a.first.find('\r') == std::string::npos);
  const auto meta = nlohmann::json::parse(a.second);
  CHECK(meta["subcommand"] == "scan-map");
  CHECK(meta["seed"] == 5);
}

TEST_CASE("ODE grid has four exponent columns") {
  const fs::path out = scratch("ode.csv");
  const Outcome o = run(config("ode-scan", {{"tau1", "0:0.2"}, {"tau2", "0:0.2"}, {"grid", "2,2"}, {"t-final", "40"},
                                            {"out", out.string()}}));
  REQUIRE(o.status == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("i,j,param1,param2,class,lyap1,lyap2,lyap3,lyap4,rotation,flags\n", 0) == 0);
}

TEST_CASE("unwritable output is an io error") {
  const Outcome o = run(config("constants", {{"out", "/nonexistent/dir/c.json"}}));
  CHECK(o.status == 4);
  CHECK(nlohmann::json::parse(o.err)["error"]["kind"] == "io");
}
