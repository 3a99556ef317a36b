#include "hdvb/cli.hpp"
#include "hdvb/error.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hdvb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hdvb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Scratch directory removed at scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hdvb_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

ErrorKind parse_error_kind(const std::string& text, Index k = 1) {
  std::istringstream in(text);
  try {
    cli::parse_csv(in, k);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a parse error");
  return ErrorKind::config;
}

std::string parse_error_message(const std::string& text, Index k = 1) {
  std::istringstream in(text);
  try {
    cli::parse_csv(in, k);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("3 x 2 numeric file with k = 1 gives T = 2, N = 2") {
  std::istringstream in("1,2\n3,4\n5,6\n");
  const TimeSeriesPanel p = cli::parse_csv(in, 1);
  CHECK(p.t_obs() == 2);
  CHECK(p.n_series() == 2);
  CHECK(p.k_presample() == 1);
  CHECK(p.data()(2, 1) == 6.0);
  CHECK(p.labels().empty());
}

TEST_CASE("a non-numeric first row is a header") {
  std::istringstream in("a,b\n1,2\n3,4\n");
  const TimeSeriesPanel p = cli::parse_csv(in, 1);
  CHECK(p.labels() == std::vector<std::string>{"a", "b"});
  CHECK(p.t_obs() == 1);
}

TEST_CASE("whitespace, signs, exponents and CRLF are accepted") {
  std::istringstream in(" +1.5 , -2e-3\r\n3,4\r\n");
  const TimeSeriesPanel p = cli::parse_csv(in, 1);
  CHECK(p.data()(0, 0) == 1.5);
  CHECK(p.data()(0, 1) == -0.002);
}

TEST_CASE("bad cells, ragged rows and short files name their position") {
  CHECK(parse_error_kind("1,2\n3,NaN\n") == ErrorKind::input);
  CHECK(parse_error_message("1,2\n3,NaN\n").find("row 2, column 2") != std::string::npos);
  CHECK(parse_error_message("x,y\n1,2\n3,abc\n").find("row 3, column 2") != std::string::npos);
  CHECK(parse_error_message("1,2\n3\n").find("row 2") != std::string::npos);
  CHECK(parse_error_kind("1,inf\n2,3\n") == ErrorKind::input);
  CHECK(parse_error_kind("1,2\n", 1) == ErrorKind::input);
  CHECK(parse_error_kind("") == ErrorKind::input);
}

TEST_CASE("exit codes cover every error class") {
  CHECK(cli::exit_code_for(ErrorKind::input) == 2);
  CHECK(cli::exit_code_for(ErrorKind::config) == 2);
  CHECK(cli::exit_code_for(ErrorKind::shape) == 2);
  for (ErrorKind k : {ErrorKind::non_convergence, ErrorKind::not_psd, ErrorKind::singular, ErrorKind::non_stationary,
                      ErrorKind::estimation}) {
    CHECK(cli::exit_code_for(k) == 3);
  }
  CHECK(cli::exit_code_for(ErrorKind::bootstrap) == 4);
  CHECK(cli::kExitInternal == 5);
}

TEST_CASE("missing input: exit 2 with a JSON error") {
  const Result r = run({"test", "--input", "/nonexistent/data.csv"});
  CHECK(r.code == 2);
  const json e = json::parse(r.err);
  CHECK(e["error"]["kind"] == "input");
  CHECK(e["error"]["exit_code"] == 2);
  CHECK(r.out.empty());
}

TEST_CASE("bad flags and bad values exit 2") {
  CHECK(run({"test", "--no-such-flag"}).code == 2);
  TempDir dir;
  spit(dir.file("d.csv"), "1,2\n3,4\n5,6\n7,8\n");
  const Result r = run({"test", "--input", dir.file("d.csv"), "--lags", "1", "--alpha", "1.5"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"]["kind"] == "config");
  CHECK(run({"test", "--input", dir.file("d.csv"), "--selector", "aic"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("all-zero input: q_obs = 0, no rejections, exit 0") {
  TempDir dir;
  std::string text = "a,b,c\n";
  for (int i = 0; i < 60; ++i) text += "0,0,0\n";
  spit(dir.file("zero.csv"), text);
  const Result r = run({"test", "--input", dir.file("zero.csv"), "--lags", "2", "--b-reps", "99", "--alpha", "0.05,0.1"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["q_obs"] == 0.0);
  REQUIRE(j["tests"].size() == 2);
  for (const auto& t : j["tests"]) {
    CHECK(t["reject"] == false);
    CHECK(t["stepdown"]["rejected"].empty());
  }
  CHECK(j["data"]["labels"] == json::array({"a", "b", "c"}));
  CHECK(j["config"]["seed"] == 0);
}

TEST_CASE("simulate is byte-identical for a fixed seed and test reads it back") {
  TempDir dir;
  const auto args = [&](const std::string& out, const std::string& seed) {
    return std::vector<std::string>{"simulate", "--n", "4", "--t", "120", "--seed", seed, "--output", out};
  };
  REQUIRE(run(args(dir.file("a.csv"), "7")).code == 0);
  REQUIRE(run(args(dir.file("b.csv"), "7")).code == 0);
  REQUIRE(run(args(dir.file("c.csv"), "8")).code == 0);
  CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));
  CHECK(slurp(dir.file("a.csv")) != slurp(dir.file("c.csv")));

  const Result t = run({"test", "--input", dir.file("a.csv"), "--lags", "1", "--b-reps", "99", "--seed", "3"});
  REQUIRE(t.code == 0);
  const json j = json::parse(t.out);
  CHECK(j["data"]["t_obs"] == 120);
  CHECK(j["data"]["n_series"] == 4);
  CHECK(j["bootstrap"]["seed"] == 3);
  // The report is reproducible from its embedded config.
  CHECK(run({"test", "--input", dir.file("a.csv"), "--lags", "1", "--b-reps", "99", "--seed", "3"}).out == t.out);
}

TEST_CASE("simulated white noise has unit variance") {
  TempDir dir;
  REQUIRE(run({"simulate", "--n", "1", "--t", "10000", "--white-noise", "--seed", "4", "--output", dir.file("w.csv")}).code == 0);
  std::ifstream in(dir.file("w.csv"));
  const TimeSeriesPanel p = cli::parse_csv(in, 1);
  const auto x = p.estimation_rows().col(0);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fit reports coefficients and the residual diagnostic") {
  TempDir dir;
  REQUIRE(run({"simulate", "--n", "3", "--t", "200", "--seed", "2", "--output", dir.file("d.csv")}).code == 0);
  const Result r = run({"fit", "--input", dir.file("d.csv"), "--lags", "1", "--diag-lags", "3"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["command"] == "fit");
  CHECK(j["diagnostic"]["family_size"] == 9);
  CHECK(j["model"]["equations"].size() == 3);
}

TEST_CASE("one-cell mc gives exactly one cell and one CSV row") {
  TempDir dir;
  const Result r = run({"mc", "--experiment", "size", "--grid", "3x60", "--mc-reps", "5", "--b-reps", "49", "--seed", "1",
                        "--csv", dir.file("t.csv"), "--trace", dir.file("tr.csv")});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["cells"].size() == 1);
  std::istringstream csv(slurp(dir.file("t.csv")));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) rows += line.empty() ? 0 : 1;
  CHECK(rows == 2);
  std::istringstream trace(slurp(dir.file("tr.csv")));
  rows = 0;
  while (std::getline(trace, line)) rows += line.empty() ? 0 : 1;
  CHECK(rows == 6);
}

TEST_CASE("config file and environment supply values; flags win") {
  TempDir dir;
  spit(dir.file("run.ini"), "b-reps=49\nseed=5\n");
  REQUIRE(run({"simulate", "--n", "2", "--t", "60", "--output", dir.file("d.csv")}).code == 0);
  const Result a = run({"--config", dir.file("run.ini"), "test", "--input", dir.file("d.csv"), "--lags", "1"});
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out)["bootstrap"]["b_reps"] == 49);
  CHECK(json::parse(a.out)["bootstrap"]["seed"] == 5);
  const Result b = run({"--config", dir.file("run.ini"), "test", "--input", dir.file("d.csv"), "--lags", "1", "--seed", "6"});
  CHECK(json::parse(b.out)["bootstrap"]["seed"] == 6);

  ::setenv("HDVB_SEED", "9", 1);
  const Result c = run({"test", "--input", dir.file("d.csv"), "--lags", "1", "--b-reps", "49"});
  ::unsetenv("HDVB_SEED");
  CHECK(json::parse(c.out)["bootstrap"]["seed"] == 9);
}

TEST_CASE("the installed binary maps a missing file to exit 2") {
  const std::string cmd = std::string(HDVB_TOOL) + " test --input /nonexistent.csv 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0}) {
    CHECK(std::stod(cli::format_double(v)) == v);
  }
}

}
