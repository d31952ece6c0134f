#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "fcsynth/cli.hpp"
#include "fcsynth/errors.hpp"
#include "fcsynth/io.hpp"

namespace fs = std::filesystem;
using namespace fcsynth;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fcsynth_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kReference = FCSYNTH_SOURCE_DIR "/data/reference_5level.json";

} // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"synth", "--levels", "4", "--out", scratch("x.json").string()}).code == cli::kUsage);
  CHECK(run({"synth", "--preset", "nope"}).code == cli::kUsage);
  CHECK(run({"synth", "--tol", "0", "--out", scratch("x.json").string()}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("enumerate") {
  CHECK(run({"enumerate", "--levels", "5"}).out == "576\n");
  CHECK(run({"enumerate", "--levels", "7"}).out == "518400\n");
  const auto v = run({"enumerate", "--levels", "3", "--verbose"});
  CHECK(v.code == cli::kOk);
  CHECK(v.out.find("00->10->11->01") != std::string::npos);
}

TEST_CASE("model") {
  const auto r = run({"model", "--preset", "paper-5level", "--mode", "0000"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("-250") != std::string::npos);
  CHECK(run({"model", "--mode", "000"}).code == cli::kUsage);
}

TEST_CASE("synth then validate round trip") {
  const auto file = scratch("five.json");
  const auto s = run({"synth", "--preset", "paper-5level", "--out", file.string()});
  REQUIRE(s.code == cli::kOk);
  CHECK(s.out.find("cells: 8") != std::string::npos);
  const auto v = run({"validate", file.string(), "--report", scratch("five_report.json").string()});
  CHECK(v.code == cli::kOk);
  const auto report = io::Json::parse(slurp(scratch("five_report.json")));
  CHECK(report.at("passed").get<bool>());

  std::ifstream in(file);
  const auto f = io::read_decomposition(in);
  CHECK(f.cells.size() == 8);
  CHECK(f.levels == 5);
  CHECK(f.max_length == 8);
  CHECK(f.params.has_value());
}

TEST_CASE("corrupted decompositions") {
  const auto file = scratch("five_c.json");
  REQUIRE(run({"synth", "--preset", "paper-5level", "--out", file.string()}).code == cli::kOk);
  auto j = io::Json::parse(slurp(file));

  auto shifted = j;
  shifted["cells"][0]["box"]["upper"][0] = 149.0;
  std::ofstream(scratch("shifted.json")) << shifted.dump(2);
  CHECK(run({"validate", scratch("shifted.json").string()}).code == cli::kValidationFailed);

  auto bad_pattern = j;
  bad_pattern["cells"][0]["pattern"] = io::Json::array({"1000", "1000", "1000", "1000", "1000",
                                                        "1000", "1000", "1000"});
  std::ofstream(scratch("bad_pattern.json")) << bad_pattern.dump(2);
  CHECK(run({"validate", scratch("bad_pattern.json").string()}).code == cli::kValidationFailed);

  auto malformed = j;
  malformed["cells"][0]["box"]["upper"][0] = 140.0;
  std::ofstream(scratch("malformed.json")) << malformed.dump(2);
  CHECK(run({"validate", scratch("malformed.json").string()}).code == cli::kIo);

  auto no_r = j;
  no_r.erase("R");
  std::ofstream(scratch("no_r.json")) << no_r.dump(2);
  CHECK(run({"validate", scratch("no_r.json").string()}).code == cli::kIo);

  std::ofstream(scratch("garbage.json")) << "{not json";
  CHECK(run({"validate", scratch("garbage.json").string()}).code == cli::kIo);
  CHECK(run({"validate", scratch("missing.json").string()}).code == cli::kIo);
}

TEST_CASE("reference file is read and checked") {
  const auto r = run({"validate", kReference});
  CHECK((r.code == cli::kOk || r.code == cli::kValidationFailed));
  CHECK(r.out.find("coverage: PASS") != std::string::npos);
}

TEST_CASE("output is byte-identical across worker counts") {
  const auto a = scratch("w1.json"), b = scratch("w8.json");
  REQUIRE(run({"synth", "--preset", "paper-5level", "--workers", "1", "--out", a.string()}).code == 0);
  REQUIRE(run({"synth", "--preset", "paper-5level", "--workers", "8", "--out", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));

  const auto r1 = run({"simulate", a.string(), "--random-starts", "20", "--cycles", "10",
                       "--workers", "1"});
  const auto r8 = run({"simulate", a.string(), "--random-starts", "20", "--cycles", "10",
                       "--workers", "8"});
  CHECK(r1.code == cli::kOk);
  CHECK(r1.out == r8.out);
}

TEST_CASE("simulate writes a trace") {
  const auto file = scratch("five_s.json");
  REQUIRE(run({"synth", "--preset", "paper-5level", "--out", file.string()}).code == 0);
  const auto csv = scratch("trace.csv");
  const auto r = run({"simulate", file.string(), "--start", "150,100,50,0", "--cycles", "5",
                      "--out", csv.string()});
  CHECK(r.code == cli::kOk);
  const auto text = slurp(csv);
  CHECK(text.rfind("t,v1,v2,v3,i,mode,vo\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 5 * 8 + 1);
  CHECK(run({"simulate", file.string(), "--start", "150,100"}).code == cli::kUsage);
  CHECK(run({"simulate"}).code == cli::kUsage);
  const auto p = run({"simulate", "--preset", "paper-5level", "--pattern",
                      "0000 0001 0011 0111 1111 1110 1100 1000", "--start", "147,97,47,0",
                      "--cycles", "1"});
  CHECK(p.code == cli::kOk);
}

TEST_CASE("installed binary") {
  const std::string cmd = std::string("\"") + FCSYNTH_CLI_PATH + "\" enumerate --levels 5 > " +
                          scratch("enum.txt").string();
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(slurp(scratch("enum.txt")) == "576\n");
  const std::string bad = std::string("\"") + FCSYNTH_CLI_PATH + "\" validate " +
                          scratch("garbage.json").string() + " 2> /dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == cli::kIo);
}

TEST_CASE("decomposition JSON round trip") {
  std::ifstream in(kReference);
  const auto f = io::read_decomposition(in);
  const auto j = io::to_json(f);
  const auto g = io::decomposition_from_json(j);
  REQUIRE(g.cells.size() == f.cells.size());
  for (std::size_t i = 0; i < f.cells.size(); ++i) {
    CHECK(g.cells[i].cell == f.cells[i].cell);
    CHECK(g.cells[i].pattern == f.cells[i].pattern);
  }
  CHECK(g.control == f.control);
  CHECK(g.safe == f.safe);
  CHECK(io::params_to_json(*g.params) == io::params_to_json(*f.params));

  auto missing = j;
  missing.erase("R");
  CHECK_THROWS_AS(io::decomposition_from_json(missing), FormatError);
  auto short_pattern = j;
  short_pattern["cells"][0]["pattern"] = io::Json::array({"000"});
  CHECK_THROWS_AS(io::decomposition_from_json(short_pattern), FormatError);
}
