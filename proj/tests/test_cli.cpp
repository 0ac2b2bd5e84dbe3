#include "doctest.h"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args, const std::string& workdir) {
  const std::string out_path = workdir + "/stdout.txt";
  const std::string cmd = std::string(NILFLOW_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  std::ifstream is(out_path);
  std::stringstream ss;
  ss << is.rdbuf();
  r.stdout_text = ss.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("nilflow_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

const char* kR2Input = R"({"r": 2, "k": 1, "generators": [[[1, 1], [0, 1]]]})";

}  // namespace

TEST_CASE("cli triples: end-to-end on the standard unipotent") {
  auto dir = fresh_dir("triples");
  write(dir / "in.json", kR2Input);
  auto res = run_cli("--command triples --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string(),
                     dir.string());
  REQUIRE(res.exit_code == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["r"] == 2);
  CHECK(rep.contains("conventions"));
  // Y = diag(1, -1) as [num, den] pairs
  auto y = rep["grading"]["Y"][0];
  CHECK(y[0][0][0] == 1);
  CHECK(y[0][0][1] == 1);
  CHECK(y[1][1][0] == -1);
  CHECK(rep["bracket_residuals"][0]["brackets_exact"] == true);
  CHECK(rep["bracket_residuals"][0]["residual"] == 0);
}

TEST_CASE("cli determinism: identical serial runs produce identical bytes") {
  auto dir = fresh_dir("determinism");
  write(dir / "in.json", kR2Input);
  const std::string base = "--command verify --input " + (dir / "in.json").string();
  auto r1 = run_cli(base + " --out " + (dir / "a").string(), dir.string());
  auto r2 = run_cli(base + " --out " + (dir / "b").string(), dir.string());
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp((dir / "a" / "report.json").string()) ==
        slurp((dir / "b" / "report.json").string()));
}

TEST_CASE("cli verify: rank-2 diagnostics pass") {
  auto dir = fresh_dir("verify");
  write(dir / "in.json", kR2Input);
  auto res = run_cli("--command verify --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string(),
                     dir.string());
  REQUIRE(res.exit_code == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["pass"] == true);
  CHECK(rep["equivariance_residual"].get<double>() <= 1e-10);
  const double mean = rep["directions"][0]["density"]["mean"].get<double>();
  CHECK(std::abs(mean - 2.050660) < 1e-3);
}

TEST_CASE("cli verify: two-puncture block model") {
  auto dir = fresh_dir("verify_k2");
  write(dir / "in.json", R"({"r": 4, "k": 2, "generators": [
    [[1,1,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
    [[1,0,0,0],[0,1,0,0],[0,0,1,1],[0,0,0,1]]]})");
  auto res = run_cli("--command verify --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string(),
                     dir.string());
  REQUIRE(res.exit_code == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["pass"] == true);
  CHECK(rep["k"] == 2);
  REQUIRE(rep["directions"].size() == 2);
  CHECK(rep["directions"][1]["norm_law_ok"] == true);
}

TEST_CASE("cli rejects malformed json with a position-bearing message") {
  auto dir = fresh_dir("badjson");
  write(dir / "in.json", "{\"r\": 2, \"k\": 1, \"generators\": [[[1, 1], [0, 1]]");
  auto res = run_cli("--command triples --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string(),
                     dir.string());
  CHECK(res.exit_code == 1);
  CHECK(res.stdout_text.find("parse error") != std::string::npos);
}

TEST_CASE("cli rejects non-commuting generators with a witness pair") {
  auto dir = fresh_dir("noncomm");
  write(dir / "in.json",
        R"({"r": 2, "k": 2, "generators": [[[1, 1], [0, 1]], [[1, 0], [1, 1]]]})");
  auto res = run_cli("--command triples --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string(),
                     dir.string());
  CHECK(res.exit_code == 1);
  auto body = nlohmann::json::parse(res.stdout_text);
  CHECK(body["error"] == "validation");
  CHECK(body["witness_pair"][0] == 0);
  CHECK(body["witness_pair"][1] == 1);
}

TEST_CASE("cli solve: small grid run with artifacts, and budget exhaustion") {
  auto dir = fresh_dir("solve");
  write(dir / "in.json", kR2Input);
  auto ok = run_cli("--command solve --input " + (dir / "in.json").string() + " --out " +
                        (dir / "out").string() +
                        " --grid 16,16 --alpha 2 --ymax 8 --tol 1e-6 --max-sweeps 4000",
                    dir.string());
  REQUIRE(ok.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "field_init.csv"));
  CHECK(fs::exists(dir / "out" / "field_relaxed.csv"));
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["converged"] == true);
  // CSV header carries the interleaved entry layout
  auto csv = slurp((dir / "out" / "field_init.csv").string());
  CHECK(csv.rfind("ix,iy,x,y,re_00,im_00", 0) == 0);

  auto fail = run_cli("--command solve --input " + (dir / "in.json").string() + " --out " +
                          (dir / "fail").string() +
                          " --grid 16,16 --alpha 2 --ymax 8 --tol 1e-9 --max-sweeps 1 "
                          "--perturb 0.1",
                      dir.string());
  CHECK(fail.exit_code == 2);
}

TEST_CASE("cli solve: exhaustion schedule mode") {
  auto dir = fresh_dir("exhaustion");
  write(dir / "in.json", kR2Input);
  auto res = run_cli("--command solve --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string() +
                         " --grid 12,9 --alpha 2 --ymax 6 --tol 1e-6 --max-sweeps 20000 "
                         "--schedule 6,10",
                     dir.string());
  REQUIRE(res.exit_code == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  REQUIRE(rep["stages"].size() == 2);
  CHECK(rep["stages"][0]["converged"] == true);
  CHECK(rep["stages"][1]["energy"].get<double>() <=
        rep["stages"][1]["init_energy"].get<double>() + 1e-6);
}

TEST_CASE("cli solve: parallel sweeps honor the thread cap") {
  auto dir = fresh_dir("parallel");
  write(dir / "in.json", kR2Input);
  const std::string cmd = "--command solve --input " + (dir / "in.json").string() + " --out " +
                          (dir / "out").string() +
                          " --grid 16,16 --alpha 2 --ymax 8 --tol 1e-6 --max-sweeps 4000 "
                          "--serial false";
  const std::string out_path = dir.string() + "/stdout.txt";
  const std::string full = std::string("NILFLOW_THREADS=2 ") + NILFLOW_CLI_PATH + " " + cmd +
                           " > " + out_path + " 2>&1";
  const int status = std::system(full.c_str());
  REQUIRE(WEXITSTATUS(status) == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["converged"] == true);
}

TEST_CASE("cli scalar: appendix suite summary") {
  auto dir = fresh_dir("scalar");
  auto res = run_cli("--command scalar --out " + (dir / "out").string() +
                         " --grid 32,128 --alpha 2 --ymax 10",
                     dir.string());
  REQUIRE(res.exit_code == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["closed_form_max_error"].get<double>() < 1e-2);
  CHECK(rep["max_principle"]["holds"] == true);
  CHECK(rep["cutoff"]["bound_holds"] == true);
  auto v = rep["vanishing_study"];
  REQUIRE(v.size() == 3);
  CHECK(v[2]["band_sup"].get<double>() < v[1]["band_sup"].get<double>());
  CHECK(v[1]["band_sup"].get<double>() < v[0]["band_sup"].get<double>());
}

TEST_CASE("cli h0-eval: grid dump") {
  auto dir = fresh_dir("h0eval");
  write(dir / "in.json", kR2Input);
  auto res = run_cli("--command h0-eval --input " + (dir / "in.json").string() + " --out " +
                         (dir / "out").string() + " --grid 8,8 --alpha 2 --ymax 8",
                     dir.string());
  REQUIRE(res.exit_code == 0);
  auto rep = nlohmann::json::parse(slurp((dir / "out" / "report.json").string()));
  CHECK(rep["equivariance_residual"].get<double>() <= 1e-10);
  CHECK(fs::exists(dir / "out" / "h0_grid.csv"));
}
