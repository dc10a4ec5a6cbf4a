#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string cli = WHIRL_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "whirl-cli-tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::path p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("solve pipeline") {
  fs::path cfg = write_config("solve.json", R"({
    "annulus": {"n": 2, "a": 1.0, "b": 2.0},
    "H": "1",
    "m": [1]
  })");
  fs::path out = scratch() / "solve-out";
  CHECK(run("--config " + cfg.string() + " --out " + out.string() + " solve") == 0);
  json rep = json::parse(slurp(out / "report_solve.json"));
  CHECK(rep["schema"] == "whirl-report/1");
  CHECK(std::abs(rep["flux"].get<double>() - 16.0 * M_PI / 3.0) < 1e-8);
  CHECK(std::abs(rep["closed_form_flux"].get<double>() - 16.0 * M_PI / 3.0) < 1e-10);
  for (const auto& c : rep["checks"]) CHECK(c["pass"].get<bool>());
  std::string csv = slurp(out / "profile.csv");
  CHECK(csv.rfind("r,G,Gdot,flux\n", 0) == 0);
}

TEST_CASE("config validation failures exit with code 2") {
  fs::path bad_m = write_config("badm.json", R"({
    "annulus": {"n": 4, "a": 1.0, "b": 2.0},
    "H": "1",
    "m": [1]
  })");
  CHECK(run("--config " + bad_m.string() + " solve") == 2);
  CHECK(run("--config " + scratch().string() + "/missing.json solve") == 2);
  fs::path bad_json = write_config("notjson.json", "{nope");
  CHECK(run("--config " + bad_json.string() + " solve") == 2);
  fs::path bad_expr = write_config("badexpr.json", R"({
    "annulus": {"n": 2, "a": 1.0, "b": 2.0},
    "H": "1 + q",
    "m": [1]
  })");
  CHECK(run("--config " + bad_expr.string() + " solve") == 2);
  fs::path ok = write_config("gridcheck.json", R"({
    "annulus": {"n": 2, "a": 1.0, "b": 2.0},
    "H": "1",
    "m": [1]
  })");
  CHECK(run("--config " + ok.string() + " --grid BOGUS solve") == 2);
  CHECK(run("--config " + ok.string()) == 2);  // missing subcommand
}

TEST_CASE("verify flags a non solution profile") {
  fs::path cfg = write_config("linear.json", R"({
    "annulus": {"n": 2, "a": 1.0, "b": 2.0},
    "A": "xi",
    "m": [1],
    "profile": "linear"
  })");
  fs::path out = scratch() / "linear-out";
  CHECK(run("--config " + cfg.string() + " --out " + out.string() +
            " --grid COARSE verify") == 1);
  json rep = json::parse(slurp(out / "report_verify.json"));
  CHECK_FALSE(rep["pass"].get<bool>());
  bool residual_failed = false;
  for (const auto& c : rep["checks"])
    if (c["name"] == "reduced_residual") residual_failed = !c["pass"].get<bool>();
  CHECK(residual_failed);
}

TEST_CASE("verify accepts the solved profile") {
  fs::path cfg = write_config("verify.json", R"({
    "annulus": {"n": 2, "a": 1.0, "b": 2.0},
    "A": "xi",
    "F": "xi^2/4",
    "m": [1]
  })");
  fs::path out = scratch() / "verify-out";
  CHECK(run("--config " + cfg.string() + " --out " + out.string() +
            " --grid COARSE verify") == 0);
  json rep = json::parse(slurp(out / "report_verify.json"));
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["pressure_rep"] == "radial");
  CHECK(rep.contains("energy"));
}

TEST_CASE("classify sweep enumerates the admissible set") {
  fs::path cfg = write_config("classify.json", R"({
    "annulus": {"n": 4, "a": 1.0, "b": 2.0},
    "H": "1",
    "B": "0",
    "m_bound": 2
  })");
  fs::path out = scratch() / "classify-out";
  CHECK(run("--config " + cfg.string() + " --out " + out.string() + " classify") == 0);
  json rep = json::parse(slurp(out / "report_classify.json"));
  CHECK(rep["sweep"].size() == 25);
  CHECK(rep["admissible_set"].size() == 9);
  for (const auto& m : rep["admissible_set"])
    CHECK(std::abs(m[0].get<int>()) == std::abs(m[1].get<int>()));
}

TEST_CASE("reports are byte identical across reruns") {
  fs::path cfg = write_config("det.json", R"({
    "annulus": {"n": 2, "a": 1.0, "b": 2.0},
    "H": "1",
    "m": [1]
  })");
  fs::path o1 = scratch() / "det-1", o2 = scratch() / "det-2";
  CHECK(run("--config " + cfg.string() + " --out " + o1.string() +
            " --seed 99 --grid COARSE verify") == 0);
  CHECK(run("--config " + cfg.string() + " --out " + o2.string() +
            " --seed 99 --grid COARSE verify") == 0);
  const std::string r1 = slurp(o1 / "report_verify.json");
  const std::string r2 = slurp(o2 / "report_verify.json");
  CHECK(!r1.empty());
  CHECK(r1 == r2);
}
