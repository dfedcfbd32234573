#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exit = -1;
  std::string out;
  std::string err;
};

fs::path workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("nh_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args, const std::string& env = "") {
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = env + " " + NH_CLI + " " + args + " >" + out.string() + " 2>" +
                          err.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.exit = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string write_config(const std::string& name, const json& doc) {
  const fs::path p = workdir() / name;
  std::ofstream(p) << doc.dump(2);
  return p.string();
}

json quick_config() {
  std::ifstream in(NH_SOURCE_DIR "/configs/cube_market.json");
  json doc = json::parse(in);
  doc["simulate"]["t_end"] = 300.0;
  doc["simulate"]["transient"] = 100.0;
  doc["simulate"]["dt"] = 0.025;
  doc["simulate"]["quadrature"] = json::array({20, 20});
  doc["sweep"]["alphas"] = json::array({0.08, 0.1, 0.12});
  return doc;
}

const std::string kBundled = NH_SOURCE_DIR "/configs/cube_market.json";

}  // namespace

TEST_CASE("usage and error reporting") {
  Run r = run("");
  CHECK(r.exit != 0);
  CHECK(r.err.rfind("NH_E_USAGE: ", 0) == 0);

  r = run("critical");
  CHECK(r.err.rfind("NH_E_USAGE: ", 0) == 0);

  r = run("critical --config /nonexistent.json");
  CHECK(r.exit != 0);
  CHECK(r.err.rfind("NH_E_IO: ", 0) == 0);

  json bad = quick_config();
  bad["system"]["gamma"] = 2.0;
  r = run("decompose --config " + write_config("bad.json", bad));
  CHECK(r.exit != 0);
  CHECK(r.err.rfind("NH_E_INVARIANT_VIOLATION: ", 0) == 0);
  CHECK(r.err.find("gamma") != std::string::npos);

  r = run("sweep --config " + kBundled, "NH_THREADS=lots");
  CHECK(r.err.rfind("NH_E_USAGE: ", 0) == 0);
}

TEST_CASE("decompose writes and mirrors its report") {
  const fs::path out = workdir() / "decompose";
  Run human = run("decompose --config " + kBundled + " --out " + out.string());
  REQUIRE(human.exit == 0);
  CHECK(human.out.find("24") != std::string::npos);
  const json file = json::parse(slurp(out / "decomposition.json"));
  Run js = run("decompose --json --config " + kBundled + " --out " + out.string());
  REQUIRE(js.exit == 0);
  CHECK(json::parse(js.out) == file);
  CHECK(file["components"].size() == 4);
}

TEST_CASE("critical writes CSV and JSON") {
  const fs::path out = workdir() / "critical";
  Run r = run("critical --json --config " + kBundled + " --out " + out.string());
  REQUIRE(r.exit == 0);
  const json report = json::parse(r.out);
  CHECK(report == json::parse(slurp(out / "critical.json")));
  CHECK(report["points"].size() == 12);
  const std::string csv = slurp(out / "critical_points.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("simulate writes trajectory, spectrum and report") {
  const fs::path out = workdir() / "simulate";
  const std::string cfg = write_config("quick.json", quick_config());
  Run r = run("simulate --config " + cfg + " --out " + out.string());
  REQUIRE(r.exit == 0);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "spectrum.csv"));
  const json report = json::parse(slurp(out / "simulation.json"));
  CHECK(report["alpha"] == 0.12);
  CHECK(r.out.find(report["summary"].get<std::string>()) != std::string::npos);

  json binary = quick_config();
  binary["output"]["trajectory_format"] = "binary";
  const fs::path bout = workdir() / "simulate_bin";
  r = run("simulate --config " + write_config("bin.json", binary) + " --out " + bout.string());
  REQUIRE(r.exit == 0);
  CHECK(slurp(bout / "trajectory.bin").rfind(std::string("NHTRAJ1\0", 8), 0) == 0);
}

TEST_CASE("sweep output is byte-identical across runs and worker counts") {
  const std::string cfg = write_config("sweep.json", quick_config());
  const fs::path a = workdir() / "sweep_a", b = workdir() / "sweep_b";
  REQUIRE(run("sweep --config " + cfg + " --out " + a.string(), "NH_THREADS=1").exit == 0);
  REQUIRE(run("sweep --config " + cfg + " --out " + b.string(), "NH_THREADS=3").exit == 0);
  const std::string first = slurp(a / "sweep.csv");
  CHECK(first.size() > 0);
  CHECK(first == slurp(b / "sweep.csv"));
  REQUIRE(run("sweep --config " + cfg + " --out " + b.string(), "NH_THREADS=1").exit == 0);
  CHECK(first == slurp(b / "sweep.csv"));
}
