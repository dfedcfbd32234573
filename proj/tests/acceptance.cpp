// Acceptance checks 1-12. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Command-level criteria go through the nh CLI.
#include "fixtures.hpp"
#include "nh/error.hpp"
#include "nh/spectrum.hpp"
#include "nh/study.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kConfig = NH_SOURCE_DIR "/configs/cube_market.json";
const fs::path kWork = fs::current_path() / "acceptance_out";

std::set<int> failed;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s  criterion %2d  %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) failed.insert(id);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int exit = -1;
  double seconds = 0.0;
  std::string out;
};

CliRun cli(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt";
  const std::string cmd = std::string(NH_CLI) + " " + args + " >" + out.string();
  const auto start = std::chrono::steady_clock::now();
  const int raw = std::system(cmd.c_str());
  CliRun r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.exit = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  return r;
}

// Bundled config with simulate fields overridden.
std::string derived_config(const std::string& name, const json& simulate) {
  std::ifstream in(kConfig);
  json doc = json::parse(in);
  doc["simulate"].update(simulate);
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << doc.dump(2);
  return p.string();
}

struct Csv {
  std::vector<std::vector<double>> rows;
};

Csv read_trajectory_csv(const fs::path& p) {
  Csv c;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    c.rows.push_back(std::move(row));
  }
  return c;
}

void guarded(int id, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, what, std::string("exception: ") + e.what());
  }
}

const nh::RunConfig& config() {
  static const nh::RunConfig cfg = nh::load_config(kConfig);
  return cfg;
}

const nh::Decomposition& decomposition() {
  static const nh::Decomposition d = nh::decompose(config().system, config().group);
  return d;
}

const nh::CriticalAnalysis& critical() {
  static const nh::CriticalAnalysis ca =
      nh::analyze_critical(config().system, decomposition(), config().scan);
  return ca;
}

const nh::CharacteristicBlock& block(int j) {
  for (const auto& b : critical().blocks)
    if (b.j == j) return b;
  throw std::runtime_error("no block for component " + std::to_string(j));
}

void criterion1() {
  const CliRun r = cli("decompose --json --config " + kConfig + " --out " + (kWork / "c1").string());
  if (r.exit != 0) return report(1, false, "isotypic decomposition", "CLI failed");
  const json rep = json::parse(r.out);
  const int js[4] = {0, 1, 3, 4}, dims[4] = {1, 1, 3, 3};
  const double aj[4] = {1.11, 0.19, 0.31, 0.59};
  bool ok = rep["components"].size() == 4;
  double worst = 0.0;
  for (std::size_t i = 0; ok && i < 4; ++i) {
    const auto& c = rep["components"][i];
    ok = ok && c["j"] == js[i] && c["dim"] == dims[i];
    worst = std::max(worst, std::abs(c["a_j"].get<double>() - aj[i]));
  }
  ok = ok && worst <= 1e-12 && r.seconds < 1.0;
  report(1, ok, "isotypic decomposition",
         fmt("a_j = {1.11, 0.19, 0.31, 0.59} max |err| %.2e, dims {1,1,3,3}, %.2f s", worst,
             r.seconds));
}

void criterion2() {
  const fs::path out = kWork / "c2";
  const CliRun r = cli("critical --config " + kConfig + " --out " + out.string());
  if (r.exit != 0) return report(2, false, "critical-point table", "CLI failed");
  const Csv csv = [&] {
    Csv c;
    std::ifstream in(out / "critical_points.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ','))
        row.push_back(cell == "true" ? 1.0 : cell == "false" ? 0.0 : std::stod(cell));
      c.rows.push_back(row);
    }
    return c;
  }();
  double da = 0.0, db = 0.0;
  int matched = 0;
  bool crossing = true;
  for (const auto& p : fixtures::kReferencePoints) {
    for (const auto& row : csv.rows) {
      if (static_cast<int>(row[0]) != p.j || static_cast<int>(row[1]) != p.n) continue;
      ++matched;
      da = std::max(da, std::abs(row[2] - p.alpha));
      db = std::max(db, std::abs(row[3] - p.beta));
      crossing = crossing && row[9] == -1.0;
    }
  }
  const double tol = fixtures::kReferenceTolerance;
  const bool ok = csv.rows.size() == 12 && matched == 12 && da <= tol && db <= tol && crossing &&
                  r.seconds < 10.0;
  report(2, ok, "critical-point table",
         fmt("%d/12 pairs, max |dalpha| %.2e, max |dbeta| %.2e, crossing numbers %s, %.2f s",
             matched, da, db, crossing ? "all -1" : "NOT all -1", r.seconds));
}

void criterion3() {
  double worst = 0.0;
  for (const auto& p : critical().points) {
    const double r = std::abs(nh::eval_quasipolynomial(block(p.j), p.alpha, {0.0, p.beta}));
    worst = std::max(worst, r / (1.0 + std::abs(p.alpha) + p.beta * p.beta));
  }
  report(3, worst <= 1e-10 && critical().points.size() == 12, "residual bound",
         fmt("max |P_j(alpha, i beta)| / (1 + |alpha| + beta^2) = %.2e", worst));
}

void criterion4() {
  double worst = 0.0;
  bool positive = true;
  for (const auto& p : critical().points) {
    const auto& b = block(p.j);
    const double d = 1e-5 * std::max(1.0, p.alpha);
    const double hi = nh::refine_root(b, p.alpha + d, {0.0, p.beta}).real();
    const double lo = nh::refine_root(b, p.alpha - d, {0.0, p.beta}).real();
    const double fd = (hi - lo) / (2.0 * d);
    worst = std::max(worst, std::abs(fd - p.u_prime) / std::abs(p.u_prime));
    positive = positive && p.u_prime > 0.0;
  }
  report(4, worst <= 1e-3 && positive && critical().points.size() == 12, "transversality oracle",
         fmt("max relative gap to Newton-tracked root %.2e, u' > 0 at all points: %s", worst,
             positive ? "yes" : "no"));
}

void criterion5() {
  const auto& b = block(1);
  const nh::CriticalPoint* p11 = nullptr;
  for (const auto& p : critical().points)
    if (p.j == 1 && p.n == 1) p11 = &p;
  if (!p11) return report(5, false, "argument principle", "no (1,1) point");
  // Box Re in [0, 1], Im in [0.01, 0.16]; excludes the root at 0 and beta_{2,1}.
  const double d = 1e-3;
  const int below = nh::count_roots_in_rectangle(b, p11->alpha - d, 0.0, 1.0, 0.01, 0.16);
  const int above = nh::count_roots_in_rectangle(b, p11->alpha + d, 0.0, 1.0, 0.01, 0.16);
  report(5, above - below == 1, "argument principle",
         fmt("roots in box: %d at alpha_11 - %.0e, %d at alpha_11 + %.0e", below, d, above, d));
}

void criterion6() {
  const CliRun r = cli("critical --json --config " + kConfig + " --out " + (kWork / "c6").string());
  if (r.exit != 0) return report(6, false, "stability interval", "CLI failed");
  const json v = json::parse(r.out)["verdict"];
  bool hyp = true;
  double gt = -1.0;
  for (const auto& h : v["hypotheses"]) {
    hyp = hyp && h["pass"].get<bool>();
    if (h["name"] == "gamma_tau1") gt = h["value"].get<double>();
  }
  const double a0 = v["interval"][1].get<double>();
  const bool ok = v["established"].get<bool>() && hyp && std::abs(gt - 0.8) <= 1e-12 &&
                  v["interval"][0].get<double>() == 0.0 &&
                  std::abs(a0 - 0.09529711) <= fixtures::kReferenceTolerance &&
                  v["scan_exclusion"].get<bool>();
  report(6, ok, "stability interval",
         fmt("(0, %.10f), hypotheses %s, gamma tau1 = %.3g, r(u) scan finds no positive real root: %s",
             a0, hyp ? "pass" : "FAIL", gt, v["scan_exclusion"].get<bool>() ? "yes" : "no"));
}

void criterion7() {
  // Arithmetic oracle first.
  const double gamma = 0.04, tau1 = 20, tau2 = 60;
  const int js[4] = {0, 1, 3, 4};
  const double aj[4] = {1.11, 0.19, 0.31, 0.59}, expect[4] = {66.2, 11.0, 18.2, 35.0};
  bool oracle = std::abs(std::abs(gamma * (tau1 - tau2)) - 1.6) <= 1e-12;
  for (int i = 0; i < 4; ++i)
    oracle = oracle && std::abs(std::abs(tau2 * (gamma - aj[i]) - 2.0) - expect[i]) <= 1e-9;

  const CliRun r = cli("critical --json --config " + kConfig + " --out " + (kWork / "c7").string());
  if (r.exit != 0) return report(7, false, "unbounded-branch criterion", "CLI failed");
  const json u = json::parse(r.out)["unbounded"];
  bool ok = oracle && u.size() == 4;
  std::string rhs;
  for (std::size_t i = 0; ok && i < 4; ++i) {
    ok = ok && u[i]["j"] == js[i] && std::abs(u[i]["lhs"].get<double>() - 1.6) <= 1e-9 &&
         std::abs(u[i]["rhs"].get<double>() - expect[i]) <= 1e-9 && u[i]["holds"].get<bool>();
    rhs += fmt("%s%.4g", i ? ", " : "", u[i]["rhs"].get<double>());
  }
  report(7, ok, "unbounded-branch criterion",
         "lhs 1.6 < rhs {" + rhs + "} for j = 0, 1, 3, 4; oracle " + (oracle ? "agrees" : "DISAGREES"));
}

// alpha = 0.08 at the configured resolution; reused by criterion 10.
fs::path run_subcritical(int nodes, double& seconds, int& exit) {
  const fs::path out = kWork / ("c8_k" + std::to_string(nodes));
  const std::string cfg = derived_config(
      "subcritical_k" + std::to_string(nodes) + ".json",
      {{"alpha", 0.08}, {"epsilon", 0.01}, {"perturbation", {{"component", 1}}},
       {"quadrature", {nodes, nodes}}});
  const CliRun r = cli("simulate --config " + cfg + " --out " + out.string());
  seconds = r.seconds;
  exit = r.exit;
  return out;
}

void criterion8() {
  double seconds = 0;
  int exit = 0;
  const fs::path out = run_subcritical(50, seconds, exit);
  if (exit != 0) return report(8, false, "sub-critical decay", "CLI failed");
  const json rep = json::parse(slurp(out / "simulation.json"));
  const double sup = rep["final_sup"].get<double>();
  const bool ok = sup < 1e-4 && seconds < 120.0;
  report(8, ok, "sub-critical decay",
         fmt("alpha 0.08: |x(t_end)|_inf = %.3e at t_end = %.1f, %.1f s", sup,
             rep["t_end"].get<double>(), seconds));
}

void criterion9() {
  const fs::path out = kWork / "c9";
  const CliRun r = cli("simulate --config " + kConfig + " --out " + out.string());
  if (r.exit != 0) return report(9, false, "super-critical oscillation", "CLI failed");
  const json rep = json::parse(slurp(out / "simulation.json"));
  const double beta11 = 0.09239073;
  double v1 = 0.0, other = 0.0;
  for (const auto& a : rep["amplitudes"]) {
    if (a["j"] == 1) {
      v1 = a["max"].get<double>();
    } else {
      other = std::max(other, a["max"].get<double>());
    }
  }
  const bool oscillating = !rep["decayed"].get<bool>() && !rep["spectrum"].is_null() &&
                           rep["spectrum"]["oscillating"].get<bool>();
  const double f = oscillating ? rep["spectrum"]["dominant_frequency"].get<double>() : 0.0;
  const double rel = std::abs(f - beta11) / beta11;
  const bool freq_ok = oscillating && rel <= 0.05;
  const bool amp_ok = v1 >= 10.0 * other;
  report(9, freq_ok && amp_ok, "super-critical oscillation",
         fmt("alpha 0.12: dominant freq %.6g vs beta_11 %.8g (rel. error %.3g, %s); "
             "V1 amplitude %.3g vs max other %.3g (%s)",
             f, beta11, rel, freq_ok ? "ok" : "outside 5%", v1, other,
             amp_ok ? "ok" : "below 10x"));
}

void criterion10() {
  // Delay-free linear problem: x' = -a x, exact exp(-a t).
  nh::SystemSpec spec;
  spec.n = 1;
  spec.a = 0.5;
  spec.b = 0.2;
  spec.tau1 = 1.0;
  spec.tau2 = 1.0;
  spec.coupling = Eigen::MatrixXd::Zero(1, 1);
  spec.kind = nh::ResponseKind::PureLinear;
  auto error = [&](double dt) {
    nh::IntegrationOptions o;
    o.t_end = 10.0;
    o.dt = dt;
    o.dt_out = 10.0;
    o.neutral_nodes = 1;
    o.retarded_nodes = 1;
    const auto traj =
        nh::integrate(spec, nh::InitialHistory::constant_state(Eigen::VectorXd::Ones(1)), o);
    return std::abs(traj.states.back() - std::exp(-spec.a * traj.times.back()));
  };
  const double e1 = error(0.2), e2 = error(0.1), e3 = error(0.05);
  const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));

  // Quadrature refinement on the retained window of the alpha = 0.08 run.
  double s20 = 0, s50 = 0;
  int x20 = 0, x50 = 0;
  const fs::path k50 = kWork / "c8_k50";
  if (!fs::exists(k50 / "trajectory.csv")) run_subcritical(50, s50, x50);
  const fs::path k20 = run_subcritical(20, s20, x20);
  if (x20 != 0 || x50 != 0) return report(10, false, "integrator order", "CLI failed");
  const double t_cut = json::parse(slurp(k50 / "simulation.json"))["t_cut"].get<double>();
  const Csv a = read_trajectory_csv(k50 / "trajectory.csv");
  const Csv b = read_trajectory_csv(k20 / "trajectory.csv");
  double gap = a.rows.size() == b.rows.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; std::isfinite(gap) && i < a.rows.size(); ++i) {
    if (a.rows[i][0] < t_cut - 1e-9) continue;
    for (std::size_t c = 1; c < a.rows[i].size(); ++c)
      gap = std::max(gap, std::abs(a.rows[i][c] - b.rows[i][c]));
  }
  report(10, order >= 3.5 && gap <= 1e-6, "integrator order",
         fmt("observed order %.3f (errors %.2e, %.2e, %.2e); 20 vs 50 nodes on the alpha 0.08 "
             "retained window: %.2e",
             order, e1, e2, e3, gap));
}

void criterion11() {
  nh::SystemSpec spec = config().system;
  spec.alpha = 0.12;
  const auto& sim = config().simulate;
  nh::IntegrationOptions o = nh::make_integration(sim, 100.0);
  const auto base_init = nh::InitialHistory::random(spec.n, sim.epsilon, 11);
  const Eigen::VectorXd v = base_init.constant;
  const auto base = nh::integrate(spec, base_init, o);
  double worst = 0.0;
  const auto neg = nh::integrate(spec, nh::InitialHistory::constant_state(-v), o);
  for (std::size_t i = 0; i < base.samples(); ++i)
    worst = std::max(worst, (neg.state_vector(i) + base.state_vector(i)).cwiseAbs().maxCoeff());
  for (const auto& g : decomposition().group.elements) {
    const Eigen::MatrixXd r = g.matrix();
    const auto moved = nh::integrate(spec, nh::InitialHistory::constant_state(r * v), o);
    for (std::size_t i = 0; i < base.samples(); ++i) {
      worst = std::max(worst, (moved.state_vector(i) - r * base.state_vector(i)).cwiseAbs().maxCoeff());
    }
  }
  report(11, worst <= 1e-8, "equivariance and oddness",
         fmt("max deviation over t in [0, 100] for all 24 elements and negation: %.2e", worst));
}

void criterion12() {
  const auto& d = decomposition();
  const std::size_t order = d.group.order();
  const auto keys = nh::cube::character_table().class_keys;
  const double chi_expect[5] = {8, 0, 0, 2, 0};
  bool chi_ok = keys.size() == 5;
  for (std::size_t c = 0; chi_ok && c < 5; ++c)
    chi_ok = nh::Permutation::parse(keys[c], 8).fixed_points() == chi_expect[c];

  const int n = 8;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  double proj_err = 0.0;
  for (const auto& p : d.projectors) {
    sum += p.matrix;
    proj_err = std::max(proj_err, (p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff());
    for (const auto& q : d.projectors)
      if (q.j != p.j) proj_err = std::max(proj_err, (p.matrix * q.matrix).cwiseAbs().maxCoeff());
  }
  proj_err = std::max(proj_err, (sum - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());

  auto vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
  };
  // One listed eigenvector per eigenvalue of the coupling.
  const std::vector<std::pair<int, Eigen::VectorXd>> eig = {
      {0, vec({1, 1, 1, 1, 1, 1, 1, 1})},
      {1, vec({1, -1, -1, 1, -1, 1, 1, -1})},
      {3, vec({1, -1, -1, 1, 1, -1, -1, 1})},
      {4, vec({1, 1, 1, 1, -1, -1, -1, -1})},
  };
  double eig_err = 0.0;
  for (const auto& [j, v] : eig) {
    const auto* c = d.find(j);
    eig_err = c ? std::max(eig_err, (c->projector * v - v).cwiseAbs().maxCoeff()) : INFINITY;
  }
  const bool ok = order == 24 && chi_ok && proj_err <= 1e-10 && eig_err <= 1e-10;
  report(12, ok, "group and representation suite",
         fmt("|G| = %zu, chi_V = (8,0,0,2,0) %s, projector identities %.1e, eigenvectors %.1e",
             order, chi_ok ? "ok" : "MISMATCH", proj_err, eig_err));
}

}  // namespace

// --known-failure N (repeatable) declares a criterion that is documented as
// not reproducible. The exit status is zero only when the failing set equals
// the declared set, so an unexpected failure or an unexpected pass both fail.
int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failure N]...\n");
      return 2;
    }
  }
  std::printf("acceptance: config %s, CLI %s\n", kConfig.c_str(), NH_CLI);
  guarded(1, "isotypic decomposition", criterion1);
  guarded(2, "critical-point table", criterion2);
  guarded(3, "residual bound", criterion3);
  guarded(4, "transversality oracle", criterion4);
  guarded(5, "argument principle", criterion5);
  guarded(6, "stability interval", criterion6);
  guarded(7, "unbounded-branch criterion", criterion7);
  guarded(8, "sub-critical decay", criterion8);
  guarded(9, "super-critical oscillation", criterion9);
  guarded(10, "integrator order", criterion10);
  guarded(11, "equivariance and oddness", criterion11);
  guarded(12, "group and representation suite", criterion12);
  auto list = [](const std::set<int>& ids) {
    std::string out;
    for (int id : ids) out += (out.empty() ? "" : ", ") + std::to_string(id);
    return out.empty() ? std::string("none") : out;
  };
  std::printf("%zu of 12 criteria failed: %s\n", failed.size(), list(failed).c_str());
  if (!known.empty()) std::printf("declared known failures: %s\n", list(known).c_str());
  return failed == known ? 0 : 1;
}
