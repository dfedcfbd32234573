// nh: command-line front end over the C API.
#include "nh/nh.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

using json = nlohmann::json;

struct Failure {
  nh_status status;
  std::string message;
};

void check(nh_status s) {
  if (s != NH_OK) throw Failure{s, nh_last_error()};
}

std::string take(char* text) {
  std::string s(text);
  nh_string_free(text);
  return s;
}

// Human formats carry 8 significant digits.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

std::string get_num(const json& v) { return v.is_number() ? num(v.get<double>()) : "n/a"; }

const char* yes(bool b) { return b ? "yes" : "no"; }
const char* mark(bool b) { return b ? "[x]" : "[ ]"; }

struct Options {
  std::string config;
  std::optional<std::string> out;
  bool json = false;
  std::optional<std::uint64_t> seed;
};

struct Study {
  nh_study* handle = nullptr;
  std::string out_dir;

  explicit Study(const Options& o) {
    check(nh_study_load(o.config.c_str(), &handle));
    if (o.seed) check(nh_study_set_seed(handle, *o.seed));
    if (const char* t = std::getenv("NH_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(t, &end, 10);
      if (end == t || *end != '\0') {
        throw Failure{NH_E_USAGE, std::string("NH_THREADS must be an integer, got ") + t};
      }
      check(nh_study_set_threads(handle, static_cast<unsigned>(v)));
    }
    out_dir = o.out ? *o.out : nh_study_output_dir(handle);
  }
  ~Study() { nh_study_free(handle); }
  Study(const Study&) = delete;
  Study& operator=(const Study&) = delete;

  std::string path(const std::string& name) const {
    return (std::filesystem::path(out_dir) / name).string();
  }
};

json study_report(const Study& s, nh_report kind) {
  char* text = nullptr;
  check(nh_study_report_json(s.handle, kind, &text));
  return json::parse(take(text));
}

void write_text(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw Failure{NH_E_IO, "cannot open " + tmp.string()};
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw Failure{NH_E_IO, "write failed for " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Failure{NH_E_IO, "cannot rename onto " + path};
}

void print_decompose(const json& r) {
  const auto& g = r["group"];
  std::cout << "group: order " << g["order"].get<std::size_t>() << ", degree "
            << g["degree"].get<int>();
  if (!g["bundled"].is_null()) std::cout << " (bundled " << g["bundled"].get<std::string>() << ")";
  std::cout << "\nclasses (representative, size, chi_V):\n";
  for (const auto& c : g["classes"]) {
    std::cout << "  " << c["representative"].get<std::string>() << "  "
              << c["size"].get<std::size_t>() << "  " << get_num(c["permutation_character"])
              << "\n";
  }
  std::cout << "equivariance defect: " << get_num(r["equivariance_defect"]) << "\n";
  std::cout << "structural conditions:\n";
  for (const auto& c : r["structural"]["conditions"]) {
    std::cout << "  " << mark(c["pass"].get<bool>()) << " " << c["name"].get<std::string>()
              << " = " << get_num(c["value"]) << "\n";
  }
  std::cout << "  kappa = " << get_num(r["structural"]["kappa"])
            << ", saturation jump = " << get_num(r["structural"]["saturation_jump"]) << "\n";
  std::cout << "components:\n";
  for (const auto& c : r["components"]) {
    std::cout << "  V" << c["j"].get<int>() << " (" << c["name"].get<std::string>()
              << "): dim " << c["dim"].get<int>() << ", irrep dim " << c["irrep_dim"].get<int>()
              << ", m_j " << c["multiplicity"].get<int>() << ", mu " << get_num(c["mu"])
              << ", a_j " << get_num(c["a_j"]) << "\n";
    if (!c["single_eigenvalue"].get<bool>()) {
      std::cout << "    flagged NH_E_MULTIPLE_EIGENVALUES_ON_BLOCK; eigenvalues:";
      for (const auto& e : c["eigenvalues"])
        std::cout << " " << get_num(e["mu"]) << " (x" << e["dim"].get<int>() << ")";
      std::cout << "\n";
    }
    if (c.contains("maximal_orbit_types")) {
      std::cout << "    maximal orbit types:\n";
      for (const auto& m : c["maximal_orbit_types"])
        std::cout << "      " << m.get<std::string>() << "\n";
    }
  }
}

void print_critical(const json& r) {
  std::cout << "critical points (beta <= " << get_num(r["beta_max"]) << "):\n";
  std::cout << "  j  n  alpha           beta            period          u'              t   "
               "unbounded\n";
  for (const auto& p : r["points"]) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-2d %-2d %-15s %-15s %-15s %-15s %-3s %s\n",
                  p["j"].get<int>(), p["n"].get<int>(), get_num(p["alpha"]).c_str(),
                  get_num(p["beta"]).c_str(), get_num(p["period"]).c_str(),
                  get_num(p["u_prime"]).c_str(),
                  p["crossing_number"].is_null()
                      ? "-"
                      : std::to_string(p["crossing_number"].get<int>()).c_str(),
                  yes(p["unbounded_criterion"].get<bool>()));
    std::cout << line;
  }
  std::cout << "unbounded-branch criterion |gamma(tau1-tau2)| < |tau2(gamma-a_j)-2|:\n";
  for (const auto& u : r["unbounded"]) {
    std::cout << "  V" << u["j"].get<int>() << ": " << get_num(u["lhs"])
              << (u["holds"].get<bool>() ? " < " : " >= ") << get_num(u["rhs"]) << "\n";
  }
  const auto& v = r["verdict"];
  std::cout << "stability of the consensus:\n";
  std::cout << "  alpha0 = " << get_num(v["alpha0"]) << " (V" << v["component"].get<int>()
            << ", beta0 = " << get_num(v["beta0"]) << ")\n";
  for (const auto& h : v["hypotheses"]) {
    std::cout << "  " << mark(h["pass"].get<bool>()) << " " << h["name"].get<std::string>()
              << " = " << get_num(h["value"]) << "\n";
  }
  std::cout << "  " << mark(v["scan_exclusion"].get<bool>())
            << " no positive real characteristic root (r(u) scan)\n";
  if (v["established"].get<bool>()) {
    std::cout << "  locally asymptotically stable for alpha in (0, " << get_num(v["alpha0"])
              << ")\n";
  } else {
    std::cout << "  stability interval not established\n";
  }
  std::cout << "bifurcation checklist:\n";
  for (const auto& c : r["checklist"]) {
    std::cout << "  V" << c["j"].get<int>() << " n=" << c["n"].get<int>()
              << ": local branch " << yes(c["local_branch"].get<bool>()) << ", unbounded "
              << yes(c["unbounded_branch"].get<bool>()) << "\n";
    for (const auto& i : c["items"])
      std::cout << "    " << mark(i["pass"].get<bool>()) << " " << i["name"].get<std::string>()
                << "\n";
  }
}

void print_simulation(const json& r, const std::string& trajectory) {
  std::cout << "alpha " << get_num(r["alpha"]) << ", t_end " << get_num(r["t_end"])
            << ", retained from t = " << get_num(r["t_cut"]) << ", dt " << get_num(r["dt"])
            << "\n";
  for (const auto& w : r["warnings"]) std::cout << "warning: " << w.get<std::string>() << "\n";
  std::cout << "isotypic amplitudes (max, rms):\n";
  for (const auto& a : r["amplitudes"]) {
    std::cout << "  V" << a["j"].get<int>() << ": " << get_num(a["max"]) << ", "
              << get_num(a["rms"]) << "\n";
  }
  if (!r["spectrum"].is_null()) {
    std::cout << "dominant frequency: " << get_num(r["spectrum"]["dominant_frequency"])
              << " rad/time\n";
  }
  std::cout << "final sup norm: " << get_num(r["final_sup"]) << "\n";
  std::cout << "trajectory: " << trajectory << "\n";
  std::cout << "summary: " << r["summary"].get<std::string>() << "\n";
}

void print_sweep(const json& r, const std::string& csv) {
  std::cout << "alpha";
  for (const auto& j : r["components"]) std::cout << "  amp_V" << j.get<int>();
  std::cout << "  dominant_freq  diverged\n";
  for (const auto& p : r["points"]) {
    std::cout << get_num(p["alpha"]);
    for (const auto& a : p["amplitude"]) std::cout << "  " << get_num(a);
    std::cout << "  " << get_num(p["dominant_frequency"]) << "  "
              << yes(p["diverged"].get<bool>()) << "\n";
  }
  std::cout << "csv: " << csv << "\n";
}

void emit(const Options& o, const json& report, auto&& human) {
  if (o.json) {
    std::cout << report.dump(2) << "\n";
  } else {
    human();
  }
}

void cmd_decompose(const Options& o) {
  Study s(o);
  const json r = study_report(s, NH_REPORT_DECOMPOSE);
  write_text(s.path("decomposition.json"), r.dump(2) + "\n");
  emit(o, r, [&] { print_decompose(r); });
}

void cmd_critical(const Options& o) {
  Study s(o);
  check(nh_study_critical(s.handle));
  const json r = study_report(s, NH_REPORT_CRITICAL);
  check(nh_study_write_critical_csv(s.handle, s.path("critical_points.csv").c_str()));
  write_text(s.path("critical.json"), r.dump(2) + "\n");
  emit(o, r, [&] { print_critical(r); });
}

void cmd_simulate(const Options& o) {
  Study s(o);
  nh_simulation* raw = nullptr;
  check(nh_simulate(s.handle, &raw));
  std::unique_ptr<nh_simulation, decltype(&nh_simulation_free)> sim(raw, nh_simulation_free);
  char* text = nullptr;
  check(nh_simulation_report_json(sim.get(), &text));
  json r = json::parse(take(text));

  // Format comes from output.trajectory_format.
  const std::string traj =
      s.path(r["trajectory_format"] == "binary" ? "trajectory.bin" : "trajectory.csv");
  check(nh_simulation_write(sim.get(), traj.c_str(), NH_FORMAT_CONFIG));
  if (!r["spectrum"].is_null())
    check(nh_simulation_write_spectrum(sim.get(), s.path("spectrum.csv").c_str()));
  r["trajectory"] = traj;
  write_text(s.path("simulation.json"), r.dump(2) + "\n");
  emit(o, r, [&] { print_simulation(r, traj); });
}

void cmd_sweep(const Options& o) {
  Study s(o);
  nh_sweep* raw = nullptr;
  check(nh_sweep_run(s.handle, &raw));
  std::unique_ptr<nh_sweep, decltype(&nh_sweep_free)> sw(raw, nh_sweep_free);
  const std::string csv = s.path("sweep.csv");
  check(nh_sweep_write_csv(sw.get(), csv.c_str()));
  char* text = nullptr;
  check(nh_sweep_report_json(sw.get(), &text));
  json r = json::parse(take(text));
  r["csv"] = csv;
  emit(o, r, [&] { print_sweep(r, csv); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetric Hopf bifurcation analysis for neutral delay consensus networks"};
  app.require_subcommand(1);
  Options o;
  auto add = [&](const char* name, const char* help, void (*run)(const Options&)) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", o.out, "Output directory (overrides output.dir)");
    sub->add_flag("--json", o.json, "Print the report as JSON");
    sub->add_option("--seed", o.seed, "Seed for random perturbations");
    sub->callback([&o, run] { run(o); });
  };
  add("decompose", "Isotypic decomposition of the coupling", cmd_decompose);
  add("critical", "Critical points, stability interval and bifurcation checklist", cmd_critical);
  add("simulate", "Integrate the configured run and analyse it", cmd_simulate);
  add("sweep", "Bifurcation diagram over sweep.alphas", cmd_sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nh_status_name(NH_E_USAGE) << ": " << e.what() << "\n";
    return static_cast<int>(NH_E_USAGE);
  } catch (const Failure& f) {
    std::cerr << nh_status_name(f.status) << ": " << f.message << "\n";
    return static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::cerr << nh_status_name(NH_E_INTERNAL) << ": " << e.what() << "\n";
    return static_cast<int>(NH_E_INTERNAL);
  }
  return 0;
}
