#include "nh/nh.h"

#include "nh/error.hpp"
#include "nh/study.hpp"

#include <nlohmann/json.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

struct nh_study {
  nh::RunConfig config;
  nh::Decomposition decomposition;
  std::optional<nh::CriticalAnalysis> critical;
  unsigned threads = 0;
};

struct nh_simulation {
  nh::SimulationReport report;
  nh::TrajectoryFormat format = nh::TrajectoryFormat::Csv;
};

struct nh_sweep {
  nh::SweepResult result;
};

namespace {

using json = nlohmann::json;

thread_local std::string last_error;

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nh_status to_status(nh::ErrorCode code) {
  return static_cast<nh_status>(static_cast<int>(code) + 1);
}

template <class F>
nh_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return NH_OK;
  } catch (const nh::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return NH_E_INVALID_ARGUMENT;
  } catch (const std::out_of_range& e) {
    last_error = std::string("index out of range: ") + e.what();
    return NH_E_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NH_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return NH_E_INTERNAL;
  }
}

template <class T>
void require(const T* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is null");
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

// Writes through a sibling temporary and renames it over `path`.
template <class Writer>
void write_atomically(const std::string& path, bool binary, Writer&& write) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp =
      target.string() + ".tmp." + std::to_string(static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw nh::Error(nh::ErrorCode::Io, "cannot open " + tmp.string());
    write(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw nh::Error(nh::ErrorCode::Io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw nh::Error(nh::ErrorCode::Io, "cannot rename onto " + path);
  }
}

const nh::CriticalAnalysis& critical_of(const nh_study* s) {
  if (!s->critical) {
    throw nh::Error(nh::ErrorCode::Usage, "critical analysis has not been run");
  }
  return *s->critical;
}

json conditions_json(const nh::ConditionReport& r) {
  json list = json::array();
  for (const auto& c : r.conditions)
    list.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
  return list;
}

json decompose_json(const nh_study& s) {
  const auto& d = s.decomposition;
  json classes = json::array();
  for (std::size_t c = 0; c < d.table.class_reps.size(); ++c) {
    classes.push_back({{"representative", d.table.class_reps[c].to_cycles()},
                       {"size", d.table.class_sizes[c]},
                       {"permutation_character", d.permutation_character[c]}});
  }
  json components = json::array();
  for (const auto& c : d.components) {
    json eig = json::array();
    for (const auto& e : c.eigenvalues)
      eig.push_back({{"mu", e.mu}, {"dim", e.dim}, {"multiplicity", e.multiplicity}});
    json item = {{"j", c.j},
                 {"name", static_cast<std::size_t>(c.j) < d.table.names.size()
                              ? d.table.names[static_cast<std::size_t>(c.j)]
                              : "chi" + std::to_string(c.j)},
                 {"irrep_dim", c.irrep_dim},
                 {"dim", c.dim},
                 {"multiplicity", c.multiplicity},
                 {"mu", c.mu},
                 {"a_j", c.a_j},
                 {"single_eigenvalue", c.single_eigenvalue},
                 {"eigenvalues", eig},
                 {"flags", json::array()}};
    if (!c.single_eigenvalue)
      item["flags"].push_back(nh::error_code_name(nh::ErrorCode::MultipleEigenvaluesOnBlock));
    if (d.bundled_s4) {
      if (auto o = nh::cube::orbit_data(c.j)) {
        item["basic_degree"] = o->basic_degree;
        item["maximal_orbit_types"] = o->maximal_orbit_types;
      }
    }
    components.push_back(std::move(item));
  }
  return {{"command", "decompose"},
          {"group",
           {{"order", d.group.order()},
            {"degree", d.group.degree},
            {"bundled", d.bundled_s4 ? json("S4") : json(nullptr)},
            {"classes", classes}}},
          {"equivariance_defect", d.equivariance_defect},
          {"structural",
           {{"conditions", conditions_json(d.structural)},
            {"kappa", d.structural.kappa},
            {"saturation_jump", d.structural.saturation_jump}}},
          {"components", components}};
}

json point_json(const nh::CriticalPoint& p, const nh::CriticalAnalysis& ca) {
  const auto* u = ca.criterion_for(p.j);
  return {{"j", p.j},
          {"n", p.n},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"period", 2.0 * std::numbers::pi / p.beta},
          {"residual", p.residual},
          {"p", p.p},
          {"q", p.q},
          {"rho", p.rho},
          {"u_prime", p.u_prime},
          {"multiplicity", p.multiplicity},
          {"crossing_number", p.crossing_number ? json(*p.crossing_number) : json(nullptr)},
          {"unbounded_criterion", u && u->holds}};
}

json critical_json(const nh_study& s) {
  const auto& ca = critical_of(&s);
  json points = json::array();
  for (const auto& p : ca.points) points.push_back(point_json(p, ca));
  json unbounded = json::array();
  for (const auto& u : ca.unbounded) {
    unbounded.push_back({{"j", u.j},
                         {"mu", u.mu},
                         {"lhs", u.criterion.lhs},
                         {"rhs", u.criterion.rhs},
                         {"holds", u.criterion.holds}});
  }
  const auto& v = ca.verdict;
  json verdict = {{"alpha0", v.alpha0},
                  {"beta0", v.beta0},
                  {"component", v.alpha0_component},
                  {"hypotheses", conditions_json(v.hypotheses)},
                  {"analytic_exclusion", v.analytic_exclusion},
                  {"scan_exclusion", v.scan_exclusion},
                  {"steady_state_excluded", v.steady_state_excluded},
                  {"established", v.established},
                  {"interval", v.established ? json::array({0.0, v.alpha0}) : json(nullptr)}};
  json checklist = json::array();
  for (const auto& c : ca.checklist) {
    const auto& p = ca.points[c.point];
    json items = json::array();
    for (const auto& i : c.items) items.push_back({{"name", i.name}, {"pass", i.pass}});
    checklist.push_back({{"j", p.j},
                         {"n", p.n},
                         {"items", items},
                         {"local_branch", c.local_branch},
                         {"unbounded_branch", c.unbounded_branch}});
  }
  return {{"command", "critical"},
          {"beta_max", s.config.scan.beta_max},
          {"points", points},
          {"unbounded", unbounded},
          {"verdict", verdict},
          {"checklist", checklist}};
}

json simulation_json(const nh_simulation& sim) {
  const auto& r = sim.report;
  const auto& t = r.trajectory;
  json amps = json::array();
  for (const auto& a : r.amplitudes)
    amps.push_back({{"j", a.j}, {"max", a.amplitude.max}, {"rms", a.amplitude.rms}});
  json spectrum = nullptr;
  if (r.spectrum) {
    spectrum = {{"dominant_frequency", r.spectrum->dominant_frequency},
                {"dominant_magnitude", r.spectrum->dominant_magnitude},
                {"oscillating", r.spectrum->oscillating}};
  }
  json nearest = nullptr;
  if (r.nearest) {
    nearest = {{"j", r.nearest->j}, {"n", r.nearest->n}, {"beta", r.nearest->beta},
               {"alpha", r.nearest->alpha}};
  }
  return {{"command", "simulate"},
          {"alpha", r.alpha},
          {"trajectory_format",
           sim.format == nh::TrajectoryFormat::Binary ? "binary" : "csv"},
          {"t_end", r.horizon.t_end},
          {"transient", r.horizon.transient},
          {"reference_beta", r.horizon.reference_beta},
          {"t_cut", t.meta.t_cut},
          {"dt", t.meta.dt},
          {"dt_out", t.meta.dt_out},
          {"quadrature", {t.meta.neutral_nodes, t.meta.retarded_nodes}},
          {"seed", t.meta.seed},
          {"samples", t.samples()},
          {"retained_samples", t.samples() - r.retained_from},
          {"warnings", t.meta.warnings},
          {"amplitudes", amps},
          {"spectrum", spectrum},
          {"final_sup", r.final_sup},
          {"decayed", r.decayed},
          {"nearest", nearest},
          {"relative_error", r.nearest ? json(r.relative_error) : json(nullptr)},
          {"summary", r.summary}};
}

json sweep_json(const nh_sweep& s) {
  json points = json::array();
  for (const auto& p : s.result.points) {
    points.push_back({{"alpha", p.alpha},
                      {"amplitude", p.amplitude},
                      {"rms", p.rms},
                      {"dominant_frequency", p.dominant_frequency},
                      {"oscillating", p.oscillating},
                      {"diverged", p.diverged},
                      {"note", p.note}});
  }
  return {{"command", "sweep"}, {"components", s.result.components}, {"points", points}};
}

nh_study* make_study(nh::RunConfig config) {
  auto s = std::make_unique<nh_study>();
  s->config = std::move(config);
  s->decomposition = nh::decompose(s->config.system, s->config.group);
  return s.release();
}

}  // namespace

extern "C" {

const char* nh_status_name(nh_status status) {
  switch (status) {
    case NH_OK: return "NH_OK";
    case NH_E_INVALID_ARGUMENT: return "NH_E_INVALID_ARGUMENT";
    case NH_E_INTERNAL: return "NH_E_INTERNAL";
    default: break;
  }
  if (status > NH_OK && status <= NH_E_USAGE) {
    // Views into string literals, so the data is NUL-terminated.
    return nh::error_code_name(static_cast<nh::ErrorCode>(status - 1)).data();
  }
  return "NH_E_UNKNOWN";
}

const char* nh_last_error(void) { return last_error.c_str(); }

void nh_string_free(char* text) { std::free(text); }

nh_status nh_study_load(const char* path, nh_study** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = make_study(nh::load_config(path));
  });
}

nh_status nh_study_from_json(const char* text, nh_study** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = make_study(nh::parse_config_text(text));
  });
}

void nh_study_free(nh_study* study) { delete study; }

nh_status nh_study_set_seed(nh_study* study, uint64_t seed) {
  return guard([&] {
    require(study, "study");
    study->config.simulate.seed = seed;
  });
}

nh_status nh_study_set_alpha(nh_study* study, double alpha) {
  return guard([&] {
    require(study, "study");
    study->config.simulate.alpha = alpha;
  });
}

nh_status nh_study_set_epsilon(nh_study* study, double epsilon) {
  return guard([&] {
    require(study, "study");
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
    study->config.simulate.epsilon = epsilon;
  });
}

nh_status nh_study_set_threads(nh_study* study, unsigned threads) {
  return guard([&] {
    require(study, "study");
    study->threads = threads;
  });
}

const char* nh_study_output_dir(const nh_study* study) {
  return study ? study->config.output.dir.c_str() : "";
}

int nh_study_dimension(const nh_study* study) { return study ? study->config.system.n : 0; }

size_t nh_study_group_order(const nh_study* study) {
  return study ? study->decomposition.group.order() : 0;
}

size_t nh_study_component_count(const nh_study* study) {
  return study ? study->decomposition.components.size() : 0;
}

nh_status nh_study_component(const nh_study* study, size_t index, nh_component* out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    const auto& c = study->decomposition.components.at(index);
    *out = {c.j, c.irrep_dim, c.dim, c.multiplicity, c.single_eigenvalue ? 1 : 0, c.mu, c.a_j};
  });
}

nh_status nh_study_projector(const nh_study* study, size_t index, double* out, size_t len) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    const auto& p = study->decomposition.components.at(index).projector;
    if (len != static_cast<size_t>(p.size())) {
      throw nh::Error(nh::ErrorCode::DimensionMismatch, "projector buffer must hold n*n values");
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index k = 0; k < p.cols(); ++k) *out++ = p(i, k);
  });
}

nh_status nh_study_critical(nh_study* study) {
  return guard([&] {
    require(study, "study");
    study->critical =
        nh::analyze_critical(study->config.system, study->decomposition, study->config.scan);
  });
}

size_t nh_study_critical_count(const nh_study* study) {
  return study && study->critical ? study->critical->points.size() : 0;
}

nh_status nh_study_critical_point(const nh_study* study, size_t index, nh_critical_point* out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    const auto& ca = critical_of(study);
    const auto& p = ca.points.at(index);
    const auto* u = ca.criterion_for(p.j);
    *out = {p.j,        p.n,     p.alpha, p.beta,       p.residual,
            p.p,        p.q,     p.rho,   p.u_prime,    p.multiplicity,
            p.crossing_number ? 1 : 0, p.crossing_number.value_or(0), u && u->holds ? 1 : 0};
  });
}

nh_status nh_study_stability(const nh_study* study, nh_stability* out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    const auto& v = critical_of(study).verdict;
    *out = {v.alpha0, v.beta0, v.alpha0_component, v.hypotheses.all_pass() ? 1 : 0,
            v.steady_state_excluded ? 1 : 0, v.established ? 1 : 0};
  });
}

size_t nh_study_unbounded_count(const nh_study* study) {
  return study && study->critical ? study->critical->unbounded.size() : 0;
}

nh_status nh_study_unbounded(const nh_study* study, size_t index, nh_unbounded* out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    const auto& u = critical_of(study).unbounded.at(index);
    *out = {u.j, u.criterion.lhs, u.criterion.rhs, u.criterion.holds ? 1 : 0};
  });
}

nh_status nh_study_report_json(const nh_study* study, nh_report kind, char** out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    json doc;
    switch (kind) {
      case NH_REPORT_DECOMPOSE: doc = decompose_json(*study); break;
      case NH_REPORT_CRITICAL: doc = critical_json(*study); break;
      default: throw InvalidArgument("unknown report kind");
    }
    *out = duplicate(doc.dump(2));
  });
}

nh_status nh_study_write_critical_csv(const nh_study* study, const char* path) {
  return guard([&] {
    require(study, "study");
    require(path, "path");
    const auto& ca = critical_of(study);
    write_atomically(path, false, [&](std::ostream& out) {
      out << "j,n,alpha,beta,residual,p,q,rho,u_prime,crossing_number,unbounded_criterion\n";
      char buf[512];
      for (const auto& p : ca.points) {
        const auto* u = ca.criterion_for(p.j);
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,", p.j,
                      p.n, p.alpha, p.beta, p.residual, p.p, p.q, p.rho, p.u_prime);
        out << buf;
        if (p.crossing_number) out << *p.crossing_number;
        out << ',' << (u && u->holds ? "true" : "false") << '\n';
      }
    });
  });
}

nh_status nh_simulate(nh_study* study, nh_simulation** out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    if (!study->critical) {
      // The horizon needs beta0 only when it is given in periods.
      try {
        study->critical = nh::analyze_critical(study->config.system, study->decomposition,
                                               study->config.scan);
      } catch (const nh::Error&) {
      }
    }
    auto sim = std::make_unique<nh_simulation>();
    sim->report = nh::simulate(study->config, study->decomposition,
                               study->critical ? &*study->critical : nullptr);
    sim->format = study->config.output.trajectory_format;
    *out = sim.release();
  });
}

void nh_simulation_free(nh_simulation* sim) { delete sim; }

nh_status nh_simulation_summary_get(const nh_simulation* sim, nh_simulation_summary* out) {
  return guard([&] {
    require(sim, "simulation");
    require(out, "out");
    const auto& r = sim->report;
    nh_simulation_summary s{};
    s.alpha = r.alpha;
    s.t_end = r.horizon.t_end;
    s.t_cut = r.trajectory.meta.t_cut;
    s.dt = r.trajectory.meta.dt;
    s.samples = r.trajectory.samples();
    s.oscillating = r.spectrum && r.spectrum->oscillating ? 1 : 0;
    s.dominant_frequency = r.spectrum ? r.spectrum->dominant_frequency : 0.0;
    s.final_sup = r.final_sup;
    s.decayed = r.decayed ? 1 : 0;
    if (r.nearest) {
      s.has_nearest = 1;
      s.nearest_j = r.nearest->j;
      s.nearest_n = r.nearest->n;
      s.nearest_beta = r.nearest->beta;
      s.relative_error = r.relative_error;
    }
    *out = s;
  });
}

size_t nh_simulation_component_count(const nh_simulation* sim) {
  return sim ? sim->report.amplitudes.size() : 0;
}

nh_status nh_simulation_amplitude(const nh_simulation* sim, size_t index, int* j, double* max,
                                  double* rms) {
  return guard([&] {
    require(sim, "simulation");
    const auto& a = sim->report.amplitudes.at(index);
    if (j) *j = a.j;
    if (max) *max = a.amplitude.max;
    if (rms) *rms = a.amplitude.rms;
  });
}

size_t nh_simulation_samples(const nh_simulation* sim) {
  return sim ? sim->report.trajectory.samples() : 0;
}

int nh_simulation_dimension(const nh_simulation* sim) {
  return sim ? sim->report.trajectory.dimension : 0;
}

const double* nh_simulation_times(const nh_simulation* sim) {
  return sim ? sim->report.trajectory.times.data() : nullptr;
}

const double* nh_simulation_states(const nh_simulation* sim) {
  return sim ? sim->report.trajectory.states.data() : nullptr;
}

const char* nh_simulation_summary_text(const nh_simulation* sim) {
  return sim ? sim->report.summary.c_str() : "";
}

nh_status nh_simulation_write(const nh_simulation* sim, const char* path, nh_format format) {
  return guard([&] {
    require(sim, "simulation");
    require(path, "path");
    nh::TrajectoryFormat f = sim->format;
    if (format == NH_FORMAT_CSV) f = nh::TrajectoryFormat::Csv;
    if (format == NH_FORMAT_BINARY) f = nh::TrajectoryFormat::Binary;
    write_atomically(path, f == nh::TrajectoryFormat::Binary, [&](std::ostream& out) {
      nh::write_trajectory(out, sim->report.trajectory, f);
    });
  });
}

nh_status nh_simulation_write_spectrum(const nh_simulation* sim, const char* path) {
  return guard([&] {
    require(sim, "simulation");
    require(path, "path");
    if (!sim->report.spectrum) {
      throw nh::Error(nh::ErrorCode::TooFewSamples, "retained window too short for a spectrum");
    }
    const auto& s = *sim->report.spectrum;
    write_atomically(path, false, [&](std::ostream& out) {
      out << "frequency,magnitude\n";
      char buf[80];
      for (std::size_t k = 0; k < s.frequencies.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.frequencies[k], s.magnitudes[k]);
        out << buf;
      }
    });
  });
}

nh_status nh_simulation_report_json(const nh_simulation* sim, char** out) {
  return guard([&] {
    require(sim, "simulation");
    require(out, "out");
    *out = duplicate(simulation_json(*sim).dump(2));
  });
}

nh_status nh_sweep_run(nh_study* study, nh_sweep** out) {
  return guard([&] {
    require(study, "study");
    require(out, "out");
    if (study->config.sweep.alphas.empty()) {
      throw nh::Error(nh::ErrorCode::Usage, "sweep.alphas is empty");
    }
    if (!study->critical) {
      try {
        study->critical = nh::analyze_critical(study->config.system, study->decomposition,
                                               study->config.scan);
      } catch (const nh::Error&) {
      }
    }
    auto s = std::make_unique<nh_sweep>();
    s->result = nh::sweep(study->config, study->decomposition,
                          study->critical ? &*study->critical : nullptr, study->threads);
    *out = s.release();
  });
}

void nh_sweep_free(nh_sweep* sweep) { delete sweep; }

size_t nh_sweep_point_count(const nh_sweep* sweep) {
  return sweep ? sweep->result.points.size() : 0;
}

size_t nh_sweep_component_count(const nh_sweep* sweep) {
  return sweep ? sweep->result.components.size() : 0;
}

nh_status nh_sweep_point_get(const nh_sweep* sweep, size_t index, nh_sweep_point* out) {
  return guard([&] {
    require(sweep, "sweep");
    require(out, "out");
    const auto& p = sweep->result.points.at(index);
    *out = {p.alpha, p.dominant_frequency, p.oscillating ? 1 : 0, p.diverged ? 1 : 0};
  });
}

nh_status nh_sweep_amplitude(const nh_sweep* sweep, size_t index, size_t component, int* j,
                             double* max) {
  return guard([&] {
    require(sweep, "sweep");
    const auto& p = sweep->result.points.at(index);
    if (j) *j = sweep->result.components.at(component);
    if (max) *max = p.amplitude.at(component);
  });
}

nh_status nh_sweep_write_csv(const nh_sweep* sweep, const char* path) {
  return guard([&] {
    require(sweep, "sweep");
    require(path, "path");
    write_atomically(path, false,
                     [&](std::ostream& out) { nh::write_sweep_csv(out, sweep->result); });
  });
}

nh_status nh_sweep_report_json(const nh_sweep* sweep, char** out) {
  return guard([&] {
    require(sweep, "sweep");
    require(out, "out");
    *out = duplicate(sweep_json(*sweep).dump(2));
  });
}

}  // extern "C"
