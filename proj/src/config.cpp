#include "nh/config.hpp"

#include "nh/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace nh {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvariantViolation, field + ": " + why);
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Parse, where + "." + key + " has the wrong type");
  }
}

double character_value(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_rational(v.get<std::string>());
  throw Error(ErrorCode::Parse, where + ": character values must be numbers or rationals");
}

GroupConfig parse_group(const json& node) {
  GroupConfig g;
  if (node.is_string()) {
    if (node.get<std::string>() != "bundled:S4") {
      throw Error(ErrorCode::Parse, "group: unknown bundled group \"" +
                                        node.get<std::string>() + "\"");
    }
    g.bundled_s4 = true;
    return g;
  }
  if (!node.is_object()) throw Error(ErrorCode::Parse, "group must be a string or object");
  g.generators = get(node, "generators", "group", std::vector<std::string>{});
  g.max_order = get<std::size_t>(node, "max_order", "group", kDefaultGroupCap);
  if (auto t = node.find("character_table"); t != node.end()) {
    CharacterTableInput in;
    in.class_keys = get(*t, "classes", "group.character_table", std::vector<std::string>{});
    const auto rows = t->find("characters");
    if (rows == t->end() || !rows->is_array()) {
      throw Error(ErrorCode::MissingField, "group.character_table.characters is required");
    }
    for (const auto& row : *rows) {
      std::vector<double> values;
      for (const auto& v : row) values.push_back(character_value(v, "group.character_table"));
      if (values.size() != in.class_keys.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "group.character_table: row length differs from the class list");
      }
      in.characters.push_back(std::move(values));
    }
    in.names = get(*t, "names", "group.character_table", std::vector<std::string>{});
    g.table = std::move(in);
  }
  return g;
}

ScanConfig parse_scan(const json& node) {
  ScanConfig s;
  if (node.is_null()) return s;
  s.beta_max = get(node, "beta_max", "scan", s.beta_max);
  s.options.beta_min = get(node, "beta_min", "scan", s.options.beta_min);
  s.options.grid_per_period = get(node, "grid_per_period", "scan", s.options.grid_per_period);
  s.options.newton_polish = get(node, "newton_polish", "scan", s.options.newton_polish);
  s.steady_state.u_max = get(node, "steady_state_u_max", "scan", s.steady_state.u_max);
  s.steady_state.samples = get(node, "steady_state_samples", "scan", s.steady_state.samples);
  if (!(s.beta_max > s.options.beta_min)) bad("scan.beta_max", "must exceed beta_min");
  if (s.options.grid_per_period < 4) bad("scan.grid_per_period", "must be >= 4");
  return s;
}

SimulateConfig parse_simulate(const json& node) {
  SimulateConfig s;
  if (node.is_null()) return s;
  if (node.contains("alpha")) s.alpha = get(node, "alpha", "simulate", 0.0);
  s.epsilon = get(node, "epsilon", "simulate", s.epsilon);
  if (auto p = node.find("perturbation"); p != node.end()) {
    if (p->is_string() && p->get<std::string>() == "random") {
      s.perturbation = Perturbation::Random;
    } else if (p->is_object()) {
      s.perturbation = Perturbation::Component;
      s.component = get(*p, "component", "simulate.perturbation", s.component);
      s.basis_index = get(*p, "basis_index", "simulate.perturbation", s.basis_index);
    } else {
      throw Error(ErrorCode::Parse,
                  "simulate.perturbation must be \"random\" or {\"component\": j}");
    }
  }
  s.periods = get(node, "periods", "simulate", s.periods);
  s.transient_periods = get(node, "transient_periods", "simulate", s.transient_periods);
  if (node.contains("t_end")) s.t_end = get(node, "t_end", "simulate", 0.0);
  if (node.contains("transient")) s.transient = get(node, "transient", "simulate", 0.0);
  s.dt = get(node, "dt", "simulate", s.dt);
  s.dt_out = get(node, "dt_out", "simulate", s.dt_out);
  if (auto q = node.find("quadrature"); q != node.end()) {
    if (!q->is_array() || q->size() != 2) {
      throw Error(ErrorCode::Parse, "simulate.quadrature must be [neutral, retarded]");
    }
    s.neutral_nodes = (*q)[0].get<int>();
    s.retarded_nodes = (*q)[1].get<int>();
  }
  s.seed = get<std::uint64_t>(node, "seed", "simulate", s.seed);
  s.divergence_bound = get(node, "divergence_bound", "simulate", s.divergence_bound);
  const std::string interp = get<std::string>(node, "interpolation", "simulate", "hermite");
  if (interp == "hermite") {
    s.interpolation = Interpolation::CubicHermite;
  } else if (interp == "lagrange") {
    s.interpolation = Interpolation::CubicLagrange;
  } else {
    throw Error(ErrorCode::Parse, "simulate.interpolation: unknown mode \"" + interp + "\"");
  }

  if (!(s.epsilon >= 0.0)) bad("simulate.epsilon", "must be >= 0");
  if (!(s.dt > 0.0)) bad("simulate.dt", "must be > 0");
  if (!(s.dt_out > 0.0)) bad("simulate.dt_out", "must be > 0");
  if (s.neutral_nodes < 1 || s.retarded_nodes < 1) bad("simulate.quadrature", "must be >= 1");
  if (!(s.periods > 0.0)) bad("simulate.periods", "must be > 0");
  if (!(s.transient_periods >= 0.0)) bad("simulate.transient_periods", "must be >= 0");
  if (s.t_end && !(*s.t_end > 0.0)) bad("simulate.t_end", "must be > 0");
  if (s.transient && !(*s.transient >= 0.0)) bad("simulate.transient", "must be >= 0");
  if (s.basis_index < 0) bad("simulate.perturbation.basis_index", "must be >= 0");
  return s;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "config must be a JSON object");
  RunConfig cfg;
  auto system = doc.find("system");
  if (system == doc.end()) throw Error(ErrorCode::MissingField, "system block is required");
  cfg.system = build_system(*system);

  auto group = doc.find("group");
  if (group == doc.end()) throw Error(ErrorCode::MissingField, "group block is required");
  cfg.group = parse_group(*group);

  cfg.scan = parse_scan(doc.value("scan", json()));
  cfg.simulate = parse_simulate(doc.value("simulate", json()));
  if (auto sweep = doc.find("sweep"); sweep != doc.end()) {
    cfg.sweep.alphas = get(*sweep, "alphas", "sweep", std::vector<double>{});
  }
  if (auto out = doc.find("output"); out != doc.end()) {
    cfg.output.dir = get(*out, "dir", "output", cfg.output.dir);
    const std::string fmt = get<std::string>(*out, "trajectory_format", "output", "csv");
    if (fmt == "csv") {
      cfg.output.trajectory_format = TrajectoryFormat::Csv;
    } else if (fmt == "binary") {
      cfg.output.trajectory_format = TrajectoryFormat::Binary;
    } else {
      throw Error(ErrorCode::Parse, "output.trajectory_format must be csv or binary");
    }
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

}  // namespace nh
