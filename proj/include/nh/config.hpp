#pragma once

#include "nh/integrator.hpp"
#include "nh/model.hpp"
#include "nh/spectrum.hpp"
#include "nh/symmetry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nh {

struct GroupConfig {
  // "bundled:S4": cube rotations with the stored S4 table.
  bool bundled_s4 = false;
  std::vector<std::string> generators;
  // Required unless the generated group is trivial.
  std::optional<CharacterTableInput> table;
  std::size_t max_order = kDefaultGroupCap;
};

struct ScanConfig {
  double beta_max = 0.35;
  ScanOptions options;
  SteadyStateScan steady_state;
};

enum class Perturbation { Component, Random };

struct SimulateConfig {
  std::optional<double> alpha;  // system.alpha when absent
  double epsilon = 1e-2;
  Perturbation perturbation = Perturbation::Component;
  int component = 1;  // component label j
  int basis_index = 0;
  // Horizon in predicted periods 2 pi / beta0 unless t_end is given.
  double periods = 40.0;
  double transient_periods = 40.0;
  std::optional<double> t_end;
  std::optional<double> transient;
  double dt = 5e-3;
  double dt_out = 0.5;
  int neutral_nodes = 50;
  int retarded_nodes = 50;
  Interpolation interpolation = Interpolation::CubicHermite;
  std::uint64_t seed = 0;
  double divergence_bound = 1e6;
};

struct SweepConfig {
  std::vector<double> alphas;
};

struct OutputConfig {
  std::string dir = "out";
  TrajectoryFormat trajectory_format = TrajectoryFormat::Csv;
};

struct RunConfig {
  SystemSpec system;
  GroupConfig group;
  ScanConfig scan;
  SimulateConfig simulate;
  SweepConfig sweep;
  OutputConfig output;
};

// Throws Error(Parse), Error(MissingField) or Error(InvariantViolation).
RunConfig parse_config(const nlohmann::json& document);
RunConfig parse_config_text(const std::string& text);
// Throws Error(Io) when the file cannot be read.
RunConfig load_config(const std::string& path);

}  // namespace nh
