#include "nh/model.hpp"

#include "nh/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace nh {

double saturate_slope(double x, double limit, bool continuous) noexcept {
  const double linear_edge = continuous ? limit : std::min(1.0, limit);
  return std::abs(x) < linear_edge ? 1.0 : 0.0;
}

double neutral_response_slope(const SystemSpec& spec, double x) noexcept {
  if (spec.kind == ResponseKind::PureLinear) return spec.gamma;
  return spec.gamma *
         saturate_slope(spec.gamma * x, spec.saturation, spec.continuous_saturation);
}

void coupling_response(const SystemSpec& spec, const Eigen::VectorXd& x,
                       Eigen::VectorXd& out) {
  out.noalias() = spec.coupling * x;
  if (spec.kind == ResponseKind::PureLinear) return;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = saturate(out[i], spec.saturation, spec.continuous_saturation);
}

Responses eval_responses(const SystemSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.n) {
    throw Error(ErrorCode::DimensionMismatch,
                "state has length " + std::to_string(x.size()) + ", expected " +
                    std::to_string(spec.n));
  }
  Responses r;
  r.neutral.resize(spec.n);
  r.retarded.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    r.neutral[i] = neutral_response(spec, x[i]);
    r.retarded[i] = retarded_response(spec, x[i]);
  }
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), spec.n);
  coupling_response(spec, v, r.coupling);
  return r;
}

bool ConditionReport::all_pass() const noexcept {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const Condition& c) { return c.pass; });
}

const Condition* ConditionReport::find(std::string_view name) const noexcept {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

Eigen::MatrixXd cube_coupling(double edge, double face_diagonal,
                              double space_diagonal) {
  const double weight[4] = {0.0, edge, face_diagonal, space_diagonal};
  Eigen::MatrixXd c(8, 8);
  for (unsigned i = 0; i < 8; ++i)
    for (unsigned j = 0; j < 8; ++j) c(i, j) = weight[std::popcount(i ^ j)];
  return c;
}

namespace {

double required_number(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::MissingField, std::string("system.") + key + " is required");
  }
  if (!it->is_number()) {
    throw Error(ErrorCode::Parse, std::string("system.") + key + " must be a number");
  }
  return it->get<double>();
}

[[noreturn]] void violation(const std::string& field, const std::string& bound,
                            double value) {
  std::ostringstream os;
  os.precision(17);
  os << "system." << field << " = " << value << " violates " << bound;
  throw Error(ErrorCode::InvariantViolation, os.str());
}

Eigen::MatrixXd parse_coupling(const nlohmann::json& node, int n) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  if (node.is_array()) {
    if (static_cast<int>(node.size()) != n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "system.coupling has " + std::to_string(node.size()) +
                      " rows, expected " + std::to_string(n));
    }
    for (int i = 0; i < n; ++i) {
      const auto& row = node[i];
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        throw Error(ErrorCode::DimensionMismatch,
                    "system.coupling row " + std::to_string(i + 1) +
                        " must have " + std::to_string(n) + " entries");
      }
      for (int j = 0; j < n; ++j) c(i, j) = row[j].get<double>();
    }
    return c;
  }
  if (!node.is_object()) {
    throw Error(ErrorCode::Parse, "system.coupling must be a matrix or an object");
  }
  if (auto cube = node.find("cube"); cube != node.end()) {
    if (n != 8) {
      throw Error(ErrorCode::DimensionMismatch, "cube coupling requires n = 8");
    }
    return cube_coupling(cube->value("edges", 0.0), cube->value("face_diagonals", 0.0),
                         cube->value("space_diagonals", 0.0));
  }
  if (auto adj = node.find("adjacency"); adj != node.end()) {
    for (const auto& pattern : *adj) {
      const double w = pattern.at("weight").get<double>();
      for (const auto& pair : pattern.at("pairs")) {
        const int i = pair.at(0).get<int>() - 1;
        const int j = pair.at(1).get<int>() - 1;
        if (i < 0 || j < 0 || i >= n || j >= n) {
          throw Error(ErrorCode::DimensionMismatch,
                      "adjacency pair (" + std::to_string(i + 1) + "," +
                          std::to_string(j + 1) + ") out of range");
        }
        c(i, j) += w;
        if (i != j) c(j, i) += w;
      }
    }
    return c;
  }
  throw Error(ErrorCode::Parse,
              "system.coupling object needs a \"cube\" or \"adjacency\" key");
}

}  // namespace

SystemSpec build_system(const nlohmann::json& config) {
  if (!config.is_object()) {
    throw Error(ErrorCode::Parse, "system block must be an object");
  }
  SystemSpec spec;
  const double n = required_number(config, "n");
  if (n < 1 || n != std::floor(n)) violation("n", "n >= 1 (integer)", n);
  spec.n = static_cast<int>(n);
  spec.a = required_number(config, "a");
  spec.b = required_number(config, "b");
  spec.gamma = required_number(config, "gamma");
  spec.tau1 = required_number(config, "tau1");
  spec.tau2 = required_number(config, "tau2");
  spec.alpha = config.contains("alpha") ? required_number(config, "alpha") : 0.0;

  const std::string kind = config.value("nonlinearity", "piecewise_linear_saturation");
  if (kind == "piecewise_linear_saturation") {
    spec.kind = ResponseKind::PiecewiseLinearSaturation;
    spec.saturation = required_number(config, "L_sat");
    if (!(spec.saturation > 0.0)) violation("L_sat", "L_sat > 0", spec.saturation);
  } else if (kind == "pure_linear") {
    spec.kind = ResponseKind::PureLinear;
    spec.saturation = config.contains("L_sat") ? required_number(config, "L_sat") : 1.0;
  } else {
    throw Error(ErrorCode::Parse, "system.nonlinearity: unknown kind \"" + kind + "\"");
  }
  spec.continuous_saturation = config.value("continuous_saturation", false);

  if (!(spec.tau1 > 0.0)) violation("tau1", "tau1 > 0", spec.tau1);
  if (!(spec.tau2 > 0.0)) violation("tau2", "tau2 > 0", spec.tau2);
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0))
    violation("gamma", "0 < gamma < 1", spec.gamma);
  if (spec.b == 0.0) violation("b", "b != 0", spec.b);

  auto coupling = config.find("coupling");
  if (coupling == config.end()) {
    throw Error(ErrorCode::MissingField, "system.coupling is required");
  }
  spec.coupling = parse_coupling(*coupling, spec.n);
  const double defect = (spec.coupling - spec.coupling.transpose()).cwiseAbs().maxCoeff();
  if (defect > 1e-12) violation("coupling", "symmetry |C - C^T| <= 1e-12", defect);
  return spec;
}

namespace {

// Largest |r(x) + r(-x)| over a symmetric grid covering both saturation edges.
template <class F>
double oddness_defect(F&& response, double span) {
  double worst = 0.0;
  constexpr int kSamples = 2001;
  for (int i = 0; i < kSamples; ++i) {
    const double x = span * (static_cast<double>(i) / (kSamples - 1));
    worst = std::max(worst, std::abs(response(x) + response(-x)));
  }
  return worst;
}

}  // namespace

ConditionReport validate_structural(const SystemSpec& spec) {
  ConditionReport report;
  const double reach = 4.0 * std::max(1.0, spec.saturation);
  const double odd_g = oddness_defect(
      [&](double x) { return neutral_response(spec, x); },
      reach / std::max(spec.gamma, 1e-12));
  const double odd_f = oddness_defect(
      [&](double x) { return retarded_response(spec, x); },
      reach / std::max(std::abs(spec.b), 1e-12));
  const double odd_h = oddness_defect(
      [&](double x) {
        return spec.kind == ResponseKind::PureLinear
                   ? x
                   : saturate(x, spec.saturation, spec.continuous_saturation);
      },
      reach);
  const double odd = std::max({odd_g, odd_f, odd_h});
  report.conditions.push_back({"C1_odd_responses", odd == 0.0, odd,
                               "max |r(x) + r(-x)| over a grid"});

  report.conditions.push_back({"C2a_b_nonzero", spec.b != 0.0, spec.b, "b != 0"});
  report.conditions.push_back({"C2b_gamma_in_unit_interval",
                               spec.gamma > 0.0 && spec.gamma < 1.0, spec.gamma,
                               "0 < gamma < 1"});

  double symmetry_defect = 0.0;
  if (spec.coupling.rows() == spec.n && spec.coupling.cols() == spec.n && spec.n > 0) {
    symmetry_defect = (spec.coupling - spec.coupling.transpose()).cwiseAbs().maxCoeff();
  } else {
    symmetry_defect = std::numeric_limits<double>::infinity();
  }
  report.conditions.push_back({"C2c_coupling_symmetric", symmetry_defect <= 1e-12,
                               symmetry_defect, "max |C - C^T|"});

  report.kappa = std::abs(spec.gamma);
  if (spec.kind == ResponseKind::PiecewiseLinearSaturation && !spec.continuous_saturation)
    report.saturation_jump = std::max(0.0, spec.saturation - 1.0);
  report.conditions.push_back({"C3_neutral_contraction", report.kappa < 1.0,
                               report.kappa, "Lipschitz constant of g (slope gamma)"});
  return report;
}

ConditionReport validate_stability_hypotheses(const SystemSpec& spec,
                                              std::span<const double> aj) {
  ConditionReport report;
  const double gt = spec.gamma * spec.tau1;
  report.conditions.push_back(
      {"gamma_tau1", gt > 0.0 && gt <= 1.0, gt, "0 < gamma*tau1 <= 1"});
  report.conditions.push_back({"b_positive", spec.b > 0.0, spec.b, "b > 0"});
  const double min_aj = aj.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : *std::min_element(aj.begin(), aj.end());
  report.conditions.push_back(
      {"min_aj_positive", !aj.empty() && min_aj > 0.0, min_aj, "min_j a_j > 0"});
  report.kappa = std::abs(spec.gamma);
  return report;
}

}  // namespace nh
