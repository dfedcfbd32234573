#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <span>
#include <string>
#include <vector>

namespace nh {

enum class ResponseKind { PiecewiseLinearSaturation, PureLinear };

// Parameters of the neutral multi-agent system
//
//   d/dt [ x - int_0^tau1 g(x(t-s)) ds ] = -a x - alpha f( int_0^tau2 x(t-s) ds ) - h(x)
//
// with g(x) = L(gamma x), f(y) = L(b y), h(x) = L(C x) applied per component.
struct SystemSpec {
  int n = 0;
  double a = 0.0;
  double alpha = 0.0;
  double b = 0.0;
  double gamma = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  Eigen::MatrixXd coupling;
  double saturation = 1.0;
  ResponseKind kind = ResponseKind::PiecewiseLinearSaturation;
  // Replaces the printed saturation by clamp(x, -L_sat, L_sat).
  bool continuous_saturation = false;
};

// Scalar saturation L. Linear on (-1, 1); +-limit outside unless `continuous`.
inline double saturate(double x, double limit, bool continuous) noexcept {
  if (continuous) return x > limit ? limit : (x < -limit ? -limit : x);
  if (x >= limit) return limit;
  if (x <= -limit) return -limit;
  if (x > -1.0 && x < 1.0) return x;
  return x > 0.0 ? limit : -limit;
}
// Derivative of L where it exists (0 on the flat parts and at the jumps).
double saturate_slope(double x, double limit, bool continuous) noexcept;

// Scalar responses of one spec: g, g' and f.
inline double neutral_response(const SystemSpec& spec, double x) noexcept {
  if (spec.kind == ResponseKind::PureLinear) return spec.gamma * x;
  return saturate(spec.gamma * x, spec.saturation, spec.continuous_saturation);
}
double neutral_response_slope(const SystemSpec& spec, double x) noexcept;
inline double retarded_response(const SystemSpec& spec, double y) noexcept {
  if (spec.kind == ResponseKind::PureLinear) return spec.b * y;
  return saturate(spec.b * y, spec.saturation, spec.continuous_saturation);
}

struct Responses {
  Eigen::VectorXd neutral;   // g(x)
  Eigen::VectorXd retarded;  // f(x), x read as the retarded integral
  Eigen::VectorXd coupling;  // h(x)
};

Responses eval_responses(const SystemSpec& spec, std::span<const double> x);

// h(x) written into `out` without allocation.
void coupling_response(const SystemSpec& spec, const Eigen::VectorXd& x,
                       Eigen::VectorXd& out);

struct Condition {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct ConditionReport {
  std::vector<Condition> conditions;
  // Lipschitz constant of g on its linear part.
  double kappa = 0.0;
  // Height of the jump of the printed saturation at |x| = 1 (0 when continuous).
  double saturation_jump = 0.0;

  bool all_pass() const noexcept;
  const Condition* find(std::string_view name) const noexcept;
};

// Builds the 8x8 cube coupling from the weights of the three vertex
// relations (edge, face diagonal, space diagonal). Vertices are labelled by
// 3-bit codes; the relation is the Hamming distance between labels.
Eigen::MatrixXd cube_coupling(double edge, double face_diagonal,
                              double space_diagonal);

// Validates a "system" configuration object. Throws Error(MissingField) or
// Error(InvariantViolation).
SystemSpec build_system(const nlohmann::json& config);

ConditionReport validate_structural(const SystemSpec& spec);
ConditionReport validate_stability_hypotheses(const SystemSpec& spec,
                                              std::span<const double> aj);

}  // namespace nh
