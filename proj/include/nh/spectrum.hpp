#pragma once

#include "nh/model.hpp"
#include "nh/symmetry.hpp"

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace nh {

using Complex = std::complex<double>;

// Scalar characteristic problem of one isotypic block (one eigenvalue mu of
// C on component j).
struct CharacteristicBlock {
  int j = 0;
  double a_j = 0.0;
  int multiplicity = 1;
  double gamma = 0.0;
  double b = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
};

CharacteristicBlock make_block(const SystemSpec& spec, int j, double mu, int multiplicity);
// One block per eigenvalue cluster of every component.
std::vector<CharacteristicBlock> make_blocks(const SystemSpec& spec,
                                             std::span<const IsotypicComponent> components);

// P_j(alpha, lambda) = lambda^2 + gamma (e^{-lambda tau1} - 1) lambda + a_j lambda
//                      - alpha b (e^{-lambda tau2} - 1)
Complex eval_quasipolynomial(const CharacteristicBlock& block, double alpha, Complex lambda);
// dP_j/dlambda.
Complex quasipolynomial_slope(const CharacteristicBlock& block, double alpha, Complex lambda);

// Right side of the frequency relation beta = phi_j(beta). Throws
// Error(SingularPoint) when |sin(beta tau2)| < 1e-14.
double phi(const CharacteristicBlock& block, double beta);
// alpha from the imaginary part of P_j(alpha, i beta) = 0.
double alpha_of_beta(const CharacteristicBlock& block, double beta);

struct Transversality {
  double p = 0.0;
  double q = 0.0;
  double rho = 0.0;
  double u_prime = 0.0;  // d Re(lambda) / d alpha at the crossing
};

// Throws Error(DegenerateCrossing) when p^2 + q^2 < 1e-14.
Transversality transversality(const CharacteristicBlock& block, double alpha, double beta);

// t = -sign(u') m. Throws Error(DegenerateCrossing) when u' == 0.
int crossing_number(double u_prime, int multiplicity);

struct CriticalPoint {
  int j = 0;
  int n = 0;  // 1-based ordinal along increasing beta
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  double p = 0.0;
  double q = 0.0;
  double rho = 0.0;
  double u_prime = 0.0;
  int multiplicity = 1;
  // Empty for degenerate crossings.
  std::optional<int> crossing_number;
};

struct ScanOptions {
  double beta_min = 1e-4;
  // Grid points per 2 pi / tau2.
  int grid_per_period = 200;
  double singular_halfwidth = 1e-9;
  double root_tolerance = 1e-12;
  bool newton_polish = false;
};

std::vector<CriticalPoint> find_critical_points(const CharacteristicBlock& block,
                                                double beta_max,
                                                const ScanOptions& options = {});

struct UnboundedCriterion {
  double lhs = 0.0;  // |gamma (tau1 - tau2)|
  double rhs = 0.0;  // |tau2 (gamma - a_j) - 2|
  bool holds = false;
};

UnboundedCriterion unbounded_criterion(const CharacteristicBlock& block);

struct StabilityVerdict {
  double alpha0 = 0.0;
  double beta0 = 0.0;
  int alpha0_component = -1;
  ConditionReport hypotheses;
  bool analytic_exclusion = false;  // b > 0, min a_j > 0, 0 < gamma tau1 <= 1
  bool scan_exclusion = false;      // numeric r(u) scan agrees
  bool steady_state_excluded = false;
  // (0, alpha0) is reported only when this is set.
  bool established = false;
};

struct SteadyStateScan {
  double u_max = 10.0;
  int samples = 10'000;
};

// Throws Error(NoCriticalPointsInRange) when `points` is empty.
StabilityVerdict stability_interval(const SystemSpec& spec,
                                    std::span<const CharacteristicBlock> blocks,
                                    std::span<const CriticalPoint> points,
                                    const SteadyStateScan& scan = {});

// True when r(u) + a_j > 0 and alpha b (e^{-u tau2} - 1) / u < 0 on the
// whole grid u_k = u_max k / samples, k = 1..samples.
bool steady_state_scan(const CharacteristicBlock& block, double alpha,
                       const SteadyStateScan& scan = {});

// Newton iteration on P_j(alpha, .) from `guess`.
Complex refine_root(const CharacteristicBlock& block, double alpha, Complex guess,
                    int max_iterations = 60);

// Number of zeros of P_j(alpha, .) inside the open rectangle, by the
// argument principle. Throws Error(SingularPoint) if a zero lies on the
// boundary.
int count_roots_in_rectangle(const CharacteristicBlock& block, double alpha,
                             double re_lo, double re_hi, double im_lo, double im_hi);

}  // namespace nh
