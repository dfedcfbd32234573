#include "nh/spectrum.hpp"

#include "nh/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nh {

CharacteristicBlock make_block(const SystemSpec& spec, int j, double mu, int multiplicity) {
  return {j, spec.a + mu, multiplicity, spec.gamma, spec.b, spec.tau1, spec.tau2};
}

std::vector<CharacteristicBlock> make_blocks(const SystemSpec& spec,
                                             std::span<const IsotypicComponent> components) {
  std::vector<CharacteristicBlock> blocks;
  for (const auto& c : components)
    for (const auto& e : c.eigenvalues)
      blocks.push_back(make_block(spec, c.j, e.mu, e.multiplicity));
  return blocks;
}

Complex eval_quasipolynomial(const CharacteristicBlock& k, double alpha, Complex lambda) {
  const Complex e1 = std::exp(-lambda * k.tau1);
  const Complex e2 = std::exp(-lambda * k.tau2);
  return lambda * lambda + k.gamma * (e1 - 1.0) * lambda + k.a_j * lambda -
         alpha * k.b * (e2 - 1.0);
}

Complex quasipolynomial_slope(const CharacteristicBlock& k, double alpha, Complex lambda) {
  const Complex e1 = std::exp(-lambda * k.tau1);
  const Complex e2 = std::exp(-lambda * k.tau2);
  return 2.0 * lambda + k.gamma * (e1 - 1.0) - k.gamma * k.tau1 * lambda * e1 + k.a_j +
         alpha * k.b * k.tau2 * e2;
}

namespace {

double checked_sin_tau2(const CharacteristicBlock& k, double beta) {
  const double s = std::sin(beta * k.tau2);
  if (std::abs(s) < 1e-14) {
    std::ostringstream os;
    os.precision(17);
    os << "sin(beta tau2) vanishes at beta = " << beta;
    throw Error(ErrorCode::SingularPoint, os.str());
  }
  return s;
}

}  // namespace

double phi(const CharacteristicBlock& k, double beta) {
  const double s2 = checked_sin_tau2(k, beta);
  const double c1 = std::cos(beta * k.tau1);
  return k.gamma * std::sin(beta * k.tau1) +
         (k.gamma * (c1 - 1.0) + k.a_j) * (std::cos(beta * k.tau2) - 1.0) / s2;
}

double alpha_of_beta(const CharacteristicBlock& k, double beta) {
  const double s2 = checked_sin_tau2(k, beta);
  if (k.b == 0.0) throw Error(ErrorCode::SingularPoint, "b = 0");
  return -beta * (k.gamma * (std::cos(beta * k.tau1) - 1.0) + k.a_j) / (k.b * s2);
}

Transversality transversality(const CharacteristicBlock& k, double alpha, double beta) {
  const double s1 = std::sin(beta * k.tau1), c1 = std::cos(beta * k.tau1);
  const double s2 = std::sin(beta * k.tau2), c2 = std::cos(beta * k.tau2);
  Transversality t;
  t.p = k.gamma * (c1 - 1.0) + k.a_j - k.gamma * beta * k.tau1 * s1 +
        alpha * k.b * k.tau2 * c2;
  t.q = k.gamma * s1 + k.gamma * beta * k.tau1 * c1 + alpha * k.b * k.tau2 * s2 -
        2.0 * beta;
  const double norm = t.p * t.p + t.q * t.q;
  if (norm < 1e-14) {
    std::ostringstream os;
    os.precision(17);
    os << "p^2 + q^2 = " << norm << " at (alpha, beta) = (" << alpha << ", " << beta << ")";
    throw Error(ErrorCode::DegenerateCrossing, os.str());
  }
  t.rho = t.p * k.b * (c2 - 1.0) + t.q * k.b * s2;
  t.u_prime = t.rho / norm;
  return t;
}

int crossing_number(double u_prime, int multiplicity) {
  if (u_prime == 0.0 || std::isnan(u_prime)) {
    throw Error(ErrorCode::DegenerateCrossing, "u' = 0: crossing number undefined");
  }
  return u_prime > 0.0 ? -multiplicity : multiplicity;
}

namespace {

// beta - phi(beta), evaluated away from the excluded windows.
double mismatch(const CharacteristicBlock& k, double beta) { return beta - phi(k, beta); }

// Pole-free pieces of [lo, hi] after removing windows around k pi / tau2.
std::vector<std::pair<double, double>> pole_free_segments(const CharacteristicBlock& k,
                                                          double lo, double hi,
                                                          double halfwidth) {
  std::vector<std::pair<double, double>> out;
  const double spacing = std::numbers::pi / k.tau2;
  double start = lo;
  for (long m = std::max(1L, static_cast<long>(std::floor(lo / spacing)));; ++m) {
    const double pole = m * spacing;
    if (pole - halfwidth >= hi) break;
    if (pole + halfwidth <= start) continue;
    if (pole - halfwidth > start) out.emplace_back(start, pole - halfwidth);
    start = pole + halfwidth;
  }
  if (start < hi) out.emplace_back(start, hi);
  return out;
}

double bisect(const CharacteristicBlock& k, double lo, double hi, double f_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = mismatch(k, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  const double f_hi = mismatch(k, hi);
  return std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
}

double polish(const CharacteristicBlock& k, double beta) {
  // Secant steps on beta - phi(beta); kept only if they improve the residual.
  double best = beta, best_f = std::abs(mismatch(k, beta));
  double x0 = beta, x1 = beta * (1.0 + 1e-9);
  double f0 = mismatch(k, x0), f1 = mismatch(k, x1);
  for (int it = 0; it < 8 && f1 != f0; ++it) {
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = mismatch(k, x1);
    if (std::abs(f1) < best_f) {
      best = x1;
      best_f = std::abs(f1);
    }
  }
  return best;
}

}  // namespace

std::vector<CriticalPoint> find_critical_points(const CharacteristicBlock& k,
                                                double beta_max,
                                                const ScanOptions& options) {
  std::vector<CriticalPoint> points;
  if (!(beta_max > options.beta_min)) return points;
  const double step = (2.0 * std::numbers::pi / k.tau2) / std::max(1, options.grid_per_period);

  for (const auto& [seg_lo, seg_hi] :
       pole_free_segments(k, options.beta_min, beta_max, options.singular_halfwidth)) {
    const auto cells = static_cast<long>(std::ceil((seg_hi - seg_lo) / step));
    double x0 = seg_lo;
    double f0 = mismatch(k, x0);
    for (long c = 1; c <= cells; ++c) {
      const double x1 = c == cells ? seg_hi : seg_lo + c * (seg_hi - seg_lo) / cells;
      const double f1 = mismatch(k, x1);
      if (f0 == 0.0 || (f0 < 0.0) != (f1 < 0.0)) {
        double beta = f0 == 0.0 ? x0 : bisect(k, x0, x1, f0);
        if (options.newton_polish) beta = polish(k, beta);
        const double f = mismatch(k, beta);
        const double alpha = alpha_of_beta(k, beta);
        if (std::abs(f) <= options.root_tolerance && alpha > 0.0) {
          CriticalPoint cp;
          cp.j = k.j;
          cp.alpha = alpha;
          cp.beta = beta;
          cp.multiplicity = k.multiplicity;
          cp.residual = std::abs(eval_quasipolynomial(k, alpha, Complex(0.0, beta)));
          if (cp.residual <= 1e-10 * (1.0 + std::abs(alpha) + beta * beta)) {
            try {
              const Transversality t = transversality(k, alpha, beta);
              cp.p = t.p;
              cp.q = t.q;
              cp.rho = t.rho;
              cp.u_prime = t.u_prime;
              if (t.u_prime != 0.0) cp.crossing_number = crossing_number(t.u_prime, k.multiplicity);
            } catch (const Error&) {
              cp.u_prime = 0.0;
            }
            if (points.empty() || beta > points.back().beta) points.push_back(cp);
          }
        }
      }
      x0 = x1;
      f0 = f1;
    }
  }
  std::sort(points.begin(), points.end(),
            [](const CriticalPoint& l, const CriticalPoint& r) { return l.beta < r.beta; });
  for (std::size_t i = 0; i < points.size(); ++i) points[i].n = static_cast<int>(i + 1);
  return points;
}

UnboundedCriterion unbounded_criterion(const CharacteristicBlock& k) {
  UnboundedCriterion u;
  u.lhs = std::abs(k.gamma * (k.tau1 - k.tau2));
  u.rhs = std::abs(k.tau2 * (k.gamma - k.a_j) - 2.0);
  u.holds = u.lhs < u.rhs;
  return u;
}

bool steady_state_scan(const CharacteristicBlock& k, double alpha,
                       const SteadyStateScan& scan) {
  for (int i = 1; i <= scan.samples; ++i) {
    const double u = scan.u_max * i / scan.samples;
    const double r = u + k.gamma * std::exp(-u * k.tau1) - k.gamma;
    const double rhs = alpha * k.b * std::expm1(-u * k.tau2) / u;
    if (!(r + k.a_j > 0.0) || !(rhs < 0.0)) return false;
  }
  return true;
}

StabilityVerdict stability_interval(const SystemSpec& spec,
                                    std::span<const CharacteristicBlock> blocks,
                                    std::span<const CriticalPoint> points,
                                    const SteadyStateScan& scan) {
  if (points.empty()) {
    throw Error(ErrorCode::NoCriticalPointsInRange,
                "no critical point found in the scanned beta range");
  }
  StabilityVerdict v;
  const auto first = std::min_element(
      points.begin(), points.end(),
      [](const CriticalPoint& l, const CriticalPoint& r) { return l.alpha < r.alpha; });
  v.alpha0 = first->alpha;
  v.beta0 = first->beta;
  v.alpha0_component = first->j;

  std::vector<double> aj;
  for (const auto& b : blocks) aj.push_back(b.a_j);
  v.hypotheses = validate_stability_hypotheses(spec, aj);
  v.analytic_exclusion = v.hypotheses.all_pass();
  v.scan_exclusion = !blocks.empty() &&
                     std::all_of(blocks.begin(), blocks.end(), [&](const CharacteristicBlock& b) {
                       return steady_state_scan(b, v.alpha0, scan);
                     });
  v.steady_state_excluded = v.analytic_exclusion && v.scan_exclusion;
  v.established = v.hypotheses.all_pass() && v.steady_state_excluded;
  return v;
}

Complex refine_root(const CharacteristicBlock& k, double alpha, Complex guess,
                    int max_iterations) {
  Complex z = guess;
  for (int it = 0; it < max_iterations; ++it) {
    const Complex step = eval_quasipolynomial(k, alpha, z) / quasipolynomial_slope(k, alpha, z);
    z -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
  }
  return z;
}

namespace {

struct ArgumentWalk {
  const CharacteristicBlock& block;
  double alpha;
  double floor;

  // Accumulated change of arg P along the straight segment z0 -> z1.
  double segment(Complex z0, Complex p0, Complex z1, Complex p1, int depth) const {
    const double turn = std::arg(p1 / p0);
    if (std::abs(turn) < std::numbers::pi / 16.0 || depth > 48) return turn;
    const Complex zm = 0.5 * (z0 + z1);
    const Complex pm = value(zm);
    return segment(z0, p0, zm, pm, depth + 1) + segment(zm, pm, z1, p1, depth + 1);
  }

  Complex value(Complex z) const {
    const Complex p = eval_quasipolynomial(block, alpha, z);
    if (std::abs(p) <= floor) {
      std::ostringstream os;
      os.precision(17);
      os << "characteristic function vanishes on the contour near " << z.real() << " + "
         << z.imag() << "i";
      throw Error(ErrorCode::SingularPoint, os.str());
    }
    return p;
  }
};

}  // namespace

int count_roots_in_rectangle(const CharacteristicBlock& k, double alpha, double re_lo,
                             double re_hi, double im_lo, double im_hi) {
  const ArgumentWalk walk{k, alpha, 1e-300};
  const Complex corners[5] = {{re_lo, im_lo}, {re_hi, im_lo}, {re_hi, im_hi},
                              {re_lo, im_hi}, {re_lo, im_lo}};
  constexpr int kPieces = 64;
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    Complex z0 = corners[e];
    Complex p0 = walk.value(z0);
    for (int s = 1; s <= kPieces; ++s) {
      const Complex z1 = corners[e] + (corners[e + 1] - corners[e]) * (double(s) / kPieces);
      const Complex p1 = walk.value(z1);
      total += walk.segment(z0, p0, z1, p1, 0);
      z0 = z1;
      p0 = p1;
    }
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

}  // namespace nh
