#pragma once

#include "nh/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nh {

// Gauss-Legendre rule mapped onto [0, tau].
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing, inside (0, tau)
  std::vector<double> weights;  // positive, sum to tau
  double tau = 0.0;

  std::size_t size() const noexcept { return nodes.size(); }
};

QuadratureRule gauss_legendre(int k, double tau);

enum class Interpolation { CubicHermite, CubicLagrange };

// Uniformly sampled past of the state: x and dx/dt at t0 + k*step. Keeps
// the most recent `window` time units (plus a few guard samples).
class HistoryBuffer {
 public:
  HistoryBuffer(int dimension, double step, double window, double t0,
                Interpolation mode = Interpolation::CubicHermite);

  // Appends the sample at newest_time() + step (or at t0 for the first push).
  void push(std::span<const double> x, std::span<const double> dx);

  int dimension() const noexcept { return n_; }
  double step() const noexcept { return step_; }
  bool empty() const noexcept { return count_ == 0; }
  double newest_time() const noexcept;
  // Oldest time still available for queries.
  double start_time() const noexcept;
  Interpolation mode() const noexcept { return mode_; }

  // Interpolated x(t) and dx/dt(t). Throws Error(HistoryUnderrun) for
  // t outside [start_time(), newest_time()].
  void value(double t, std::span<double> out) const;
  void derivative(double t, std::span<double> out) const;

  // Stored sample k steps back from the newest (0 = newest).
  std::span<const double> sample(std::size_t back) const;

  // Interpolation weights with knots addressed relative to the newest
  // sample. A stencil built for t stays valid for t + m * step after m
  // further pushes, which lets fixed-lag queries skip the lookup.
  struct Stencil {
    int terms = 0;
    long back[4] = {0, 0, 0, 0};
    double wx[4] = {0, 0, 0, 0};
    double wd[4] = {0, 0, 0, 0};
  };
  // Weights for x(t), or for dx/dt(t) when `rate` is set. Throws like value().
  Stencil stencil(double t, bool rate = false) const;
  void apply(const Stencil& s, std::span<double> out) const;

 private:
  struct Locator {
    long k;        // left knot
    double theta;  // in [0, 1]
  };
  Locator locate(double t) const;
  const double* x_at(long k) const noexcept;

  int n_;
  double step_;
  double t0_;
  Interpolation mode_;
  std::size_t capacity_;
  long newest_ = -1;  // global index of newest sample
  std::size_t count_ = 0;
  std::vector<double> x_;
  std::vector<double> dx_;
};

// Explicit recovery of x(t) from y(t) = x(t) - int_0^tau1 g(x(t-s)) ds; all
// quadrature nodes are interior so only strictly past values are read.
void recover_state(const SystemSpec& spec, const QuadratureRule& neutral_rule,
                   const HistoryBuffer& history, double t, std::span<const double> y,
                   std::span<double> x);

// dy/dt = -a x - alpha f(int_0^tau2 x(t-s) ds) - h(x) with x recovered from y.
void rhs(const SystemSpec& spec, const QuadratureRule& neutral_rule,
         const QuadratureRule& retarded_rule, const HistoryBuffer& history, double t,
         std::span<const double> y, std::span<double> dydt);

// History on t <= 0. Either a constant vector, or a callable filling x(t)
// and dx/dt(t).
struct InitialHistory {
  Eigen::VectorXd constant;
  std::function<void(double t, std::span<double> x, std::span<double> dx)> function;

  static InitialHistory constant_state(Eigen::VectorXd x);
  // eps * direction / |direction|.
  static InitialHistory along(const Eigen::VectorXd& direction, double eps);
  // eps * (unit vector with seeded Gaussian direction).
  static InitialHistory random(int n, double eps, std::uint64_t seed);
};

struct IntegrationOptions {
  double t_end = 100.0;
  double dt = 5e-3;
  double dt_out = 0.1;
  int neutral_nodes = 50;
  int retarded_nodes = 50;
  Interpolation interpolation = Interpolation::CubicHermite;
  double divergence_bound = 1e6;
};

struct TrajectoryMeta {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int neutral_nodes = 0;
  int retarded_nodes = 0;
  double dt = 0.0;      // step actually used
  double dt_out = 0.0;  // spacing of the stored samples
  double t_cut = 0.0;   // start of the retained window
  std::vector<std::string> warnings;
};

struct Trajectory {
  int dimension = 0;
  std::vector<double> times;
  std::vector<double> states;  // row-major, times.size() x dimension
  TrajectoryMeta meta;

  std::size_t samples() const noexcept { return times.size(); }
  std::span<const double> state(std::size_t i) const {
    return {states.data() + i * static_cast<std::size_t>(dimension),
            static_cast<std::size_t>(dimension)};
  }
  Eigen::Map<const Eigen::VectorXd> state_vector(std::size_t i) const {
    return {states.data() + i * static_cast<std::size_t>(dimension), dimension};
  }
};

// Classical RK4 on y with delayed lookups from the stored x-history. Step
// is clamped to half the smallest quadrature node (recorded as a warning).
// Throws Error(Divergence) when |x|_inf exceeds options.divergence_bound.
Trajectory integrate(const SystemSpec& spec, const InitialHistory& initial,
                     const IntegrationOptions& options);

// Stored step for given options: min(dt, s_min / 2).
double effective_step(const SystemSpec& spec, const IntegrationOptions& options);

enum class TrajectoryFormat { Csv, Binary };

// CSV: header "t,x1,..,xn", 17 significant digits.
// Binary: "NHTRAJ1\0", u64 rows, u64 columns (= n + 1), then row-major
// little-endian f64 values (t, x1..xn) per row.
void write_trajectory(std::ostream& out, const Trajectory& traj, TrajectoryFormat format);
Trajectory read_trajectory_binary(std::istream& in);

}  // namespace nh
