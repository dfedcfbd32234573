#include "nh/integrator.hpp"

#include "nh/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace nh {

QuadratureRule gauss_legendre(int k, double tau) {
  if (k < 1) throw Error(ErrorCode::InvariantViolation, "quadrature order must be >= 1");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvariantViolation, "quadrature interval must be > 0");
  std::vector<double> x(k), w(k);
  for (int i = 0; i < (k + 1) / 2; ++i) {
    // Chebyshev-like initial guess for the i-th largest root of P_k.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int m = 2; m <= k; ++m) {
        const double p2 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      if (k == 1) p0 = 1.0;
      // P_k = p1, P_{k-1} = p0.
      dp = k * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    if (k == 1) {
      z = 0.0;
      dp = 1.0;
    }
    x[i] = -z;
    x[k - 1 - i] = z;
    w[i] = w[k - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  QuadratureRule rule;
  rule.tau = tau;
  rule.nodes.resize(k);
  rule.weights.resize(k);
  for (int i = 0; i < k; ++i) {
    rule.nodes[i] = 0.5 * tau * (x[i] + 1.0);
    rule.weights[i] = 0.5 * tau * w[i];
  }
  return rule;
}

HistoryBuffer::HistoryBuffer(int dimension, double step, double window, double t0,
                             Interpolation mode)
    : n_(dimension), step_(step), t0_(t0), mode_(mode) {
  if (dimension < 1 || !(step > 0.0) || !(window >= 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "history buffer needs n >= 1 and step > 0");
  }
  capacity_ = static_cast<std::size_t>(std::ceil(window / step)) + 4;
  x_.assign(capacity_ * n_, 0.0);
  dx_.assign(capacity_ * n_, 0.0);
}

void HistoryBuffer::push(std::span<const double> x, std::span<const double> dx) {
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(dx.size()) != n_) {
    throw Error(ErrorCode::DimensionMismatch, "history sample has wrong dimension");
  }
  ++newest_;
  const std::size_t slot = static_cast<std::size_t>(newest_) % capacity_;
  std::copy(x.begin(), x.end(), x_.begin() + slot * n_);
  std::copy(dx.begin(), dx.end(), dx_.begin() + slot * n_);
  count_ = std::min(count_ + 1, capacity_);
}

double HistoryBuffer::newest_time() const noexcept { return t0_ + newest_ * step_; }

double HistoryBuffer::start_time() const noexcept {
  return t0_ + (newest_ - static_cast<long>(count_) + 1) * step_;
}

const double* HistoryBuffer::x_at(long k) const noexcept {
  return x_.data() + (static_cast<std::size_t>(k) % capacity_) * n_;
}

std::span<const double> HistoryBuffer::sample(std::size_t back) const {
  if (back >= count_) throw Error(ErrorCode::HistoryUnderrun, "sample not retained");
  return {x_at(newest_ - static_cast<long>(back)), static_cast<std::size_t>(n_)};
}

HistoryBuffer::Locator HistoryBuffer::locate(double t) const {
  const long oldest = newest_ - static_cast<long>(count_) + 1;
  const double u = (t - t0_) / step_;
  long k = static_cast<long>(std::floor(u));
  double theta = u - static_cast<double>(k);
  // Snap queries that land within rounding of a knot.
  if (theta > 1.0 - 1e-12) {
    ++k;
    theta = 0.0;
  } else if (theta < 1e-12) {
    theta = 0.0;
  }
  if (count_ == 0 || k < oldest || k > newest_ || (k == newest_ && theta > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "history query at t = " << t << " outside [" << start_time() << ", "
       << newest_time() << "]";
    throw Error(ErrorCode::HistoryUnderrun, os.str());
  }
  if (k == newest_) {  // exact hit on the newest knot
    --k;
    theta = 1.0;
  }
  return {k, theta};
}

namespace {

// Lagrange weights (and derivative weights) for the 4-point stencil at
// abscissae first, first+1, first+2, first+3 evaluated at u.
void lagrange4(double u, double first, double w[4], double dw[4]) {
  const double xs[4] = {first, first + 1, first + 2, first + 3};
  for (int i = 0; i < 4; ++i) {
    double num = 1.0, den = 1.0, d = 0.0;
    for (int m = 0; m < 4; ++m) {
      if (m == i) continue;
      den *= xs[i] - xs[m];
    }
    for (int m = 0; m < 4; ++m) {
      if (m == i) continue;
      num *= u - xs[m];
      double prod = 1.0;
      for (int r = 0; r < 4; ++r)
        if (r != i && r != m) prod *= u - xs[r];
      d += prod;
    }
    w[i] = num / den;
    dw[i] = d / den;
  }
}

}  // namespace

HistoryBuffer::Stencil HistoryBuffer::stencil(double t, bool rate) const {
  const Locator at = locate(t);
  const double th = at.theta;
  Stencil s;
  if (mode_ == Interpolation::CubicHermite) {
    s.terms = 2;
    s.back[0] = newest_ - at.k;
    s.back[1] = newest_ - at.k - 1;
    const double th2 = th * th, th3 = th2 * th;
    if (!rate) {
      s.wx[0] = 2 * th3 - 3 * th2 + 1;
      s.wd[0] = (th3 - 2 * th2 + th) * step_;
      s.wx[1] = -2 * th3 + 3 * th2;
      s.wd[1] = (th3 - th2) * step_;
    } else {
      s.wx[0] = (6 * th2 - 6 * th) / step_;
      s.wd[0] = 3 * th2 - 4 * th + 1;
      s.wx[1] = (-6 * th2 + 6 * th) / step_;
      s.wd[1] = 3 * th2 - 2 * th;
    }
    return s;
  }
  const long oldest = newest_ - static_cast<long>(count_) + 1;
  const long first = std::clamp(at.k - 1, oldest, std::max(oldest, newest_ - 3));
  double w[4], dw[4];
  lagrange4(static_cast<double>(at.k - first) + th, 0.0, w, dw);
  s.terms = 4;
  for (int i = 0; i < 4; ++i) {
    s.back[i] = newest_ - std::min(first + i, newest_);
    s.wx[i] = rate ? dw[i] / step_ : w[i];
  }
  return s;
}

void HistoryBuffer::apply(const Stencil& s, std::span<double> out) const {
  const auto cap = static_cast<long>(capacity_);
  const long head = static_cast<long>(static_cast<std::size_t>(newest_) % capacity_);
  for (int c = 0; c < n_; ++c) out[c] = 0.0;
  for (int i = 0; i < s.terms; ++i) {
    long slot = head - s.back[i];
    if (slot < 0) slot += cap;
    const double* xs = x_.data() + slot * n_;
    const double* ds = dx_.data() + slot * n_;
    const double a = s.wx[i], b = s.wd[i];
    if (b == 0.0) {
      for (int c = 0; c < n_; ++c) out[c] += a * xs[c];
    } else {
      for (int c = 0; c < n_; ++c) out[c] += a * xs[c] + b * ds[c];
    }
  }
}

void HistoryBuffer::value(double t, std::span<double> out) const { apply(stencil(t), out); }

void HistoryBuffer::derivative(double t, std::span<double> out) const {
  apply(stencil(t, true), out);
}

namespace {

// Scratch-owning evaluator for the delayed terms. Stencils are cached per
// half-step lag behind the newest knot, which covers every RK4 stage.
class DelayTerms {
 public:
  DelayTerms(const SystemSpec& spec, const QuadratureRule& neutral,
             const QuadratureRule& retarded)
      : spec_(spec), neutral_(neutral), retarded_(retarded), tmp_(spec.n), tmp_d_(spec.n) {}

  // sum_i w_i g(x(t - s_i))
  void neutral_integral(const HistoryBuffer& h, double t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (spec_.gamma == 0.0) return;
    const auto& st = stencils(h, t, neutral_, kNeutral);
    for (std::size_t i = 0; i < neutral_.size(); ++i) {
      h.apply(st[i], tmp_);
      const double w = neutral_.weights[i];
      for (int c = 0; c < spec_.n; ++c) out[c] += w * neutral_response(spec_, tmp_[c]);
    }
  }

  // d/dt sum_i w_i g(x(t - s_i))
  void neutral_integral_rate(const HistoryBuffer& h, double t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (spec_.gamma == 0.0) return;
    const auto& st = stencils(h, t, neutral_, kNeutral);
    const auto& sr = stencils(h, t, neutral_, kNeutralRate);
    for (std::size_t i = 0; i < neutral_.size(); ++i) {
      h.apply(st[i], tmp_);
      h.apply(sr[i], tmp_d_);
      const double w = neutral_.weights[i];
      for (int c = 0; c < spec_.n; ++c)
        out[c] += w * neutral_response_slope(spec_, tmp_[c]) * tmp_d_[c];
    }
  }

  // sum_i w_i x(t - s_i)
  void retarded_integral(const HistoryBuffer& h, double t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const auto& st = stencils(h, t, retarded_, kRetarded);
    for (std::size_t i = 0; i < retarded_.size(); ++i) {
      h.apply(st[i], tmp_);
      const double w = retarded_.weights[i];
      for (int c = 0; c < spec_.n; ++c) out[c] += w * tmp_[c];
    }
  }

 private:
  enum Kind { kNeutral, kNeutralRate, kRetarded, kKinds };
  using Stencils = std::vector<HistoryBuffer::Stencil>;

  const Stencils& stencils(const HistoryBuffer& h, double t, const QuadratureRule& rule,
                           Kind kind) {
    const double lag2 = 2.0 * (t - h.newest_time()) / h.step();
    const double key = std::nearbyint(lag2);
    const bool cacheable = std::abs(lag2 - key) < 1e-9 && key >= 0.0 && key < 4.0;
    Stencils* slot = cacheable ? &cache_[kind][static_cast<int>(key)] : &scratch_;
    if (!cacheable || slot->empty()) {
      slot->resize(rule.size());
      for (std::size_t i = 0; i < rule.size(); ++i)
        (*slot)[i] = h.stencil(t - rule.nodes[i], kind == kNeutralRate);
    }
    return *slot;
  }

  const SystemSpec& spec_;
  const QuadratureRule& neutral_;
  const QuadratureRule& retarded_;
  std::vector<double> tmp_;
  std::vector<double> tmp_d_;
  Stencils cache_[kKinds][4];
  Stencils scratch_;
};

void check_dimension(const SystemSpec& spec, std::size_t size, const char* what) {
  if (static_cast<int>(size) != spec.n) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has length " + std::to_string(size) + ", expected " +
                    std::to_string(spec.n));
  }
}

}  // namespace

void recover_state(const SystemSpec& spec, const QuadratureRule& neutral_rule,
                   const HistoryBuffer& history, double t, std::span<const double> y,
                   std::span<double> x) {
  check_dimension(spec, y.size(), "y");
  check_dimension(spec, x.size(), "x");
  DelayTerms terms(spec, neutral_rule, neutral_rule);
  terms.neutral_integral(history, t, x);
  for (int c = 0; c < spec.n; ++c) x[c] += y[c];
}

namespace {

// dy/dt from a recovered x and the retarded integral.
void assemble_rhs(const SystemSpec& spec, const Eigen::VectorXd& x,
                  std::span<const double> retarded, Eigen::VectorXd& coupling,
                  std::span<double> dydt) {
  coupling_response(spec, x, coupling);
  for (int c = 0; c < spec.n; ++c)
    dydt[c] = -spec.a * x[c] - spec.alpha * retarded_response(spec, retarded[c]) - coupling[c];
}

}  // namespace

void rhs(const SystemSpec& spec, const QuadratureRule& neutral_rule,
         const QuadratureRule& retarded_rule, const HistoryBuffer& history, double t,
         std::span<const double> y, std::span<double> dydt) {
  check_dimension(spec, y.size(), "y");
  check_dimension(spec, dydt.size(), "dy/dt");
  DelayTerms terms(spec, neutral_rule, retarded_rule);
  Eigen::VectorXd x(spec.n), coupling(spec.n);
  std::vector<double> retarded(spec.n);
  terms.neutral_integral(history, t, {x.data(), static_cast<std::size_t>(x.size())});
  for (int c = 0; c < spec.n; ++c) x[c] += y[c];
  terms.retarded_integral(history, t, retarded);
  assemble_rhs(spec, x, retarded, coupling, dydt);
}

InitialHistory InitialHistory::constant_state(Eigen::VectorXd x) {
  InitialHistory h;
  h.constant = std::move(x);
  return h;
}

InitialHistory InitialHistory::along(const Eigen::VectorXd& direction, double eps) {
  const double norm = direction.norm();
  if (norm == 0.0) return constant_state(Eigen::VectorXd::Zero(direction.size()));
  return constant_state(direction * (eps / norm));
}

InitialHistory InitialHistory::random(int n, double eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
  } while (v.norm() == 0.0);
  return along(v, eps);
}

double effective_step(const SystemSpec& spec, const IntegrationOptions& options) {
  const double s1 = gauss_legendre(options.neutral_nodes, spec.tau1).nodes.front();
  const double s2 = gauss_legendre(options.retarded_nodes, spec.tau2).nodes.front();
  return std::min(options.dt, 0.5 * std::min(s1, s2));
}

Trajectory integrate(const SystemSpec& spec, const InitialHistory& initial,
                     const IntegrationOptions& options) {
  const int n = spec.n;
  if (!(options.t_end > 0.0) || !(options.dt > 0.0) || !(options.dt_out > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "t_end, dt and dt_out must be positive");
  }
  if (!initial.function && initial.constant.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "initial history has wrong dimension");
  }
  const QuadratureRule neutral = gauss_legendre(options.neutral_nodes, spec.tau1);
  const QuadratureRule retarded = gauss_legendre(options.retarded_nodes, spec.tau2);

  Trajectory traj;
  traj.dimension = n;
  traj.meta.alpha = spec.alpha;
  traj.meta.neutral_nodes = options.neutral_nodes;
  traj.meta.retarded_nodes = options.retarded_nodes;

  const double s_min = std::min(neutral.nodes.front(), retarded.nodes.front());
  double h = options.dt;
  if (h > 0.5 * s_min) {
    h = 0.5 * s_min;
    std::ostringstream os;
    os.precision(8);
    os << "dt " << options.dt << " clamped to " << h << " (half the smallest quadrature node)";
    traj.meta.warnings.push_back(os.str());
  }
  const long steps = static_cast<long>(std::ceil(options.t_end / h - 1e-9));
  const long stride = std::max(1L, std::lround(options.dt_out / h));
  traj.meta.dt = h;
  traj.meta.dt_out = stride * h;

  const double window = std::max(spec.tau1, spec.tau2);
  const long prefill = static_cast<long>(std::ceil(window / h)) + 2;
  HistoryBuffer history(n, h, window + 2 * h, -prefill * h, options.interpolation);

  std::vector<double> x(n), dx(n, 0.0);
  for (long k = -prefill; k <= 0; ++k) {
    const double t = k * h;
    if (initial.function) {
      initial.function(t, x, dx);
    } else {
      std::copy(initial.constant.data(), initial.constant.data() + n, x.begin());
      std::fill(dx.begin(), dx.end(), 0.0);
    }
    history.push(x, dx);
  }

  DelayTerms terms(spec, neutral, retarded);
  Eigen::VectorXd xs(n), coupling(n);
  std::vector<double> ret(n), neutral_sum(n), rate(n);

  // F(t, y) into out; leaves the recovered x in xs.
  auto field = [&](double t, std::span<const double> y, std::span<double> out) {
    terms.neutral_integral(history, t, neutral_sum);
    for (int c = 0; c < n; ++c) xs[c] = y[c] + neutral_sum[c];
    terms.retarded_integral(history, t, ret);
    assemble_rhs(spec, xs, ret, coupling, out);
  };

  auto record = [&](double t, std::span<const double> state) {
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), state.begin(), state.end());
  };

  // y(0) = x(0) - sum w g(x(-s)).
  std::vector<double> y(n), k1(n), k2(n), k3(n), k4(n), stage(n);
  {
    std::span<const double> x0 = history.sample(0);
    terms.neutral_integral(history, 0.0, neutral_sum);
    for (int c = 0; c < n; ++c) y[c] = x0[c] - neutral_sum[c];
    record(0.0, x0);
  }
  field(0.0, y, k1);

  const double bound = options.divergence_bound;
  for (long step = 0; step < steps; ++step) {
    const double t = step * h;
    for (int c = 0; c < n; ++c) stage[c] = y[c] + 0.5 * h * k1[c];
    field(t + 0.5 * h, stage, k2);
    for (int c = 0; c < n; ++c) stage[c] = y[c] + 0.5 * h * k2[c];
    field(t + 0.5 * h, stage, k3);
    for (int c = 0; c < n; ++c) stage[c] = y[c] + h * k3[c];
    field(t + h, stage, k4);
    for (int c = 0; c < n; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);

    const double t_next = (step + 1) * h;
    field(t_next, y, k1);  // also recovers x(t_next) into xs
    if (options.interpolation == Interpolation::CubicHermite) {
      terms.neutral_integral_rate(history, t_next, rate);
      for (int c = 0; c < n; ++c) dx[c] = k1[c] + rate[c];
    }
    double sup = 0.0;
    for (int c = 0; c < n; ++c) {
      x[c] = xs[c];
      sup = std::max(sup, std::abs(x[c]));
    }
    if (!(sup <= bound)) {
      std::ostringstream os;
      os.precision(8);
      os << "|x|_inf = " << sup << " exceeds " << bound << " at t = " << t_next;
      throw Error(ErrorCode::Divergence, os.str());
    }
    history.push(x, dx);
    if ((step + 1) % stride == 0) record(t_next, x);
  }
  return traj;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw Error(ErrorCode::Parse, "truncated trajectory file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

constexpr char kMagic[8] = {'N', 'H', 'T', 'R', 'A', 'J', '1', '\0'};

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& traj, TrajectoryFormat format) {
  if (format == TrajectoryFormat::Csv) {
    out << 't';
    for (int c = 0; c < traj.dimension; ++c) out << ",x" << c + 1;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < traj.samples(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
      out << buf;
      for (double v : traj.state(i)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
      out << '\n';
    }
    return;
  }
  out.write(kMagic, sizeof kMagic);
  put_u64(out, traj.samples());
  put_u64(out, static_cast<std::uint64_t>(traj.dimension) + 1);
  for (std::size_t i = 0; i < traj.samples(); ++i) {
    put_f64(out, traj.times[i]);
    for (double v : traj.state(i)) put_f64(out, v);
  }
}

Trajectory read_trajectory_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(ErrorCode::Parse, "not a trajectory file (bad magic)");
  }
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (cols < 1) throw Error(ErrorCode::Parse, "trajectory file has no columns");
  Trajectory traj;
  traj.dimension = static_cast<int>(cols - 1);
  traj.times.reserve(rows);
  traj.states.reserve(rows * (cols - 1));
  for (std::uint64_t r = 0; r < rows; ++r) {
    traj.times.push_back(std::bit_cast<double>(get_u64(in)));
    for (std::uint64_t c = 1; c < cols; ++c)
      traj.states.push_back(std::bit_cast<double>(get_u64(in)));
  }
  return traj;
}

}  // namespace nh
