#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "nh/error.hpp"
#include "nh/integrator.hpp"
#include "nh/study.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace {

nh::ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const nh::Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return nh::ErrorCode::Usage;
}

// Scalar linear system with a real characteristic root, so x = exp(lambda t)
// is an exact solution for all t.
struct ScalarLinear {
  nh::SystemSpec spec;
  double lambda = 0.0;
  int nodes = 6;

  ScalarLinear() {
    spec.n = 1;
    spec.a = 0.5;
    spec.alpha = -1.0;
    spec.b = 0.2;
    spec.gamma = 0.1;
    spec.tau1 = 1.0;
    spec.tau2 = 2.0;
    spec.coupling = Eigen::MatrixXd::Zero(1, 1);
    spec.kind = nh::ResponseKind::PureLinear;
    // Characteristic equation with the same quadrature the integrator uses.
    const auto q1 = nh::gauss_legendre(nodes, spec.tau1);
    const auto q2 = nh::gauss_legendre(nodes, spec.tau2);
    auto f = [&](double l) {
      double s1 = 0, s2 = 0;
      for (std::size_t i = 0; i < q1.size(); ++i) s1 += q1.weights[i] * std::exp(-l * q1.nodes[i]);
      for (std::size_t i = 0; i < q2.size(); ++i) s2 += q2.weights[i] * std::exp(-l * q2.nodes[i]);
      return l * (1.0 - spec.gamma * s1) + spec.a + spec.alpha * spec.b * s2;
    };
    double lo = -0.1, hi = -0.001;
    REQUIRE(f(lo) < 0.0);
    REQUIRE(f(hi) > 0.0);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    lambda = 0.5 * (lo + hi);
  }

  nh::InitialHistory history() const {
    nh::InitialHistory h;
    const double l = lambda;
    h.function = [l](double t, std::span<double> x, std::span<double> dx) {
      x[0] = std::exp(l * t);
      dx[0] = l * x[0];
    };
    return h;
  }

  double error_at_end(double dt, double t_end) const {
    nh::IntegrationOptions o;
    o.t_end = t_end;
    o.dt = dt;
    o.dt_out = t_end;
    o.neutral_nodes = nodes;
    o.retarded_nodes = nodes;
    const auto traj = nh::integrate(spec, history(), o);
    return std::abs(traj.states.back() - std::exp(lambda * traj.times.back()));
  }
};

const nh::RunConfig& cube() {
  static const nh::RunConfig cfg = fixtures::bundled();
  return cfg;
}

nh::IntegrationOptions short_run() {
  nh::IntegrationOptions o;
  o.t_end = 40.0;
  o.dt = 0.025;
  o.dt_out = 0.5;
  o.neutral_nodes = 20;
  o.retarded_nodes = 20;
  return o;
}

}  // namespace

TEST_CASE("Gauss-Legendre rule") {
  for (int k : {1, 2, 5, 50}) {
    const auto q = nh::gauss_legendre(k, 60.0);
    CHECK(q.size() == static_cast<std::size_t>(k));
    CHECK(std::accumulate(q.weights.begin(), q.weights.end(), 0.0) ==
          doctest::Approx(60.0).epsilon(1e-13));
    CHECK(q.nodes.front() > 0.0);
    CHECK(q.nodes.back() < 60.0);
    for (std::size_t i = 1; i < q.size(); ++i) CHECK(q.nodes[i] > q.nodes[i - 1]);
    for (double w : q.weights) CHECK(w > 0.0);
  }
  // Exact for polynomials of degree 2k - 1: int_0^1 s^99 ds with k = 50.
  const auto q = nh::gauss_legendre(50, 1.0);
  double s = 0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], 99);
  CHECK(s == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(code_of([] { nh::gauss_legendre(0, 1.0); }) == nh::ErrorCode::InvariantViolation);
}

TEST_CASE("history interpolation") {
  const double h = 0.1;
  auto cubic = [](double t) { return 1.0 - 2.0 * t + 0.5 * t * t + 0.25 * t * t * t; };
  auto slope = [](double t) { return -2.0 + t + 0.75 * t * t; };
  for (auto mode : {nh::Interpolation::CubicHermite, nh::Interpolation::CubicLagrange}) {
    nh::HistoryBuffer buf(1, h, 2.0, -1.0, mode);
    for (int k = 0; k <= 20; ++k) {
      const double t = -1.0 + k * h, x = cubic(t), dx = slope(t);
      buf.push({&x, 1}, {&dx, 1});
    }
    CHECK(buf.newest_time() == doctest::Approx(1.0));
    double v = 0;
    for (double t : {-0.93, -0.5, 0.0, 0.37, 0.999}) {
      buf.value(t, {&v, 1});
      CHECK(v == doctest::Approx(cubic(t)).epsilon(1e-12));
      buf.derivative(t, {&v, 1});
      CHECK(v == doctest::Approx(slope(t)).epsilon(1e-10));
    }
    CHECK(code_of([&] { buf.value(1.01, {&v, 1}); }) == nh::ErrorCode::HistoryUnderrun);
    CHECK(code_of([&] { buf.value(-1.2, {&v, 1}); }) == nh::ErrorCode::HistoryUnderrun);
  }
}

TEST_CASE("history buffer drops samples outside its window") {
  nh::HistoryBuffer buf(2, 0.5, 1.0, 0.0);
  const double x[2] = {1, 2}, dx[2] = {0, 0};
  for (int k = 0; k < 40; ++k) buf.push(x, dx);
  CHECK(buf.newest_time() == doctest::Approx(19.5));
  CHECK(buf.start_time() <= 18.5);
  CHECK(buf.start_time() > 10.0);
  double out[2];
  CHECK(code_of([&] { buf.value(5.0, out); }) == nh::ErrorCode::HistoryUnderrun);
  const double bad[3] = {0, 0, 0};
  CHECK(code_of([&] { buf.push(bad, bad); }) == nh::ErrorCode::DimensionMismatch);
}

TEST_CASE("state recovery matches a fine trapezoid oracle") {
  nh::SystemSpec spec = cube().system;
  spec.n = 2;
  spec.coupling = Eigen::MatrixXd::Zero(2, 2);
  auto xt = [](double t, int c) { return c == 0 ? 3.0 * std::sin(0.3 * t) : 2.0 * std::cos(0.11 * t + 1); };
  auto dxt = [](double t, int c) {
    return c == 0 ? 0.9 * std::cos(0.3 * t) : -0.22 * std::sin(0.11 * t + 1);
  };
  const double h = 0.01;
  nh::HistoryBuffer buf(2, h, spec.tau1 + 1.0, -spec.tau1 - 0.5);
  for (int k = 0; k <= static_cast<int>((spec.tau1 + 0.5) / h + 0.5); ++k) {
    const double t = -spec.tau1 - 0.5 + k * h;
    const double x[2] = {xt(t, 0), xt(t, 1)}, dx[2] = {dxt(t, 0), dxt(t, 1)};
    buf.push(x, dx);
  }
  const double t = buf.newest_time();
  const auto rule = nh::gauss_legendre(50, spec.tau1);
  const int m = 1000000;
  double y[2], got[2];
  for (int c = 0; c < 2; ++c) {
    double integral = 0;
    for (int i = 0; i <= m; ++i) {
      const double s = spec.tau1 * i / m;
      const double w = (i == 0 || i == m) ? 0.5 : 1.0;
      integral += w * nh::neutral_response(spec, xt(t - s, c));
    }
    integral *= spec.tau1 / m;
    y[c] = xt(t, c) - integral;
  }
  nh::recover_state(spec, rule, buf, t, y, got);
  for (int c = 0; c < 2; ++c) CHECK(std::abs(got[c] - xt(t, c)) < 1e-8);
}

TEST_CASE("RK4 with delays converges at fourth order") {
  const ScalarLinear s;
  const double e1 = s.error_at_end(0.016, 20.0);
  const double e2 = s.error_at_end(0.008, 20.0);
  const double e3 = s.error_at_end(0.004, 20.0);
  CAPTURE(e1);
  CAPTURE(e2);
  CAPTURE(e3);
  CHECK(std::log2(e1 / e2) >= 3.5);
  CHECK(std::log2(e2 / e3) >= 3.5);
}

TEST_CASE("zero history and zero perturbation stay at consensus") {
  nh::SystemSpec spec = cube().system;
  spec.alpha = 0.12;
  const auto traj =
      nh::integrate(spec, nh::InitialHistory::constant_state(Eigen::VectorXd::Zero(8)), short_run());
  for (double v : traj.states) CHECK(v == 0.0);
  const auto eps0 = nh::integrate(
      spec, nh::InitialHistory::along(Eigen::VectorXd::Ones(8), 0.0), short_run());
  for (double v : eps0.states) CHECK(v == 0.0);
}

TEST_CASE("the flow is odd") {
  nh::SystemSpec spec = cube().system;
  spec.alpha = 0.12;
  Eigen::VectorXd v(8);
  v << 1, -2, 0.5, 0.3, -1, 0.7, 0.2, -0.4;
  const auto p = nh::integrate(spec, nh::InitialHistory::along(v, 0.5), short_run());
  const auto m = nh::integrate(spec, nh::InitialHistory::along(-v, 0.5), short_run());
  REQUIRE(p.states.size() == m.states.size());
  for (std::size_t i = 0; i < p.states.size(); ++i) CHECK(p.states[i] == -m.states[i]);
}

TEST_CASE("the flow commutes with the symmetry group") {
  const auto& cfg = cube();
  nh::SystemSpec spec = cfg.system;
  spec.alpha = 0.12;
  const auto d = nh::decompose(spec, cfg.group);
  Eigen::VectorXd v(8);
  v << 1, -2, 0.5, 0.3, -1, 0.7, 0.2, -0.4;
  const auto base = nh::integrate(spec, nh::InitialHistory::along(v, 0.2), short_run());
  for (std::size_t gi = 0; gi < d.group.elements.size(); gi += 5) {
    const Eigen::MatrixXd r = d.group.elements[gi].matrix();
    const auto moved = nh::integrate(spec, nh::InitialHistory::along(r * v, 0.2), short_run());
    for (std::size_t i = 0; i < base.samples(); ++i) {
      const Eigen::VectorXd expect = r * base.state_vector(i);
      CHECK((moved.state_vector(i) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("random initial history is seeded and has norm epsilon") {
  const auto a = nh::InitialHistory::random(8, 0.01, 42);
  const auto b = nh::InitialHistory::random(8, 0.01, 42);
  const auto c = nh::InitialHistory::random(8, 0.01, 43);
  CHECK(a.constant.norm() == doctest::Approx(0.01));
  CHECK(a.constant == b.constant);
  CHECK(a.constant != c.constant);
}

TEST_CASE("step clamp, output spacing and divergence") {
  nh::SystemSpec spec = cube().system;
  spec.alpha = 0.1;
  auto o = short_run();
  o.dt = 5.0;
  o.t_end = 10.0;
  const auto traj = nh::integrate(spec, nh::InitialHistory::along(Eigen::VectorXd::Ones(8), 0.01), o);
  REQUIRE(traj.meta.warnings.size() == 1);
  CHECK(traj.meta.warnings[0].find("clamped") != std::string::npos);
  const auto q = nh::gauss_legendre(20, spec.tau1);
  CHECK(traj.meta.dt == doctest::Approx(0.5 * q.nodes.front()));
  CHECK(nh::effective_step(spec, o) == traj.meta.dt);

  o = short_run();
  o.dt_out = 0.5;
  const auto spaced =
      nh::integrate(spec, nh::InitialHistory::along(Eigen::VectorXd::Ones(8), 0.01), o);
  CHECK(spaced.meta.warnings.empty());
  CHECK(spaced.samples() == 81);
  CHECK(spaced.times[1] == doctest::Approx(0.5));

  o.divergence_bound = 1e-3;
  CHECK(code_of([&] {
          nh::integrate(spec, nh::InitialHistory::along(Eigen::VectorXd::Ones(8), 0.01), o);
        }) == nh::ErrorCode::Divergence);
}

TEST_CASE("trajectory output round trip") {
  nh::Trajectory t;
  t.dimension = 2;
  t.times = {0.0, 0.5, 1.0};
  t.states = {1.0 / 3.0, -2.0, 1e-300, 4.5, -0.0, 6.25};
  std::stringstream bin;
  nh::write_trajectory(bin, t, nh::TrajectoryFormat::Binary);
  const auto back = nh::read_trajectory_binary(bin);
  CHECK(back.dimension == 2);
  CHECK(back.times == t.times);
  CHECK(back.states == t.states);

  std::ostringstream csv;
  nh::write_trajectory(csv, t, nh::TrajectoryFormat::Csv);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "t,x1,x2");
  std::getline(lines, row);
  const auto comma = row.find(',');
  CHECK(std::stod(row.substr(comma + 1)) == 1.0 / 3.0);

  std::istringstream junk("NOTATRAJ........");
  CHECK(code_of([&] { nh::read_trajectory_binary(junk); }) == nh::ErrorCode::Parse);
}
