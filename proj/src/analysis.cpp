#include "nh/analysis.hpp"

#include "nh/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

namespace nh {

namespace {

Trajectory suffix(const Trajectory& traj, std::size_t first) {
  if (first >= traj.samples()) {
    throw Error(ErrorCode::EmptyWindow, "transient cut leaves no samples");
  }
  Trajectory out;
  out.dimension = traj.dimension;
  out.meta = traj.meta;
  out.meta.t_cut = traj.times[first];
  out.times.assign(traj.times.begin() + static_cast<std::ptrdiff_t>(first), traj.times.end());
  out.states.assign(traj.states.begin() + static_cast<std::ptrdiff_t>(first * traj.dimension),
                    traj.states.end());
  return out;
}

}  // namespace

Trajectory discard_transient(const Trajectory& traj, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvariantViolation, "transient fraction must lie in [0, 1]");
  }
  const auto drop = static_cast<std::size_t>(std::llround(fraction * traj.samples()));
  return suffix(traj, drop);
}

Trajectory discard_transient_duration(const Trajectory& traj, double duration) {
  if (traj.samples() == 0) throw Error(ErrorCode::EmptyWindow, "empty trajectory");
  const double cut = traj.times.front() + duration;
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), cut - 1e-9);
  return suffix(traj, static_cast<std::size_t>(std::distance(traj.times.begin(), it)));
}

std::vector<std::complex<double>> padded_fft(std::span<const double> series) {
  const std::size_t n = std::bit_ceil(std::max<std::size_t>(series.size(), 1));
  // FFTW planning is not thread-safe; execution is.
  static std::mutex planner;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(planner);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  std::fill(in, in + n, 0.0);
  std::copy(series.begin(), series.end(), in);
  fftw_execute(plan);

  std::vector<std::complex<double>> full(n);
  for (std::size_t k = 0; k <= n / 2; ++k) full[k] = {out[k][0], out[k][1]};
  for (std::size_t k = n / 2 + 1; k < n; ++k) full[k] = std::conj(full[n - k]);
  {
    std::lock_guard lock(planner);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return full;
}

SpectrumEstimate dominant_frequency(std::span<const double> series, double dt) {
  if (series.size() < 64) {
    throw Error(ErrorCode::TooFewSamples,
                "spectrum needs >= 64 samples, got " + std::to_string(series.size()));
  }
  const std::size_t m = series.size();
  double mean = 0.0, peak = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(m);
  for (double v : series) peak = std::max(peak, std::abs(v));

  std::vector<double> windowed(m);
  double window_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (m - 1));
    windowed[i] = w * (series[i] - mean);
    window_sum += w;
  }
  const auto spectrum = padded_fft(windowed);
  const std::size_t n = spectrum.size();

  SpectrumEstimate est;
  const double bin = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    est.frequencies.push_back(bin * static_cast<double>(k));
    // Single-sided amplitude of a windowed sinusoid.
    est.magnitudes.push_back(2.0 * std::abs(spectrum[k]) / window_sum);
  }
  std::size_t best = 1;
  for (std::size_t k = 2; k < est.magnitudes.size(); ++k)
    if (est.magnitudes[k] > est.magnitudes[best]) best = k;

  double offset = 0.0;
  if (best + 1 < est.magnitudes.size()) {
    const double a = est.magnitudes[best - 1], b = est.magnitudes[best],
                 c = est.magnitudes[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom != 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  est.dominant_frequency = bin * (static_cast<double>(best) + offset);
  est.dominant_magnitude = est.magnitudes[best];
  est.oscillating = est.dominant_magnitude > 1e-12 + 1e-9 * peak;
  return est;
}

Amplitude isotypic_amplitude(const Trajectory& traj, const Eigen::MatrixXd& projector) {
  if (projector.rows() != traj.dimension || projector.cols() != traj.dimension) {
    throw Error(ErrorCode::DimensionMismatch,
                "projector is " + std::to_string(projector.rows()) + "x" +
                    std::to_string(projector.cols()) + ", trajectory dimension " +
                    std::to_string(traj.dimension));
  }
  if (traj.samples() == 0) throw Error(ErrorCode::EmptyWindow, "empty trajectory");
  Amplitude a;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < traj.samples(); ++i) {
    const double norm = (projector * traj.state_vector(i)).norm();
    a.max = std::max(a.max, norm);
    sum_sq += norm * norm;
  }
  a.rms = std::sqrt(sum_sq / static_cast<double>(traj.samples()));
  return a;
}

namespace {

SweepPoint run_point(const SystemSpec& base, double alpha,
                     std::span<const IsotypicComponent> components, const SweepOptions& o) {
  SweepPoint point;
  point.alpha = alpha;
  SystemSpec spec = base;
  spec.alpha = alpha;
  const InitialHistory initial = o.direction.size() == spec.n
                                     ? InitialHistory::along(o.direction, o.epsilon)
                                     : InitialHistory::random(spec.n, o.epsilon, o.seed);
  try {
    const Trajectory full = integrate(spec, initial, o.integration);
    const Trajectory kept = discard_transient_duration(full, o.transient);
    for (const auto& c : components) {
      const Amplitude a = isotypic_amplitude(kept, c.projector);
      point.amplitude.push_back(a.max);
      point.rms.push_back(a.rms);
    }
    std::vector<double> series(kept.samples());
    for (std::size_t i = 0; i < kept.samples(); ++i) {
      series[i] = o.probe.size() == spec.n ? o.probe.dot(kept.state_vector(i))
                                           : kept.state(i)[0];
    }
    if (series.size() >= 64) {
      const SpectrumEstimate est = dominant_frequency(series, kept.meta.dt_out);
      point.dominant_frequency = est.oscillating ? est.dominant_frequency : 0.0;
      point.oscillating = est.oscillating;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Divergence) throw;
    point.diverged = true;
    point.note = e.what();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    point.amplitude.assign(components.size(), nan);
    point.rms.assign(components.size(), nan);
    point.dominant_frequency = nan;
  }
  return point;
}

}  // namespace

SweepResult alpha_sweep(const SystemSpec& spec, std::span<const double> alphas,
                        std::span<const IsotypicComponent> components,
                        const SweepOptions& options) {
  if (alphas.empty()) throw Error(ErrorCode::Usage, "alpha grid is empty");
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    if (!(alphas[i] > alphas[i - 1])) {
      throw Error(ErrorCode::InvariantViolation, "alpha grid must be strictly increasing");
    }
  }
  SweepResult result;
  for (const auto& c : components) result.components.push_back(c.j);
  result.points.resize(alphas.size());

  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(alphas.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&] {
    for (std::size_t i = next++; i < alphas.size(); i = next++) {
      try {
        result.points[i] = run_point(spec, alphas[i], components, options);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "alpha";
  for (int j : result.components) out << ",amp_V" << j;
  for (int j : result.components) out << ",rms_V" << j;
  out << ",dominant_freq,diverged\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& p : result.points) {
    out << num(p.alpha);
    for (double v : p.amplitude) out << ',' << num(v);
    for (double v : p.rms) out << ',' << num(v);
    out << ',' << num(p.dominant_frequency) << ',' << (p.diverged ? 1 : 0) << '\n';
  }
}

}  // namespace nh
