#pragma once

#include "nh/integrator.hpp"
#include "nh/symmetry.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace nh {

// Suffix of `traj` after dropping the first `fraction` of its samples.
// Throws Error(EmptyWindow) when nothing remains.
Trajectory discard_transient(const Trajectory& traj, double fraction);
// Suffix starting `duration` time units after the first sample.
Trajectory discard_transient_duration(const Trajectory& traj, double duration);

// Unnormalized DFT of `series` zero-padded to the next power of two.
std::vector<std::complex<double>> padded_fft(std::span<const double> series);

struct SpectrumEstimate {
  std::vector<double> frequencies;  // rad/time, bins 0..N/2
  std::vector<double> magnitudes;
  double dominant_frequency = 0.0;
  double dominant_magnitude = 0.0;
  bool oscillating = false;
};

// Mean removal, Hann window, zero padding to a power of two and parabolic
// interpolation of the strongest nonzero bin. Throws Error(TooFewSamples)
// below 64 samples.
SpectrumEstimate dominant_frequency(std::span<const double> series, double dt);

struct Amplitude {
  double max = 0.0;  // max_t |P x(t)|_2
  double rms = 0.0;
};

Amplitude isotypic_amplitude(const Trajectory& traj, const Eigen::MatrixXd& projector);

struct SweepOptions {
  IntegrationOptions integration;
  double epsilon = 1e-2;
  // Perturbation direction; a seeded random direction when empty.
  Eigen::VectorXd direction;
  std::uint64_t seed = 0;
  // Time discarded before measuring.
  double transient = 0.0;
  // Projection used for the frequency estimate; x_1 when empty.
  Eigen::VectorXd probe;
  // Worker cap; 0 means hardware concurrency.
  unsigned threads = 0;
};

struct SweepPoint {
  double alpha = 0.0;
  std::vector<double> amplitude;  // one per component
  std::vector<double> rms;
  double dominant_frequency = 0.0;
  bool oscillating = false;
  bool diverged = false;
  std::string note;
};

struct SweepResult {
  std::vector<int> components;  // j labels matching amplitude columns
  std::vector<SweepPoint> points;
};

// One independent simulation per alpha. A diverged run is flagged and the
// sweep continues.
SweepResult alpha_sweep(const SystemSpec& spec, std::span<const double> alphas,
                        std::span<const IsotypicComponent> components,
                        const SweepOptions& options);

// Columns: alpha, amp_V<j>..., rms_V<j>..., dominant_freq, diverged.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace nh
