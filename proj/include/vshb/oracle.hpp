#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vshb/medium.hpp"
#include "vshb/physics.hpp"

namespace vshb {

// Brute-force reference for alpha * L: uniform midpoint sum over
// [-span_sigmas * sigma_v, +span_sigmas * sigma_v] using the pointwise physics
// functions directly. Requires step <= Gamma/(10k) and span_sigmas >= 8.
double brute_force_alpha(std::span<const double> pixel_s,
                         std::span<const double> beam_detunings,
                         double probe_detuning, const GasParams& gas,
                         double step, double span_sigmas = 8.0);

// Midpoint sum of the same integrand over an arbitrary window [lo, hi] with
// roughly the requested step. Used for convergence-order studies.
double midpoint_alpha_window(std::span<const double> pixel_s,
                             std::span<const double> beam_detunings,
                             double probe_detuning, const GasParams& gas,
                             double lo, double hi, double step);

// Gamma/(50k), the default oracle step.
double default_oracle_step(const GasParams& gas);

// Integral of maxwell_pdf over +-8 sigma_v by trapezoid with `intervals` panels.
double maxwell_normalization(const GasParams& gas, std::size_t intervals = 200000);

// Beam set used when drawing validation samples.
struct ValidationBeam {
  double detuning = 0.0;  // Hz
  double peak_s = 2.0;
};

struct ValidateOptions {
  std::size_t samples = 200;
  std::uint64_t seed = 0x5eed2024;
  GridOptions grid;  // production grid under test
  double quadrature_tolerance = 1e-6;
  double normalization_tolerance = 1e-9;
  double mirror_tolerance_hz = 1e6;
  double mirror_scan_step_hz = 0.5e6;
  double mirror_scan_half_range_hz = 15e6;
};

struct MirrorCheck {
  double beam_detuning = 0.0;
  double argmin_detuning = 0.0;
  bool passed = false;
};

struct ValidationReport {
  std::size_t samples = 0;
  double max_relative_error = 0.0;
  double normalization_residual = 0.0;
  std::vector<MirrorCheck> mirror;
  bool quadrature_passed = false;
  bool normalization_passed = false;
  bool mirror_passed = false;
  bool passed = false;
  ValidateOptions options;

  std::string to_json() const;
};

ValidationReport validate_report(const GasParams& gas,
                                 std::span<const ValidationBeam> beams,
                                 const ValidateOptions& options = {},
                                 const Exec& exec = {});

// Uniform doubles in [0, 1) from mt19937_64 with a fixed 53-bit mapping, so
// sample points do not depend on the standard library's distributions.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vshb
