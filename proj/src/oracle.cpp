#include "vshb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "vshb/error.hpp"

namespace vshb {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) c_ += (sum_ - t) + x;
    else c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

double integrand(double v, std::span<const BeamSaturation> beams,
                 double probe_detuning, const GasParams& gas) {
  return population_difference(v, beams, gas) *
         lorentzian_weight(kTwoPi * probe_detuning - gas.wavenumber() * v,
                           gas.gamma_angular());
}

std::vector<BeamSaturation> pair_up(std::span<const double> pixel_s,
                                    std::span<const double> beam_detunings) {
  if (pixel_s.size() != beam_detunings.size())
    throw ValidationError("oracle: mismatched beam list lengths");
  std::vector<BeamSaturation> beams;
  for (std::size_t j = 0; j < pixel_s.size(); ++j)
    beams.push_back({pixel_s[j], beam_detunings[j]});
  return beams;
}

}  // namespace

double default_oracle_step(const GasParams& gas) {
  return gas.gamma_angular() / (50.0 * gas.wavenumber());
}

double midpoint_alpha_window(std::span<const double> pixel_s,
                             std::span<const double> beam_detunings,
                             double probe_detuning, const GasParams& gas,
                             double lo, double hi, double step) {
  gas.validate();
  if (!(step > 0.0)) throw ValidationError("oracle: step must be positive");
  if (!(hi > lo)) throw ValidationError("oracle: empty window");
  const auto beams = pair_up(pixel_s, beam_detunings);
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  const double h = (hi - lo) / static_cast<double>(n);
  CompensatedSum sum;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = lo + (static_cast<double>(i) + 0.5) * h;
    sum.add(integrand(v, beams, probe_detuning, gas));
  }
  return gas.depth_scale * h * sum.value();
}

double brute_force_alpha(std::span<const double> pixel_s,
                         std::span<const double> beam_detunings,
                         double probe_detuning, const GasParams& gas, double step,
                         double span_sigmas) {
  gas.validate();
  if (!(step > 0.0)) throw ValidationError("oracle: step must be positive");
  if (step > gas.gamma_angular() / (10.0 * gas.wavenumber()))
    throw ValidationError("oracle: step exceeds Gamma/(10k)");
  if (!(span_sigmas >= 8.0)) throw ValidationError("oracle: span must be at least 8 sigma_v");
  const double reach = span_sigmas * doppler_sigma(gas);
  return midpoint_alpha_window(pixel_s, beam_detunings, probe_detuning, gas, -reach,
                               reach, step);
}

double maxwell_normalization(const GasParams& gas, std::size_t intervals) {
  const double reach = 8.0 * doppler_sigma(gas);
  const double h = 2.0 * reach / static_cast<double>(intervals);
  CompensatedSum sum;
  sum.add(0.5 * maxwell_pdf(-reach, gas));
  sum.add(0.5 * maxwell_pdf(reach, gas));
  for (std::size_t i = 1; i < intervals; ++i)
    sum.add(maxwell_pdf(-reach + h * static_cast<double>(i), gas));
  return h * sum.value();
}

ValidationReport validate_report(const GasParams& gas,
                                 std::span<const ValidationBeam> beams,
                                 const ValidateOptions& options, const Exec& exec) {
  gas.validate();
  ValidationReport report;
  report.options = options;
  report.samples = options.samples;

  // Sample points are drawn serially so they do not depend on thread count.
  struct Sample {
    std::vector<double> s;
    std::vector<double> detunings;
    double probe = 0.0;
  };
  SampleStream stream(options.seed);
  std::vector<Sample> samples(options.samples);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& sample = samples[i];
    for (const auto& b : beams) {
      sample.detunings.push_back(b.detuning + stream.uniform(-10e6, 10e6));
      sample.s.push_back(stream.uniform(0.0, 10.0));
    }
    if (!beams.empty() && i % 2 == 0) {
      const double hole = sample.detunings[(i / 2) % beams.size()];
      sample.probe = -hole + stream.uniform(-20e6, 20e6);
    } else {
      sample.probe = stream.uniform(-150e6, 150e6);
    }
  }

  std::vector<double> errors(samples.size());
  const double step = default_oracle_step(gas);
  parallel_for(samples.size(), exec, [&](std::size_t i) {
    const auto& sample = samples[i];
    const auto grid = build_velocity_grid(gas, sample.detunings, sample.probe, options.grid);
    const double production =
        absorption_coefficient(sample.s, sample.detunings, sample.probe, gas, grid);
    const double reference = brute_force_alpha(sample.s, sample.detunings, sample.probe, gas, step);
    errors[i] = std::abs(production - reference) / std::abs(reference);
  });
  for (double e : errors) report.max_relative_error = std::max(report.max_relative_error, e);
  report.quadrature_passed = report.max_relative_error < options.quadrature_tolerance;

  report.normalization_residual = std::abs(maxwell_normalization(gas) - 1.0);
  report.normalization_passed = report.normalization_residual < options.normalization_tolerance;

  // A single unmasked beam at +d burns a hole the probe sees at -d.
  report.mirror_passed = true;
  for (const auto& b : beams) {
    const double detuning[] = {b.detuning};
    const double s[] = {b.peak_s};
    const double center = -b.detuning;
    const auto steps = static_cast<int>(
        std::lround(options.mirror_scan_half_range_hz / options.mirror_scan_step_hz));
    double best = 0.0, best_od = 0.0;
    for (int k = -steps; k <= steps; ++k) {
      const double probe = center + k * options.mirror_scan_step_hz;
      const auto grid = build_velocity_grid(gas, detuning, probe, options.grid);
      const double od = absorption_coefficient(s, detuning, probe, gas, grid);
      if (k == -steps || od < best_od) {
        best_od = od;
        best = probe;
      }
    }
    MirrorCheck check{b.detuning, best,
                      std::abs(best - center) <= options.mirror_tolerance_hz};
    report.mirror_passed = report.mirror_passed && check.passed;
    report.mirror.push_back(check);
  }

  report.passed = report.quadrature_passed && report.normalization_passed && report.mirror_passed;
  return report;
}

std::string ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  j["quadrature"] = {{"samples", samples},
                     {"seed", options.seed},
                     {"max_relative_error", max_relative_error},
                     {"tolerance", options.quadrature_tolerance},
                     {"grid_refinement", options.grid.refinement},
                     {"passed", quadrature_passed}};
  j["maxwell_normalization"] = {{"residual", normalization_residual},
                                {"tolerance", options.normalization_tolerance},
                                {"passed", normalization_passed}};
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& m : mirror)
    checks.push_back({{"beam_detuning_hz", m.beam_detuning},
                      {"od_argmin_probe_detuning_hz", m.argmin_detuning},
                      {"passed", m.passed}});
  j["mirror"] = {{"tolerance_hz", options.mirror_tolerance_hz},
                 {"checks", checks},
                 {"passed", mirror_passed}};
  return j.dump(2) + "\n";
}

}  // namespace vshb
