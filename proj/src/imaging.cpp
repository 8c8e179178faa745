#include "vshb/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace vshb {

void Experiment::validate() const {
  gas.validate();
  probe.validate();
  if (!(floor_fraction > 0.0)) throw ValidationError("detection floor must be positive");
  for (const auto& b : beams) {
    b.validate();
    require_same_shape(b.intensity.values, probe.values, "experiment");
    if (b.intensity.pixel_pitch != probe.pixel_pitch)
      throw ValidationError("experiment: beam and probe pixel pitches differ");
  }
}

double Experiment::detection_floor() const {
  const auto v = probe.values.values();
  return floor_fraction * *std::max_element(v.begin(), v.end());
}

std::size_t Tomogram::invalid_count() const {
  return static_cast<std::size_t>(std::count(valid.values().begin(), valid.values().end(), 0));
}

IntensityGrid transmit(const IntensityGrid& probe, const ODMap& od) {
  require_same_shape(probe.values, od.od, "transmit");
  IntensityGrid out = probe;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = probe.values[i] * std::exp(-od.od[i]);
  return out;
}

DeltaOdFrame delta_od(const IntensityGrid& i_on, const IntensityGrid& i_off, double floor) {
  if (!(floor > 0.0)) throw ValidationError("delta_od: floor must be positive");
  require_same_shape(i_on.values, i_off.values, "delta_od");
  DeltaOdFrame frame{Array2D<double>(i_on.width(), i_on.height()),
                     Array2D<std::uint8_t>(i_on.width(), i_on.height())};
  for (std::size_t i = 0; i < i_on.values.size(); ++i) {
    const double on = i_on.values[i];
    const double off = i_off.values[i];
    if (on < floor || off < floor) continue;
    frame.valid[i] = 1;
    frame.delta_od[i] = -std::log(on / off);
  }
  return frame;
}

namespace {

struct Frames {
  ODMap od_on;
  double od_off = 0.0;
  IntensityGrid i_on;
  DeltaOdFrame detected;
};

Frames simulate_frames(const Experiment& ex, double probe_detuning, const Exec& exec) {
  const auto detunings = beam_detunings(ex.beams);
  const auto grid = build_velocity_grid(ex.gas, detunings, probe_detuning, ex.grid);
  const std::vector<double> dark(ex.beams.size(), 0.0);
  const double od_off = AbsorptionKernel(ex.gas, detunings, probe_detuning, grid)(dark);

  const ODMap off{Array2D<double>(ex.probe.width(), ex.probe.height(), od_off),
                  probe_detuning, ex.probe.pixel_pitch};
  ODMap on = ex.beams.empty() ? off : od_map(ex.beams, probe_detuning, ex.gas, grid, exec);

  IntensityGrid i_on = transmit(ex.probe, on);
  const IntensityGrid i_off = transmit(ex.probe, off);
  DeltaOdFrame detected = delta_od(i_on, i_off, ex.detection_floor());
  return {std::move(on), od_off, std::move(i_on), std::move(detected)};
}

}  // namespace

Tomogram tomogram(const Experiment& experiment, double probe_detuning, const Exec& exec) {
  experiment.validate();
  if (!std::isfinite(probe_detuning)) throw ValidationError("probe detuning must be finite");
  Frames frames = simulate_frames(experiment, probe_detuning, exec);

  // On valid pixels -ln(I_on/I_off) equals OD_off - OD_on; taking the OD
  // difference keeps the result bit-identical for any probe profile.
  Tomogram t;
  t.delta_od = Array2D<double>(experiment.probe.width(), experiment.probe.height());
  t.valid = std::move(frames.detected.valid);
  for (std::size_t i = 0; i < t.delta_od.size(); ++i)
    if (t.valid[i]) t.delta_od[i] = frames.od_off - frames.od_on.od[i];
  t.probe_detuning = probe_detuning;
  t.resonant_velocity = probe_resonant_velocity(probe_detuning, experiment.gas);
  t.momentum = momentum_of_detuning(probe_detuning, experiment.gas);
  t.pixel_pitch = experiment.probe.pixel_pitch;
  return t;
}

namespace {

void require_increasing(std::span<const double> detunings) {
  for (std::size_t i = 1; i < detunings.size(); ++i)
    if (!(detunings[i] > detunings[i - 1]))
      throw ValidationError("probe detunings must be strictly increasing");
}

}  // namespace

TomogramStack scan(const Experiment& experiment, std::span<const double> detunings,
                   const Exec& exec) {
  require_increasing(detunings);
  TomogramStack stack;
  for (double d : detunings) stack.tomograms.push_back(tomogram(experiment, d, exec));
  return stack;
}

std::vector<std::pair<double, double>> transmittance_curve(
    const Experiment& experiment, std::span<const double> detunings, const Exec& exec) {
  if (detunings.empty()) throw ValidationError("transmittance_curve: no detunings");
  require_increasing(detunings);
  experiment.validate();
  std::vector<std::pair<double, double>> curve;
  for (double d : detunings) {
    const Frames frames = simulate_frames(experiment, d, exec);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < frames.i_on.values.size(); ++i) {
      if (!frames.detected.valid[i]) continue;
      sum += frames.i_on.values[i] / experiment.probe.values[i];
      ++count;
    }
    if (count == 0) throw ValidationError("transmittance_curve: no valid pixels");
    curve.emplace_back(d, sum / static_cast<double>(count));
  }
  return curve;
}

double normalized_cross_correlation(const Array2D<double>& a, const Array2D<double>& b,
                                    const Array2D<std::uint8_t>& valid) {
  require_same_shape(a, b, "normalized_cross_correlation");
  if (!valid.empty()) require_same_shape(a, valid, "normalized_cross_correlation");
  auto use = [&](std::size_t i) { return valid.empty() || valid[i]; };
  double mean_a = 0, mean_b = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!use(i)) continue;
    mean_a += a[i];
    mean_b += b[i];
    ++n;
  }
  if (n == 0) return 0.0;
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!use(i)) continue;
    const double da = a[i] - mean_a, db = b[i] - mean_b;
    ab += da * db;
    aa += da * da;
    bb += db * db;
  }
  if (aa <= 0 || bb <= 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace vshb
