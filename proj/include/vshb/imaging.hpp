#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vshb/medium.hpp"

namespace vshb {

// Everything the detection chain needs: the vapor, the object beams already
// shaped by their masks, and the incident probe profile I_r.
struct Experiment {
  GasParams gas;
  std::vector<ObjectBeam> beams;
  IntensityGrid probe;
  double floor_fraction = 1e-6;  // detection floor relative to the probe peak
  GridOptions grid;

  // Throws unless every beam matches the probe frame.
  void validate() const;
  double detection_floor() const;
};

struct DeltaOdFrame {
  Array2D<double> delta_od;
  Array2D<std::uint8_t> valid;
};

struct Tomogram {
  Array2D<double> delta_od;
  Array2D<std::uint8_t> valid;
  double probe_detuning = 0.0;     // Hz
  double resonant_velocity = 0.0;  // m/s
  double momentum = 0.0;           // kg m/s
  double pixel_pitch = 0.0;        // m

  std::size_t invalid_count() const;
};

struct TomogramStack {
  std::vector<Tomogram> tomograms;
};

// I_in * exp(-OD), elementwise.
IntensityGrid transmit(const IntensityGrid& probe, const ODMap& od);

// -ln(I_on / I_off); pixels where either frame is below `floor` are invalid
// and carry 0.
DeltaOdFrame delta_od(const IntensityGrid& i_on, const IntensityGrid& i_off,
                      double floor);

Tomogram tomogram(const Experiment& experiment, double probe_detuning,
                  const Exec& exec = {});

// One tomogram per detuning; detunings must be strictly increasing.
TomogramStack scan(const Experiment& experiment, std::span<const double> detunings,
                   const Exec& exec = {});

// Mean of I_on / I_r over valid pixels at each probe detuning.
std::vector<std::pair<double, double>> transmittance_curve(
    const Experiment& experiment, std::span<const double> detunings,
    const Exec& exec = {});

// Pearson correlation of two images over the pixels where `valid` is set
// (all pixels when it is empty). Returns 0 if either image is constant there.
double normalized_cross_correlation(const Array2D<double>& a, const Array2D<double>& b,
                                    const Array2D<std::uint8_t>& valid = {});

// Horizontal flip (camera-side reflection).
template <typename T>
Array2D<T> mirror_transform(const Array2D<T>& grid) {
  Array2D<T> out(grid.width(), grid.height());
  for (std::size_t y = 0; y < grid.height(); ++y)
    for (std::size_t x = 0; x < grid.width(); ++x)
      out(grid.width() - 1 - x, y) = grid(x, y);
  return out;
}

}  // namespace vshb
