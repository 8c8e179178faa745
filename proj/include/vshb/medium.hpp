#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vshb/array2d.hpp"
#include "vshb/objects_io.hpp"
#include "vshb/parallel.hpp"
#include "vshb/physics.hpp"

namespace vshb {

// Quadrature nodes and composite-trapezoid weights over v_z (m/s).
struct VelocityGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

struct GridOptions {
  // Node density multiplier; 2 halves every spacing. Values below 1 coarsen
  // the grid and exist for convergence studies and negative controls.
  double refinement = 1.0;
};

// Piecewise-uniform grid: a Doppler backbone at sigma_v/50 spanning at least
// +-6 sigma_v, and around every resonant velocity nested bands. The innermost
// band covers +-60 half-linewidths at the first power-of-two subdivision of
// the backbone spacing that is <= Gamma/(10k); each coarser band doubles both
// width and spacing until the backbone is reached.
VelocityGrid build_velocity_grid(const GasParams& gas,
                                 std::span<const double> beam_detunings,
                                 double probe_detuning,
                                 const GridOptions& options = {});

// Precomputed integrand tables for one (beam detunings, probe detuning, grid)
// combination. Evaluating it for a pixel's s vector gives alpha * L.
class AbsorptionKernel {
 public:
  AbsorptionKernel(const GasParams& gas, std::span<const double> beam_detunings,
                   double probe_detuning, const VelocityGrid& grid);

  std::size_t beam_count() const { return beam_count_; }

  // D0 * sum_i w_i f(v_i) L_probe(v_i) / (1 + sum_j s_j L_j(v_i)).
  double operator()(std::span<const double> pixel_s) const;

 private:
  std::size_t beam_count_;
  double depth_scale_;
  std::vector<double> base_;          // w_i f(v_i) L_probe(v_i)
  std::vector<double> beam_weights_;  // node-major, beam_count_ per node
};

// alpha * L for one pixel. Throws if the s list and detuning list differ in
// length or any s is negative.
double absorption_coefficient(std::span<const double> pixel_s,
                              std::span<const double> beam_detunings,
                              double probe_detuning, const GasParams& gas,
                              const VelocityGrid& grid);

// Object beam: detuning from the stationary-atom resonance and per-pixel
// saturation parameter.
struct ObjectBeam {
  double detuning = 0.0;  // Hz
  IntensityGrid intensity;

  void validate() const;
};

struct ODMap {
  Array2D<double> od;
  double probe_detuning = 0.0;
  double pixel_pitch = 0.0;
};

std::vector<double> beam_detunings(std::span<const ObjectBeam> beams);

// Optical density over the transverse grid, evaluated pixel by pixel with the
// given velocity grid. Pixels sharing an s vector share one evaluation.
ODMap od_map(std::span<const ObjectBeam> beams, double probe_detuning,
             const GasParams& gas, const VelocityGrid& grid, const Exec& exec = {});

// Same, building the velocity grid from the beams and probe detuning.
// Requires at least one beam to define the frame.
ODMap od_map(std::span<const ObjectBeam> beams, double probe_detuning,
             const GasParams& gas, const Exec& exec = {});

}  // namespace vshb
