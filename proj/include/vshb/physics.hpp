#pragma once

#include <numbers>
#include <span>

namespace vshb {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Two-level atomic vapor in a cell. Defaults describe the Rb-87 D2 line
// (F=2 -> F'=3) in a 10 cm cell at 25 C.
struct GasParams {
  double atom_mass = 1.443160648e-25;      // kg
  double wavelength = 780e-9;              // m
  double natural_linewidth_fwhm = 5.75e6;  // Hz, Gamma / 2pi
  double temperature = 298.15;             // K
  double depth_scale = 120.0;              // n * sigma_0 * L
  double cell_length = 0.1;                // m

  // Throws ValidationError unless every field is finite and positive.
  void validate() const;

  double wavenumber() const { return kTwoPi / wavelength; }
  double gamma_angular() const { return kTwoPi * natural_linewidth_fwhm; }
  // Lorentzian half width at half maximum expressed as a velocity, Gamma/(2k).
  double half_linewidth_velocity() const {
    return 0.5 * gamma_angular() / wavenumber();
  }
};

// Saturation parameter s = I/I_s of one object beam at one pixel, and the
// beam's detuning nu_p - nu_0 in Hz.
struct BeamSaturation {
  double s = 0.0;
  double detuning = 0.0;
};

// One-dimensional Maxwell velocity density f(v_z), in s/m.
double maxwell_pdf(double v_z, const GasParams& gas);

// (Gamma^2/4) / (x^2 + Gamma^2/4); throws if gamma_angular <= 0.
double lorentzian_weight(double angular_detuning, double gamma_angular);

// s * L(2 pi detuning + k v_z): the saturation term of an object beam
// travelling along -z.
double saturation_factor(double s_pixel, double beam_detuning, double v_z,
                         const GasParams& gas);

// Steady-state ground/excited population difference per unit n, in s/m:
// f(v_z) / (1 + sum_j saturation_factor_j).
double population_difference(double v_z, std::span<const BeamSaturation> beams,
                             const GasParams& gas);

// Velocity class resonant with an object beam (counter to the probe).
double velocity_of_object_detuning(double beam_detuning, const GasParams& gas);

// Velocity class resonant with the probe, which travels along +z.
double probe_resonant_velocity(double probe_detuning, const GasParams& gas);

// Longitudinal momentum m * lambda * detuning selected by a probe detuning.
double momentum_of_detuning(double probe_detuning, const GasParams& gas);

// sqrt(k_B T / m).
double doppler_sigma(const GasParams& gas);

// Gaussian Doppler FWHM in frequency, sigma_v * sqrt(8 ln 2) / lambda.
double doppler_fwhm_hz(const GasParams& gas);

}  // namespace vshb
