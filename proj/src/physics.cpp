#include "vshb/physics.hpp"

#include <cmath>
#include <string>

#include "vshb/error.hpp"

namespace vshb {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0)
    throw ValidationError(std::string("gas parameter ") + name +
                          " must be finite and positive");
}

}  // namespace

void GasParams::validate() const {
  require_positive(atom_mass, "atom_mass");
  require_positive(wavelength, "wavelength");
  require_positive(natural_linewidth_fwhm, "natural_linewidth_fwhm");
  require_positive(temperature, "temperature");
  require_positive(depth_scale, "depth_scale");
  require_positive(cell_length, "cell_length");
}

double maxwell_pdf(double v_z, const GasParams& gas) {
  const double kt = kBoltzmann * gas.temperature;
  const double norm = std::sqrt(gas.atom_mass / (kTwoPi * kt));
  return norm * std::exp(-gas.atom_mass * v_z * v_z / (2.0 * kt));
}

double lorentzian_weight(double angular_detuning, double gamma_angular) {
  if (!(gamma_angular > 0.0))
    throw ValidationError("lorentzian_weight: linewidth must be positive");
  const double q = 0.25 * gamma_angular * gamma_angular;
  return q / (angular_detuning * angular_detuning + q);
}

double saturation_factor(double s_pixel, double beam_detuning, double v_z,
                         const GasParams& gas) {
  if (!(s_pixel >= 0.0))
    throw ValidationError("saturation_factor: s must be non-negative");
  return s_pixel * lorentzian_weight(kTwoPi * beam_detuning + gas.wavenumber() * v_z,
                                     gas.gamma_angular());
}

double population_difference(double v_z, std::span<const BeamSaturation> beams,
                             const GasParams& gas) {
  double saturation = 0.0;
  for (const auto& b : beams)
    saturation += saturation_factor(b.s, b.detuning, v_z, gas);
  return maxwell_pdf(v_z, gas) / (1.0 + saturation);
}

double velocity_of_object_detuning(double beam_detuning, const GasParams& gas) {
  return -gas.wavelength * beam_detuning;
}

double probe_resonant_velocity(double probe_detuning, const GasParams& gas) {
  return gas.wavelength * probe_detuning;
}

double momentum_of_detuning(double probe_detuning, const GasParams& gas) {
  return gas.atom_mass * (gas.wavelength * probe_detuning);
}

double doppler_sigma(const GasParams& gas) {
  return std::sqrt(kBoltzmann * gas.temperature / gas.atom_mass);
}

double doppler_fwhm_hz(const GasParams& gas) {
  return doppler_sigma(gas) * std::sqrt(8.0 * std::log(2.0)) / gas.wavelength;
}

}  // namespace vshb
