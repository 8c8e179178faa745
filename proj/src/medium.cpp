#include "vshb/medium.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace vshb {

namespace {

constexpr double kSpanSigmas = 6.0;
constexpr double kBackboneDivisor = 50.0;    // backbone spacing sigma_v / 50
constexpr double kFineDivisor = 10.0;        // fine spacing Gamma / (10 k)
constexpr double kInnerBandHalfWidths = 60.0;

}  // namespace

VelocityGrid build_velocity_grid(const GasParams& gas,
                                 std::span<const double> beam_detunings,
                                 double probe_detuning, const GridOptions& options) {
  gas.validate();
  if (!(options.refinement > 0.0) || !std::isfinite(options.refinement))
    throw ValidationError("grid refinement must be positive");

  const double sigma = doppler_sigma(gas);
  const double half_width = gas.half_linewidth_velocity();
  const double backbone = sigma / kBackboneDivisor / options.refinement;
  const double fine_limit = 2.0 * half_width / kFineDivisor / options.refinement;

  // Level l has spacing backbone / 2^(levels - l); level 0 is the finest and
  // level `levels` the backbone. Every level's nodes are integer multiples of
  // its spacing, so coarser lattices are exact subsets of finer ones and the
  // spacing only ever changes by a factor of two.
  int levels = 0;
  while (std::ldexp(backbone, -levels) > fine_limit) ++levels;
  auto spacing = [&](int level) { return std::ldexp(backbone, level - levels); };

  std::vector<double> centers;
  for (double d : beam_detunings) centers.push_back(velocity_of_object_detuning(d, gas));
  centers.push_back(probe_resonant_velocity(probe_detuning, gas));
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

  // Band of level l around a center reaches W0 * 2^l, widened outward to the
  // next coarser lattice so each band starts and ends on shared nodes.
  auto band = [&](double c, int level) {
    const double coarse = spacing(level + 1);
    const double reach = std::ldexp(kInnerBandHalfWidths * half_width, level);
    return std::pair{std::floor((c - reach) / coarse) * coarse,
                     std::ceil((c + reach) / coarse) * coarse};
  };

  double lo = -kSpanSigmas * sigma;
  double hi = kSpanSigmas * sigma;
  if (levels > 0) {
    for (double c : centers) {
      const auto [a, b] = band(c, levels - 1);
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
  }
  // Snap outward onto the backbone lattice.
  const double lo_snapped = std::floor(lo / backbone) * backbone;
  const double hi_snapped = std::ceil(hi / backbone) * backbone;
  lo = lo_snapped > lo ? lo_snapped - backbone : lo_snapped;
  hi = hi_snapped < hi ? hi_snapped + backbone : hi_snapped;

  std::vector<double> nodes;
  auto add_lattice = [&](double a, double b, double h) {
    const auto first = static_cast<long long>(std::llround(a / h));
    const auto last = static_cast<long long>(std::llround(b / h));
    for (long long m = first; m <= last; ++m) nodes.push_back(static_cast<double>(m) * h);
  };
  add_lattice(lo, hi, backbone);
  for (int level = 0; level < levels; ++level)
    for (double c : centers) {
      const auto [a, b] = band(c, level);
      add_lattice(a, b, spacing(level));
    }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  VelocityGrid grid;
  grid.weights.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double left = i > 0 ? nodes[i] - nodes[i - 1] : 0.0;
    const double right = i + 1 < nodes.size() ? nodes[i + 1] - nodes[i] : 0.0;
    grid.weights[i] = 0.5 * (left + right);
  }
  grid.nodes = std::move(nodes);
  return grid;
}

AbsorptionKernel::AbsorptionKernel(const GasParams& gas,
                                   std::span<const double> beam_detunings,
                                   double probe_detuning, const VelocityGrid& grid)
    : beam_count_(beam_detunings.size()), depth_scale_(gas.depth_scale) {
  gas.validate();
  const double k = gas.wavenumber();
  const double gamma = gas.gamma_angular();
  const double probe_angular = kTwoPi * probe_detuning;
  base_.resize(grid.size());
  beam_weights_.resize(grid.size() * beam_count_);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid.nodes[i];
    base_[i] = grid.weights[i] * maxwell_pdf(v, gas) *
               lorentzian_weight(probe_angular - k * v, gamma);
    for (std::size_t j = 0; j < beam_count_; ++j)
      beam_weights_[i * beam_count_ + j] =
          lorentzian_weight(kTwoPi * beam_detunings[j] + k * v, gamma);
  }
}

double AbsorptionKernel::operator()(std::span<const double> pixel_s) const {
  if (pixel_s.size() != beam_count_)
    throw ValidationError("absorption: s list length differs from beam count");
  for (double s : pixel_s)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ValidationError("absorption: s values must be finite and non-negative");
  double sum = 0.0;
  const double* weights = beam_weights_.data();
  for (std::size_t i = 0; i < base_.size(); ++i, weights += beam_count_) {
    double saturation = 0.0;
    for (std::size_t j = 0; j < beam_count_; ++j) saturation += pixel_s[j] * weights[j];
    sum += base_[i] / (1.0 + saturation);
  }
  return depth_scale_ * sum;
}

double absorption_coefficient(std::span<const double> pixel_s,
                              std::span<const double> beam_detunings,
                              double probe_detuning, const GasParams& gas,
                              const VelocityGrid& grid) {
  if (pixel_s.size() != beam_detunings.size())
    throw ValidationError("absorption_coefficient: mismatched beam list lengths");
  return AbsorptionKernel(gas, beam_detunings, probe_detuning, grid)(pixel_s);
}

void ObjectBeam::validate() const {
  if (!std::isfinite(detuning)) throw ValidationError("beam detuning must be finite");
  if (intensity.role != GridRole::intensity)
    throw ValidationError("object beam grid must hold intensities");
  intensity.validate();
}

std::vector<double> beam_detunings(std::span<const ObjectBeam> beams) {
  std::vector<double> out;
  out.reserve(beams.size());
  for (const auto& b : beams) out.push_back(b.detuning);
  return out;
}

namespace {

struct BitsHash {
  std::size_t operator()(const std::vector<std::uint64_t>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto k : key) {
      h ^= k;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

ODMap od_map(std::span<const ObjectBeam> beams, double probe_detuning,
             const GasParams& gas, const VelocityGrid& grid, const Exec& exec) {
  if (beams.empty()) throw ValidationError("od_map: at least one beam defines the frame");
  for (const auto& b : beams) {
    b.validate();
    require_same_shape(b.intensity.values, beams.front().intensity.values, "od_map");
    if (b.intensity.pixel_pitch != beams.front().intensity.pixel_pitch)
      throw ValidationError("od_map: beam pixel pitches differ");
  }
  const auto detunings = beam_detunings(beams);
  const AbsorptionKernel kernel(gas, detunings, probe_detuning, grid);

  const auto& frame = beams.front().intensity;
  const std::size_t pixels = frame.values.size();
  const std::size_t nb = beams.size();

  // Distinct s vectors in first-appearance order, keyed on exact bits.
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, BitsHash> index;
  std::vector<std::size_t> pixel_key(pixels);
  std::vector<double> keys;
  std::vector<std::uint64_t> bits(nb);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t j = 0; j < nb; ++j)
      bits[j] = std::bit_cast<std::uint64_t>(beams[j].intensity.values[p]);
    auto [it, inserted] = index.try_emplace(bits, index.size());
    if (inserted)
      for (std::size_t j = 0; j < nb; ++j) keys.push_back(beams[j].intensity.values[p]);
    pixel_key[p] = it->second;
  }

  std::vector<double> unique_od(index.size());
  parallel_for(unique_od.size(), exec, [&](std::size_t u) {
    unique_od[u] = kernel(std::span<const double>(keys).subspan(u * nb, nb));
  });

  ODMap map{Array2D<double>(frame.width(), frame.height()), probe_detuning,
            frame.pixel_pitch};
  for (std::size_t p = 0; p < pixels; ++p) map.od[p] = unique_od[pixel_key[p]];
  return map;
}

ODMap od_map(std::span<const ObjectBeam> beams, double probe_detuning,
             const GasParams& gas, const Exec& exec) {
  const auto detunings = beam_detunings(beams);
  const auto grid = build_velocity_grid(gas, detunings, probe_detuning);
  return od_map(beams, probe_detuning, gas, grid, exec);
}

}  // namespace vshb
