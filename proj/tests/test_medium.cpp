#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vshb/medium.hpp"
#include "vshb/oracle.hpp"

using namespace vshb;

namespace {

const GasParams kGas;

double max_spacing_near(const VelocityGrid& g, double center, double reach) {
  double worst = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double a = g.nodes[i - 1], b = g.nodes[i];
    if (b < center - reach || a > center + reach) continue;
    worst = std::max(worst, b - a);
  }
  return worst;
}

void check_grid_invariants(const VelocityGrid& g, std::span<const double> beam_detunings,
                           double probe) {
  REQUIRE(g.size() == g.weights.size());
  REQUIRE(g.size() > 2);
  for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g.nodes[i] > g.nodes[i - 1]);
  for (double w : g.weights) REQUIRE(w > 0.0);

  const double sigma = doppler_sigma(kGas);
  const double hw = kGas.half_linewidth_velocity();
  const double fine = 2.0 * hw / 10.0;
  CHECK(g.nodes.front() <= -6 * sigma);
  CHECK(g.nodes.back() >= 6 * sigma);
  std::vector<double> centers;
  for (double d : beam_detunings) centers.push_back(velocity_of_object_detuning(d, kGas));
  centers.push_back(probe_resonant_velocity(probe, kGas));
  for (double c : centers) {
    CHECK(g.nodes.front() <= c - 30 * hw);
    CHECK(g.nodes.back() >= c + 30 * hw);
    CHECK(max_spacing_near(g, c, 10 * hw) <= fine * (1 + 1e-12));
  }
  CHECK(max_spacing_near(g, 0.0, 6 * sigma) <= sigma / 50 * (1 + 1e-12));
}

}  // namespace

TEST_CASE("build_velocity_grid invariants") {
  check_grid_invariants(build_velocity_grid(kGas, {}, 0.0), {}, 0.0);

  const std::vector<double> cat = {-40e6, 0.0, 40e6};
  const auto g = build_velocity_grid(kGas, cat, 0.0);
  check_grid_invariants(g, cat, 0.0);
  // Holes burned at +-40 MHz sit at -+31.2 m/s.
  const double fine = kGas.gamma_angular() / kGas.wavenumber() / 10;
  for (double v : {31.2, 0.0, -31.2}) CHECK(max_spacing_near(g, v, 5.0) <= fine);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> det(-300e6, 300e6);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> beams = {det(rng), det(rng)};
    const double probe = det(rng);
    check_grid_invariants(build_velocity_grid(kGas, beams, probe), beams, probe);
  }

  CHECK(build_velocity_grid(kGas, cat, 5e6).nodes == build_velocity_grid(kGas, cat, 5e6).nodes);
  CHECK_THROWS_AS(build_velocity_grid(kGas, cat, 0.0, GridOptions{0.0}), ValidationError);
}

TEST_CASE("weights integrate the Maxwell density") {
  const auto g = build_velocity_grid(kGas, std::vector<double>{40e6}, -13e6);
  double sum = 0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g.weights[i] * maxwell_pdf(g.nodes[i], kGas);
  // Second order: the residual comes from the spacing doublings.
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  const auto fine = build_velocity_grid(kGas, std::vector<double>{40e6}, -13e6, GridOptions{2.0});
  double fine_sum = 0;
  for (std::size_t i = 0; i < fine.size(); ++i)
    fine_sum += fine.weights[i] * maxwell_pdf(fine.nodes[i], kGas);
  CHECK((sum - 1.0) / (fine_sum - 1.0) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("doubling refinement barely moves alpha") {
  const std::vector<double> det = {40e6, 0.0, -40e6};
  const std::vector<double> s = {2.0, 2.0, 2.0};
  for (double probe : {-40e6, -7e6, 0.0, 25e6, 120e6}) {
    const double a = absorption_coefficient(s, det, probe, kGas, build_velocity_grid(kGas, det, probe));
    const double b = absorption_coefficient(
        s, det, probe, kGas, build_velocity_grid(kGas, det, probe, GridOptions{2.0}));
    CHECK(std::abs(a - b) / a < 1e-6);
  }
}

TEST_CASE("unsaturated absorption") {
  const auto g = build_velocity_grid(kGas, {}, 0.0);
  const double od0 = absorption_coefficient({}, {}, 0.0, kGas, g);
  const double oracle = brute_force_alpha({}, {}, 0.0, kGas, default_oracle_step(kGas));
  CHECK(std::abs(od0 - oracle) / oracle < 1e-6);
  // Oracle value; the Doppler-limit closed form D0 f(0) lambda Gamma / 4 is 1.997.
  CHECK(od0 == doctest::Approx(1.97599).epsilon(1e-5));
  const double closed = kGas.depth_scale * maxwell_pdf(0, kGas) * kGas.wavelength *
                        kGas.gamma_angular() / 4;
  CHECK(od0 == doctest::Approx(closed).epsilon(0.015));

  for (double d = -100e6; d <= 100e6; d += 10e6) {
    const double od = absorption_coefficient({}, {}, d, kGas, build_velocity_grid(kGas, {}, d));
    const double expected = maxwell_pdf(kGas.wavelength * d, kGas) / maxwell_pdf(0, kGas);
    CHECK(std::abs(od / od0 - expected) / expected < 0.01);
    const double mirrored =
        absorption_coefficient({}, {}, -d, kGas, build_velocity_grid(kGas, {}, -d));
    CHECK(std::abs(od - mirrored) / od < 1e-9);
  }
}

TEST_CASE("a single hole appears at the mirrored probe detuning") {
  const std::vector<double> det = {40e6};
  const std::vector<double> on = {2.0}, off = {0.0};
  auto od = [&](std::span<const double> s, double probe) {
    return absorption_coefficient(s, det, probe, kGas, build_velocity_grid(kGas, det, probe));
  };
  const double dip = od(off, -40e6) - od(on, -40e6);
  CHECK(dip > 0.5);
  // Counter-propagating side: the hole tail 80 MHz from its centre. The
  // power-broadened hole convolved with the probe Lorentzian has HWHM
  // (Gamma/2)(1 + sqrt(1 + s)) = 7.85 MHz, so the tail is ~1e-2 of the dip.
  const double leak = od(off, 40e6) - od(on, 40e6);
  CHECK(leak > 0.0);
  CHECK(leak / dip == doctest::Approx(9.5507e-3).epsilon(1e-3));

  double best = 0, best_od = 1e9;
  for (double p = -55e6; p <= -25e6; p += 0.5e6) {
    const double v = od(on, p);
    if (v < best_od) {
      best_od = v;
      best = p;
    }
  }
  CHECK(std::abs(best + 40e6) <= 1e6);
}

TEST_CASE("absorption is bounded and monotone in s") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> s(0.0, 8.0), det(-60e6, 60e6), probe(-100e6, 100e6),
      bump(0.0, 3.0);
  for (int i = 0; i < 30; ++i) {
    const std::vector<double> d = {det(rng), det(rng)};
    const double p = probe(rng);
    const auto g = build_velocity_grid(kGas, d, p);
    const AbsorptionKernel kernel(kGas, d, p, g);
    const std::vector<double> sv = {s(rng), s(rng)};
    const double a = kernel(sv);
    const double zero[] = {0.0, 0.0};
    CHECK(a > 0.0);
    CHECK(a <= kernel(zero));
    CHECK(a == absorption_coefficient(sv, d, p, kGas, g));
    for (std::size_t j = 0; j < 2; ++j) {
      auto more = sv;
      more[j] += bump(rng);
      CHECK(kernel(more) <= a);
    }
  }
  const std::vector<double> d = {0.0};
  const auto g = build_velocity_grid(kGas, d, 0.0);
  CHECK_THROWS_AS(absorption_coefficient(std::vector<double>{1.0, 2.0}, d, 0.0, kGas, g),
                  ValidationError);
  CHECK_THROWS_AS(absorption_coefficient(std::vector<double>{-1.0}, d, 0.0, kGas, g),
                  ValidationError);
}

TEST_CASE("od_map") {
  const std::size_t w = 12, h = 8;
  const double pitch = 50e-6;
  std::vector<ObjectBeam> dark = {{40e6, uniform_grid(w, h, pitch, 0.0)},
                                  {-40e6, uniform_grid(w, h, pitch, 0.0)}};
  const auto det = beam_detunings(dark);
  const auto g = build_velocity_grid(kGas, det, -40e6);
  const auto map = od_map(dark, -40e6, kGas, g);
  const double unsaturated = absorption_coefficient(std::vector<double>{0, 0}, det, -40e6, kGas, g);
  for (double v : map.od.values()) CHECK(v == unsaturated);
  CHECK(map.probe_detuning == -40e6);
  CHECK(map.pixel_pitch == pitch);

  SUBCASE("half-plane mask") {
    IntensityGrid half = uniform_grid(w, h, pitch, 0.0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w / 2; ++x) half.values(x, y) = 2.0;
    std::vector<ObjectBeam> beams = {{40e6, half}};
    const auto m = od_map(beams, -40e6, kGas);
    for (std::size_t y = 0; y < h; ++y) {
      CHECK(m.od(0, y) < m.od(w - 1, y));
      CHECK(m.od(w / 2 - 1, y) < m.od(w / 2, y));
    }
  }

  SUBCASE("thread count and pixel order do not change a bit") {
    IntensityGrid gauss = gaussian_profile(w, h, pitch, 3 * pitch, 4.0);
    std::vector<ObjectBeam> beams = {{40e6, gauss}, {0.0, gaussian_profile(w, h, pitch, 5 * pitch, 1.0)}};
    const auto one = od_map(beams, -40e6, kGas, Exec{1});
    const auto many = od_map(beams, -40e6, kGas, Exec{7});
    CHECK(one.od == many.od);

    // Reverse the pixel order, evaluate, reverse back.
    auto flipped = beams;
    for (auto& b : flipped) std::reverse(b.intensity.values.values().begin(), b.intensity.values.values().end());
    auto back = od_map(flipped, -40e6, kGas, Exec{3}).od;
    std::reverse(back.values().begin(), back.values().end());
    CHECK(back == one.od);

    // Memoized evaluation equals a direct per-pixel call.
    const auto grid = build_velocity_grid(kGas, beam_detunings(beams), -40e6);
    for (std::size_t p = 0; p < w * h; p += 7) {
      const double s[] = {beams[0].intensity.values[p], beams[1].intensity.values[p]};
      CHECK(one.od[p] == absorption_coefficient(s, beam_detunings(beams), -40e6, kGas, grid));
    }
  }

  SUBCASE("errors") {
    std::vector<ObjectBeam> mismatched = {{0.0, uniform_grid(w, h, pitch, 1.0)},
                                          {40e6, uniform_grid(w + 1, h, pitch, 1.0)}};
    CHECK_THROWS_AS(od_map(mismatched, 0.0, kGas), ValidationError);
    CHECK_THROWS_AS(od_map(std::vector<ObjectBeam>{}, 0.0, kGas), ValidationError);
    std::vector<ObjectBeam> negative = {{0.0, uniform_grid(w, h, pitch, 1.0)}};
    negative[0].intensity.values[3] = -1.0;
    CHECK_THROWS_AS(od_map(negative, 0.0, kGas), ValidationError);
  }
}
