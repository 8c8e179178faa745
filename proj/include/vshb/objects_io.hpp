#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "vshb/array2d.hpp"

namespace vshb {

enum class GridRole {
  intensity,      // saturation-normalized s values, >= 0
  transmittance,  // mask transmittance in [0, 1]
};

// Transverse grid of non-negative values with a square pixel pitch.
struct IntensityGrid {
  Array2D<double> values;
  double pixel_pitch = 50e-6;  // m
  GridRole role = GridRole::intensity;

  std::size_t width() const { return values.width(); }
  std::size_t height() const { return values.height(); }

  // Throws ValidationError if any invariant of the role is violated.
  void validate() const;
};

IntensityGrid uniform_grid(std::size_t width, std::size_t height, double pitch,
                           double value, GridRole role = GridRole::intensity);

// Reads an 8- or 16-bit single-channel PGM (P5/P2) or PNG and maps samples
// linearly onto [0, 1] transmittance (0 -> opaque, maxval -> clear).
IntensityGrid load_mask(const std::filesystem::path& path,
                        double pixel_pitch = 50e-6);

// Centered Gaussian beam, peak_s * exp(-2 r^2 / waist^2).
IntensityGrid gaussian_profile(std::size_t width, std::size_t height,
                               double pitch, double waist, double peak_s);

// Elementwise product; the result keeps the role of `beam`.
IntensityGrid apply_mask(const IntensityGrid& beam, const IntensityGrid& mask);

// Axis-aligned rectangle in fractions of the frame: x in [x0, x1), y in [y0, y1).
struct FractionRect {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};

// Two overlapping neutral density filters. Pixels under both filters see the
// sum of their densities.
struct NDLayout {
  double nd_a = 0.3;
  double nd_b = 0.6;
  FractionRect rect_a{0.5, 0.0, 1.0, 1.0};
  FractionRect rect_b{0.0, 0.5, 1.0, 1.0};

  // Region densities R1 (clear), R2 (a only), R3 (b only), R4 (both).
  std::array<double, 4> region_densities() const {
    return {0.0, nd_a, nd_b, nd_a + nd_b};
  }
};

IntensityGrid nd_composite(const NDLayout& layout, std::size_t width,
                           std::size_t height, double pitch);

// Binary block-letter mask (letter clear, rest opaque). Supports 'C', 'A', 'T'.
IntensityGrid letter_mask(char letter, std::size_t width, std::size_t height,
                          double pitch);

enum class ExportFormat { csv, pgm16 };

// Metadata written to the JSON sidecar of a pgm16 export.
struct ExportMeta {
  std::optional<double> detuning;           // Hz
  std::optional<double> resonant_velocity;  // m/s
  std::optional<double> momentum;           // kg m/s
  std::optional<std::size_t> invalid_pixels;
  // Normalization range; defaults to the grid's min and max.
  std::optional<double> range_min;
  std::optional<double> range_max;
};

// csv: row-major, shortest round-trip decimal, ',' separated, LF endings.
std::string encode_csv(const Array2D<double>& grid);
Array2D<double> decode_csv(const std::string& text);

// Binary 16-bit PGM with values mapped from [min, max] onto [0, 65535]; a
// constant grid maps to 0. Returns the image bytes and the sidecar JSON text.
struct Pgm16 {
  std::string image;
  std::string sidecar;
};
Pgm16 encode_pgm16(const Array2D<double>& grid, double pixel_pitch,
                   const ExportMeta& meta = {});

// Writes csv to `path`, or pgm16 to `path` plus `path` with ".json" appended.
void export_grid(const Array2D<double>& grid, double pixel_pitch,
                 const std::filesystem::path& path, ExportFormat format,
                 const ExportMeta& meta = {});

Array2D<double> read_csv_grid(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace vshb
