#include "vshb/objects_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <numbers>
#include <nlohmann/json.hpp>
#include <sstream>

namespace vshb {

namespace fs = std::filesystem;

void IntensityGrid::validate() const {
  if (values.width() < 1 || values.height() < 1)
    throw ValidationError("grid must be at least 1x1");
  if (!std::isfinite(pixel_pitch) || pixel_pitch <= 0.0)
    throw ValidationError("grid pixel pitch must be positive");
  for (double v : values.values()) {
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError("grid values must be finite and non-negative");
    if (role == GridRole::transmittance && v > 1.0)
      throw ValidationError("transmittance values must not exceed 1");
  }
}

IntensityGrid uniform_grid(std::size_t width, std::size_t height, double pitch,
                           double value, GridRole role) {
  IntensityGrid g{Array2D<double>(width, height, value), pitch, role};
  g.validate();
  return g;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Mask ingestion

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(const std::string& bytes) : bytes_(bytes) {}

  unsigned long next_number() {
    skip_space_and_comments();
    unsigned long value = 0;
    auto [ptr, ec] = std::from_chars(bytes_.data() + pos_,
                                     bytes_.data() + bytes_.size(), value);
    if (ec != std::errc()) throw ValidationError("malformed PGM header");
    pos_ = static_cast<std::size_t>(ptr - bytes_.data());
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() const { return pos_ + 1; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 2;
};

IntensityGrid decode_pgm(const std::string& bytes, double pitch) {
  PgmHeaderReader header(bytes);
  const auto width = header.next_number();
  const auto height = header.next_number();
  const auto maxval = header.next_number();
  if (width == 0 || height == 0) throw ValidationError("zero-size image");
  if (maxval == 0 || maxval > 65535)
    throw ValidationError("unsupported PGM maxval " + std::to_string(maxval));
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t offset = header.raster_offset();
  if (bytes.size() < offset + width * height * bytes_per_sample)
    throw ValidationError("truncated PGM raster");

  IntensityGrid grid{Array2D<double>(width, height), pitch,
                     GridRole::transmittance};
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::size_t i = 0; i < width * height; ++i) {
    unsigned sample = raster[i * bytes_per_sample];
    if (bytes_per_sample == 2) sample = (sample << 8) | raster[i * 2 + 1];
    grid.values[i] = std::min(1.0, static_cast<double>(sample) / maxval);
  }
  return grid;
}

struct PngReadState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

IntensityGrid decode_png(const fs::path& path, double pitch) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  PngReadState st;
  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!st.png) throw IoError("libpng initialization failed");
  st.info = png_create_info_struct(st.png);
  if (!st.info) throw IoError("libpng initialization failed");

  // No objects with destructors may be created between setjmp and the reads.
  if (setjmp(png_jmpbuf(st.png))) throw ValidationError("corrupt PNG: " + path.string());
  png_init_io(st.png, file.get());
  png_read_png(st.png, st.info, PNG_TRANSFORM_IDENTITY, nullptr);

  const png_uint_32 width = png_get_image_width(st.png, st.info);
  const png_uint_32 height = png_get_image_height(st.png, st.info);
  const int depth = png_get_bit_depth(st.png, st.info);
  const int color = png_get_color_type(st.png, st.info);
  if (color != PNG_COLOR_TYPE_GRAY)
    throw ValidationError("PNG mask must be single-channel grayscale");
  if (depth != 8 && depth != 16)
    throw ValidationError("PNG mask must be 8- or 16-bit");
  if (width == 0 || height == 0) throw ValidationError("zero-size image");

  png_bytepp rows = png_get_rows(st.png, st.info);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  IntensityGrid grid{Array2D<double>(width, height), pitch, GridRole::transmittance};
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      unsigned sample = depth == 16
                            ? (unsigned(rows[y][2 * x]) << 8) | rows[y][2 * x + 1]
                            : rows[y][x];
      grid.values(x, y) = sample / maxval;
    }
  }
  return grid;
}

}  // namespace

IntensityGrid load_mask(const fs::path& path, double pixel_pitch) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
    return decode_pgm(bytes, pixel_pitch);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin(),
                                      [](unsigned char a, char b) {
                                        return a == static_cast<unsigned char>(b);
                                      }))
    return decode_png(path, pixel_pitch);
  throw ValidationError("unsupported mask format (expected binary PGM or PNG): " +
                        path.string());
}

// ---------------------------------------------------------------------------
// Analytic profiles

IntensityGrid gaussian_profile(std::size_t width, std::size_t height,
                               double pitch, double waist, double peak_s) {
  if (!(waist > 0.0)) throw ValidationError("gaussian_profile: waist must be positive");
  if (!(peak_s >= 0.0)) throw ValidationError("gaussian_profile: peak must be non-negative");
  if (width < 1 || height < 1 || !(pitch > 0.0))
    throw ValidationError("gaussian_profile: empty frame");
  IntensityGrid g{Array2D<double>(width, height), pitch, GridRole::intensity};
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double cy = 0.5 * static_cast<double>(height - 1);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = (static_cast<double>(x) - cx) * pitch;
      const double dy = (static_cast<double>(y) - cy) * pitch;
      g.values(x, y) = peak_s * std::exp(-2.0 * (dx * dx + dy * dy) / (waist * waist));
    }
  }
  return g;
}

IntensityGrid apply_mask(const IntensityGrid& beam, const IntensityGrid& mask) {
  require_same_shape(beam.values, mask.values, "apply_mask");
  IntensityGrid out = beam;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= mask.values[i];
  return out;
}

IntensityGrid nd_composite(const NDLayout& layout, std::size_t width,
                           std::size_t height, double pitch) {
  if (!(layout.nd_a >= 0.0) || !(layout.nd_b >= 0.0))
    throw ValidationError("neutral densities must be non-negative");
  for (const auto& r : {layout.rect_a, layout.rect_b}) {
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
      throw ValidationError("degenerate ND filter rectangle");
    if (r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > 1.0 || r.y1 > 1.0)
      throw ValidationError("ND filter rectangle outside the frame");
  }
  if (width < 1 || height < 1) throw ValidationError("nd_composite: empty frame");

  const auto densities = layout.region_densities();
  std::array<double, 4> transmittance{};
  for (std::size_t i = 0; i < 4; ++i) transmittance[i] = std::pow(10.0, -densities[i]);

  auto inside = [](const FractionRect& r, double u, double v) {
    return u >= r.x0 && u < r.x1 && v >= r.y0 && v < r.y1;
  };
  IntensityGrid g{Array2D<double>(width, height), pitch, GridRole::transmittance};
  for (std::size_t y = 0; y < height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      const bool a = inside(layout.rect_a, u, v);
      const bool b = inside(layout.rect_b, u, v);
      g.values(x, y) = transmittance[(a ? 1 : 0) + (b ? 2 : 0)];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Letters. Each glyph is drawn in a unit box; the letters of "CAT" sit side by
// side in thirds of the frame so their masks barely correlate.

namespace {

bool near_segment(double u, double v, double ax, double ay, double bx, double by,
                  double radius) {
  const double dx = bx - ax, dy = by - ay;
  const double t = std::clamp(((u - ax) * dx + (v - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  const double ex = u - ax - t * dx, ey = v - ay - t * dy;
  return ex * ex + ey * ey < radius * radius;
}

bool glyph(char letter, double u, double v) {
  switch (letter) {
    case 'C': {
      const double r = std::hypot(u - 0.5, v - 0.5);
      const double angle = std::atan2(v - 0.5, u - 0.5);
      return r < 0.48 && r > 0.30 && std::abs(angle) > std::numbers::pi / 4;
    }
    case 'A':
      return near_segment(u, v, 0.5, 0.06, 0.1, 0.94, 0.08) ||
             near_segment(u, v, 0.5, 0.06, 0.9, 0.94, 0.08) ||
             (v > 0.56 && v < 0.70 && u > 0.25 && u < 0.75);
    case 'T':
      return (v > 0.02 && v < 0.18 && u > 0.05 && u < 0.95) ||
             (u > 0.41 && u < 0.59 && v > 0.02 && v < 0.98);
    default:
      throw ValidationError(std::string("no glyph for letter '") + letter + "'");
  }
}

FractionRect letter_box(char letter) {
  switch (letter) {
    case 'C': return {0.04, 0.3, 0.32, 0.7};
    case 'A': return {0.36, 0.3, 0.64, 0.7};
    case 'T': return {0.68, 0.3, 0.96, 0.7};
    default: throw ValidationError(std::string("no glyph for letter '") + letter + "'");
  }
}

}  // namespace

IntensityGrid letter_mask(char letter, std::size_t width, std::size_t height,
                          double pitch) {
  if (width < 1 || height < 1) throw ValidationError("letter_mask: empty frame");
  const FractionRect box = letter_box(letter);
  IntensityGrid g{Array2D<double>(width, height), pitch, GridRole::transmittance};
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      const double u = (fx - box.x0) / (box.x1 - box.x0);
      const double v = (fy - box.y0) / (box.y1 - box.y0);
      const bool in_box = u >= 0 && u < 1 && v >= 0 && v < 1;
      g.values(x, y) = in_box && glyph(letter, u, v) ? 1.0 : 0.0;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Export

std::string encode_csv(const Array2D<double>& grid) {
  if (grid.empty()) throw ValidationError("cannot export an empty grid");
  std::string out;
  out.reserve(grid.size() * 12);
  char buf[64];
  for (std::size_t y = 0; y < grid.height(); ++y) {
    for (std::size_t x = 0; x < grid.width(); ++x) {
      if (x > 0) out.push_back(',');
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, grid(x, y));
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

Array2D<double> decode_csv(const std::string& text) {
  std::vector<double> values;
  std::size_t width = 0, height = 0;
  std::size_t row_len = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    double v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc())
      throw ValidationError("malformed csv value in row " + std::to_string(height + 1));
    values.push_back(v);
    ++row_len;
    p = next;
    if (p < end && *p == ',') {
      ++p;
    } else if (p == end || *p == '\n') {
      if (height == 0) width = row_len;
      else if (row_len != width)
        throw ValidationError("ragged csv row " + std::to_string(height + 1));
      ++height;
      row_len = 0;
      if (p < end) ++p;
    } else {
      throw ValidationError("unexpected character in csv row " + std::to_string(height + 1));
    }
  }
  if (width == 0 || height == 0) throw ValidationError("empty csv grid");
  Array2D<double> grid(width, height);
  std::copy(values.begin(), values.end(), grid.values().begin());
  return grid;
}

Pgm16 encode_pgm16(const Array2D<double>& grid, double pixel_pitch,
                   const ExportMeta& meta) {
  if (grid.empty()) throw ValidationError("cannot export an empty grid");
  const auto [lo_it, hi_it] = std::minmax_element(grid.values().begin(), grid.values().end());
  const double lo = meta.range_min.value_or(*lo_it);
  const double hi = meta.range_max.value_or(*hi_it);
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw ValidationError("invalid pgm16 normalization range");

  std::string image = "P5\n" + std::to_string(grid.width()) + " " +
                      std::to_string(grid.height()) + "\n65535\n";
  const std::size_t header = image.size();
  image.resize(header + 2 * grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double scaled = 0.0;
    if (hi > lo) scaled = std::clamp((grid[i] - lo) / (hi - lo), 0.0, 1.0) * 65535.0;
    const auto sample = static_cast<unsigned>(std::lround(scaled));
    image[header + 2 * i] = static_cast<char>((sample >> 8) & 0xff);
    image[header + 2 * i + 1] = static_cast<char>(sample & 0xff);
  }

  nlohmann::ordered_json side;
  side["format"] = "pgm16";
  side["width"] = grid.width();
  side["height"] = grid.height();
  side["pixel_pitch_m"] = pixel_pitch;
  side["min"] = lo;
  side["max"] = hi;
  if (meta.detuning) side["detuning_hz"] = *meta.detuning;
  if (meta.resonant_velocity) side["resonant_velocity_m_s"] = *meta.resonant_velocity;
  if (meta.momentum) side["momentum_kg_m_s"] = *meta.momentum;
  if (meta.invalid_pixels) side["invalid_pixels"] = *meta.invalid_pixels;
  return {std::move(image), side.dump(2) + "\n"};
}

void export_grid(const Array2D<double>& grid, double pixel_pitch, const fs::path& path,
                 ExportFormat format, const ExportMeta& meta) {
  if (format == ExportFormat::csv) {
    write_file(path, encode_csv(grid));
    return;
  }
  const Pgm16 pgm = encode_pgm16(grid, pixel_pitch, meta);
  write_file(path, pgm.image);
  write_file(fs::path(path.string() + ".json"), pgm.sidecar);
}

Array2D<double> read_csv_grid(const fs::path& path) { return decode_csv(read_file(path)); }

}  // namespace vshb
