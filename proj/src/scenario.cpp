#include "vshb/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace vshb {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Entry {
  std::string value;
  int line;
};

double to_number(const std::string& key, const Entry& e) {
  double v = 0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ParseError(e.line, "key '" + key + "': expected a number, got '" + e.value + "'");
  return v;
}

std::size_t to_count(const std::string& key, const Entry& e) {
  const double v = to_number(key, e);
  if (v < 1 || v != std::floor(v) || v > 1e6)
    throw ParseError(e.line, "key '" + key + "': expected a positive integer");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const Entry& e) {
  const auto v = lower(e.value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ParseError(e.line, "key '" + key + "': expected true or false");
}

std::vector<std::string> to_list(const Entry& e) {
  std::vector<std::string> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

FractionRect to_rect(const std::string& key, const Entry& e) {
  const auto parts = to_list(e);
  if (parts.size() != 4)
    throw ParseError(e.line, "key '" + key + "': expected x0, y0, x1, y1");
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) v[i] = to_number(key, Entry{parts[i], e.line});
  return {v[0], v[1], v[2], v[3]};
}

// Keys seen in one section instance, consumed by the section handlers.
class Section {
 public:
  Section(std::string name, int line) : name_(std::move(name)), line_(line) {}

  const std::string& name() const { return name_; }
  int line() const { return line_; }

  void add(const std::string& key, Entry e) {
    if (!entries_.emplace(key, e).second)
      throw ParseError(e.line, "duplicate key '" + key + "' in [" + name_ + "]");
  }

  template <typename Fn>
  void take(const std::string& key, Fn&& fn) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    fn(key, it->second);
    entries_.erase(it);
  }

  void reject_leftovers() const {
    if (entries_.empty()) return;
    // Report the earliest offending line.
    auto first = std::min_element(entries_.begin(), entries_.end(), [](auto& a, auto& b) {
      return a.second.line < b.second.line;
    });
    throw ParseError(first->second.line,
                     "unknown key '" + first->first + "' in [" + name_ + "]");
  }

 private:
  std::string name_;
  int line_;
  std::map<std::string, Entry> entries_;
};

void apply_gas(Section& s, GasParams& gas) {
  auto number = [](double& target, double scale = 1.0) {
    return [&target, scale](const std::string& k, const Entry& e) { target = to_number(k, e) * scale; };
  };
  s.take("atom_mass_kg", number(gas.atom_mass));
  s.take("wavelength_m", number(gas.wavelength));
  s.take("linewidth_mhz", number(gas.natural_linewidth_fwhm, 1e6));
  s.take("temperature_k", number(gas.temperature));
  s.take("depth_scale", number(gas.depth_scale));
  s.take("cell_length_m", number(gas.cell_length));
}

BeamSpec read_beam(Section& s, const fs::path& base_dir) {
  BeamSpec b;
  bool has_detuning = false;
  s.take("detuning_mhz", [&](auto& k, auto& e) {
    b.detuning = to_number(k, e) * 1e6;
    has_detuning = true;
  });
  if (!has_detuning) throw ParseError(s.line(), "[beam] requires detuning_mhz");
  s.take("peak_s", [&](auto& k, auto& e) {
    b.peak_s = to_number(k, e);
    if (b.peak_s < 0) throw ParseError(e.line, "key 'peak_s' must be non-negative");
  });
  s.take("waist_m", [&](auto& k, auto& e) {
    b.waist = to_number(k, e);
    if (!(*b.waist > 0)) throw ParseError(e.line, "key 'waist_m' must be positive");
  });
  int mask_line = s.line();
  s.take("mask", [&](auto&, auto& e) {
    b.mask_text = e.value;
    mask_line = e.line;
  });
  const auto kind = lower(b.mask_text);
  if (kind == "none") {
    b.mask = BeamSpec::Mask::none;
  } else if (kind == "nd") {
    b.mask = BeamSpec::Mask::nd;
  } else if (kind.rfind("letter:", 0) == 0) {
    b.mask = BeamSpec::Mask::letter;
    const auto glyph = b.mask_text.substr(7);
    if (glyph.size() != 1 || std::string("CAT").find(glyph[0]) == std::string::npos)
      throw ParseError(mask_line, "mask 'letter:' supports C, A or T");
    b.letter = glyph[0];
  } else {
    b.mask = BeamSpec::Mask::file;
    b.mask_file = fs::path(b.mask_text).is_absolute() ? fs::path(b.mask_text)
                                                      : base_dir / b.mask_text;
    if (!fs::exists(b.mask_file))
      throw ParseError(mask_line, "mask file not found: " + b.mask_file.string());
  }
  const bool nd = b.mask == BeamSpec::Mask::nd;
  auto nd_only = [&](auto fn) {
    return [&, fn](const std::string& k, const Entry& e) {
      if (!nd) throw ParseError(e.line, "key '" + k + "' requires mask = nd");
      fn(k, e);
    };
  };
  s.take("nd_a", nd_only([&](auto& k, auto& e) { b.nd.nd_a = to_number(k, e); }));
  s.take("nd_b", nd_only([&](auto& k, auto& e) { b.nd.nd_b = to_number(k, e); }));
  s.take("nd_rect_a", nd_only([&](auto& k, auto& e) { b.nd.rect_a = to_rect(k, e); }));
  s.take("nd_rect_b", nd_only([&](auto& k, auto& e) { b.nd.rect_b = to_rect(k, e); }));
  return b;
}

void apply_probe(Section& s, ProbeSpec& p) {
  s.take("profile", [&](auto&, auto& e) {
    const auto v = lower(e.value);
    if (v == "uniform") p.profile = ProbeSpec::Profile::uniform;
    else if (v == "gaussian") p.profile = ProbeSpec::Profile::gaussian;
    else throw ParseError(e.line, "key 'profile': expected uniform or gaussian");
  });
  s.take("waist_m", [&](auto& k, auto& e) { p.waist = to_number(k, e); });
  s.take("peak", [&](auto& k, auto& e) { p.peak = to_number(k, e); });
  s.take("floor", [&](auto& k, auto& e) { p.floor = to_number(k, e); });
}

void apply_output(Section& s, OutputSpec& o) {
  s.take("directory", [&](auto&, auto& e) { o.directory = e.value; });
  s.take("formats", [&](auto&, auto& e) {
    o.csv = o.pgm16 = false;
    for (const auto& f : to_list(e)) {
      const auto v = lower(f);
      if (v == "csv") o.csv = true;
      else if (v == "pgm16") o.pgm16 = true;
      else throw ParseError(e.line, "key 'formats': unknown format '" + f + "'");
    }
  });
  s.take("mirror", [&](auto& k, auto& e) { o.mirror = to_bool(k, e); });
}

}  // namespace

void Scenario::validate() const {
  gas.validate();
  if (width < 1 || height < 1) throw ValidationError("canvas must be at least 1x1");
  if (!(pitch > 0)) throw ValidationError("canvas pitch must be positive");
  if (!(probe.peak > 0)) throw ValidationError("probe peak must be positive");
  if (!(probe.floor > 0 && probe.floor < 1))
    throw ValidationError("probe floor must lie in (0, 1)");
  if (probe.profile == ProbeSpec::Profile::gaussian && !(probe.waist && *probe.waist > 0))
    throw ValidationError("gaussian probe requires a positive waist_m");
  if (!(output.csv || output.pgm16)) throw ValidationError("no output format selected");
  if (!(grid.refinement > 0)) throw ValidationError("grid_refinement must be positive");
  if (!allow_close_beams) {
    const double min_sep = 3.0 * gas.natural_linewidth_fwhm;
    for (std::size_t i = 0; i < beams.size(); ++i)
      for (std::size_t j = i + 1; j < beams.size(); ++j)
        if (std::abs(beams[i].detuning - beams[j].detuning) < min_sep)
          throw ValidationError(
              "beam detunings must be separated by at least 3x the natural "
              "linewidth (set allow_close_beams = true to override)");
  }
}

Experiment Scenario::build() const {
  validate();
  Experiment ex;
  ex.gas = gas;
  ex.grid = grid;
  ex.floor_fraction = probe.floor;
  ex.probe = probe.profile == ProbeSpec::Profile::uniform
                 ? uniform_grid(width, height, pitch, probe.peak)
                 : gaussian_profile(width, height, pitch, *probe.waist, probe.peak);
  for (const auto& b : beams) {
    IntensityGrid beam = b.waist ? gaussian_profile(width, height, pitch, *b.waist, b.peak_s)
                                 : uniform_grid(width, height, pitch, b.peak_s);
    switch (b.mask) {
      case BeamSpec::Mask::none:
        break;
      case BeamSpec::Mask::file: {
        const auto mask = load_mask(b.mask_file, pitch);
        if (mask.width() != width || mask.height() != height)
          throw ValidationError("mask " + b.mask_file.string() + " is " +
                                std::to_string(mask.width()) + "x" +
                                std::to_string(mask.height()) + ", canvas is " +
                                std::to_string(width) + "x" + std::to_string(height));
        beam = apply_mask(beam, mask);
        break;
      }
      case BeamSpec::Mask::letter:
        beam = apply_mask(beam, letter_mask(b.letter, width, height, pitch));
        break;
      case BeamSpec::Mask::nd:
        beam = apply_mask(beam, nd_composite(b.nd, width, height, pitch));
        break;
    }
    ex.beams.push_back({b.detuning, std::move(beam)});
  }
  ex.validate();
  return ex;
}

std::vector<ValidationBeam> Scenario::validation_beams() const {
  std::vector<ValidationBeam> out;
  for (const auto& b : beams) out.push_back({b.detuning, b.peak_s});
  return out;
}

nlohmann::ordered_json Scenario::resolved() const {
  nlohmann::ordered_json j;
  j["gas"] = {{"atom_mass_kg", gas.atom_mass},
              {"wavelength_m", gas.wavelength},
              {"linewidth_mhz", gas.natural_linewidth_fwhm / 1e6},
              {"temperature_k", gas.temperature},
              {"depth_scale", gas.depth_scale},
              {"cell_length_m", gas.cell_length}};
  j["canvas"] = {{"width_px", width}, {"height_px", height}, {"pitch_m", pitch}};
  auto beam_list = nlohmann::ordered_json::array();
  for (const auto& b : beams) {
    nlohmann::ordered_json e = {{"detuning_mhz", b.detuning / 1e6},
                                {"peak_s", b.peak_s},
                                {"mask", b.mask_text}};
    if (b.waist) e["waist_m"] = *b.waist;
    if (b.mask == BeamSpec::Mask::nd) {
      e["nd_a"] = b.nd.nd_a;
      e["nd_b"] = b.nd.nd_b;
      e["nd_rect_a"] = {b.nd.rect_a.x0, b.nd.rect_a.y0, b.nd.rect_a.x1, b.nd.rect_a.y1};
      e["nd_rect_b"] = {b.nd.rect_b.x0, b.nd.rect_b.y0, b.nd.rect_b.x1, b.nd.rect_b.y1};
    }
    beam_list.push_back(std::move(e));
  }
  j["beams"] = std::move(beam_list);
  j["probe"] = {{"profile", probe.profile == ProbeSpec::Profile::uniform ? "uniform" : "gaussian"},
                {"peak", probe.peak},
                {"floor", probe.floor}};
  if (probe.waist) j["probe"]["waist_m"] = *probe.waist;
  auto formats = nlohmann::ordered_json::array();
  if (output.csv) formats.push_back("csv");
  if (output.pgm16) formats.push_back("pgm16");
  j["output"] = {{"formats", formats}, {"mirror", output.mirror}};
  j["options"] = {{"allow_close_beams", allow_close_beams},
                  {"grid_refinement", grid.refinement}};
  return j;
}

Scenario parse_scenario_text(const std::string& text, const fs::path& base_dir) {
  static const std::set<std::string> kSections = {"gas",   "canvas", "beam",
                                                   "probe", "output", "options"};
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find(" #"); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      const auto name = lower(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(name)) throw ParseError(line_no, "unknown section [" + name + "]");
      if (name != "beam") {
        for (const auto& s : sections)
          if (s.name() == name) throw ParseError(line_no, "duplicate section [" + name + "]");
      }
      sections.emplace_back(name, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    if (sections.empty()) throw ParseError(line_no, "key outside of any section");
    const auto key = lower(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    sections.back().add(key, Entry{value, line_no});
  }

  Scenario sc;
  for (auto& s : sections) {
    if (s.name() == "gas") {
      apply_gas(s, sc.gas);
    } else if (s.name() == "canvas") {
      s.take("width_px", [&](auto& k, auto& e) { sc.width = to_count(k, e); });
      s.take("height_px", [&](auto& k, auto& e) { sc.height = to_count(k, e); });
      s.take("pitch_m", [&](auto& k, auto& e) { sc.pitch = to_number(k, e); });
    } else if (s.name() == "beam") {
      sc.beams.push_back(read_beam(s, base_dir));
    } else if (s.name() == "probe") {
      apply_probe(s, sc.probe);
    } else if (s.name() == "output") {
      apply_output(s, sc.output);
    } else if (s.name() == "options") {
      s.take("allow_close_beams", [&](auto& k, auto& e) { sc.allow_close_beams = to_bool(k, e); });
      s.take("grid_refinement", [&](auto& k, auto& e) { sc.grid.refinement = to_number(k, e); });
    }
    s.reject_leftovers();
  }
  sc.validate();
  return sc;
}

Scenario parse_scenario(const fs::path& path) {
  const auto text = read_file(path);
  return parse_scenario_text(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace vshb
