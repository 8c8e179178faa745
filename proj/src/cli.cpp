#include "vshb/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <ostream>
#include <system_error>

#include "vshb/scenario.hpp"

namespace vshb::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<double> detuning_range(double from, double to, double step) {
  if (!std::isfinite(from) || !std::isfinite(to) || !std::isfinite(step))
    throw ValidationError("detuning range must be finite");
  if (!(step > 0)) throw ValidationError("--step must be positive");
  if (to < from) throw ValidationError("--from must not exceed --to");
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = from + static_cast<double>(i) * step;
  return out;
}

void ArtifactSet::add(std::string name, std::string bytes) {
  files_.emplace_back(std::move(name), std::move(bytes));
}

void ArtifactSet::commit(const fs::path& directory) const {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec || !fs::is_directory(directory))
    throw IoError("cannot create output directory " + directory.string());

  std::vector<fs::path> staged;
  auto discard = [&] {
    for (const auto& p : staged) fs::remove(p, ec);
  };
  try {
    for (const auto& [name, bytes] : files_) {
      const fs::path tmp = directory / (name + ".partial");
      staged.push_back(tmp);
      write_file(tmp, bytes);
    }
  } catch (...) {
    discard();
    throw;
  }
  for (std::size_t i = 0; i < files_.size(); ++i) {
    fs::rename(staged[i], directory / files_[i].first, ec);
    if (ec) {
      discard();
      throw IoError("cannot finalize " + (directory / files_[i].first).string());
    }
  }
}

namespace {

std::string detuning_tag(double detuning) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.3fMHz", detuning / 1e6 + 0.0);
  std::string tag = buf;
  if (tag == "-0.000MHz") tag = "+0.000MHz";
  return tag;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

ordered_json add_tomogram(ArtifactSet& set, const Tomogram& t, const OutputSpec& output) {
  const Array2D<double> image = output.mirror ? mirror_transform(t.delta_od) : t.delta_od;
  const std::string stem = "tomogram_" + detuning_tag(t.probe_detuning);
  ordered_json entry = {{"detuning_hz", t.probe_detuning},
                        {"resonant_velocity_m_s", t.resonant_velocity},
                        {"momentum_kg_m_s", t.momentum},
                        {"invalid_pixels", t.invalid_count()},
                        {"mirrored", output.mirror}};
  auto files = ordered_json::array();
  if (output.csv) {
    set.add(stem + ".csv", encode_csv(image));
    files.push_back(stem + ".csv");
  }
  if (output.pgm16) {
    ExportMeta meta;
    meta.detuning = t.probe_detuning;
    meta.resonant_velocity = t.resonant_velocity;
    meta.momentum = t.momentum;
    meta.invalid_pixels = t.invalid_count();
    auto pgm = encode_pgm16(image, t.pixel_pitch, meta);
    set.add(stem + ".pgm", std::move(pgm.image));
    set.add(stem + ".pgm.json", std::move(pgm.sidecar));
    files.push_back(stem + ".pgm");
    files.push_back(stem + ".pgm.json");
  }
  entry["files"] = std::move(files);
  return entry;
}

ordered_json manifest(const std::string& command, ordered_json arguments,
                      const Scenario& scenario) {
  ordered_json m;
  m["command"] = command;
  m["arguments"] = std::move(arguments);
  m["scenario"] = scenario.resolved();
  return m;
}

struct Common {
  std::string scenario_path;
  std::string out_dir;
  bool mirror = false;
  unsigned threads = 0;

  void attach(CLI::App* cmd, bool with_mirror) {
    cmd->add_option("scenario", scenario_path, "Scenario file")->required();
    cmd->add_option("--out", out_dir, "Output directory (overrides the scenario)");
    if (with_mirror) cmd->add_flag("--mirror", mirror, "Flip images horizontally");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  Scenario load() const {
    Scenario sc = parse_scenario(scenario_path);
    if (!out_dir.empty()) sc.output.directory = out_dir;
    if (mirror) sc.output.mirror = true;
    return sc;
  }

  Exec exec() const { return Exec{threads}; }
};

void add_hz_option(CLI::App* cmd, const std::string& name, double& target,
                   const std::string& help, bool required = true) {
  static const std::map<std::string, double> kUnits = {
      {"hz", 1.0}, {"khz", 1e3}, {"mhz", 1e6}, {"ghz", 1e9}};
  auto* opt = cmd->add_option(name, target, help + " (Hz; suffix kHz/MHz/GHz accepted)")
                  ->transform(CLI::AsNumberWithUnit(kUnits, CLI::AsNumberWithUnit::CASE_INSENSITIVE));
  if (required) opt->required();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Velocity-selective hole burning phase-space imaging simulator", "vshb"};
  app.require_subcommand(1);

  Common tomo_args, scan_args, curve_args, validate_args;
  double detuning = 0, from = 0, to = 0, step = 0;
  std::string report_path;
  double refinement = 0;
  std::size_t samples = 200;

  auto* tomo = app.add_subcommand("tomogram", "Single dOD tomogram at one probe detuning");
  tomo_args.attach(tomo, true);
  add_hz_option(tomo, "--detuning", detuning, "Probe detuning");

  auto* scan_cmd = app.add_subcommand("scan", "Tomogram stack over a detuning range");
  scan_args.attach(scan_cmd, true);
  add_hz_option(scan_cmd, "--from", from, "First probe detuning");
  add_hz_option(scan_cmd, "--to", to, "Last probe detuning");
  add_hz_option(scan_cmd, "--step", step, "Detuning step");

  auto* curve = app.add_subcommand("curve", "Mean probe transmittance versus detuning");
  curve_args.attach(curve, false);
  add_hz_option(curve, "--from", from, "First probe detuning");
  add_hz_option(curve, "--to", to, "Last probe detuning");
  add_hz_option(curve, "--step", step, "Detuning step");

  auto* validate = app.add_subcommand("validate", "Check quadrature against the brute-force oracle");
  validate->add_option("scenario", validate_args.scenario_path, "Scenario file")->required();
  validate->add_option("--out", report_path, "Write the JSON report here instead of stdout");
  validate->add_option("--threads", validate_args.threads, "Worker threads (0 = all cores)");
  validate->add_option("--grid-refinement", refinement,
                       "Override the production grid density (values < 1 coarsen)");
  validate->add_option("--samples", samples, "Number of random sample points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }

  try {
    if (*tomo) {
      const Scenario sc = tomo_args.load();
      const Tomogram t = tomogram(sc.build(), detuning, tomo_args.exec());
      ArtifactSet set;
      ordered_json m = manifest("tomogram", {{"detuning_hz", detuning}}, sc);
      m["tomograms"] = ordered_json::array({add_tomogram(set, t, sc.output)});
      set.add("manifest.json", m.dump(2) + "\n");
      set.commit(sc.output.directory);
      out << "wrote " << set.files().size() << " files to " << sc.output.directory.string() << "\n";
    } else if (*scan_cmd) {
      const Scenario sc = scan_args.load();
      const auto detunings = detuning_range(from, to, step);
      const TomogramStack stack = scan(sc.build(), detunings, scan_args.exec());
      ArtifactSet set;
      auto entries = ordered_json::array();
      for (const auto& t : stack.tomograms) entries.push_back(add_tomogram(set, t, sc.output));
      ordered_json stack_json = {{"tomograms", entries}};
      set.add("stack.json", stack_json.dump(2) + "\n");
      ordered_json m = manifest(
          "scan", {{"from_hz", from}, {"to_hz", to}, {"step_hz", step}}, sc);
      m["detunings_hz"] = detunings;
      set.add("manifest.json", m.dump(2) + "\n");
      set.commit(sc.output.directory);
      out << "wrote " << stack.tomograms.size() << " tomograms to "
          << sc.output.directory.string() << "\n";
    } else if (*curve) {
      const Scenario sc = curve_args.load();
      const auto detunings = detuning_range(from, to, step);
      const auto points = transmittance_curve(sc.build(), detunings, curve_args.exec());
      std::string csv = "detuning_hz,transmittance\n";
      for (const auto& [d, t] : points) csv += format_double(d) + "," + format_double(t) + "\n";
      ArtifactSet set;
      set.add("curve.csv", std::move(csv));
      set.add("manifest.json",
              manifest("curve", {{"from_hz", from}, {"to_hz", to}, {"step_hz", step}}, sc)
                      .dump(2) + "\n");
      set.commit(sc.output.directory);
      out << "wrote " << points.size() << " curve points to "
          << (sc.output.directory / "curve.csv").string() << "\n";
    } else if (*validate) {
      const Scenario sc = parse_scenario(validate_args.scenario_path);
      ValidateOptions options;
      options.grid = sc.grid;
      if (refinement > 0) options.grid.refinement = refinement;
      options.samples = samples;
      const auto beams = sc.validation_beams();
      const auto report = validate_report(sc.gas, beams, options, validate_args.exec());
      if (report_path.empty()) {
        out << report.to_json();
      } else {
        ArtifactSet set;
        const fs::path target(report_path);
        set.add(target.filename().string(), report.to_json());
        set.commit(target.parent_path().empty() ? fs::path(".") : target.parent_path());
      }
      if (!report.passed) {
        err << "validation failed\n";
        return kToleranceFailure;
      }
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kSuccess;
}

}  // namespace vshb::cli
