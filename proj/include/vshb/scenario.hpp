#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "vshb/imaging.hpp"
#include "vshb/oracle.hpp"

namespace vshb {

struct BeamSpec {
  enum class Mask { none, file, letter, nd };

  double detuning = 0.0;  // Hz
  double peak_s = 2.0;
  Mask mask = Mask::none;
  std::string mask_text = "none";  // as written in the scenario
  std::filesystem::path mask_file; // resolved against the scenario directory
  char letter = 0;
  NDLayout nd;
  std::optional<double> waist;  // m, Gaussian envelope
};

struct ProbeSpec {
  enum class Profile { uniform, gaussian };
  Profile profile = Profile::uniform;
  std::optional<double> waist;  // m, required for gaussian
  double peak = 1.0;
  double floor = 1e-6;  // fraction of the probe peak
};

struct OutputSpec {
  std::filesystem::path directory = "out";
  bool csv = true;
  bool pgm16 = true;
  bool mirror = false;
};

// A validated, fully defaulted description of one simulated experiment.
struct Scenario {
  GasParams gas;
  std::size_t width = 256;
  std::size_t height = 256;
  double pitch = 50e-6;
  std::vector<BeamSpec> beams;
  ProbeSpec probe;
  OutputSpec output;
  bool allow_close_beams = false;
  GridOptions grid;

  // Checks the invariants parse_scenario guarantees; throws ValidationError.
  void validate() const;

  // Loads masks and synthesizes the beam and probe grids.
  Experiment build() const;

  std::vector<ValidationBeam> validation_beams() const;

  // The resolved parameter set, every default filled in.
  nlohmann::ordered_json resolved() const;
};

// Parses the sectioned key/value format documented in the README. Relative
// mask paths resolve against `base_dir`.
Scenario parse_scenario_text(const std::string& text,
                             const std::filesystem::path& base_dir = ".");
Scenario parse_scenario(const std::filesystem::path& path);

}  // namespace vshb
