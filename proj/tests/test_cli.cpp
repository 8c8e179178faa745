#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vshb/cli.hpp"
#include "vshb/error.hpp"
#include "vshb/objects_io.hpp"
#include "vshb/oracle.hpp"

using namespace vshb;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScenarios = VSHB_SCENARIO_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vshb_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vshb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    files[e.path().filename().string()] = read_file(e.path());
  return files;
}

fs::path write_scenario(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  write_file(p, text);
  return p;
}

}  // namespace

TEST_CASE("detuning_range") {
  CHECK(cli::detuning_range(-40e6, 40e6, 40e6) == std::vector<double>{-40e6, 0.0, 40e6});
  CHECK(cli::detuning_range(5e6, 5e6, 1e6) == std::vector<double>{5e6});
  CHECK(cli::detuning_range(0.0, 10e6, 20e6) == std::vector<double>{0.0});
  CHECK(cli::detuning_range(-150e6, 150e6, 1e6).size() == 301);
  CHECK(cli::detuning_range(0.0, 1.0, 0.3).size() == 4);
  CHECK_THROWS_AS(cli::detuning_range(1.0, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(cli::detuning_range(0.0, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(cli::detuning_range(0.0, 1.0, -1.0), ValidationError);
}

TEST_CASE("tomogram command") {
  TempDir dir;
  SUBCASE("CAT at -40 MHz records the velocity class") {
    const auto r = run_cli({"tomogram", (kScenarios / "cat.ini").string(), "--detuning", "-40MHz",
                            "--out", dir.path.string()});
    REQUIRE(r.code == 0);
    const auto files = snapshot(dir.path);
    CHECK(files.size() == 4);
    const auto side = json::parse(files.at("tomogram_-40.000MHz.pgm.json"));
    CHECK(side["resonant_velocity_m_s"].get<double>() == doctest::Approx(-31.2).epsilon(1e-9));
    CHECK(side["detuning_hz"] == -40e6);
    CHECK(side["momentum_kg_m_s"].get<double>() == doctest::Approx(-4.5026e-24).epsilon(1e-4));
    const auto manifest = json::parse(files.at("manifest.json"));
    CHECK(manifest["command"] == "tomogram");
    CHECK(manifest["scenario"]["beams"].size() == 3);
    const auto grid = decode_csv(files.at("tomogram_-40.000MHz.csv"));
    CHECK(grid.width() == 128);
    CHECK(grid.height() == 128);
  }
  SUBCASE("beams off gives a constant-zero grid") {
    const auto sc = write_scenario(dir.path, "off.ini",
                                   "[canvas]\nwidth_px = 8\nheight_px = 8\n"
                                   "[beam]\ndetuning_mhz = 0\npeak_s = 0\n");
    const auto out = dir.path / "off";
    REQUIRE(run_cli({"tomogram", sc.string(), "--detuning", "0", "--out", out.string()}).code == 0);
    const auto grid = read_csv_grid(out / "tomogram_+0.000MHz.csv");
    for (double v : grid.values()) CHECK(v == 0.0);
  }
  SUBCASE("unwritable output leaves no files") {
    write_file(dir.path / "blocker", "x");
    const auto target = dir.path / "blocker" / "sub";
    const auto r = run_cli({"tomogram", (kScenarios / "nd.ini").string(), "--detuning", "0",
                            "--out", target.string()});
    CHECK(r.code == cli::kIoFailure);
    CHECK_FALSE(r.err.empty());
    CHECK(snapshot(dir.path).size() == 1);
  }
  SUBCASE("mirror flag flips the image") {
    const auto plain = dir.path / "plain";
    const auto flipped = dir.path / "flipped";
    const auto sc = (kScenarios / "nd.ini").string();
    REQUIRE(run_cli({"tomogram", sc, "--detuning", "0", "--out", plain.string()}).code == 0);
    REQUIRE(run_cli({"tomogram", sc, "--detuning", "0", "--out", flipped.string(), "--mirror"})
                .code == 0);
    const auto a = read_csv_grid(plain / "tomogram_+0.000MHz.csv");
    const auto b = read_csv_grid(flipped / "tomogram_+0.000MHz.csv");
    CHECK(a(0, 0) == b(63, 0));
    CHECK(a(40, 50) == b(23, 50));
  }
}

TEST_CASE("command errors") {
  TempDir dir;
  const auto cat = (kScenarios / "cat.ini").string();
  CHECK(run_cli({}).code == cli::kValidationFailure);
  CHECK(run_cli({"tomogram", cat}).code == cli::kValidationFailure);
  CHECK(run_cli({"tomogram", cat, "--detuning", "40 parsecs"}).code == cli::kValidationFailure);
  CHECK(run_cli({"scan", cat, "--from", "10", "--to", "0", "--step", "1", "--out",
                 dir.path.string()})
            .code == cli::kValidationFailure);
  CHECK(run_cli({"tomogram", (dir.path / "none.ini").string(), "--detuning", "0"}).code ==
        cli::kIoFailure);
  const auto bad = write_scenario(dir.path, "bad.ini", "[beam]\ndetuning_mhz = 0\nhue = 3\n");
  const auto r = run_cli({"tomogram", bad.string(), "--detuning", "0"});
  CHECK(r.code == cli::kValidationFailure);
  CHECK(r.err.find("hue") != std::string::npos);
  CHECK(run_cli({"--help"}).code == cli::kSuccess);
}

TEST_CASE("scan command") {
  TempDir dir;
  const auto sc = write_scenario(dir.path, "small.ini",
                                 "[canvas]\nwidth_px = 48\nheight_px = 48\n"
                                 "[beam]\ndetuning_mhz = 40\nmask = letter:C\n"
                                 "[beam]\ndetuning_mhz = 0\nmask = letter:A\n"
                                 "[beam]\ndetuning_mhz = -40\nmask = letter:T\n");
  SUBCASE("three tomograms with momenta in order") {
    const auto out = dir.path / "s";
    REQUIRE(run_cli({"scan", sc.string(), "--from", "-40MHz", "--to", "40MHz", "--step", "40MHz",
                     "--out", out.string()})
                .code == 0);
    const auto files = snapshot(out);
    CHECK(files.size() == 3 * 3 + 2);
    const auto stack = json::parse(files.at("stack.json"))["tomograms"];
    REQUIRE(stack.size() == 3);
    CHECK(stack[0]["momentum_kg_m_s"].get<double>() < 0);
    CHECK(stack[1]["momentum_kg_m_s"].get<double>() == 0);
    CHECK(stack[2]["momentum_kg_m_s"].get<double>() > 0);
    CHECK(stack[0]["files"][0] == "tomogram_-40.000MHz.csv");

    // Probe at -40 MHz reads the +40 MHz object beam (the C).
    const std::pair<std::string, char> pairs[] = {
        {"tomogram_-40.000MHz.csv", 'C'}, {"tomogram_+0.000MHz.csv", 'A'},
        {"tomogram_+40.000MHz.csv", 'T'}};
    for (const auto& [file, letter] : pairs) {
      CAPTURE(file);
      const auto grid = decode_csv(files.at(file));
      const auto mask = letter_mask(letter, 48, 48, 50e-6).values;
      double inside = 0, outside = 0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        double& peak = mask[i] > 0 ? inside : outside;
        peak = std::max(peak, grid[i]);
      }
      CHECK(outside < 0.05 * inside);
    }
  }
  SUBCASE("single point and oversized step") {
    const auto one = dir.path / "one";
    REQUIRE(run_cli({"scan", sc.string(), "--from", "5MHz", "--to", "5MHz", "--step", "1MHz",
                     "--out", one.string()})
                .code == 0);
    CHECK(json::parse(read_file(one / "stack.json"))["tomograms"].size() == 1);
    const auto wide = dir.path / "wide";
    REQUIRE(run_cli({"scan", sc.string(), "--from", "0", "--to", "10MHz", "--step", "20MHz",
                     "--out", wide.string()})
                .code == 0);
    const auto stack = json::parse(read_file(wide / "stack.json"))["tomograms"];
    REQUIRE(stack.size() == 1);
    CHECK(stack[0]["detuning_hz"] == 0.0);
  }
  SUBCASE("reruns and thread counts are byte-identical") {
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* threads : {"1", "3", "8", "1"}) {
      const auto out = dir.path / (std::string("t") + threads + std::to_string(runs.size()));
      REQUIRE(run_cli({"scan", sc.string(), "--from", "-45MHz", "--to", "45MHz", "--step",
                       "15MHz", "--threads", threads, "--out", out.string()})
                  .code == 0);
      runs.push_back(snapshot(out));
    }
    for (std::size_t i = 1; i < runs.size(); ++i) CHECK(runs[i] == runs[0]);
  }
}

TEST_CASE("curve command") {
  TempDir dir;
  const auto sc = write_scenario(dir.path, "empty.ini",
                                 "[canvas]\nwidth_px = 4\nheight_px = 4\n");
  const auto out = dir.path / "c";
  REQUIRE(run_cli({"curve", sc.string(), "--from", "-20MHz", "--to", "20MHz", "--step", "2MHz",
                   "--out", out.string()})
              .code == 0);
  std::istringstream csv(read_file(out / "curve.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "detuning_hz,transmittance");
  std::vector<std::pair<double, double>> rows;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    CHECK(line.find(',', comma + 1) == std::string::npos);
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  REQUIRE(rows.size() == 21);
  const auto lowest = std::min_element(rows.begin(), rows.end(),
                                       [](auto& a, auto& b) { return a.second < b.second; });
  CHECK(lowest->first == 0.0);
  const double od0 = brute_force_alpha({}, {}, 0.0, GasParams{}, default_oracle_step(GasParams{}));
  CHECK(1 - lowest->second == doctest::Approx(1 - std::exp(-od0)).epsilon(1e-6));
}

TEST_CASE("validate command") {
  TempDir dir;
  const auto cat = (kScenarios / "cat.ini").string();
  const auto ok = run_cli({"validate", cat, "--samples", "20"});
  CHECK(ok.code == cli::kSuccess);
  CHECK(json::parse(ok.out)["passed"] == true);

  const auto coarse = run_cli({"validate", cat, "--samples", "20", "--grid-refinement", "0.05"});
  CHECK(coarse.code == cli::kToleranceFailure);
  CHECK(json::parse(coarse.out)["passed"] == false);

  const auto report = dir.path / "report.json";
  REQUIRE(run_cli({"validate", cat, "--samples", "5", "--out", report.string()}).code == 0);
  CHECK(json::parse(read_file(report))["passed"] == true);
}
