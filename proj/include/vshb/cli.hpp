#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace vshb::cli {

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kValidationFailure = 2,
  kIoFailure = 3,
  kToleranceFailure = 4,
};

// Detunings from, from + step, ... up to `to` inclusive. A step wider than
// the range yields just `from`.
std::vector<double> detuning_range(double from, double to, double step);

// Files staged in memory and written together; either all land or none do.
class ArtifactSet {
 public:
  void add(std::string name, std::string bytes);
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  void commit(const std::filesystem::path& directory) const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vshb::cli
