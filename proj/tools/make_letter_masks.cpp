// Writes the C, A and T letter masks used by the example scenarios as 8-bit
// binary PGMs.
#include <cstdlib>
#include <iostream>
#include <string>

#include "vshb/objects_io.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_letter_masks OUT_DIR [SIZE_PX]\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const std::size_t size = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 128;
  std::filesystem::create_directories(dir);
  for (char letter : {'C', 'A', 'T'}) {
    const auto mask = vshb::letter_mask(letter, size, size, 50e-6);
    std::string bytes = "P5\n" + std::to_string(size) + " " + std::to_string(size) + "\n255\n";
    for (double v : mask.values.values()) bytes.push_back(static_cast<char>(v > 0.5 ? 255 : 0));
    vshb::write_file(dir / (std::string(1, letter) + ".pgm"), bytes);
  }
  return 0;
}
