#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hetrx/cli/config.hpp"

namespace hetrx::cli {

/// Lower-case hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::string version;
  const Config* config = nullptr;
  std::vector<std::filesystem::path> outputs;
  double wall_time_s = 0.0;
  int exit_code = 0;
};

/// Writes manifest.txt into `dir` and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const Manifest& m);

}  // namespace hetrx::cli
