#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetrx/cli/config.hpp"

namespace hetrx::cli {

struct RunResult {
  std::vector<std::filesystem::path> outputs;
  bool accurate = true;  // false if any quadrature missed its tolerance
};

const std::vector<std::string>& command_names();

/// Runs one subcommand, writing CSVs and plot scripts into `dir`.
RunResult run_command(const std::string& name, const Config& cfg,
                      const std::filesystem::path& dir, std::ostream& log);

RunResult cmd_layout(const Config& cfg, const std::filesystem::path& dir, std::ostream& log);
RunResult cmd_cir(const Config& cfg, const std::filesystem::path& dir, std::ostream& log);
RunResult cmd_asymptotic(const Config& cfg, const std::filesystem::path& dir, std::ostream& log);
RunResult cmd_compare_distributions(const Config& cfg, const std::filesystem::path& dir,
                                    std::ostream& log);
RunResult cmd_ber(const Config& cfg, const std::filesystem::path& dir, std::ostream& log);
RunResult cmd_simulate(const Config& cfg, const std::filesystem::path& dir, std::ostream& log);

/// Absorbed-fraction increments of a model (PTFR, PTAR or MTAR) at bit
/// interval t_b; `accurate` is cleared if a quadrature missed its tolerance.
ChannelIncrements model_increments(const std::string& model, const Config& cfg, double t_b,
                                   bool& accurate);

}  // namespace hetrx::cli
