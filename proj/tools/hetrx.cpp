// Command-line front end: hetrx <command> [--config FILE] [--set key=value]... [--out DIR]

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetrx/cli/commands.hpp"
#include "hetrx/cli/config.hpp"
#include "hetrx/cli/manifest.hpp"
#include "hetrx/errors.hpp"

#ifndef HETRX_VERSION
#define HETRX_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAccuracy = 3;

fs::path output_dir(const std::string& command, const std::string& out) {
  const char* root_env = std::getenv("HETRX_OUTPUT_ROOT");
  const fs::path root = root_env && *root_env ? fs::path(root_env) : fs::current_path();
  if (out.empty()) return root / command;
  const fs::path p(out);
  return p.is_absolute() ? p : root / p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Molecular communication channel and BER toolkit"};
  app.set_version_flag("--version", std::string(HETRX_VERSION));
  app.require_subcommand(0, 1);
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print every configuration key with default and unit");

  struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
  };
  const std::map<std::string, std::string> about = {
      {"layout", "build a patch layout and report its capacitance and effective rate"},
      {"cir", "hitting rate and cumulative absorption on a time grid"},
      {"asymptotic", "asymptotic absorbed fraction versus coverage or patch count"},
      {"compare-distributions", "even, random and region layouts compared by S and H(t)"},
      {"ber", "average BER versus threshold and versus bit interval"},
      {"simulate", "particle-based simulation against the analytic curve"},
  };
  std::vector<std::pair<CLI::App*, Options>> subs;
  subs.reserve(hetrx::cli::command_names().size());
  for (const std::string& name : hetrx::cli::command_names()) {
    subs.emplace_back(app.add_subcommand(name, about.count(name) ? about.at(name) : ""), Options{});
    CLI::App* sub = subs.back().first;
    Options& o = subs.back().second;
    sub->add_option("-c,--config", o.config, "key=value configuration file");
    sub->add_option("-s,--set", o.sets, "override one key (key=value); repeatable");
    sub->add_option("-o,--out", o.out,
                    "output directory (relative paths resolve under $HETRX_OUTPUT_ROOT)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (list_keys) {
    for (const auto& k : hetrx::cli::known_keys()) {
      std::cout << k.key << " = " << k.default_value << "    # " << k.help << '\n';
    }
    return kExitOk;
  }

  for (auto& [sub, opts] : subs) {
    if (!sub->parsed()) continue;
    const std::string name = sub->get_name();
    const auto start = std::chrono::steady_clock::now();
    hetrx::cli::Config cfg;
    fs::path dir;
    try {
      if (!opts.config.empty()) cfg.load_file(opts.config);
      for (const std::string& s : opts.sets) cfg.set_assignment(s);
      dir = output_dir(name, opts.out);
      fs::create_directories(dir);
    } catch (const hetrx::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }

    int code = kExitOk;
    hetrx::cli::RunResult result;
    try {
      result = hetrx::cli::run_command(name, cfg, dir, std::cout);
      if (!result.accurate) {
        std::cerr << "accuracy: a quadrature missed its tolerance; outputs are flagged\n";
        code = kExitAccuracy;
      }
    } catch (const hetrx::AccuracyError& e) {
      std::cerr << "accuracy error: " << e.what() << '\n';
      return kExitAccuracy;
    } catch (const hetrx::SolverError& e) {
      std::cerr << "accuracy error: " << e.what() << '\n';
      return kExitAccuracy;
    } catch (const hetrx::Error& e) {
      // Domain, layout and homogenization failures all stem from the inputs.
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }

    hetrx::cli::Manifest m;
    m.command = name;
    m.version = HETRX_VERSION;
    m.config = &cfg;
    m.outputs = result.outputs;
    m.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.exit_code = code;
    const fs::path mp = hetrx::cli::write_manifest(dir, m);
    std::cout << "wrote " << result.outputs.size() << " files and " << mp.string() << '\n';
    return code;
  }
  std::cout << app.help();
  return kExitOk;
}
