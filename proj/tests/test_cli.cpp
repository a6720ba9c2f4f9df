#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

#include "hetrx/cli/config.hpp"
#include "hetrx/errors.hpp"

using namespace hetrx;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / ("hetrx_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    ::setenv("HETRX_OUTPUT_ROOT", p.c_str(), 1);
    return p;
  }();
  return root;
}

int run(const std::string& args) {
  scratch();
  const std::string cmd = std::string(HETRX_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Digest from the system tool, independent of the library code.
std::string sha256_external(const fs::path& p) {
  const std::string cmd = "sha256sum '" + p.string() + "'";
  FILE* f = ::popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  char buf[65] = {};
  const std::size_t n = std::fread(buf, 1, 64, f);
  ::pclose(f);
  return std::string(buf, n);
}

std::map<std::string, std::string> manifest_outputs(const fs::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  std::map<std::string, std::string> out;
  std::string line;
  bool in_outputs = false;
  while (std::getline(in, line)) {
    if (line == "[outputs]") {
      in_outputs = true;
      continue;
    }
    if (!line.empty() && line[0] == '[') in_outputs = false;
    if (in_outputs && !line.empty()) {
      const auto sp = line.rfind(' ');
      out[line.substr(0, sp)] = line.substr(sp + 1);
    }
  }
  return out;
}

const char* kSimSmall =
    "-s sim.realizations=4 -s sim.entities=200 -s sim.dt=1e-3 -s sim.horizon=0.5 -s seed=42";

}  // namespace

TEST_CASE("config: defaults, files and overrides") {
  cli::Config c;
  CHECK(c.num("channel.r_rx") == 10.0);
  CHECK(c.integer("tx.n_sigma") == 1000);
  std::istringstream in("# comment\nchannel.k_d = 0.5  # inline\n\nlayout.n_p=13\n");
  c.load(in);
  CHECK(c.num("channel.k_d") == 0.5);
  CHECK(c.channel().k_d == 0.5);
  CHECK(c.layout().size() == 13);
  c.set_assignment("layout.n_p=3");
  CHECK(c.layout().size() == 3);
  CHECK(c.num_list("asymptotic.coverages").size() == 30);
  CHECK(cli::parse_int_list("5:11:2") == std::vector<long>{5, 7, 9, 11});
  CHECK(cli::parse_int_list("1,3,11") == std::vector<long>{1, 3, 11});

  CHECK_THROWS_AS(c.set("no.such.key", "1"), ConfigError);
  std::istringstream bad("channel.k_d 0.5\n");
  CHECK_THROWS_AS(c.load(bad), ConfigError);
  CHECK_THROWS_AS(c.set_assignment("layout.n_p"), ConfigError);
  c.set("channel.k_d", "abc");
  CHECK_THROWS_AS(c.num("channel.k_d"), ConfigError);

  // Every documented key has a default the config accepts.
  cli::Config d;
  for (const cli::KeyInfo& k : cli::known_keys()) {
    CHECK(d.values().count(k.key) == 1);
    CHECK_FALSE(k.help.empty());
  }
}

TEST_CASE("binary: exit codes") {
  CHECK(run("--version") == 0);
  CHECK(run("layout --set bogus.key=1") == 2);
  CHECK(run("layout --set layout.n_p=abc") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("layout --config /nonexistent/file.cfg") == 2);
  CHECK(run("layout --set layout.n_p=5") == 0);
}

TEST_CASE("binary: every subcommand writes schema-tagged CSVs and a manifest") {
  struct Case {
    const char* name;
    std::string args;
  };
  const Case cases[] = {
      {"layout", "-s layout.n_p=7"},
      {"cir", "-s grid.points=20 -s cir.models=PTFR,PTAR,MTAR"},
      {"asymptotic", "-s asymptotic.coverages=0.05:0.15:0.05 -s asymptotic.n_p_list=11:31:10"},
      {"compare-distributions", "-s compare.n_p_list=5:9:2 -s grid.points=20"},
      {"ber", "-s ber.models=PTFR,PTAR -s ber.t_b_list=0.4,0.8 -s protocol.q=6"},
      {"simulate", kSimSmall},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    const fs::path dir = scratch() / (std::string("all_") + c.name);
    REQUIRE(run(std::string(c.name) + " -o " + dir.string() + " " + c.args) == 0);
    REQUIRE(fs::exists(dir / "manifest.txt"));
    const auto outputs = manifest_outputs(dir);
    CHECK(outputs.size() >= 2);
    int csvs = 0;
    for (const auto& [file, digest] : outputs) {
      CAPTURE(file);
      REQUIRE(fs::exists(dir / file));
      CHECK(digest == sha256_external(dir / file));
      if (fs::path(file).extension() == ".csv") {
        ++csvs;
        const std::string text = slurp(dir / file);
        CHECK(text.rfind("# schema=hetrx.", 0) == 0);
      }
    }
    CHECK(csvs >= 1);
    const std::string manifest = slurp(dir / "manifest.txt");
    CHECK(manifest.find(std::string("command=") + c.name) != std::string::npos);
    CHECK(manifest.find("[config]") != std::string::npos);
  }
}

TEST_CASE("binary: seeded runs are byte-identical") {
  const fs::path a = scratch() / "rep_a";
  const fs::path b = scratch() / "rep_b";
  const std::string args = std::string(kSimSmall) + " -s sim.threads=3";
  REQUIRE(run("simulate -o " + a.string() + " " + args) == 0);
  REQUIRE(run("simulate -o " + b.string() + " -s sim.threads=1 " + kSimSmall) == 0);
  for (const char* f : {"hits.csv", "cir_sim.csv", "sim_stats.csv", "cir_analytic.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const fs::path c = scratch() / "rep_c";
  REQUIRE(run("simulate -o " + c.string() + " " + kSimSmall + " -s seed=43") == 0);
  CHECK(slurp(a / "hits.csv") != slurp(c / "hits.csv"));
}

TEST_CASE("binary: config file with a relative output directory") {
  const fs::path cfg = scratch() / "run.cfg";
  std::ofstream(cfg) << "# layout run\nlayout.kind = random\nlayout.n_p = 9\nlayout.seed = 4\n";
  REQUIRE(run("layout -c " + cfg.string() + " -o rel_out") == 0);
  const std::string text = slurp(scratch() / "rel_out" / "layout_summary.csv");
  CHECK(text.find("\n9,") != std::string::npos);
  CHECK(slurp(scratch() / "rel_out" / "manifest.txt").find("layout.kind=random") != std::string::npos);
}
