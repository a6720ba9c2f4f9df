#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "hetrx/analytic_cir.hpp"
#include "hetrx/cli/commands.hpp"
#include "hetrx/cli/config.hpp"
#include "hetrx/comms.hpp"
#include "hetrx/geometry.hpp"
#include "hetrx/homogenization.hpp"
#include "hetrx/particle_sim.hpp"

using namespace hetrx;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

const ChannelParams kTable2;
const MembraneFusionTx kMf;

// Gauss-Legendre 8-point nodes and weights on [-1, 1].
constexpr std::array<double, 4> kGlX{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                     0.9602898564975363};
constexpr std::array<double, 4> kGlW{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                     0.1012285362903763};

double gauss8(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += kGlW[i] * (f(c - h * kGlX[i]) + f(c + h * kGlX[i]));
  return s * h;
}

// Running integral of f over a geometric partition of [a, b]; returns the
// partition points and the integral up to each.
std::pair<std::vector<double>, std::vector<double>> running_integral(
    const std::function<double(double)>& f, double a, double b, int panels) {
  std::vector<double> x{a}, F{0.0};
  const double r = std::pow(b / a, 1.0 / panels);
  for (int k = 0; k < panels; ++k) {
    const double lo = x.back(), hi = k + 1 == panels ? b : lo * r;
    F.push_back(F.back() + gauss8(f, lo, hi));
    x.push_back(hi);
  }
  return {x, F};
}

// 1. General and identical capacitance formulas on equal-radius layouts.
Outcome criterion1() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> n_dist(2, 49);
  std::uniform_real_distribution<double> cov(0.01, 0.15);
  double worst = 0.0;
  int done = 0;
  for (std::uint64_t seed = 1; done < 100; ++seed) {
    const int n = n_dist(rng);
    const ApLayout l = layout_random(10.0, n, cov(rng), seed);
    worst = std::max(worst, rel(capacitance_general(l).g_p, capacitance_identical(l).g_p));
    ++done;
  }
  return {worst <= 1e-12, fmt("100 random layouts, max relative gap %.3e (limit 1e-12)", worst)};
}

// 2. Fully absorbing limits of the asymptotic fraction.
Outcome criterion2() {
  ChannelParams p0 = kTable2;
  p0.k_d = 0.0;
  const double a = H_uniform_inf(1e6, p0);
  const double target0 = p0.r_rx / p0.r0;
  const double beta = (kTable2.r0 - kTable2.r_rx) * std::sqrt(kTable2.k_d / kTable2.d_sigma);
  const double b = H_uniform_inf(1e6, kTable2);
  const double target1 = kTable2.r_rx / kTable2.r0 * std::exp(-beta);
  const double e0 = std::fabs(a - target0), e1 = std::fabs(b - target1);
  return {e0 <= 1e-6 && e1 <= 1e-6,
          fmt("w=1e6: k_d=0 gives %.9f vs %.9f (|gap| %.2e); k_d=0.8 gives %.9f vs %.9f (|gap| %.2e); "
              "limit 1e-6",
              a, target0, e0, b, target1, e1)};
}

// 3. Cumulative equals the integral of the hitting rate.
Outcome criterion3() {
  const ApLayout l = layout_fibonacci(10.0, 11, 0.05);
  const double w = layout_effective_rate(l, kTable2);
  const ReleaseProfile r(kMf);

  auto check = [](const std::vector<double>& x, const std::vector<double>& F,
                  const std::function<double(double)>& H, double& worst, double& worst_t,
                  double& worst_scaled, double& last_bad) {
    const double scale = H(5.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < 0.01 - 1e-12) continue;
      const double h = H(x[i]);
      const double e = std::fabs(F[i] - h) / std::fabs(h);
      if (!(e <= worst)) {
        worst = e;
        worst_t = x[i];
      }
      worst_scaled = std::max(worst_scaled, std::fabs(F[i] - h) / scale);
      if (!(e <= 1e-5)) last_bad = x[i];
    }
  };

  double wa = 0.0, ta = 0.0, sa = 0.0, la = 0.0;
  {
    auto [x, F] = running_integral([&](double t) { return h_uniform(t, w, kTable2); }, 1e-4, 5.0, 400);
    // Below 1e-4 s the rate is under 1e-300.
    check(x, F, [&](double t) { return H_uniform(t, w, kTable2); }, wa, ta, sa, la);
  }
  double wm = 0.0, tm = 0.0, sm = 0.0, lm = 0.0;
  {
    // h_MF vanishes below the release onset.
    auto [x, F] = running_integral([&](double t) { return h_mf(t, w, kTable2, r).value; }, r.onset(),
                                   5.0, 150);
    std::vector<double> xs, Fs;
    for (std::size_t i = 0; i < x.size(); i += 3) {
      xs.push_back(x[i]);
      Fs.push_back(F[i]);
    }
    xs.push_back(x.back());
    Fs.push_back(F.back());
    check(xs, Fs, [&](double t) { return H_mf(t, w, kTable2, r).value; }, wm, tm, sm, lm);
  }
  return {wa <= 1e-5 && wm <= 1e-5,
          fmt("max relative |int h - H| on [0.01, 5] s: PTAR %.2e (at t=%.3g), MTAR %.2e (at t=%.3g); "
              "relative to H(5 s): PTAR %.2e, MTAR %.2e; last checkpoint over the limit: PTAR %.3g s, "
              "MTAR %.3g s (H_MF there %.1e); limit 1e-5",
              wa, ta, wm, tm, sa, sm, la, lm, lm > 0.0 ? H_mf(lm, w, kTable2, r).value : 0.0)};
}

// 4. Eigen-series h_MF against the direct convolution.
Outcome criterion4() {
  const double w = layout_effective_rate(layout_fibonacci(10.0, 11, 0.05), kTable2);
  const ReleaseProfile r(kMf);
  double worst = 0.0, at = 0.0;
  const auto grid = log_grid(0.05, 3.0, 60);
  for (double t : grid) {
    const double a = h_mf(t, w, kTable2, r).value;
    const double b = h_mf_convolution(t, w, kTable2, r).value;
    const double e = rel(a, b);
    if (!(e <= worst)) {
      worst = e;
      at = t;
    }
  }
  return {worst <= 1e-3, fmt("60 points on [0.05, 3] s, max relative deviation %.2e at t=%.3g s (limit 1e-3)",
                             worst, at)};
}

// 5. Final value of the MF cumulative.
Outcome criterion5() {
  const double w = layout_effective_rate(layout_fibonacci(10.0, 11, 0.05), kTable2);
  const ReleaseProfile r(kMf);
  const double a = H_mf(20.0, w, kTable2, r).value;
  const double b = H_mf_inf(w, kTable2, kMf.r_tx);
  return {rel(a, b) <= 1e-3,
          fmt("H_MF(20 s) = %.9f, closed-form limit %.9f, relative gap %.2e (limit 1e-3)", a, b, rel(a, b))};
}

// 6. Release profile integrates to one.
Outcome criterion6() {
  const ReleaseProfile r(kMf);
  // Independent quadrature up to 60 s plus the analytic remainder of the
  // series; the truncation tail bound covers the omitted terms.
  auto [x, F] = running_integral([&](double t) { return r.rate(t); }, r.onset(), 60.0, 600);
  double rest = 0.0;
  for (std::size_t n = 0; n < r.coefficients().size(); ++n) {
    rest += r.coefficients()[n] / r.decay_rates()[n] * std::exp(-r.decay_rates()[n] * 60.0);
  }
  const double quad = F.back() + rest;
  const double closed = r.released(1e6);
  const double bound = r.tail_bound(r.onset());
  const double e = std::max(std::fabs(quad - 1.0), std::fabs(closed - 1.0));
  return {e <= 1e-6, fmt("quadrature + tail %.12f, closed form %.12f, truncation bound at onset %.1e "
                         "(limit 1e-6)",
                         quad, closed, bound)};
}

// 7. Particle simulation against the analytic curves.
struct SimSetup {
  std::string name;
  std::optional<ApLayout> layout;  // empty: fully absorbing
};

Outcome criterion7() {
  const double covs[] = {0.01, 0.02, 0.03, 0.04};
  const auto radii = radii_from_coverages(10.0, covs);
  std::vector<SimSetup> setups;
  setups.push_back({"fully absorbing", std::nullopt});
  for (int n : {1, 3, 11}) setups.push_back({fmt("Np=%d A=0.05", n), layout_fibonacci(10.0, n, 0.05)});
  setups.push_back({"even Np=13 A=0.1", layout_fibonacci(10.0, 13, 0.1)});
  setups.push_back({"random Np=13 A=0.1", layout_random(10.0, 13, 0.1, 1)});
  setups.push_back({"four patches A=0.1", layout_explicit(10.0, {{kPi / 2, kPi, radii[0]},
                                                                 {kPi / 2, 0.0, radii[1]},
                                                                 {kPi / 2, kPi / 2, radii[2]},
                                                                 {kPi / 2, 3 * kPi / 2, radii[3]}})});

  std::vector<double> checkpoints;
  for (int k = 1; k <= 20; ++k) checkpoints.push_back(0.1 * k);

  bool all_within = true, all_monotone = true;
  std::ostringstream detail;
  for (const SimSetup& s : setups) {
    const ApLayout* lp = s.layout ? &*s.layout : nullptr;
    std::function<double(double)> H;
    if (lp) {
      const double w = layout_effective_rate(*lp, kTable2);
      H = [w](double t) { return H_uniform(t, w, kTable2); };
    } else {
      H = [](double t) { return H_absorbing(t, kTable2); };
    }
    std::vector<double> err;
    double worst_z = 0.0;
    for (double dt : {1e-3, 3e-4, 1e-4}) {
      SimConfig c;
      c.dt = dt;
      c.horizon = 2.0;
      c.realizations = 200;
      c.entities = 1000;
      c.seed = 2024;
      const SimResult r = simulate_point_tx(kTable2, lp, c);
      const CheckpointStats st = cumulative_at(r.hits, checkpoints, r.realizations,
                                               r.molecules_per_realization);
      double sum = 0.0;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const double d = st.mean[i] - H(checkpoints[i]);
        sum += std::fabs(d);
        if (dt == 1e-4) {
          const double z = st.se[i] > 0.0 ? d / st.se[i] : (d == 0.0 ? 0.0 : INFINITY);
          if (std::fabs(z) > std::fabs(worst_z)) worst_z = z;
        }
      }
      err.push_back(sum / checkpoints.size());
    }
    const bool within = std::fabs(worst_z) <= 3.0;
    const bool monotone = err[1] < err[0] && err[2] < err[1];
    all_within = all_within && within;
    all_monotone = all_monotone && monotone;
    detail << "\n    " << s.name << ": worst z at dt=1e-4 " << fmt("%+.2f", worst_z)
           << (within ? " ok" : " OUT") << "; mean |sim-analytic| at dt=1e-3,3e-4,1e-4: "
           << fmt("%.2e, %.2e, %.2e", err[0], err[1], err[2]) << (monotone ? " monotone" : " NOT monotone");
  }
  return {all_within && all_monotone,
          std::string("200 x 1000 molecules, 20 checkpoints, 3 SE; dt convergence") +
              (all_monotone ? " monotone" : " not monotone") + detail.str()};
}

// 8. Qualitative orderings.
Outcome criterion8() {
  std::vector<std::string> failed;
  std::ostringstream detail;

  // (a) cumulative grows with N_p at fixed coverage.
  {
    const auto grid = log_grid(0.01, 10.0, 200);
    bool ok = true;
    std::vector<double> prev;
    for (int n : {1, 3, 5, 11, 21}) {
      const CirSeries s = cir_point_ap(grid, layout_fibonacci(10.0, n, 0.05), kTable2);
      if (!prev.empty()) {
        for (std::size_t i = 0; i < grid.size(); ++i) ok = ok && s.cumulative[i] > prev[i];
      }
      prev = s.cumulative;
    }
    if (!ok) failed.push_back("a");
    detail << "\n    (a) H pointwise increasing in Np: " << (ok ? "yes" : "no");
  }
  // (b) Delta H: increasing, concave, larger for larger r_R and smaller D_sigma.
  {
    auto dh = [](double r_rx, double d, int n) {
      ChannelParams p = kTable2;
      p.r_rx = r_rx;
      p.d_sigma = d;
      return delta_H(layout_fibonacci(r_rx, n, 0.05), layout_fibonacci(r_rx, 1, 0.05), p);
    };
    bool inc = true, concave = true, by_r = true, by_d = true;
    double last_slope = INFINITY;
    double prev = dh(10.0, 79.4, 1);
    for (int n = 11; n <= 201; n += 10) {
      const double v = dh(10.0, 79.4, n);
      const double slope = v - prev;
      inc = inc && slope > 0.0;
      if (n > 11) concave = concave && slope < last_slope;
      last_slope = slope;
      prev = v;
      by_r = by_r && dh(12.0, 79.4, n) > v;
      by_d = by_d && dh(10.0, 40.0, n) > v;
    }
    if (!(inc && concave && by_r && by_d)) failed.push_back("b");
    detail << "\n    (b) DeltaH increasing " << (inc ? "yes" : "no") << ", decreasing slope "
           << (concave ? "yes" : "no") << ", larger r_R " << (by_r ? "yes" : "no") << ", smaller D "
           << (by_d ? "yes" : "no");
  }
  // (c) even placement minimises S.
  {
    const AngularRegion region = south_polar_cap(0.4);
    bool ok = true;
    int cases = 0;
    std::string note;
    for (int spread : {1, 5, 10}) {
      for (int n = 5; n <= 49; n += 2) {
        const auto covs = random_size_coverages(n, 0.1, spread, 1000 + n);
        const auto radii = radii_from_coverages(10.0, covs);
        const double s_e = layout_metric_S(layout_fibonacci(10.0, radii));
        const double s_er = layout_metric_S(layout_region(10.0, radii, region));
        ok = ok && s_e < s_er;
        ++cases;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
          const double s_r = layout_metric_S(layout_random(10.0, radii, seed));
          ok = ok && s_e < s_r;
          ++cases;
        }
        if (!ok && note.empty()) note = fmt(" (first failure at Np=%d, D=%d)", n, spread);
      }
    }
    if (!ok) failed.push_back("c");
    detail << "\n    (c) S_even < S_random and S_even < S_region: " << (ok ? "yes" : "no") << " over "
           << cases << " comparisons, D in {1,5,10}" << note;
  }
  // (d) general vs mean-field asymptotic fraction.
  {
    double worst = 0.0;
    for (int n = 11; n <= 201; n += 10) {
      const ApLayout l = layout_fibonacci(10.0, n, 0.15);
      const double k = l.patches()[0].radius / 10.0;
      const double wg = effective_rate(capacitance_general(l), kTable2.d_sigma, 10.0).w_e;
      const double wm = effective_rate(capacitance_meanfield(10.0, n, k), kTable2.d_sigma, 10.0).w_e;
      worst = std::max(worst, rel(H_uniform_inf(wm, kTable2), H_uniform_inf(wg, kTable2)));
    }
    if (!(worst <= 0.03)) failed.push_back("d");
    detail << "\n    (d) max relative H_inf gap general vs mean-field, Np 11..201, A=0.15: "
           << fmt("%.3e (limit 3e-2)", worst);
  }
  // (e) peak ordering of the hitting rate.
  double peak_fr = 0.0, peak_ap = 0.0, peak_mf = 0.0;
  {
    const auto grid = log_grid(1e-3, 10.0, 400);
    const ApLayout l = layout_fibonacci(10.0, 11, 0.05);
    auto peak = [](const CirSeries& s) { return *std::max_element(s.rate.begin(), s.rate.end()); };
    peak_fr = peak(cir_ptfr(grid, kTable2, 1000));
    peak_ap = peak(cir_point_ap(grid, l, kTable2));
    peak_mf = peak(cir_mf_ap(grid, l, kTable2, kMf));
    const bool ok = peak_ap < peak_fr && peak_mf < peak_ap;
    if (!ok) failed.push_back("e");
    detail << "\n    (e) peak rate PTFR " << fmt("%.4g", peak_fr) << " > PTAR " << fmt("%.4g", peak_ap)
           << " > MTAR " << fmt("%.4g", peak_mf) << (ok ? "" : "  VIOLATED");
  }
  // (f) minimum average BER at T_b = 0.8 s.
  {
    const cli::Config cfg;
    const ProtocolSpec spec = cfg.protocol();
    double ber[3];
    const char* models[] = {"PTFR", "PTAR", "MTAR"};
    for (int i = 0; i < 3; ++i) {
      bool accurate = true;
      const ChannelIncrements inc = cli::model_increments(models[i], cfg, 0.8, accurate);
      ber[i] = average_optimal_threshold(inc, spec).ber;
    }
    const bool ok = ber[0] <= ber[1] && ber[1] <= ber[2];
    if (!ok) failed.push_back("f");
    detail << "\n    (f) minimum average BER PTFR " << fmt("%.4e", ber[0]) << " <= PTAR "
           << fmt("%.4e", ber[1]) << " <= MTAR " << fmt("%.4e", ber[2]) << (ok ? "" : "  VIOLATED");
  }
  std::string head = failed.empty() ? "all orderings hold" : "failed:";
  for (const auto& f : failed) head += " (" + f + ")";
  return {failed.empty(), head + detail.str()};
}

// 9. Closed-form threshold against the exhaustive scan.
Outcome criterion9() {
  const cli::Config cfg;
  const ProtocolSpec spec = cfg.protocol();
  bool accurate = true;
  const ChannelIncrements inc = cli::model_increments("PTAR", cfg, spec.t_b, accurate);
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> qd(2, spec.q);
  std::bernoulli_distribution bit(0.5);
  int tested = 0, differ = 0, scan_worse = 0;
  while (tested < 1000) {
    const int q = qd(rng);
    std::vector<std::uint8_t> prev(q - 1);
    for (auto& b : prev) b = bit(rng);
    const ConditionalMeans m = conditional_means(q, prev, inc);
    if (!(m.chi0 > 0.0)) continue;
    ++tested;
    const long f = optimal_threshold_formula(m, spec);
    const long s = optimal_threshold_scan(m, spec);
    if (f != s) {
      ++differ;
      if (ber_given_means(m, s, spec) > ber_given_means(m, f, spec)) ++scan_worse;
    }
  }
  return {differ == 0 && scan_worse == 0,
          fmt("%d histories with chi0 > 0: formula != scan in %d, scan worse than formula in %d", tested,
              differ, scan_worse)};
}

// 10. Seeded commands give byte-identical CSVs.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / ("hetrx_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  ::setenv("HETRX_OUTPUT_ROOT", root.c_str(), 1);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"layout", "-s layout.kind=random -s layout.n_p=13 -s layout.coverage=0.1 -s layout.seed=5"},
      {"cir", "-s grid.points=50 -s layout.kind=random -s layout.seed=3"},
      {"compare-distributions", "-s compare.random_trials=3 -s compare.n_p_list=5:15:2 -s grid.points=40"},
      {"ber", "-s ber.mode=monte_carlo -s ber.frames=20000 -s ber.models=PTFR,PTAR -s ber.t_b_list=0.4,0.8"},
      {"simulate", "-s sim.realizations=20 -s sim.entities=500 -s sim.dt=1e-3 -s seed=77"},
      {"simulate", "-s sim.tx=mf -s sim.realizations=4 -s sim.entities=50 -s sim.dt=1e-3 -s seed=78"},
  };
  int files = 0, mismatched = 0, failed_runs = 0;
  std::string note;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [cmd, args] = runs[i];
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path d = root / fmt("run%zu_%d", i, rep);
      const std::string line = std::string(HETRX_BINARY) + " " + cmd + " -o " + d.string() + " " + args +
                               " > /dev/null 2>&1";
      const int st = std::system(line.c_str());
      if (!(WIFEXITED(st) && WEXITSTATUS(st) == 0)) {
        ++failed_runs;
        if (note.empty()) note = " (" + cmd + " exited non-zero)";
      }
      dirs.push_back(d);
    }
    if (!fs::exists(dirs[0])) continue;
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) {
        ++mismatched;
        if (note.empty()) note = " (" + cmd + ": " + e.path().filename().string() + " differs)";
      }
    }
  }
  fs::remove_all(root);
  return {failed_runs == 0 && mismatched == 0 && files > 0,
          fmt("%zu seeded commands run twice, %d CSVs compared, %d differ, %d failed runs", runs.size(), files,
              mismatched, failed_runs) +
              note};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
  double budget_s;  // 0: no runtime limit
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion all[] = {
      {1, "capacitance formula reduction", criterion1, 1.0},
      {2, "fully absorbing limits", criterion2, 0.0},
      {3, "integral consistency", criterion3, 30.0},
      {4, "convolution oracle", criterion4, 120.0},
      {5, "MF final value", criterion5, 0.0},
      {6, "release normalization", criterion6, 0.0},
      {7, "simulation vs analytic", criterion7, 0.0},
      {8, "qualitative orderings", criterion8, 600.0},
      {9, "threshold optimality", criterion9, 0.0},
      {10, "determinism", criterion10, 0.0},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("[%.1f s", el);
    if (c.budget_s > 0.0) {
      timing += fmt(", budget %.0f s", c.budget_s);
      if (el > c.budget_s) {
        o.pass = false;
        timing += " EXCEEDED";
      }
    }
    timing += "]";
    for (std::size_t p; (p = o.detail.find("\n    ")) != std::string::npos;) o.detail.replace(p, 5, "; ");
    std::printf("%s %d %s: %s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failures, only.empty() ? std::size(all) : only.size());
  return failures == 0 ? 0 : 1;
}
