#include "hetrx/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "hetrx/analytic_cir.hpp"
#include "hetrx/errors.hpp"
#include "hetrx/homogenization.hpp"
#include "hetrx/io.hpp"

namespace hetrx::cli {

namespace fs = std::filesystem;
using io::fmt;

namespace {

struct Curve {
  std::string file;
  std::string using_cols;
  std::string title;
};

fs::path write_plot(const fs::path& dir, const std::string& name, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel, bool logx,
                    const std::vector<Curve>& curves) {
  const fs::path path = dir / (name + ".gp");
  std::ofstream gp(path);
  if (!gp) throw Error("cannot write " + path.string());
  gp << "# gnuplot script; run from this directory: gnuplot -p " << name << ".gp\n";
  gp << "set datafile separator ','\n";
  gp << "set datafile commentschars '#'\n";
  gp << "set title '" << title << "'\n";
  gp << "set xlabel '" << xlabel << "'\n";
  gp << "set ylabel '" << ylabel << "'\n";
  if (logx) gp << "set logscale x\n";
  gp << "set key autotitle columnheader\n";
  gp << "plot ";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    gp << (i ? ", \\\n     " : "") << "'" << curves[i].file << "' using " << curves[i].using_cols
       << " with lines title '" << curves[i].title << "'";
  }
  gp << '\n';
  return path;
}

fs::path emit(const fs::path& dir, const std::string& file, const io::Table& t, RunResult& r) {
  const fs::path path = dir / file;
  io::write_file(path.string(), t);
  r.outputs.push_back(path);
  return path;
}

void check_model(const std::string& m) {
  if (m != "PTFR" && m != "PTAR" && m != "MTAR") {
    throw ConfigError("unknown model '" + m + "' (expected PTFR, PTAR or MTAR)");
  }
}

std::string fmt_or_nan(double v) { return std::isfinite(v) ? fmt(v) : "nan"; }

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"layout", "cir", "asymptotic",
                                                 "compare-distributions", "ber", "simulate"};
  return names;
}

RunResult run_command(const std::string& name, const Config& cfg, const fs::path& dir,
                      std::ostream& log) {
  if (name == "layout") return cmd_layout(cfg, dir, log);
  if (name == "cir") return cmd_cir(cfg, dir, log);
  if (name == "asymptotic") return cmd_asymptotic(cfg, dir, log);
  if (name == "compare-distributions") return cmd_compare_distributions(cfg, dir, log);
  if (name == "ber") return cmd_ber(cfg, dir, log);
  if (name == "simulate") return cmd_simulate(cfg, dir, log);
  throw ConfigError("unknown command '" + name + "'");
}

// ---------------------------------------------------------------------------

RunResult cmd_layout(const Config& cfg, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const ChannelParams p = cfg.channel();
  const ApLayout layout = cfg.layout();
  const fs::path lp = dir / "layout.txt";
  {
    std::ofstream f(lp);
    if (!f) throw Error("cannot write " + lp.string());
    write_layout(f, layout);
  }
  r.outputs.push_back(lp);

  const Capacitance cap = capacitance_auto(layout);
  const double w = effective_rate(cap, p.d_sigma, p.r_rx).w_e;
  io::Table t("layout_summary", {"n_p", "coverage", "kappa", "formula", "g_p_um", "w_e_um_per_s",
                                 "layout_metric_s", "beyond_validity"});
  t.meta["layout_kind"] = cfg.str("layout.kind");
  t.add({std::to_string(layout.size()), fmt(layout.coverage()), fmt(cap.kappa),
         std::string(to_string(cap.formula)), fmt(cap.g_p), fmt(w), fmt(layout_metric_S(layout)),
         layout.beyond_validity() ? "true" : "false"});
  emit(dir, "layout_summary.csv", t, r);

  log << "layout: " << layout.size() << " patches, coverage " << fmt(layout.coverage())
      << ", G_p " << fmt(cap.g_p) << " um, w_e " << fmt(w) << " um/s\n";
  if (layout.beyond_validity()) log << "warning: coverage above 0.2, homogenization less accurate\n";
  return r;
}

RunResult cmd_cir(const Config& cfg, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const ChannelParams p = cfg.channel();
  const auto grid = cfg.time_grid();
  std::vector<Curve> rate_curves;
  std::vector<Curve> cum_curves;
  for (const std::string& m : cfg.str_list("cir.models")) {
    check_model(m);
    CirSeries s;
    if (m == "PTFR") {
      s = cir_ptfr(grid, p, cfg.point_tx().n_sigma);
    } else if (m == "PTAR") {
      s = cir_point_ap(grid, cfg.layout(), p);
      s.metadata["n_sigma"] = std::to_string(cfg.point_tx().n_sigma);
    } else {
      s = cir_mf_ap(grid, cfg.layout(), p, cfg.mf_tx(), cfg.mf_options());
    }
    r.accurate = r.accurate && s.accurate;
    const std::string file = "cir_" + m + ".csv";
    emit(dir, file, io::cir_table(s), r);
    rate_curves.push_back({file, "1:2", m});
    cum_curves.push_back({file, "1:3", m});
    log << "cir: " << m << " asymptote " << fmt(s.asymptote) << (s.accurate ? "" : " (inaccurate)")
        << '\n';
  }
  r.outputs.push_back(write_plot(dir, "cir_rate", "Hitting rate per released molecule", "t (s)",
                                 "h(t) (1/s)", true, rate_curves));
  r.outputs.push_back(write_plot(dir, "cir_cumulative", "Absorbed fraction", "t (s)", "H(t)",
                                 true, cum_curves));
  return r;
}

RunResult cmd_asymptotic(const Config& cfg, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const ChannelParams p = cfg.channel();
  const double n_sigma = static_cast<double>(cfg.point_tx().n_sigma);
  const MembraneFusionTx tx = cfg.mf_tx();
  const double n_mf = static_cast<double>(tx.n_v * tx.eta);
  const std::string axis = cfg.str("asymptotic.axis");

  std::vector<std::pair<int, double>> points;
  if (axis == "coverage") {
    const int n = static_cast<int>(cfg.integer("layout.n_p"));
    for (double a : cfg.num_list("asymptotic.coverages")) points.emplace_back(n, a);
  } else if (axis == "n_p") {
    const double a = cfg.num("layout.coverage");
    for (long n : cfg.int_list("asymptotic.n_p_list")) points.emplace_back(static_cast<int>(n), a);
  } else {
    throw ConfigError("asymptotic.axis must be coverage or n_p");
  }

  io::Table t("asymptotic", {"n_p", "coverage", "kappa", "formula", "g_p_um", "n_h_inf",
                             "n_h_inf_meanfield", "n_h_inf_ptfr", "n_h_inf_mtar", "delta_h",
                             "beyond_validity", "status"});
  t.meta["axis"] = axis;
  t.meta["layout_kind"] = cfg.str("layout.kind");
  const double ptfr = n_sigma * H_absorbing_inf(p);
  for (const auto& [n, a] : points) {
    Config c = cfg;
    c.set("layout.coverage", fmt(a));
    std::string status = "ok";
    double kappa = NAN, g = NAN, nh = NAN, nh_mf = NAN, nh_mtar = NAN, dh = NAN;
    std::string formula = "none";
    bool beyond = a > ApLayout::kCoverageValidityLimit;
    try {
      const ApLayout layout = c.layout(n);
      const Capacitance cap = capacitance_auto(layout);
      kappa = cap.kappa;
      g = cap.g_p;
      formula = std::string(to_string(cap.formula));
      beyond = layout.beyond_validity();
      const double w = effective_rate(cap, p.d_sigma, p.r_rx).w_e;
      nh = n_sigma * H_uniform_inf(w, p);
      nh_mtar = n_mf * H_mf_inf(w, p, tx.r_tx);
      try {
        const Capacitance mf = capacitance_meanfield(p.r_rx, n, layout.patches()[0].radius / p.r_rx);
        nh_mf = n_sigma * H_uniform_inf(effective_rate(mf, p.d_sigma, p.r_rx).w_e, p);
      } catch (const HomogenizationError&) {
        status = "meanfield-invalid";
      }
      dh = delta_H(layout, layout_fibonacci(p.r_rx, 1, layout.coverage()), p);
    } catch (const LayoutError& e) {
      status = "layout-error";
    } catch (const HomogenizationError& e) {
      status = "homogenization-error";
    }
    t.add({std::to_string(n), fmt(a), fmt_or_nan(kappa), formula, fmt_or_nan(g), fmt_or_nan(nh),
           fmt_or_nan(nh_mf), fmt(ptfr), fmt_or_nan(nh_mtar), fmt_or_nan(dh),
           beyond ? "true" : "false", status});
  }
  emit(dir, "asymptotic.csv", t, r);
  const std::string x = axis == "coverage" ? "2" : "1";
  r.outputs.push_back(write_plot(
      dir, "asymptotic", "Expected asymptotic number of absorbed molecules",
      axis == "coverage" ? "coverage ratio" : "N_p", "N H_inf", false,
      {{"asymptotic.csv", x + ":6", "capacitance expansion"},
       {"asymptotic.csv", x + ":7", "mean-field"},
       {"asymptotic.csv", x + ":8", "fully absorbing"}}));
  r.outputs.push_back(write_plot(dir, "delta_h", "Relative gain over one patch",
                                 axis == "coverage" ? "coverage ratio" : "N_p", "Delta H", false,
                                 {{"asymptotic.csv", x + ":10", "Delta H"}}));
  log << "asymptotic: " << points.size() << " rows\n";
  return r;
}

RunResult cmd_compare_distributions(const Config& cfg, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const ChannelParams p = cfg.channel();
  const long trials = cfg.integer("compare.random_trials");
  if (trials < 1) throw ConfigError("compare.random_trials must be positive");

  auto with_kind = [&](const std::string& kind) {
    Config c = cfg;
    c.set("layout.kind", kind);
    return c;
  };
  const Config even = with_kind("fibonacci");
  const Config region = with_kind("region");

  io::Table t("compare", {"n_p", "s_even", "s_random", "s_region", "ds_random_even",
                          "ds_region_even", "status"});
  t.meta["size_spread"] = cfg.str("layout.size_spread");
  t.meta["coverage"] = cfg.str("layout.coverage");
  t.meta["random_trials"] = std::to_string(trials);
  for (long n : cfg.int_list("compare.n_p_list")) {
    std::string status = "ok";
    double se = NAN, sr = NAN, ser = NAN;
    try {
      se = layout_metric_S(even.layout(static_cast<int>(n)));
      double acc = 0.0;
      for (long k = 0; k < trials; ++k) {
        Config c = with_kind("random");
        c.set("layout.seed", std::to_string(cfg.u64("layout.seed") + static_cast<std::uint64_t>(k)));
        acc += layout_metric_S(c.layout(static_cast<int>(n)));
      }
      sr = acc / static_cast<double>(trials);
      ser = layout_metric_S(region.layout(static_cast<int>(n)));
    } catch (const LayoutError& e) {
      status = "layout-error";
    }
    t.add({std::to_string(n), fmt_or_nan(se), fmt_or_nan(sr), fmt_or_nan(ser),
           fmt_or_nan(sr - se), fmt_or_nan(ser - se), status});
  }
  emit(dir, "compare_metric.csv", t, r);

  const int n_curve = static_cast<int>(cfg.integer("compare.curve_n_p"));
  const auto grid = cfg.time_grid();
  const ApLayout le = even.layout(n_curve);
  const ApLayout lr = with_kind("random").layout(n_curve);
  const ApLayout lg = region.layout(n_curve);
  const double we = layout_effective_rate(le, p);
  const double wr = layout_effective_rate(lr, p);
  const double wg = layout_effective_rate(lg, p);
  io::Table c("compare_curves", {"time_s", "h_even", "h_random", "h_region", "cum_even",
                                 "cum_random", "cum_region"});
  c.meta["n_p"] = std::to_string(n_curve);
  c.meta["w_e_even"] = fmt(we);
  c.meta["w_e_random"] = fmt(wr);
  c.meta["w_e_region"] = fmt(wg);
  for (double tt : grid) {
    c.add({fmt(tt), fmt(h_uniform(tt, we, p)), fmt(h_uniform(tt, wr, p)), fmt(h_uniform(tt, wg, p)),
           fmt(H_uniform(tt, we, p)), fmt(H_uniform(tt, wr, p)), fmt(H_uniform(tt, wg, p))});
  }
  emit(dir, "compare_curves.csv", c, r);
  r.outputs.push_back(write_plot(dir, "compare_metric", "Layout metric S", "N_p", "S", false,
                                 {{"compare_metric.csv", "1:2", "even"},
                                  {"compare_metric.csv", "1:3", "random"},
                                  {"compare_metric.csv", "1:4", "region"}}));
  r.outputs.push_back(write_plot(dir, "compare_curves", "Absorbed fraction by distribution",
                                 "t (s)", "H(t)", true,
                                 {{"compare_curves.csv", "1:5", "even"},
                                  {"compare_curves.csv", "1:6", "random"},
                                  {"compare_curves.csv", "1:7", "region"}}));
  log << "compare-distributions: " << t.rows.size() << " patch counts\n";
  return r;
}

ChannelIncrements model_increments(const std::string& model, const Config& cfg, double t_b,
                                   bool& accurate) {
  check_model(model);
  const ChannelParams p = cfg.channel();
  const int q = static_cast<int>(cfg.integer("protocol.q"));
  if (model == "PTFR") {
    return ChannelIncrements::from_cumulative([&](double t) { return H_absorbing(t, p); }, t_b, q,
                                              static_cast<double>(cfg.point_tx().n_sigma));
  }
  const double w = layout_effective_rate(cfg.layout(), p);
  if (model == "PTAR") {
    return ChannelIncrements::from_cumulative([&](double t) { return H_uniform(t, w, p); }, t_b, q,
                                              static_cast<double>(cfg.point_tx().n_sigma));
  }
  const MembraneFusionTx tx = cfg.mf_tx();
  check_mf_geometry(p, tx);
  const MfOptions opts = cfg.mf_options();
  const ReleaseProfile release(tx, opts.n_max);
  return ChannelIncrements::from_cumulative(
      [&](double t) {
        const MfValue v = H_mf(t, w, p, release, opts.quadrature);
        accurate = accurate && v.converged;
        return v.value;
      },
      t_b, q, static_cast<double>(tx.n_v * tx.eta));
}

RunResult cmd_ber(const Config& cfg, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const ProtocolSpec spec = cfg.protocol();
  const std::string mode = cfg.str("ber.mode");
  if (mode != "exact" && mode != "monte_carlo") throw ConfigError("ber.mode must be exact or monte_carlo");
  if (mode == "exact" && spec.q > kMaxExactFrame) {
    throw ConfigError("exact BER supports protocol.q <= 20; set ber.mode=monte_carlo");
  }
  const long frames = cfg.integer("ber.frames");
  if (mode == "monte_carlo" && frames < 2) throw ConfigError("ber.frames must be at least 2");
  const std::uint64_t seed = cfg.u64("seed");
  const auto models = cfg.str_list("ber.models");

  auto chi_max = [](const ChannelIncrements& inc, const ProtocolSpec& s) {
    double sum = 0.0;
    for (int k = 0; k < s.q; ++k) sum += inc.dh[k];
    return inc.n_t * sum;
  };

  // BER versus threshold at protocol.t_b.
  std::vector<std::pair<std::string, ChannelIncrements>> incs;
  long hi = cfg.integer("ber.psi_max");
  long auto_hi = 0;
  for (const std::string& m : models) {
    incs.emplace_back(m, model_increments(m, cfg, spec.t_b, r.accurate));
    auto_hi = std::max(auto_hi, psi_max(chi_max(incs.back().second, spec)));
  }
  if (hi < 0) hi = auto_hi;
  const long lo = cfg.integer("ber.psi_min");
  if (lo < 0 || hi < lo) throw ConfigError("ber.psi_min must be >= 0 and <= ber.psi_max");

  io::Table tp("ber_threshold", {"threshold", "average_ber", "se", "model"});
  tp.meta["mode"] = mode;
  tp.meta["t_b_s"] = fmt(spec.t_b);
  tp.meta["q"] = std::to_string(spec.q);
  if (mode == "monte_carlo") {
    tp.meta["frames"] = std::to_string(frames);
    tp.meta["seed"] = std::to_string(seed);
  }
  std::vector<Curve> curves;
  for (const auto& [m, inc] : incs) {
    if (mode == "exact") {
      const HistoryTable table(inc, spec);
      for (long psi = lo; psi <= hi; ++psi) {
        tp.add({std::to_string(psi), fmt(table.average_ber(psi)), "0", m});
      }
    } else {
      const auto sweep = average_ber_monte_carlo_sweep(inc, lo, hi, spec, frames, seed);
      for (long psi = lo; psi <= hi; ++psi) {
        const MonteCarloBer& b = sweep[static_cast<std::size_t>(psi - lo)];
        tp.add({std::to_string(psi), fmt(b.ber), fmt(b.se), m});
      }
    }
  }
  emit(dir, "ber_threshold.csv", tp, r);

  // BER versus bit interval at the average-optimal threshold.
  io::Table tb("ber_interval", {"t_b_s", "threshold", "average_ber", "se", "model"});
  tb.meta["mode"] = mode;
  tb.meta["q"] = std::to_string(spec.q);
  for (const std::string& m : models) {
    for (double t_b : cfg.num_list("ber.t_b_list")) {
      if (!(t_b > 0.0)) throw ConfigError("ber.t_b_list entries must be positive");
      ProtocolSpec s = spec;
      s.t_b = t_b;
      const ChannelIncrements inc = model_increments(m, cfg, t_b, r.accurate);
      if (mode == "exact") {
        const AverageOptimum best = average_optimal_threshold(inc, s);
        tb.add({fmt(t_b), std::to_string(best.psi), fmt(best.ber), "0", m});
      } else {
        const auto sweep = average_ber_monte_carlo_sweep(inc, 0, psi_max(chi_max(inc, s)), s, frames, seed);
        MonteCarloBer best{2.0, 0.0, 0};
        long best_psi = 0;
        for (std::size_t k = 0; k < sweep.size(); ++k) {
          if (sweep[k].ber < best.ber) {
            best = sweep[k];
            best_psi = static_cast<long>(k);
          }
        }
        tb.add({fmt(t_b), std::to_string(best_psi), fmt(best.ber), fmt(best.se), m});
      }
    }
  }
  emit(dir, "ber_interval.csv", tb, r);

  std::ofstream gp(dir / "ber.gp");
  gp << "# gnuplot script; run from this directory: gnuplot -p ber.gp\n"
     << "set datafile separator ','\n"
     << "set logscale y\n"
     << "set key autotitle columnheader\n"
     << "set multiplot layout 1,2\n"
     << "set xlabel 'threshold'\nset ylabel 'average BER'\n"
     << "plot ";
  for (std::size_t i = 0; i < models.size(); ++i) {
    gp << (i ? ", " : "") << "'ber_threshold.csv' using 1:(strcol(4) eq '" << models[i]
       << "' ? $2 : 1/0) with lines title '" << models[i] << "'";
  }
  gp << "\nset xlabel 'T_b (s)'\nplot ";
  for (std::size_t i = 0; i < models.size(); ++i) {
    gp << (i ? ", " : "") << "'ber_interval.csv' using 1:(strcol(5) eq '" << models[i]
       << "' ? $3 : 1/0) with linespoints title '" << models[i] << "'";
  }
  gp << "\nunset multiplot\n";
  gp.close();
  r.outputs.push_back(dir / "ber.gp");
  log << "ber: " << models.size() << " models, thresholds " << lo << ".." << hi << '\n';
  return r;
}

RunResult cmd_simulate(const Config& cfg, const fs::path& dir, std::ostream& log) {
  RunResult r;
  const ChannelParams p = cfg.channel();
  const SimConfig sc = cfg.sim();
  const std::string tx_kind = cfg.str("sim.tx");
  const std::string rx_kind = cfg.str("sim.rx");
  if (rx_kind != "ap" && rx_kind != "full") throw ConfigError("sim.rx must be ap or full");
  std::optional<ApLayout> layout;
  if (rx_kind == "ap") layout = cfg.layout();
  const ApLayout* lp = layout ? &*layout : nullptr;

  SimResult res;
  CirSeries analytic;
  std::vector<double> times;
  for (std::size_t i = 1; i < sc.bins() + 1u; ++i) times.push_back(i * sc.bin_width);
  if (tx_kind == "point") {
    res = simulate_point_tx(p, lp, sc);
    analytic = lp ? cir_point_ap(times, *lp, p) : cir_ptfr(times, p, sc.entities);
  } else if (tx_kind == "mf") {
    const MembraneFusionTx tx = cfg.mf_tx();
    res = simulate_mf_tx(p, lp, tx, sc);
    const double w = lp ? layout_effective_rate(*lp, p) : 1e12;
    analytic = cir_mf(times, w, p, tx, cfg.mf_options());
    if (!lp) analytic.model = "MTFR";
    r.accurate = analytic.accurate;
    emit(dir, "release.csv", io::release_table(res), r);
  } else {
    throw ConfigError("sim.tx must be point or mf");
  }
  emit(dir, "hits.csv", io::hits_table(res), r);
  emit(dir, "cir_sim.csv", io::cir_table(res.cir), r);
  emit(dir, "cir_analytic.csv", io::cir_table(analytic), r);

  if (sc.realizations >= 2) {
    const BinStats st = estimate_ci(res.hits, res.edges, res.realizations,
                                    res.molecules_per_realization);
    io::Table t("sim_stats", {"time_s", "rate_mean", "rate_se", "cumulative_mean",
                              "cumulative_se", "cumulative_analytic", "z_score"});
    for (std::size_t b = 0; b < st.rate_mean.size(); ++b) {
      const double z = st.cumulative_se[b] > 0.0
                           ? (st.cumulative_mean[b] - analytic.cumulative[b]) / st.cumulative_se[b]
                           : NAN;
      t.add({fmt(st.edges[b + 1]), fmt(st.rate_mean[b]), fmt(st.rate_se[b]),
             fmt(st.cumulative_mean[b]), fmt(st.cumulative_se[b]), fmt(analytic.cumulative[b]),
             fmt_or_nan(z)});
    }
    emit(dir, "sim_stats.csv", t, r);
  }
  r.outputs.push_back(write_plot(dir, "simulate", "Simulated vs analytic absorbed fraction",
                                 "t (s)", "H(t)", false,
                                 {{"cir_sim.csv", "1:3", "simulation"},
                                  {"cir_analytic.csv", "1:3", "analytic"}}));
  log << "simulate: " << res.hits.size() << " hits over " << res.realizations
      << " realizations\n";
  return r;
}

}  // namespace hetrx::cli
