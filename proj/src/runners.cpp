#include "spindiff/runners.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "spindiff/analysis.hpp"
#include "spindiff/chain.hpp"
#include "spindiff/effective.hpp"
#include "spindiff/evolution.hpp"
#include "spindiff/io.hpp"
#include "spindiff/rf.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

namespace {

using four_spin::kElectron2;
using four_spin::kElectron3;
using four_spin::kNucleus1;
using four_spin::kNucleus4;

struct Context {
  const Scenario& scenario;
  OutputStage& stage;
  RunReport& report;

  CsvTable table(std::vector<std::string> columns, const std::string& units) const {
    CsvTable t;
    t.header = {{"scenario", scenario.name},
                {"kind", std::string(kind_name(scenario.kind))},
                {"scenario_hash", report.hash},
                {"seed", std::to_string(report.seed)},
                {"units", units}};
    t.columns = std::move(columns);
    return t;
  }

  void write(const std::string& name, const CsvTable& t) const { stage.write_table(name, t); }

  void check(std::string name, double value, double tolerance) const {
    report.checks.push_back({std::move(name), value, tolerance, value <= tolerance});
  }

  void warn(const std::vector<std::string>& w) const {
    report.warnings.insert(report.warnings.end(), w.begin(), w.end());
  }
};

std::string hz_tag(double omega) {
  return std::to_string(std::llround(to_linear(omega))) + "Hz";
}

StateVector four_spin_state(const std::string& bits) {
  std::vector<int> b;
  for (char c : bits) b.push_back(c == '1');
  return basis_state(4, basis_index(b));
}

SpinSystem four_spin_system(const FourSpinParams& p, Frame frame) {
  const auto lab = build_four_spin(p);
  return frame == Frame::hyperfine ? rotate_hyperfine_frame(lab) : lab;
}

const std::vector<int> kFourSites{kNucleus1, kElectron2, kElectron3, kNucleus4};

// Exact four-spin trajectory with drift diagnostics.
struct FourSpinTrace {
  std::vector<std::array<double, 4>> pol;
  double norm_drift = 0.0;
  double energy_drift = 0.0;
  double electron_drift = 0.0;
};

FourSpinTrace exact_trace(const SpinSystem& s, const StateVector& psi0, const std::vector<double>& t) {
  FourSpinTrace out;
  const double e0 = energy_expectation(s, psi0);
  const double scale = std::max(1.0, std::abs(e0));
  double sz0 = 0.0;
  exact_evolve(s, psi0, t, [&](std::size_t i, double, const StateVector& psi) {
    auto p = measure_polarization(psi, 4, kFourSites);
    out.pol.push_back({p[0], p[1], p[2], p[3]});
    if (i == 0) sz0 = p[1] + p[2];
    out.norm_drift = std::max(out.norm_drift, std::abs(psi.norm() - 1.0));
    out.energy_drift = std::max(out.energy_drift, std::abs(energy_expectation(s, psi) - e0) / scale);
    out.electron_drift = std::max(out.electron_drift, std::abs(p[1] + p[2] - sz0));
  });
  return out;
}

void run_four_spin_exact(const FourSpinExactConfig& c, const Context& ctx) {
  const auto t = c.time.points();
  for (double jd : c.j_d) {
    FourSpinParams p = c.params;
    p.j_d = jd;
    const auto s = four_spin_system(p, c.frame);
    const auto psi0 = four_spin_state(c.initial);
    std::vector<std::string> cols{"t_s"};
    std::vector<std::vector<double>> data(t.size(), std::vector<double>{});
    for (std::size_t i = 0; i < t.size(); ++i) data[i].push_back(t[i]);
    FourSpinTrace ex;
    if (c.run_exact) {
      ex = exact_trace(s, psi0, t);
      for (auto n : {"p1", "s2", "s3", "p4"}) cols.push_back(std::string(n) + "_exact");
      for (std::size_t i = 0; i < t.size(); ++i) data[i].insert(data[i].end(), ex.pol[i].begin(), ex.pol[i].end());
      ctx.check("exact norm drift J_d=" + hz_tag(jd), ex.norm_drift, 1e-10);
      ctx.check("exact energy drift J_d=" + hz_tag(jd), ex.energy_drift, 1e-8);
      ctx.check("electron Sz drift J_d=" + hz_tag(jd), ex.electron_drift, 1e-8);
    }
    if (c.run_ts4) {
      const auto sel = select_time_step(s, psi0, t, c.ts4_tolerance);
      double norm_drift = 0.0;
      double vs_exact = 0.0;
      std::vector<std::array<double, 4>> pol;
      ts4_evolve(s, psi0, t, {sel.dt, false, KernelBackend::openmp},
                 [&](std::size_t, double, const StateVector& psi) {
                   auto q = measure_polarization(psi, 4, kFourSites);
                   pol.push_back({q[0], q[1], q[2], q[3]});
                   norm_drift = std::max(norm_drift, std::abs(psi.norm() - 1.0));
                 });
      for (auto n : {"p1", "s2", "s3", "p4"}) cols.push_back(std::string(n) + "_ts4");
      for (std::size_t i = 0; i < t.size(); ++i) {
        data[i].insert(data[i].end(), pol[i].begin(), pol[i].end());
        if (c.run_exact)
          for (int k = 0; k < 4; ++k) vs_exact = std::max(vs_exact, std::abs(pol[i][k] - ex.pol[i][k]));
      }
      ctx.check("ts4 norm drift J_d=" + hz_tag(jd), norm_drift, 1e-12);
      if (c.run_exact) ctx.check("ts4 vs exact polarization J_d=" + hz_tag(jd), vs_exact, 10.0 * c.ts4_tolerance);
    }
    auto table = ctx.table(cols, "t in s; polarizations 2<Iz> dimensionless");
    table.header.emplace_back("j_d_hz", format_double(to_linear(jd)));
    for (auto& row : data) table.add_row(std::move(row));
    ctx.write("dynamics_jd_" + hz_tag(jd) + ".csv", table);
  }
}

void run_four_spin_effective(const FourSpinEffectiveConfig& c, const Context& ctx) {
  const auto t = c.time.points();
  auto summary = ctx.table({"j_d_hz", "delta_hz", "j_eff_hz", "j_dc_hz", "rms_deviation",
                            "max_transfer_exact", "max_transfer_effective"},
                           "frequencies in Hz (linear)");
  for (double jd : c.j_d) {
    FourSpinParams p = c.params;
    p.j_d = jd;
    double delta = 0.0, j_eff = 0.0, j_dc = 0.0;
    Frame frame = Frame::hyperfine;
    if (c.regime == 1) {
      const auto r = regime1(p);
      delta = r.delta;
      j_eff = r.j_eff;
      j_dc = r.j_dc;
      ctx.warn(r.warnings);
    } else {
      const auto r = regime2(p);
      delta = r.delta;
      j_eff = r.j_eff;
      frame = Frame::laboratory;
      ctx.warn(r.warnings);
    }
    const auto ex = exact_trace(four_spin_system(p, frame), four_spin_state("0101"), t);
    const auto pair = build_effective_pair(delta, j_eff);
    const auto eff = exact_propagate(pair, basis_state(2, 1), t);

    auto table = ctx.table({"t_s", "p1_exact", "p4_exact", "p1_effective", "p4_effective"},
                           "t in s; polarizations 2<Iz> dimensionless");
    table.header.emplace_back("j_d_hz", format_double(to_linear(jd)));
    double sq = 0.0, tr_ex = 0.0, tr_eff = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto q = measure_polarization(eff[i], 2, {0, 1});
      const double p1 = ex.pol[i][0], p4 = ex.pol[i][3];
      table.add_row({t[i], p1, p4, q[0], q[1]});
      sq += 0.5 * ((p1 - q[0]) * (p1 - q[0]) + (p4 - q[1]) * (p4 - q[1]));
      tr_ex = std::max(tr_ex, 0.5 * (1.0 - p1));
      tr_eff = std::max(tr_eff, 0.5 * (1.0 - q[0]));
    }
    ctx.write("effective_jd_" + hz_tag(jd) + ".csv", table);
    summary.add_row({to_linear(jd), to_linear(delta), to_linear(j_eff), to_linear(j_dc),
                     std::sqrt(sq / static_cast<double>(t.size())), tr_ex, tr_eff});
    ctx.check("exact norm drift J_d=" + hz_tag(jd), ex.norm_drift, 1e-10);
    ctx.check("electron Sz drift J_d=" + hz_tag(jd), ex.electron_drift, 1e-8);
  }
  ctx.write("effective_summary.csv", summary);
}

void run_rf_map(const RfMapConfig& c, const Context& ctx) {
  const auto carriers = c.carrier.points();
  const auto jds = c.j_d.points();
  const auto map = dip_map(c.params, c.amplitude, carriers, jds, c.options);
  auto cells = ctx.table({"j_d_hz", "carrier_hz", "nuclear", "electron"},
                         "frequencies in Hz (linear); polarizations time-averaged");
  auto dips = ctx.table({"j_d_hz", "carrier_hz", "depth"}, "frequencies in Hz (linear)");
  double excess = 0.0;
  for (std::size_t r = 0; r < jds.size(); ++r) {
    std::vector<double> row(carriers.size());
    for (std::size_t k = 0; k < carriers.size(); ++k) {
      const double n = map.nuclear(r, k), e = map.electron(r, k);
      cells.add_row({to_linear(jds[r]), to_linear(carriers[k]), n, e});
      excess = std::max({excess, std::abs(n) - 1.0, std::abs(e) - 1.0});
      row[k] = n;
    }
    if (carriers.size() >= 3)
      for (const auto& d : find_dips(carriers, row, c.dip_contrast))
        dips.add_row({to_linear(jds[r]), to_linear(d.position), d.depth});
  }
  auto lines = ctx.table({"carrier_hz"}, "single-nucleus transition frequencies, Hz (linear)");
  for (double f : transition_frequencies(c.params, c.amplitude, {}, true)) lines.add_row({to_linear(f)});
  ctx.write("rf_map.csv", cells);
  ctx.write("rf_dips.csv", dips);
  ctx.write("rf_single_nucleus_lines.csv", lines);
  ctx.check("polarization bound excess", std::max(0.0, excess), 1e-9);
}

void run_spectrum(const SpectrumConfig& c, const Context& ctx) {
  const auto spec = spectrum_vs_jd(c.params, c.j_d.points());
  std::vector<std::string> cols{"j_d_hz"};
  for (Eigen::Index b = 0; b < spec.energies.cols(); ++b) cols.push_back("e" + std::to_string(b + 1) + "_hz");
  auto table = ctx.table(cols, "energies and J_d in Hz (linear)");
  double bad = 0.0;
  for (std::size_t r = 0; r < spec.j_d.size(); ++r) {
    std::vector<double> row{to_linear(spec.j_d[r])};
    for (Eigen::Index b = 0; b < spec.energies.cols(); ++b) {
      row.push_back(to_linear(spec.energies(r, b)));
      if (!std::isfinite(row.back())) bad = 1.0;
    }
    table.add_row(std::move(row));
  }
  ctx.write("spectrum.csv", table);
  ctx.check("non-finite energies", bad, 0.0);
}

void run_cayley(const CayleyConfig& c, const Context& ctx) {
  const auto tree = cayley_tree(c.rings, c.couplings);
  const auto s = build_network(tree.network);
  const auto groups = tree.ring_sites();
  const auto t = c.time.points();
  const int n = s.size();
  const std::size_t nr = groups.size();

  double dt = c.dt;
  if (!(dt > 0.0)) {
    const auto sel = select_time_step(s, random_bath_state(n, 0, ctx.report.seed), t, c.tolerance);
    dt = sel.dt;
  }
  std::vector<std::vector<double>> sum(t.size(), std::vector<double>(nr, 0.0));
  auto sum2 = sum;
  double iz_drift = 0.0, norm_drift = 0.0;
  for (int r = 0; r < c.realizations; ++r) {
    const auto psi0 = random_bath_state(n, 0, ctx.report.seed + static_cast<std::uint64_t>(r));
    double total0 = 0.0;
    ts4_evolve(s, psi0, t, {dt, false, KernelBackend::openmp},
               [&](std::size_t i, double, const StateVector& psi) {
                 const auto g = measure_groups(psi, n, groups);
                 double total = 0.0;
                 for (std::size_t k = 0; k < nr; ++k) {
                   sum[i][k] += g[k];
                   sum2[i][k] += g[k] * g[k];
                   total += g[k];
                 }
                 if (i == 0) total0 = total;
                 iz_drift = std::max(iz_drift, std::abs(total - total0));
                 norm_drift = std::max(norm_drift, std::abs(psi.norm() - 1.0));
               });
  }
  std::vector<std::string> cols{"t_s"};
  for (std::size_t k = 0; k < nr; ++k) cols.push_back("ring" + std::to_string(k));
  for (std::size_t k = 0; k < nr; ++k) cols.push_back("ring" + std::to_string(k) + "_stderr");
  auto table = ctx.table(cols, "t in s; ring polarization sum of 2<Iz> averaged over bath states");
  table.header.emplace_back("dt_s", format_double(dt));
  table.header.emplace_back("realizations", std::to_string(c.realizations));
  const double R = c.realizations;
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::vector<double> row{t[i]};
    std::vector<double> se;
    for (std::size_t k = 0; k < nr; ++k) {
      const double mean = sum[i][k] / R;
      const double var = R > 1 ? std::max(0.0, (sum2[i][k] - R * mean * mean) / (R - 1)) : 0.0;
      row.push_back(mean);
      se.push_back(std::sqrt(var / R));
    }
    row.insert(row.end(), se.begin(), se.end());
    table.add_row(std::move(row));
  }
  ctx.write("cayley_rings.csv", table);
  ctx.check("total Iz drift", iz_drift, 1e-8);
  ctx.check("norm drift", norm_drift, 1e-12);
}

RateChain make_chain(const ChainSweepConfig& c, double gamma0, int k) {
  if (c.profile == "gaussian")
    return RateChain::from_rates(
        gaussian_profile(c.m, gamma0, c.profile_center, c.profile_width, c.profile_factor), k, c.a_rf);
  return RateChain::uniform(c.m, gamma0, k, c.a_rf);
}

void run_chain_sweep(const ChainSweepConfig& c, const Context& ctx) {
  auto summary = ctx.table({"gamma0_per_s", "rf_box", "s0", "s1", "tau_d_s", "epsilon", "tau_d_stderr",
                            "epsilon_stderr", "residual_rms", "converged"},
                           "rates in 1/s; times in s");
  PulseTrain templ = c.pulse;
  double worst_conservation = 0.0;
  for (double g0 : c.gamma0) {
    for (int k : c.k) {
      const auto chain = make_chain(c, g0, k);
      const auto q = evolve_free(chain, templ.total);
      worst_conservation = std::max(worst_conservation, std::abs(q.sum() - chain.q0.sum()));
      const auto sweep = tau_sweep(chain, c.taus, templ, c.fit);
      auto table = ctx.table({"tau_s", "q_end_no_rf", "q_end_rf", "contrast", "normalized"},
                             "tau in s; charges dimensionless");
      table.header.emplace_back("gamma0_per_s", format_double(g0));
      table.header.emplace_back("rf_box", std::to_string(k));
      for (std::size_t i = 0; i < sweep.tau.size(); ++i)
        table.add_row({sweep.tau[i], sweep.q_no_rf[i], sweep.q_rf[i], sweep.contrast[i], sweep.normalized[i]});
      std::ostringstream name;
      name << "chain_" << c.profile << "_g" << std::llround(g0) << "_k" << k << ".csv";
      ctx.write(name.str(), table);
      if (sweep.fit) {
        const auto& f = *sweep.fit;
        summary.add_row({g0, static_cast<double>(k), f.s0, f.s1, f.tau_d, f.epsilon, f.std_error[2],
                         f.std_error[3], f.residual_rms, f.converged ? 1.0 : 0.0});
        if (f.epsilon_at_bound)
          ctx.report.warnings.push_back("fit for gamma0=" + format_double(g0) + " k=" + std::to_string(k) +
                                        " hit the epsilon bound");
      } else if (c.fit) {
        ctx.report.warnings.push_back("fit failed for gamma0=" + format_double(g0) + ": " + sweep.fit_error);
      }
    }
  }
  if (c.fit) ctx.write("chain_fits.csv", summary);
  ctx.check("charge conservation with sinks off", worst_conservation, 1e-12);
}

void run_fit(const FitConfig& c, const Context& ctx) {
  auto summary = ctx.table({"repeat", "s0", "s1", "tau_d_s", "epsilon", "tau_d_stderr", "epsilon_stderr",
                            "residual_rms", "converged"},
                           "times in s");
  auto curve = ctx.table({"tau_s", "signal", "model"}, "tau in s");
  auto emit = [&](int repeat, const std::vector<double>& tau, const std::vector<double>& s) {
    const auto f = fit_stretched(tau, s);
    summary.add_row({static_cast<double>(repeat), f.s0, f.s1, f.tau_d, f.epsilon, f.std_error[2],
                     f.std_error[3], f.residual_rms, f.converged ? 1.0 : 0.0});
    if (repeat == 0)
      for (std::size_t i = 0; i < tau.size(); ++i)
        curve.add_row({tau[i], s[i], stretched_model(tau[i], f.s0, f.s1, f.tau_d, f.epsilon)});
    return f.converged;
  };
  int failed = 0;
  if (!c.data.empty()) {
    std::ifstream is(c.data);
    if (!is) throw ScenarioError("cannot open data file " + c.data.string());
    const auto data = read_csv(is);
    if (data.rows.empty() || data.rows.front().size() < 2)
      throw ScenarioError("data file needs at least two numeric columns");
    std::vector<double> tau, s;
    for (const auto& r : data.rows) {
      tau.push_back(r[0]);
      s.push_back(r[1]);
    }
    failed += !emit(0, tau, s);
  } else {
    for (int rep = 0; rep < c.repeats; ++rep) {
      std::mt19937_64 rng(ctx.report.seed + static_cast<std::uint64_t>(rep));
      std::normal_distribution<double> noise(0.0, 1.0);
      std::vector<double> s;
      for (double t : c.taus) s.push_back(stretched_model(t, c.s0, c.s1, c.tau_d, c.epsilon) + c.noise * noise(rng));
      failed += !emit(rep, c.taus, s);
    }
  }
  ctx.write("fit_summary.csv", summary);
  ctx.write("fit_curve.csv", curve);
  ctx.check("fits not converged", failed, 0.0);
}

void run_laplace(const LaplaceConfig& c, const Context& ctx) {
  auto summary = ctx.table({"epsilon", "tau_d_s", "normalization", "median_rate_per_s", "median_times_tau_d",
                            "duality_max_error", "d_eff_nm2_per_s"},
                           "rates in 1/s; times in s");
  const auto probe = log_grid(1e-2 * c.tau_d, 1e2 * c.tau_d, 41);
  for (double eps : c.epsilon) {
    const auto grid = default_rate_grid(c.tau_d, eps, c.per_decade);
    const auto d = inverse_laplace_stretched(c.tau_d, eps, grid);
    double dual = 0.0;
    for (double tau : probe)
      dual = std::max(dual, std::abs(laplace_forward(d, tau) - std::exp(-std::pow(tau / c.tau_d, eps))));
    const double med = density_median(d);
    const double norm = d.point_mass ? 1.0 : d.normalization;
    summary.add_row({eps, c.tau_d, norm, med, med * c.tau_d, dual,
                     c.r_c_nm > 0.0 ? effective_diffusion(c.tau_d, c.r_c_nm) : 0.0});
    if (!d.point_mass) {
      auto table = ctx.table({"mu_per_s", "density_s"}, "rates in 1/s; density in s");
      table.header.emplace_back("epsilon", format_double(eps));
      for (std::size_t i = 0; i < d.mu.size(); ++i) table.add_row({d.mu[i], d.density[i]});
      ctx.write("rate_density_eps_" + format_double(eps) + ".csv", table);
    }
    ctx.check("normalization eps=" + format_double(eps), std::abs(norm - 1.0), 1e-4);
    ctx.check("duality eps=" + format_double(eps), dual, 1e-6);
  }
  ctx.write("laplace_summary.csv", summary);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

void four_spin_diagnostics(const FourSpinParams& p, Diagnostics& d) {
  const auto tf = tilted_frequencies(p);
  d.derived.push_back("omega_I/2pi = " + fmt(to_linear(p.omega_i) / 1e3, 3) + " kHz");
  d.derived.push_back("Delta12/2pi = " + fmt(to_linear(tf.delta12) / 1e6, 2) + " MHz");
  d.derived.push_back("Delta34/2pi = " + fmt(to_linear(tf.delta34) / 1e6, 2) + " MHz");
  d.derived.push_back("omega_z1/2pi = " + fmt(to_linear(tf.omega_z1) / 1e3, 3) + " kHz, omega_x1/2pi = " +
                      fmt(to_linear(tf.omega_x1) / 1e3, 3) + " kHz");
  d.derived.push_back("omega_z4/2pi = " + fmt(to_linear(tf.omega_z4) / 1e3, 3) + " kHz, omega_x4/2pi = " +
                      fmt(to_linear(tf.omega_x4) / 1e3, 3) + " kHz");
}

void regime_diagnostics(FourSpinParams p, const std::vector<double>& jds, int regime, Diagnostics& d) {
  for (double jd : jds) {
    p.j_d = jd;
    const std::string at = " at J_d/2pi = " + fmt(to_linear(jd) / 1e6, 3) + " MHz";
    if (regime == 1) {
      const auto r = regime1(p);
      d.derived.push_back("regime 1" + at + ": delta/2pi = " + fmt(to_linear(r.delta) / 1e3, 3) +
                          " kHz, J_eff/2pi = " + fmt(to_linear(r.j_eff) / 1e3, 3) + " kHz, J_dc/2pi = " +
                          fmt(to_linear(r.j_dc) / 1e3, 3) + " kHz, hierarchy " + (r.hierarchy_ok ? "ok" : "violated"));
      d.warnings.insert(d.warnings.end(), r.warnings.begin(), r.warnings.end());
    } else {
      const auto r = regime2(p);
      d.derived.push_back("regime 2" + at + ": delta/2pi = " + fmt(to_linear(r.delta) / 1e3, 3) +
                          " kHz, J_eff/2pi = " + fmt(to_linear(r.j_eff) / 1e3, 3) + " kHz, hierarchy " +
                          (r.hierarchy_ok ? "ok" : "violated") + (r.delocalized ? ", delocalized" : ""));
      d.warnings.insert(d.warnings.end(), r.warnings.begin(), r.warnings.end());
    }
  }
}

}  // namespace

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["kind"] = kind;
  j["scenario_hash"] = hash;
  j["seed"] = seed;
  j["wall_seconds"] = wall_seconds;
  j["ok"] = ok;
  j["manifest"] = manifest;
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : this->checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}});
  j["checks"] = checks;
  j["warnings"] = warnings;
  if (!error.empty()) j["error"] = error;
  return j.dump(2) + "\n";
}

Diagnostics validate_scenario(const Scenario& s) {
  Diagnostics d;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FourSpinExactConfig>) {
          four_spin_diagnostics(c.params, d);
          if (c.frame == Frame::hyperfine) regime_diagnostics(c.params, c.j_d, 1, d);
        } else if constexpr (std::is_same_v<T, FourSpinEffectiveConfig>) {
          four_spin_diagnostics(c.params, d);
          regime_diagnostics(c.params, c.j_d, c.regime, d);
        } else if constexpr (std::is_same_v<T, RfMapConfig>) {
          four_spin_diagnostics(c.params, d);
          const auto tf = tilted_frequencies(c.params);
          const double c1 = tf.omega_z1 / c.params.omega_i, s1 = tf.omega_x1 / c.params.omega_i;
          const double c4 = tf.omega_z4 / c.params.omega_i, s4 = tf.omega_x4 / c.params.omega_i;
          d.derived.push_back("Omega_z1/2pi = " + fmt(to_linear(c.amplitude * c1) / 1e3, 3) +
                              " kHz, Omega_x1/2pi = " + fmt(to_linear(c.amplitude * s1) / 1e3, 3) + " kHz");
          d.derived.push_back("Omega_z4/2pi = " + fmt(to_linear(c.amplitude * c4) / 1e3, 3) +
                              " kHz, Omega_x4/2pi = " + fmt(to_linear(c.amplitude * s4) / 1e3, 3) + " kHz");
          d.derived.push_back("map cells = " + std::to_string(c.carrier.n * c.j_d.n));
        } else if constexpr (std::is_same_v<T, SpectrumConfig>) {
          four_spin_diagnostics(c.params, d);
        } else if constexpr (std::is_same_v<T, CayleyConfig>) {
          const auto tree = cayley_tree(c.rings, c.couplings);
          d.derived.push_back("sites = " + std::to_string(tree.network.n_sites) + ", edges = " +
                              std::to_string(tree.network.couplings.size()));
          d.derived.push_back("state dimension = " + std::to_string(basis::dimension(tree.network.n_sites)));
        } else if constexpr (std::is_same_v<T, ChainSweepConfig>) {
          PulseTrain p = c.pulse;
          p.tau = c.taus.front();
          p.validate();
          d.derived.push_back("pulses at shortest delay = " + std::to_string(p.pulses()));
          d.derived.push_back("delay points = " + std::to_string(c.taus.size()));
        } else if constexpr (std::is_same_v<T, FitConfig>) {
          if (!c.data.empty() && !std::filesystem::exists(c.data))
            throw ScenarioError("data file not found: " + c.data.string());
          d.derived.push_back(c.data.empty() ? "synthetic repeats = " + std::to_string(c.repeats)
                                             : "data = " + c.data.string());
        } else if constexpr (std::is_same_v<T, LaplaceConfig>) {
          if (c.r_c_nm > 0.0)
            d.derived.push_back("D_eff = " + fmt(effective_diffusion(c.tau_d, c.r_c_nm), 2) + " nm^2/s");
        }
      },
      s.body);
  return d;
}

RunReport run_scenario(const Scenario& scenario, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Scenario sc = scenario;
  if (options.seed) sc.seed = *options.seed;
  if (options.workers > 0) kernels::set_workers(options.workers);

  RunReport report;
  report.scenario = sc.name;
  report.kind = std::string(kind_name(sc.kind));
  report.seed = sc.seed;
  report.hash = sc.hash();
  const auto diag = validate_scenario(sc);
  report.warnings = diag.warnings;

  OutputStage stage(options.out_dir, report.hash);
  Context ctx{sc, stage, report};
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FourSpinExactConfig>) run_four_spin_exact(c, ctx);
        else if constexpr (std::is_same_v<T, FourSpinEffectiveConfig>) run_four_spin_effective(c, ctx);
        else if constexpr (std::is_same_v<T, RfMapConfig>) run_rf_map(c, ctx);
        else if constexpr (std::is_same_v<T, SpectrumConfig>) run_spectrum(c, ctx);
        else if constexpr (std::is_same_v<T, CayleyConfig>) run_cayley(c, ctx);
        else if constexpr (std::is_same_v<T, ChainSweepConfig>) run_chain_sweep(c, ctx);
        else if constexpr (std::is_same_v<T, FitConfig>) run_fit(c, ctx);
        else run_laplace(c, ctx);
      },
      sc.body);

  std::vector<std::string> unique;
  for (const auto& w : report.warnings)
    if (std::find(unique.begin(), unique.end(), w) == unique.end()) unique.push_back(w);
  report.warnings = std::move(unique);
  report.ok = true;
  for (const auto& c : report.checks) report.ok = report.ok && c.passed;
  report.manifest = stage.manifest();
  report.manifest.push_back("report.json");
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  stage.write_text("report.json", report.to_json());
  stage.commit();
  return report;
}

}  // namespace spindiff
