// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// SPINDIFF_FULL_TREE=1 runs the 22-spin tree instead of the 10-spin one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "spindiff/analysis.hpp"
#include "spindiff/chain.hpp"
#include "spindiff/effective.hpp"
#include "spindiff/evolution.hpp"
#include "spindiff/io.hpp"
#include "spindiff/rf.hpp"
#include "spindiff/runners.hpp"
#include "spindiff/units.hpp"
#include "symbolic_tables.hpp"

using namespace spindiff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Appends "label=value" and folds `ok` into the running verdict.
struct Verdict {
  bool pass = true;
  std::string text;
  void note(const std::string& s) { text += (text.empty() ? "" : "; ") + s; }
  void need(bool ok, const std::string& s) {
    pass = pass && ok;
    note(s + (ok ? "" : " [X]"));
  }
  Outcome done() const { return {pass, text}; }
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("C%-2d %s  %s: %s; runtime %.1f s of %.0f s%s\n", id, pass ? "PASS" : "FAIL", name,
              o.detail.c_str(), secs, budget_s, in_time ? "" : " [X]");
  std::fflush(stdout);
}

FourSpinParams cluster(double a12_hz, double a34_hz, double jd_hz, bool secular = true) {
  auto p = FourSpinParams::at_field(0.051);
  p.a_zx12 = to_angular(a12_hz);
  p.a_zx34 = to_angular(a34_hz);
  p.a_zz12 = secular ? p.a_zx12 : 0.0;
  p.a_zz34 = secular ? p.a_zx34 : 0.0;
  p.j_d = to_angular(jd_hz);
  return p;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[c] = m(r, c);
  return v;
}

// Exact four-spin trace against the two-level model: RMS over p1 and p4, and
// the largest polarization moved off nucleus 1.
struct PairComparison {
  double rms = 0.0;
  double transfer = 0.0;
  std::vector<double> transfer_trace;
};

PairComparison compare_pair(const SpinSystem& s, double delta, double j_eff, const std::vector<double>& t) {
  const auto ex = exact_propagate(s, basis_state(4, symbolic::ket(0, 1, 0, 1)), t);
  const auto eff = exact_propagate(build_effective_pair(delta, j_eff), basis_state(2, 1), t);
  PairComparison out;
  double sq = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto p = measure_polarization(ex[i], 4, {0, 3});
    const auto q = measure_polarization(eff[i], 2, {0, 1});
    sq += 0.5 * ((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]));
    out.transfer_trace.push_back(0.5 * (1.0 - p[0]));
    out.transfer = std::max(out.transfer, out.transfer_trace.back());
  }
  out.rms = std::sqrt(sq / static_cast<double>(t.size()));
  return out;
}

// ---------------------------------------------------------------------------

Outcome c1_symbolic() {
  std::mt19937_64 rng(2024);
  double worst_tilted = 0.0, worst_bell = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto d = symbolic::random_draw(rng, true);
    const auto s = rotate_hyperfine_frame(build_four_spin(d.p));
    const auto block = project_subspace(to_matrix(s), s, {0.0});
    const double w = d.p.omega_i * std::cos(d.theta1), x = d.p.omega_i * std::sin(d.theta1);
    const auto t = symbolic::tilted(-w, 0.0, 0.0, w, x, x, std::hypot(d.p.a_zz12, d.p.a_zx12),
                                    std::hypot(d.p.a_zz34, d.p.a_zx34), d.p.j_d);
    worst_tilted = std::max(worst_tilted, symbolic::block_error(block, symbolic::product_order(), t) /
                                              block.matrix.cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < 20; ++i) {
    auto d = symbolic::random_draw(rng, false);
    d.p.a_zz12 = d.p.a_zz34 = 0.0;
    const auto s = build_four_spin(d.p);
    const auto b = bell_transform_electrons(project_subspace(to_matrix(s), s, {0.0}), s);
    const auto t = symbolic::bell(d.p.omega_i, d.p.a_zx12, d.p.a_zx34, d.p.j_d);
    worst_bell = std::max(worst_bell, symbolic::matrix_error(b.matrix, t) / b.matrix.cwiseAbs().maxCoeff());
  }
  Verdict v;
  v.need(worst_tilted <= 1e-12, "tilted-frame block max rel error " + fmt("%.2e", worst_tilted) + " (20 draws)");
  v.need(worst_bell <= 1e-12, "singlet/triplet block max rel error " + fmt("%.2e", worst_bell) + " (20 draws)");
  return v.done();
}

Outcome c2_ts4() {
  Verdict v;
  const auto t = linspace(0.0, 1e-3, 201);
  for (double jd : {1e6, 5e6}) {
    const auto s = rotate_hyperfine_frame(build_four_spin(cluster(40e6, 9e6, jd)));
    const auto psi0 = basis_state(4, symbolic::ket(0, 1, 0, 1));
    // Largest admissible step, checked for convergence against half of it.
    const double dt = 0.99 * TrotterPlan(s, {1.0, true}).step_limit();
    const auto coarse = ts4_propagate(s, psi0, t, {dt, false, KernelBackend::serial});
    const auto fine = ts4_propagate(s, psi0, t, {0.5 * dt, false, KernelBackend::serial});
    const auto ex = exact_propagate(s, psi0, t);
    double conv = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      conv = std::max(conv, 1.0 - std::abs(coarse[i].dot(fine[i])));
      worst = std::max({worst, 1.0 - std::abs(ex[i].dot(coarse[i])), 1.0 - std::abs(ex[i].dot(fine[i]))});
    }
    const std::string tag = "J_d=" + fmt("%g", jd / 1e6) + " MHz";
    v.need(conv <= 1e-4, tag + " dt vs dt/2 " + fmt("%.1e", conv) + " at dt=" + fmt("%.3g", dt) + " s");
    v.need(worst <= 1e-4, tag + " overlap error vs exact " + fmt("%.1e", worst));
  }
  // Order from four step sizes on a short window.
  const auto s = rotate_hyperfine_frame(build_four_spin(cluster(40e6, 9e6, 1e6)));
  const auto psi0 = basis_state(4, symbolic::ket(0, 1, 0, 1));
  const double window = 40.0 * TrotterPlan(s, {1.0, true}).step_limit();
  const StateVector ref = ExactPropagator(to_matrix(s)).evolve(psi0, window);
  std::vector<double> lx, ly;
  for (int n : {32, 64, 128, 256}) {
    TrotterPlan plan(s, {window / n, true, KernelBackend::serial});
    StateVector psi = psi0;
    plan.advance(psi, window);
    lx.push_back(std::log(window / n));
    ly.push_back(std::log((psi - ref).norm()));
  }
  double mx = 0, my = 0, sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) mx += lx[i] / 4, my += ly[i] / 4;
  for (int i = 0; i < 4; ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  const double order = sxy / sxx;
  v.need(std::abs(order - 4.0) <= 0.3, "order " + fmt("%.2f", order));
  return v.done();
}

Outcome c3_regime1() {
  Verdict v;
  const auto t = linspace(0.0, 2e-3, 2001);
  for (double jd : {1e6, 5e6}) {
    const auto p = cluster(40e6, 9e6, jd);
    const auto r = regime1(p);
    const auto cmp = compare_pair(rotate_hyperfine_frame(build_four_spin(p)), r.delta, r.j_eff, t);
    const std::string tag = "J_d=" + fmt("%g", jd / 1e6) + " MHz";
    v.need(cmp.rms <= 0.2, tag + " effective RMS " + fmt("%.3f", cmp.rms));
    if (jd == 1e6) {
      v.need(cmp.transfer < 0.5, tag + " max transfer " + fmt("%.3f", cmp.transfer) + " (want < 0.5; J_dc=" +
                                     fmt("%.0f", to_linear(r.j_dc) / 1e3) + " kHz)");
      continue;
    }
    // First lobe: from the first crossing of 90% of the peak to the next drop below half.
    const auto& tr = cmp.transfer_trace;
    std::size_t i0 = 0;
    while (i0 < tr.size() && tr[i0] < 0.9 * cmp.transfer) ++i0;
    std::size_t best = i0;
    for (std::size_t i = i0; i < tr.size() && tr[i] >= 0.5 * cmp.transfer; ++i)
      if (tr[i] > tr[best]) best = i;
    const double measured = M_PI / t[best];
    const double ratio = measured / r.j_eff;
    v.need(cmp.transfer >= 0.9, tag + " max transfer " + fmt("%.3f", cmp.transfer));
    v.need(std::abs(ratio - 1.0) <= 0.3, tag + " flip-flop rate / J_eff " + fmt("%.3f", ratio));
  }
  return v.done();
}

Outcome c4_regime2() {
  Verdict v;
  const auto t = linspace(0.0, 50e-6, 1001);
  double rms[2];
  int k = 0;
  for (double jd : {1e6, 5e6}) {
    const auto p = cluster(1e6, 0.75e6, jd, false);
    const auto r = regime2(p);
    rms[k++] = compare_pair(build_four_spin(p), r.delta, r.j_eff, t).rms;
    if (jd == 1e6)
      v.need(std::abs(to_linear(r.j_eff) - 187.5e3) <= 1e-9 * 187.5e3,
             "J_eff(1 MHz) " + fmt("%.3f", to_linear(r.j_eff) / 1e3) + " kHz");
  }
  v.need(rms[1] <= 0.15, "RMS at 5 MHz " + fmt("%.3f", rms[1]));
  v.need(rms[0] > rms[1], "RMS at 1 MHz " + fmt("%.3f", rms[0]));
  return v.done();
}

Outcome c5_estimate() {
  const double j = to_linear(coupling_estimate(to_angular(560e3), to_angular(10e6), to_angular(1e6)));
  Verdict v;
  v.need(j >= 500.0 && j <= 3000.0, "J_eff " + fmt("%.3f", j / 1e3) + " kHz");
  return v.done();
}

Outcome c6_dips() {
  Verdict v;
  const auto p = cluster(14e6, 9e6, 0.0);
  const double omega = to_angular(75e3);
  const auto carriers = linspace(to_angular(-15e6), to_angular(15e6), 100);
  const auto jd = linspace(0.0, to_angular(5e6), 50);
  const double step = carriers[1] - carriers[0];
  const struct {
    DipInit init;
    const char* name;
    SubspaceSelector sel;
  } presets[] = {{DipInit::zero_projection, "zero-projection", {0.0}},
                 {DipInit::electrons_mixed, "unpolarized electrons", {}}};
  for (const auto& preset : presets) {
    DipMapOptions opts;
    opts.init = preset.init;
    const auto map = dip_map(p, omega, carriers, jd, opts);
    const auto lines = transition_frequencies(p, omega, preset.sel, true);
    const auto at0 = find_dips(carriers, row(map.nuclear, 0));
    const auto at5 = find_dips(carriers, row(map.nuclear, 49));
    double worst = 0.0;
    for (const auto& d : at0) {
      double nearest = HUGE_VAL;
      for (double l : lines) nearest = std::min(nearest, std::abs(d.position - l));
      worst = std::max(worst, nearest / step);
    }
    const std::string tag = std::string(preset.name) + ": ";
    v.need(!at0.empty() && worst <= 1.0,
           tag + std::to_string(at0.size()) + " dips at J_d=0, worst offset " + fmt("%.2f", worst) + " grid steps");
    const std::string counts = std::to_string(at0.size()) + " -> " + std::to_string(at5.size()) + " dips (0 -> 5 MHz)";
    // New hybrid dips are claimed for unpolarized electrons; with a zero-projection
    // pair the four single-carbon lines only shift, so that preset is reported.
    if (preset.init == DipInit::electrons_mixed) v.need(at5.size() > at0.size(), tag + counts);
    else v.note(tag + counts);
  }
  return v.done();
}

Outcome c7_tree(bool full) {
  const auto all = default_cayley_couplings();
  const auto tree = full ? cayley_tree({1, 3, 6, 12}, all) : cayley_tree({1, 3, 6}, {all[0], all[1]});
  const auto s = build_network(tree.network);
  const int n = s.size();
  const auto groups = tree.ring_sites();
  const auto t = linspace(0.0, 5e-3, full ? 101 : 201);
  const int realizations = 8;
  const double dt = select_time_step(s, random_bath_state(n, 0, 1), t, 1e-4).dt;
  std::vector<double> centre(t.size(), 0.0);
  double iz_drift = 0.0;
  for (int r = 0; r < realizations; ++r) {
    double total0 = 0.0;
    ts4_evolve(s, random_bath_state(n, 0, 1 + r), t, {dt, false, KernelBackend::openmp},
               [&](std::size_t i, double, const StateVector& psi) {
                 const auto g = measure_groups(psi, n, groups);
                 double total = 0.0;
                 for (double x : g) total += x;
                 if (i == 0) total0 = total;
                 iz_drift = std::max(iz_drift, std::abs(total - total0));
                 centre[i] += g[0] / realizations;
               });
  }
  std::size_t below = t.size();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (centre[i] < 0.2) {
      below = i;
      break;
    }
  double rebound = 0.0;
  for (std::size_t i = below; i < t.size(); ++i) rebound = std::max(rebound, centre[i]);
  double t_e = NAN;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (centre[i] <= std::exp(-1.0)) {
      // linear interpolation between samples
      t_e = t[i - 1] + (t[i] - t[i - 1]) * (centre[i - 1] - std::exp(-1.0)) / (centre[i - 1] - centre[i]);
      break;
    }
  Verdict v;
  v.note(std::to_string(n) + " spins, R=8, dt=" + fmt("%.3g", dt) + " s");
  v.need(iz_drift <= 1e-8, "total Iz drift " + fmt("%.1e", iz_drift));
  v.need(below < t.size() && rebound <= 0.5,
         below < t.size() ? "centre max after dropping below 0.2: " + fmt("%.3f", rebound)
                          : std::string("centre never drops below 0.2"));
  v.need(std::isfinite(t_e) && t_e >= 2e-3 / 3.0 && t_e <= 6e-3,
         std::isfinite(t_e) ? "1/e time " + fmt("%.3f", t_e * 1e3) + " ms" : std::string("no 1/e crossing in 5 ms"));
  return v.done();
}

Outcome c8_chain() {
  Verdict v;
  const auto taus = default_tau_grid();
  const PulseTrain templ{1e-3, 1e-3, 1.0};
  std::vector<double> tds;
  const double g0s[] = {100.0, 1000.0, 10000.0};
  for (int i = 0; i < 3; ++i) {
    const auto sw = tau_sweep(RateChain::uniform(40, g0s[i], 20, 1e6), taus, templ);
    if (!sw.fit) {
      v.need(false, "fit failed for gamma0=" + fmt("%g", g0s[i]) + ": " + sw.fit_error);
      return v.done();
    }
    const double eps = sw.fit->epsilon, target = i < 2 ? 1.0 : 0.8;
    v.need(std::abs(eps - target) <= 0.15, "gamma0=" + fmt("%g", g0s[i]) + " eps " + fmt("%.3f", eps) +
                                               ", tau_d " + fmt("%.4f", sw.fit->tau_d) + " s");
    tds.push_back(sw.fit->tau_d);
  }
  v.need(tds[0] > tds[1] && tds[1] > tds[2], "tau_d strictly falling in gamma0");

  const auto a15 = tau_sweep(RateChain::uniform(40, 1e3, 15, 1e6), taus, templ);
  const auto a25 = tau_sweep(RateChain::uniform(40, 1e3, 25, 1e6), taus, templ);
  if (a15.fit && a25.fit) {
    const double diff = std::abs(a15.fit->tau_d - a25.fit->tau_d);
    const double err = std::hypot(a15.fit->std_error[2], a25.fit->std_error[2]);
    v.need(diff <= err, "uniform box 15 vs 25 tau_d " + fmt("%.4f", a15.fit->tau_d) + " vs " +
                            fmt("%.4f", a25.fit->tau_d) + " s, fit error " + fmt("%.1e", err));
  } else {
    v.need(false, "location fits failed");
  }

  auto gaussian = [&](int k) {
    auto c = RateChain::from_rates(gaussian_profile(40, 1e3), k, 1e6);
    return tau_sweep(c, taus, templ, false);
  };
  const auto g15 = gaussian(15), g25 = gaussian(25);
  std::size_t stronger = 0;
  for (std::size_t i = 0; i < taus.size(); ++i)
    if (g15.normalized[i] < g25.normalized[i]) ++stronger;
  v.need(stronger == taus.size(), "Gaussian profile: box 15 attenuates more at " + std::to_string(stronger) + "/" +
                                      std::to_string(taus.size()) + " delays");

  double drift = 0.0;
  for (const auto& c : {RateChain::uniform(40, 1e4, 20, 0.0), RateChain::from_rates(gaussian_profile(40, 1e3), 15, 0.0)})
    for (double tau : {1e-4, 3e-3, 0.1})
      drift = std::max(drift, std::abs(evolve_pulse_train(c, {tau, 1e-3, 1.0}).sum() - 1.0));
  v.need(drift <= 1e-12, "conservation with sinks off " + fmt("%.1e", drift));
  return v.done();
}

Outcome c9_analysis() {
  Verdict v;
  const auto tau = log_grid(1e-4, 1.0, 41);
  std::vector<double> tds, eps;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(7000 + seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> s;
    for (double x : tau) s.push_back(stretched_model(x, 1.0, 1.0, 3e-3, 0.7) + noise(rng));
    const auto f = fit_stretched(tau, s);
    tds.push_back(f.tau_d);
    eps.push_back(f.epsilon);
  }
  std::sort(tds.begin(), tds.end());
  std::sort(eps.begin(), eps.end());
  const double mt = 0.5 * (tds[49] + tds[50]), me = 0.5 * (eps[49] + eps[50]);
  v.need(std::abs(mt / 3e-3 - 1.0) <= 0.05 && std::abs(me - 0.7) <= 0.05,
         "median fit tau_d " + fmt("%.4f", mt * 1e3) + " ms, eps " + fmt("%.4f", me) + " (truth 3 ms, 0.7)");

  double dual = 0.0;
  for (double e : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
    const auto d = inverse_laplace_stretched(1e-2, e, default_rate_grid(1e-2, e));
    for (double r : log_grid(1e-2, 10.0, 31))
      dual = std::max(dual, std::abs(laplace_forward(d, r * 1e-2) - std::exp(-std::pow(r, e))));
  }
  v.need(dual <= 1e-6, "duality error " + fmt("%.1e", dual));

  const double m1 = density_median(inverse_laplace_stretched(4e-3, 1.0, default_rate_grid(4e-3, 1.0)));
  v.need(m1 == 1.0 / 4e-3, "eps=1 median x tau_d " + fmt("%.15g", m1 * 4e-3));

  double lo = HUGE_VAL, hi = 0.0;
  for (double e = 0.6; e <= 0.9501; e += 0.05) {
    const double m = density_median(inverse_laplace_stretched(1.0, e, default_rate_grid(1.0, e)));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  v.need(lo >= 0.5 && hi <= 2.0, "median x tau_d in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "]");

  const double dd = effective_diffusion(1.0 / 600.0, 0.5);
  v.need(std::abs(dd - 150.0) <= 1e-9, "D_eff " + fmt("%.6f", dd) + " nm^2/s");
  return v.done();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// report.json minus its wall-clock line.
std::string without_wall_time(std::string s) {
  const auto a = s.find("\"wall_seconds\"");
  if (a != std::string::npos) s.erase(a, s.find('\n', a) - a);
  return s;
}

Outcome c10_determinism() {
  Verdict v;
  const fs::path work = fs::temp_directory_path() / "spindiff_acceptance";
  fs::remove_all(work);
  int scenarios = 0, files = 0;
  std::string differing;
  for (const auto& entry : fs::directory_iterator(SPINDIFF_SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml" || entry.path().stem() == "cayley_default") continue;
    const auto sc = load_scenario(entry.path());
    for (int w : {1, 2}) run_scenario(sc, {work / (sc.name + "_" + std::to_string(w)), std::nullopt, w});
    for (const auto& f : fs::directory_iterator(work / (sc.name + "_1"))) {
      const auto other = work / (sc.name + "_2") / f.path().filename();
      auto a = slurp(f.path()), b = slurp(other);
      if (f.path().filename() == "report.json") a = without_wall_time(a), b = without_wall_time(b);
      if (a != b) differing += " " + sc.name + "/" + f.path().filename().string();
      ++files;
    }
    ++scenarios;
  }
  fs::remove_all(work);
  v.need(differing.empty() && scenarios > 0,
         std::to_string(scenarios) + " scenarios, " + std::to_string(files) + " files compared at 1 vs 2 workers" +
             (differing.empty() ? "" : ", differing:" + differing));
  return v.done();
}

}  // namespace

int main() {
  const char* env = std::getenv("SPINDIFF_FULL_TREE");
  const bool full_tree = env && std::string(env) == "1";
  criterion(1, "symbolic blocks", 1.0, c1_symbolic);
  criterion(2, "TS4 accuracy", 10.0, c2_ts4);
  criterion(3, "hyperfine regime", 30.0, c3_regime1);
  criterion(4, "coupling regime", 30.0, c4_regime2);
  criterion(5, "coupling estimate", 1.0, c5_estimate);
  criterion(6, "RF dip maps", 240.0, c6_dips);  // two presets, 2 min each
  criterion(7, full_tree ? "Cayley tree (22 spins)" : "Cayley tree (10 spins)", full_tree ? 1800.0 : 60.0,
            [&] { return c7_tree(full_tree); });
  criterion(8, "spectral chain", 60.0, c8_chain);
  criterion(9, "analysis", 60.0, c9_analysis);
  criterion(10, "determinism", 900.0, c10_determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
