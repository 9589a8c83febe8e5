#include "spindiff/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "spindiff/analysis.hpp"
#include "spindiff/effective.hpp"
#include "spindiff/io.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

namespace {

const std::vector<ExperimentInfo> kCatalog = {
    {ExperimentKind::four_spin_exact, "four-spin-exact",
     "Four-spin cluster dynamics, exact and/or fourth-order Trotter-Suzuki", "params, time"},
    {ExperimentKind::four_spin_effective, "four-spin-effective",
     "Exact four-spin dynamics against the effective two-carbon flip-flop model",
     "params, regime, time"},
    {ExperimentKind::rf_map, "rf-map", "Time-averaged polarization versus RF carrier and J_d",
     "params, rf.amplitude, sweep.carrier, sweep.j_d"},
    {ExperimentKind::spectrum, "spectrum", "Zero-projection eigen-energies versus J_d",
     "params, sweep.j_d"},
    {ExperimentKind::cayley, "cayley", "Ring polarizations of a nuclear Cayley tree",
     "tree.rings, time"},
    {ExperimentKind::chain_sweep, "chain-sweep",
     "Classical spectral chain under a pulse train, swept over the delay", "chain"},
    {ExperimentKind::fit, "fit", "Stretched-exponential fit of a recovery curve", "data or synthetic"},
    {ExperimentKind::laplace, "laplace", "Rate density behind a stretched exponential",
     "tau_d, epsilon"},
};

[[noreturn]] void fail_at(const YAML::Node& n, const std::string& msg) {
  const auto m = n.Mark();
  if (m.is_null()) throw ScenarioError(msg);
  throw ScenarioError(msg + " (line " + std::to_string(m.line + 1) + ", column " +
                          std::to_string(m.column + 1) + ")",
                      m.line + 1, m.column + 1);
}

// Node access with dotted key paths for diagnostics.
class Reader {
 public:
  Reader(YAML::Node node, std::string path, bool angular)
      : node_(std::move(node)), path_(std::move(path)), angular_(angular) {}

  bool has(const std::string& key) const { return node_.IsMap() && node_[key]; }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node raw(const std::string& key) const {
    if (!node_.IsMap()) fail_at(node_, "'" + (path_.empty() ? "document" : path_) + "' must be a mapping");
    YAML::Node n = node_[key];
    if (!n) {
      const auto m = node_.Mark();
      throw ScenarioError("missing required key '" + key_path(key) + "'", m.line + 1, m.column + 1);
    }
    return n;
  }

  Reader child(const std::string& key) const {
    YAML::Node n = raw(key);
    if (!n.IsMap()) fail_at(n, "'" + key_path(key) + "' must be a mapping");
    return Reader(n, key_path(key), angular_);
  }

  template <class T>
  T get(const std::string& key) const {
    YAML::Node n = raw(key);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail_at(n, "'" + key_path(key) + "' has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  double positive(const std::string& key) const {
    const double v = get<double>(key);
    if (!(v > 0.0) || !std::isfinite(v)) fail_at(raw(key), "'" + key_path(key) + "' must be positive");
    return v;
  }

  /// Frequency in the file's units, returned in rad/s.
  double frequency(const std::string& key) const { return scale(get<double>(key)); }
  double frequency(const std::string& key, double fallback_rad) const {
    return has(key) ? frequency(key) : fallback_rad;
  }

  /// Scalar or list.
  std::vector<double> list(const std::string& key) const {
    YAML::Node n = raw(key);
    try {
      if (n.IsSequence()) return n.as<std::vector<double>>();
      return {n.as<double>()};
    } catch (const YAML::Exception&) {
      fail_at(n, "'" + key_path(key) + "' must be a number or a list of numbers");
    }
  }

  std::vector<double> frequency_list(const std::string& key) const {
    auto v = list(key);
    for (double& x : v) x = scale(x);
    return v;
  }

  Axis axis(const std::string& key, bool frequency) const {
    Reader a = child(key);
    Axis out;
    out.lo = a.get<double>("from");
    out.hi = a.get<double>("to");
    out.n = a.get<int>("points");
    out.log = a.get<bool>("log", false);
    if (out.n < 1) fail_at(a.raw("points"), "'" + a.key_path("points") + "' must be at least 1");
    if (out.log && !(out.lo > 0.0 && out.hi > 0.0))
      fail_at(a.node_, "log axis '" + key_path(key) + "' needs positive bounds");
    if (frequency) {
      out.lo = scale(out.lo);
      out.hi = scale(out.hi);
    }
    return out;
  }

  TimeGrid time(const std::string& key) const {
    Reader t = child(key);
    TimeGrid g;
    g.t_max = t.positive("max");
    g.samples = t.get<int>("samples");
    if (g.samples < 2) fail_at(t.raw("samples"), "'" + t.key_path("samples") + "' must be at least 2");
    return g;
  }

  const YAML::Node& node() const { return node_; }

 private:
  double scale(double v) const { return angular_ ? v : to_angular(v); }

  YAML::Node node_;
  std::string path_;
  bool angular_;
};

FourSpinParams read_four_spin(const Reader& root) {
  Reader p = root.child("params");
  const double field = p.has("field_tesla") ? p.positive("field_tesla") : 0.051;
  FourSpinParams fp = FourSpinParams::at_field(field);
  fp.omega_i = p.frequency("omega_i", fp.omega_i);
  fp.omega_s = p.frequency("omega_s", fp.omega_s);
  fp.a_zz12 = p.frequency("a_zz12");
  fp.a_zx12 = p.frequency("a_zx12");
  fp.a_zz34 = p.frequency("a_zz34");
  fp.a_zx34 = p.frequency("a_zx34");
  try {
    fp.validate();
  } catch (const std::invalid_argument& e) {
    fail_at(p.node(), std::string("invalid four-spin parameters: ") + e.what());
  }
  return fp;
}

std::vector<double> read_jd_list(const Reader& root) {
  Reader p = root.child("params");
  auto v = p.frequency_list("j_d");
  if (v.empty()) fail_at(p.raw("j_d"), "'params.j_d' must not be empty");
  for (double x : v)
    if (!(x >= 0.0)) fail_at(p.raw("j_d"), "'params.j_d' entries must be non-negative");
  return v;
}

Frame read_frame(const Reader& r, const std::string& key, Frame fallback) {
  if (!r.has(key)) return fallback;
  const auto s = r.get<std::string>(key);
  if (s == "hyperfine") return Frame::hyperfine;
  if (s == "laboratory" || s == "lab") return Frame::laboratory;
  fail_at(r.raw(key), "'" + r.key_path(key) + "' must be 'hyperfine' or 'laboratory'");
}

ScenarioBody read_body(ExperimentKind kind, const Reader& r, const std::filesystem::path& base) {
  switch (kind) {
    case ExperimentKind::four_spin_exact: {
      FourSpinExactConfig c;
      c.params = read_four_spin(r);
      c.j_d = read_jd_list(r);
      c.frame = read_frame(r, "frame", Frame::hyperfine);
      c.initial = r.get<std::string>("initial", "0101");
      if (c.initial.size() != 4 || c.initial.find_first_not_of("01") != std::string::npos)
        fail_at(r.raw("initial"), "'initial' must be four characters of 0 (up) and 1 (down)");
      c.time = r.time("time");
      const auto engine = r.get<std::string>("engine", "exact");
      if (engine == "exact") {
        c.run_exact = true;
      } else if (engine == "ts4") {
        c.run_exact = false;
        c.run_ts4 = true;
      } else if (engine == "both") {
        c.run_ts4 = true;
      } else {
        fail_at(r.raw("engine"), "'engine' must be exact, ts4 or both");
      }
      c.ts4_tolerance = r.get<double>("ts4_tolerance", 1e-4);
      return c;
    }
    case ExperimentKind::four_spin_effective: {
      FourSpinEffectiveConfig c;
      c.params = read_four_spin(r);
      c.j_d = read_jd_list(r);
      c.regime = r.get<int>("regime");
      if (c.regime != 1 && c.regime != 2) fail_at(r.raw("regime"), "'regime' must be 1 or 2");
      c.time = r.time("time");
      return c;
    }
    case ExperimentKind::rf_map: {
      RfMapConfig c;
      c.params = read_four_spin(r);
      Reader rf = r.child("rf");
      c.amplitude = rf.frequency("amplitude");
      if (!(c.amplitude >= 0.0)) fail_at(rf.raw("amplitude"), "'rf.amplitude' must be non-negative");
      Reader sw = r.child("sweep");
      c.carrier = sw.axis("carrier", true);
      c.j_d = sw.axis("j_d", true);
      c.options.window = rf.has("window") ? rf.positive("window") : c.options.window;
      c.options.samples = rf.get<int>("samples", c.options.samples);
      if (c.options.samples < 2) fail_at(rf.raw("samples"), "'rf.samples' must be at least 2");
      const auto init = rf.get<std::string>("init", "zero-projection");
      if (init == "zero-projection") c.options.init = DipInit::zero_projection;
      else if (init == "electrons-mixed") c.options.init = DipInit::electrons_mixed;
      else fail_at(rf.raw("init"), "'rf.init' must be zero-projection or electrons-mixed");
      c.dip_contrast = rf.get<double>("dip_contrast", 0.05);
      return c;
    }
    case ExperimentKind::spectrum: {
      SpectrumConfig c;
      c.params = read_four_spin(r);
      c.j_d = r.child("sweep").axis("j_d", true);
      return c;
    }
    case ExperimentKind::cayley: {
      CayleyConfig c;
      Reader t = r.child("tree");
      const auto rings = t.list("rings");
      for (double x : rings) {
        if (x < 1 || x != std::floor(x)) fail_at(t.raw("rings"), "'tree.rings' must be positive integers");
        c.rings.push_back(static_cast<int>(x));
      }
      c.couplings = t.has("couplings") ? t.frequency_list("couplings") : default_cayley_couplings();
      c.couplings.resize(std::min(c.couplings.size(), c.rings.size() - 1));
      c.realizations = t.get<int>("realizations", 8);
      if (c.realizations < 1) fail_at(t.raw("realizations"), "'tree.realizations' must be at least 1");
      c.time = r.time("time");
      c.dt = r.get<double>("dt", 0.0);
      c.tolerance = r.get<double>("tolerance", 1e-4);
      return c;
    }
    case ExperimentKind::chain_sweep: {
      ChainSweepConfig c;
      Reader ch = r.child("chain");
      c.m = ch.get<int>("boxes", 40);
      c.profile = ch.get<std::string>("profile", "uniform");
      if (c.profile != "uniform" && c.profile != "gaussian")
        fail_at(ch.raw("profile"), "'chain.profile' must be uniform or gaussian");
      c.gamma0 = ch.list("gamma0");
      for (double k : ch.list("rf_box")) {
        if (k != std::floor(k)) fail_at(ch.raw("rf_box"), "'chain.rf_box' must be integers");
        c.k.push_back(static_cast<int>(k));
      }
      c.a_rf = ch.get<double>("a_rf", 1e6);
      c.pulse.tau_rf = ch.get<double>("tau_rf", 1e-3);
      c.pulse.total = ch.get<double>("total", 1.0);
      c.profile_center = ch.get<double>("profile_center", 15.0);
      c.profile_width = ch.get<double>("profile_width", 2.0);
      c.profile_factor = ch.get<double>("profile_factor", 100.0);
      c.fit = ch.get<bool>("fit", true);
      if (r.has("tau")) {
        const Axis a = r.axis("tau", false);
        c.taus = a.points();
      } else {
        c.taus = default_tau_grid();
      }
      for (double g : c.gamma0)
        if (!(g > 0.0)) fail_at(ch.raw("gamma0"), "'chain.gamma0' entries must be positive");
      for (int k : c.k) {
        RateChain probe = RateChain::uniform(std::max(c.m, 2), 1.0, 1, 0.0);
        probe.k = k;
        try {
          probe.validate();
        } catch (const std::invalid_argument& e) {
          fail_at(ch.raw("rf_box"), std::string("'chain.rf_box': ") + e.what());
        }
      }
      if (c.m < 2) fail_at(ch.raw("boxes"), "'chain.boxes' must be at least 2");
      return c;
    }
    case ExperimentKind::fit: {
      FitConfig c;
      if (r.has("data")) {
        c.data = base / r.get<std::string>("data");
      } else {
        Reader s = r.child("synthetic");
        c.tau_d = s.positive("tau_d");
        c.epsilon = s.positive("epsilon");
        c.s0 = s.get<double>("s0", 1.0);
        c.s1 = s.get<double>("s1", 1.0);
        c.noise = s.get<double>("noise", 0.0);
        c.repeats = s.get<int>("repeats", 1);
        if (c.repeats < 1) fail_at(s.raw("repeats"), "'synthetic.repeats' must be at least 1");
        c.taus = s.axis("tau", false).points();
      }
      return c;
    }
    case ExperimentKind::laplace: {
      LaplaceConfig c;
      c.tau_d = r.positive("tau_d");
      c.epsilon = r.list("epsilon");
      for (double e : c.epsilon)
        if (!(e > 0.0 && e <= 1.0)) fail_at(r.raw("epsilon"), "'epsilon' entries must lie in (0, 1]");
      c.per_decade = r.get<int>("per_decade", 200);
      c.r_c_nm = r.get<double>("r_c_nm", 0.0);
      return c;
    }
  }
  throw ScenarioError("unhandled experiment kind");
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() { return kCatalog; }

std::string_view kind_name(ExperimentKind kind) {
  for (const auto& e : kCatalog)
    if (e.kind == kind) return e.name;
  return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (const auto& e : kCatalog)
    if (e.name == name) return e.kind;
  return std::nullopt;
}

std::vector<double> TimeGrid::points() const {
  std::vector<double> t(samples);
  for (int i = 0; i < samples; ++i) t[i] = t_max * i / (samples - 1);
  return t;
}

std::vector<double> Axis::points() const {
  if (n == 1) return {lo};
  if (log) return log_grid(lo, hi, n);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::string Scenario::hash() const {
  return hex64(fnv1a64(text + "\nseed=" + std::to_string(seed)));
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("parse error: " + e.msg + " (line " + std::to_string(e.mark.line + 1) +
                            ", column " + std::to_string(e.mark.column + 1) + ")",
                        e.mark.line + 1, e.mark.column + 1);
  }
  if (!doc || doc.IsNull()) throw ScenarioError("parse error: empty scenario", 1, 1);
  if (!doc.IsMap()) fail_at(doc, "parse error: scenario must be a mapping of keys to values");

  Scenario s;
  s.text = std::string(text);
  Reader top(doc, "", false);
  const auto unit = top.get<std::string>("units", "Hz");
  if (unit == "rad/s") s.angular_units = true;
  else if (unit != "Hz") fail_at(top.raw("units"), "'units' must be Hz or rad/s");
  Reader r(doc, "", s.angular_units);

  const auto kind_text = r.get<std::string>("kind");
  const auto kind = parse_kind(kind_text);
  if (!kind) fail_at(r.raw("kind"), "unknown experiment kind '" + kind_text + "'");
  s.kind = *kind;
  s.name = r.get<std::string>("name", std::string(kind_name(s.kind)));
  s.seed = r.get<std::uint64_t>("seed", 0);
  s.body = read_body(s.kind, r, base_dir);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ScenarioError("cannot open scenario file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

}  // namespace spindiff
