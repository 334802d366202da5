#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvdesign/acquisition.hpp"
#include "nvdesign/binary_io.hpp"
#include "nvdesign/image.hpp"
#include "nvdesign/prior.hpp"
#include "nvdesign/sig.hpp"
#include "nvdesign/spin_types.hpp"
#include "nvdesign/toml_lite.hpp"

namespace nvdesign {

/// One acquisition grid as written in a run config.
struct GridSpec {
  int n_pulses = 32;
  double tau_lo_us = 6.0;
  double tau_hi_us = 50.0;
  double dtau_ns = 4.0;
  std::string label;

  AcquisitionGrid build() const {
    return make_grid(n_pulses, units::us(tau_lo_us), units::us(tau_hi_us), units::ns(dtau_ns), label);
  }
};

/// Everything a CLI run needs. Default-constructed values are the
/// high-field two-grid setting (404 G; N = 32 on [6, 50] us and N = 256 on
/// [10, 40] us at 4 ns; 250 repetitions per point).
struct RunConfig {
  std::uint64_t seed = 20240101;

  double b_z_gauss = 404.0;
  double gamma_hz_per_tesla = units::carbon13_gamma_hz_per_tesla;

  DecoherenceModel decoherence;
  PriorConfig prior;
  BathConfig bath;
  std::vector<GridSpec> grids{{32, 6.0, 50.0, 4.0, ""}, {256, 10.0, 40.0, 4.0, ""}};
  ShotNoiseConfig shot;

  std::size_t sig_samples = 50'000;
  std::size_t n_p = 4000;

  ImageSpec image;

  std::uint64_t dataset_samples = 1000;
  std::uint64_t shard_size = 10'000;
  std::vector<std::string> dataset_selection;  // optional, one selection file per grid

  double match_radius_hz = units::khz(1.0);
  double peak_threshold = 0.4;

  FieldConfig field() const { return FieldConfig::make(units::gauss_to_tesla(b_z_gauss), units::hz_to_rad(gamma_hz_per_tesla)); }

  std::vector<AcquisitionGrid> build_grids() const {
    std::vector<AcquisitionGrid> out;
    for (const auto& g : grids) out.push_back(g.build());
    return out;
  }

  Design full_design() const { return Design{build_grids(), shot}; }

  SigProblem sig_problem(unsigned workers) const {
    SigProblem pb;
    pb.prior = prior;
    pb.bath = bath;
    pb.field = field();
    pb.decoherence = decoherence;
    pb.n_samples = sig_samples;
    pb.seed = Seed{seed};
    pb.workers = workers;
    return pb;
  }

  /// Throws ConfigError naming the offending setting.
  void validate() const {
    auto check = [](bool ok, const std::string& what) {
      if (!ok) throw ConfigError("invalid config: " + what);
    };
    try {
      (void)field();
      if (decoherence.enabled) decoherence.validate();
      prior.validate();
      bath.validate();
      shot.validate();
      image.validate();
      check(!grids.empty(), "at least one [[grid]] is required");
      for (const auto& g : grids) (void)g.build();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("invalid config: ") + e.what());
    }
    check(sig_samples >= 2, "sig.n_samples must be >= 2");
    check(n_p >= 1, "sig.n_p must be >= 1");
    check(shard_size >= 1, "dataset.shard_size must be >= 1");
    check(match_radius_hz > 0.0, "metrics.radius_khz must be positive");
    check(peak_threshold > 0.0 && peak_threshold <= 1.0, "metrics.threshold must lie in (0, 1]");
    check(dataset_selection.empty() || dataset_selection.size() == grids.size(),
          "dataset.selection needs one file per grid");
  }

  std::string to_toml() const;
  std::uint64_t hash() const { return fnv1a64(to_toml()); }

  static RunConfig from_toml(std::string_view text);
  /// Reads a TOML run config, or a JSON sidecar/manifest carrying an
  /// "effective_config_toml" field.
  static RunConfig load(const std::string& path);
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string fmt_range_khz(const Interval& r) {
  return "[" + fmt_double(r.lo / 1e3) + ", " + fmt_double(r.hi / 1e3) + "]";
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

/// Typed access to one table that records which keys were consumed.
class TableReader {
 public:
  explicit TableReader(const toml::Table& t) : t_(t) {}

  /// Rejects any key no getter asked for.
  void done() const {
    for (const auto& [k, v] : t_.entries) {
      if (!used_.contains(k)) {
        throw toml::ParseError(v.line, "unknown key '" + qualified(k) + "'");
      }
    }
  }

  void get(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (const auto* i = std::get_if<std::int64_t>(&v->v)) out = static_cast<double>(*i);
      else if (const auto* d = std::get_if<double>(&v->v)) out = *d;
      else type_error(*v, key, "a number");
    }
  }

  template <class Int>
    requires std::is_integral_v<Int> && (!std::is_same_v<Int, bool>)
  void get(const std::string& key, Int& out) {
    if (const auto* v = find(key)) {
      const auto* i = std::get_if<std::int64_t>(&v->v);
      if (!i) type_error(*v, key, "an integer");
      if (*i < 0 && std::is_unsigned_v<Int>) throw toml::ParseError(v->line, "'" + qualified(key) + "' must be >= 0");
      out = static_cast<Int>(*i);
    }
  }

  void get(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      const auto* b = std::get_if<bool>(&v->v);
      if (!b) type_error(*v, key, "true or false");
      out = *b;
    }
  }

  void get(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      const auto* s = std::get_if<std::string>(&v->v);
      if (!s) type_error(*v, key, "a string");
      out = *s;
    }
  }

  void get(const std::string& key, std::vector<std::string>& out) {
    if (const auto* v = find(key)) {
      const auto* a = std::get_if<toml::Array>(&v->v);
      if (!a) type_error(*v, key, "an array of strings");
      out.clear();
      for (const auto& e : *a) {
        const auto* s = std::get_if<std::string>(&e.v);
        if (!s) type_error(*v, key, "an array of strings");
        out.push_back(*s);
      }
    }
  }

  /// A two-element numeric array in kHz, stored in Hz.
  void get_range_khz(const std::string& key, Interval& out) {
    if (const auto* v = find(key)) {
      const auto* a = std::get_if<toml::Array>(&v->v);
      if (!a || a->size() != 2 || !(*a)[0].is_number() || !(*a)[1].is_number()) {
        type_error(*v, key, "a [lo, hi] pair of numbers");
      }
      auto num = [](const toml::Value& x) {
        if (const auto* i = std::get_if<std::int64_t>(&x.v)) return static_cast<double>(*i);
        return std::get<double>(x.v);
      };
      out = Interval{units::khz(num((*a)[0])), units::khz(num((*a)[1]))};
    }
  }

 private:
  const toml::Value* find(const std::string& key) {
    used_.insert(key);
    auto it = t_.entries.find(key);
    return it == t_.entries.end() ? nullptr : &it->second;
  }
  std::string qualified(const std::string& k) const { return t_.name.empty() ? k : t_.name + "." + k; }
  [[noreturn]] void type_error(const toml::Value& v, const std::string& key, const char* expected) const {
    throw toml::ParseError(v.line, "'" + qualified(key) + "' must be " + expected);
  }

  const toml::Table& t_;
  std::set<std::string> used_;
};

}  // namespace detail

inline std::string RunConfig::to_toml() const {
  using detail::fmt_double;
  std::ostringstream os;
  os << "seed = " << seed << "\n\n";
  os << "[field]\nb_z_gauss = " << fmt_double(b_z_gauss) << "\ngamma_hz_per_tesla = " << fmt_double(gamma_hz_per_tesla)
     << "\n\n";
  os << "[decoherence]\nenabled = " << (decoherence.enabled ? "true" : "false")
     << "\nt_ref_ms = " << fmt_double(decoherence.t_ref * 1e3) << "\nn_ref = " << decoherence.n_ref
     << "\neta = " << fmt_double(decoherence.eta) << "\n\n";
  os << "[prior]\nn_min = " << prior.n_min << "\nn_max = " << prior.n_max
     << "\na_par_khz = " << detail::fmt_range_khz(prior.az_range)
     << "\na_perp_khz = " << detail::fmt_range_khz(prior.aperp_range) << "\n\n";
  os << "[bath]\nenabled = " << (bath.enabled ? "true" : "false") << "\nn_configs = " << bath.n_configs
     << "\nspins_per_config = " << bath.spins_per_config << "\na_par_khz = " << detail::fmt_range_khz(bath.az_range)
     << "\na_perp_khz = " << detail::fmt_range_khz(bath.aperp_range) << "\n\n";
  for (const auto& g : grids) {
    os << "[[grid]]\nn_pulses = " << g.n_pulses << "\ntau_lo_us = " << fmt_double(g.tau_lo_us)
       << "\ntau_hi_us = " << fmt_double(g.tau_hi_us) << "\ndtau_ns = " << fmt_double(g.dtau_ns) << "\n";
    if (!g.label.empty()) os << "label = " << detail::quote(g.label) << "\n";
    os << "\n";
  }
  os << "[shot]\nenabled = " << (shot.enabled ? "true" : "false") << "\nn_m = " << shot.n_m << "\n\n";
  os << "[sig]\nn_samples = " << sig_samples << "\nn_p = " << n_p << "\n\n";
  os << "[image]\nheight = " << image.height << "\nwidth = " << image.width
     << "\na_par_khz = " << detail::fmt_range_khz(image.az_extent)
     << "\na_perp_khz = " << detail::fmt_range_khz(image.aperp_extent)
     << "\npeak_sigma = " << fmt_double(image.peak_sigma) << "\n\n";
  os << "[dataset]\nn_samples = " << dataset_samples << "\nshard_size = " << shard_size << "\n";
  if (!dataset_selection.empty()) {
    os << "selection = [";
    for (std::size_t i = 0; i < dataset_selection.size(); ++i) {
      os << (i ? ", " : "") << detail::quote(dataset_selection[i]);
    }
    os << "]\n";
  }
  os << "\n[metrics]\nradius_khz = " << fmt_double(match_radius_hz / 1e3)
     << "\nthreshold = " << fmt_double(peak_threshold) << "\n";
  return os.str();
}

inline RunConfig RunConfig::from_toml(std::string_view text) {
  const toml::Document doc = toml::parse(text);
  RunConfig c;
  static const std::set<std::string> known_tables{"field", "decoherence", "prior", "bath", "shot",
                                                  "sig", "image", "dataset", "metrics"};
  for (const auto& [name, t] : doc.tables) {
    if (!known_tables.contains(name)) throw toml::ParseError(t.line, "unknown table [" + name + "]");
  }
  for (const auto& [name, arr] : doc.table_arrays) {
    if (name != "grid") throw toml::ParseError(arr.front().line, "unknown table array [[" + name + "]]");
  }
  auto table = [&](const std::string& name) -> const toml::Table& {
    static const toml::Table empty;
    auto it = doc.tables.find(name);
    return it == doc.tables.end() ? empty : it->second;
  };

  {
    detail::TableReader r(doc.root);
    r.get("seed", c.seed);
    r.done();
  }
  {
    detail::TableReader r(table("field"));
    r.get("b_z_gauss", c.b_z_gauss);
    r.get("gamma_hz_per_tesla", c.gamma_hz_per_tesla);
    r.done();
  }
  {
    detail::TableReader r(table("decoherence"));
    double t_ref_ms = c.decoherence.t_ref * 1e3;
    r.get("enabled", c.decoherence.enabled);
    r.get("t_ref_ms", t_ref_ms);
    r.get("n_ref", c.decoherence.n_ref);
    r.get("eta", c.decoherence.eta);
    r.done();
    c.decoherence.t_ref = t_ref_ms * 1e-3;
  }
  {
    detail::TableReader r(table("prior"));
    r.get("n_min", c.prior.n_min);
    r.get("n_max", c.prior.n_max);
    r.get_range_khz("a_par_khz", c.prior.az_range);
    r.get_range_khz("a_perp_khz", c.prior.aperp_range);
    r.done();
  }
  {
    detail::TableReader r(table("bath"));
    r.get("enabled", c.bath.enabled);
    r.get("n_configs", c.bath.n_configs);
    r.get("spins_per_config", c.bath.spins_per_config);
    r.get_range_khz("a_par_khz", c.bath.az_range);
    r.get_range_khz("a_perp_khz", c.bath.aperp_range);
    r.done();
  }
  if (auto it = doc.table_arrays.find("grid"); it != doc.table_arrays.end()) {
    c.grids.clear();
    for (const auto& t : it->second) {
      GridSpec g;
      detail::TableReader r(t);
      r.get("n_pulses", g.n_pulses);
      r.get("tau_lo_us", g.tau_lo_us);
      r.get("tau_hi_us", g.tau_hi_us);
      r.get("dtau_ns", g.dtau_ns);
      r.get("label", g.label);
      r.done();
      c.grids.push_back(g);
    }
  }
  {
    detail::TableReader r(table("shot"));
    r.get("enabled", c.shot.enabled);
    r.get("n_m", c.shot.n_m);
    r.done();
  }
  {
    detail::TableReader r(table("sig"));
    r.get("n_samples", c.sig_samples);
    r.get("n_p", c.n_p);
    r.done();
  }
  {
    detail::TableReader r(table("image"));
    r.get("height", c.image.height);
    r.get("width", c.image.width);
    r.get_range_khz("a_par_khz", c.image.az_extent);
    r.get_range_khz("a_perp_khz", c.image.aperp_extent);
    r.get("peak_sigma", c.image.peak_sigma);
    r.done();
  }
  {
    detail::TableReader r(table("dataset"));
    r.get("n_samples", c.dataset_samples);
    r.get("shard_size", c.shard_size);
    r.get("selection", c.dataset_selection);
    r.done();
  }
  {
    detail::TableReader r(table("metrics"));
    double radius_khz = c.match_radius_hz / 1e3;
    r.get("radius_khz", radius_khz);
    r.get("threshold", c.peak_threshold);
    r.done();
    c.match_radius_hz = units::khz(radius_khz);
  }
  c.validate();
  return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.contains("effective_config_toml") || !j["effective_config_toml"].is_string()) {
      throw ConfigError("'" + path + "' has no effective_config_toml field");
    }
    return from_toml(j["effective_config_toml"].get<std::string>());
  }
  try {
    return from_toml(text);
  } catch (const toml::ParseError& e) {
    throw ConfigError(path + ":" + e.what());
  }
}

}  // namespace nvdesign
