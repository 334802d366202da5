#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nvdesign/config.hpp"
#include "nvdesign/dataset.hpp"
#include "nvdesign/image.hpp"
#include "nvdesign/metrics.hpp"
#include "nvdesign/sig.hpp"

namespace nvdesign::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kIoError = 3, kDomainError = 4 };

/// Flags shared by every subcommand.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned workers = default_workers();
  std::string out;
  std::optional<int> n_m;
  std::optional<std::size_t> n_p;
  std::optional<std::uint64_t> samples;
};

namespace detail {

inline RunConfig effective_config(const CommonOptions& o, bool samples_are_dataset = false) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.n_m) c.shot.n_m = *o.n_m;
  if (o.n_p) c.n_p = *o.n_p;
  if (o.samples) {
    if (samples_are_dataset) c.dataset_samples = *o.samples;
    else c.sig_samples = static_cast<std::size_t>(*o.samples);
  }
  c.validate();
  return c;
}

inline nlohmann::json sidecar(const RunConfig& c, const std::string& command) {
  return {{"command", command},
          {"config_hash", hex64(c.hash())},
          {"seed", c.seed},
          {"effective_config_toml", c.to_toml()}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::filesystem::path out_dir(const CommonOptions& o, const char* fallback) {
  return o.out.empty() ? std::filesystem::path(fallback) : std::filesystem::path(o.out);
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string selection_stem(const AcquisitionGrid& g) { return "selection_" + g.label; }

/// Selection list: one tau in ns per line, ascending.
inline std::string selection_text(const Selection& s) {
  std::ostringstream os;
  for (std::size_t i : s.indices) os << s.grid.taus_ns[i] << '\n';
  return os.str();
}

/// Reads a selection list and checks that it is a subset of `grid`.
inline AcquisitionGrid load_selection(const std::string& path, const AcquisitionGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open selection '" + path + "'");
  AcquisitionGrid g;
  g.n_pulses = grid.n_pulses;
  g.label = grid.label;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::int64_t t = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), t);
    if (ec != std::errc{} || p != line.data() + line.size()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected an integer tau in ns");
    }
    g.taus_ns.push_back(t);
  }
  g.validate();
  for (std::int64_t t : g.taus_ns) {
    if (!std::binary_search(grid.taus_ns.begin(), grid.taus_ns.end(), t)) {
      throw DomainError("selection '" + path + "' has tau " + std::to_string(t) + " ns outside grid " + grid.label);
    }
  }
  return g;
}

inline std::string time_table_text(const MeasurementTime& t, int n_m) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "grid" << std::right << std::setw(10) << "n_pulses" << std::setw(10)
     << "points" << std::setw(8) << "n_m" << std::setw(14) << "seconds" << std::setw(10) << "hours" << '\n';
  for (const auto& g : t.per_grid) {
    os << std::left << std::setw(10) << g.label << std::right << std::setw(10) << g.n_pulses << std::setw(10)
       << g.points << std::setw(8) << n_m << std::setw(14) << fixed(g.seconds(), 1) << std::setw(10)
       << fixed(g.hours(), 2) << '\n';
  }
  os << std::left << std::setw(38) << "total" << std::right << std::setw(14) << fixed(t.seconds(), 1)
     << std::setw(10) << fixed(t.hours(), 2) << '\n';
  return os.str();
}

inline std::string time_table_csv(const MeasurementTime& t, int n_m) {
  std::ostringstream os;
  os << "grid,n_pulses,points,n_m,seconds,hours\n";
  for (const auto& g : t.per_grid) {
    os << g.label << ',' << g.n_pulses << ',' << g.points << ',' << n_m << ',' << fixed(g.seconds(), 3) << ','
       << fixed(g.hours(), 2) << '\n';
  }
  os << "total,,,," << fixed(t.seconds(), 3) << ',' << fixed(t.hours(), 2) << '\n';
  return os.str();
}

inline std::vector<SigCurve> run_sig(const RunConfig& c, unsigned workers, std::ostream& log) {
  std::vector<SigCurve> curves;
  const auto pb = c.sig_problem(workers);
  for (const auto& g : c.build_grids()) {
    log << "sig: " << g.label << " (" << g.size() << " points, " << pb.n_samples << " samples)\n";
    curves.push_back(sig_curve(pb, g));
  }
  return curves;
}

inline void write_sig_outputs(const std::filesystem::path& dir, const RunConfig& c, const std::vector<SigCurve>& curves) {
  for (const auto& cv : curves) {
    std::ostringstream os;
    os << "tau_ns,mean,variance\n";
    os << std::setprecision(17);
    for (std::size_t k = 0; k < cv.grid.size(); ++k) {
      os << cv.grid.taus_ns[k] << ',' << cv.mean[k] << ',' << cv.variance[k] << '\n';
    }
    const auto stem = "sig_" + cv.grid.label;
    write_text(dir / (stem + ".csv"), os.str());
    auto j = sidecar(c, "sig");
    j["n_samples"] = cv.n_samples;
    j["n_pulses"] = cv.grid.n_pulses;
    j["points"] = cv.grid.size();
    write_json(dir / (stem + ".json"), j);
  }
}

inline std::vector<Selection> write_selections(const std::filesystem::path& dir, const RunConfig& c,
                                               const std::vector<SigCurve>& curves, std::ostream& err) {
  std::vector<Selection> sels;
  for (const auto& cv : curves) {
    Selection s = select_top(cv, c.n_p);
    if (s.truncated) {
      err << "warning: n_p = " << c.n_p << " exceeds the " << cv.grid.size() << " points of grid "
          << cv.grid.label << "; selecting all of them\n";
    }
    const auto stem = selection_stem(cv.grid);
    write_text(dir / (stem + ".txt"), selection_text(s));
    auto j = sidecar(c, "select");
    j["n_samples"] = cv.n_samples;
    j["n_p"] = c.n_p;
    j["n_pulses"] = cv.grid.n_pulses;
    j["grid_points"] = cv.grid.size();
    j["selected"] = s.indices.size();
    j["truncated"] = s.truncated;
    write_json(dir / (stem + ".json"), j);
    sels.push_back(std::move(s));
  }
  return sels;
}

struct PeakRow {
  std::uint64_t sample_index;
  DetectedPeak peak;
};

/// CSV with header sample_index,a_par_hz,a_perp_hz[,intensity].
inline std::map<std::uint64_t, std::vector<DetectedPeak>> read_peak_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions '" + path + "'");
  std::map<std::uint64_t, std::vector<DetectedPeak>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.starts_with("sample_index")) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 3 || f.size() > 4) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected sample_index,a_par_hz,a_perp_hz[,intensity]");
    }
    try {
      DetectedPeak p{std::stod(f[1]), std::stod(f[2]), f.size() == 4 ? std::stod(f[3]) : 1.0};
      out[std::stoull(f[0])].push_back(p);
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

inline bool has_raster_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char m[5] = {};
  return in.read(m, 5) && std::string_view(m, 5) == std::string_view(kRasterMagic, 5);
}

}  // namespace detail

// --- subcommands -----------------------------------------------------------

struct SimulateOptions {
  std::string cluster_file;
  std::vector<std::string> spins;  // "a_par_khz,a_perp_khz"
  bool shot_noise = false;
};

inline SpinCluster parse_cluster(const SimulateOptions& s) {
  SpinCluster c;
  auto add = [&](const std::string& text, const std::string& where) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ConfigError(where + ": expected 'a_par_khz,a_perp_khz'");
    try {
      HyperfineCoupling h{units::khz(std::stod(text.substr(0, comma))), units::khz(std::stod(text.substr(comma + 1)))};
      h.validate();
      c.spins.push_back(h);
    } catch (const std::invalid_argument&) {
      throw ConfigError(where + ": malformed coupling '" + text + "'");
    }
  };
  if (!s.cluster_file.empty()) {
    std::ifstream in(s.cluster_file);
    if (!in) throw IoError("cannot open cluster file '" + s.cluster_file + "'");
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#' || line.starts_with("a_par")) continue;
      add(line, s.cluster_file + ":" + std::to_string(n));
    }
  }
  for (const auto& sp : s.spins) add(sp, "--spin");
  return c;
}

inline int cmd_simulate(const CommonOptions& o, const SimulateOptions& s, std::ostream& out) {
  const RunConfig c = detail::effective_config(o);
  const SpinCluster cluster = parse_cluster(s);
  std::ostringstream os;
  os << "grid,n_pulses,tau_ns,p_x\n" << std::setprecision(17);
  const auto grids = c.build_grids();
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const GridEvaluator ev(grids[g], c.field(), c.decoherence);
    std::vector<double> p = ev.survival(cluster);
    if (s.shot_noise) {
      p = noisy_signal(p, c.shot, derive_seed(Seed{c.seed}, {seed_stream::kShotNoise, g}));
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      os << grids[g].label << ',' << grids[g].n_pulses << ',' << grids[g].taus_ns[k] << ',' << p[k] << '\n';
    }
  }
  if (o.out.empty()) {
    out << os.str();
  } else {
    detail::write_text(o.out, os.str());
    auto j = detail::sidecar(c, "simulate");
    j["spins"] = cluster.size();
    j["shot_noise"] = s.shot_noise;
    detail::write_json(o.out + ".json", j);
  }
  return kOk;
}

inline int cmd_sig(const CommonOptions& o, std::ostream& log) {
  const RunConfig c = detail::effective_config(o);
  const auto dir = detail::out_dir(o, "sig_out");
  const auto curves = detail::run_sig(c, o.workers, log);
  detail::write_sig_outputs(dir, c, curves);
  log << "wrote " << curves.size() << " SIG curve(s) to " << dir.string() << '\n';
  return kOk;
}

inline int cmd_select(const CommonOptions& o, std::ostream& log, std::ostream& err) {
  const RunConfig c = detail::effective_config(o);
  const auto dir = detail::out_dir(o, "select_out");
  const auto curves = detail::run_sig(c, o.workers, log);
  const auto sels = detail::write_selections(dir, c, curves, err);
  for (const auto& s : sels) log << s.grid.label << ": selected " << s.indices.size() << " of " << s.grid.size() << '\n';
  return kOk;
}

struct TimeOptions {
  std::vector<std::string> selections;
  bool csv = false;
};

inline int cmd_time(const CommonOptions& o, const TimeOptions& t, std::ostream& out) {
  const RunConfig c = detail::effective_config(o);
  Design d = c.full_design();
  if (!t.selections.empty()) {
    if (t.selections.size() != d.grids.size()) throw ConfigError("--selection needs one file per config grid");
    for (std::size_t g = 0; g < d.grids.size(); ++g) d.grids[g] = detail::load_selection(t.selections[g], d.grids[g]);
  }
  const auto mt = measurement_time(d);
  const std::string text = t.csv ? detail::time_table_csv(mt, c.shot.n_m) : detail::time_table_text(mt, c.shot.n_m);
  if (o.out.empty()) {
    out << text;
  } else {
    detail::write_text(o.out, text);
    auto j = detail::sidecar(c, "time");
    j["total_seconds"] = mt.seconds();
    j["total_hours"] = mt.hours();
    detail::write_json(o.out + ".json", j);
  }
  return kOk;
}

/// Outcome of a pipeline run, also written to report.json.
struct PipelineReport {
  MeasurementTime full;
  MeasurementTime selected;
  double reduction_percent = 0.0;
  std::vector<Selection> selections;
};

inline PipelineReport run_pipeline(const RunConfig& c, unsigned workers, std::ostream& log, std::ostream& err,
                                   const std::optional<std::filesystem::path>& dir) {
  const auto curves = detail::run_sig(c, workers, log);
  PipelineReport r;
  if (dir) {
    r.selections = detail::write_selections(*dir, c, curves, err);
  } else {
    for (const auto& cv : curves) r.selections.push_back(select_top(cv, c.n_p));
  }
  r.full = measurement_time(c.full_design());
  r.selected = measurement_time(design_from_selection(r.selections, c.shot));
  r.reduction_percent = 100.0 * (1.0 - static_cast<double>(r.selected.total_ns) / static_cast<double>(r.full.total_ns));
  return r;
}

inline std::string pipeline_report_text(const PipelineReport& r, const RunConfig& c) {
  std::ostringstream os;
  os << "measurement time, n_m = " << c.shot.n_m << ", n_p = " << c.n_p << " per grid\n\n";
  os << "full design\n" << detail::time_table_text(r.full, c.shot.n_m) << '\n';
  os << "selected design\n" << detail::time_table_text(r.selected, c.shot.n_m) << '\n';
  os << "full:      " << detail::fixed(r.full.hours(), 2) << " h\n";
  os << "selected:  " << detail::fixed(r.selected.hours(), 2) << " h\n";
  os << "reduction: " << detail::fixed(r.reduction_percent, 1) << " %\n";
  return os.str();
}

inline int cmd_pipeline(const CommonOptions& o, std::ostream& log, std::ostream& err) {
  const RunConfig c = detail::effective_config(o);
  const auto dir = detail::out_dir(o, "pipeline_out");
  const auto r = run_pipeline(c, o.workers, log, err, dir);
  const std::string text = pipeline_report_text(r, c);
  detail::write_text(dir / "report.txt", text);
  auto j = detail::sidecar(c, "pipeline");
  j["full_seconds"] = r.full.seconds();
  j["full_hours"] = r.full.hours();
  j["selected_seconds"] = r.selected.seconds();
  j["selected_hours"] = r.selected.hours();
  j["reduction_percent"] = r.reduction_percent;
  for (const auto& g : r.selected.per_grid) {
    j["selected_grids"].push_back({{"label", g.label}, {"points", g.points}, {"hours", g.hours()}});
  }
  detail::write_json(dir / "report.json", j);
  log << text;
  return kOk;
}

struct GenDatasetOptions {
  std::vector<std::string> selections;
  bool append = false;
};

inline DatasetJob dataset_job(const RunConfig& c, const CommonOptions& o, const GenDatasetOptions& g) {
  DatasetJob job;
  job.prior = c.prior;
  job.bath = c.bath;
  job.design = c.full_design();
  const auto& sel = g.selections.empty() ? c.dataset_selection : g.selections;
  if (!sel.empty()) {
    if (sel.size() != job.design.grids.size()) throw ConfigError("selection needs one file per config grid");
    for (std::size_t i = 0; i < sel.size(); ++i) job.design.grids[i] = detail::load_selection(sel[i], job.design.grids[i]);
  }
  job.field = c.field();
  job.decoherence = c.decoherence;
  job.n_samples = c.dataset_samples;
  job.seed = Seed{c.seed};
  job.shard_size = c.shard_size;
  job.out_dir = detail::out_dir(o, "dataset_out");
  job.workers = o.workers;
  job.config_hash = c.hash();
  job.effective_config = c.to_toml();
  job.append = g.append;
  return job;
}

inline int cmd_gen_dataset(const CommonOptions& o, const GenDatasetOptions& g, std::ostream& log) {
  const RunConfig c = detail::effective_config(o, true);
  const auto m = generate_dataset(dataset_job(c, o, g));
  log << "dataset: " << m.n_samples << " samples in " << m.shards.size() << " shard(s) under "
      << detail::out_dir(o, "dataset_out").string() << '\n';
  return kOk;
}

struct RasterizeOptions {
  std::string dataset;
  bool csv = false;
};

inline std::vector<IndexedImage> truth_images(const std::vector<SampleRecord>& records, const ImageSpec& spec) {
  std::vector<IndexedImage> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.sample_index, rasterize_truth(r.truth, spec)});
  return out;
}

inline int cmd_rasterize(const CommonOptions& o, const RasterizeOptions& r, std::ostream& log) {
  if (r.dataset.empty()) throw ConfigError("rasterize needs --dataset");
  const auto manifest = load_manifest(r.dataset);
  const RunConfig c =
      o.config_path.empty() ? RunConfig::from_toml(manifest.effective_config) : detail::effective_config(o);
  const auto images = truth_images(read_dataset(r.dataset), c.image);
  if (r.csv) {
    const auto dir = detail::out_dir(o, "raster_out");
    for (const auto& im : images) {
      std::ostringstream os;
      write_image_csv(os, im.image);
      detail::write_text(dir / ("raster-" + std::to_string(im.sample_index) + ".csv"), os.str());
    }
    log << "wrote " << images.size() << " CSV raster(s) to " << dir.string() << '\n';
  } else {
    const std::string path = o.out.empty() ? "truth.sigrs" : o.out;
    write_raster_file(path, images, c.image.height, c.image.width);
    log << "wrote " << images.size() << " raster(s) to " << path << '\n';
  }
  return kOk;
}

struct EvaluateOptions {
  std::string dataset;
  std::string predictions;
};

struct EvaluationResult {
  std::vector<MetricsByCount::Row> rows;
  DetectionScores overall_mean;  // precision/recall/F1 averaged over samples
  std::size_t samples = 0;
};

inline EvaluationResult evaluate_predictions(const std::vector<SampleRecord>& records,
                                             const std::map<std::uint64_t, std::vector<DetectedPeak>>& preds,
                                             double radius) {
  MetricsByCount by_n;
  EvaluationResult res;
  for (const auto& rec : records) {
    static const std::vector<DetectedPeak> none;
    const auto it = preds.find(rec.sample_index);
    const auto& p = it == preds.end() ? none : it->second;
    const MatchResult m = match_peaks(rec.truth, p, radius);
    const DetectionScores s = prf1(m);
    by_n.add(rec.truth.size(), s, mae(m, rec.truth, p));
    res.overall_mean.precision += s.precision;
    res.overall_mean.recall += s.recall;
    res.overall_mean.f1 += s.f1;
    ++res.samples;
  }
  if (res.samples) {
    const double n = static_cast<double>(res.samples);
    res.overall_mean = {res.overall_mean.precision / n, res.overall_mean.recall / n, res.overall_mean.f1 / n};
  }
  res.rows = by_n.rows();
  return res;
}

inline std::string evaluation_csv(const EvaluationResult& r) {
  std::ostringstream os;
  os << "n,samples,F1,MAE_Az_Hz,MAE_Aperp_Hz\n" << std::setprecision(10);
  for (const auto& row : r.rows) {
    os << row.n_spins << ',' << row.samples << ',' << row.f1 << ',';
    if (row.mae_a_par) os << *row.mae_a_par;
    else os << "NA";
    os << ',';
    if (row.mae_a_perp) os << *row.mae_a_perp;
    else os << "NA";
    os << '\n';
  }
  return os.str();
}

inline int cmd_evaluate(const CommonOptions& o, const EvaluateOptions& e, std::ostream& out) {
  if (e.dataset.empty() || e.predictions.empty()) throw ConfigError("evaluate needs --dataset and --pred");
  const auto manifest = load_manifest(e.dataset);
  RunConfig c = o.config_path.empty() ? RunConfig::from_toml(manifest.effective_config) : detail::effective_config(o);
  const auto records = read_dataset(e.dataset);

  std::map<std::uint64_t, std::vector<DetectedPeak>> preds;
  if (detail::has_raster_magic(e.predictions)) {
    for (const auto& im : read_raster_file(e.predictions)) {
      if (im.image.height != c.image.height || im.image.width != c.image.width) {
        throw FormatError("prediction raster is " + std::to_string(im.image.height) + "x" +
                          std::to_string(im.image.width) + ", image spec expects " + std::to_string(c.image.height) +
                          "x" + std::to_string(c.image.width));
      }
      preds[im.sample_index] = extract_peaks(im.image, c.image, c.peak_threshold);
    }
  } else {
    preds = detail::read_peak_csv(e.predictions);
  }
  const auto res = evaluate_predictions(records, preds, c.match_radius_hz);
  const std::string text = evaluation_csv(res);
  if (o.out.empty()) {
    out << text;
  } else {
    detail::write_text(o.out, text);
    auto j = detail::sidecar(c, "evaluate");
    j["samples"] = res.samples;
    j["mean_precision"] = res.overall_mean.precision;
    j["mean_recall"] = res.overall_mean.recall;
    j["mean_f1"] = res.overall_mean.f1;
    detail::write_json(o.out + ".json", j);
  }
  return kOk;
}

// --- entry point -----------------------------------------------------------

inline void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "run config (TOML, or a JSON sidecar)");
  sub->add_option("--seed", o.seed, "master seed, overrides the config");
  sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output file or directory");
  sub->add_option("--nm", o.n_m, "repetitions per point, overrides shot.n_m");
  sub->add_option("--np", o.n_p, "points kept per grid, overrides sig.n_p");
  sub->add_option("--samples", o.samples, "Monte Carlo or dataset sample count");
}

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Offline measurement design for NV-centre nuclear-spin detection"};
  app.require_subcommand(1);
  CommonOptions common;
  SimulateOptions sim;
  TimeOptions tim;
  GenDatasetOptions gen;
  RasterizeOptions ras;
  EvaluateOptions eva;

  auto* simulate = app.add_subcommand("simulate", "survival probability of one cluster on every grid");
  add_common(simulate, common);
  simulate->add_option("--cluster", sim.cluster_file, "CSV of a_par_khz,a_perp_khz rows");
  simulate->add_option("--spin", sim.spins, "one coupling as a_par_khz,a_perp_khz (repeatable)");
  simulate->add_flag("--shot-noise", sim.shot_noise, "average n_m simulated readouts per point");

  auto* sig = app.add_subcommand("sig", "Monte Carlo SIG curve per grid");
  add_common(sig, common);
  auto* select = app.add_subcommand("select", "SIG curves and top-n_p selections");
  add_common(select, common);
  auto* pipeline = app.add_subcommand("pipeline", "SIG, selection and measurement-time report");
  add_common(pipeline, common);

  auto* time = app.add_subcommand("time", "measurement time per grid");
  add_common(time, common);
  time->add_option("--selection", tim.selections, "selection file per grid (in config order)");
  time->add_flag("--csv", tim.csv, "CSV instead of an aligned table");

  auto* gen_ds = app.add_subcommand("gen-dataset", "synthetic signals and ground truth as SIGDS shards");
  add_common(gen_ds, common);
  gen_ds->add_option("--selection", gen.selections, "selection file per grid (in config order)");
  gen_ds->add_flag("--append", gen.append, "extend an existing dataset with the same config");

  auto* rasterize = app.add_subcommand("rasterize", "ground-truth images of a dataset");
  add_common(rasterize, common);
  rasterize->add_option("--dataset", ras.dataset, "dataset directory")->required();
  rasterize->add_flag("--csv", ras.csv, "one CSV per sample instead of a SIGRS file");

  auto* evaluate = app.add_subcommand("evaluate", "F1 and MAE of predictions against a dataset");
  add_common(evaluate, common);
  evaluate->add_option("--dataset", eva.dataset, "dataset directory")->required();
  evaluate->add_option("--pred", eva.predictions, "SIGRS raster file or peak CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(common, sim, out);
    if (*sig) return cmd_sig(common, err);
    if (*select) return cmd_select(common, err, err);
    if (*pipeline) return cmd_pipeline(common, out, err);
    if (*time) return cmd_time(common, tim, out);
    if (*gen_ds) return cmd_gen_dataset(common, gen, err);
    if (*rasterize) return cmd_rasterize(common, ras, err);
    if (*evaluate) return cmd_evaluate(common, eva, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace nvdesign::cli
