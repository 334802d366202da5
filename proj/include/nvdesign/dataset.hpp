#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvdesign/acquisition.hpp"
#include "nvdesign/binary_io.hpp"
#include "nvdesign/grid_evaluator.hpp"
#include "nvdesign/parallel.hpp"
#include "nvdesign/prior.hpp"

namespace nvdesign {

// Shard layout ("SIGDS", little-endian):
//
//   header   "SIGDS" u16 version
//            u64 config_hash, u64 master_seed, u64 first_sample_index, u64 record_count
//            u32 grid_count, then per grid: u32 n_pulses, u64 n_points, n_points x i64 tau_ns
//   records  u32 payload_bytes, then payload:
//            u64 sample_index, u64 sample_seed, i32 bath_index (-1 = none), u32 n_spins,
//            n_spins x (f64 a_par_hz, f64 a_perp_hz),
//            per grid n_points x f32 averaged signal
//
// Nothing time-dependent is stored, so identical inputs give identical bytes.

inline constexpr char kShardMagic[] = "SIGDS";
inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

struct ShardHeader {
  std::uint16_t version = kShardVersion;
  std::uint64_t config_hash = 0;
  Seed master_seed;
  std::uint64_t first_sample_index = 0;
  std::uint64_t record_count = 0;
  std::vector<AcquisitionGrid> grids;
};

struct SampleRecord {
  std::uint64_t sample_index = 0;
  Seed seed;
  std::int32_t bath_index = -1;
  SpinCluster truth;
  std::vector<std::vector<float>> signals;  // one per header grid

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

namespace detail {

inline void encode_header(ByteWriter& w, const ShardHeader& h) {
  w.raw(std::string_view(kShardMagic, 5));
  w.put<std::uint16_t>(h.version);
  w.put<std::uint64_t>(h.config_hash);
  w.put<std::uint64_t>(h.master_seed.value);
  w.put<std::uint64_t>(h.first_sample_index);
  w.put<std::uint64_t>(h.record_count);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.grids.size()));
  for (const auto& g : h.grids) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(g.n_pulses));
    w.put<std::uint64_t>(g.size());
    for (std::int64_t t : g.taus_ns) w.put<std::int64_t>(t);
  }
}

/// Byte offset of record_count inside the header.
inline constexpr std::size_t kRecordCountOffset = 5 + 2 + 8 + 8 + 8;

inline void encode_record(ByteWriter& w, const SampleRecord& r) {
  const std::size_t len_at = w.size();
  w.put<std::uint32_t>(0);
  w.put<std::uint64_t>(r.sample_index);
  w.put<std::uint64_t>(r.seed.value);
  w.put<std::int32_t>(r.bath_index);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.truth.size()));
  for (const auto& s : r.truth.spins) {
    w.put<double>(s.a_par);
    w.put<double>(s.a_perp);
  }
  for (const auto& sig : r.signals) {
    for (float v : sig) w.put<float>(v);
  }
  w.patch_u32(len_at, static_cast<std::uint32_t>(w.size() - len_at - 4));
}

}  // namespace detail

/// Streams records out of one shard, validating as it goes.
class ShardReader {
 public:
  explicit ShardReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open shard '" + path + "'");
    read_header();
  }

  const ShardHeader& header() const noexcept { return header_; }

  /// Next record, or nullopt after the last one.
  std::optional<SampleRecord> next() {
    if (read_ >= header_.record_count) {
      if (in_.peek() != std::char_traits<char>::eof()) {
        throw FormatError("shard '" + path_ + "' has data after the last record",
                          static_cast<long long>(read_));
      }
      return std::nullopt;
    }
    const auto idx = static_cast<long long>(read_);
    std::uint8_t lenbuf[4];
    if (!in_.read(reinterpret_cast<char*>(lenbuf), 4)) {
      throw FormatError("shard '" + path_ + "' truncated at record " + std::to_string(idx), idx);
    }
    const std::uint32_t len = ByteReader(lenbuf, 4).get<std::uint32_t>();
    std::vector<std::uint8_t> payload(len);
    if (!in_.read(reinterpret_cast<char*>(payload.data()), len)) {
      throw FormatError("shard '" + path_ + "' truncated at record " + std::to_string(idx), idx);
    }
    SampleRecord rec;
    try {
      ByteReader r(payload.data(), payload.size());
      rec.sample_index = r.get<std::uint64_t>();
      rec.seed = Seed{r.get<std::uint64_t>()};
      rec.bath_index = r.get<std::int32_t>();
      const auto n_spins = r.get<std::uint32_t>();
      if (!r.can_read(static_cast<std::size_t>(n_spins) * 16)) throw FormatError("spin list overruns record");
      rec.truth.spins.resize(n_spins);
      for (auto& s : rec.truth.spins) {
        s.a_par = r.get<double>();
        s.a_perp = r.get<double>();
      }
      rec.signals.resize(header_.grids.size());
      for (std::size_t g = 0; g < header_.grids.size(); ++g) {
        auto& sig = rec.signals[g];
        sig.resize(header_.grids[g].size());
        for (float& v : sig) {
          v = r.get<float>();
          if (!(v >= 0.0f && v <= 1.0f)) throw FormatError("signal value outside [0, 1]");
        }
      }
      if (r.remaining() != 0) throw FormatError("record length disagrees with header grids");
    } catch (const FormatError& e) {
      throw FormatError("shard '" + path_ + "' record " + std::to_string(idx) + ": " + e.what(), idx);
    }
    ++read_;
    return rec;
  }

  std::vector<SampleRecord> read_all() {
    std::vector<SampleRecord> out;
    while (auto r = next()) out.push_back(std::move(*r));
    return out;
  }

 private:
  void read_header() {
    auto fail = [&](const std::string& msg) { throw FormatError("shard '" + path_ + "': " + msg); };
    char magic[5];
    if (!in_.read(magic, 5) || std::string_view(magic, 5) != std::string_view(kShardMagic, 5)) {
      fail("bad magic, not a SIGDS shard");
    }
    std::uint8_t fixed[2 + 8 * 4 + 4];
    if (!in_.read(reinterpret_cast<char*>(fixed), sizeof fixed)) fail("truncated header");
    ByteReader r(fixed, sizeof fixed);
    header_.version = r.get<std::uint16_t>();
    if (header_.version != kShardVersion) fail("unsupported version " + std::to_string(header_.version));
    header_.config_hash = r.get<std::uint64_t>();
    header_.master_seed = Seed{r.get<std::uint64_t>()};
    header_.first_sample_index = r.get<std::uint64_t>();
    header_.record_count = r.get<std::uint64_t>();
    const auto n_grids = r.get<std::uint32_t>();
    for (std::uint32_t g = 0; g < n_grids; ++g) {
      std::uint8_t gb[12];
      if (!in_.read(reinterpret_cast<char*>(gb), 12)) fail("truncated grid descriptor");
      ByteReader gr(gb, 12);
      AcquisitionGrid grid;
      grid.n_pulses = static_cast<int>(gr.get<std::uint32_t>());
      const auto n = gr.get<std::uint64_t>();
      if (n > (1ULL << 32)) fail("implausible grid size");
      std::vector<std::uint8_t> tb(n * 8);
      if (!in_.read(reinterpret_cast<char*>(tb.data()), static_cast<std::streamsize>(tb.size()))) {
        fail("truncated grid descriptor");
      }
      ByteReader tr(tb.data(), tb.size());
      grid.taus_ns.resize(n);
      for (auto& t : grid.taus_ns) t = tr.get<std::int64_t>();
      grid.label = default_grid_label(grid.n_pulses);
      header_.grids.push_back(std::move(grid));
    }
  }

  std::string path_;
  std::ifstream in_;
  ShardHeader header_;
  std::uint64_t read_ = 0;
};

inline std::vector<SampleRecord> read_shard(const std::string& path) { return ShardReader(path).read_all(); }

/// Writes one shard; the record count in the header is patched on close().
class ShardWriter {
 public:
  ShardWriter(const std::string& path, ShardHeader header) : path_(path), header_(std::move(header)) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open shard '" + path + "' for writing");
    header_.record_count = 0;
    ByteWriter w;
    detail::encode_header(w, header_);
    write(w.bytes());
  }

  void append_encoded(const std::vector<std::uint8_t>& bytes, std::uint64_t records) {
    write(bytes);
    header_.record_count += records;
  }

  std::uint64_t record_count() const noexcept { return header_.record_count; }

  void close() {
    ByteWriter w;
    w.put<std::uint64_t>(header_.record_count);
    out_.seekp(static_cast<std::streamoff>(detail::kRecordCountOffset));
    write(w.bytes());
    out_.close();
    if (!out_) throw IoError("failed closing shard '" + path_ + "'");
  }

 private:
  void write(const std::vector<std::uint8_t>& b) {
    out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out_) throw IoError("failed writing shard '" + path_ + "'");
  }

  std::string path_;
  ShardHeader header_;
  std::ofstream out_;
};

struct ShardEntry {
  std::string file;  // relative to the manifest directory
  std::uint64_t first_sample_index = 0;
  std::uint64_t count = 0;
  std::uint64_t content_hash = 0;
};

struct DatasetManifest {
  std::uint64_t config_hash = 0;
  Seed master_seed;
  std::uint64_t n_samples = 0;
  std::uint64_t shard_size = 0;
  std::vector<AcquisitionGrid> grids;
  std::vector<ShardEntry> shards;
  std::string effective_config;  // run config text the dataset was generated from

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "SIGDS";
    j["version"] = kShardVersion;
    j["config_hash"] = hex64(config_hash);
    j["master_seed"] = master_seed.value;
    j["n_samples"] = n_samples;
    j["shard_size"] = shard_size;
    for (const auto& g : grids) {
      j["grids"].push_back({{"label", g.label},
                            {"n_pulses", g.n_pulses},
                            {"n_points", g.size()},
                            {"tau_first_ns", g.taus_ns.front()},
                            {"tau_last_ns", g.taus_ns.back()}});
    }
    j["shards"] = nlohmann::json::array();
    for (const auto& s : shards) {
      j["shards"].push_back({{"file", s.file},
                             {"first_sample_index", s.first_sample_index},
                             {"count", s.count},
                             {"content_hash", hex64(s.content_hash)}});
    }
    j["effective_config_toml"] = effective_config;
    return j;
  }

  /// Grids are not restored from JSON (only summarised there); take them
  /// from a shard header.
  static DatasetManifest from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "SIGDS") throw FormatError("manifest format is not SIGDS");
      DatasetManifest m;
      m.config_hash = parse_hex64(j.at("config_hash").get<std::string>());
      m.master_seed = Seed{j.at("master_seed").get<std::uint64_t>()};
      m.n_samples = j.at("n_samples").get<std::uint64_t>();
      m.shard_size = j.at("shard_size").get<std::uint64_t>();
      for (const auto& s : j.at("shards")) {
        m.shards.push_back({s.at("file").get<std::string>(), s.at("first_sample_index").get<std::uint64_t>(),
                            s.at("count").get<std::uint64_t>(),
                            parse_hex64(s.at("content_hash").get<std::string>())});
      }
      m.effective_config = j.value("effective_config_toml", std::string{});
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed manifest: ") + e.what());
    }
  }
};

inline DatasetManifest load_manifest(const std::filesystem::path& dir_or_file) {
  const auto path = std::filesystem::is_directory(dir_or_file) ? dir_or_file / kManifestName : dir_or_file;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return DatasetManifest::from_json(j);
}

/// All records of a dataset in sample order. Each shard's content hash and
/// header config hash are checked against the manifest first.
inline std::vector<SampleRecord> read_dataset(const std::filesystem::path& dir) {
  const auto m = load_manifest(dir);
  std::vector<SampleRecord> out;
  for (const auto& s : m.shards) {
    const auto path = (dir / s.file).string();
    if (file_content_hash(path) != s.content_hash) {
      throw FormatError("shard '" + path + "' content hash does not match the manifest");
    }
    ShardReader r(path);
    if (r.header().config_hash != m.config_hash) {
      throw FormatError("shard '" + path + "' config hash does not match the manifest");
    }
    while (auto rec = r.next()) out.push_back(std::move(*rec));
  }
  return out;
}

/// Everything needed to produce a dataset.
struct DatasetJob {
  PriorConfig prior;
  BathConfig bath;
  Design design;
  FieldConfig field = FieldConfig::from_gauss(404.0);
  DecoherenceModel decoherence;
  std::uint64_t n_samples = 1000;
  Seed seed;
  std::uint64_t shard_size = 10'000;
  std::filesystem::path out_dir;
  unsigned workers = 1;
  std::uint64_t config_hash = 0;
  std::string effective_config;
  bool append = false;
};

/// Simulates the records of samples [first, first + count) without touching disk.
class SampleGenerator {
 public:
  explicit SampleGenerator(const DatasetJob& job) : job_(job) {
    job_.design.validate();
    job_.prior.validate();
    for (const auto& g : job_.design.grids) evaluators_.emplace_back(g, job_.field, job_.decoherence);
    if (job_.bath.enabled) {
      const auto configs = sample_bath_configs(job_.bath, bath_seed(job_.seed));
      for (const auto& g : job_.design.grids) caches_.emplace_back(configs, g, job_.field);
      n_bath_ = static_cast<int>(configs.size());
    }
  }

  SampleRecord generate(std::uint64_t index) const {
    const SampleDraw d = draw_sample(job_.prior, n_bath_, job_.seed, index);
    SampleRecord rec{index, d.seed, d.bath_index, d.cluster, {}};
    rec.signals.resize(evaluators_.size());
    for (std::size_t g = 0; g < evaluators_.size(); ++g) {
      const auto& ev = evaluators_[g];
      std::vector<double> prod(ev.size(), 1.0);
      if (d.bath_index >= 0) {
        const auto b = caches_[g][static_cast<std::size_t>(d.bath_index)];
        std::copy(b.begin(), b.end(), prod.begin());
      }
      for (const auto& s : d.cluster.spins) ev.multiply_modulation(s, prod);
      std::vector<double> ideal(ev.size());
      ev.survival(prod, ideal);
      const auto noisy = noisy_signal(ideal, job_.design.shot,
                                      derive_seed(d.seed, {seed_stream::kShotNoise, g}));
      rec.signals[g].assign(noisy.begin(), noisy.end());
    }
    return rec;
  }

 private:
  DatasetJob job_;
  std::vector<GridEvaluator> evaluators_;
  std::vector<BathModulationCache> caches_;
  int n_bath_ = 0;
};

inline std::string shard_file_name(std::size_t shard_number) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shard-%05zu.sigds", shard_number);
  return buf;
}

/// Generates job.n_samples records into shards under job.out_dir and writes
/// the manifest. With job.append the existing manifest must carry the same
/// config hash and seed; new samples continue its index range.
inline DatasetManifest generate_dataset(const DatasetJob& job) {
  if (job.shard_size < 1) throw DomainError("shard size must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(job.out_dir, ec);
  if (ec) throw IoError("cannot create '" + job.out_dir.string() + "': " + ec.message());

  DatasetManifest manifest;
  manifest.config_hash = job.config_hash;
  manifest.master_seed = job.seed;
  manifest.shard_size = job.shard_size;
  manifest.grids = job.design.grids;
  manifest.effective_config = job.effective_config;
  const auto manifest_path = job.out_dir / kManifestName;
  if (job.append && fs::exists(manifest_path)) {
    const auto existing = load_manifest(manifest_path);
    if (existing.config_hash != job.config_hash) {
      throw ConfigError("config hash mismatch on append: dataset has " + hex64(existing.config_hash) +
                        ", run config has " + hex64(job.config_hash));
    }
    if (existing.master_seed != job.seed) throw ConfigError("seed mismatch on append");
    manifest.n_samples = existing.n_samples;
    manifest.shards = existing.shards;
  }

  const SampleGenerator gen(job);
  const std::uint64_t first = manifest.n_samples;
  const std::uint64_t end = first + job.n_samples;
  constexpr std::uint64_t kChunk = 16;

  std::optional<ShardWriter> writer;
  ShardEntry current;
  auto finish_shard = [&] {
    if (!writer) return;
    writer->close();
    current.count = writer->record_count();
    current.content_hash = file_content_hash((job.out_dir / current.file).string());
    manifest.shards.push_back(current);
    writer.reset();
  };

  // Chunks never straddle a shard boundary, so each consumed chunk goes to
  // exactly one shard.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> chunks;
  for (std::uint64_t lo = first; lo < end;) {
    const std::uint64_t shard_end = lo + (job.shard_size - (lo - first) % job.shard_size);
    const std::uint64_t hi = std::min({end, lo + kChunk, shard_end});
    chunks.emplace_back(lo, hi);
    lo = hi;
  }

  ordered_parallel(
      chunks.size(), job.workers,
      [&](std::size_t c) {
        ByteWriter w;
        for (std::uint64_t i = chunks[c].first; i < chunks[c].second; ++i) {
          detail::encode_record(w, gen.generate(i));
        }
        return std::move(w.bytes());
      },
      [&](std::size_t c, std::vector<std::uint8_t> bytes) {
        const auto [lo, hi] = chunks[c];
        if ((lo - first) % job.shard_size == 0) {
          finish_shard();
          current = ShardEntry{shard_file_name(manifest.shards.size()), lo, 0, 0};
          ShardHeader h;
          h.config_hash = job.config_hash;
          h.master_seed = job.seed;
          h.first_sample_index = lo;
          h.grids = job.design.grids;
          writer.emplace((job.out_dir / current.file).string(), std::move(h));
        }
        writer->append_encoded(bytes, hi - lo);
      });
  finish_shard();
  manifest.n_samples = end;

  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest '" + manifest_path.string() + "'");
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest '" + manifest_path.string() + "'");
  return manifest;
}

}  // namespace nvdesign
