#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "nvdesign/dataset.hpp"
#include "nvdesign/spin_model.hpp"
#include "test_support.hpp"

using namespace nvdesign;

namespace {

ShardHeader small_header() {
  ShardHeader h;
  h.config_hash = 0xfeedbeefcafef00dULL;
  h.master_seed = Seed{99};
  h.first_sample_index = 500;
  h.grids = {make_grid_ns(32, 6'000, 6'040, 4), make_grid_ns(256, 10'000, 10'020, 4)};
  return h;
}

SampleRecord make_record(std::uint64_t i, const ShardHeader& h) {
  SampleRecord r;
  r.sample_index = h.first_sample_index + i;
  r.seed = Seed{i * 31 + 7};
  r.bath_index = static_cast<std::int32_t>(i % 5) - 1;
  for (std::uint64_t s = 0; s < i % 4; ++s) r.truth.spins.push_back({1000.0 * static_cast<double>(s) - 3.5, 2e3 + static_cast<double>(i)});
  for (const auto& g : h.grids) {
    std::vector<float> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>((i + k) % 11) / 10.0f;
    r.signals.push_back(std::move(v));
  }
  return r;
}

void write_shard(const std::string& path, const ShardHeader& h, std::uint64_t n) {
  ShardWriter w(path, h);
  for (std::uint64_t i = 0; i < n; ++i) {
    ByteWriter b;
    detail::encode_record(b, make_record(i, h));
    w.append_encoded(b.bytes(), 1);
  }
  w.close();
}

std::vector<std::uint8_t> bytes_of(const std::string& path) { return read_file_bytes(path); }

DatasetJob small_job(const std::filesystem::path& dir, unsigned workers) {
  DatasetJob job;
  job.prior.n_max = 8;
  job.bath.n_configs = 4;
  job.bath.spins_per_config = 40;
  job.design.grids = {make_grid_ns(32, 6'000, 7'000, 4), make_grid_ns(256, 10'000, 10'500, 4)};
  job.n_samples = 70;
  job.shard_size = 25;
  job.seed = Seed{2718};
  job.out_dir = dir;
  job.workers = workers;
  job.config_hash = 0x1234;
  job.effective_config = "seed = 2718\n";
  return job;
}

}  // namespace

TEST(Shard, RoundTrip) {
  nvtest::TempDir tmp("shard");
  const auto h = small_header();
  write_shard(tmp.str("a.sigds"), h, 100);
  ShardReader r(tmp.str("a.sigds"));
  EXPECT_EQ(r.header().record_count, 100u);
  EXPECT_EQ(r.header().config_hash, h.config_hash);
  EXPECT_EQ(r.header().first_sample_index, 500u);
  ASSERT_EQ(r.header().grids.size(), 2u);
  EXPECT_EQ(r.header().grids[1].taus_ns, h.grids[1].taus_ns);
  const auto recs = r.read_all();
  ASSERT_EQ(recs.size(), 100u);
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(recs[i], make_record(i, h)) << i;
}

TEST(Shard, ByteLayout) {
  nvtest::TempDir tmp("layout");
  auto h = small_header();
  write_shard(tmp.str("a.sigds"), h, 3);
  const auto b = bytes_of(tmp.str("a.sigds"));
  ASSERT_GT(b.size(), 40u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 5), "SIGDS");
  EXPECT_EQ(b[5] | (b[6] << 8), 1);
  std::uint64_t count = 0;
  std::memcpy(&count, b.data() + 31, 8);  // little-endian host
  EXPECT_EQ(count, 3u);
  std::uint32_t n_grids = 0;
  std::memcpy(&n_grids, b.data() + 39, 4);
  EXPECT_EQ(n_grids, 2u);
  // header: 43 bytes + per grid (4 + 8 + 8 * points)
  const std::size_t header = 43 + (12 + 8 * 11) + (12 + 8 * 6);
  std::uint32_t len0 = 0;
  std::memcpy(&len0, b.data() + header, 4);
  // record 0 has no spins: index, seed, bath, count, then float signals
  EXPECT_EQ(len0, 8u + 8u + 4u + 4u + 4u * (11u + 6u));
}

TEST(Shard, TruncationNamesRecord) {
  nvtest::TempDir tmp("trunc");
  const auto h = small_header();
  write_shard(tmp.str("a.sigds"), h, 10);
  auto b = bytes_of(tmp.str("a.sigds"));
  b.resize(b.size() - 5);
  {
    std::ofstream out(tmp.str("b.sigds"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }
  try {
    read_shard(tmp.str("b.sigds"));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.record_index(), 9);
    EXPECT_NE(std::string(e.what()).find("record 9"), std::string::npos);
  }
}

TEST(Shard, WrongMagicAndVersion) {
  nvtest::TempDir tmp("magic");
  write_shard(tmp.str("a.sigds"), small_header(), 2);
  auto b = bytes_of(tmp.str("a.sigds"));
  auto write = [&](const std::vector<std::uint8_t>& v) {
    std::ofstream out(tmp.str("c.sigds"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
  };
  auto bad = b;
  bad[0] = 'X';
  write(bad);
  EXPECT_THROW(ShardReader(tmp.str("c.sigds")), FormatError);
  bad = b;
  bad[5] = 9;
  write(bad);
  EXPECT_THROW(ShardReader(tmp.str("c.sigds")), FormatError);
  EXPECT_THROW(ShardReader(tmp.str("missing.sigds")), IoError);
}

TEST(Shard, RejectsOutOfRangeSignal) {
  nvtest::TempDir tmp("range");
  auto h = small_header();
  ShardWriter w(tmp.str("a.sigds"), h);
  auto r = make_record(0, h);
  r.signals[0][3] = 1.5f;
  ByteWriter b;
  detail::encode_record(b, r);
  w.append_encoded(b.bytes(), 1);
  w.close();
  try {
    read_shard(tmp.str("a.sigds"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.record_index(), 0);
  }
}

TEST(Dataset, PassThroughEqualsDirectEvaluation) {
  nvtest::TempDir tmp("pass");
  DatasetJob job = small_job(tmp.path(), 1);
  job.prior.n_min = job.prior.n_max = 1;
  job.prior.az_range = {12e3, 12e3};
  job.prior.aperp_range = {30e3, 30e3};
  job.bath.enabled = false;
  job.design.shot.enabled = false;
  job.n_samples = 1;
  generate_dataset(job);
  const auto recs = read_dataset(tmp.path());
  ASSERT_EQ(recs.size(), 1u);
  const SpinCluster c{{{12e3, 30e3}}};
  for (std::size_t g = 0; g < job.design.grids.size(); ++g) {
    const auto& grid = job.design.grids[g];
    const GridEvaluator ev(grid, job.field, job.decoherence);
    const auto fast = ev.survival(c);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      // stored as float: bitwise equal to the rounded evaluator output
      ASSERT_EQ(recs[0].signals[g][k], static_cast<float>(fast[k]));
      const double scalar = survival_probability(c, {grid.n_pulses, grid.tau_s(k)}, job.field, job.decoherence);
      ASSERT_NEAR(recs[0].signals[g][k], scalar, 1e-7);
    }
  }
}

TEST(Dataset, InvariantsAndShardSplit) {
  nvtest::TempDir tmp("inv");
  const auto job = small_job(tmp.path(), 2);
  const auto m = generate_dataset(job);
  EXPECT_EQ(m.n_samples, 70u);
  ASSERT_EQ(m.shards.size(), 3u);
  EXPECT_EQ(m.shards[2].first_sample_index, 50u);
  EXPECT_EQ(m.shards[2].count, 20u);
  const auto recs = read_dataset(tmp.path());
  ASSERT_EQ(recs.size(), 70u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    EXPECT_EQ(r.sample_index, i);
    EXPECT_GE(r.truth.size(), 1u);
    EXPECT_LE(r.truth.size(), 8u);
    for (const auto& s : r.truth.spins) {
      EXPECT_TRUE(job.prior.az_range.contains(s.a_par));
      EXPECT_TRUE(job.prior.aperp_range.contains(s.a_perp));
    }
    EXPECT_GE(r.bath_index, 0);
    for (const auto& sig : r.signals)
      for (float v : sig) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
  }
  const auto again = load_manifest(tmp.path());
  EXPECT_EQ(again.config_hash, 0x1234u);
  EXPECT_EQ(again.effective_config, "seed = 2718\n");
}

TEST(Dataset, IdenticalBytesForAnyWorkerCount) {
  nvtest::TempDir a("w1"), b("w8");
  generate_dataset(small_job(a.path(), 1));
  generate_dataset(small_job(b.path(), 8));
  for (const char* f : {"shard-00000.sigds", "shard-00001.sigds", "shard-00002.sigds", "manifest.json"}) {
    EXPECT_EQ(bytes_of((a.path() / f).string()), bytes_of((b.path() / f).string())) << f;
  }
}

TEST(Dataset, AppendContinuesIndexRange) {
  nvtest::TempDir a("whole"), b("parts");
  auto whole = small_job(a.path(), 1);
  whole.shard_size = 35;
  generate_dataset(whole);
  auto part = whole;
  part.out_dir = b.path();
  part.n_samples = 35;
  generate_dataset(part);
  part.append = true;
  generate_dataset(part);
  const auto x = read_dataset(a.path());
  const auto y = read_dataset(b.path());
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);

  part.config_hash = 0x9999;
  EXPECT_THROW(generate_dataset(part), ConfigError);
}

TEST(Dataset, DetectsTamperedShard) {
  nvtest::TempDir tmp("tamper");
  generate_dataset(small_job(tmp.path(), 1));
  auto b = bytes_of(tmp.str("shard-00001.sigds"));
  b[b.size() - 2] ^= 0x01;
  std::ofstream(tmp.str("shard-00001.sigds"), std::ios::binary)
      .write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  EXPECT_THROW(read_dataset(tmp.path()), FormatError);
}
