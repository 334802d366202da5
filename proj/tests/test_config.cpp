#include <fstream>

#include <gtest/gtest.h>

#include "nvdesign/config.hpp"
#include "test_support.hpp"

using namespace nvdesign;

namespace {

std::string preset(const std::string& name) { return std::string(NVDESIGN_CONFIG_DIR) + "/" + name; }

std::string error_of(std::string_view text) {
  try {
    RunConfig::from_toml(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Toml, ParsesSubset) {
  const auto doc = toml::parse(R"(# comment
seed = 5   # trailing
name = "a # not a comment"

[t]
x = -1.5e3
flag = false
r = [1, 2.5]
s = ["p", "q"]

[[grid]]
n = 1
[[grid]]
n = 2
)");
  EXPECT_EQ(std::get<std::int64_t>(doc.root.entries.at("seed").v), 5);
  EXPECT_EQ(std::get<std::string>(doc.root.entries.at("name").v), "a # not a comment");
  const auto& t = doc.tables.at("t");
  EXPECT_EQ(std::get<double>(t.entries.at("x").v), -1500.0);
  EXPECT_FALSE(std::get<bool>(t.entries.at("flag").v));
  EXPECT_EQ(std::get<toml::Array>(t.entries.at("r").v).size(), 2u);
  ASSERT_EQ(doc.table_arrays.at("grid").size(), 2u);
}

TEST(Toml, SyntaxErrorsCarryLine) {
  try {
    toml::parse("a = 1\nb = \n");
    FAIL();
  } catch (const toml::ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(toml::parse("a = 1\na = 2\n"), toml::ParseError);
  EXPECT_THROW(toml::parse("[t\n"), toml::ParseError);
  EXPECT_THROW(toml::parse("x = \"open\n"), toml::ParseError);
}

TEST(Config, DefaultsMatchHighFieldPreset) {
  const RunConfig d;
  const auto p = RunConfig::load(preset("high_field.toml"));
  EXPECT_EQ(d.to_toml(), p.to_toml());
  EXPECT_EQ(d.hash(), p.hash());
}

TEST(Config, PresetsLoad) {
  const auto four = RunConfig::load(preset("high_field_4grid.toml"));
  EXPECT_EQ(four.grids.size(), 4u);
  const auto low = RunConfig::load(preset("low_field.toml"));
  EXPECT_DOUBLE_EQ(low.b_z_gauss, 40.4);
  EXPECT_EQ(low.n_p, 8000u);
  const auto grids = low.build_grids();
  ASSERT_EQ(grids.size(), 2u);
  EXPECT_EQ(grids[0].size(), 49'001u);
  EXPECT_EQ(grids[1].taus_ns, grids[0].taus_ns);
}

TEST(Config, RoundTripThroughCanonicalText) {
  RunConfig c;
  c.seed = 77;
  c.b_z_gauss = 123.25;
  c.prior.az_range = {-12'345.5, 6'789.0};
  c.grids.push_back({96, 10.0, 30.0, 4.0, "extra"});
  c.shot.n_m = 100;
  c.dataset_selection = {"a.txt", "b.txt", "c.txt"};
  const auto back = RunConfig::from_toml(c.to_toml());
  EXPECT_EQ(back.to_toml(), c.to_toml());
  EXPECT_EQ(back.prior.az_range.lo, -12'345.5);
  EXPECT_NE(back.hash(), RunConfig{}.hash());
}

TEST(Config, UnknownKeysAndTablesAreNamed) {
  auto e = error_of("seed = 1\n[prior]\nn_min = 1\nnmax = 3\n");
  EXPECT_NE(e.find("prior.nmax"), std::string::npos) << e;
  EXPECT_NE(e.find("line 4"), std::string::npos) << e;
  e = error_of("[priors]\nn_min = 1\n");
  EXPECT_NE(e.find("priors"), std::string::npos) << e;
  e = error_of("[[grid]]\nn_pulses = 32\ntau_lo = 6\n");
  EXPECT_NE(e.find("tau_lo"), std::string::npos) << e;
  e = error_of("verbose = true\n");
  EXPECT_NE(e.find("verbose"), std::string::npos) << e;
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_NE(error_of("[shot]\nn_m = \"many\"\n").find("shot.n_m"), std::string::npos);
  EXPECT_NE(error_of("[prior]\na_par_khz = [1]\n").find("prior.a_par_khz"), std::string::npos);
  EXPECT_FALSE(error_of("[shot]\nn_m = 0\n").empty());
  EXPECT_FALSE(error_of("[field]\nb_z_gauss = 0\n").empty());
  EXPECT_FALSE(error_of("[decoherence]\neta = 2.5\n").empty());
  EXPECT_FALSE(error_of("[[grid]]\nn_pulses = 32\ntau_lo_us = 6\ntau_hi_us = 50\ndtau_ns = 0.5\n").empty());
  EXPECT_FALSE(error_of("[sig]\nn_samples = 1\n").empty());
  EXPECT_FALSE(error_of("[dataset]\nselection = [\"only-one.txt\"]\n").empty());
  EXPECT_FALSE(error_of("[metrics]\nthreshold = 1.5\n").empty());
}

TEST(Config, LoadsFromJsonSidecar) {
  nvtest::TempDir tmp("sidecar");
  RunConfig c;
  c.seed = 4242;
  c.shot.n_m = 150;
  const nlohmann::json j{{"config_hash", hex64(c.hash())}, {"effective_config_toml", c.to_toml()}};
  std::ofstream(tmp.str("s.json")) << j.dump(2);
  EXPECT_EQ(RunConfig::load(tmp.str("s.json")).hash(), c.hash());
  std::ofstream(tmp.str("bad.json")) << "{\"x\": 1}";
  EXPECT_THROW(RunConfig::load(tmp.str("bad.json")), ConfigError);
  EXPECT_THROW(RunConfig::load(tmp.str("missing.toml")), IoError);
}
