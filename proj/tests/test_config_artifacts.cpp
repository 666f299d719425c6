#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "iwmev/artifacts.hpp"
#include "iwmev/config.hpp"
#include "iwmev/errors.hpp"
#include "support.hpp"

using namespace iwmev;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::InvalidArgument;
}

Tpm random_tpm(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> c(0, 9);
  std::vector<double> counts(n * n);
  for (double& x : counts) x = c(rng);
  return tpm_from_counts(n, counts);
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  EXPECT_EQ(config_to_json(parse_config("{}")), config_to_json(default_config()));
}

TEST(Config, OverridesApply) {
  const Config c = parse_config(R"({"tire": {"mu_max": 0.5}, "sdp": {"gamma": 0.9}, "battery": {"capacity_ah": 40}})");
  EXPECT_EQ(c.plant.tire.mu_max, 0.5);
  EXPECT_EQ(c.sdp.gamma, 0.9);
  EXPECT_EQ(c.plant.battery.capacity, 40.0 * 3600.0);
}

TEST(Config, JsonRoundTrip) {
  Config c = default_config();
  c.plant.tire.mu_max = 0.55;
  c.sim.dt = 0.05;
  c.skid.extend_to_traction = false;
  const std::string once = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(once)), once);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_EQ(code_of([] { parse_config(R"({"vehicel": {}})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"vehicle": {"mas": 1200}})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"vehicle": {"mass": "heavy"}})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config("not json"); }), ErrorCode::ParseError);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config(R"({"sdp": {"gamma": 1.0}})"), Error);
  EXPECT_THROW(parse_config(R"({"vehicle": {"mass": -5}})"), Error);
}

TEST(Config, MissingFile) {
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::MissingArtifact);
}

TEST(Config, LoadsFromDisk) {
  const fs::path dir = iwmev::testing::scratch_dir("cfg");
  write_text((dir / "c.json").string(), R"({"sim": {"initial_soc": 0.5}})");
  EXPECT_EQ(load_config((dir / "c.json").string()).sim.initial_soc, 0.5);
  fs::remove_all(dir);
}

TEST(Checksum, KnownFnvVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(checksum_hex("a"), "af63dc4c8601ec8c");
}

TEST(TpmArtifact, RoundTripIsExact) {
  std::mt19937_64 rng(3);
  const StateGrid g = default_grid();
  const Tpm t = random_tpm(rng, g.p.size());
  const fs::path dir = iwmev::testing::scratch_dir("tpm");
  write_tpm(dir.string(), t, g.p, 1.0, {"ftp75", "hwfet"});
  const TpmArtifact a = read_tpm(dir.string(), g.p, 1.0);
  EXPECT_EQ(a.tpm.n, t.n);
  EXPECT_EQ(a.tpm.p, t.p);
  EXPECT_EQ(a.sources, (std::vector<std::string>{"ftp75", "hwfet"}));
  EXPECT_EQ(a.checksum, checksum_hex(read_text((dir / "tpm.csv").string())));
  fs::remove_all(dir);
}

TEST(TpmArtifact, Errors) {
  std::mt19937_64 rng(4);
  const StateGrid g = default_grid();
  const fs::path dir = iwmev::testing::scratch_dir("tpm_err");
  EXPECT_EQ(code_of([&] { read_tpm(dir.string(), g.p, 1.0); }), ErrorCode::MissingArtifact);
  write_tpm(dir.string(), random_tpm(rng, g.p.size()), g.p, 1.0, {"udds"});
  EXPECT_EQ(code_of([&] { read_tpm(dir.string(), g.p, 0.5); }), ErrorCode::GridMismatch);
  std::vector<double> other = g.p;
  other.back() += 1.0;
  EXPECT_EQ(code_of([&] { read_tpm(dir.string(), other, 1.0); }), ErrorCode::GridMismatch);
  write_text((dir / "tpm.csv").string(), read_text((dir / "tpm.csv").string()) + "\n");
  EXPECT_EQ(code_of([&] { read_tpm(dir.string(), g.p, 1.0); }), ErrorCode::ChecksumMismatch);
  fs::remove_all(dir);
}

TEST(PolicyArtifact, RoundTripAndErrors) {
  StateGrid g;
  g.p = {-1000.0, 0.0, 2000.0};
  g.v = {0.0, 10.0};
  g.lam = {-0.3, 0.0, 0.3};
  g.u = {-1000.0, 0.0, 1000.0, 2000.0};
  TrainResult tr;
  tr.policy.grid = g;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, g.u.size() - 1);
  for (std::size_t s = 0; s < g.num_states(); ++s) tr.policy.front_power.push_back(g.u[pick(rng)] / 3.0);
  tr.changes = {5, 1, 0};
  tr.eval_sweeps = {100, 90, 80};

  const fs::path dir = iwmev::testing::scratch_dir("policy");
  EXPECT_EQ(code_of([&] { read_policy(dir.string(), g); }), ErrorCode::MissingArtifact);
  write_policy(dir.string(), tr, SdpSettings{}, SkidConfig{}, "0123456789abcdef");
  const PolicyArtifact a = read_policy(dir.string(), g);
  EXPECT_EQ(a.policy.front_power, tr.policy.front_power);
  EXPECT_EQ(a.tpm_checksum, "0123456789abcdef");

  StateGrid other = g;
  other.v.back() = 12.0;
  EXPECT_EQ(code_of([&] { read_policy(dir.string(), other); }), ErrorCode::GridMismatch);
  std::string csv = read_text((dir / "policy.csv").string());
  csv[csv.size() - 2] = csv[csv.size() - 2] == '1' ? '2' : '1';
  write_text((dir / "policy.csv").string(), csv);
  EXPECT_EQ(code_of([&] { read_policy(dir.string(), g); }), ErrorCode::ChecksumMismatch);
  fs::remove_all(dir);
}

TEST(RuleArtifact, RoundTrip) {
  const fs::path dir = iwmev::testing::scratch_dir("rule");
  const std::string path = (dir / "rule.json").string();
  EXPECT_EQ(code_of([&] { read_rule(path); }), ErrorCode::MissingArtifact);
  write_rule(path, GrdpFit{{0.2270000000000001, -550.125}, 0.45}, "ftp75");
  const LinearRule r = read_rule(path);
  EXPECT_EQ(r.a, 0.2270000000000001);
  EXPECT_EQ(r.b, -550.125);
  fs::remove_all(dir);
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  const Config c = load_config(std::string(IWMEV_DATA_DIR) + "/config/default.json");
  EXPECT_EQ(config_to_json(c), config_to_json(default_config()));
}
