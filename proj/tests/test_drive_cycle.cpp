#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "iwmev/drive_cycle.hpp"
#include "iwmev/errors.hpp"
#include "support.hpp"

using namespace iwmev;

namespace {

class CycleFile : public ::testing::Test {
protected:
  void SetUp() override { dir_ = iwmev::testing::scratch_dir("cycle"); }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string write(const std::string& body) {
    const auto path = (dir_ / "c.csv").string();
    std::ofstream(path) << body;
    return path;
  }

  std::filesystem::path dir_;
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_F(CycleFile, ThreeRows) {
  const DriveCycle c = load_cycle(write("0,0\n1,1\n2,2\n"));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.samples[2].v, 2.0);
  EXPECT_EQ(c.duration(), 2.0);
}

TEST_F(CycleFile, HeaderIsSkipped) {
  EXPECT_EQ(load_cycle(write("t,v\n0,0\n1,3\n")).size(), 2u);
}

TEST_F(CycleFile, MphConversion) {
  const DriveCycle c = load_cycle(write("0,60\n"), SpeedUnit::Mph);
  EXPECT_NEAR(c.samples[0].v, 26.82, 0.005);
  EXPECT_DOUBLE_EQ(to_mps(36.0, SpeedUnit::Kph), 10.0);
}

TEST_F(CycleFile, RepeatedTimeIsRejected) {
  EXPECT_EQ(code_of([&] { load_cycle(write("0,0\n1,1\n1,2\n")); }), ErrorCode::NonMonotoneTime);
}

TEST_F(CycleFile, MalformedRowIsRejected) {
  EXPECT_EQ(code_of([&] { load_cycle(write("0,0\n1,abc\n")); }), ErrorCode::ParseError);
}

TEST(Cycle, MissingFile) {
  EXPECT_EQ(code_of([] { load_cycle("/nonexistent/cycle.csv"); }), ErrorCode::ParseError);
}

TEST(Cycle, UnknownUnit) {
  EXPECT_THROW(parse_speed_unit("furlongs"), Error);
  EXPECT_EQ(parse_speed_unit("mph"), SpeedUnit::Mph);
}

TEST(Cycle, BuiltinCyclesLoad) {
  for (const std::string& name : builtin_cycle_names()) {
    const DriveCycle c = resolve_cycle(name);
    EXPECT_GT(c.size(), 500u) << name;
    EXPECT_EQ(c.name, name);
    for (const CycleSample& s : c.samples) EXPECT_GE(s.v, 0.0);
  }
  EXPECT_EQ(resolve_cycle("ftp").name, "ftp75");
}

TEST(Resample, OntoOriginalTimestampsIsIdentity) {
  DriveCycle c{"x", {{0.0, 0.0}, {1.0, 2.5}, {2.0, 1.0}, {3.0, 4.0}}};
  const DriveCycle r = resample(c, 1.0);
  ASSERT_EQ(r.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.samples[i].t, c.samples[i].t);
    EXPECT_DOUBLE_EQ(r.samples[i].v, c.samples[i].v);
  }
}

TEST(Resample, MidpointIsMean) {
  DriveCycle c{"x", {{0.0, 2.0}, {1.0, 5.0}}};
  const DriveCycle r = resample(c, 0.5);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_DOUBLE_EQ(r.samples[1].v, 3.5);
}

TEST(Resample, SampleCountFormula) {
  DriveCycle c{"x", {}};
  for (int t = 0; t <= 1370; ++t) c.samples.push_back({double(t), 0.0});
  EXPECT_EQ(resample(c, 0.1).size(), 13701u);
}

TEST(Resample, KeepsFinalSample) {
  DriveCycle c{"x", {{0.0, 0.0}, {1.05, 3.0}}};
  const DriveCycle r = resample(c, 0.1);
  EXPECT_DOUBLE_EQ(r.samples.back().t, 1.05);
  EXPECT_DOUBLE_EQ(r.samples.back().v, 3.0);
}

TEST(TargetAcceleration, CentralDifferences) {
  DriveCycle c{"x", {{0.0, 0.0}, {1.0, 1.0}, {2.0, 4.0}}};
  const std::vector<double> a = target_acceleration(c);
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[1], 2.0);
  EXPECT_DOUBLE_EQ(a[2], 3.0);
}

TEST(Driver, ZeroAtRestOnTarget) {
  Driver d(DriverParams{}, VehicleParams{});
  EXPECT_EQ(d.demand(VehicleState{}, 0.0, 0.0, 0.1), 0.0);
}

TEST(Driver, CruiseEqualsFeedforward) {
  const VehicleParams p;
  Driver d(DriverParams{}, p);
  VehicleState x;
  x.v = 20.0;
  const ResistiveForces f = resistive_forces(20.0, 0.0, p);
  EXPECT_NEAR(d.demand(x, 20.0, 0.0, 0.1), (f.aero + f.rolling) * 20.0, 1e-9);
}

TEST(Driver, LargeDeficitSaturates) {
  Driver d(DriverParams{}, VehicleParams{});
  EXPECT_EQ(d.demand(VehicleState{}, 25.0, 3.0, 0.1), 19000.0);
  // Anti-windup: the saturated error is not integrated.
  EXPECT_EQ(d.integral(), 0.0);
}

TEST(Driver, OutputStaysInGridSpan) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> v(0.0, 40.0), a(-5.0, 5.0), dt(0.01, 1.0);
  Driver d(DriverParams{}, VehicleParams{});
  for (int i = 0; i < 20000; ++i) {
    VehicleState x;
    x.v = v(rng);
    const double p = d.demand(x, v(rng), a(rng), dt(rng));
    ASSERT_GE(p, -12000.0);
    ASSERT_LE(p, 19000.0);
  }
}

TEST(Driver, IntegralFrozenAtRest) {
  Driver d(DriverParams{}, VehicleParams{});
  for (int i = 0; i < 10; ++i) d.demand(VehicleState{}, 0.0, 0.0, 0.1);
  EXPECT_EQ(d.integral(), 0.0);
}
