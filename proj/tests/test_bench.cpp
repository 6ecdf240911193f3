#include <gtest/gtest.h>

#include <random>

#include "psocsim/calibrate.hpp"
#include "psocsim/oracle.hpp"

using namespace psocsim;

TEST(Sweep, DefaultSizes) {
  SweepSpec spec;
  auto sizes = sweep_sizes(spec);
  // 8 and the next log step both round to 8
  ASSERT_EQ(sizes.size(), 31u);
  EXPECT_EQ(sizes.front(), 8u);
  EXPECT_EQ(sizes.back(), 6'291'456u);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    EXPECT_EQ(sizes[i] % 8, 0u);
    if (i) EXPECT_GT(sizes[i], sizes[i - 1]);
  }
}

TEST(Sweep, RoundingDeduplicates) {
  SweepSpec spec;
  spec.min_bytes = 8;
  spec.max_bytes = 64;
  spec.points = 40;
  auto sizes = sweep_sizes(spec);
  EXPECT_EQ(sizes, (std::vector<std::uint64_t>{8, 16, 24, 32, 40, 48, 56, 64}));
}

TEST(Sweep, SpecValidation) {
  SweepSpec spec;
  spec.points = 1;
  EXPECT_THROW(sweep_sizes(spec), InvalidValue);
  spec = SweepSpec{};
  spec.min_bytes = 100;
  spec.max_bytes = 10;
  EXPECT_THROW(sweep_sizes(spec), InvalidValue);
  spec = SweepSpec{};
  spec.drivers.clear();
  EXPECT_THROW(sweep_sizes(spec), InvalidValue);
}

TEST(Sweep, TwoPointsOneDriver) {
  SweepSpec spec;
  spec.points = 2;
  spec.max_bytes = 4096;
  spec.drivers = {DriverKind::UserPoll};
  const auto recs = run_sweep(spec, SimConfig{});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].size_bytes, 8u);
  EXPECT_EQ(recs[1].size_bytes, 4096u);
  const auto csv = format_sweep_csv(recs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kBenchHeader);
  EXPECT_EQ(parse_sweep_csv(csv).size(), 2u);
}

TEST(Sweep, RowsInDriverSizeOrderRegardlessOfThreads) {
  SweepSpec spec;
  spec.points = 6;
  spec.max_bytes = 200'000;
  const auto one = run_sweep(spec, SimConfig{}, 1);
  const auto many = run_sweep(spec, SimConfig{}, 7);
  EXPECT_EQ(one, many);
  EXPECT_EQ(one.front().driver, "poll");
  EXPECT_EQ(one.back().driver, "kernel");
}

TEST(Csv, RowRoundTrip) {
  BenchRecord r;
  r.driver = "kernel";
  r.scheme = "double";
  r.mode = "blocks";
  r.size_bytes = 123'456;
  r.tx_ns = 987'654;
  r.rx_ns = 1'000'001;
  r.total_ns = 2'000'000;
  r.tx_ns_per_byte = 8.0001;
  r.rx_ns_per_byte = 8.1;
  r.descriptors = 4;
  r.interrupts = 2;
  r.poll_ticks = 0;
  r.cpu_busy_ns = 77;
  r.outcome = "ok";
  const auto row = to_csv_row(r);
  const auto back = parse_csv_row(row);
  EXPECT_EQ(to_csv_row(back), row);
  EXPECT_EQ(back.size_bytes, r.size_bytes);
  EXPECT_EQ(back.total_ns, r.total_ns);
  EXPECT_EQ(back.tx_ns_per_byte, 8.0);
}

TEST(Csv, MalformedRowsRejected) {
  EXPECT_THROW(parse_csv_row("poll,single,unique,8"), ParseError);
  EXPECT_THROW(parse_csv_row("poll,single,unique,8x,1,1,1,1,1,1,1,1,1,ok"), ParseError);
}

TEST(Crossover, ScanFromTheTop) {
  auto rec = [](const char* d, std::uint64_t s, Nanos t) {
    BenchRecord r;
    r.driver = d;
    r.size_bytes = s;
    r.total_ns = t;
    return r;
  };
  // kernel wins at 100 and 1000 but loses at 10 and (spuriously) 50
  std::vector<BenchRecord> recs{rec("scheduled", 10, 5),   rec("scheduled", 50, 10), rec("scheduled", 100, 20),
                                rec("scheduled", 1000, 90), rec("kernel", 10, 9),    rec("kernel", 50, 11),
                                rec("kernel", 100, 20),     rec("kernel", 1000, 80)};
  EXPECT_EQ(find_crossover(recs), std::optional<std::uint64_t>(100));
  recs.back().total_ns = 91;
  EXPECT_EQ(find_crossover(recs), std::nullopt);
}

TEST(Crossover, ExistsOnCoarseDefaultSweep) {
  SweepSpec spec;
  spec.points = 8;
  spec.drivers = {DriverKind::UserScheduled, DriverKind::KernelInterrupt};
  const auto recs = run_sweep(spec, SimConfig{});
  const auto s = find_crossover(recs);
  ASSERT_TRUE(s.has_value());
  EXPECT_GT(*s, 8u);
  EXPECT_LE(*s, 6'291'456u);
}

TEST(Shape, KernelPerByteFallsWithSize) {
  SweepSpec spec;
  spec.points = 10;
  spec.max_bytes = 1'048'576;
  spec.drivers = {DriverKind::KernelInterrupt};
  const auto recs = run_sweep(spec, SimConfig{});
  for (std::size_t i = 1; i < recs.size(); ++i) {
    EXPECT_LT(static_cast<double>(recs[i].total_ns) / recs[i].size_bytes,
              static_cast<double>(recs[i - 1].total_ns) / recs[i - 1].size_bytes);
  }
}

TEST(Shape, KernelLosesAtEightBytes) {
  SimConfig cfg;
  const auto poll = run_transfer(cfg, DriverConfig{DriverKind::UserPoll}, DeviceKind::Loopback, loopback_job(8));
  const auto kern = run_transfer(cfg, DriverConfig{DriverKind::KernelInterrupt}, DeviceKind::Loopback, loopback_job(8));
  EXPECT_GT(kern.result.total_ns(), poll.result.total_ns());
}

TEST(Shape, FixedOverheadOrdering) {
  SimConfig cfg;
  std::vector<MeasuredPoint> pts;
  for (auto k : kAllDrivers) {
    for (std::uint64_t n : {8u, 64u, 512u, 4096u}) {
      const auto run = run_transfer(cfg, DriverConfig{k}, DeviceKind::Sink, tx_only_job(n));
      pts.push_back({to_string(k), static_cast<double>(n), static_cast<double>(run.result.tx.duration())});
    }
  }
  const auto fit = calibrate(pts);
  EXPECT_LE(fit.find("poll")->intercept_ns, fit.find("scheduled")->intercept_ns);
  EXPECT_LT(fit.find("scheduled")->intercept_ns, fit.find("kernel")->intercept_ns);
}

namespace {

// Linearized closed-form lines for the default costs:
//   poll      = 800 + (0.5 + 1.25) L
//   scheduled = poll + 10000
//   kernel    = 15000 + 100 + 2000 + (0.5 + 0.125 + 1.25) L
double line(const std::string& d, double L) {
  if (d == "poll") return 800 + 1.75 * L;
  if (d == "scheduled") return 10'800 + 1.75 * L;
  return 17'100 + 1.875 * L;
}

}  // namespace

TEST(Calibrate, TwoExactPointsRecoverModel) {
  std::vector<MeasuredPoint> pts;
  for (const char* d : {"poll", "scheduled", "kernel"}) {
    for (double L : {1'000.0, 1'000'000.0}) pts.push_back({d, L, line(d, L)});
  }
  const auto fit = calibrate(pts);
  for (const char* d : {"poll", "scheduled", "kernel"}) {
    EXPECT_NEAR(fit.find(d)->slope_ns_per_byte, line(d, 1) - line(d, 0), 1e-9);
    EXPECT_NEAR(fit.find(d)->intercept_ns, line(d, 0), 1e-6);
    EXPECT_NEAR(fit.find(d)->residual, 0.0, 1e-6);
  }
  std::map<std::string, std::string> s;
  for (const auto& x : suggest_overrides(fit, SimConfig{})) s[x.key] = x.value;
  EXPECT_EQ(s["stream_clock_mhz"], "100");
  EXPECT_EQ(s["sched_quantum_ns"], "10000");
  EXPECT_EQ(s["memcpy_bandwidth_bpns"], "8");
  // 17100 - 800 + 700 - 2000
  EXPECT_EQ(s["kernel_request_overhead_ns"], "15000");
}

TEST(Calibrate, MeasuredPerByteSlopesOrdered) {
  // TX per-byte figures of the three drivers, as us/B at a ~100 KB payload
  const std::string csv =
      "driver,size_bytes,time_ns\n"
      "poll,1000,5.4\npoll,100000,540\n"
      "scheduled,1000,7.2\nscheduled,100000,720\n"
      "kernel,1000,11\nkernel,100000,1100\n";
  const auto fit = calibrate(parse_measurements(csv));
  EXPECT_LT(fit.find("poll")->slope_ns_per_byte, fit.find("scheduled")->slope_ns_per_byte);
  EXPECT_LT(fit.find("scheduled")->slope_ns_per_byte, fit.find("kernel")->slope_ns_per_byte);
}

TEST(Calibrate, NoisyPointsStayClose) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<MeasuredPoint> pts;
  for (const char* d : {"poll", "scheduled", "kernel"}) {
    for (double L = 1'000; L <= 6e6; L *= 1.7) pts.push_back({d, L, line(d, L) * (1 + jitter(rng))});
  }
  const auto fit = calibrate(pts);
  for (const char* d : {"poll", "scheduled", "kernel"}) {
    const double want = line(d, 1) - line(d, 0);
    EXPECT_NEAR(fit.find(d)->slope_ns_per_byte, want, 0.10 * want) << d;
    EXPECT_GT(fit.find(d)->residual, 0.0);
  }
}

TEST(Calibrate, Errors) {
  EXPECT_THROW(parse_measurements("who,what\n1,2\n"), ParseError);
  EXPECT_THROW(parse_measurements("driver,size,time_ns\npoll,abc,1\n"), ParseError);
  EXPECT_THROW(calibrate(parse_measurements("driver,size,time_ns\npoll,8,1\npoll,8,2\n")), InsufficientPoints);
  EXPECT_THROW(calibrate({}), InsufficientPoints);
}

TEST(CnnCsv, PerLayerAndTotalRows) {
  FrameReport r;
  r.layers = {LayerTiming{100, 50, 1000, 2000, 0}, LayerTiming{200, 25, 1000, 1000, 0}};
  r.tx_bytes = 300;
  r.rx_bytes = 75;
  r.tx_ns = 2000;
  r.rx_ns = 3000;
  r.frame_ns = 6'310'000;
  const auto csv = format_cnn_csv({{DriverKind::UserPoll, r}});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCnnHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "poll,layer0,100,50,1000,2000,,0.01,0.04,ok");
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "poll,total,300,75,2000,3000,6.31,0.006667,0.04,ok");
}
