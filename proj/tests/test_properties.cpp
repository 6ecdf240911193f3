#include <gtest/gtest.h>

#include <random>

#include "psocsim/bench.hpp"
#include "psocsim/runner.hpp"

using namespace psocsim;

namespace {

constexpr int kCases = 120;

struct Case {
  DriverConfig d;
  std::uint64_t size;
};

Case random_case(std::mt19937_64& rng, std::uint64_t max_size) {
  std::uniform_int_distribution<std::uint64_t> size(1, max_size);
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_int_distribution<std::uint64_t> block(1, 64);
  Case c;
  c.d.kind = kAllDrivers[pick(rng)];
  c.d.scheme = pick(rng) == 0 ? BufferScheme::Double : BufferScheme::Single;
  c.d.mode = pick(rng) == 0 ? PartitionMode::unique() : PartitionMode::blocks(block(rng) * 512);
  c.size = size(rng);
  return c;
}

std::string describe(const Case& c) {
  return std::string(to_string(c.d.kind)) + "/" + to_string(c.d.scheme) + "/" + c.d.mode.name() + "/" +
         std::to_string(c.d.mode.block_size) + " size " + std::to_string(c.size);
}

}  // namespace

TEST(Property, DdrGrantsNeverOverlap) {
  std::mt19937_64 rng(1);
  SimConfig cfg;
  for (int i = 0; i < kCases; ++i) {
    const auto c = random_case(rng, 100'000);
    const auto run = run_transfer(cfg, c.d, DeviceKind::Loopback, loopback_job(c.size));
    ASSERT_EQ(run.outcome, RunOutcome::Completed) << describe(c);
    ASSERT_FALSE(run.grants.empty());
    for (std::size_t g = 1; g < run.grants.size(); ++g) {
      ASSERT_LE(run.grants[g].start, run.grants[g].end);
      ASSERT_GE(run.grants[g].start, run.grants[g - 1].end) << describe(c) << " grant " << g;
    }
  }
}

TEST(Property, FifoConservesBytesAndOrder) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < kCases; ++i) {
    Simulator sim;
    std::uniform_int_distribution<std::uint64_t> cap(1, 5000), len(0, 700);
    StreamFifo f(sim, "f", cap(rng), FifoDirection::ToPL);
    std::uint8_t next = 0, expect = 0;
    Bytes scratch, out;
    for (int step = 0; step < 200; ++step) {
      if (rng() % 2) {
        scratch.resize(len(rng));
        for (auto& b : scratch) b = next++;
        const auto n = f.push(scratch);
        next = static_cast<std::uint8_t>(next - (scratch.size() - n));
      } else {
        out.clear();
        f.pop(len(rng), out);
        for (auto b : out) ASSERT_EQ(b, expect++);
      }
      ASSERT_LE(f.occupancy(), f.capacity());
      ASSERT_EQ(f.total_pushed(), f.total_popped() + f.occupancy());
    }
  }
}

TEST(Property, LoopbackConservesBytes) {
  std::mt19937_64 rng(3);
  SimConfig cfg;
  for (int i = 0; i < kCases; ++i) {
    const auto c = random_case(rng, 50'000);
    const auto run = run_transfer(cfg, c.d, DeviceKind::Loopback, loopback_job(c.size));
    ASSERT_EQ(run.outcome, RunOutcome::Completed) << describe(c);
    ASSERT_EQ(run.device_bytes, c.size) << describe(c);
    ASSERT_EQ(run.result.rx_payload.size(), c.size);
  }
}

TEST(Property, ChainDeliversSameBytesAsSingleDescriptor) {
  std::mt19937_64 rng(4);
  SimConfig cfg;
  for (int i = 0; i < kCases; ++i) {
    const std::uint64_t n = std::uniform_int_distribution<std::uint64_t>(1, 40'000)(rng);
    const Bytes data = pattern_payload(n, i);
    auto deliver = [&](bool chained) {
      Platform p(cfg);
      SinkDevice sink(p.sim);
      p.attach(sink);
      auto region = p.memory.allocate(n);
      std::copy(data.begin(), data.end(), region->bytes().begin());
      std::vector<DmaDescriptor> ds;
      std::uint64_t off = 0;
      std::mt19937_64 cut(i);
      while (off < n) {
        const std::uint64_t len = chained ? std::min<std::uint64_t>(n - off, 1 + cut() % 9000) : n;
        ds.push_back(DmaDescriptor::create(region, off, len, DmaDirection::MM2S, cfg.max_descriptor_bytes));
        off += len;
      }
      p.mm2s.submit_chain(DescriptorChain::create(ds, CompletionPolicy::OnChainEnd));
      EXPECT_EQ(p.sim.run_until_quiescent(), RunOutcome::Completed);
      return sink.received();
    };
    ASSERT_EQ(deliver(true), data) << "size " << n;
    ASSERT_EQ(deliver(false), data);
  }
}

TEST(Property, DriversDeliverIdenticalPayloads) {
  std::mt19937_64 rng(5);
  SimConfig cfg;
  for (int i = 0; i < kCases; ++i) {
    const auto c = random_case(rng, 30'000);
    const auto run = run_transfer(cfg, c.d, DeviceKind::Sink, tx_only_job(c.size));
    ASSERT_EQ(run.sink_payload, pattern_payload(c.size)) << describe(c);
  }
}

TEST(Property, SweepTotalsNonDecreasingInSize) {
  std::mt19937_64 rng(6);
  SimConfig cfg;
  for (auto k : kAllDrivers) {
    for (auto mode : {PartitionMode::unique(), PartitionMode::blocks(65'536)}) {
      std::vector<std::uint64_t> sizes;
      std::uniform_real_distribution<double> lg(std::log(8.0), std::log(400'000.0));
      for (int i = 0; i < kCases; ++i) sizes.push_back(static_cast<std::uint64_t>(std::exp(lg(rng))));
      std::sort(sizes.begin(), sizes.end());
      sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
      Nanos prev = 0;
      for (auto s : sizes) {
        const auto run = run_transfer(cfg, DriverConfig{k, BufferScheme::Single, mode}, DeviceKind::Loopback, loopback_job(s));
        ASSERT_EQ(run.outcome, RunOutcome::Completed);
        ASSERT_GE(run.result.total_ns(), prev) << to_string(k) << " " << mode.name() << " " << s;
        prev = run.result.total_ns();
      }
    }
  }
}

TEST(Property, RerunsAreIdentical) {
  std::mt19937_64 rng(7);
  SimConfig cfg;
  for (int i = 0; i < kCases; ++i) {
    const auto c = random_case(rng, 30'000);
    const auto a = run_transfer(cfg, c.d, DeviceKind::Loopback, loopback_job(c.size), true);
    const auto b = run_transfer(cfg, c.d, DeviceKind::Loopback, loopback_job(c.size), true);
    ASSERT_EQ(a.trace_hash, b.trace_hash) << describe(c);
    ASSERT_EQ(a.events, b.events);
    ASSERT_EQ(a.result.total_ns(), b.result.total_ns());
    BenchRecord ra = make_record(c.d, c.size, a), rb = make_record(c.d, c.size, b);
    ASSERT_EQ(to_csv_row(ra), to_csv_row(rb));
  }
}
