#include <gtest/gtest.h>

#include <numeric>

#include "psocsim/devices.hpp"
#include "psocsim/drivers.hpp"
#include "psocsim/platform.hpp"
#include "psocsim/runner.hpp"

using namespace psocsim;

namespace {

CnnLayerSpec layer(std::uint64_t h, std::uint64_t w, std::uint64_t c_in, std::uint64_t k,
                   std::uint64_t c_out, std::uint64_t stride = 1) {
  return CnnLayerSpec{h, w, c_in, k, c_out, stride};
}

// Raw-channel harness: RX armed for the whole output before TX starts, so
// the accelerator never sees a full output FIFO.
struct LayerRun {
  SimTime compute_start{};
  SimTime done{};
  std::uint64_t rows_at_first_output = 0;
  Nanos output_duration = 0;
  Bytes output;
};

LayerRun run_layer_prearmed(const SimConfig& cfg, const CnnLayerSpec& spec) {
  Platform p(cfg);
  CnnAccelerator acc(p.sim, cnn_timing(cfg));
  p.attach(acc);
  acc.load_layer(spec, 3);
  auto in = p.memory.allocate(spec.tx_bytes());
  auto out = p.memory.allocate(spec.output_bytes());
  p.s2mm.submit_chain(partition(out, spec.output_bytes(), PartitionMode::unique(), DmaDirection::S2MM,
                                cfg.max_descriptor_bytes));
  p.mm2s.submit_chain(partition(in, spec.tx_bytes(), PartitionMode::unique(), DmaDirection::MM2S,
                                cfg.max_descriptor_bytes));
  EXPECT_EQ(p.sim.run_until_quiescent(), RunOutcome::Completed);
  LayerRun r;
  r.compute_start = acc.compute_start().value_or(SimTime{});
  r.done = acc.layer_done_at().value_or(SimTime{});
  r.rows_at_first_output = acc.rows_at_first_output();
  r.output_duration = acc.output_duration();
  r.output.assign(out->bytes().begin(), out->bytes().end());
  EXPECT_EQ(acc.emitted(), spec.output_bytes());
  return r;
}

}  // namespace

TEST(Layer, DerivedSizes) {
  auto l = layer(64, 64, 1, 5, 16);
  EXPECT_EQ(l.output_height(), 60u);
  EXPECT_EQ(l.output_width(), 60u);
  EXPECT_EQ(l.input_bytes(), 4096u);
  EXPECT_EQ(l.kernel_bytes(), 400u);
  EXPECT_EQ(l.output_bytes(), 57'600u);
  EXPECT_EQ(l.macs_total(), 60u * 60 * 16 * 25);
  auto s = layer(60, 60, 16, 3, 32, 2);
  EXPECT_EQ(s.output_height(), 29u);
}

TEST(Layer, InvalidDimensions) {
  EXPECT_THROW(layer(4, 4, 1, 5, 1).validate(), InvalidNetwork);
  EXPECT_THROW(layer(4, 4, 0, 1, 1).validate(), InvalidNetwork);
  EXPECT_THROW(layer(4, 4, 1, 1, 1, 0).validate(), InvalidNetwork);
}

TEST(Network, ParsesAndChains) {
  auto net = parse_network(
      "# test\n"
      "name tiny\n"
      "layer h=8 w=8 c_in=1 k=3 c_out=4\n"
      "layer h=6 w=6 c_in=4 k=3 c_out=2 stride=3\n");
  EXPECT_EQ(net.name, "tiny");
  ASSERT_EQ(net.layers.size(), 2u);
  EXPECT_EQ(net.layers[1].stride, 3u);
  EXPECT_EQ(net.layers[1].output_height(), 2u);
}

TEST(Network, BrokenChainRejected) {
  EXPECT_THROW(parse_network("layer h=8 w=8 c_in=1 k=3 c_out=4\nlayer h=8 w=8 c_in=4 k=3 c_out=2\n"),
               InvalidNetwork);
}

TEST(Network, BadRecordsRejected) {
  EXPECT_THROW(parse_network(""), InvalidNetwork);
  EXPECT_THROW(parse_network("conv h=8\n"), InvalidNetwork);
  EXPECT_THROW(parse_network("layer h=8 w=8 c_in=1 k=3\n"), InvalidNetwork);
  EXPECT_THROW(parse_network("layer h=8 w=8 c_in=1 k=3 c_out=2 pad=1\n"), InvalidNetwork);
  EXPECT_THROW(parse_network("layer h=8.5 w=8 c_in=1 k=3 c_out=2\n"), InvalidNetwork);
}

TEST(Network, ShippedNetworkLoads) {
  auto net = load_network("networks/roshambo_like.net");
  EXPECT_EQ(net.layers.size(), 5u);
  std::uint64_t tx = 0;
  for (const auto& l : net.layers) tx += l.tx_bytes();
  // frame TX in the low hundreds of KB
  EXPECT_GT(tx, 100'000u);
  EXPECT_LT(tx, 1'000'000u);
}

TEST(Accelerator, ComputeBoundDuration) {
  // 20x20x4 outputs, each 5x5x32 MACs: 1.28M MACs at 128 x 0.1 MAC/ns
  auto l = layer(24, 24, 32, 5, 4);
  ASSERT_EQ(l.macs_total(), 1'280'000u);
  Simulator sim;
  CnnAccelerator acc(sim, CnnTiming{Ratio(4, 5), Ratio(128, 10), 2, 1024});
  acc.load_layer(l);
  EXPECT_EQ(acc.output_duration(), 100'000u);
}

TEST(Accelerator, StreamBoundDuration) {
  auto l = layer(8, 8, 1, 1, 64);  // 4096 output bytes, 4096 MACs
  Simulator sim;
  CnnAccelerator acc(sim, CnnTiming{Ratio(4, 5), Ratio(128, 10), 2, 1024});
  acc.load_layer(l);
  EXPECT_EQ(acc.output_duration(), 5120u);
}

TEST(Accelerator, DegenerateLayerClampsRowLatency) {
  SimConfig cfg;
  auto r = run_layer_prearmed(cfg, layer(1, 1, 1, 1, 1));
  EXPECT_EQ(r.output.size(), 1u);
  EXPECT_EQ(r.rows_at_first_output, 1u);
}

TEST(Accelerator, NoOutputBeforeRowLatency) {
  SimConfig cfg;
  auto r = run_layer_prearmed(cfg, layer(16, 16, 2, 3, 8));
  EXPECT_GE(r.rows_at_first_output, 2u);
}

TEST(Accelerator, OutputContentAndSize) {
  SimConfig cfg;
  auto l = layer(16, 16, 2, 3, 8);
  auto r = run_layer_prearmed(cfg, l);
  ASSERT_EQ(r.output.size(), l.output_bytes());
  for (std::size_t i = 0; i < r.output.size(); ++i) ASSERT_EQ(r.output[i], CnnAccelerator::output_byte(3, i));
}

TEST(Accelerator, ComputeSpanEqualsBoundWithoutContention) {
  SimConfig cfg;
  for (auto l : {layer(24, 24, 32, 5, 4), layer(16, 16, 4, 1, 64), layer(29, 29, 32, 3, 64, 2)}) {
    auto r = run_layer_prearmed(cfg, l);
    const Nanos bound = std::max(cfg.stream_rate().ceil_over(l.output_bytes()), cfg.mac_rate().ceil_over(l.macs_total()));
    EXPECT_EQ(r.output_duration, bound);
    EXPECT_EQ(r.done - r.compute_start, bound);
  }
}

TEST(Accelerator, BytesWithoutLayerAreProtocolViolation) {
  SimConfig cfg;
  Platform p(cfg);
  CnnAccelerator acc(p.sim, cnn_timing(cfg));
  p.attach(acc);
  auto in = p.memory.allocate(64);
  p.mm2s.submit_chain(partition(in, 64, PartitionMode::unique(), DmaDirection::MM2S, cfg.max_descriptor_bytes));
  EXPECT_THROW(p.sim.run_until_quiescent(), ProtocolViolation);
}

TEST(Accelerator, BytesBeyondLayerInputAreProtocolViolation) {
  SimConfig cfg;
  Platform p(cfg);
  CnnAccelerator acc(p.sim, cnn_timing(cfg));
  p.attach(acc);
  auto l = layer(4, 4, 1, 1, 1);
  acc.load_layer(l);
  auto out = p.memory.allocate(l.output_bytes());
  p.s2mm.submit_chain(partition(out, l.output_bytes(), PartitionMode::unique(), DmaDirection::S2MM, cfg.max_descriptor_bytes));
  auto in = p.memory.allocate(l.tx_bytes() + 8);
  p.mm2s.submit_chain(partition(in, l.tx_bytes() + 8, PartitionMode::unique(), DmaDirection::MM2S, cfg.max_descriptor_bytes));
  EXPECT_THROW(p.sim.run_until_quiescent(), ProtocolViolation);
}

TEST(Accelerator, ReloadWhileBusyIsProtocolViolation) {
  Simulator sim;
  CnnAccelerator acc(sim, CnnTiming{});
  acc.load_layer(layer(4, 4, 1, 1, 1));
  EXPECT_THROW(acc.load_layer(layer(4, 4, 1, 1, 1)), ProtocolViolation);
}

TEST(Loopback, EightBytesEchoed) {
  SimConfig cfg;
  auto run = run_transfer(cfg, DriverConfig{}, DeviceKind::Loopback, loopback_job(8));
  EXPECT_EQ(run.outcome, RunOutcome::Completed);
  EXPECT_EQ(run.result.rx_payload, pattern_payload(8));
}

TEST(Loopback, SixMegabytesEchoedRxAfterTx) {
  SimConfig cfg;
  DriverConfig d{DriverKind::KernelInterrupt, BufferScheme::Single, PartitionMode::blocks(65536)};
  auto run = run_transfer(cfg, d, DeviceKind::Loopback, loopback_job(6'291'456));
  ASSERT_EQ(run.outcome, RunOutcome::Completed);
  EXPECT_TRUE(run.result.rx_payload == pattern_payload(6'291'456));
  EXPECT_GT(run.result.rx.t_complete, run.result.tx.t_complete);
}

TEST(Loopback, StalledInputResumesWithoutLoss) {
  // Feed the TX FIFO by hand in bursts with gaps; output must match input.
  Simulator sim;
  auto feeder = sim.add_component("feeder");
  StreamFifo to_pl(sim, "to-pl", 256, FifoDirection::ToPL);
  StreamFifo to_ps(sim, "to-ps", 1 << 16, FifoDirection::ToPS);
  LoopbackDevice loop(sim, Ratio(4, 5), 64);
  loop.attach(to_pl, to_ps);
  Bytes sent(2000);
  std::iota(sent.begin(), sent.end(), 0);
  std::uint64_t off = 0;
  std::function<void()> feed = [&] {
    off += to_pl.push(std::span<const std::uint8_t>(sent).subspan(off, std::min<std::uint64_t>(100, sent.size() - off)));
    if (off < sent.size()) sim.schedule_in(off % 300 == 0 ? 5000 : 50, feeder, EventKind::DeviceStep, feed);
  };
  sim.schedule_in(0, feeder, EventKind::DeviceStep, feed);
  sim.run_until_quiescent();
  Bytes got;
  to_ps.pop(to_ps.occupancy(), got);
  EXPECT_EQ(got, sent);
  EXPECT_EQ(loop.bytes_echoed(), sent.size());
}

TEST(Frame, SingleEventIs255) {
  std::vector<DvsEvent> ev{{3, 2, 0, 1}};
  auto f = events_to_frame(ev, 1, 8, 4);
  EXPECT_EQ(f.pixels[2 * 8 + 3], 255);
  EXPECT_EQ(std::accumulate(f.pixels.begin(), f.pixels.end(), 0u), 255u);
}

TEST(Frame, AllEventsAtOnePixel) {
  std::vector<DvsEvent> ev(50, DvsEvent{1, 1, 0, -1});
  auto f = events_to_frame(ev, 50, 4, 4);
  EXPECT_EQ(f.counts[5], 50u);
  EXPECT_EQ(f.pixels[5], 255);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) {
    if (i != 5) {
      EXPECT_EQ(f.pixels[i], 0);
    }
  }
}

TEST(Frame, UniformEventsConserveCount) {
  auto ev = generate_uniform_events(4096, 64, 64, 7);
  auto f = events_to_frame(ev, 4096, 64, 64);
  EXPECT_EQ(std::accumulate(f.counts.begin(), f.counts.end(), std::uint64_t{0}), 4096u);
  EXPECT_EQ(*std::max_element(f.pixels.begin(), f.pixels.end()), 255);
}

TEST(Frame, OnlyFirstNEventsBinned) {
  std::vector<DvsEvent> ev{{0, 0, 0, 1}, {1, 0, 1, 1}, {1, 0, 2, 1}};
  auto f = events_to_frame(ev, 2, 2, 1);
  EXPECT_EQ(f.counts[0], 1u);
  EXPECT_EQ(f.counts[1], 1u);
}

TEST(Frame, Errors) {
  std::vector<DvsEvent> ev{{9, 0, 0, 1}};
  EXPECT_THROW(events_to_frame(ev, 1, 4, 4), OutOfBoundsEvent);
  EXPECT_THROW(events_to_frame(ev, 0, 16, 16), OutOfBoundsEvent);
  EXPECT_THROW(events_to_frame(ev, 2, 16, 16), OutOfBoundsEvent);
}
