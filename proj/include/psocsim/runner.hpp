#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psocsim/config.hpp"
#include "psocsim/devices.hpp"
#include "psocsim/drivers.hpp"
#include "psocsim/platform.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

enum class DeviceKind : std::uint8_t { Sink, Loopback };

struct TransferRun {
  RunOutcome outcome = RunOutcome::Completed;
  JobResult result;
  std::uint64_t trace_hash = 0;
  std::uint64_t events = 0;
  std::vector<GrantRecord> grants;
  std::uint64_t device_bytes = 0;
  Bytes sink_payload;
};

/// Deterministic payload pattern used by the benches.
inline Bytes pattern_payload(std::uint64_t n, std::uint64_t salt = 0) {
  Bytes b(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    b[i] = static_cast<std::uint8_t>((i * 7 + (i >> 9) + salt * 13) & 0xff);
  }
  return b;
}

/// One job on a fresh platform. Loopback jobs echo TX back on RX unless the
/// job says otherwise.
inline TransferRun run_transfer(const SimConfig& cfg, const DriverConfig& dcfg, DeviceKind device,
                                TransferJob job, bool trace = false) {
  Platform p(cfg);
  if (trace) p.sim.enable_trace();
  std::unique_ptr<SinkDevice> sink;
  std::unique_ptr<LoopbackDevice> loop;
  if (device == DeviceKind::Sink) {
    sink = std::make_unique<SinkDevice>(p.sim);
    p.attach(*sink);
  } else {
    loop = make_loopback(p);
    p.attach(*loop);
  }
  auto driver = make_driver(p, dcfg);
  TransferRun run;
  driver->start(std::move(job), [&run](JobResult& r) { run.result = r; });
  run.outcome = p.sim.run_until_quiescent(cfg.watchdog());
  if (run.outcome == RunOutcome::Completed && !run.result.finished) run.outcome = RunOutcome::Deadlock;
  run.trace_hash = p.sim.trace_hash();
  run.events = p.sim.events_delivered();
  run.grants = p.ddr.grant_log();
  if (sink) {
    run.sink_payload = sink->received();
    run.device_bytes = run.sink_payload.size();
  } else {
    run.device_bytes = loop->bytes_echoed();
  }
  return run;
}

inline TransferJob loopback_job(std::uint64_t size, Ordering ordering = Ordering::Interleaved) {
  return TransferJob{pattern_payload(size), size, ordering};
}

inline TransferJob tx_only_job(std::uint64_t size) {
  return TransferJob{pattern_payload(size), 0, Ordering::Sequential};
}

// ---------------------------------------------------------------------------
// CNN frame

struct LayerTiming {
  std::uint64_t tx_bytes = 0;
  std::uint64_t rx_bytes = 0;
  Nanos tx_ns = 0;
  Nanos rx_ns = 0;
  Nanos compute_ns = 0;
};

struct FrameReport {
  RunOutcome outcome = RunOutcome::Completed;
  std::string error;
  std::vector<LayerTiming> layers;
  Nanos frame_ns = 0;
  std::uint64_t tx_bytes = 0;
  std::uint64_t rx_bytes = 0;
  Nanos tx_ns = 0;
  Nanos rx_ns = 0;
  bool output_verified = false;

  double tx_ns_per_byte() const { return tx_bytes ? static_cast<double>(tx_ns) / tx_bytes : 0.0; }
  double rx_ns_per_byte() const { return rx_bytes ? static_cast<double>(rx_ns) / rx_bytes : 0.0; }
  bool ok() const { return outcome == RunOutcome::Completed && error.empty(); }
};

/// Input image for the first layer: a normalized histogram of synthetic DVS
/// events, tiled over the input channels.
inline Bytes input_frame(const CnnLayerSpec& first, std::uint64_t seed = 1) {
  const auto w = static_cast<std::uint32_t>(first.input_width);
  const auto h = static_cast<std::uint32_t>(first.input_height);
  const std::size_t n = static_cast<std::size_t>(w) * h * 2;
  auto events = generate_uniform_events(n, w, h, seed);
  auto frame = events_to_frame(events, n, w, h);
  Bytes out(first.input_bytes());
  for (std::uint64_t i = 0; i < out.size(); ++i) out[i] = frame.pixels[i % frame.pixels.size()];
  return out;
}

inline Bytes kernel_weights(const CnnLayerSpec& layer, std::uint32_t index) {
  return pattern_payload(layer.kernel_bytes(), 1000 + index);
}

/// Runs one full frame through `net`: per layer, TX kernels + input, then RX
/// the output, which becomes the next layer's input.
inline FrameReport run_cnn_frame(const CnnNetwork& net, const DriverConfig& dcfg, const SimConfig& cfg) {
  net.validate();
  Platform p(cfg);
  CnnAccelerator acc(p.sim, cnn_timing(cfg));
  p.attach(acc);
  auto driver = make_driver(p, dcfg);
  FrameReport rep;
  Bytes input = input_frame(net.layers.front());
  bool all_match = true;

  std::function<void(std::uint32_t)> run_layer = [&](std::uint32_t i) {
    const auto& layer = net.layers[i];
    acc.load_layer(layer, i);
    TransferJob job;
    job.tx_payload = kernel_weights(layer, i);
    job.tx_payload.insert(job.tx_payload.end(), input.begin(), input.end());
    job.rx_len = layer.output_bytes();
    job.ordering = Ordering::Sequential;
    driver->start(std::move(job), [&, i](JobResult& r) {
      LayerTiming lt;
      lt.tx_bytes = r.tx.bytes;
      lt.rx_bytes = r.rx.bytes;
      lt.tx_ns = r.tx.duration();
      lt.rx_ns = r.rx.duration();
      if (acc.compute_start() && acc.layer_done_at()) lt.compute_ns = *acc.layer_done_at() - *acc.compute_start();
      rep.layers.push_back(lt);
      for (std::uint64_t k = 0; k < r.rx_payload.size(); ++k) {
        if (r.rx_payload[k] != CnnAccelerator::output_byte(i, k)) {
          all_match = false;
          break;
        }
      }
      input = std::move(r.rx_payload);
      if (i + 1 < net.layers.size()) {
        run_layer(i + 1);
      } else {
        rep.frame_ns = r.t_end.ns;
      }
    });
  };

  try {
    run_layer(0);
    rep.outcome = p.sim.run_until_quiescent(cfg.watchdog());
    if (rep.outcome == RunOutcome::Completed && rep.layers.size() != net.layers.size()) {
      rep.outcome = RunOutcome::Deadlock;
    }
  } catch (const SimError& e) {
    rep.error = e.what();
  }
  for (const auto& l : rep.layers) {
    rep.tx_bytes += l.tx_bytes;
    rep.rx_bytes += l.rx_bytes;
    rep.tx_ns += l.tx_ns;
    rep.rx_ns += l.rx_ns;
  }
  rep.output_verified = all_match && rep.layers.size() == net.layers.size();
  return rep;
}

}  // namespace psocsim
