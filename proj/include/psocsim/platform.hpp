#pragma once

#include <deque>
#include <functional>
#include <memory>

#include "psocsim/config.hpp"
#include "psocsim/devices.hpp"
#include "psocsim/dma.hpp"
#include "psocsim/memory.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

/// The PS application core as a mutually exclusive resource: at most one
/// software activity (poll loop, copy, handler, scheduler work) holds it.
class Cpu {
 public:
  explicit Cpu(Simulator& sim) : sim_(sim) { id_ = sim_.add_component("cpu"); }

  Cpu(const Cpu&) = delete;
  Cpu& operator=(const Cpu&) = delete;

  ComponentId id() const { return id_; }
  bool held() const { return held_; }

  /// Runs `then` once the CPU is ours. Immediate when free; FIFO otherwise.
  void acquire(std::function<void()> then) {
    if (!held_) {
      held_ = true;
      held_since_ = sim_.now();
      then();
      return;
    }
    waiters_.push_back(std::move(then));
  }

  void release() {
    busy_ns_ += sim_.now() - held_since_;
    held_ = false;
    if (waiters_.empty()) return;
    auto next = std::move(waiters_.front());
    waiters_.pop_front();
    held_ = true;
    held_since_ = sim_.now();
    sim_.schedule_in(0, id_, EventKind::CpuActivity, std::move(next));
  }

  /// Occupies the (held) CPU for `d` ns, then continues.
  void work(Nanos d, std::function<void()> then, std::uint64_t tag = 0) {
    sim_.schedule_in(d, id_, EventKind::CpuActivity, std::move(then), tag);
  }

  /// Busy time so far, counting an in-progress hold up to now.
  Nanos busy_ns() const { return busy_ns_ + (held_ ? sim_.now() - held_since_ : 0); }

 private:
  Simulator& sim_;
  ComponentId id_;
  bool held_ = false;
  SimTime held_since_{};
  Nanos busy_ns_ = 0;
  std::deque<std::function<void()>> waiters_;
};

inline DmaTiming dma_timing(const SimConfig& c) {
  return DmaTiming{c.ddr_bandwidth_bpns, c.stream_rate(), c.burst_bytes, c.sg_descriptor_fetch_ns};
}

/// One simulated PSoC: DDR, the AXI-DMA pair with its stream FIFOs and
/// interrupt lines, and the application CPU. Devices attach to the FIFOs.
class Platform {
 public:
  explicit Platform(const SimConfig& config)
      : config_(config),
        ddr(sim, config.ddr_bandwidth_bpns, config.arbiter_max_grants),
        tx_fifo(sim, "tx-fifo", config.tx_fifo_bytes, FifoDirection::ToPL),
        rx_fifo(sim, "rx-fifo", config.rx_fifo_bytes, FifoDirection::ToPS),
        mm2s_irq(sim, "mm2s-irq", config.irq_latency_ns),
        s2mm_irq(sim, "s2mm-irq", config.irq_latency_ns),
        mm2s(sim, ddr, tx_fifo, mm2s_irq, DmaDirection::MM2S, dma_timing(config)),
        s2mm(sim, ddr, rx_fifo, s2mm_irq, DmaDirection::S2MM, dma_timing(config)),
        copier(sim, ddr, config.memcpy_bandwidth_bpns, config.burst_bytes),
        cpu(sim) {}

  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  const SimConfig& config() const { return config_; }

  void attach(StreamDevice& device) { device.attach(tx_fifo, rx_fifo); }

  DmaChannel& channel(DmaDirection d) { return d == DmaDirection::MM2S ? mm2s : s2mm; }
  InterruptLine& irq(DmaDirection d) { return d == DmaDirection::MM2S ? mm2s_irq : s2mm_irq; }

 private:
  SimConfig config_;

 public:
  Simulator sim;
  PhysicalMemory memory;
  DdrArbiter ddr;
  StreamFifo tx_fifo;
  StreamFifo rx_fifo;
  InterruptLine mm2s_irq;
  InterruptLine s2mm_irq;
  DmaChannel mm2s;
  DmaChannel s2mm;
  CpuCopier copier;
  Cpu cpu;
};

inline std::unique_ptr<LoopbackDevice> make_loopback(Platform& p) {
  return std::make_unique<LoopbackDevice>(p.sim, p.config().stream_rate(), p.config().burst_bytes);
}

inline CnnTiming cnn_timing(const SimConfig& c) {
  return CnnTiming{c.stream_rate(), c.mac_rate(), c.rows_latency, c.burst_bytes};
}

}  // namespace psocsim
