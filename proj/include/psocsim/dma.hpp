#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psocsim/errors.hpp"
#include "psocsim/memory.hpp"
#include "psocsim/ratio.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

enum class DmaDirection : std::uint8_t { MM2S, S2MM };

inline const char* to_string(DmaDirection d) { return d == DmaDirection::MM2S ? "mm2s" : "s2mm"; }

/// One hardware transfer unit. Only constructible through create(), which
/// enforces 1 <= length <= max_descriptor_bytes and bounds within the region.
class DmaDescriptor {
 public:
  static DmaDescriptor create(RegionRef region, std::uint64_t offset, std::uint64_t length,
                              DmaDirection direction, std::uint64_t max_descriptor_bytes) {
    if (!region) throw InvalidDescriptor("descriptor without a physical region");
    if (length == 0) throw InvalidDescriptor("descriptor length must be >= 1");
    if (length > max_descriptor_bytes) {
      throw InvalidDescriptor("descriptor length " + std::to_string(length) +
                              " B exceeds the " + std::to_string(max_descriptor_bytes) +
                              " B transfer limit");
    }
    if (offset > region->length || length > region->length - offset) {
      throw InvalidDescriptor("descriptor [" + std::to_string(offset) + ", " +
                              std::to_string(offset + length) + ") outside region of " +
                              std::to_string(region->length) + " B");
    }
    DmaDescriptor d;
    d.region_ = std::move(region);
    d.offset_ = offset;
    d.length_ = length;
    d.direction_ = direction;
    return d;
  }

  const RegionRef& region() const { return region_; }
  std::uint64_t offset() const { return offset_; }
  std::uint64_t length() const { return length_; }
  DmaDirection direction() const { return direction_; }

 private:
  DmaDescriptor() = default;
  RegionRef region_;
  std::uint64_t offset_ = 0;
  std::uint64_t length_ = 0;
  DmaDirection direction_ = DmaDirection::MM2S;
};

enum class CompletionPolicy : std::uint8_t { OnEachDescriptor, OnChainEnd };

/// Scatter-gather list walked by hardware without software intervention.
class DescriptorChain {
 public:
  static DescriptorChain create(std::vector<DmaDescriptor> descriptors, CompletionPolicy completion) {
    if (descriptors.empty()) throw InvalidDescriptor("descriptor chain must be non-empty");
    for (const auto& d : descriptors) {
      if (d.direction() != descriptors.front().direction()) {
        throw InvalidDescriptor("descriptor chain mixes MM2S and S2MM descriptors");
      }
    }
    DescriptorChain c;
    c.descriptors_ = std::move(descriptors);
    c.completion_ = completion;
    return c;
  }

  const std::vector<DmaDescriptor>& descriptors() const { return descriptors_; }
  CompletionPolicy completion() const { return completion_; }
  DmaDirection direction() const { return descriptors_.front().direction(); }
  std::size_t size() const { return descriptors_.size(); }

  std::uint64_t total_bytes() const {
    std::uint64_t t = 0;
    for (const auto& d : descriptors_) t += d.length();
    return t;
  }

 private:
  DescriptorChain() = default;
  std::vector<DmaDescriptor> descriptors_;
  CompletionPolicy completion_ = CompletionPolicy::OnChainEnd;
};

/// Level interrupt from a DMA channel to the CPU. Raising while pending
/// coalesces into the already scheduled handler entry.
class InterruptLine {
 public:
  using Handler = std::function<void()>;

  InterruptLine(Simulator& sim, std::string name, Nanos latency)
      : sim_(sim), latency_(latency) {
    id_ = sim_.add_component(std::move(name));
  }

  InterruptLine(const InterruptLine&) = delete;
  InterruptLine& operator=(const InterruptLine&) = delete;

  void set_handler(Handler h) { handler_ = std::move(h); }
  void set_masked(bool masked) { masked_ = masked; }
  bool masked() const { return masked_; }
  bool pending() const { return pending_; }
  Nanos latency() const { return latency_; }
  std::uint64_t raises() const { return raises_; }
  std::uint64_t coalesced() const { return coalesced_; }
  std::uint64_t handler_entries() const { return entries_; }

  void raise() {
    ++raises_;
    if (masked_) return;
    if (pending_) {
      ++coalesced_;
      return;
    }
    pending_ = true;
    sim_.schedule_in(latency_, id_, EventKind::IrqRaised, [this] {
      pending_ = false;
      ++entries_;
      if (handler_) handler_();
    });
  }

 private:
  Simulator& sim_;
  ComponentId id_;
  Nanos latency_;
  Handler handler_;
  bool masked_ = false;
  bool pending_ = false;
  std::uint64_t raises_ = 0;
  std::uint64_t coalesced_ = 0;
  std::uint64_t entries_ = 0;
};

/// Static parameters of one DMA channel.
struct DmaTiming {
  Ratio ddr_bandwidth{4};
  Ratio stream_rate{4, 5};
  std::uint64_t burst_bytes = 1024;
  Nanos descriptor_fetch_ns = 100;
};

enum class ChannelState : std::uint8_t { Idle, FetchingDescriptor, Transferring, Done, Halted };

inline const char* to_string(ChannelState s) {
  switch (s) {
    case ChannelState::Idle: return "idle";
    case ChannelState::FetchingDescriptor: return "fetching";
    case ChannelState::Transferring: return "transferring";
    case ChannelState::Done: return "done";
    case ChannelState::Halted: return "halted";
  }
  return "?";
}

/// One AXI-DMA direction. MM2S reads DDR in bursts and pushes into the ToPL
/// FIFO; S2MM pops the ToPS FIFO and writes DDR.
///
/// Each chunk (<= burst_bytes, limited by FIFO space/data) waits for a DDR
/// grant and then occupies the channel for the chunk's share of
/// ceil(chain_bytes / min(ddr, stream)). The DDR grant covers only the DDR
/// portion of that window, so the opposite channel can interleave.
class DmaChannel {
 public:
  DmaChannel(Simulator& sim, DdrArbiter& ddr, StreamFifo& fifo, InterruptLine& irq,
             DmaDirection direction, DmaTiming timing)
      : sim_(sim), ddr_(ddr), fifo_(fifo), irq_(irq), direction_(direction), timing_(timing),
        rate_(min_rate(timing.ddr_bandwidth, timing.stream_rate)) {
    id_ = sim_.add_component(direction == DmaDirection::MM2S ? "mm2s" : "s2mm");
  }

  DmaChannel(const DmaChannel&) = delete;
  DmaChannel& operator=(const DmaChannel&) = delete;

  DmaDirection direction() const { return direction_; }
  ChannelState state() const { return state_; }
  /// Bytes moved by the current (or last) chain.
  std::uint64_t bytes_moved() const { return bytes_moved_; }
  std::uint64_t lifetime_bytes() const { return lifetime_bytes_; }
  std::uint64_t descriptors_fetched() const { return fetched_; }
  std::uint64_t descriptors_completed() const { return completed_descriptors_; }
  ComponentId id() const { return id_; }
  Ratio rate() const { return rate_; }

  /// Hardware completion time of the last chain, once known.
  std::optional<SimTime> completed_at() const { return completed_at_; }

  /// Status-register view at `t`: true when the chain has finished by `t`,
  /// including a final chunk whose end lands exactly at `t` but whose event
  /// has not been delivered yet.
  bool finished_by(SimTime t) const {
    if (state_ == ChannelState::Done) return true;
    return final_chunk_end_ && *final_chunk_end_ <= t;
  }

  /// One-shot hook invoked at hardware chain completion.
  void on_chain_done(std::function<void()> cb) { chain_done_cb_ = std::move(cb); }

  void submit_chain(DescriptorChain chain) {
    if (state_ != ChannelState::Idle && state_ != ChannelState::Done) {
      throw ChannelBusy(std::string(to_string(direction_)) + " channel is " + to_string(state_));
    }
    if (chain.direction() != direction_) {
      throw InvalidDescriptor("chain direction does not match channel");
    }
    chain_.emplace(std::move(chain));
    index_ = 0;
    desc_done_ = 0;
    chain_done_bytes_ = 0;
    bytes_moved_ = 0;
    chain_total_ = chain_->total_bytes();
    completed_at_.reset();
    final_chunk_end_.reset();
    begin_fetch();
  }

  void halt() { state_ = ChannelState::Halted; }

  void reset() {
    state_ = ChannelState::Idle;
    chain_.reset();
    completed_at_.reset();
    final_chunk_end_.reset();
  }

 private:
  void begin_fetch() {
    state_ = ChannelState::FetchingDescriptor;
    sim_.schedule_in(timing_.descriptor_fetch_ns, id_, EventKind::DescriptorFetched,
                     [this] {
                       if (state_ == ChannelState::Halted) return;
                       ++fetched_;
                       state_ = ChannelState::Transferring;
                       desc_done_ = 0;
                       step_transfer();
                     },
                     index_);
  }

  const DmaDescriptor& current() const { return chain_->descriptors()[index_]; }

  /// Issues the next chunk, or parks on the FIFO when backpressured.
  void step_transfer() {
    if (state_ != ChannelState::Transferring || in_flight_) return;
    const auto& d = current();
    const std::uint64_t remain = d.length() - desc_done_;
    std::uint64_t c = std::min(timing_.burst_bytes, remain);
    if (direction_ == DmaDirection::MM2S) {
      c = std::min(c, fifo_.free_space());
      if (c == 0) {
        fifo_.on_space([this] { step_transfer(); });
        return;
      }
      fifo_.reserve(c);
    } else {
      c = std::min(c, fifo_.occupancy());
      if (c == 0) {
        fifo_.on_data([this] { step_transfer(); });
        return;
      }
      staging_.clear();
      fifo_.pop(c, staging_);
    }
    in_flight_ = true;
    const std::uint64_t from = chain_done_bytes_;
    const Nanos window = rate_.span(from, from + c);
    const Nanos ddr_time = std::min(timing_.ddr_bandwidth.ceil_over(c), window);
    const DdrOp op = direction_ == DmaDirection::MM2S ? DdrOp::Read : DdrOp::Write;
    const bool last = (from + c == chain_total_);
    ddr_.request_for(op, id_, ddr_time, [this, c, window, last](SimTime grant) {
      const SimTime end = grant + window;
      if (last) final_chunk_end_ = end;
      sim_.schedule_at(end, id_, EventKind::ChunkDone, [this, c] { chunk_done(c); }, c);
    });
  }

  void chunk_done(std::uint64_t c) {
    in_flight_ = false;
    const auto& d = current();
    auto region = d.region()->bytes().subspan(d.offset() + desc_done_, c);
    if (direction_ == DmaDirection::MM2S) {
      fifo_.commit(region);
    } else {
      std::copy(staging_.begin(), staging_.end(), region.begin());
    }
    desc_done_ += c;
    chain_done_bytes_ += c;
    bytes_moved_ += c;
    lifetime_bytes_ += c;
    sim_.note_progress(c);
    if (desc_done_ < d.length()) {
      step_transfer();
      return;
    }
    ++completed_descriptors_;
    const bool more = index_ + 1 < chain_->size();
    if (chain_->completion() == CompletionPolicy::OnEachDescriptor) irq_.raise();
    if (more) {
      ++index_;
      begin_fetch();
      return;
    }
    state_ = ChannelState::Done;
    completed_at_ = sim_.now();
    sim_.schedule_in(0, id_, EventKind::DescriptorComplete, [] {}, bytes_moved_);
    if (chain_->completion() == CompletionPolicy::OnChainEnd) irq_.raise();
    if (chain_done_cb_) {
      auto cb = std::move(chain_done_cb_);
      chain_done_cb_ = nullptr;
      cb();
    }
  }

  Simulator& sim_;
  DdrArbiter& ddr_;
  StreamFifo& fifo_;
  InterruptLine& irq_;
  ComponentId id_;
  DmaDirection direction_;
  DmaTiming timing_;
  Ratio rate_;
  ChannelState state_ = ChannelState::Idle;
  std::optional<DescriptorChain> chain_;
  std::size_t index_ = 0;
  std::uint64_t desc_done_ = 0;
  std::uint64_t chain_done_bytes_ = 0;
  std::uint64_t chain_total_ = 0;
  std::uint64_t bytes_moved_ = 0;
  std::uint64_t lifetime_bytes_ = 0;
  std::uint64_t fetched_ = 0;
  std::uint64_t completed_descriptors_ = 0;
  bool in_flight_ = false;
  Bytes staging_;
  std::optional<SimTime> completed_at_;
  std::optional<SimTime> final_chunk_end_;
  std::function<void()> chain_done_cb_;
};

}  // namespace psocsim
