#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psocsim/config.hpp"
#include "psocsim/dma.hpp"
#include "psocsim/errors.hpp"
#include "psocsim/memory.hpp"
#include "psocsim/platform.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

enum class DriverKind : std::uint8_t { UserPoll, UserScheduled, KernelInterrupt };
enum class BufferScheme : std::uint8_t { Single, Double };

inline constexpr DriverKind kAllDrivers[] = {DriverKind::UserPoll, DriverKind::UserScheduled,
                                             DriverKind::KernelInterrupt};

inline const char* to_string(DriverKind k) {
  switch (k) {
    case DriverKind::UserPoll: return "poll";
    case DriverKind::UserScheduled: return "scheduled";
    case DriverKind::KernelInterrupt: return "kernel";
  }
  return "?";
}

inline const char* to_string(BufferScheme s) { return s == BufferScheme::Single ? "single" : "double"; }

inline std::optional<DriverKind> parse_driver_kind(std::string_view s) {
  if (s == "poll" || s == "user-poll") return DriverKind::UserPoll;
  if (s == "scheduled" || s == "user-scheduled") return DriverKind::UserScheduled;
  if (s == "kernel" || s == "kernel-interrupt") return DriverKind::KernelInterrupt;
  return std::nullopt;
}

struct PartitionMode {
  enum class Kind : std::uint8_t { Unique, Blocks } kind = Kind::Unique;
  std::uint64_t block_size = 65536;

  static PartitionMode unique() { return {Kind::Unique, 65536}; }
  static PartitionMode blocks(std::uint64_t size) { return {Kind::Blocks, size}; }
  bool is_unique() const { return kind == Kind::Unique; }
  const char* name() const { return is_unique() ? "unique" : "blocks"; }
};

struct DriverConfig {
  DriverKind kind = DriverKind::UserPoll;
  BufferScheme scheme = BufferScheme::Single;
  PartitionMode mode = PartitionMode::unique();
  /// Kernel driver interrupt policy for its scatter-gather chains.
  CompletionPolicy kernel_completion = CompletionPolicy::OnChainEnd;
};

/// Descriptor sizes for a payload: Unique -> one, Blocks(b) -> ceil(L/b)
/// pieces of b with a short tail.
inline std::vector<std::uint64_t> partition_sizes(std::uint64_t payload, const PartitionMode& mode,
                                                  std::uint64_t max_descriptor_bytes) {
  if (payload == 0) throw InvalidDescriptor("payload must be >= 1 byte");
  if (mode.is_unique()) {
    if (payload > max_descriptor_bytes) {
      throw PayloadExceedsUniqueLimit("Unique payload of " + std::to_string(payload) +
                                      " B exceeds the " + std::to_string(max_descriptor_bytes) +
                                      " B transfer limit");
    }
    return {payload};
  }
  if (mode.block_size == 0) throw InvalidDescriptor("block size must be >= 1");
  std::vector<std::uint64_t> out;
  out.reserve((payload + mode.block_size - 1) / mode.block_size);
  for (std::uint64_t off = 0; off < payload; off += mode.block_size) {
    out.push_back(std::min(mode.block_size, payload - off));
  }
  return out;
}

/// Chain over [0, payload) of `region`, split per `mode`.
inline DescriptorChain partition(const RegionRef& region, std::uint64_t payload,
                                 const PartitionMode& mode, DmaDirection direction,
                                 std::uint64_t max_descriptor_bytes,
                                 CompletionPolicy completion = CompletionPolicy::OnChainEnd) {
  std::vector<DmaDescriptor> ds;
  std::uint64_t off = 0;
  for (auto s : partition_sizes(payload, mode, max_descriptor_bytes)) {
    ds.push_back(DmaDescriptor::create(region, off, s, direction, max_descriptor_bytes));
    off += s;
  }
  return DescriptorChain::create(std::move(ds), completion);
}

/// How TX and RX of one job are ordered by the host.
///  Interleaved: RX is requested before/alongside TX (per block for user
///               level), so the S2MM side can drain while MM2S runs.
///  Sequential:  the whole TX completes before the RX request is issued.
enum class Ordering : std::uint8_t { Interleaved, Sequential };

struct TransferJob {
  Bytes tx_payload;
  std::uint64_t rx_len = 0;
  Ordering ordering = Ordering::Interleaved;
};

struct TransferReport {
  DmaDirection direction = DmaDirection::MM2S;
  SimTime t_submit{};
  SimTime t_complete{};
  std::uint64_t bytes = 0;
  std::uint64_t descriptors_used = 0;
  std::uint64_t poll_ticks_consumed = 0;
  std::uint64_t interrupts_taken = 0;
  /// Hardware completion of the final descriptor (for quantization checks).
  SimTime hw_complete{};
  /// When the host started waiting for that final completion.
  SimTime wait_start{};

  Nanos duration() const { return t_complete - t_submit; }
};

struct JobResult {
  TransferReport tx;
  TransferReport rx;
  Bytes rx_payload;
  SimTime t_start{};
  SimTime t_end{};
  Nanos cpu_busy_ns = 0;
  Nanos cpu_idle_ns = 0;
  bool finished = false;

  Nanos total_ns() const { return t_end - t_start; }
};

using JobDone = std::function<void(JobResult&)>;

/// Host-side transfer strategy. One job at a time; jobs may be issued back
/// to back on the same platform.
class HostDriver {
 public:
  virtual ~HostDriver() = default;
  virtual void start(TransferJob job, JobDone done) = 0;
  virtual const DriverConfig& config() const = 0;
};

namespace detail {

struct JobBase {
  TransferJob job;
  JobDone done;
  JobResult result;
  Nanos cpu_busy_at_start = 0;

  void finish(Platform& p) {
    result.t_end = p.sim.now();
    result.cpu_busy_ns = p.cpu.busy_ns() - cpu_busy_at_start;
    result.cpu_idle_ns = result.total_ns() - std::min(result.total_ns(), result.cpu_busy_ns);
    result.finished = true;
    p.sim.end_work();
    if (done) done(result);
  }
};

/// Continue once `ch` has no chain in flight (a poll may observe completion
/// in the same nanosecond as, but before, the channel's own completion event).
inline void when_channel_free(DmaChannel& ch, std::function<void()> then) {
  if (ch.state() == ChannelState::Idle || ch.state() == ChannelState::Done) {
    then();
  } else {
    ch.on_chain_done(std::move(then));
  }
}

}  // namespace detail

/// User-level mmap driver, polling or scheduler-managed.
///
/// Staging buffers are mapped DDR regions (zero copy), one per direction for
/// Single and two alternating ones for Double. Each descriptor costs
/// syscall + dma_setup of CPU time before submission. Completion is observed
/// on a poll grid anchored at the start of the wait; the scheduled variant
/// yields the CPU while waiting and pays one sched_quantum to be resumed.
class UserLevelDriver final : public HostDriver {
 public:
  UserLevelDriver(Platform& p, DriverConfig cfg) : p_(p), cfg_(cfg) {
    p_.mm2s_irq.set_masked(true);
    p_.s2mm_irq.set_masked(true);
    id_ = p_.sim.add_component(cfg_.kind == DriverKind::UserPoll ? "user-poll" : "user-scheduled");
  }

  const DriverConfig& config() const override { return cfg_; }

  void start(TransferJob job, JobDone done) override {
    const auto& c = p_.config();
    auto s = std::make_shared<State>();
    s->job = std::move(job);
    s->done = std::move(done);
    const std::uint64_t tx_len = s->job.tx_payload.size();
    s->tx_sizes = partition_sizes(tx_len, cfg_.mode, c.max_descriptor_bytes);
    if (s->job.rx_len > 0) s->rx_sizes = partition_sizes(s->job.rx_len, cfg_.mode, c.max_descriptor_bytes);
    if (s->job.ordering == Ordering::Interleaved && !s->rx_sizes.empty() &&
        s->rx_sizes.size() != s->tx_sizes.size()) {
      throw InvalidDescriptor("interleaved user-level jobs need equal TX/RX partitions");
    }
    const std::size_t nbuf = cfg_.scheme == BufferScheme::Double ? 2 : 1;
    for (std::size_t i = 0; i < nbuf && i < s->tx_sizes.size(); ++i) {
      s->tx_bufs.push_back(VirtualBuffer::mapped(next_buffer_id_++, p_.memory.allocate(s->tx_sizes[0])));
    }
    for (std::size_t i = 0; i < nbuf && i < s->rx_sizes.size(); ++i) {
      s->rx_bufs.push_back(VirtualBuffer::mapped(next_buffer_id_++, p_.memory.allocate(s->rx_sizes[0])));
    }
    s->result.tx.direction = DmaDirection::MM2S;
    s->result.tx.bytes = tx_len;
    s->result.rx.direction = DmaDirection::S2MM;
    s->result.rx.bytes = s->job.rx_len;
    s->result.rx_payload.reserve(s->job.rx_len);
    p_.sim.begin_work();
    p_.cpu.acquire([this, s] {
      s->cpu_busy_at_start = p_.cpu.busy_ns();
      s->result.t_start = p_.sim.now();
      s->result.tx.t_submit = p_.sim.now();
      s->result.rx.t_submit = p_.sim.now();
      if (s->job.ordering == Ordering::Interleaved) {
        interleaved_block(s, 0);
      } else if (cfg_.kind == DriverKind::UserScheduled && !s->rx_sizes.empty()) {
        // The scheduler arms the first RX block before the blocking TX.
        post(s, DmaDirection::S2MM, 0, [this, s] { sequential_tx(s, 0); });
        s->rx_prearmed = true;
      } else {
        sequential_tx(s, 0);
      }
    });
  }

 private:
  struct State : detail::JobBase {
    std::vector<std::uint64_t> tx_sizes;
    std::vector<std::uint64_t> rx_sizes;
    std::vector<VirtualBuffer> tx_bufs;
    std::vector<VirtualBuffer> rx_bufs;
    std::uint64_t tx_offset_prepared = 0;
    bool rx_prearmed = false;
  };
  using StatePtr = std::shared_ptr<State>;

  bool scheduled() const { return cfg_.kind == DriverKind::UserScheduled; }

  void prepare(const StatePtr& s, std::size_t k, std::function<void()> then) {
    const std::uint64_t b = s->tx_sizes[k];
    const Nanos cost = p_.config().prepare_cost_ns_per_byte.ceil_times(b);
    p_.cpu.work(cost, [this, s, k, b, then = std::move(then)] {
      auto& buf = s->tx_bufs[k % s->tx_bufs.size()];
      std::copy_n(s->job.tx_payload.begin() + static_cast<std::ptrdiff_t>(s->tx_offset_prepared), b,
                  buf.bytes().begin());
      s->tx_offset_prepared += b;
      then();
    });
  }

  void post(const StatePtr& s, DmaDirection dir, std::size_t k, std::function<void()> then) {
    const auto& c = p_.config();
    p_.cpu.work(c.syscall_overhead_ns + c.dma_setup_ns, [this, s, dir, k, then = std::move(then)] {
      auto& ch = p_.channel(dir);
      detail::when_channel_free(ch, [this, s, dir, k, &ch, then] {
        const bool tx = dir == DmaDirection::MM2S;
        const auto& bufs = tx ? s->tx_bufs : s->rx_bufs;
        const std::uint64_t b = tx ? s->tx_sizes[k] : s->rx_sizes[k];
        auto d = DmaDescriptor::create(bufs[k % bufs.size()].mapping(), 0, b, dir,
                                       p_.config().max_descriptor_bytes);
        ch.submit_chain(DescriptorChain::create({d}, CompletionPolicy::OnChainEnd));
        (tx ? s->result.tx : s->result.rx).descriptors_used += 1;
        then();
      });
    });
  }

  /// Waits for the channel's current chain; `then` runs at the observation time.
  void wait(const StatePtr& s, DmaDirection dir, std::function<void()> then) {
    auto& rep = dir == DmaDirection::MM2S ? s->result.tx : s->result.rx;
    rep.wait_start = p_.sim.now();
    if (scheduled()) p_.cpu.release();
    tick(s, dir, std::move(then));
  }

  void tick(const StatePtr& s, DmaDirection dir, std::function<void()> then, Nanos delay = 0) {
    const EventKind kind = scheduled() ? EventKind::SchedQuantum : EventKind::PollTick;
    p_.sim.schedule_in(delay, id_, kind, [this, s, dir, then = std::move(then)]() mutable {
      auto& ch = p_.channel(dir);
      auto& rep = dir == DmaDirection::MM2S ? s->result.tx : s->result.rx;
      ++rep.poll_ticks_consumed;
      if (!ch.finished_by(p_.sim.now())) {
        tick(s, dir, std::move(then), p_.config().poll_interval_ns);
        return;
      }
      auto resume = [this, s, dir, &ch, then = std::move(then)]() mutable {
        detail::when_channel_free(ch, [this, s, dir, &ch, then = std::move(then)] {
          auto& r = dir == DmaDirection::MM2S ? s->result.tx : s->result.rx;
          r.hw_complete = ch.completed_at().value_or(p_.sim.now());
          then();
        });
      };
      if (!scheduled()) {
        resume();
        return;
      }
      p_.sim.schedule_in(p_.config().sched_quantum_ns, id_, EventKind::SchedQuantum,
                         [this, resume = std::move(resume)]() mutable {
                           p_.cpu.acquire(std::move(resume));
                         });
    });
  }

  void collect(const StatePtr& s, std::size_t k) {
    const auto& buf = s->rx_bufs[k % s->rx_bufs.size()];
    const auto b = s->rx_sizes[k];
    s->result.rx_payload.insert(s->result.rx_payload.end(), buf.bytes().begin(),
                                buf.bytes().begin() + static_cast<std::ptrdiff_t>(b));
  }

  void complete(const StatePtr& s) {
    p_.cpu.release();
    s->finish(p_);
  }

  // Interleaved: per block, post RX, post TX, [prepare next], wait TX, wait RX.
  void interleaved_block(const StatePtr& s, std::size_t k) {
    if (k == s->tx_sizes.size()) {
      complete(s);
      return;
    }
    const bool has_rx = !s->rx_sizes.empty();
    auto after_posts = [this, s, k, has_rx] {
      auto wait_all = [this, s, k, has_rx] {
        wait(s, DmaDirection::MM2S, [this, s, k, has_rx] {
          s->result.tx.t_complete = p_.sim.now();
          if (!has_rx) {
            interleaved_block(s, k + 1);
            return;
          }
          wait(s, DmaDirection::S2MM, [this, s, k] {
            collect(s, k);
            s->result.rx.t_complete = p_.sim.now();
            interleaved_block(s, k + 1);
          });
        });
      };
      if (cfg_.scheme == BufferScheme::Double && k + 1 < s->tx_sizes.size()) {
        prepare(s, k + 1, wait_all);
      } else {
        wait_all();
      }
    };
    auto posts = [this, s, k, has_rx, after_posts] {
      if (has_rx) {
        post(s, DmaDirection::S2MM, k,
             [this, s, k, after_posts] { post(s, DmaDirection::MM2S, k, after_posts); });
      } else {
        post(s, DmaDirection::MM2S, k, after_posts);
      }
    };
    if (cfg_.scheme == BufferScheme::Single || k == 0) {
      prepare(s, k, posts);
    } else {
      posts();
    }
  }

  void sequential_tx(const StatePtr& s, std::size_t k) {
    if (k == s->tx_sizes.size()) {
      s->result.tx.t_complete = p_.sim.now();
      s->result.rx.t_submit = p_.sim.now();
      if (s->rx_sizes.empty()) {
        complete(s);
      } else {
        sequential_rx(s, 0);
      }
      return;
    }
    auto body = [this, s, k] {
      post(s, DmaDirection::MM2S, k, [this, s, k] {
        auto w = [this, s, k] { wait(s, DmaDirection::MM2S, [this, s, k] { sequential_tx(s, k + 1); }); };
        if (cfg_.scheme == BufferScheme::Double && k + 1 < s->tx_sizes.size()) {
          prepare(s, k + 1, w);
        } else {
          w();
        }
      });
    };
    if (cfg_.scheme == BufferScheme::Single || k == 0) {
      prepare(s, k, body);
    } else {
      body();
    }
  }

  void sequential_rx(const StatePtr& s, std::size_t k) {
    if (k == s->rx_sizes.size()) {
      s->result.rx.t_complete = p_.sim.now();
      complete(s);
      return;
    }
    auto w = [this, s, k] {
      wait(s, DmaDirection::S2MM, [this, s, k] {
        collect(s, k);
        sequential_rx(s, k + 1);
      });
    };
    if (k == 0 && s->rx_prearmed) {
      w();
    } else {
      post(s, DmaDirection::S2MM, k, w);
    }
  }

  Platform& p_;
  DriverConfig cfg_;
  ComponentId id_;
  std::uint64_t next_buffer_id_ = 1;
};

/// Interrupt-driven kernel driver. The application hands over an ordinary
/// virtual buffer; the driver copies it into a physical region, submits one
/// scatter-gather chain per direction and sleeps until the interrupt. RX data
/// is copied back out in the handler. With kernel_copy_overlap, the TX copy
/// of block k+1 overlaps the DMA of block k (one chain per block).
class KernelDriver final : public HostDriver {
 public:
  KernelDriver(Platform& p, DriverConfig cfg) : p_(p), cfg_(cfg) {
    p_.mm2s_irq.set_masked(false);
    p_.s2mm_irq.set_masked(false);
    id_ = p_.sim.add_component("kernel-driver");
    p_.mm2s_irq.set_handler([this] { on_irq(DmaDirection::MM2S); });
    p_.s2mm_irq.set_handler([this] { on_irq(DmaDirection::S2MM); });
  }

  const DriverConfig& config() const override { return cfg_; }

  void start(TransferJob job, JobDone done) override {
    const auto& c = p_.config();
    auto s = std::make_shared<State>();
    s->job = std::move(job);
    s->done = std::move(done);
    const std::uint64_t tx_len = s->job.tx_payload.size();
    s->tx_sizes = partition_sizes(tx_len, cfg_.mode, c.max_descriptor_bytes);
    if (s->job.rx_len > 0) s->rx_sizes = partition_sizes(s->job.rx_len, cfg_.mode, c.max_descriptor_bytes);
    s->user_tx = VirtualBuffer::owned(1, tx_len);
    if (s->job.rx_len > 0) s->user_rx = VirtualBuffer::owned(2, s->job.rx_len);
    s->result.tx.direction = DmaDirection::MM2S;
    s->result.tx.bytes = tx_len;
    s->result.rx.direction = DmaDirection::S2MM;
    s->result.rx.bytes = s->job.rx_len;
    s->tx_irqs_before = p_.mm2s_irq.handler_entries();
    s->rx_irqs_before = p_.s2mm_irq.handler_entries();
    s->rx_done = s->job.rx_len == 0;
    p_.sim.begin_work();
    state_ = s;
    p_.cpu.acquire([this, s] {
      s->cpu_busy_at_start = p_.cpu.busy_ns();
      s->result.t_start = p_.sim.now();
      s->result.tx.t_submit = p_.sim.now();
      s->result.rx.t_submit = p_.sim.now();
      const Nanos prep = p_.config().prepare_cost_ns_per_byte.ceil_times(s->job.tx_payload.size());
      p_.cpu.work(prep, [this, s] {
        std::copy(s->job.tx_payload.begin(), s->job.tx_payload.end(), s->user_tx.bytes().begin());
        if (s->job.ordering == Ordering::Interleaved && s->job.rx_len > 0) {
          rx_request(s, [this, s] { tx_request(s); });
        } else {
          tx_request(s);
        }
      });
    });
  }

 private:
  struct State : detail::JobBase {
    std::vector<std::uint64_t> tx_sizes;
    std::vector<std::uint64_t> rx_sizes;
    VirtualBuffer user_tx;
    VirtualBuffer user_rx;
    RegionRef tx_region;
    RegionRef rx_region;
    std::size_t tx_next_block = 0;    // overlap mode: next block to submit
    std::size_t tx_blocks_copied = 0;  // overlap mode
    std::uint64_t tx_irqs_before = 0;
    std::uint64_t rx_irqs_before = 0;
    bool tx_done = false;
    bool rx_done = false;
  };
  using StatePtr = std::shared_ptr<State>;

  bool overlap(const StatePtr& s) const { return p_.config().kernel_copy_overlap && s->tx_sizes.size() > 1; }

  void rx_request(const StatePtr& s, std::function<void()> then) {
    const auto& c = p_.config();
    p_.cpu.work(c.kernel_request_overhead_ns, [this, s, then = std::move(then)] {
      s->rx_region = p_.memory.allocate(s->job.rx_len);
      auto chain = partition(s->rx_region, s->job.rx_len, cfg_.mode, DmaDirection::S2MM,
                             p_.config().max_descriptor_bytes, cfg_.kernel_completion);
      s->result.rx.descriptors_used += chain.size();
      detail::when_channel_free(p_.s2mm, [this, s, chain = std::move(chain), then] {
        p_.s2mm.submit_chain(chain);
        then();
      });
    });
  }

  void tx_request(const StatePtr& s) {
    const auto& c = p_.config();
    p_.cpu.work(c.kernel_request_overhead_ns, [this, s] {
      s->tx_region = p_.memory.allocate(s->job.tx_payload.size());
      if (overlap(s)) {
        copy_tx_block(s, 0, [this, s] {
          submit_tx_block(s);
          start_next_tx_copy(s);
        });
        return;
      }
      const auto len = s->job.tx_payload.size();
      p_.copier.copy(s->user_tx.bytes(), s->tx_region->bytes(), len, [this, s, len] {
        auto chain = partition(s->tx_region, len, cfg_.mode, DmaDirection::MM2S,
                               p_.config().max_descriptor_bytes, cfg_.kernel_completion);
        s->result.tx.descriptors_used += chain.size();
        detail::when_channel_free(p_.mm2s, [this, s, chain = std::move(chain)] {
          p_.mm2s.submit_chain(chain);
          s->result.tx.wait_start = p_.sim.now();
          p_.cpu.release();
        });
      });
    });
  }

  std::uint64_t block_offset(const StatePtr& s, std::size_t k) const {
    std::uint64_t off = 0;
    for (std::size_t i = 0; i < k; ++i) off += s->tx_sizes[i];
    return off;
  }

  void copy_tx_block(const StatePtr& s, std::size_t k, std::function<void()> then) {
    const auto off = block_offset(s, k);
    const auto b = s->tx_sizes[k];
    p_.copier.copy(s->user_tx.bytes().subspan(off, b), s->tx_region->bytes().subspan(off, b), b,
                   [s, then = std::move(then)] {
                     ++s->tx_blocks_copied;
                     then();
                   });
  }

  void submit_tx_block(const StatePtr& s) {
    const std::size_t k = s->tx_next_block++;
    auto d = DmaDescriptor::create(s->tx_region, block_offset(s, k), s->tx_sizes[k], DmaDirection::MM2S,
                                   p_.config().max_descriptor_bytes);
    s->result.tx.descriptors_used += 1;
    p_.mm2s.submit_chain(DescriptorChain::create({d}, CompletionPolicy::OnChainEnd));
    s->result.tx.wait_start = p_.sim.now();
  }

  /// CPU is held on entry; copies the next block if any, then releases.
  void start_next_tx_copy(const StatePtr& s) {
    if (s->tx_blocks_copied < s->tx_sizes.size()) {
      copy_tx_block(s, s->tx_blocks_copied, [this] { p_.cpu.release(); });
    } else {
      p_.cpu.release();
    }
  }

  void on_irq(DmaDirection dir) {
    auto s = state_;
    if (!s || s->result.finished) return;
    p_.cpu.acquire([this, s, dir] {
      auto& ch = p_.channel(dir);
      if (dir == DmaDirection::MM2S) {
        if (s->tx_done || ch.state() != ChannelState::Done) {
          p_.cpu.release();
          return;
        }
        if (overlap(s) && s->tx_next_block < s->tx_sizes.size()) {
          // Copy of this block finished before we could take the CPU.
          submit_tx_block(s);
          start_next_tx_copy(s);
          return;
        }
        s->tx_done = true;
        s->result.tx.t_complete = p_.sim.now();
        s->result.tx.hw_complete = ch.completed_at().value_or(p_.sim.now());
        s->result.tx.interrupts_taken = p_.mm2s_irq.handler_entries() - s->tx_irqs_before;
        if (s->job.ordering == Ordering::Sequential && s->job.rx_len > 0) {
          s->result.rx.t_submit = p_.sim.now();
          rx_request(s, [this] { p_.cpu.release(); });
          return;
        }
        p_.cpu.release();
        maybe_finish(s);
        return;
      }
      if (s->rx_done || ch.state() != ChannelState::Done) {
        p_.cpu.release();
        return;
      }
      s->result.rx.hw_complete = ch.completed_at().value_or(p_.sim.now());
      s->result.rx.interrupts_taken = p_.s2mm_irq.handler_entries() - s->rx_irqs_before;
      p_.copier.copy(s->rx_region->bytes(), s->user_rx.bytes(), s->job.rx_len, [this, s] {
        s->rx_done = true;
        s->result.rx.t_complete = p_.sim.now();
        s->result.rx_payload.assign(s->user_rx.bytes().begin(), s->user_rx.bytes().end());
        p_.cpu.release();
        maybe_finish(s);
      });
    });
  }

  void maybe_finish(const StatePtr& s) {
    if (!s->tx_done || !s->rx_done || s->result.finished) return;
    s->finish(p_);
  }

  Platform& p_;
  DriverConfig cfg_;
  ComponentId id_;
  std::shared_ptr<State> state_;
};

inline std::unique_ptr<HostDriver> make_driver(Platform& p, const DriverConfig& cfg) {
  if (cfg.kind == DriverKind::KernelInterrupt) return std::make_unique<KernelDriver>(p, cfg);
  return std::make_unique<UserLevelDriver>(p, cfg);
}

}  // namespace psocsim
