#pragma once

#include <cstdint>
#include <cstring>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psocsim/errors.hpp"
#include "psocsim/ratio.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

using Bytes = std::vector<std::uint8_t>;

/// A contiguous range of DDR in the physical address space. Contents are
/// shared with any user-space mapping of the region.
struct PhysicalRegion {
  std::uint64_t base = 0;
  std::uint64_t length = 0;
  std::shared_ptr<Bytes> contents;

  std::span<std::uint8_t> bytes() { return {contents->data(), contents->size()}; }
  std::span<const std::uint8_t> bytes() const { return {contents->data(), contents->size()}; }
};

using RegionRef = std::shared_ptr<PhysicalRegion>;

/// Bump allocator over the physical address space. Regions never overlap.
class PhysicalMemory {
 public:
  static constexpr std::uint64_t kDefaultCapacity = 1ULL << 30;

  explicit PhysicalMemory(std::uint64_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  RegionRef allocate(std::uint64_t length) {
    if (length == 0 || length > capacity_ - next_) {
      throw LengthOverrun("cannot allocate " + std::to_string(length) + " B of DDR (" +
                          std::to_string(capacity_ - next_) + " B free)");
    }
    auto r = std::make_shared<PhysicalRegion>();
    r->base = next_;
    r->length = length;
    r->contents = std::make_shared<Bytes>(length, 0);
    next_ += length;
    regions_.push_back(r);
    return r;
  }

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t allocated() const { return next_; }
  const std::vector<RegionRef>& regions() const { return regions_; }

 private:
  std::uint64_t capacity_;
  std::uint64_t next_ = 0;
  std::vector<RegionRef> regions_;
};

/// A buffer in the application's virtual address space. A mapped buffer
/// (mmap of device memory) aliases its physical region, so both views are
/// bit-identical by construction; an unmapped buffer needs a CPU copy.
class VirtualBuffer {
 public:
  static VirtualBuffer owned(std::uint64_t id, std::uint64_t length) {
    VirtualBuffer v;
    v.id_ = id;
    v.contents_ = std::make_shared<Bytes>(length, 0);
    return v;
  }

  static VirtualBuffer mapped(std::uint64_t id, RegionRef region) {
    VirtualBuffer v;
    v.id_ = id;
    v.contents_ = region->contents;
    v.mapping_ = std::move(region);
    return v;
  }

  std::uint64_t id() const { return id_; }
  std::uint64_t length() const { return contents_->size(); }
  const RegionRef& mapping() const { return mapping_; }
  bool is_mapped() const { return static_cast<bool>(mapping_); }
  std::span<std::uint8_t> bytes() { return {contents_->data(), contents_->size()}; }
  std::span<const std::uint8_t> bytes() const { return {contents_->data(), contents_->size()}; }

 private:
  std::uint64_t id_ = 0;
  std::shared_ptr<Bytes> contents_;
  RegionRef mapping_;
};

enum class DdrOp : std::uint8_t { Read, Write };

inline const char* to_string(DdrOp op) { return op == DdrOp::Read ? "read" : "write"; }

struct GrantRecord {
  SimTime start;
  SimTime end;
  DdrOp kind;
  ComponentId channel;
};

/// Single-ported DDR controller: one grant at a time, so reads and writes
/// never overlap. Requests arriving in the same instant are arbitrated
/// together; Read (MM2S side) wins ties, and a direction that has taken
/// `max_consecutive_grants` back-to-back grants yields to pending work in the
/// other direction.
class DdrArbiter {
 public:
  using GrantCallback = std::function<void(SimTime start)>;
  using DoneCallback = std::function<void()>;

  DdrArbiter(Simulator& sim, Ratio bandwidth, std::uint64_t max_consecutive_grants)
      : sim_(sim), bandwidth_(bandwidth), max_grants_(max_consecutive_grants) {
    id_ = sim_.add_component("ddr-arbiter");
  }

  DdrArbiter(const DdrArbiter&) = delete;
  DdrArbiter& operator=(const DdrArbiter&) = delete;

  Ratio bandwidth() const { return bandwidth_; }

  /// Queues a grant of ceil(bytes / bandwidth) ns.
  void request(DdrOp kind, ComponentId channel, std::uint64_t bytes, GrantCallback on_grant = {},
               DoneCallback on_done = {}) {
    request_for(kind, channel, bandwidth_.ceil_over(bytes), std::move(on_grant), std::move(on_done));
  }

  /// Queues a grant of an explicit duration.
  void request_for(DdrOp kind, ComponentId channel, Nanos duration, GrantCallback on_grant = {},
                   DoneCallback on_done = {}) {
    auto& q = kind == DdrOp::Read ? reads_ : writes_;
    q.push_back(Pending{channel, duration, std::move(on_grant), std::move(on_done)});
    kick();
  }

  bool busy() const { return busy_; }
  const std::vector<GrantRecord>& grant_log() const { return log_; }
  std::size_t pending_reads() const { return reads_.size(); }
  std::size_t pending_writes() const { return writes_.size(); }

 private:
  struct Pending {
    ComponentId channel;
    Nanos duration;
    GrantCallback on_grant;
    DoneCallback on_done;
  };

  void kick() {
    if (busy_ || arbitration_scheduled_ || (reads_.empty() && writes_.empty())) return;
    arbitration_scheduled_ = true;
    sim_.schedule_in(0, id_, EventKind::DdrArbitrate, [this] { arbitrate(); });
  }

  void arbitrate() {
    arbitration_scheduled_ = false;
    if (busy_ || (reads_.empty() && writes_.empty())) return;
    DdrOp pick;
    if (reads_.empty()) {
      pick = DdrOp::Write;
    } else if (writes_.empty()) {
      pick = DdrOp::Read;
    } else if (streak_ >= max_grants_) {
      pick = streak_kind_ == DdrOp::Read ? DdrOp::Write : DdrOp::Read;
    } else {
      pick = DdrOp::Read;
    }
    if (streak_ > 0 && pick == streak_kind_) {
      ++streak_;
    } else {
      streak_kind_ = pick;
      streak_ = 1;
    }
    auto& q = pick == DdrOp::Read ? reads_ : writes_;
    Pending p = std::move(q.front());
    q.pop_front();
    busy_ = true;
    const SimTime start = sim_.now();
    const SimTime end = start + p.duration;
    log_.push_back(GrantRecord{start, end, pick, p.channel});
    if (p.on_grant) p.on_grant(start);
    sim_.schedule_at(end, id_, EventKind::DdrGrantDone,
                     [this, done = std::move(p.on_done)] {
                       busy_ = false;
                       if (done) done();
                       kick();
                     },
                     static_cast<std::uint64_t>(pick));
  }

  Simulator& sim_;
  ComponentId id_;
  Ratio bandwidth_;
  std::uint64_t max_grants_;
  std::deque<Pending> reads_;
  std::deque<Pending> writes_;
  bool busy_ = false;
  bool arbitration_scheduled_ = false;
  DdrOp streak_kind_ = DdrOp::Read;
  std::uint64_t streak_ = 0;
  std::vector<GrantRecord> log_;
};

enum class FifoDirection : std::uint8_t { ToPL, ToPS };

/// PL-side AXI4-Stream FIFO carrying real payload bytes. Producers may
/// reserve space for an in-flight chunk and commit the bytes later.
/// A blocked producer or consumer registers a one-shot waiter that is woken
/// by a fifo-space-available / data-available event.
class StreamFifo {
 public:
  using Waiter = std::function<void()>;

  StreamFifo(Simulator& sim, std::string name, std::uint64_t capacity, FifoDirection direction)
      : sim_(sim), capacity_(capacity), direction_(direction), ring_(capacity) {
    id_ = sim_.add_component(std::move(name));
  }

  StreamFifo(const StreamFifo&) = delete;
  StreamFifo& operator=(const StreamFifo&) = delete;

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t occupancy() const { return occupancy_; }
  std::uint64_t reserved() const { return reserved_; }
  std::uint64_t free_space() const { return capacity_ - occupancy_ - reserved_; }
  FifoDirection direction() const { return direction_; }
  std::uint64_t total_pushed() const { return pushed_; }
  std::uint64_t total_popped() const { return popped_; }

  /// Accepts up to free_space() bytes; returns the accepted count.
  std::uint64_t push(std::span<const std::uint8_t> data) {
    const std::uint64_t n = std::min<std::uint64_t>(data.size(), free_space());
    write_ring(data.first(n));
    if (n > 0) data_arrived();
    return n;
  }

  /// Removes up to `bytes` from the head, appending them to `out`.
  std::uint64_t pop(std::uint64_t bytes, Bytes& out) {
    const std::uint64_t n = std::min(bytes, occupancy_);
    out.reserve(out.size() + n);
    for (std::uint64_t i = 0; i < n; ++i) {
      out.push_back(ring_[head_]);
      head_ = (head_ + 1) % capacity_;
    }
    occupancy_ -= n;
    popped_ += n;
    if (n > 0) space_freed();
    return n;
  }

  /// Holds `bytes` of free space for a later commit(). Returns false if the
  /// space is not available.
  bool reserve(std::uint64_t bytes) {
    if (bytes > free_space()) return false;
    reserved_ += bytes;
    return true;
  }

  /// Converts a previous reservation into committed data.
  void commit(std::span<const std::uint8_t> data) {
    if (data.size() > reserved_) {
      throw LengthOverrun("fifo commit of " + std::to_string(data.size()) + " B exceeds reservation");
    }
    reserved_ -= data.size();
    write_ring(data);
    if (!data.empty()) data_arrived();
  }

  void on_space(Waiter w) { space_waiter_ = std::move(w); }
  void on_data(Waiter w) { data_waiter_ = std::move(w); }

 private:
  void write_ring(std::span<const std::uint8_t> data) {
    std::uint64_t tail = (head_ + occupancy_) % capacity_;
    for (auto b : data) {
      ring_[tail] = b;
      tail = (tail + 1) % capacity_;
    }
    occupancy_ += data.size();
    pushed_ += data.size();
  }

  void data_arrived() {
    if (!data_waiter_) return;
    auto w = std::move(data_waiter_);
    data_waiter_ = nullptr;
    const auto kind = direction_ == FifoDirection::ToPS ? EventKind::DeviceOutputReady
                                                        : EventKind::FifoDataAvailable;
    sim_.schedule_in(0, id_, kind, std::move(w), occupancy_);
  }

  void space_freed() {
    if (!space_waiter_) return;
    auto w = std::move(space_waiter_);
    space_waiter_ = nullptr;
    sim_.schedule_in(0, id_, EventKind::FifoSpaceAvailable, std::move(w), free_space());
  }

  Simulator& sim_;
  ComponentId id_;
  std::uint64_t capacity_;
  FifoDirection direction_;
  Bytes ring_;
  std::uint64_t head_ = 0;
  std::uint64_t occupancy_ = 0;
  std::uint64_t reserved_ = 0;
  std::uint64_t pushed_ = 0;
  std::uint64_t popped_ = 0;
  Waiter space_waiter_;
  Waiter data_waiter_;
};

/// CPU-mediated memcpy between virtual and physical memory. Takes
/// ceil(bytes / memcpy_bandwidth) ns and occupies DDR as Write grants, issued
/// in burst-sized pieces so DMA traffic can interleave.
class CpuCopier {
 public:
  CpuCopier(Simulator& sim, DdrArbiter& ddr, Ratio memcpy_bandwidth, std::uint64_t piece_bytes)
      : sim_(sim), ddr_(ddr), bandwidth_(memcpy_bandwidth), piece_(piece_bytes) {
    id_ = sim_.add_component("cpu-copy");
  }

  Ratio bandwidth() const { return bandwidth_; }

  void copy(std::span<const std::uint8_t> src, std::span<std::uint8_t> dst, std::uint64_t bytes,
            std::function<void()> on_done) {
    if (bytes > src.size() || bytes > dst.size()) {
      throw LengthOverrun("cpu_copy of " + std::to_string(bytes) + " B exceeds buffer (src " +
                          std::to_string(src.size()) + " B, dst " + std::to_string(dst.size()) +
                          " B)");
    }
    auto job = std::make_shared<Job>(Job{src, dst, bytes, 0, std::move(on_done)});
    if (bytes == 0) {
      sim_.schedule_in(0, id_, EventKind::CpuActivity, [job] {
        if (job->on_done) job->on_done();
      });
      return;
    }
    next_piece(job);
  }

 private:
  struct Job {
    std::span<const std::uint8_t> src;
    std::span<std::uint8_t> dst;
    std::uint64_t total;
    std::uint64_t done;
    std::function<void()> on_done;
  };

  void next_piece(const std::shared_ptr<Job>& job) {
    const std::uint64_t c = std::min(piece_, job->total - job->done);
    const Nanos d = bandwidth_.span(job->done, job->done + c);
    ddr_.request_for(DdrOp::Write, id_, d, {}, [this, job, c] {
      std::memcpy(job->dst.data() + job->done, job->src.data() + job->done, c);
      job->done += c;
      if (job->done == job->total) {
        if (job->on_done) job->on_done();
      } else {
        next_piece(job);
      }
    });
  }

  Simulator& sim_;
  DdrArbiter& ddr_;
  ComponentId id_;
  Ratio bandwidth_;
  std::uint64_t piece_;
};

}  // namespace psocsim
