#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "psocsim/errors.hpp"

namespace psocsim {

/// Duration in simulated nanoseconds.
using Nanos = std::uint64_t;

/// Absolute simulated time, 1 ns resolution, zero at simulation start.
struct SimTime {
  std::uint64_t ns = 0;

  constexpr auto operator<=>(const SimTime&) const = default;
  constexpr SimTime operator+(Nanos d) const { return SimTime{ns + d}; }
  constexpr Nanos operator-(SimTime other) const { return ns - other.ns; }
};

enum class EventKind : std::uint8_t {
  DescriptorComplete,
  FifoSpaceAvailable,
  PollTick,
  IrqRaised,
  SchedQuantum,
  DeviceOutputReady,
  // Internal plumbing kinds; none of them count as idle polling.
  DescriptorFetched,
  ChunkDone,
  DdrArbitrate,
  DdrGrantDone,
  CpuActivity,
  FifoDataAvailable,
  DeviceStep,
  Driver,
};

const char* to_string(EventKind kind);

using ComponentId = std::uint32_t;

struct SimEvent {
  SimTime fire_at;
  ComponentId target = 0;
  EventKind kind = EventKind::Driver;
  std::uint64_t payload = 0;
  std::uint64_t seq = 0;
  std::function<void()> action;
};

/// Min-heap on (fire_at, insertion sequence); equal timestamps pop FIFO.
class EventQueue {
 public:
  void push(SimEvent ev) {
    heap_.push_back(std::move(ev));
    std::push_heap(heap_.begin(), heap_.end(), later);
  }

  SimEvent pop() {
    std::pop_heap(heap_.begin(), heap_.end(), later);
    SimEvent ev = std::move(heap_.back());
    heap_.pop_back();
    return ev;
  }

  const SimEvent& top() const { return heap_.front(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  static bool later(const SimEvent& a, const SimEvent& b) {
    if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
    return a.seq > b.seq;
  }
  std::vector<SimEvent> heap_;
};

enum class RunOutcome { Completed, Deadlock, WatchdogExpired };

const char* to_string(RunOutcome outcome);

struct WatchdogSpec {
  Nanos limit_ns = 60'000'000'000ULL;
  std::uint64_t deadlock_poll_window = 1000;
};

struct TraceEntry {
  SimTime at;
  ComponentId target;
  EventKind kind;
  std::uint64_t payload;
  auto operator<=>(const TraceEntry&) const = default;
};

class Simulator {
 public:
  using Handler = std::function<void(const SimEvent&)>;

  Simulator() { names_.push_back("sim"); handlers_.emplace_back(); }

  ComponentId add_component(std::string name, Handler handler = {}) {
    names_.push_back(std::move(name));
    handlers_.push_back(std::move(handler));
    return static_cast<ComponentId>(names_.size() - 1);
  }

  const std::string& component_name(ComponentId id) const { return names_.at(id); }

  SimTime now() const { return now_; }

  void schedule(SimEvent ev) {
    if (ev.fire_at < now_) {
      throw SchedulingInPast("event " + std::string(to_string(ev.kind)) + " for '" +
                             component_name(ev.target) + "' at " + std::to_string(ev.fire_at.ns) +
                             " ns scheduled at now=" + std::to_string(now_.ns) + " ns");
    }
    ev.seq = next_seq_++;
    if (!is_idle_kind(ev.kind)) ++pending_busy_;
    queue_.push(std::move(ev));
  }

  void schedule_at(SimTime at, ComponentId target, EventKind kind, std::function<void()> action,
                   std::uint64_t payload = 0) {
    schedule(SimEvent{at, target, kind, payload, 0, std::move(action)});
  }

  void schedule_in(Nanos delay, ComponentId target, EventKind kind, std::function<void()> action,
                   std::uint64_t payload = 0) {
    schedule_at(now_ + delay, target, kind, std::move(action), payload);
  }

  /// Payload bytes moved anywhere in the model; feeds deadlock detection.
  void note_progress(std::uint64_t bytes) { progress_ += bytes; }
  std::uint64_t progress() const { return progress_; }

  /// Outstanding-work accounting: a run with work still open when nothing can
  /// move is a deadlock, not a completion.
  void begin_work() { ++outstanding_; }
  void end_work() {
    if (outstanding_ > 0) --outstanding_;
  }
  std::uint64_t outstanding_work() const { return outstanding_; }

  void enable_trace(bool on = true) { tracing_ = on; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

  /// FNV-1a over the delivered-event trace (requires tracing).
  std::uint64_t trace_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& t : trace_) {
      mix(t.at.ns);
      mix(t.target);
      mix(static_cast<std::uint64_t>(t.kind));
      mix(t.payload);
    }
    return h;
  }

  std::uint64_t events_delivered() const { return delivered_; }

  /// Delivers events until the queue drains, a deadlock is detected, or the
  /// watchdog bound is passed.
  ///
  /// Deadlock: outstanding work exists and either the queue is empty, or the
  /// last `deadlock_poll_window` delivered events were all poll ticks /
  /// scheduler quanta with zero payload progress between them and nothing
  /// else was queued behind them.
  RunOutcome run_until_quiescent(const WatchdogSpec& watchdog = {}) {
    std::uint64_t idle_streak = 0;
    const SimTime limit{watchdog.limit_ns};
    while (!queue_.empty()) {
      if (queue_.top().fire_at > limit) {
        now_ = limit;
        return RunOutcome::WatchdogExpired;
      }
      SimEvent ev = queue_.pop();
      now_ = ev.fire_at;
      ++delivered_;
      if (tracing_) trace_.push_back(TraceEntry{ev.fire_at, ev.target, ev.kind, ev.payload});
      const bool idle_kind = is_idle_kind(ev.kind);
      if (!idle_kind) --pending_busy_;
      const std::uint64_t before = progress_;
      if (ev.action) {
        ev.action();
      } else if (ev.target < handlers_.size() && handlers_[ev.target]) {
        handlers_[ev.target](ev);
      }
      if (idle_kind && progress_ == before && pending_busy_ == 0) {
        ++idle_streak;
      } else {
        idle_streak = 0;
      }
      if (outstanding_ > 0 && idle_streak >= watchdog.deadlock_poll_window) {
        return RunOutcome::Deadlock;
      }
    }
    return outstanding_ > 0 ? RunOutcome::Deadlock : RunOutcome::Completed;
  }

 private:
  SimTime now_{};
  EventQueue queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t progress_ = 0;
  std::uint64_t outstanding_ = 0;
  std::uint64_t pending_busy_ = 0;  // queued events other than poll ticks / quanta

  static bool is_idle_kind(EventKind k) { return k == EventKind::PollTick || k == EventKind::SchedQuantum; }
  std::uint64_t delivered_ = 0;
  bool tracing_ = false;
  std::vector<TraceEntry> trace_;
  std::vector<std::string> names_;
  std::vector<Handler> handlers_;
};

inline const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::DescriptorComplete: return "descriptor-complete";
    case EventKind::FifoSpaceAvailable: return "fifo-space-available";
    case EventKind::PollTick: return "poll-tick";
    case EventKind::IrqRaised: return "irq-raised";
    case EventKind::SchedQuantum: return "sched-quantum";
    case EventKind::DeviceOutputReady: return "device-output-ready";
    case EventKind::DescriptorFetched: return "descriptor-fetched";
    case EventKind::ChunkDone: return "chunk-done";
    case EventKind::DdrArbitrate: return "ddr-arbitrate";
    case EventKind::DdrGrantDone: return "ddr-grant-done";
    case EventKind::CpuActivity: return "cpu-activity";
    case EventKind::FifoDataAvailable: return "fifo-data-available";
    case EventKind::DeviceStep: return "device-step";
    case EventKind::Driver: return "driver";
  }
  return "?";
}

inline const char* to_string(RunOutcome outcome) {
  switch (outcome) {
    case RunOutcome::Completed: return "ok";
    case RunOutcome::Deadlock: return "deadlock";
    case RunOutcome::WatchdogExpired: return "watchdog";
  }
  return "?";
}

}  // namespace psocsim
