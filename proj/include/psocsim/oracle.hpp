#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psocsim/config.hpp"
#include "psocsim/drivers.hpp"
#include "psocsim/errors.hpp"

namespace psocsim {

struct PredictedTerm {
  std::string name;
  Nanos ns = 0;
};

struct Prediction {
  std::vector<PredictedTerm> terms;
  Nanos total() const {
    Nanos t = 0;
    for (const auto& x : terms) t += x.ns;
    return t;
  }
};

/// Closed-form TX time for one Unique, single-buffered transfer into a sink
/// that never back-pressures, with nothing else using DDR.
///
///   user poll:      prepare(L) + syscall + setup + P*ceil((fetch + ceil(L/r)) / P)
///   user scheduled: the same plus one scheduler quantum
///   kernel:         prepare(L) + request + ceil(L/memcpy) + fetch + ceil(L/r) + irq
///
/// r is the DMA rate min(ddr, stream), P the poll interval.
inline Prediction predict_transfer_time(std::uint64_t size, DriverKind driver, const SimConfig& c) {
  if (size == 0) throw InvalidDescriptor("transfers are at least 1 byte");
  Prediction p;
  const Nanos prepare = c.prepare_cost_ns_per_byte.ceil_times(size);
  const Nanos data = c.dma_rate().ceil_over(size);
  const Nanos fetch = c.sg_descriptor_fetch_ns;
  p.terms.push_back({"prepare", prepare});
  if (driver == DriverKind::KernelInterrupt) {
    p.terms.push_back({"request", c.kernel_request_overhead_ns});
    p.terms.push_back({"copy", c.memcpy_bandwidth_bpns.ceil_over(size)});
    p.terms.push_back({"fetch", fetch});
    p.terms.push_back({"data", data});
    p.terms.push_back({"irq", c.irq_latency_ns});
    return p;
  }
  const Nanos poll = c.poll_interval_ns;
  const Nanos hw = fetch + data;
  const Nanos observed = (hw + poll - 1) / poll * poll;
  p.terms.push_back({"syscall", c.syscall_overhead_ns});
  p.terms.push_back({"setup", c.dma_setup_ns});
  p.terms.push_back({"fetch", fetch});
  p.terms.push_back({"data", data});
  p.terms.push_back({"poll", observed - hw});
  if (driver == DriverKind::UserScheduled) p.terms.push_back({"schedule", c.sched_quantum_ns});
  return p;
}

}  // namespace psocsim
