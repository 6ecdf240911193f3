#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "psocsim/config.hpp"
#include "psocsim/drivers.hpp"
#include "psocsim/errors.hpp"
#include "psocsim/runner.hpp"

namespace psocsim {

struct SweepSpec {
  std::uint64_t min_bytes = 8;
  std::uint64_t max_bytes = 6'291'456;
  std::uint32_t points = 32;
  std::vector<DriverKind> drivers{std::begin(kAllDrivers), std::end(kAllDrivers)};
  BufferScheme scheme = BufferScheme::Single;
  PartitionMode mode = PartitionMode::blocks(65536);

  void validate() const {
    if (min_bytes == 0) throw InvalidValue("min size must be >= 1", "min_size", 0);
    if (min_bytes > max_bytes) throw InvalidValue("min size exceeds max size", "min_size", 0);
    if (points < 2) throw InvalidValue("need at least 2 points", "points", 0);
    if (drivers.empty()) throw InvalidValue("no drivers selected", "driver", 0);
  }
};

/// Log-spaced sizes between min and max, rounded to 8-byte words, deduplicated.
inline std::vector<std::uint64_t> sweep_sizes(const SweepSpec& spec) {
  spec.validate();
  std::vector<std::uint64_t> out;
  const double lo = std::log(static_cast<double>(spec.min_bytes));
  const double hi = std::log(static_cast<double>(spec.max_bytes));
  for (std::uint32_t i = 0; i < spec.points; ++i) {
    const double x = std::exp(lo + (hi - lo) * i / (spec.points - 1));
    auto s = static_cast<std::uint64_t>(std::llround(x / 8.0)) * 8;
    out.push_back(std::max<std::uint64_t>(s, 8));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct BenchRecord {
  std::string driver;
  std::string scheme;
  std::string mode;
  std::uint64_t size_bytes = 0;
  Nanos tx_ns = 0;
  Nanos rx_ns = 0;
  Nanos total_ns = 0;
  double tx_ns_per_byte = 0;
  double rx_ns_per_byte = 0;
  std::uint64_t descriptors = 0;
  std::uint64_t interrupts = 0;
  std::uint64_t poll_ticks = 0;
  Nanos cpu_busy_ns = 0;
  std::string outcome = "ok";

  bool operator==(const BenchRecord&) const = default;
};

inline constexpr const char* kBenchHeader =
    "driver,scheme,mode,size_bytes,tx_ns,rx_ns,total_ns,tx_ns_per_byte,rx_ns_per_byte,"
    "descriptors,interrupts,poll_ticks,cpu_busy_ns,outcome";

inline std::string format_sig4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string to_csv_row(const BenchRecord& r) {
  std::ostringstream o;
  o << r.driver << ',' << r.scheme << ',' << r.mode << ',' << r.size_bytes << ',' << r.tx_ns << ','
    << r.rx_ns << ',' << r.total_ns << ',' << format_sig4(r.tx_ns_per_byte) << ','
    << format_sig4(r.rx_ns_per_byte) << ',' << r.descriptors << ',' << r.interrupts << ','
    << r.poll_ticks << ',' << r.cpu_busy_ns << ',' << r.outcome;
  return o.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Parses one data row. Per-byte columns are read back as printed.
inline BenchRecord parse_csv_row(const std::string& line) {
  auto f = split_csv(line);
  if (f.size() != 14) throw ParseError("expected 14 columns, got " + std::to_string(f.size()));
  auto u = [&](std::size_t i) -> std::uint64_t {
    try {
      std::size_t pos = 0;
      auto v = std::stoull(f[i], &pos);
      if (pos != f[i].size()) throw ParseError("bad integer '" + f[i] + "'");
      return v;
    } catch (const std::logic_error&) {
      throw ParseError("bad integer '" + f[i] + "'");
    }
  };
  BenchRecord r;
  r.driver = f[0];
  r.scheme = f[1];
  r.mode = f[2];
  r.size_bytes = u(3);
  r.tx_ns = u(4);
  r.rx_ns = u(5);
  r.total_ns = u(6);
  r.tx_ns_per_byte = std::stod(f[7]);
  r.rx_ns_per_byte = std::stod(f[8]);
  r.descriptors = u(9);
  r.interrupts = u(10);
  r.poll_ticks = u(11);
  r.cpu_busy_ns = u(12);
  r.outcome = f[13];
  return r;
}

inline BenchRecord make_record(const DriverConfig& d, std::uint64_t size, const TransferRun& run) {
  BenchRecord r;
  r.driver = to_string(d.kind);
  r.scheme = to_string(d.scheme);
  r.mode = d.mode.name();
  r.size_bytes = size;
  r.outcome = to_string(run.outcome);
  const auto& j = run.result;
  if (run.outcome == RunOutcome::Completed) {
    r.tx_ns = j.tx.duration();
    r.rx_ns = j.rx.duration();
    r.total_ns = j.total_ns();
  }
  r.tx_ns_per_byte = static_cast<double>(r.tx_ns) / static_cast<double>(size);
  r.rx_ns_per_byte = static_cast<double>(r.rx_ns) / static_cast<double>(size);
  r.descriptors = j.tx.descriptors_used + j.rx.descriptors_used;
  r.interrupts = j.tx.interrupts_taken + j.rx.interrupts_taken;
  r.poll_ticks = j.tx.poll_ticks_consumed + j.rx.poll_ticks_consumed;
  r.cpu_busy_ns = j.cpu_busy_ns;
  return r;
}

/// One loop-back transfer per (driver, size). Points run on worker threads;
/// records come back in (driver, size) order.
inline std::vector<BenchRecord> run_sweep(const SweepSpec& spec, const SimConfig& cfg,
                                          unsigned threads = 0) {
  const auto sizes = sweep_sizes(spec);
  struct Point {
    DriverConfig d;
    std::uint64_t size;
  };
  std::vector<Point> points;
  for (auto k : spec.drivers) {
    for (auto s : sizes) points.push_back({DriverConfig{k, spec.scheme, spec.mode}, s});
  }
  std::vector<BenchRecord> out(points.size());
  std::vector<std::string> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        auto run = run_transfer(cfg, points[i].d, DeviceKind::Loopback, loopback_job(points[i].size));
        out[i] = make_record(points[i].d, points[i].size, run);
      } catch (const SimError& e) {
        errors[i] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(points.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw SimError(e);
  }
  return out;
}

/// Smallest sweep size from which kernel per-byte total time never exceeds
/// the scheduled user-level driver's at any larger size.
inline std::optional<std::uint64_t> find_crossover(const std::vector<BenchRecord>& records) {
  std::map<std::uint64_t, Nanos> kernel, sched;
  for (const auto& r : records) {
    if (r.outcome != "ok") continue;
    if (r.driver == "kernel") kernel[r.size_bytes] = r.total_ns;
    if (r.driver == "scheduled") sched[r.size_bytes] = r.total_ns;
  }
  std::vector<std::uint64_t> sizes;
  for (const auto& [s, t] : kernel) {
    if (sched.count(s)) sizes.push_back(s);
  }
  std::optional<std::uint64_t> best;
  for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
    // Same size on both sides, so per-byte comparison reduces to totals.
    if (kernel[*it] > sched[*it]) break;
    best = *it;
  }
  return best;
}

inline std::string format_sweep_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream o;
  o << kBenchHeader << '\n';
  for (const auto& r : records) o << to_csv_row(r) << '\n';
  if (auto s = find_crossover(records)) {
    o << "# crossover_bytes=" << *s << '\n';
  } else {
    o << "# crossover_bytes=none\n";
  }
  return o.str();
}

/// Data rows of a sweep CSV; comment lines and the header are skipped.
inline std::vector<BenchRecord> parse_sweep_csv(const std::string& text) {
  std::vector<BenchRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == kBenchHeader) continue;
    out.push_back(parse_csv_row(line));
  }
  return out;
}

}  // namespace psocsim
