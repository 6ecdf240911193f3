#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "psocsim/errors.hpp"
#include "psocsim/ratio.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

/// Full simulation configuration. Defaults are the uncalibrated desk values;
/// every field maps 1:1 onto a config-file key of the same name.
struct SimConfig {
  // memory / bus
  Ratio ddr_bandwidth_bpns{4};
  Ratio memcpy_bandwidth_bpns{8};
  std::uint64_t stream_width_bits = 64;
  Ratio stream_clock_mhz{100};
  std::uint64_t burst_bytes = 1024;
  std::uint64_t max_descriptor_bytes = 8'388'608;
  Nanos sg_descriptor_fetch_ns = 100;
  std::uint64_t tx_fifo_bytes = 4096;
  std::uint64_t rx_fifo_bytes = 4096;
  // software costs
  Nanos syscall_overhead_ns = 400;
  Nanos dma_setup_ns = 300;
  Nanos poll_interval_ns = 200;
  Nanos sched_quantum_ns = 10'000;
  Nanos irq_latency_ns = 2'000;
  Nanos kernel_request_overhead_ns = 15'000;
  Ratio prepare_cost_ns_per_byte{1, 2};
  bool kernel_copy_overlap = false;
  std::uint64_t arbiter_max_grants = 16;
  // accelerator
  std::uint64_t rows_latency = 2;
  std::uint64_t mac_count = 128;
  Ratio mac_utilization{3, 4};
  // run control
  std::uint64_t deadlock_poll_window = 1000;
  Ratio watchdog_s{60};

  /// AXI4-Stream payload rate in bytes/ns: width/8 * clock.
  Ratio stream_rate() const {
    return Ratio(stream_width_bits, 8) * stream_clock_mhz * Ratio(1, 1000);
  }

  /// Rate one DMA channel moves payload when nothing else interferes.
  Ratio dma_rate() const { return min_rate(ddr_bandwidth_bpns, stream_rate()); }

  /// Accelerator MAC throughput in MACs/ns.
  Ratio mac_rate() const {
    return Ratio(mac_count) * stream_clock_mhz * Ratio(1, 1000) * mac_utilization;
  }

  WatchdogSpec watchdog() const {
    return WatchdogSpec{watchdog_s.floor_times(1'000'000'000ULL), deadlock_poll_window};
  }
};

inline constexpr std::array<std::string_view, 23> kConfigKeys = {
    "ddr_bandwidth_bpns",   "memcpy_bandwidth_bpns", "stream_width_bits",
    "stream_clock_mhz",     "burst_bytes",           "max_descriptor_bytes",
    "sg_descriptor_fetch_ns", "tx_fifo_bytes",       "rx_fifo_bytes",
    "syscall_overhead_ns",  "dma_setup_ns",          "poll_interval_ns",
    "sched_quantum_ns",     "irq_latency_ns",        "kernel_request_overhead_ns",
    "prepare_cost_ns_per_byte", "kernel_copy_overlap", "arbiter_max_grants",
    "rows_latency",         "mac_count",             "mac_utilization",
    "deadlock_poll_window", "watchdog_s",
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view v, int line) {
  auto r = Ratio::parse_decimal(v);
  if (!r || r->den() != 1) {
    throw InvalidValue(std::string(key) + ": expected a non-negative integer, got '" +
                           std::string(v) + "' (line " + std::to_string(line) + ")",
                       std::string(key), line);
  }
  return r->num();
}

inline Ratio parse_ratio(std::string_view key, std::string_view v, int line) {
  auto r = Ratio::parse_decimal(v);
  if (!r) {
    throw InvalidValue(std::string(key) + ": expected a non-negative decimal, got '" +
                           std::string(v) + "' (line " + std::to_string(line) + ")",
                       std::string(key), line);
  }
  return *r;
}

inline bool parse_bool(std::string_view key, std::string_view v, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidValue(std::string(key) + ": expected true/false, got '" + std::string(v) +
                         "' (line " + std::to_string(line) + ")",
                     std::string(key), line);
}

}  // namespace detail

/// Applies one `key = value` assignment. Throws UnknownKey / InvalidValue.
inline void apply_config_value(SimConfig& c, std::string_view key, std::string_view v, int line = 0) {
  using detail::parse_bool;
  using detail::parse_ratio;
  using detail::parse_uint;
  if (key == "ddr_bandwidth_bpns") c.ddr_bandwidth_bpns = parse_ratio(key, v, line);
  else if (key == "memcpy_bandwidth_bpns") c.memcpy_bandwidth_bpns = parse_ratio(key, v, line);
  else if (key == "stream_width_bits") c.stream_width_bits = parse_uint(key, v, line);
  else if (key == "stream_clock_mhz") c.stream_clock_mhz = parse_ratio(key, v, line);
  else if (key == "burst_bytes") c.burst_bytes = parse_uint(key, v, line);
  else if (key == "max_descriptor_bytes") c.max_descriptor_bytes = parse_uint(key, v, line);
  else if (key == "sg_descriptor_fetch_ns") c.sg_descriptor_fetch_ns = parse_uint(key, v, line);
  else if (key == "tx_fifo_bytes") c.tx_fifo_bytes = parse_uint(key, v, line);
  else if (key == "rx_fifo_bytes") c.rx_fifo_bytes = parse_uint(key, v, line);
  else if (key == "syscall_overhead_ns") c.syscall_overhead_ns = parse_uint(key, v, line);
  else if (key == "dma_setup_ns") c.dma_setup_ns = parse_uint(key, v, line);
  else if (key == "poll_interval_ns") c.poll_interval_ns = parse_uint(key, v, line);
  else if (key == "sched_quantum_ns") c.sched_quantum_ns = parse_uint(key, v, line);
  else if (key == "irq_latency_ns") c.irq_latency_ns = parse_uint(key, v, line);
  else if (key == "kernel_request_overhead_ns") c.kernel_request_overhead_ns = parse_uint(key, v, line);
  else if (key == "prepare_cost_ns_per_byte") c.prepare_cost_ns_per_byte = parse_ratio(key, v, line);
  else if (key == "kernel_copy_overlap") c.kernel_copy_overlap = parse_bool(key, v, line);
  else if (key == "arbiter_max_grants") c.arbiter_max_grants = parse_uint(key, v, line);
  else if (key == "rows_latency") c.rows_latency = parse_uint(key, v, line);
  else if (key == "mac_count") c.mac_count = parse_uint(key, v, line);
  else if (key == "mac_utilization") c.mac_utilization = parse_ratio(key, v, line);
  else if (key == "deadlock_poll_window") c.deadlock_poll_window = parse_uint(key, v, line);
  else if (key == "watchdog_s") c.watchdog_s = parse_ratio(key, v, line);
  else {
    throw UnknownKey("unknown config key '" + std::string(key) + "' (line " +
                         std::to_string(line) + ")",
                     std::string(key), line);
  }
}

/// Range checks that span the whole configuration.
inline void validate_config(const SimConfig& c) {
  auto bad = [](const char* key, const std::string& why) {
    throw InvalidValue(std::string(key) + ": " + why, key, 0);
  };
  if (c.ddr_bandwidth_bpns.is_zero()) bad("ddr_bandwidth_bpns", "must be > 0");
  if (c.memcpy_bandwidth_bpns.is_zero()) bad("memcpy_bandwidth_bpns", "must be > 0");
  if (c.stream_width_bits == 0 || c.stream_width_bits % 8 != 0)
    bad("stream_width_bits", "must be a positive multiple of 8");
  if (c.stream_clock_mhz.is_zero()) bad("stream_clock_mhz", "must be > 0");
  if (c.burst_bytes == 0) bad("burst_bytes", "must be >= 1");
  if (c.max_descriptor_bytes == 0) bad("max_descriptor_bytes", "must be >= 1");
  if (c.tx_fifo_bytes == 0) bad("tx_fifo_bytes", "capacity must be >= 1");
  if (c.rx_fifo_bytes == 0) bad("rx_fifo_bytes", "capacity must be >= 1");
  if (c.poll_interval_ns == 0) bad("poll_interval_ns", "must be >= 1");
  if (c.arbiter_max_grants == 0) bad("arbiter_max_grants", "must be >= 1");
  if (c.rows_latency == 0) bad("rows_latency", "must be >= 1");
  if (c.mac_count == 0) bad("mac_count", "must be >= 1");
  if (c.mac_utilization.is_zero() || Ratio(1) < c.mac_utilization)
    bad("mac_utilization", "must be in (0, 1]");
  if (c.deadlock_poll_window == 0) bad("deadlock_poll_window", "must be >= 1");
  if (c.watchdog_s.is_zero()) bad("watchdog_s", "must be > 0");
}

/// Parses flat `key = value` text with `#` comments. Missing keys keep their
/// defaults; unknown or repeated keys are errors.
inline SimConfig parse_config(std::string_view text) {
  SimConfig c;
  std::array<bool, kConfigKeys.size()> seen{};
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                           std::string(line) + "'",
                       "", line_no);
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty key or value", std::string(key),
                       line_no);
    }
    for (std::size_t i = 0; i < kConfigKeys.size(); ++i) {
      if (kConfigKeys[i] == key) {
        if (seen[i]) {
          throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" +
                               std::string(key) + "'",
                           std::string(key), line_no);
        }
        seen[i] = true;
      }
    }
    apply_config_value(c, key, value, line_no);
  }
  validate_config(c);
  return c;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'", "", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Renders the configuration back into the file format, one key per line.
inline std::string format_config(const SimConfig& c) {
  std::ostringstream o;
  o << "ddr_bandwidth_bpns = " << c.ddr_bandwidth_bpns.to_string() << "\n"
    << "memcpy_bandwidth_bpns = " << c.memcpy_bandwidth_bpns.to_string() << "\n"
    << "stream_width_bits = " << c.stream_width_bits << "\n"
    << "stream_clock_mhz = " << c.stream_clock_mhz.to_string() << "\n"
    << "burst_bytes = " << c.burst_bytes << "\n"
    << "max_descriptor_bytes = " << c.max_descriptor_bytes << "\n"
    << "sg_descriptor_fetch_ns = " << c.sg_descriptor_fetch_ns << "\n"
    << "tx_fifo_bytes = " << c.tx_fifo_bytes << "\n"
    << "rx_fifo_bytes = " << c.rx_fifo_bytes << "\n"
    << "syscall_overhead_ns = " << c.syscall_overhead_ns << "\n"
    << "dma_setup_ns = " << c.dma_setup_ns << "\n"
    << "poll_interval_ns = " << c.poll_interval_ns << "\n"
    << "sched_quantum_ns = " << c.sched_quantum_ns << "\n"
    << "irq_latency_ns = " << c.irq_latency_ns << "\n"
    << "kernel_request_overhead_ns = " << c.kernel_request_overhead_ns << "\n"
    << "prepare_cost_ns_per_byte = " << c.prepare_cost_ns_per_byte.to_string() << "\n"
    << "kernel_copy_overlap = " << (c.kernel_copy_overlap ? "true" : "false") << "\n"
    << "arbiter_max_grants = " << c.arbiter_max_grants << "\n"
    << "rows_latency = " << c.rows_latency << "\n"
    << "mac_count = " << c.mac_count << "\n"
    << "mac_utilization = " << c.mac_utilization.to_string() << "\n"
    << "deadlock_poll_window = " << c.deadlock_poll_window << "\n"
    << "watchdog_s = " << c.watchdog_s.to_string() << "\n";
  return o.str();
}

}  // namespace psocsim
