#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "psocsim/bench.hpp"
#include "psocsim/config.hpp"
#include "psocsim/errors.hpp"
#include "psocsim/runner.hpp"

namespace psocsim {

struct MeasuredPoint {
  std::string driver;
  double size_bytes = 0;
  double time_ns = 0;
};

struct LineFit {
  std::string driver;
  double intercept_ns = 0;
  double slope_ns_per_byte = 0;
  /// Root-mean-square residual in ns.
  double residual = 0;
  std::size_t points = 0;
};

struct CalibrationFit {
  std::vector<LineFit> drivers;  // ordered by driver name

  const LineFit* find(const std::string& name) const {
    for (const auto& f : drivers) {
      if (f.driver == name) return &f;
    }
    return nullptr;
  }
};

/// Reads `driver,size,time` rows. The header names the columns; size may be
/// `size_bytes` or `size`, time one of `total_ns`, `time_ns`, `tx_ns`.
inline std::vector<MeasuredPoint> parse_measurements(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int c_driver = -1, c_size = -1, c_time = -1;
  std::vector<MeasuredPoint> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv(line);
    if (c_driver < 0) {
      for (int i = 0; i < static_cast<int>(f.size()); ++i) {
        const auto& h = f[i];
        if (h == "driver") c_driver = i;
        if (h == "size_bytes" || h == "size") c_size = i;
        if (c_time < 0 && (h == "total_ns" || h == "time_ns" || h == "tx_ns")) c_time = i;
      }
      if (c_driver < 0 || c_size < 0 || c_time < 0) {
        throw ParseError("measurement header needs driver, size and time columns", "", lineno);
      }
      continue;
    }
    const int need = std::max({c_driver, c_size, c_time});
    if (static_cast<int>(f.size()) <= need) throw ParseError("short measurement row", "", lineno);
    try {
      out.push_back({f[c_driver], std::stod(f[c_size]), std::stod(f[c_time])});
    } catch (const std::logic_error&) {
      throw ParseError("non-numeric measurement", "", lineno);
    }
  }
  return out;
}

inline LineFit fit_line(const std::string& driver, const std::vector<MeasuredPoint>& pts) {
  std::map<double, int> distinct;
  for (const auto& p : pts) distinct[p.size_bytes]++;
  if (distinct.size() < 2) {
    throw InsufficientPoints("driver '" + driver + "' needs at least 2 distinct sizes, got " +
                             std::to_string(distinct.size()));
  }
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto& p : pts) {
    sx += p.size_bytes;
    sy += p.time_ns;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    sxx += (p.size_bytes - mx) * (p.size_bytes - mx);
    sxy += (p.size_bytes - mx) * (p.time_ns - my);
  }
  LineFit f;
  f.driver = driver;
  f.points = pts.size();
  f.slope_ns_per_byte = sxy / sxx;
  f.intercept_ns = my - f.slope_ns_per_byte * mx;
  double ss = 0;
  for (const auto& p : pts) {
    const double e = p.time_ns - (f.intercept_ns + f.slope_ns_per_byte * p.size_bytes);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

inline CalibrationFit calibrate(const std::vector<MeasuredPoint>& points) {
  std::map<std::string, std::vector<MeasuredPoint>> by;
  for (const auto& p : points) by[p.driver].push_back(p);
  if (by.empty()) throw InsufficientPoints("no measurements");
  CalibrationFit fit;
  for (const auto& [name, pts] : by) fit.drivers.push_back(fit_line(name, pts));
  return fit;
}

struct Suggestion {
  std::string key;
  std::string value;
  std::string basis;
};

inline std::string decimal(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find('.') == std::string::npos) return s;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

/// Config values that reproduce the fitted lines under the closed-form model.
/// Slopes: poll = 1/stream + prepare, kernel - poll = 1/memcpy.
/// Intercepts: scheduled - poll = quantum, kernel - poll = request + irq - syscall - setup.
inline std::vector<Suggestion> suggest_overrides(const CalibrationFit& fit, const SimConfig& cfg) {
  std::vector<Suggestion> out;
  const auto* poll = fit.find("poll");
  const auto* sched = fit.find("scheduled");
  const auto* kern = fit.find("kernel");
  if (poll) {
    const double prepare = cfg.prepare_cost_ns_per_byte.to_double();
    const double per_byte = poll->slope_ns_per_byte - prepare;
    if (per_byte > 0) {
      const double mhz = 1000.0 * 8.0 / (cfg.stream_width_bits * per_byte);
      out.push_back({"stream_clock_mhz", decimal(mhz, 3), "poll slope minus prepare cost"});
    }
  }
  if (poll && sched) {
    const double q = sched->intercept_ns - poll->intercept_ns;
    if (q > 0) out.push_back({"sched_quantum_ns", decimal(std::round(q), 0), "scheduled minus poll intercept"});
  }
  if (poll && kern) {
    const double d = kern->slope_ns_per_byte - poll->slope_ns_per_byte;
    if (d > 0) out.push_back({"memcpy_bandwidth_bpns", decimal(1.0 / d), "kernel minus poll slope"});
    const double user_fixed = static_cast<double>(cfg.syscall_overhead_ns + cfg.dma_setup_ns);
    const double req = kern->intercept_ns - poll->intercept_ns + user_fixed - static_cast<double>(cfg.irq_latency_ns);
    if (req > 0) {
      out.push_back({"kernel_request_overhead_ns", decimal(std::round(req), 0), "kernel minus poll intercept"});
    }
  }
  return out;
}

inline std::string format_calibration(const CalibrationFit& fit, const std::vector<Suggestion>& s) {
  std::ostringstream o;
  o << "driver,intercept_ns,slope_ns_per_byte,residual_ns,points\n";
  for (const auto& f : fit.drivers) {
    o << f.driver << ',' << decimal(f.intercept_ns, 3) << ',' << decimal(f.slope_ns_per_byte, 6) << ','
      << decimal(f.residual, 3) << ',' << f.points << '\n';
  }
  o << "# suggested overrides\n";
  for (const auto& x : s) o << x.key << " = " << x.value << "  # " << x.basis << '\n';
  return o.str();
}

// ---------------------------------------------------------------------------
// CNN frame CSV

inline constexpr const char* kCnnHeader =
    "driver,row,tx_bytes,rx_bytes,tx_ns,rx_ns,frame_ms,tx_us_per_byte,rx_us_per_byte,outcome";

inline std::string frame_outcome(const FrameReport& r) {
  if (!r.error.empty()) return "error";
  return to_string(r.outcome);
}

inline std::string format_cnn_csv(const std::vector<std::pair<DriverKind, FrameReport>>& runs) {
  std::ostringstream o;
  o << kCnnHeader << '\n';
  for (const auto& [kind, r] : runs) {
    const std::string out = frame_outcome(r);
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
      const auto& l = r.layers[i];
      o << to_string(kind) << ",layer" << i << ',' << l.tx_bytes << ',' << l.rx_bytes << ',' << l.tx_ns
        << ',' << l.rx_ns << ",," << format_sig4(l.tx_ns / 1000.0 / l.tx_bytes) << ','
        << format_sig4(l.rx_ns / 1000.0 / l.rx_bytes) << ',' << out << '\n';
    }
    o << to_string(kind) << ",total," << r.tx_bytes << ',' << r.rx_bytes << ',' << r.tx_ns << ','
      << r.rx_ns << ',' << format_sig4(r.frame_ns / 1e6) << ',' << format_sig4(r.tx_ns_per_byte() / 1000.0)
      << ',' << format_sig4(r.rx_ns_per_byte() / 1000.0) << ',' << out << '\n';
  }
  return o.str();
}

}  // namespace psocsim
