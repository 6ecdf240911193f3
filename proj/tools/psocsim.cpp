#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psocsim/psocsim.hpp"

using namespace psocsim;

namespace {

struct Options {
  std::string config_path;
  std::string driver = "all";
  std::string scheme = "single";
  std::string mode;
  std::uint64_t block_size = 65536;
  std::uint64_t min_size = 8;
  std::uint64_t max_size = 6'291'456;
  std::uint32_t points = 32;
  std::string network;
  std::string out;
  std::string measurements;
};

SimConfig load(const Options& o) { return o.config_path.empty() ? SimConfig{} : load_config(o.config_path); }

std::vector<DriverKind> drivers(const Options& o) {
  if (o.driver == "all") return {std::begin(kAllDrivers), std::end(kAllDrivers)};
  return {*parse_driver_kind(o.driver)};
}

PartitionMode mode(const Options& o, const char* fallback) {
  const std::string m = o.mode.empty() ? fallback : o.mode;
  return m == "unique" ? PartitionMode::unique() : PartitionMode::blocks(o.block_size);
}

BufferScheme scheme(const Options& o) {
  return o.scheme == "double" ? BufferScheme::Double : BufferScheme::Single;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + o.out + "'", "out");
  f << text;
}

int cmd_sweep(const Options& o) {
  SweepSpec spec;
  spec.min_bytes = o.min_size;
  spec.max_bytes = o.max_size;
  spec.points = o.points;
  spec.drivers = drivers(o);
  spec.scheme = scheme(o);
  spec.mode = mode(o, "blocks");
  emit(o, format_sweep_csv(run_sweep(spec, load(o))));
  return 0;
}

int cmd_cnn(const Options& o) {
  if (o.network.empty()) throw ConfigError("cnn needs --network", "network");
  const auto cfg = load(o);
  const auto net = load_network(o.network);
  std::vector<std::pair<DriverKind, FrameReport>> runs;
  int rc = 0;
  for (auto k : drivers(o)) {
    DriverConfig d{k, scheme(o), mode(o, "unique")};
    auto r = run_cnn_frame(net, d, cfg);
    if (!r.error.empty()) {
      std::cerr << "error: " << to_string(k) << ": " << r.error << "\n";
      rc = std::max(rc, 1);
    } else if (r.outcome != RunOutcome::Completed) {
      std::cerr << "error: " << to_string(k) << ": simulation ended with " << to_string(r.outcome) << "\n";
      rc = 2;
    }
    runs.emplace_back(k, std::move(r));
  }
  emit(o, format_cnn_csv(runs));
  return rc;
}

int cmd_calibrate(const Options& o) {
  std::ifstream f(o.measurements, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + o.measurements + "'", "measurements");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto fit = calibrate(parse_measurements(ss.str()));
  emit(o, format_calibration(fit, suggest_overrides(fit, load(o))));
  return 0;
}

int cmd_validate(const Options& o) {
  const auto cfg = load(o);
  std::ostringstream out;
  out << "# resolved configuration\n" << format_config(cfg);
  if (!o.network.empty()) {
    const auto net = load_network(o.network);
    out << "# network " << net.name << "\n";
    out << "layer,input_bytes,kernel_bytes,output_bytes,macs\n";
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      const auto& l = net.layers[i];
      out << i << ',' << l.input_bytes() << ',' << l.kernel_bytes() << ',' << l.output_bytes() << ','
          << l.macs_total() << '\n';
    }
  }
  // Closed-form agreement on a contention-free TX; a mismatch means the
  // timing model and the formula have drifted apart.
  out << "# oracle check\n";
  int rc = 0;
  for (auto k : kAllDrivers) {
    for (std::uint64_t size : {8u, 64u, 512u, 4096u}) {
      const auto run = run_transfer(cfg, DriverConfig{k}, DeviceKind::Sink, tx_only_job(size));
      const auto want = predict_transfer_time(size, k, cfg).total();
      const auto got = run.result.tx.duration();
      out << to_string(k) << ',' << size << ',' << got << ',' << want << ',' << (got == want ? "match" : "MISMATCH")
          << '\n';
      if (got != want) rc = 1;
    }
  }
  emit(o, out.str());
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PS/PL memory transfer simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", o.config_path, "model parameter file")->check(CLI::ExistingFile);
    c->add_option("--out", o.out, "write output here instead of stdout");
  };
  auto add_driver = [&](CLI::App* c) {
    c->add_option("--driver", o.driver)->check(CLI::IsMember({"poll", "scheduled", "kernel", "all"}));
    c->add_option("--scheme", o.scheme)->check(CLI::IsMember({"single", "double"}));
    c->add_option("--mode", o.mode)->check(CLI::IsMember({"unique", "blocks"}));
    c->add_option("--block-size", o.block_size)->check(CLI::PositiveNumber);
  };

  auto* sweep = app.add_subcommand("sweep", "loop-back latency sweep, CSV out");
  add_common(sweep);
  add_driver(sweep);
  sweep->add_option("--min-size", o.min_size)->check(CLI::PositiveNumber);
  sweep->add_option("--max-size", o.max_size)->check(CLI::PositiveNumber);
  sweep->add_option("--points", o.points)->check(CLI::Range(2u, 100000u));

  auto* cnn = app.add_subcommand("cnn", "one CNN frame per driver, CSV out");
  add_common(cnn);
  add_driver(cnn);
  cnn->add_option("--network", o.network)->check(CLI::ExistingFile);

  auto* cal = app.add_subcommand("calibrate", "fit per-driver overhead and slope from measurements");
  add_common(cal);
  cal->add_option("measurements", o.measurements, "CSV with driver,size,time columns")
      ->required()
      ->check(CLI::ExistingFile);

  auto* val = app.add_subcommand("validate", "check config and network files");
  add_common(val);
  val->add_option("--network", o.network)->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (o.min_size > o.max_size) throw ConfigError("--min-size exceeds --max-size", "min-size");
    if (sweep->parsed()) return cmd_sweep(o);
    if (cnn->parsed()) return cmd_cnn(o);
    if (cal->parsed()) return cmd_calibrate(o);
    return cmd_validate(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what();
    if (!e.key().empty()) std::cerr << " (key " << e.key() << ")";
    if (e.line() > 0) std::cerr << " at line " << e.line();
    std::cerr << "\n";
    return 1;
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
