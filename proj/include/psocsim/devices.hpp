#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "psocsim/errors.hpp"
#include "psocsim/memory.hpp"
#include "psocsim/ratio.hpp"
#include "psocsim/sim.hpp"

namespace psocsim {

/// PL-side workload attached to the MM2S (ToPL) and S2MM (ToPS) FIFOs.
class StreamDevice {
 public:
  virtual ~StreamDevice() = default;
  virtual void attach(StreamFifo& to_pl, StreamFifo& to_ps) = 0;
};

/// Swallows everything at zero cost. Used for contention-free TX timing.
class SinkDevice final : public StreamDevice {
 public:
  explicit SinkDevice(Simulator& sim) : sim_(sim) { id_ = sim_.add_component("sink"); }

  void attach(StreamFifo& to_pl, StreamFifo&) override {
    in_ = &to_pl;
    arm();
  }

  const Bytes& received() const { return received_; }

 private:
  void arm() {
    in_->on_data([this] {
      const auto n = in_->pop(in_->occupancy(), received_);
      sim_.note_progress(n);
      arm();
    });
  }

  Simulator& sim_;
  ComponentId id_;
  StreamFifo* in_ = nullptr;
  Bytes received_;
};

/// Hardware loop-back: echoes the MM2S stream into S2MM at `rate` bytes/ns,
/// holding at most `depth` bytes internally and respecting backpressure on
/// both sides.
class LoopbackDevice final : public StreamDevice {
 public:
  LoopbackDevice(Simulator& sim, Ratio rate, std::uint64_t depth)
      : sim_(sim), rate_(rate), depth_(depth) {
    id_ = sim_.add_component("loopback");
  }

  void attach(StreamFifo& to_pl, StreamFifo& to_ps) override {
    in_ = &to_pl;
    out_ = &to_ps;
    step();
  }

  std::uint64_t bytes_echoed() const { return moved_; }

 private:
  void step() {
    if (busy_) return;
    std::uint64_t c = std::min({depth_, in_->occupancy(), out_->free_space()});
    if (c == 0) {
      if (in_->occupancy() == 0) {
        in_->on_data([this] { step(); });
      } else {
        out_->on_space([this] { step(); });
      }
      return;
    }
    buffer_.clear();
    in_->pop(c, buffer_);
    out_->reserve(c);
    busy_ = true;
    const Nanos d = rate_.span(moved_, moved_ + c);
    sim_.schedule_in(d, id_, EventKind::DeviceStep, [this, c] {
      out_->commit(buffer_);
      moved_ += c;
      sim_.note_progress(c);
      busy_ = false;
      step();
    }, c);
  }

  Simulator& sim_;
  ComponentId id_;
  Ratio rate_;
  std::uint64_t depth_;
  StreamFifo* in_ = nullptr;
  StreamFifo* out_ = nullptr;
  Bytes buffer_;
  std::uint64_t moved_ = 0;
  bool busy_ = false;
};

// ---------------------------------------------------------------------------
// CNN layer / network description

/// One convolution layer. Elements are one byte; pooling and activation are
/// folded into the stride and byte accounting.
struct CnnLayerSpec {
  std::uint64_t input_height = 1;
  std::uint64_t input_width = 1;
  std::uint64_t input_channels = 1;
  std::uint64_t kernel_size = 1;
  std::uint64_t output_channels = 1;
  std::uint64_t stride = 1;

  std::uint64_t output_height() const { return (input_height - kernel_size) / stride + 1; }
  std::uint64_t output_width() const { return (input_width - kernel_size) / stride + 1; }
  std::uint64_t input_bytes() const { return input_height * input_width * input_channels; }
  std::uint64_t kernel_bytes() const {
    return kernel_size * kernel_size * input_channels * output_channels;
  }
  std::uint64_t output_bytes() const { return output_height() * output_width() * output_channels; }
  std::uint64_t tx_bytes() const { return kernel_bytes() + input_bytes(); }
  std::uint64_t macs_total() const {
    return output_height() * output_width() * output_channels * kernel_size * kernel_size *
           input_channels;
  }
  std::uint64_t row_bytes() const { return input_width * input_channels; }

  void validate(std::size_t index = 0) const {
    const std::string at = "layer " + std::to_string(index) + ": ";
    if (input_height == 0 || input_width == 0 || input_channels == 0 || kernel_size == 0 ||
        output_channels == 0 || stride == 0) {
      throw InvalidNetwork(at + "all dimensions must be >= 1");
    }
    if (kernel_size > input_height || kernel_size > input_width) {
      throw InvalidNetwork(at + "kernel larger than input");
    }
  }
};

struct CnnNetwork {
  std::string name;
  std::vector<CnnLayerSpec> layers;

  void validate() const {
    if (layers.empty()) throw InvalidNetwork("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].validate(i);
      if (i > 0) {
        const auto& p = layers[i - 1];
        const auto& l = layers[i];
        if (l.input_height != p.output_height() || l.input_width != p.output_width() ||
            l.input_channels != p.output_channels) {
          throw InvalidNetwork("layer " + std::to_string(i) + ": input " +
                               std::to_string(l.input_height) + "x" + std::to_string(l.input_width) +
                               "x" + std::to_string(l.input_channels) +
                               " does not match previous output " +
                               std::to_string(p.output_height()) + "x" +
                               std::to_string(p.output_width()) + "x" +
                               std::to_string(p.output_channels));
        }
      }
    }
  }
};

/// Network file format:
///
///     # comment
///     name roshambo-like
///     layer h=64 w=64 c_in=1 k=5 c_out=16 stride=1
///
/// `stride` defaults to 1; the chaining invariant is checked on load.
inline CnnNetwork parse_network(std::string_view text) {
  CnnNetwork net;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "name") {
      std::getline(ls >> std::ws, net.name);
      continue;
    }
    if (word != "layer") {
      throw InvalidNetwork("line " + std::to_string(line_no) + ": unknown record '" + word + "'");
    }
    CnnLayerSpec l;
    bool have[5] = {};
    std::string field;
    while (ls >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw InvalidNetwork("line " + std::to_string(line_no) + ": expected key=value, got '" +
                             field + "'");
      }
      const std::string key = field.substr(0, eq);
      const auto value = Ratio::parse_decimal(field.substr(eq + 1));
      if (!value || value->den() != 1) {
        throw InvalidNetwork("line " + std::to_string(line_no) + ": bad value for '" + key + "'");
      }
      const std::uint64_t v = value->num();
      if (key == "h") l.input_height = v, have[0] = true;
      else if (key == "w") l.input_width = v, have[1] = true;
      else if (key == "c_in") l.input_channels = v, have[2] = true;
      else if (key == "k") l.kernel_size = v, have[3] = true;
      else if (key == "c_out") l.output_channels = v, have[4] = true;
      else if (key == "stride") l.stride = v;
      else throw InvalidNetwork("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
    for (bool h : have) {
      if (!h) {
        throw InvalidNetwork("line " + std::to_string(line_no) +
                             ": layer needs h, w, c_in, k and c_out");
      }
    }
    net.layers.push_back(l);
  }
  net.validate();
  return net;
}

inline CnnNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidNetwork("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

// ---------------------------------------------------------------------------
// Streamed CNN accelerator

enum class CnnPhase : std::uint8_t { Idle, AwaitingKernels, AwaitingRows, Computing, LayerDone };

inline const char* to_string(CnnPhase p) {
  switch (p) {
    case CnnPhase::Idle: return "idle";
    case CnnPhase::AwaitingKernels: return "awaiting-kernels";
    case CnnPhase::AwaitingRows: return "awaiting-rows";
    case CnnPhase::Computing: return "computing";
    case CnnPhase::LayerDone: return "layer-done";
  }
  return "?";
}

struct CnnTiming {
  Ratio stream_rate{4, 5};
  Ratio mac_rate{96, 10};  // MACs per ns
  std::uint64_t rows_latency = 2;
  std::uint64_t chunk_bytes = 1024;
};

/// Rate/latency model of a streamed multi-MAC accelerator.
///
/// Per layer: kernels arrive first, then the input feature map, both consumed
/// at stream rate into on-chip memory (input consumption never waits on the
/// output side). Once `rows_latency` input rows are in, output is produced
/// over max(out/stream_rate, macs/mac_rate) ns, never ahead of the fraction
/// of input received, and paused while the ToPS FIFO is full.
class CnnAccelerator final : public StreamDevice {
 public:
  CnnAccelerator(Simulator& sim, CnnTiming timing) : sim_(sim), timing_(timing) {
    id_ = sim_.add_component("cnn-accelerator");
  }

  void attach(StreamFifo& to_pl, StreamFifo& to_ps) override {
    in_ = &to_pl;
    out_ = &to_ps;
    consume();
  }

  /// Configures the next layer (register writes; zero simulated cost).
  void load_layer(const CnnLayerSpec& layer, std::uint32_t layer_index = 0) {
    if (phase_ != CnnPhase::Idle && phase_ != CnnPhase::LayerDone) {
      throw ProtocolViolation("layer loaded while accelerator is " + std::string(to_string(phase_)));
    }
    layer_ = layer;
    layer_index_ = layer_index;
    phase_ = CnnPhase::AwaitingKernels;
    consumed_ = 0;
    emitted_ = 0;
    compute_started_ = false;
    const std::uint64_t stream_time = timing_.stream_rate.ceil_over(layer.output_bytes());
    const std::uint64_t mac_time = timing_.mac_rate.ceil_over(layer.macs_total());
    output_duration_ = std::max(stream_time, mac_time);
    rows_latency_ = std::min(timing_.rows_latency, layer.input_height);
    if (in_ && !consuming_) consume();
  }

  CnnPhase phase() const { return phase_; }
  std::uint64_t emitted() const { return emitted_; }
  std::uint64_t rows_received() const {
    const auto in = consumed_ > layer_.kernel_bytes() ? consumed_ - layer_.kernel_bytes() : 0;
    return in / layer_.row_bytes();
  }
  Nanos output_duration() const { return output_duration_; }
  std::optional<SimTime> compute_start() const { return compute_start_; }
  std::optional<SimTime> layer_done_at() const { return done_at_; }
  std::optional<SimTime> first_output_at() const { return first_output_at_; }
  std::uint64_t rows_at_first_output() const { return rows_at_first_output_; }

  void on_layer_done(std::function<void()> cb) { layer_done_cb_ = std::move(cb); }

  /// Deterministic stand-in for the output feature map contents.
  static std::uint8_t output_byte(std::uint32_t layer_index, std::uint64_t pos) {
    return static_cast<std::uint8_t>((pos * 131u + layer_index * 17u + (pos >> 8)) & 0xff);
  }

 private:
  std::uint64_t layer_total_in() const { return layer_.tx_bytes(); }

  void consume() {
    if (consuming_) return;
    if (in_->occupancy() == 0) {
      in_->on_data([this] { consume(); });
      return;
    }
    if (phase_ == CnnPhase::Idle || phase_ == CnnPhase::LayerDone || consumed_ >= layer_total_in()) {
      throw ProtocolViolation("accelerator received " + std::to_string(in_->occupancy()) +
                              " B with no layer input outstanding (phase " + to_string(phase_) + ")");
    }
    const std::uint64_t c = std::min({timing_.chunk_bytes, in_->occupancy(), layer_total_in() - consumed_});
    scratch_.clear();
    in_->pop(c, scratch_);
    consuming_ = true;
    const Nanos d = timing_.stream_rate.span(consumed_, consumed_ + c);
    sim_.schedule_in(d, id_, EventKind::DeviceStep, [this, c] {
      consuming_ = false;
      consumed_ += c;
      sim_.note_progress(c);
      if (phase_ == CnnPhase::AwaitingKernels && consumed_ >= layer_.kernel_bytes()) {
        phase_ = CnnPhase::AwaitingRows;
      }
      if (phase_ == CnnPhase::AwaitingRows && rows_received() >= rows_latency_) {
        phase_ = CnnPhase::Computing;
        compute_started_ = true;
        compute_start_ = sim_.now();
      }
      if (compute_started_) produce();
      if (consumed_ >= layer_total_in()) maybe_finish();
      consume();  // past the layer input this only watches for stray bytes
    }, c);
  }

  /// Output bytes allowed so far by input causality.
  std::uint64_t output_allowance() const {
    const auto kb = layer_.kernel_bytes();
    const auto in = consumed_ > kb ? consumed_ - kb : 0;
    const unsigned __int128 num = static_cast<unsigned __int128>(layer_.output_bytes()) * in;
    return static_cast<std::uint64_t>(num / layer_.input_bytes());
  }

  std::uint64_t output_offset(std::uint64_t bytes) const {
    const unsigned __int128 p = static_cast<unsigned __int128>(output_duration_) * bytes;
    const std::uint64_t ob = layer_.output_bytes();
    return static_cast<std::uint64_t>((p + ob - 1) / ob);
  }

  void produce() {
    if (producing_ || phase_ != CnnPhase::Computing) return;
    const std::uint64_t remain = layer_.output_bytes() - emitted_;
    if (remain == 0) return;
    const std::uint64_t allowed = output_allowance() - emitted_;
    std::uint64_t c = std::min({timing_.chunk_bytes, remain, allowed, out_->free_space()});
    if (c == 0) {
      if (allowed > 0) out_->on_space([this] { produce(); });
      return;  // otherwise woken by input progress
    }
    out_->reserve(c);
    producing_ = true;
    const Nanos d = output_offset(emitted_ + c) - output_offset(emitted_);
    sim_.schedule_in(d, id_, EventKind::DeviceStep, [this, c] {
      scratch_out_.resize(c);
      for (std::uint64_t i = 0; i < c; ++i) scratch_out_[i] = output_byte(layer_index_, emitted_ + i);
      if (!first_output_at_) {
        first_output_at_ = sim_.now();
        rows_at_first_output_ = rows_received();
      }
      out_->commit(scratch_out_);
      emitted_ += c;
      sim_.note_progress(c);
      producing_ = false;
      produce();
      maybe_finish();
    }, c);
  }

  void maybe_finish() {
    if (phase_ != CnnPhase::Computing || emitted_ < layer_.output_bytes() ||
        consumed_ < layer_total_in()) {
      return;
    }
    phase_ = CnnPhase::LayerDone;
    done_at_ = sim_.now();
    if (layer_done_cb_) layer_done_cb_();
  }

  Simulator& sim_;
  ComponentId id_;
  CnnTiming timing_;
  StreamFifo* in_ = nullptr;
  StreamFifo* out_ = nullptr;
  CnnLayerSpec layer_{};
  std::uint32_t layer_index_ = 0;
  CnnPhase phase_ = CnnPhase::Idle;
  std::uint64_t consumed_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint64_t rows_latency_ = 1;
  Nanos output_duration_ = 0;
  bool consuming_ = false;
  bool producing_ = false;
  bool compute_started_ = false;
  Bytes scratch_;
  Bytes scratch_out_;
  std::optional<SimTime> compute_start_;
  std::optional<SimTime> first_output_at_;
  std::uint64_t rows_at_first_output_ = 0;
  std::optional<SimTime> done_at_;
  std::function<void()> layer_done_cb_;
};

// ---------------------------------------------------------------------------
// DVS events to frames

struct DvsEvent {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint64_t timestamp_ns = 0;
  std::int8_t polarity = 1;
};

struct FrameHistogram {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint64_t> counts;  // row-major, pre-normalization
  Bytes pixels;                       // counts scaled so the max bin is 255

  std::uint64_t total_count() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

/// Bins the first `n` events into a width x height histogram and normalizes
/// by the maximum bin.
inline FrameHistogram events_to_frame(std::span<const DvsEvent> events, std::size_t n,
                                      std::uint32_t width, std::uint32_t height) {
  if (n == 0) throw OutOfBoundsEvent("events_to_frame needs n >= 1");
  if (n > events.size()) {
    throw OutOfBoundsEvent("requested " + std::to_string(n) + " events, only " +
                           std::to_string(events.size()) + " available");
  }
  FrameHistogram f;
  f.width = width;
  f.height = height;
  f.counts.assign(static_cast<std::size_t>(width) * height, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = events[i];
    if (e.x >= width || e.y >= height) {
      throw OutOfBoundsEvent("event " + std::to_string(i) + " at (" + std::to_string(e.x) + ", " +
                             std::to_string(e.y) + ") outside " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
    ++f.counts[static_cast<std::size_t>(e.y) * width + e.x];
  }
  const std::uint64_t peak = *std::max_element(f.counts.begin(), f.counts.end());
  f.pixels.resize(f.counts.size());
  for (std::size_t i = 0; i < f.counts.size(); ++i) {
    f.pixels[i] = static_cast<std::uint8_t>((f.counts[i] * 255 + peak / 2) / peak);
  }
  return f;
}

/// Uniformly scattered synthetic events with 1 us spacing.
inline std::vector<DvsEvent> generate_uniform_events(std::size_t n, std::uint32_t width,
                                                     std::uint32_t height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> dx(0, width - 1), dy(0, height - 1);
  std::bernoulli_distribution pol(0.5);
  std::vector<DvsEvent> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(DvsEvent{dx(rng), dy(rng), i * 1000, static_cast<std::int8_t>(pol(rng) ? 1 : -1)});
  }
  return out;
}

}  // namespace psocsim
