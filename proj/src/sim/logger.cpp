#include "evlog/sim/logger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <memory>
#include <optional>
#include <queue>
#include <tuple>

#include <json.hpp>

#include "evlog/io/csv.hpp"
#include "evlog/io/wav.hpp"

namespace evlog::sim {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Event ordering at equal virtual times: DMA completion first, then the
// sampling task (chunk boundaries), then interrupts/ADC polling. A flag
// raised exactly at a completion instant is therefore consumed at the next
// checkpoint, never the same one.
enum class EvType : int {
  DmaComplete = 0,
  ChunkFull = 1,
  ReedEdgeEv = 2,
  AdcPoll = 3,
  EndOfStreams = 4,
  FinalizeRun = 5,
};

struct Event {
  double time;
  EvType type;
  uint64_t seq;
  int stream;       // ChunkFull / DmaComplete
  DmaRequest req;   // DmaComplete
  ReedEdge edge;    // ReedEdgeEv
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.type, a.seq) > std::tie(b.time, b.type, b.seq);
  }
};

constexpr int kAudio = 0;
constexpr int kVib = 1;

struct StreamState {
  double rate = 0.0;
  double bytes_per_item = 0.0;
  uint64_t n_items = 0;
  std::unique_ptr<PingPongBuffer> buf;
  // Completion time of the last request per buffer, for overrun detection.
  double completion[2] = {0.0, 0.0};
  std::optional<DmaRequest> staged;
  double written_until = 0.0;  // stream time covered by the open session
};

struct OpenSession {
  SessionArtifacts art;
  std::unique_ptr<io::WavWriter> wav;
  std::unique_ptr<io::VibCsvWriter> vib;
  double close_at = 0.0;
  bool audio_started = false;
  bool vib_started = false;
};

class Simulation {
 public:
  Simulation(const FeatureStreams& features, const LabelingStreams& labeling,
             const LoggerConfig& config, const fs::path& out_dir)
      : features_(features),
        labeling_(labeling),
        cfg_(config),
        out_dir_(out_dir),
        storage_(config.writer_bytes_per_s()) {}

  RunResult run();

 private:
  void push_event(Event ev) {
    ev.seq = seq_++;
    queue_.push(ev);
  }

  double chunk_time(const StreamState& s, uint64_t index) const {
    return static_cast<double>(index) / s.rate;
  }

  void schedule_chunk_full(int stream) {
    auto& s = streams_[stream];
    const uint64_t next_full = s.buf->total_pushed() + s.buf->capacity();
    if (next_full <= s.n_items) {
      push_event({chunk_time(s, next_full), EvType::ChunkFull, 0, stream,
                  {}, ReedEdge::Rising});
    }
  }

  void submit_dma(int stream, const DmaRequest& req, double t) {
    auto& s = streams_[stream];
    const double bytes =
        static_cast<double>(req.end - req.begin) * s.bytes_per_item;
    const double done = storage_.submit(t, bytes);
    if (req.buffer >= 0) s.completion[req.buffer] = done;
    last_completion_ = std::max(last_completion_, done);
    push_event({done, EvType::DmaComplete, 0, stream, req, ReedEdge::Rising});
  }

  void handle_chunk_full(int stream, double t);
  void handle_dma_complete(int stream, const DmaRequest& req, double t);
  void route_chunk(int stream, const DmaRequest& req);
  void consume_flags(double t);
  void open_session(const EventFlag& flag, double t);
  void write_chunk_to_session(int stream, const DmaRequest& req);
  void close_session();
  void ensure_label_writer();
  void write_report(RunResult& result) const;

  const FeatureStreams& features_;
  const LabelingStreams& labeling_;
  LoggerConfig cfg_;
  fs::path out_dir_;

  StorageModel storage_;
  FileRegistry registry_;
  StreamState streams_[2];
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  uint64_t seq_ = 0;
  double last_completion_ = 0.0;
  double now_ = 0.0;

  AdcMonitor adc_{0.0};
  uint64_t adc_polls_done_ = 0;
  std::deque<EventFlag> flag_queue_;
  std::optional<OpenSession> session_;
  std::unique_ptr<io::LabelCsvWriter> label_writer_;
  int session_counter_ = 0;

  RunResult result_;
};

void Simulation::ensure_label_writer() {
  if (label_writer_) return;
  registry_.opened("labels.csv");
  label_writer_ =
      std::make_unique<io::LabelCsvWriter>(out_dir_ / "labels.csv");
  result_.label_csv = out_dir_ / "labels.csv";
}

void Simulation::open_session(const EventFlag& flag, double t) {
  OpenSession s;
  char name[64];
  std::snprintf(name, sizeof name, "session_%05d_%s", session_counter_,
                event_label(flag.kind));
  const fs::path dir = out_dir_ / "sessions" / name;
  fs::create_directories(dir);
  s.art.index = session_counter_++;
  s.art.audio_path = dir / "audio.wav";
  s.art.vibration_path = dir / "vibration.csv";
  s.art.label_path = out_dir_ / "labels.csv";
  s.close_at = t + cfg_.post_event_window;

  registry_.opened("audio.wav");
  s.wav = std::make_unique<io::WavWriter>(
      s.art.audio_path, static_cast<uint32_t>(cfg_.audio_rate));
  registry_.opened("vibration.csv");
  s.vib = std::make_unique<io::VibCsvWriter>(s.art.vibration_path);
  result_.max_open_files = std::max(result_.max_open_files, registry_.highwater());

  session_ = std::move(s);
  // Pre-event context: whatever chunk is still staged in RAM opens the file.
  for (int st : {kAudio, kVib}) {
    auto& stream = streams_[st];
    if (stream.staged) {
      write_chunk_to_session(st, *stream.staged);
      stream.staged.reset();
    }
  }
}

void Simulation::write_chunk_to_session(int stream, const DmaRequest& req) {
  auto& s = streams_[stream];
  auto& art = session_->art;
  if (stream == kAudio) {
    if (!session_->audio_started) {
      art.audio_begin = req.begin;
      session_->audio_started = true;
    }
    art.audio_end = req.end;
    std::vector<int16_t> pcm(req.end - req.begin);
    for (uint64_t i = req.begin; i < req.end; ++i) {
      pcm[i - req.begin] =
          io::quantize_i16(features_.audio.samples[static_cast<size_t>(i)]);
    }
    session_->wav->append(pcm);
  } else {
    if (!session_->vib_started) {
      art.vib_begin = req.begin;
      session_->vib_started = true;
    }
    art.vib_end = req.end;
    for (uint64_t i = req.begin; i < req.end; ++i) {
      io::VibRow row;
      row.t = static_cast<double>(i - art.vib_begin) / s.rate;
      const float raw[3] = {
          features_.vibration[0].samples[static_cast<size_t>(i)],
          features_.vibration[1].samples[static_cast<size_t>(i)],
          features_.vibration[2].samples[static_cast<size_t>(i)]};
      float* cells[3] = {&row.x, &row.y, &row.z};
      for (int a = 0; a < 3; ++a) {
        *cells[a] = std::isnan(raw[a])
                        ? raw[a]
                        : io::dequantize_i16(io::quantize_i16(raw[a]));
      }
      session_->vib->append(row);
    }
  }
  s.written_until = chunk_time(s, req.end);
}

void Simulation::close_session() {
  auto& s = *session_;
  s.wav->finalize();
  registry_.closed();
  s.vib->finalize();
  registry_.closed();
  s.art.t_begin = std::min(
      s.audio_started ? static_cast<double>(s.art.audio_begin) / streams_[kAudio].rate
                      : s.close_at,
      s.vib_started ? static_cast<double>(s.art.vib_begin) / streams_[kVib].rate
                    : s.close_at);
  s.art.t_end = s.close_at;
  result_.sessions.push_back(std::move(s.art));
  session_.reset();
  streams_[kAudio].written_until = 0.0;
  streams_[kVib].written_until = 0.0;
}

void Simulation::consume_flags(double t) {
  while (!flag_queue_.empty()) {
    const EventFlag flag = flag_queue_.front();
    flag_queue_.pop_front();
    if (!session_) {
      open_session(flag, t);
    } else {
      // A second event inside the window extends the same recording.
      session_->close_at = std::max(session_->close_at, t + cfg_.post_event_window);
    }
    ensure_label_writer();
    label_writer_->append({cfg_.rtc_epoch_unix + flag.raised_at, flag.kind});
    session_->art.labels.push_back(flag);
    result_.labels.push_back(flag);
    result_.label_check_times.push_back(t);
  }
  if (session_) {
    const bool audio_done = streams_[kAudio].written_until >= session_->close_at;
    const bool vib_done = streams_[kVib].written_until >= session_->close_at;
    if (audio_done && vib_done) close_session();
  }
}

void Simulation::route_chunk(int stream, const DmaRequest& req) {
  auto& s = streams_[stream];
  if (session_ && chunk_time(s, req.begin) < session_->close_at) {
    write_chunk_to_session(stream, req);
  } else {
    s.staged = req;
  }
}

void Simulation::handle_dma_complete(int stream, const DmaRequest& req,
                                     double t) {
  if (req.buffer >= 0) streams_[stream].buf->complete(req.buffer);
  route_chunk(stream, req);
  // Flagged events are checked once the DMA completes.
  consume_flags(t);
}

void Simulation::handle_chunk_full(int stream, double t) {
  auto& s = streams_[stream];
  // The first sample of this chunk went into the buffer one sample period
  // after the previous swap; if that buffer's DMA was still in flight then,
  // acquisition had nowhere to write.
  const uint64_t chunk_begin = s.buf->total_pushed();
  if (chunk_begin > 0) {
    const double first_push = chunk_time(s, chunk_begin) + 1.0 / s.rate;
    const int active = s.buf->active();
    if (s.completion[active] > first_push) {
      throw SimFault(
          "buffer overrun on " + std::string(stream == kAudio ? "audio" : "vibration") +
          ": DMA completes at " + std::to_string(s.completion[active]) +
          " s but sample index " + std::to_string(chunk_begin) +
          " arrives at " + std::to_string(first_push) + " s");
    }
  }
  std::optional<DmaRequest> req;
  for (size_t i = 0; i < s.buf->capacity(); ++i) req = s.buf->push();
  submit_dma(stream, *req, t);
  schedule_chunk_full(stream);
}

void Simulation::write_report(RunResult& result) const {
  json j;
  j["config"] = {
      {"audio_rate", cfg_.audio_rate},
      {"vib_rate", cfg_.vib_rate},
      {"buffer_capacity", cfg_.buffer_capacity},
      {"adc_poll_period", cfg_.adc_poll_period},
      {"post_event_window", cfg_.post_event_window},
      {"spi_clock_hz", cfg_.spi_clock_hz},
      {"spi_efficiency", cfg_.spi_efficiency},
      {"current_threshold_a", cfg_.current_threshold_a},
      {"writer_bytes_per_s", cfg_.writer_bytes_per_s()},
  };
  j["highwater"] = {
      {"audio_buffer_fill", result.audio_buffer_highwater},
      {"vib_buffer_fill", result.vib_buffer_highwater},
      {"storage_backlog_bytes", result.storage_backlog_highwater_bytes},
      {"open_files", result.max_open_files},
  };
  j["faults"] = json::array();
  for (const auto& f : result.faults) {
    j["faults"].push_back({{"what", f.what}, {"time_s", f.time}});
  }
  j["label_count"] = result.labels.size();
  j["sessions"] = json::array();
  for (const auto& s : result.sessions) {
    json labels = json::array();
    for (const auto& l : s.labels) {
      labels.push_back({{"kind", event_label(l.kind)},
                        {"raised_at_s", l.raised_at},
                        {"source", l.source == FlagSource::EdgeInterrupt
                                       ? "edge_interrupt"
                                       : "adc_threshold"}});
    }
    j["sessions"].push_back({
        {"index", s.index},
        {"audio", s.audio_path.filename().string()},
        {"vibration", s.vibration_path.filename().string()},
        {"dir", s.audio_path.parent_path().lexically_relative(out_dir_).string()},
        {"t_begin_s", s.t_begin},
        {"t_end_s", s.t_end},
        {"audio_span", {s.audio_begin, s.audio_end}},
        {"vib_span", {s.vib_begin, s.vib_end}},
        {"labels", labels},
    });
  }
  const fs::path path = out_dir_ / "run_report.json";
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  result.report_path = path;
}

RunResult Simulation::run() {
  cfg_.validate();
  fs::create_directories(out_dir_);

  adc_ = AdcMonitor(cfg_.current_threshold_a);

  streams_[kAudio].rate = cfg_.audio_rate;
  streams_[kAudio].bytes_per_item = 2.0;
  streams_[kAudio].n_items = features_.audio.samples.size();
  streams_[kAudio].buf = std::make_unique<PingPongBuffer>(cfg_.buffer_capacity);
  streams_[kVib].rate = cfg_.vib_rate;
  streams_[kVib].bytes_per_item = 6.0;
  streams_[kVib].n_items = std::min({features_.vibration[0].samples.size(),
                                     features_.vibration[1].samples.size(),
                                     features_.vibration[2].samples.size()});
  streams_[kVib].buf = std::make_unique<PingPongBuffer>(cfg_.buffer_capacity);

  const double t_end =
      std::min(static_cast<double>(streams_[kAudio].n_items) / cfg_.audio_rate,
               static_cast<double>(streams_[kVib].n_items) / cfg_.vib_rate);

  schedule_chunk_full(kAudio);
  schedule_chunk_full(kVib);

  // Reed edge interrupts come from sharp transitions of the reed line.
  {
    const auto& reed = labeling_.reed.samples;
    const double rate = labeling_.reed.rate;
    for (size_t i = 1; i < reed.size(); ++i) {
      const double delta = static_cast<double>(reed[i]) - reed[i - 1];
      if (std::abs(delta) < 0.5) continue;
      Event ev{static_cast<double>(i) / rate, EvType::ReedEdgeEv, 0, 0, {},
               delta > 0.0 ? ReedEdge::Rising : ReedEdge::Falling};
      if (ev.time <= t_end) push_event(ev);
    }
  }
  if (cfg_.adc_poll_period <= t_end) {
    push_event({cfg_.adc_poll_period, EvType::AdcPoll, 0, 0, {}, ReedEdge::Rising});
  }
  push_event({t_end, EvType::EndOfStreams, 0, 0, {}, ReedEdge::Rising});

  try {
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      switch (ev.type) {
        case EvType::DmaComplete:
          handle_dma_complete(ev.stream, ev.req, ev.time);
          break;
        case EvType::ChunkFull:
          handle_chunk_full(ev.stream, ev.time);
          break;
        case EvType::ReedEdgeEv:
          flag_queue_.push_back(on_reed_edge(ev.edge, ev.time));
          break;
        case EvType::AdcPoll: {
          const auto& cur = labeling_.current;
          if (!cur.samples.empty()) {
            const double a = cur.samples[cur.index_at(ev.time)];
            if (auto flag = adc_.poll(a, ev.time)) flag_queue_.push_back(*flag);
          }
          // Poll instants come from the multiplication k*period, not from
          // accumulation, so they cannot drift off the sample grid.
          ++adc_polls_done_;
          const double next =
              cfg_.adc_poll_period * static_cast<double>(adc_polls_done_ + 1);
          if (next <= t_end) {
            push_event({next, EvType::AdcPoll, 0, 0, {}, ReedEdge::Rising});
          }
          break;
        }
        case EvType::EndOfStreams: {
          for (int st : {kAudio, kVib}) {
            auto& s = streams_[st];
            const uint64_t total = s.buf->total_pushed();
            const uint64_t remaining = s.n_items - total;
            if (remaining > 0) {
              // Final partial buffer is flushed at shutdown.
              submit_dma(st, DmaRequest{-1, total, s.n_items}, ev.time);
            }
          }
          push_event({std::max(last_completion_, ev.time) + 1e-9,
                      EvType::FinalizeRun, 0, 0, {}, ReedEdge::Rising});
          break;
        }
        case EvType::FinalizeRun: {
          consume_flags(ev.time);
          if (session_) close_session();
          break;
        }
      }
    }
  } catch (const SimFault& fault) {
    result_.faults.push_back({fault.what(), now_});
    if (session_) close_session();
  }

  if (label_writer_) {
    label_writer_->finalize();
    registry_.closed();
  }

  result_.audio_buffer_highwater =
      streams_[kAudio].buf->total_pushed() >= streams_[kAudio].buf->capacity()
          ? 1.0
          : static_cast<double>(streams_[kAudio].buf->fill()) /
                static_cast<double>(streams_[kAudio].buf->capacity());
  result_.vib_buffer_highwater =
      streams_[kVib].buf->total_pushed() >= streams_[kVib].buf->capacity()
          ? 1.0
          : static_cast<double>(streams_[kVib].buf->fill()) /
                static_cast<double>(streams_[kVib].buf->capacity());
  result_.storage_backlog_highwater_bytes = storage_.backlog_highwater_bytes();
  result_.max_open_files = std::max(result_.max_open_files, registry_.highwater());

  // An empty scenario still leaves an (empty) label file behind.
  if (!label_writer_) {
    io::LabelCsvWriter empty(out_dir_ / "labels.csv");
    empty.finalize();
    result_.label_csv = out_dir_ / "labels.csv";
  }

  write_report(result_);
  return std::move(result_);
}

}  // namespace

void LoggerConfig::validate() const {
  if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be > 0");
  if (post_event_window < 0.0) {
    throw ConfigError("post_event_window must be >= 0");
  }
  if (audio_rate <= 0.0 || vib_rate <= 0.0) {
    throw ConfigError("sample rates must be positive");
  }
  if (adc_poll_period <= 0.0) throw ConfigError("adc_poll_period must be > 0");
  if (spi_clock_hz <= 0.0) throw ConfigError("spi_clock_hz must be > 0");
  if (spi_efficiency <= 0.0 || spi_efficiency > 1.0) {
    throw ConfigError("spi_efficiency must be in (0, 1]");
  }
  if (spi_clock_hz / 8.0 <= acquisition_bytes_per_s()) {
    throw ConfigError(
        "modeled writer throughput (spi_clock/8) must exceed the total "
        "acquisition byte rate");
  }
}

EventFlag on_reed_edge(ReedEdge edge, double t) {
  return EventFlag{
      edge == ReedEdge::Rising ? EventKind::DoorOpen : EventKind::DoorClose, t,
      FlagSource::EdgeInterrupt};
}

std::optional<EventFlag> AdcMonitor::poll(double current_a, double t) {
  if (current_a > threshold_) {
    armed_ = true;
    return std::nullopt;
  }
  if (armed_) {
    armed_ = false;
    return EventFlag{EventKind::WaterBoiled, t, FlagSource::AdcThreshold};
  }
  return std::nullopt;
}

double StorageModel::submit(double t, double bytes) {
  if (bytes <= 0.0) return t;
  const double start = std::max(t, busy_until_);
  const double done = start + bytes / bytes_per_s_;
  busy_until_ = done;
  const double backlog = (done - t) * bytes_per_s_;
  backlog_highwater_ = std::max(backlog_highwater_, backlog);
  return done;
}

void FileRegistry::opened(const std::string& what) {
  if (open_ + 1 > 4) {
    throw SimFault("storage fault: opening '" + what +
                   "' would exceed 4 simultaneous file operations");
  }
  ++open_;
  highwater_ = std::max(highwater_, open_);
}

void FileRegistry::closed() { --open_; }

RunResult run_simulation(const FeatureStreams& features,
                         const LabelingStreams& labeling,
                         const LoggerConfig& config,
                         const std::filesystem::path& out_dir) {
  Simulation sim(features, labeling, config, out_dir);
  return sim.run();
}

}  // namespace evlog::sim
