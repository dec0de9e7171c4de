#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include <unistd.h>

#include "evlog/io/csv.hpp"
#include "evlog/io/wav.hpp"
#include "evlog/scenario.hpp"
#include "evlog/sim/logger.hpp"
#include "oracles.hpp"

using namespace evlog;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() /
                       ("evlog_sim_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ScenarioConfig quick_scenario_config() {
  ScenarioConfig cfg;
  cfg.length_s = 240.0;
  cfg.door_open_count = 3;
  cfg.door_close_count = 2;
  cfg.water_boiled_count = 2;
  cfg.kettle_heatup_s = 10.0;
  return cfg;
}

struct SimRun {
  Scenario scenario;
  FeatureStreams features;
  LabelingStreams labeling;
  sim::RunResult result;
  fs::path dir;
};

SimRun simulate(const ScenarioConfig& cfg, uint64_t seed,
                const sim::LoggerConfig& logger, const std::string& tag) {
  SimRun run;
  run.scenario = build_scenario(cfg, seed);
  run.features = synth_feature_streams(run.scenario, cfg, seed + 1);
  run.labeling = synth_labeling_streams(run.scenario, cfg);
  run.dir = fresh_dir(tag);
  run.result = sim::run_simulation(run.features, run.labeling, logger, run.dir);
  return run;
}

}  // namespace

TEST_CASE("pingpong: capacity 4 emits one request for the first 4 samples") {
  sim::PingPongBuffer buf(4);
  std::optional<sim::DmaRequest> req;
  for (int i = 0; i < 4; ++i) {
    REQUIRE_FALSE(req.has_value());
    req = buf.push();
  }
  REQUIRE(req.has_value());
  CHECK(req->begin == 0);
  CHECK(req->end == 4);
  CHECK(req->buffer == 0);
  CHECK(buf.active() == 1);
  CHECK(buf.busy(0));
  CHECK_FALSE(buf.busy(1));
}

TEST_CASE("pingpong: 8 samples partition into two ordered requests") {
  sim::PingPongBuffer buf(4);
  std::vector<sim::DmaRequest> reqs;
  for (int i = 0; i < 8; ++i) {
    buf.complete(buf.active() ^ 1);  // instant DMA
    if (auto r = buf.push()) reqs.push_back(*r);
  }
  REQUIRE(reqs.size() == 2);
  CHECK(reqs[0].begin == 0);
  CHECK(reqs[0].end == 4);
  CHECK(reqs[1].begin == 4);
  CHECK(reqs[1].end == 8);
}

TEST_CASE("pingpong: pushing with both buffers unavailable is an overrun") {
  sim::PingPongBuffer buf(2);
  (void)buf.push();
  (void)buf.push();  // buffer 0 full -> busy, active now 1
  (void)buf.push();
  (void)buf.push();  // buffer 1 full -> busy, active back to 0 (still busy)
  CHECK_THROWS_WITH_AS(buf.push(), doctest::Contains("overrun"), SimFault);
}

TEST_CASE("slow writer overruns at the index the queueing oracle predicts") {
  // Drive one stream through buffer + storage model by hand.
  const double rate = 1000.0;
  const size_t capacity = 32;
  const double bytes_per_item = 2.0;
  const double writer = 1500.0;  // bytes/s < 2000 B/s acquisition
  const int64_t want = oracle::first_overrun_index(rate, capacity,
                                                   bytes_per_item, writer, 64);
  REQUIRE(want >= 0);

  sim::PingPongBuffer buf(capacity);
  sim::StorageModel storage(writer);
  std::map<int, double> completion;  // buffer -> completion time
  int64_t got = -1;
  for (int64_t i = 0; i < 64 * 32; ++i) {
    const double t = static_cast<double>(i + 1) / rate;
    for (auto& [b, done] : completion) {
      if (done <= t) {
        buf.complete(b);
        done = 1e300;
      }
    }
    try {
      if (auto req = buf.push()) {
        completion[req->buffer] =
            storage.submit(t, static_cast<double>(req->end - req->begin) *
                                  bytes_per_item);
      }
    } catch (const SimFault&) {
      got = i;
      break;
    }
  }
  CHECK(got == want);
}

TEST_CASE("adc monitor: drop through the threshold raises one flag") {
  sim::AdcMonitor adc(0.0);
  CHECK_FALSE(adc.poll(2.1, 0.01).has_value());
  CHECK_FALSE(adc.poll(1.8, 0.02).has_value());
  const auto flag = adc.poll(0.0, 0.03);
  REQUIRE(flag.has_value());
  CHECK(flag->kind == EventKind::WaterBoiled);
  CHECK(flag->raised_at == 0.03);
  CHECK(flag->source == sim::FlagSource::AdcThreshold);
}

TEST_CASE("adc monitor: all-zero current never fires") {
  sim::AdcMonitor adc(0.0);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(adc.poll(0.0, 0.01 * i).has_value());
  }
}

TEST_CASE("adc monitor: two kettle cycles give exactly two flags") {
  sim::AdcMonitor adc(0.0);
  int flags = 0;
  const double series[] = {0, 5, 5, 5, 0, 0, 5, 5, 0, 0};
  // Transition-count oracle on the same series.
  int want = 0;
  for (size_t i = 1; i < std::size(series); ++i) {
    if (series[i - 1] > 0.0 && series[i] <= 0.0) ++want;
  }
  for (size_t i = 0; i < std::size(series); ++i) {
    if (adc.poll(series[i], 0.01 * static_cast<double>(i + 1))) ++flags;
  }
  CHECK(flags == want);
  CHECK(flags == 2);
}

TEST_CASE("reed edges map to door flags with the edge timestamp") {
  const auto open = sim::on_reed_edge(sim::ReedEdge::Rising, 5.0);
  CHECK(open.kind == EventKind::DoorOpen);
  CHECK(open.raised_at == 5.0);
  CHECK(open.source == sim::FlagSource::EdgeInterrupt);
  const auto close = sim::on_reed_edge(sim::ReedEdge::Falling, 9.0);
  CHECK(close.kind == EventKind::DoorClose);
  CHECK(close.raised_at == 9.0);

  sim::ReedEdge pattern[] = {sim::ReedEdge::Rising, sim::ReedEdge::Falling,
                             sim::ReedEdge::Rising, sim::ReedEdge::Falling};
  EventKind want[] = {EventKind::DoorOpen, EventKind::DoorClose,
                      EventKind::DoorOpen, EventKind::DoorClose};
  for (int i = 0; i < 4; ++i) {
    CHECK(sim::on_reed_edge(pattern[i], i).kind == want[i]);
  }
}

TEST_CASE("storage model: 4096 bytes at a 6.25 MB/s model complete 0.655 ms later") {
  sim::StorageModel storage(6.25e6);
  const double done = storage.submit(1.0, 4096.0);
  CHECK(done - 1.0 == doctest::Approx(4096.0 / 6.25e6).epsilon(1e-12));
  CHECK(done - 1.0 == doctest::Approx(0.00065536).epsilon(1e-12));
}

TEST_CASE("storage model: zero-length request completes immediately") {
  sim::StorageModel storage(6.25e6);
  CHECK(storage.submit(2.0, 0.0) == 2.0);
}

TEST_CASE("storage model: sustained 56 kB/s vs 6.25 MB/s stays bounded") {
  sim::StorageModel storage(6.25e6);
  double worst_lag = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double t = 0.128 * static_cast<double>(k + 1);
    const double done = storage.submit(t, 0.128 * 56000.0);
    worst_lag = std::max(worst_lag, done - t);
  }
  CHECK(worst_lag < 0.01);
  CHECK(storage.backlog_highwater_bytes() < 2.0 * 0.128 * 56000.0);
}

TEST_CASE("file registry enforces the four-handle bound") {
  sim::FileRegistry reg;
  reg.opened("a");
  reg.opened("b");
  reg.opened("c");
  reg.opened("d");
  CHECK(reg.open_now() == 4);
  CHECK_THROWS_WITH_AS(reg.opened("e"), doctest::Contains("4"), SimFault);
  reg.closed();
  reg.opened("e");
  CHECK(reg.highwater() == 4);
}

TEST_CASE("logger config invariants") {
  sim::LoggerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.acquisition_bytes_per_s() == doctest::Approx(56000.0));
  sim::LoggerConfig bad = cfg;
  bad.spi_clock_hz = 440000.0;  // 55 kB/s raw < 56 kB/s acquisition
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.buffer_capacity = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("full simulation: labels match ground truth in kind and order") {
  const ScenarioConfig cfg = quick_scenario_config();
  sim::LoggerConfig logger;
  const SimRun run = simulate(cfg, 101, logger, "labels");
  REQUIRE(run.result.ok());

  REQUIRE(run.result.labels.size() == run.scenario.events.size());
  for (size_t i = 0; i < run.result.labels.size(); ++i) {
    CHECK(run.result.labels[i].kind == run.scenario.events[i].kind);
    const double err =
        std::abs(run.result.labels[i].raised_at - run.scenario.events[i].onset);
    if (run.scenario.events[i].kind == EventKind::WaterBoiled) {
      CHECK(err <= logger.adc_poll_period + 1e-9);
    } else {
      CHECK(err <= 1.0 / run.labeling.reed.rate + 1e-9);
    }
  }

  // One session per labeled event, each with exactly one label inside its
  // time span.
  REQUIRE(run.result.sessions.size() == run.scenario.events.size());
  for (const auto& s : run.result.sessions) {
    REQUIRE(s.labels.size() == 1);
    CHECK(s.labels[0].raised_at >= s.t_begin);
    CHECK(s.labels[0].raised_at <= s.t_end);
  }

  // Written label CSV agrees with the in-memory labels.
  const auto rows = io::read_label_csv_file(run.result.label_csv);
  REQUIRE(rows.size() == run.result.labels.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].kind == run.result.labels[i].kind);
    // Microsecond rendering plus double rounding at epoch magnitude.
    CHECK(std::abs(rows[i].rtc_seconds - logger.rtc_epoch_unix -
                   run.result.labels[i].raised_at) <= 2e-6);
  }
  fs::remove_all(run.dir);
}

TEST_CASE("full simulation: session files reproduce the streams sample-exactly") {
  const ScenarioConfig cfg = quick_scenario_config();
  sim::LoggerConfig logger;
  const SimRun run = simulate(cfg, 202, logger, "lossless");
  REQUIRE(run.result.ok());

  for (const auto& s : run.result.sessions) {
    const auto wav = io::read_wav_file(s.audio_path);
    CHECK(wav.sample_rate == 16000);
    REQUIRE(wav.samples.size() == s.audio_end - s.audio_begin);
    for (size_t i = 0; i < wav.samples.size(); ++i) {
      const float src = run.features.audio.samples[s.audio_begin + i];
      REQUIRE(wav.samples[i] == io::quantize_i16(src));
    }

    const auto rows = io::read_vibration_csv_file(s.vibration_path);
    REQUIRE(rows.size() == s.vib_end - s.vib_begin);
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].t == doctest::Approx(static_cast<double>(i) / 4000.0)
                             .epsilon(1e-9));
      const float want[3] = {
          run.features.vibration[0].samples[s.vib_begin + i],
          run.features.vibration[1].samples[s.vib_begin + i],
          run.features.vibration[2].samples[s.vib_begin + i]};
      const float got[3] = {rows[i].x, rows[i].y, rows[i].z};
      for (int a = 0; a < 3; ++a) {
        if (std::isnan(want[a])) {
          REQUIRE(std::isnan(got[a]));
        } else {
          const float quant = io::dequantize_i16(io::quantize_i16(want[a]));
          REQUIRE(got[a] == doctest::Approx(quant).epsilon(2e-6));
        }
      }
    }
  }
  fs::remove_all(run.dir);
}

TEST_CASE("post-event window: session covers the event and the window") {
  // One DoorOpen at a known onset with a 3 s window.
  Scenario s;
  s.length = 30.0;
  s.events = {{EventKind::DoorOpen, 10.0, 0.3}};
  s.class_counts = {1, 0, 0};
  ScenarioConfig cfg;
  const auto features = synth_feature_streams(s, cfg, 55);
  const auto labeling = synth_labeling_streams(s, cfg);
  sim::LoggerConfig logger;
  logger.post_event_window = 3.0;
  const fs::path dir = fresh_dir("window");
  const auto result = sim::run_simulation(features, labeling, logger, dir);
  REQUIRE(result.ok());
  REQUIRE(result.sessions.size() == 1);
  const auto& session = result.sessions[0];

  // Label within one audio sample period of the reed rising edge.
  const double reed_edge = std::ceil(10.0 * 1000.0) / 1000.0;
  CHECK(std::abs(session.labels[0].raised_at - reed_edge) <= 1.0 / 16000.0);

  // Audio coverage: [pre-event buffer start, onset + window].
  const double audio_begin_t = static_cast<double>(session.audio_begin) / 16000.0;
  const double audio_end_t = static_cast<double>(session.audio_end) / 16000.0;
  CHECK(audio_begin_t <= 10.0);
  CHECK(audio_end_t >= 13.0);
  // Pre-event context is bounded by the staged chunk plus the in-flight one.
  CHECK(10.0 - audio_begin_t <=
        2.0 * static_cast<double>(logger.buffer_capacity) / 16000.0 + 0.05);
  fs::remove_all(dir);
}

TEST_CASE("empty scenario: zero sessions, zero labels, empty label file") {
  Scenario s;
  s.length = 10.0;
  ScenarioConfig cfg;
  const auto features = synth_feature_streams(s, cfg, 1);
  const auto labeling = synth_labeling_streams(s, cfg);
  const fs::path dir = fresh_dir("empty");
  const auto result = sim::run_simulation(features, labeling, {}, dir);
  CHECK(result.ok());
  CHECK(result.sessions.empty());
  CHECK(result.labels.empty());
  CHECK(io::read_label_csv_file(result.label_csv).empty());
  fs::remove_all(dir);
}

TEST_CASE("labels are only written at DMA completion checkpoints") {
  const ScenarioConfig cfg = quick_scenario_config();
  sim::LoggerConfig logger;
  const SimRun run = simulate(cfg, 303, logger, "checkpoints");
  REQUIRE(run.result.ok());
  REQUIRE(run.result.label_check_times.size() == run.result.labels.size());
  const double audio_chunk = static_cast<double>(logger.buffer_capacity) / 16000.0;
  const double dma_worst = 3.0 * 2048.0 * 6.0 / logger.writer_bytes_per_s();
  for (size_t i = 0; i < run.result.labels.size(); ++i) {
    const double raised = run.result.labels[i].raised_at;
    const double checked = run.result.label_check_times[i];
    // Strictly after the flag, within one audio chunk plus transfer time.
    CHECK(checked > raised);
    CHECK(checked - raised <= audio_chunk + dma_worst + 1e-6);
  }
  fs::remove_all(run.dir);
}

TEST_CASE("identical inputs give byte-identical session trees") {
  const ScenarioConfig cfg = quick_scenario_config();
  sim::LoggerConfig logger;
  const SimRun a = simulate(cfg, 404, logger, "det_a");
  const SimRun b = simulate(cfg, 404, logger, "det_b");
  REQUIRE(a.result.ok());
  REQUIRE(b.result.ok());
  REQUIRE(a.result.sessions.size() == b.result.sessions.size());

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  for (size_t i = 0; i < a.result.sessions.size(); ++i) {
    CHECK(slurp(a.result.sessions[i].audio_path) ==
          slurp(b.result.sessions[i].audio_path));
    CHECK(slurp(a.result.sessions[i].vibration_path) ==
          slurp(b.result.sessions[i].vibration_path));
  }
  CHECK(slurp(a.result.label_csv) == slurp(b.result.label_csv));
  fs::remove_all(a.dir);
  fs::remove_all(b.dir);
}

TEST_CASE("starved writer produces a detected overrun fault") {
  const ScenarioConfig cfg = quick_scenario_config();
  sim::LoggerConfig logger;
  // Raw spi/8 = 57.5 kB/s passes the config invariant; the 0.8 efficiency
  // factor drops the effective writer below the 56 kB/s acquisition rate.
  logger.spi_clock_hz = 460000.0;
  CHECK_NOTHROW(logger.validate());
  const SimRun run = simulate(cfg, 505, logger, "starved");
  REQUIRE_FALSE(run.result.ok());
  CHECK(run.result.faults.size() == 1);
  CHECK(run.result.faults[0].what.find("overrun") != std::string::npos);
  fs::remove_all(run.dir);
}

TEST_CASE("open file count never exceeds four") {
  const ScenarioConfig cfg = quick_scenario_config();
  const SimRun run = simulate(cfg, 606, {}, "files");
  REQUIRE(run.result.ok());
  CHECK(run.result.max_open_files <= 4);
  CHECK(run.result.max_open_files == 3);  // audio + vibration + labels
  fs::remove_all(run.dir);
}

TEST_CASE("run report carries high-water marks and a fault list") {
  const ScenarioConfig cfg = quick_scenario_config();
  const SimRun run = simulate(cfg, 707, {}, "report");
  REQUIRE(run.result.ok());
  std::ifstream in(run.result.report_path);
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("highwater") != std::string::npos);
  CHECK(text.find("faults") != std::string::npos);
  CHECK(text.find("storage_backlog_bytes") != std::string::npos);
  fs::remove_all(run.dir);
}
