#include "rundrift/pipeline.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

namespace rundrift {
namespace {

// One interval boundary: the sudden report that closed the interval and the
// run histogram of the traces inside it.  The final message carries the tail
// interval and no drift.
struct BoundaryMsg {
  bool end = false;
  SuddenDrift drift;
  Histogram interval;
};

// Minimal bounded MPSC hand-off queue; push blocks when full.
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t cap) : cap_(cap) {}

  void push(BoundaryMsg msg) {
    std::unique_lock lock(m_);
    not_full_.wait(lock, [&] { return q_.size() < cap_; });
    q_.push_back(std::move(msg));
    not_empty_.notify_one();
  }

  BoundaryMsg pop() {
    std::unique_lock lock(m_);
    not_empty_.wait(lock, [&] { return !q_.empty(); });
    BoundaryMsg msg = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return msg;
  }

 private:
  std::mutex m_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<BoundaryMsg> q_;
  std::size_t cap_;
};

constexpr std::size_t kQueueCapacity = 4;

// Streaming counterpart of process_queue: holds at most two pending
// (drift, preceding-interval) pairs and tests the older pair as soon as the
// interval after the younger one closes.  Greedy left-to-right pairing, both
// members of a confirmed pair consumed — byte-identical outcomes.
class GradualConsumer {
 public:
  GradualConsumer(double alpha, GradualOutcome& out) : alpha_(alpha), out_(out) {}

  void consume(BoundaryMsg msg) {
    if (pending_.size() == 2) {
      GradualCandidate cand{pending_[0].first, pending_[1].first,
                            pending_[0].second, pending_[1].second,
                            msg.interval};
      auto confirmed = test_gradual(cand, alpha_);
      if (confirmed.has_value()) {
        out_.gradual.push_back(*confirmed);
        pending_.clear();
      } else {
        out_.sudden.push_back(pending_.front().first);
        pending_.erase(pending_.begin());
      }
    }
    if (msg.end) {
      for (auto& p : pending_) out_.sudden.push_back(p.first);
      pending_.clear();
    } else {
      pending_.emplace_back(msg.drift, std::move(msg.interval));
    }
  }

 private:
  double alpha_;
  GradualOutcome& out_;
  std::vector<std::pair<SuddenDrift, Histogram>> pending_;
};

// Run entries of the currently open stream interval, ascending by index.
// Closing at a drift position splits the tail off into the next interval;
// only the `cap` most recent entries count toward the histogram, mirroring
// the detector's own bounded memory of the stream.
class IntervalBuilder {
 public:
  explicit IntervalBuilder(std::size_t cap) : cap_(cap) {}

  void add(std::vector<std::pair<std::int64_t, std::string>> entries) {
    for (auto& e : entries) current_.push_back(std::move(e));
  }

  Histogram close_at(std::int64_t position) {
    const auto split = std::lower_bound(
        current_.begin(), current_.end(), position,
        [](const auto& entry, std::int64_t pos) { return entry.first < pos; });
    Histogram h = histogram_of(current_.begin(), split);
    current_.erase(current_.begin(), split);
    return h;
  }

  Histogram close_all() {
    Histogram h = histogram_of(current_.begin(), current_.end());
    current_.clear();
    return h;
  }

 private:
  using Iter = std::vector<std::pair<std::int64_t, std::string>>::iterator;

  Histogram histogram_of(Iter first, Iter last) {
    const std::size_t n = static_cast<std::size_t>(last - first);
    if (n > cap_) first = last - static_cast<std::ptrdiff_t>(cap_);
    Histogram h;
    for (Iter it = first; it != last; ++it) h.add(it->second);
    return h;
  }

  std::size_t cap_;
  std::vector<std::pair<std::int64_t, std::string>> current_;
};

}  // namespace

DriftReport run_pipeline(std::span<const Trace> ordered, const PipelineConfig& cfg) {
  SuddenDetector detector(cfg.detector);
  const double alpha =
      cfg.gradual_alpha > 0.0 ? cfg.gradual_alpha : detector.config().chi_threshold;

  DriftReport report;
  report.log_id = cfg.log_id;

  if (!cfg.gradual) {
    for (const Trace& trace : ordered) {
      if (auto drift = detector.observe(trace)) report.sudden.push_back(*drift);
      detector.drain_entry_runs();  // keep the entry log from accumulating
    }
  } else {
    GradualOutcome outcome;
    BoundedQueue queue(kQueueCapacity);
    std::exception_ptr consumer_error;
    std::thread consumer([&] {
      try {
        GradualConsumer c(alpha, outcome);
        for (;;) {
          BoundaryMsg msg = queue.pop();
          const bool end = msg.end;
          c.consume(std::move(msg));
          if (end) break;
        }
      } catch (...) {
        consumer_error = std::current_exception();
      }
    });

    IntervalBuilder intervals(
        static_cast<std::size_t>(detector.config().max_buffer));
    for (const Trace& trace : ordered) {
      auto drift = detector.observe(trace);
      intervals.add(detector.drain_entry_runs());
      if (drift.has_value()) {
        queue.push(BoundaryMsg{false, *drift, intervals.close_at(drift->position)});
      }
    }
    queue.push(BoundaryMsg{true, SuddenDrift{}, intervals.close_all()});
    consumer.join();
    if (consumer_error) std::rethrow_exception(consumer_error);

    report.sudden = std::move(outcome.sudden);
    report.gradual = std::move(outcome.gradual);
  }

  report.p_series = detector.p_series();
  report.config_echo = detector.config();
  report.gradual_mode = cfg.gradual;
  report.final_window = detector.window();
  report.traces = detector.traces_seen();
  return report;
}

DriftReport run_pipeline(const EventLog& log, const PipelineConfig& cfg) {
  const std::vector<Trace> ordered = stream_traces(log);
  return run_pipeline(std::span<const Trace>(ordered), cfg);
}

std::string report_to_json(const DriftReport& report) {
  nlohmann::json drifts = nlohmann::json::array();
  for (const SuddenDrift& d : report.sudden) {
    drifts.push_back({{"type", "sudden"},
                      {"position", d.position},
                      {"confirmed_at", d.confirmed_at},
                      {"delay", d.delay},
                      {"window", d.window}});
  }
  for (const GradualDrift& d : report.gradual) {
    drifts.push_back({{"type", "gradual"},
                      {"start", d.start},
                      {"end", d.end},
                      {"weight_before", d.weight_before},
                      {"weight_after", d.weight_after},
                      {"gof", d.gof},
                      {"critical", d.critical},
                      {"delay", d.delay}});
  }
  std::sort(drifts.begin(), drifts.end(),
            [](const nlohmann::json& a, const nlohmann::json& b) {
              const std::int64_t pa =
                  a.contains("position") ? a["position"].get<std::int64_t>()
                                         : a["start"].get<std::int64_t>();
              const std::int64_t pb =
                  b.contains("position") ? b["position"].get<std::int64_t>()
                                         : b["start"].get<std::int64_t>();
              return pa < pb;
            });
  nlohmann::json config{{"init_window", report.config_echo.init_window},
                        {"min_window", report.config_echo.min_window},
                        {"max_window", report.config_echo.max_window},
                        {"max_buffer", report.config_echo.max_buffer},
                        {"chi_threshold", report.config_echo.chi_threshold},
                        {"phi_divisor", report.config_echo.phi_divisor},
                        {"threads", report.config_echo.threads},
                        {"gradual", report.gradual_mode}};
  nlohmann::json j{{"schema_version", 1},
                   {"log_id", report.log_id},
                   {"traces", report.traces},
                   {"final_window", report.final_window},
                   {"p_series_path", report.p_series_path.empty()
                                         ? nlohmann::json(nullptr)
                                         : nlohmann::json(report.p_series_path)},
                   {"config_echo", std::move(config)},
                   {"drifts", std::move(drifts)}};
  return j.dump(2);
}

DriftReport report_from_json(const std::string& json) {
  const nlohmann::json j = nlohmann::json::parse(json);
  if (!j.is_object() || j.value("schema_version", 0) != 1) {
    throw std::invalid_argument("report: unsupported schema");
  }
  DriftReport report;
  report.log_id = j.value("log_id", std::string{});
  report.traces = j.value("traces", std::int64_t{0});
  report.final_window = j.value("final_window", 0);
  if (j.contains("p_series_path") && j["p_series_path"].is_string()) {
    report.p_series_path = j["p_series_path"].get<std::string>();
  }
  if (j.contains("config_echo") && j["config_echo"].is_object()) {
    const nlohmann::json& c = j["config_echo"];
    report.config_echo.init_window = c.value("init_window", 100);
    report.config_echo.min_window = c.value("min_window", 0);
    report.config_echo.max_window = c.value("max_window", 0);
    report.config_echo.max_buffer = c.value("max_buffer", 0);
    report.config_echo.chi_threshold = c.value("chi_threshold", 0.05);
    report.config_echo.phi_divisor = c.value("phi_divisor", 3);
    report.config_echo.threads = c.value("threads", 1);
    report.gradual_mode = c.value("gradual", false);
  }
  for (const nlohmann::json& d : j.value("drifts", nlohmann::json::array())) {
    const std::string type = d.at("type").get<std::string>();
    if (type == "sudden") {
      SuddenDrift s;
      s.position = d.at("position").get<std::int64_t>();
      s.confirmed_at = d.at("confirmed_at").get<std::int64_t>();
      s.delay = d.at("delay").get<std::int64_t>();
      s.window = d.at("window").get<int>();
      report.sudden.push_back(s);
    } else if (type == "gradual") {
      GradualDrift g;
      g.start = d.at("start").get<std::int64_t>();
      g.end = d.at("end").get<std::int64_t>();
      g.weight_before = d.at("weight_before").get<double>();
      g.weight_after = d.at("weight_after").get<double>();
      g.gof = d.at("gof").get<double>();
      g.critical = d.at("critical").get<double>();
      g.delay = d.at("delay").get<std::int64_t>();
      report.gradual.push_back(g);
    } else {
      throw std::invalid_argument("report: unknown drift type '" + type + "'");
    }
  }
  return report;
}

}  // namespace rundrift
