#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rundrift/event_log.hpp"
#include "rundrift/gradual.hpp"
#include "rundrift/sudden.hpp"

namespace rundrift {

struct PipelineConfig {
  DetectorConfig detector;
  bool gradual = false;        // also classify gradual drifts
  double gradual_alpha = 0.0;  // 0: reuse detector.chi_threshold
  std::string log_id;          // copied into the report verbatim
};

struct DriftReport {
  std::string log_id;
  std::vector<SuddenDrift> sudden;    // in gradual mode: reports not absorbed
  std::vector<GradualDrift> gradual;  // empty unless gradual mode is on
  std::vector<PSeriesEntry> p_series;
  std::string p_series_path;          // where the CSV went, if anywhere
  DetectorConfig config_echo;         // resolved configuration actually used
  bool gradual_mode = false;
  int final_window = 0;
  std::int64_t traces = 0;
};

// Feeds the log through the sudden detector in streaming order.  In gradual
// mode a consumer thread receives each confirmed drift together with the run
// histogram of the stream interval it closes (over a bounded hand-off queue)
// and pairs neighbouring drifts exactly like process_queue does.
DriftReport run_pipeline(const EventLog& log, const PipelineConfig& cfg);

// Same, over traces already in streaming order.
DriftReport run_pipeline(std::span<const Trace> ordered, const PipelineConfig& cfg);

// Report (de)serialization; schema_version 1.
std::string report_to_json(const DriftReport& report);
DriftReport report_from_json(const std::string& json);

}  // namespace rundrift
