// rundrift: detect process drifts in event logs, generate synthetic
// benchmark logs, and score detection reports against gold standards.
//
// Exit codes: 0 success, 2 unreadable/unparseable input, 3 invalid
// configuration or generation spec.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rundrift/eval.hpp"
#include "rundrift/generator.hpp"
#include "rundrift/log_ingest.hpp"
#include "rundrift/pipeline.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;

std::string infer_format(const std::string& path, const std::string& explicit_format) {
  if (!explicit_format.empty()) return explicit_format;
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".xes") return "xes";
  if (ext == ".csv") return "csv";
  throw rundrift::ParseError("cannot infer log format of '" + path +
                             "'; pass --format xes|csv");
}

rundrift::EventLog load_log(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rundrift::ParseError("cannot open '" + path + "'");
  return format == "xes" ? rundrift::parse_xes(in) : rundrift::parse_csv(in);
}

void save_log(const rundrift::EventLog& log, const std::string& path,
              const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (format == "xes") {
    rundrift::write_xes(log, out);
  } else {
    rundrift::write_csv(log, out);
  }
  if (!out.good()) throw std::runtime_error("error while writing '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out.good()) throw std::runtime_error("error while writing '" + path + "'");
}

void write_p_series_csv(const std::vector<rundrift::PSeriesEntry>& series,
                        const std::string& path) {
  std::ostringstream out;
  out << "stream_index,p_value,window_size\n";
  char buf[64];
  for (const rundrift::PSeriesEntry& e : series) {
    std::snprintf(buf, sizeof buf, "%.17g", e.p_value);
    out << e.stream_index << ',' << buf << ',' << e.window << '\n';
  }
  write_text(path, out.str());
}

struct DetectOptions {
  std::string input;
  std::string format;
  std::string output;
  std::string p_series_path;
  std::string log_id;
  int window = 100;
  int min_window = 0;
  int max_window = 0;
  int buffer = 0;
  double threshold = 0.05;
  int phi_divisor = 0;  // 0: 3, or 5 under --gradual
  int threads = 1;
  bool gradual = false;
};

int cmd_detect(const DetectOptions& opt) {
  const std::string format = infer_format(opt.input, opt.format);
  const rundrift::EventLog log = load_log(opt.input, format);

  rundrift::PipelineConfig cfg;
  cfg.detector.init_window = opt.window;
  cfg.detector.min_window = opt.min_window;
  cfg.detector.max_window = opt.max_window;
  cfg.detector.max_buffer = opt.buffer;
  cfg.detector.chi_threshold = opt.threshold;
  cfg.detector.phi_divisor =
      opt.phi_divisor > 0 ? opt.phi_divisor : (opt.gradual ? 5 : 3);
  cfg.detector.threads = opt.threads;
  cfg.gradual = opt.gradual;
  cfg.log_id = !opt.log_id.empty()
                   ? opt.log_id
                   : std::filesystem::path(opt.input).stem().string();

  rundrift::DriftReport report = rundrift::run_pipeline(log, cfg);
  if (!opt.p_series_path.empty()) {
    write_p_series_csv(report.p_series, opt.p_series_path);
    report.p_series_path = opt.p_series_path;
  }

  const std::string json = rundrift::report_to_json(report);
  if (opt.output.empty()) {
    std::cout << json << '\n';
  } else {
    write_text(opt.output, json + "\n");
  }
  std::cerr << "log '" << report.log_id << "': " << report.traces
            << " traces, " << report.sudden.size() << " sudden drift(s), "
            << report.gradual.size() << " gradual drift(s); final window "
            << report.final_window << '\n';
  return 0;
}

rundrift::ProcessModel model_from_spec(const nlohmann::json& value) {
  if (value.is_string()) {
    const std::string name = value.get<std::string>();
    if (auto model = rundrift::resolve_builtin_model(name)) return *model;
    std::string known = "base";
    for (const std::string& v : rundrift::bundled_variant_names()) {
      known += ", base-" + v;
    }
    throw std::invalid_argument("unknown model '" + name + "' (built-ins: " +
                                known + "); or pass an inline model object");
  }
  if (value.is_object()) return rundrift::model_from_json(value.dump());
  throw std::invalid_argument("model must be a built-in name or an inline object");
}

struct GenerateOptions {
  std::string spec_path;
  std::string output;
  std::string gold;
  std::string format;
  std::uint64_t seed = 42;
  int threads = 1;
};

int cmd_generate(const GenerateOptions& opt) {
  nlohmann::json spec;
  try {
    std::ifstream in(opt.spec_path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open spec '" + opt.spec_path + "'");
    spec = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid spec '" + opt.spec_path + "': " + e.what());
  }

  std::pair<rundrift::EventLog, rundrift::GoldStandard> generated;
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "sudden") {
      std::vector<rundrift::SuddenSegment> segments;
      for (const nlohmann::json& seg : spec.at("segments")) {
        rundrift::SuddenSegment s;
        s.model = model_from_spec(seg.at("model"));
        s.count = seg.at("count").get<std::size_t>();
        segments.push_back(std::move(s));
      }
      generated = rundrift::compose_sudden(segments, opt.seed, opt.threads);
    } else if (kind == "gradual") {
      generated = rundrift::compose_gradual(
          model_from_spec(spec.at("model_a")), model_from_spec(spec.at("model_b")),
          spec.at("pre_count").get<std::size_t>(),
          spec.at("post_count").get<std::size_t>(),
          spec.at("slope").get<double>(), opt.seed, opt.threads);
    } else {
      throw std::invalid_argument("spec kind must be 'sudden' or 'gradual'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid spec: ") + e.what());
  }

  std::string format = opt.format;
  if (format.empty()) {
    const std::string ext = std::filesystem::path(opt.output).extension().string();
    format = (ext == ".xes") ? "xes" : "csv";
  }
  save_log(generated.first, opt.output, format);
  const std::string gold_path =
      opt.gold.empty() ? opt.output + ".gold.json" : opt.gold;
  write_text(gold_path, rundrift::gold_to_json(generated.second) + "\n");

  std::cerr << "wrote " << generated.first.traces.size() << " traces to '"
            << opt.output << "' (" << format << "), gold standard to '"
            << gold_path << "' (" << generated.second.sudden.size()
            << " sudden, " << generated.second.gradual.size()
            << " gradual)\n";
  return 0;
}

struct EvaluateOptions {
  std::string report_path;
  std::string gold_path;
  bool gradual = false;
};

int cmd_evaluate(const EvaluateOptions& opt) {
  rundrift::DriftReport report;
  rundrift::GoldStandard gold;
  try {
    std::ifstream in(opt.report_path, std::ios::binary);
    if (!in) throw rundrift::ParseError("cannot open '" + opt.report_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    report = rundrift::report_from_json(ss.str());
  } catch (const rundrift::ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw rundrift::ParseError("report '" + opt.report_path + "': " + e.what());
  }
  try {
    std::ifstream in(opt.gold_path, std::ios::binary);
    if (!in) throw rundrift::ParseError("cannot open '" + opt.gold_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    gold = rundrift::gold_from_json(ss.str());
  } catch (const rundrift::ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw rundrift::ParseError("gold standard '" + opt.gold_path + "': " + e.what());
  }

  const rundrift::EvalResult result =
      opt.gradual ? rundrift::score_gradual(report.gradual, gold.gradual)
                  : rundrift::score_sudden(report.sudden, gold.sudden);

  nlohmann::json per_drift = nlohmann::json::array();
  for (const rundrift::PerDriftEntry& e : result.per_drift) {
    nlohmann::json row;
    row["gold"] = opt.gradual
                      ? nlohmann::json{{"start", e.gold_start}, {"end", e.gold_end}}
                      : nlohmann::json(e.gold_start);
    if (e.matched) {
      row["detection"] =
          opt.gradual
              ? nlohmann::json{{"start", e.det_start}, {"end", e.det_end}}
              : nlohmann::json(e.det_start);
      row["delay"] = e.delay;
    } else {
      row["detection"] = nullptr;
      row["delay"] = nullptr;
    }
    per_drift.push_back(std::move(row));
  }
  const nlohmann::json j{{"kind", opt.gradual ? "gradual" : "sudden"},
                         {"tp", result.tp},
                         {"fp", result.fp},
                         {"fn", result.fn},
                         {"precision", result.precision},
                         {"recall", result.recall},
                         {"f_score", result.f_score},
                         {"mean_delay", result.mean_delay},
                         {"per_drift", per_drift}};
  std::cout << j.dump(2) << '\n';

  char line[160];
  std::snprintf(line, sizeof line, "%-8s %4s %4s %4s %10s %8s %8s %11s",
                "kind", "tp", "fp", "fn", "precision", "recall", "f-score",
                "mean-delay");
  std::cerr << line << '\n';
  std::snprintf(line, sizeof line, "%-8s %4d %4d %4d %10.3f %8.3f %8.3f %11.1f",
                opt.gradual ? "gradual" : "sudden", result.tp, result.fp,
                result.fn, result.precision, result.recall, result.f_score,
                result.mean_delay);
  std::cerr << line << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"run-distribution drift detection for business process event logs"};
  app.require_subcommand(1);

  DetectOptions det;
  CLI::App* detect = app.add_subcommand(
      "detect", "detect sudden (and optionally gradual) drifts in a log");
  detect->add_option("input", det.input, "event log file (.xes or .csv)")
      ->required();
  detect->add_option("--format", det.format, "log format; inferred from the extension")
      ->check(CLI::IsMember({"xes", "csv"}));
  detect->add_option("-o,--output", det.output, "write the JSON report here instead of stdout");
  detect->add_option("--window", det.window, "initial adaptive window size")
      ->capture_default_str();
  detect->add_option("--min-window", det.min_window,
                     "smallest window (0: derive from the first tested window)")
      ->capture_default_str();
  detect->add_option("--max-window", det.max_window, "largest window (0: buffer / 2)")
      ->capture_default_str();
  detect->add_option("--buffer", det.buffer, "trace buffer capacity (0: 20 * window)")
      ->capture_default_str();
  detect->add_option("--threshold", det.threshold, "chi-square significance level")
      ->capture_default_str();
  detect->add_option("--phi-divisor", det.phi_divisor,
                     "phi = ceil(window / divisor) consecutive low p-values "
                     "confirm a drift (default 3; 5 with --gradual)");
  detect->add_option("--threads", det.threads, "worker threads for window rebuilds")
      ->capture_default_str();
  detect->add_flag("--gradual", det.gradual, "classify gradual drifts as well");
  detect->add_option("--p-series", det.p_series_path, "write the p-value series CSV here");
  detect->add_option("--log-id", det.log_id, "log identifier echoed in the report");

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "generate a synthetic log plus its gold standard");
  generate->add_option("spec", gen.spec_path, "generation spec (JSON)")->required();
  generate->add_option("-o,--output", gen.output, "log file to write")->required();
  generate->add_option("--gold", gen.gold, "gold-standard file (default: <output>.gold.json)");
  generate->add_option("--format", gen.format, "log format; inferred from the extension")
      ->check(CLI::IsMember({"xes", "csv"}));
  generate->add_option("--seed", gen.seed, "master random seed")->capture_default_str();
  generate->add_option("--threads", gen.threads, "sampling threads")->capture_default_str();

  EvaluateOptions ev;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score a detection report against a gold standard");
  evaluate->add_option("report", ev.report_path, "report JSON from 'detect'")->required();
  evaluate->add_option("gold", ev.gold_path, "gold-standard JSON from 'generate'")->required();
  evaluate->add_flag("--gradual", ev.gradual, "score gradual drifts instead of sudden ones");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (detect->parsed()) return cmd_detect(det);
    if (generate->parsed()) return cmd_generate(gen);
    return cmd_evaluate(ev);
  } catch (const rundrift::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
