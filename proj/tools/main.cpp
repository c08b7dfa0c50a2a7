// tubeflow command-line front end: generate or read an event stream, run the
// anomaly pipeline over it, and emit detections, metrics, or sweep tables.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tubeflow/bench.hpp"
#include "tubeflow/detector.hpp"
#include "tubeflow/error.hpp"
#include "tubeflow/events.hpp"
#include "tubeflow/pipeline.hpp"

namespace {

struct ToolOptions {
  std::string input_path;
  std::string generate_spec;
  std::string out_path;
  std::string metrics_path;
  std::string dump_matrix_path;
  std::string sweep_spec;
  int repeats = 1;
  tubeflow::PipelineConfig cfg;
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw tubeflow::ConfigError("cannot open output file: " + path);
  out << text;
}

int run_tool(const ToolOptions& opts) {
  using namespace tubeflow;

  std::vector<SensorEvent> input;
  if (!opts.generate_spec.empty()) {
    input = generate_stream(parse_generate_spec(opts.generate_spec));
  } else {
    input = read_events_file(opts.input_path);
  }

  if (!opts.sweep_spec.empty()) {
    auto [kind, values] = parse_sweep_spec(opts.sweep_spec);
    auto rows = bench_sweep(opts.cfg, kind, values, input, opts.repeats, [](const BenchRow& r) {
      std::cerr << "sweep: threads=" << r.threads << " window=" << r.window
                << " clusters=" << r.clusters << " -> " << r.throughput << " events/s\n";
    });
    const std::string csv = metrics_csv(rows, true);
    if (!opts.metrics_path.empty()) {
      write_text_file(opts.metrics_path, csv);
    } else {
      std::cout << csv;
    }
    return 0;
  }

  PipelineResult result = run_anomaly_pipeline(opts.cfg, input, !opts.dump_matrix_path.empty());
  if (opts.repeats > 1) {
    result.metrics = measure_run(opts.cfg, input, opts.repeats);
  }

  if (!opts.out_path.empty()) {
    write_detections_file(opts.out_path, result.detections);
  } else {
    write_detections(std::cout, result.detections);
  }

  if (!opts.metrics_path.empty()) {
    BenchRow row = make_row(opts.cfg, count_sensors(input), result.metrics);
    write_text_file(opts.metrics_path, metrics_csv({row}, false));
  }

  if (!opts.dump_matrix_path.empty()) {
    std::string text;
    for (const auto& [sensor, csv] : result.matrix_csv) {
      text += "# sensor " + std::to_string(sensor) + "\n";
      text += csv;
    }
    write_text_file(opts.dump_matrix_path, text);
  }

  std::size_t anomalies = 0;
  for (const auto& d : result.detections) anomalies += d.anomaly ? 1 : 0;
  std::cerr << "processed " << result.metrics.events_processed << " events from "
            << count_sensors(input) << " sensors in " << result.metrics.wall_seconds << " s ("
            << result.metrics.throughput << " events/s), " << anomalies << " anomalies\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace tubeflow;

  ToolOptions opts;
  CLI::App app{"data-parallel sliding-window anomaly detection over sensor event streams"};

  auto* input = app.add_option("--input", opts.input_path,
                               "event CSV (timestamp,machine_id,sensor_id,value)");
  auto* generate = app.add_option(
      "--generate", opts.generate_spec,
      "synthetic stream spec: sensors=,events=,seed=,noise=,regimes=a+b,anomalies=s:o+s:o");
  input->excludes(generate);
  generate->excludes(input);

  app.add_option("--out", opts.out_path, "detection CSV path (default: stdout)");
  app.add_option("--metrics", opts.metrics_path, "write run metrics CSV here");
  app.add_option("--dump-matrix", opts.dump_matrix_path,
                 "write per-sensor transition matrices here");
  app.add_option("--sweep", opts.sweep_spec,
                 "benchmark sweep: windows=...|clusters=...|threads=... (comma-separated values)");
  app.add_option("--repeats", opts.repeats, "timing repeats, median wins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app.add_option("--window", opts.cfg.params.window, "window capacity (events, or time span)")
      ->capture_default_str();
  app.add_option("--clusters", opts.cfg.params.clusters, "number of value clusters")
      ->capture_default_str();
  app.add_option("--max-iters", opts.cfg.params.max_iters, "Lloyd iteration cap per update")
      ->capture_default_str();
  app.add_option("--seq-len", opts.cfg.params.seq_len, "transition sequence length")
      ->capture_default_str();
  app.add_option("--theta", opts.cfg.params.theta, "anomaly threshold on sequence probability")
      ->capture_default_str();
  app.add_option("--rebuild-every", opts.cfg.params.rebuild_every,
                 "probability product rebuild period")
      ->capture_default_str();
  app.add_option("--threads", opts.cfg.thread_count, "worker thread count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--queue-capacity", opts.cfg.queue_capacity, "per-stage queue capacity")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--tubes", opts.cfg.tube_count, "tube count (0: one per sensor)")
      ->capture_default_str();

  app.add_option("--window-mode", opts.cfg.params.window_mode, "count | time")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, WindowMode>{{"count", WindowMode::count},
                                            {"time", WindowMode::time}}));
  app.add_option("--prob-mode", opts.cfg.params.prob_mode, "incremental | exact")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ProbMode>{{"incremental", ProbMode::incremental},
                                          {"exact", ProbMode::exact}}));
  app.add_option("--update-path", opts.cfg.update_path, "incremental | rebuild")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, UpdatePath>{{"incremental", UpdatePath::incremental},
                                            {"rebuild", UpdatePath::rebuild}}));
  app.add_option("--order", opts.cfg.order, "train-first | infer-first")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ExecutionOrder>{{"train-first", ExecutionOrder::train_first},
                                                {"infer-first", ExecutionOrder::infer_first}}));

  CLI11_PARSE(app, argc, argv);

  if (opts.input_path.empty() && opts.generate_spec.empty()) {
    std::cerr << "error: one of --input or --generate is required\n";
    return 2;
  }

  try {
    return run_tool(opts);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
