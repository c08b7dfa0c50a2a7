#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tubeflow/events.hpp"
#include "tubeflow/pipeline.hpp"

namespace tubeflow {

enum class SweepKind { windows, clusters, threads };

struct BenchRow {
  int threads = 1;
  std::int64_t sensors = 0;
  std::int64_t window = 0;
  std::size_t clusters = 0;
  std::size_t events = 0;
  double seconds = 0.0;     // median over repeats
  double throughput = 0.0;  // events per median second
  double normalized = 0.0;  // 100 * throughput / best throughput in the sweep
};

inline constexpr std::string_view kMetricsHeader =
    "threads,sensors,window,clusters,events,seconds,events_per_second";

std::int64_t count_sensors(const std::vector<SensorEvent>& input);

// Runs the pipeline `repeats` times and reports the median wall time;
// throughput is events over that median.
RunMetrics measure_run(const PipelineConfig& cfg, const std::vector<SensorEvent>& input,
                       int repeats);

// One pipeline run per swept value (windows / clusters / thread counts).
// `progress`, when set, sees each row as it lands, before `normalized` is
// known; the returned rows carry the final normalized column.
std::vector<BenchRow> bench_sweep(const PipelineConfig& base, SweepKind kind,
                                  const std::vector<std::int64_t>& values,
                                  const std::vector<SensorEvent>& input, int repeats,
                                  const std::function<void(const BenchRow&)>& progress = {});

BenchRow make_row(const PipelineConfig& cfg, std::int64_t sensors, const RunMetrics& m);

// Header plus one line per row; sweeps append the `normalized` column.
std::string metrics_csv(const std::vector<BenchRow>& rows, bool with_normalized);

// "kind=v1,v2,..." with kind one of windows | clusters | threads.
std::pair<SweepKind, std::vector<std::int64_t>> parse_sweep_spec(const std::string& spec);

}  // namespace tubeflow
