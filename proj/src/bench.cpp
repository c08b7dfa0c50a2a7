#include "tubeflow/bench.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "tubeflow/error.hpp"

namespace tubeflow {

std::int64_t count_sensors(const std::vector<SensorEvent>& input) {
  std::unordered_set<std::int64_t> seen;
  for (const SensorEvent& e : input) seen.insert(e.sensor_id);
  return static_cast<std::int64_t>(seen.size());
}

namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

RunMetrics measure_run(const PipelineConfig& cfg, const std::vector<SensorEvent>& input,
                       int repeats) {
  if (repeats < 1) throw ConfigError("bench: repeats must be >= 1");
  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    seconds.push_back(run_anomaly_pipeline(cfg, input).metrics.wall_seconds);
  }
  RunMetrics m;
  m.events_processed = input.size();
  m.wall_seconds = median(std::move(seconds));
  m.throughput = static_cast<double>(input.size()) / std::max(m.wall_seconds, 1e-9);
  return m;
}

BenchRow make_row(const PipelineConfig& cfg, std::int64_t sensors, const RunMetrics& m) {
  BenchRow row;
  row.threads = cfg.thread_count;
  row.sensors = sensors;
  row.window = cfg.params.window;
  row.clusters = cfg.params.clusters;
  row.events = m.events_processed;
  row.seconds = m.wall_seconds;
  row.throughput = m.throughput;
  return row;
}

std::vector<BenchRow> bench_sweep(const PipelineConfig& base, SweepKind kind,
                                  const std::vector<std::int64_t>& values,
                                  const std::vector<SensorEvent>& input, int repeats,
                                  const std::function<void(const BenchRow&)>& progress) {
  if (values.empty()) throw ConfigError("sweep: needs at least one value");
  const std::int64_t sensors = count_sensors(input);

  std::vector<BenchRow> rows;
  rows.reserve(values.size());
  for (std::int64_t v : values) {
    if (v < 1) throw ConfigError("sweep: values must be >= 1");
    PipelineConfig cfg = base;
    switch (kind) {
      case SweepKind::windows:
        cfg.params.window = v;
        break;
      case SweepKind::clusters:
        cfg.params.clusters = static_cast<std::size_t>(v);
        break;
      case SweepKind::threads:
        cfg.thread_count = static_cast<int>(v);
        break;
    }
    BenchRow row = make_row(cfg, sensors, measure_run(cfg, input, repeats));
    if (progress) progress(row);
    rows.push_back(row);
  }

  double best = 0.0;
  for (const BenchRow& r : rows) best = std::max(best, r.throughput);
  for (BenchRow& r : rows) {
    // Grouped so the best row lands on exactly 100.
    r.normalized = best > 0.0 ? 100.0 * (r.throughput / best) : 0.0;
  }
  return rows;
}

std::string metrics_csv(const std::vector<BenchRow>& rows, bool with_normalized) {
  std::string out(kMetricsHeader);
  if (with_normalized) out += ",normalized";
  out += '\n';
  for (const BenchRow& r : rows) {
    out += std::to_string(r.threads);
    out += ',';
    out += std::to_string(r.sensors);
    out += ',';
    out += std::to_string(r.window);
    out += ',';
    out += std::to_string(r.clusters);
    out += ',';
    out += std::to_string(r.events);
    out += ',';
    out += format_double(r.seconds);
    out += ',';
    out += format_double(r.throughput);
    if (with_normalized) {
      out += ',';
      out += format_double(r.normalized);
    }
    out += '\n';
  }
  return out;
}

std::pair<SweepKind, std::vector<std::int64_t>> parse_sweep_spec(const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("sweep: expected kind=v1,v2,... got '" + spec + "'");
  }
  const std::string kind_name = spec.substr(0, eq);
  SweepKind kind;
  if (kind_name == "windows") {
    kind = SweepKind::windows;
  } else if (kind_name == "clusters") {
    kind = SweepKind::clusters;
  } else if (kind_name == "threads") {
    kind = SweepKind::threads;
  } else {
    throw ConfigError("sweep: unknown kind '" + kind_name +
                      "' (expected windows, clusters, or threads)");
  }

  std::vector<std::int64_t> values;
  std::size_t pos = eq + 1;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const char* first = spec.data() + pos;
    const char* last = spec.data() + comma;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) {
      throw ConfigError("sweep: bad value '" + std::string(first, last) + "'");
    }
    values.push_back(v);
    pos = comma + 1;
  }
  if (values.empty()) throw ConfigError("sweep: needs at least one value");
  return {kind, values};
}

}  // namespace tubeflow
