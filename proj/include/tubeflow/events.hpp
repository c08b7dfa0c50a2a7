#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tubeflow {

// One sensor measurement. Timestamps are abstract nonnegative time units;
// the engine only relies on their ordering.
struct SensorEvent {
  std::int64_t timestamp = 0;
  std::int64_t machine_id = 0;
  std::int64_t sensor_id = 0;
  double value = 0.0;

  friend bool operator==(const SensorEvent&, const SensorEvent&) = default;
};

// Predictor output for one input event. `probability` stays empty until the
// model has observed a full length-N transition sequence.
struct DetectionEvent {
  std::int64_t timestamp = 0;
  std::int64_t sensor_id = 0;
  std::optional<double> probability;
  bool anomaly = false;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

// Input rows are `timestamp,machine_id,sensor_id,value`. Output rows are
// `timestamp,sensor_id,probability,anomaly` with NA for an undefined
// probability and 0/1 flags. Doubles serialize in shortest round-trip form,
// so serialize/parse are mutually inverse on valid records.
SensorEvent parse_event(std::string_view line, std::size_t line_no = 0);
std::string serialize_event(const SensorEvent& e);
std::string format_double(double value);
DetectionEvent parse_detection(std::string_view line, std::size_t line_no = 0);
std::string serialize_detection(const DetectionEvent& d);

inline constexpr std::string_view kDetectionHeader = "timestamp,sensor_id,probability,anomaly";

// Reads an event stream, skipping blank lines and `#` comments.
std::vector<SensorEvent> read_events(std::istream& in);
std::vector<SensorEvent> read_events_file(const std::string& path);

void write_detections(std::ostream& out, const std::vector<DetectionEvent>& detections);
void write_detections_file(const std::string& path, const std::vector<DetectionEvent>& detections);
std::string detections_to_string(const std::vector<DetectionEvent>& detections);

// Deterministic synthetic stream: sensors emit round-robin with strictly
// increasing global timestamps, values are a per-sensor base level plus
// seeded uniform noise. Listed (sensor, ordinal) positions emit a value far
// outside the noise band instead.
struct GeneratorConfig {
  std::int64_t sensor_count = 1;
  std::int64_t events_per_sensor = 1;
  std::uint64_t seed = 0;
  std::vector<double> regime_values;  // base level per sensor; defaulted when empty
  double noise_amplitude = 0.0;
  std::vector<std::pair<std::int64_t, std::int64_t>> anomaly_positions;  // (sensor_id, ordinal)
};

std::vector<SensorEvent> generate_stream(const GeneratorConfig& cfg);

// "sensors=16,events=1000,seed=42,noise=0.5,regimes=100+200,anomalies=3:100+7:250"
// with only 'events' mandatory.
GeneratorConfig parse_generate_spec(const std::string& spec);

// Distance between an injected value and its sensor's base level.
double anomaly_jump_offset(const GeneratorConfig& cfg);

// Base level actually used for a sensor (explicit regime value or default).
double generator_base_level(const GeneratorConfig& cfg, std::int64_t sensor);

}  // namespace tubeflow
