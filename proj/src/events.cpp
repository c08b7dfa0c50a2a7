#include "tubeflow/events.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tubeflow/error.hpp"

namespace tubeflow {

namespace {

[[noreturn]] void fail_parse(std::size_t line_no, int field, const char* name, const char* what) {
  std::ostringstream msg;
  msg << "line " << line_no << ": field " << field << " (" << name << "): " << what;
  throw ParseError(msg.str());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits on commas into exactly `n` fields or throws.
template <std::size_t N>
std::array<std::string_view, N> split_fields(std::string_view line, std::size_t line_no) {
  std::array<std::string_view, N> out;
  std::size_t field = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      if (field >= N) {
        std::ostringstream msg;
        msg << "line " << line_no << ": expected " << N << " comma-separated fields, got more";
        throw ParseError(msg.str());
      }
      out[field++] = trim(line.substr(start, i - start));
      start = i + 1;
    }
  }
  if (field != N) {
    std::ostringstream msg;
    msg << "line " << line_no << ": expected " << N << " comma-separated fields, got " << field;
    throw ParseError(msg.str());
  }
  return out;
}

std::int64_t parse_i64(std::string_view s, std::size_t line_no, int field, const char* name) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail_parse(line_no, field, name, "not an integer");
  }
  return v;
}

double parse_f64(std::string_view s, std::size_t line_no, int field, const char* name) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail_parse(line_no, field, name, "not a number");
  }
  if (!std::isfinite(v)) {
    fail_parse(line_no, field, name, "non-finite value");
  }
  return v;
}

}  // namespace

// Shortest decimal form that round-trips back to the same double.
std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

SensorEvent parse_event(std::string_view line, std::size_t line_no) {
  auto f = split_fields<4>(line, line_no);
  SensorEvent e;
  e.timestamp = parse_i64(f[0], line_no, 1, "timestamp");
  if (e.timestamp < 0) fail_parse(line_no, 1, "timestamp", "negative timestamp");
  e.machine_id = parse_i64(f[1], line_no, 2, "machine_id");
  e.sensor_id = parse_i64(f[2], line_no, 3, "sensor_id");
  e.value = parse_f64(f[3], line_no, 4, "value");
  return e;
}

std::string serialize_event(const SensorEvent& e) {
  std::string out;
  out += std::to_string(e.timestamp);
  out += ',';
  out += std::to_string(e.machine_id);
  out += ',';
  out += std::to_string(e.sensor_id);
  out += ',';
  out += format_double(e.value);
  return out;
}

DetectionEvent parse_detection(std::string_view line, std::size_t line_no) {
  auto f = split_fields<4>(line, line_no);
  DetectionEvent d;
  d.timestamp = parse_i64(f[0], line_no, 1, "timestamp");
  d.sensor_id = parse_i64(f[1], line_no, 2, "sensor_id");
  if (f[2] == "NA") {
    d.probability.reset();
  } else {
    double p = parse_f64(f[2], line_no, 3, "probability");
    if (p < 0.0 || p > 1.0) fail_parse(line_no, 3, "probability", "outside [0, 1]");
    d.probability = p;
  }
  if (f[3] == "0") {
    d.anomaly = false;
  } else if (f[3] == "1") {
    d.anomaly = true;
  } else {
    fail_parse(line_no, 4, "anomaly", "expected 0 or 1");
  }
  return d;
}

std::string serialize_detection(const DetectionEvent& d) {
  std::string out;
  out += std::to_string(d.timestamp);
  out += ',';
  out += std::to_string(d.sensor_id);
  out += ',';
  out += d.probability ? format_double(*d.probability) : "NA";
  out += ',';
  out += d.anomaly ? '1' : '0';
  return out;
}

std::vector<SensorEvent> read_events(std::istream& in) {
  std::vector<SensorEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    out.push_back(parse_event(s, line_no));
  }
  return out;
}

std::vector<SensorEvent> read_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file: " + path);
  return read_events(in);
}

void write_detections(std::ostream& out, const std::vector<DetectionEvent>& detections) {
  out << kDetectionHeader << '\n';
  for (const auto& d : detections) out << serialize_detection(d) << '\n';
}

void write_detections_file(const std::string& path, const std::vector<DetectionEvent>& detections) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  write_detections(out, detections);
}

std::string detections_to_string(const std::vector<DetectionEvent>& detections) {
  std::ostringstream out;
  write_detections(out, detections);
  return out.str();
}

namespace {

void validate_generator(const GeneratorConfig& cfg) {
  if (cfg.sensor_count < 1) throw ConfigError("generator: sensor_count must be >= 1");
  if (cfg.events_per_sensor < 1) throw ConfigError("generator: events_per_sensor must be >= 1");
  if (!(cfg.noise_amplitude >= 0.0) || !std::isfinite(cfg.noise_amplitude)) {
    throw ConfigError("generator: noise_amplitude must be finite and >= 0");
  }
  if (!cfg.regime_values.empty() &&
      cfg.regime_values.size() != static_cast<std::size_t>(cfg.sensor_count)) {
    throw ConfigError("generator: regime_values must list one base level per sensor");
  }
  for (double v : cfg.regime_values) {
    if (!std::isfinite(v)) throw ConfigError("generator: regime value must be finite");
  }
  for (const auto& [sensor, ordinal] : cfg.anomaly_positions) {
    if (sensor < 0 || sensor >= cfg.sensor_count) {
      throw ConfigError("generator: anomaly position names unknown sensor " + std::to_string(sensor));
    }
    if (ordinal < 0 || ordinal >= cfg.events_per_sensor) {
      throw ConfigError("generator: anomaly ordinal " + std::to_string(ordinal) +
                        " outside per-sensor event count");
    }
  }
}

// xorshift-style mix; keeps the stream independent of the standard library's
// distribution implementations so identical configs are bit-identical anywhere.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [-1, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }
};

}  // namespace

double generator_base_level(const GeneratorConfig& cfg, std::int64_t sensor) {
  if (!cfg.regime_values.empty()) return cfg.regime_values[static_cast<std::size_t>(sensor)];
  return 100.0 * static_cast<double>(sensor + 1);
}

double anomaly_jump_offset(const GeneratorConfig& cfg) {
  // Strictly outside the 10x noise band even when the band is degenerate.
  return 10.0 * cfg.noise_amplitude + 1.0;
}

GeneratorConfig parse_generate_spec(const std::string& spec) {
  GeneratorConfig cfg;
  cfg.events_per_sensor = 0;  // mandatory key; validated below

  const auto parse_int = [](std::string_view s, const char* key) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError(std::string("generate: bad integer for '") + key + "'");
    }
    return v;
  };
  const auto parse_num = [](std::string_view s, const char* key) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError(std::string("generate: bad number for '") + key + "'");
    }
    return v;
  };
  const auto each_part = [](std::string_view s, char sep, auto&& fn) {
    std::size_t pos = 0;
    while (pos <= s.size()) {
      std::size_t end = s.find(sep, pos);
      if (end == std::string_view::npos) end = s.size();
      fn(s.substr(pos, end - pos));
      pos = end + 1;
    }
  };

  each_part(spec, ',', [&](std::string_view item) {
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("generate: expected key=value, got '" + std::string(item) + "'");
    }
    const std::string_view key = item.substr(0, eq);
    const std::string_view val = item.substr(eq + 1);
    if (key == "sensors") {
      cfg.sensor_count = parse_int(val, "sensors");
    } else if (key == "events") {
      cfg.events_per_sensor = parse_int(val, "events");
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(val, "seed"));
    } else if (key == "noise") {
      cfg.noise_amplitude = parse_num(val, "noise");
    } else if (key == "regimes") {
      each_part(val, '+', [&](std::string_view r) {
        cfg.regime_values.push_back(parse_num(r, "regimes"));
      });
    } else if (key == "anomalies") {
      each_part(val, '+', [&](std::string_view a) {
        const std::size_t colon = a.find(':');
        if (colon == std::string_view::npos) {
          throw ConfigError("generate: anomalies take sensor:ordinal pairs, got '" +
                            std::string(a) + "'");
        }
        cfg.anomaly_positions.emplace_back(parse_int(a.substr(0, colon), "anomalies"),
                                           parse_int(a.substr(colon + 1), "anomalies"));
      });
    } else {
      throw ConfigError("generate: unknown key '" + std::string(key) + "'");
    }
  });

  if (cfg.events_per_sensor == 0) throw ConfigError("generate: 'events' is required");
  return cfg;
}

std::vector<SensorEvent> generate_stream(const GeneratorConfig& cfg) {
  validate_generator(cfg);
  SplitMix64 rng(cfg.seed);
  std::vector<SensorEvent> out;
  out.reserve(static_cast<std::size_t>(cfg.sensor_count * cfg.events_per_sensor));

  // Fast membership test for injected positions.
  auto is_anomaly = [&](std::int64_t sensor, std::int64_t ordinal) {
    for (const auto& [s, o] : cfg.anomaly_positions) {
      if (s == sensor && o == ordinal) return true;
    }
    return false;
  };

  std::int64_t ts = 0;
  const double jump = anomaly_jump_offset(cfg);
  for (std::int64_t ordinal = 0; ordinal < cfg.events_per_sensor; ++ordinal) {
    for (std::int64_t sensor = 0; sensor < cfg.sensor_count; ++sensor) {
      const double base = generator_base_level(cfg, sensor);
      double noise = cfg.noise_amplitude * rng.next_unit();
      double value = is_anomaly(sensor, ordinal) ? base + jump : base + noise;
      out.push_back(SensorEvent{ts++, 0, sensor, value});
    }
  }
  return out;
}

}  // namespace tubeflow
