#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tubeflow/detector.hpp"
#include "tubeflow/events.hpp"

namespace tubeflow {

// Where an event goes: a processing tube on a machine. This build runs a
// single machine, so machine_id is always 0; the field keeps the routing
// contract explicit.
struct RoutingDecision {
  std::int64_t machine_id = 0;
  std::size_t tube_id = 0;

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

// Stateful router. A sensor keeps its first assignment forever; a new sensor
// goes to the tube currently holding the fewest sensors (lowest id on ties),
// so tubes stay balanced without coordination. A tube count of 0 means
// unlimited: every new sensor opens its own tube.
class Splitter {
 public:
  explicit Splitter(std::size_t tube_count);

  RoutingDecision route(std::int64_t sensor_id);
  std::size_t tube_count() const { return dynamic_ ? next_tube_ : loads_.size(); }
  const std::unordered_map<std::int64_t, std::size_t>& assignments() const { return assigned_; }

 private:
  bool dynamic_;
  std::size_t next_tube_ = 0;
  std::vector<std::size_t> loads_;
  std::unordered_map<std::int64_t, std::size_t> assigned_;
};

// One tube's stage functions: shapers adapt the event for each side, the
// trainer folds it into tube state, the predictor scores it. A tube is
// single-threaded by contract, so none of these need internal locking.
struct TubeOp {
  std::function<SensorEvent(const SensorEvent&)> shape_train;
  std::function<SensorEvent(const SensorEvent&)> shape_infer;
  std::function<void(const SensorEvent&)> train;
  std::function<DetectionEvent(const SensorEvent&)> infer;
};

using TubeOpFactory = std::function<TubeOp(std::size_t tube_id)>;

// Runs one event through a tube in the configured stage order.
DetectionEvent run_tube_step(const TubeOp& op, const SensorEvent& e, ExecutionOrder order);

// Convenience: run a whole ordered event sequence through one tube.
std::vector<DetectionEvent> run_tube_op(const TubeOp& op, const std::vector<SensorEvent>& events,
                                        ExecutionOrder order);

// Anomaly-detection tube: one AnomalyModel per sensor, created on first
// contact. `registry` (optional) collects each tube's models so the caller
// can inspect them after the run; entries are touched only by the owning
// tube while the pipeline runs.
using ModelMap = std::map<std::int64_t, AnomalyModel>;
TubeOp make_anomaly_tube(const ModelParams& params, UpdatePath path,
                         std::shared_ptr<ModelMap> registry = nullptr);

// Order-restoring merge of per-worker output streams, each already
// timestamp-nondecreasing (OrderingError otherwise, naming the stream).
// Events tie on timestamp across streams; ties order by sensor_id, and equal
// (timestamp, sensor) pairs keep their stream order.
std::vector<DetectionEvent> merge_streams(const std::vector<std::vector<DetectionEvent>>& streams);

struct PipelineConfig {
  int thread_count = 1;
  std::size_t queue_capacity = 1024;
  std::size_t tube_count = 0;  // 0: one tube per sensor, created on demand
  ModelParams params;
  UpdatePath update_path = UpdatePath::incremental;
  ExecutionOrder order = ExecutionOrder::train_first;
};

struct RunMetrics {
  std::size_t events_processed = 0;
  double wall_seconds = 0.0;
  double throughput = 0.0;  // events per second
};

struct PipelineResult {
  std::vector<DetectionEvent> detections;
  RunMetrics metrics;
  std::map<std::int64_t, std::string> matrix_csv;  // per sensor, on request
};

// Split -> tube-op -> merge over a worker pool. The input must be globally
// timestamp-nondecreasing (hard OrderingError otherwise). Tube tid runs on
// worker tid % thread_count; the merger restores (timestamp, sensor_id)
// order, so the detection stream is identical for every thread count.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::vector<SensorEvent>& input,
                            const TubeOpFactory& factory);

// run_pipeline with anomaly tubes; optionally collects per-sensor transition
// matrices into the result.
PipelineResult run_anomaly_pipeline(const PipelineConfig& cfg,
                                    const std::vector<SensorEvent>& input,
                                    bool collect_matrices = false);

}  // namespace tubeflow
