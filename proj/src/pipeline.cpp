#include "tubeflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "tubeflow/error.hpp"
#include "tubeflow/queue.hpp"

namespace tubeflow {

Splitter::Splitter(std::size_t tube_count) : dynamic_(tube_count == 0) {
  loads_.assign(tube_count, 0);
}

RoutingDecision Splitter::route(std::int64_t sensor_id) {
  auto it = assigned_.find(sensor_id);
  if (it == assigned_.end()) {
    std::size_t tube;
    if (dynamic_) {
      tube = next_tube_++;
    } else {
      tube = 0;
      for (std::size_t t = 1; t < loads_.size(); ++t) {
        if (loads_[t] < loads_[tube]) tube = t;
      }
      ++loads_[tube];
    }
    it = assigned_.emplace(sensor_id, tube).first;
  }
  return RoutingDecision{0, it->second};
}

DetectionEvent run_tube_step(const TubeOp& op, const SensorEvent& e, ExecutionOrder order) {
  if (!op.train || !op.infer) throw StateError("tube-op: missing train or infer stage");
  const auto shaped = [&e](const std::function<SensorEvent(const SensorEvent&)>& f) {
    return f ? f(e) : e;
  };
  if (order == ExecutionOrder::train_first) {
    op.train(shaped(op.shape_train));
    return op.infer(shaped(op.shape_infer));
  }
  DetectionEvent d = op.infer(shaped(op.shape_infer));
  op.train(shaped(op.shape_train));
  return d;
}

std::vector<DetectionEvent> run_tube_op(const TubeOp& op, const std::vector<SensorEvent>& events,
                                        ExecutionOrder order) {
  std::vector<DetectionEvent> out;
  out.reserve(events.size());
  for (const SensorEvent& e : events) out.push_back(run_tube_step(op, e, order));
  return out;
}

TubeOp make_anomaly_tube(const ModelParams& params, UpdatePath path,
                         std::shared_ptr<ModelMap> registry) {
  auto models = registry ? std::move(registry) : std::make_shared<ModelMap>();
  auto model_for = [models, params, path](std::int64_t sensor) -> AnomalyModel& {
    auto it = models->find(sensor);
    if (it == models->end()) it = models->try_emplace(sensor, sensor, params, path).first;
    return it->second;
  };
  TubeOp op;
  op.train = [model_for](const SensorEvent& e) { model_for(e.sensor_id).train(e); };
  op.infer = [model_for](const SensorEvent& e) { return model_for(e.sensor_id).predict(e); };
  return op;
}

std::vector<DetectionEvent> merge_streams(const std::vector<std::vector<DetectionEvent>>& streams) {
  std::vector<DetectionEvent> all;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.size();
  all.reserve(total);
  for (std::size_t i = 0; i < streams.size(); ++i) {
    for (std::size_t j = 1; j < streams[i].size(); ++j) {
      if (streams[i][j].timestamp < streams[i][j - 1].timestamp) {
        throw OrderingError("merge: stream " + std::to_string(i) + " is not timestamp-ordered");
      }
    }
    all.insert(all.end(), streams[i].begin(), streams[i].end());
  }
  std::stable_sort(all.begin(), all.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.sensor_id < b.sensor_id;
  });
  return all;
}

namespace {

struct WorkItem {
  std::size_t tube_id = 0;
  SensorEvent event;
};

// One input and one output queue per worker. The merger needs a lower bound
// on every future output of a worker even when its output queue is empty;
// watermark / outstanding / floor provide one: a dispatched event's
// timestamp is at least the watermark stored before its dispatch, and a
// popped-but-unfinished event's timestamp is exactly that worker's floor.
struct SharedState {
  std::vector<std::unique_ptr<BoundedQueue<WorkItem>>> in;
  std::vector<std::unique_ptr<BoundedQueue<DetectionEvent>>> out;
  std::vector<std::atomic<std::int64_t>> floors;       // ts last popped, per worker
  std::vector<std::atomic<std::int64_t>> outstanding;  // dispatched minus output, per worker
  std::atomic<std::int64_t> watermark{-1};             // ts the splitter is dispatching
  ProgressSignal signal;
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::exception_ptr first_error;

  SharedState(std::size_t workers, std::size_t queue_capacity)
      : floors(workers), outstanding(workers) {
    in.reserve(workers);
    out.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      in.push_back(std::make_unique<BoundedQueue<WorkItem>>(queue_capacity));
      out.push_back(std::make_unique<BoundedQueue<DetectionEvent>>(queue_capacity));
      floors[w].store(-1);
    }
  }

  void fail(std::exception_ptr ep) {
    {
      std::lock_guard lk(err_mu);
      if (!first_error) first_error = ep;
    }
    abort.store(true);
    for (auto& q : in) q->cancel();
    for (auto& q : out) q->cancel();
    signal.bump();
  }
};

void worker_main(SharedState& sh, const TubeOpFactory& factory, ExecutionOrder order,
                 std::size_t w) {
  std::unordered_map<std::size_t, TubeOp> ops;
  try {
    while (auto item = sh.in[w]->pop()) {
      sh.floors[w].store(item->event.timestamp);
      auto it = ops.find(item->tube_id);
      if (it == ops.end()) it = ops.emplace(item->tube_id, factory(item->tube_id)).first;
      DetectionEvent d;
      try {
        d = run_tube_step(it->second, item->event, order);
      } catch (const std::exception& ex) {
        throw PipelineError("tube " + std::to_string(item->tube_id) + ": " + ex.what() +
                            " (event at timestamp " + std::to_string(item->event.timestamp) +
                            ", sensor " + std::to_string(item->event.sensor_id) + ")");
      }
      bool pushed = sh.out[w]->push(d);
      sh.outstanding[w].fetch_sub(1);
      sh.signal.bump();
      if (!pushed) return;  // cancelled mid-run
    }
    sh.out[w]->close();
    sh.signal.bump();
  } catch (...) {
    sh.fail(std::current_exception());
  }
}

// Restores global (timestamp, sensor_id) order. All events sharing the
// lowest reachable timestamp are collected as one cohort, emitted sorted by
// sensor once every stream provably cannot produce that timestamp any more.
void merger_main(SharedState& sh, std::vector<DetectionEvent>& sink) {
  try {
    const std::size_t n = sh.out.size();
    constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
    std::vector<DetectionEvent> cohort;
    std::int64_t cohort_ts = 0;

    // Lower bound for one stream's future outputs; empty when the stream is
    // finished. The head is re-read after the counters: a queue seen empty
    // both before and after them cannot have received a push in between, so
    // the counter-based bound is valid at the second look.
    const auto stream_bound = [&](std::size_t w) -> std::optional<std::int64_t> {
      if (auto head = sh.out[w]->front()) return head->timestamp;
      std::int64_t outst = sh.outstanding[w].load();
      std::int64_t wm = sh.watermark.load();
      std::int64_t fl = sh.floors[w].load();
      bool closed = sh.out[w]->closed();
      if (auto head = sh.out[w]->front()) return head->timestamp;
      if (closed && outst == 0) return std::nullopt;
      return outst > 0 ? fl : wm;
    };

    for (;;) {
      if (sh.abort.load()) return;
      const std::uint64_t v = sh.signal.snapshot();

      std::int64_t min_bound = kMax;
      bool any_live = false;
      for (std::size_t w = 0; w < n; ++w) {
        if (auto b = stream_bound(w)) {
          any_live = true;
          min_bound = std::min(min_bound, *b);
        }
      }

      std::int64_t tstar;
      if (!cohort.empty()) {
        tstar = cohort_ts;
      } else if (any_live) {
        tstar = min_bound;
      } else {
        break;  // every stream finished, nothing staged
      }
      cohort_ts = tstar;

      bool drained = false;
      for (std::size_t w = 0; w < n; ++w) {
        for (;;) {
          auto head = sh.out[w]->front();
          if (!head || head->timestamp != tstar) break;
          cohort.push_back(*head);
          sh.out[w]->try_pop();
          drained = true;
        }
      }

      bool safe = true;
      for (std::size_t w = 0; w < n && safe; ++w) {
        if (auto b = stream_bound(w); b && *b <= tstar) safe = false;
      }

      if (safe) {
        if (!cohort.empty()) {
          std::stable_sort(cohort.begin(), cohort.end(),
                           [](const DetectionEvent& a, const DetectionEvent& b) {
                             return a.sensor_id < b.sensor_id;
                           });
          sink.insert(sink.end(), cohort.begin(), cohort.end());
          cohort.clear();
        }
        continue;
      }
      if (!drained) sh.signal.wait(v);
    }
  } catch (...) {
    sh.fail(std::current_exception());
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::vector<SensorEvent>& input,
                            const TubeOpFactory& factory) {
  if (cfg.thread_count < 1) throw ConfigError("pipeline: thread count must be >= 1");
  if (!factory) throw ConfigError("pipeline: missing tube-op factory");

  const std::size_t workers = static_cast<std::size_t>(cfg.thread_count);
  SharedState sh(workers, cfg.queue_capacity);

  PipelineResult result;
  result.detections.reserve(input.size());

  const auto t0 = std::chrono::steady_clock::now();
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers + 1);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&sh, &factory, order = cfg.order, w] {
        worker_main(sh, factory, order, w);
      });
    }
    threads.emplace_back([&sh, &result] { merger_main(sh, result.detections); });

    try {
      Splitter split(cfg.tube_count);
      std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
      for (std::size_t i = 0; i < input.size(); ++i) {
        const SensorEvent& e = input[i];
        if (e.timestamp < prev_ts) {
          throw OrderingError("input out of order at record " + std::to_string(i + 1) +
                              ": timestamp " + std::to_string(e.timestamp) + " after " +
                              std::to_string(prev_ts));
        }
        prev_ts = e.timestamp;
        const RoutingDecision r = split.route(e.sensor_id);
        const std::size_t w = r.tube_id % workers;
        sh.watermark.store(e.timestamp);
        sh.outstanding[w].fetch_add(1);
        if (!sh.in[w]->push(WorkItem{r.tube_id, e})) break;
      }
      sh.watermark.store(std::numeric_limits<std::int64_t>::max());
      for (auto& q : sh.in) q->close();
      sh.signal.bump();
    } catch (...) {
      sh.fail(std::current_exception());
    }
  }  // joins workers and merger
  const auto t1 = std::chrono::steady_clock::now();

  if (sh.first_error) std::rethrow_exception(sh.first_error);

  result.metrics.events_processed = input.size();
  result.metrics.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  result.metrics.throughput =
      static_cast<double>(input.size()) / std::max(result.metrics.wall_seconds, 1e-9);
  return result;
}

PipelineResult run_anomaly_pipeline(const PipelineConfig& cfg,
                                    const std::vector<SensorEvent>& input,
                                    bool collect_matrices) {
  validate_params(cfg.params);

  std::mutex reg_mu;
  std::map<std::size_t, std::shared_ptr<ModelMap>> registry;
  TubeOpFactory factory = [&](std::size_t tube_id) {
    auto models = std::make_shared<ModelMap>();
    {
      std::lock_guard lk(reg_mu);
      registry[tube_id] = models;
    }
    return make_anomaly_tube(cfg.params, cfg.update_path, models);
  };

  PipelineResult result = run_pipeline(cfg, input, factory);

  if (collect_matrices) {
    for (const auto& [tube_id, models] : registry) {
      for (const auto& [sensor, model] : *models) {
        result.matrix_csv.emplace(sensor, model.matrix().to_csv());
      }
    }
  }
  return result;
}

}  // namespace tubeflow
