#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beamlab/dataset_io.hpp"
#include "beamlab/evaluator.hpp"
#include "beamlab/predictor.hpp"

namespace beamlab::rt {

// Single-producer single-consumer bounded queue. close() ends the stream
// (pending pops drain what is queued); cancel() drops everything and
// unblocks both sides, for fail-fast teardown.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    // False when the queue was cancelled.
    bool push(T item) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || cancelled_; });
        if (cancelled_) return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    // Nullopt when the stream is closed and drained, or cancelled.
    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return !items_.empty() || closed_ || cancelled_; });
        if (cancelled_ || items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
    }

    void cancel() {
        std::lock_guard lock(mu_);
        cancelled_ = true;
        items_.clear();
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable not_full_, not_empty_;
    std::deque<T> items_;
    std::size_t capacity_;
    bool closed_ = false;
    bool cancelled_ = false;
};

// One frame to process: identity plus pixel dimensions.
struct FrameSpec {
    io::FrameId id;
    int width = 0;
    int height = 0;
};

std::vector<FrameSpec> frames_from_manifest(const io::DatasetManifest& manifest);

struct FrameTimings {
    double predict_ms = 0.0;
    double postprocess_ms = 0.0;
    // Frame age: from the moment the predict stage picked the frame up until
    // event emission. Includes queue wait, so it is at least
    // predict_ms + postprocess_ms up to timer granularity.
    double total_ms = 0.0;
};

struct FrameEvent {
    io::FrameId frame;
    // Centroid and equivalent radius of the max-confidence target-class
    // instance; absent when the frame has none.
    std::optional<geo::Point> beam_centroid;
    std::optional<double> beam_radius;
    // Frame-sized union of the non-tissue class masks.
    geo::BinaryMask exclusion_mask;
    FrameTimings timings;
    bool error = false;
    std::string error_message;
};

struct BudgetVerdict {
    double budget_ms = 0.0;
    bool pass = false;  // p95 total_ms within budget
};

struct LatencyStats {
    int frames = 0;
    double wall_ms = 0.0;
    double fps = 0.0;  // frames / wall-clock span
    double mean_ms = 0.0;
    // Percentiles of total_ms by nearest rank (rank = ceil(p/100 * n));
    // median is the 50th.
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
    std::vector<BudgetVerdict> verdicts;

    // Pure summary, so recomputing from a logged stream reproduces the live
    // numbers exactly.
    static LatencyStats from_timings(std::span<const FrameTimings> timings, double wall_ms,
                                     std::span<const double> budgets_ms);
};

struct PipelineConfig {
    std::size_t queue_depth = 1;
    std::vector<double> budgets_ms{70.0, 100.0};
    // Stop at the first predictor failure instead of emitting an error event
    // and continuing.
    bool fail_fast = false;
    io::ClassId target_class = io::ClassId::aiming_beam;
    std::vector<io::ClassId> exclusion_classes{io::ClassId::instrument, io::ClassId::probe,
                                               io::ClassId::fiber, io::ClassId::shaft};
    // Retain per-frame events / raw predictions in the result. Long streams
    // should turn events off and consume them via the callback instead.
    bool keep_events = true;
    bool keep_predictions = false;
};

struct StreamResult {
    std::vector<FrameEvent> events;            // when keep_events
    std::vector<io::FramePrediction> predictions;  // when keep_predictions
    LatencyStats stats;
};

// Two-stage pipeline: a predict worker feeds a bounded queue and the calling
// thread postprocesses and emits, so prediction of frame i+1 overlaps
// postprocessing of frame i. Emits exactly one event per input frame, in
// input order. Frame indices must be strictly increasing within each video.
// Predictor failures become error events (or abort the stream under
// fail_fast). on_event, when set, sees each event as it is emitted.
StreamResult run_stream(std::span<const FrameSpec> frames, pred::Predictor& predictor,
                        const PipelineConfig& config,
                        const std::function<void(const FrameEvent&)>& on_event = {});

// The postprocess stage for one frame: beam selection plus exclusion mask.
// Timings are left zero; run_stream fills them.
FrameEvent postprocess_prediction(const FrameSpec& frame, const io::FramePrediction& prediction,
                                  const PipelineConfig& config);

// Event log line as parsed back from disk; carries the mask population
// count, not the mask itself.
struct LoggedEvent {
    io::FrameId frame;
    FrameTimings timings;
    std::size_t excluded_px = 0;
    std::optional<geo::Point> beam_centroid;
    std::optional<double> beam_radius;
    bool error = false;
    std::string error_message;
};

struct EventLog {
    std::vector<LoggedEvent> events;
    double wall_ms = 0.0;
};

// Newline-delimited event log (tab-separated):
//   beamlab_events v1
//   event <video> <index> predict_ms <t> postprocess_ms <t> total_ms <t>
//         excluded_px <n> beam {<x> <y> <radius> | -} [error <message>]
//   wall_ms <t>
// The wall_ms line closes the log; a log without it is truncated.
std::string format_event(const FrameEvent& event);
std::string format_event_log(std::span<const FrameEvent> events, double wall_ms);
EventLog parse_event_log(std::string_view text, std::string_view source_name = "<events>");

std::string format_latency_stats(const LatencyStats& stats);
std::string latency_stats_json(const LatencyStats& stats);

struct BenchmarkRow {
    std::string variant;
    bool ok = false;
    std::string error;  // set when the variant failed to initialize or run
    int frames = 0;
    // Mean of per-video detection rates on the fixture.
    double detection_rate = 0.0;
    double fps = 0.0;
};

// Runs every variant spec over the same fixture. Detection rate comes from
// the evaluator on the captured predictions, FPS from the stream stats.
// A variant that fails to initialize or run gets an error row; the rest
// still run.
std::vector<BenchmarkRow> benchmark(std::span<const std::string> variant_specs,
                                    const io::DatasetManifest& fixture,
                                    const PipelineConfig& config,
                                    const metrics::EvalConfig& eval_config);

std::string format_benchmark(std::span<const BenchmarkRow> rows);

}  // namespace beamlab::rt
