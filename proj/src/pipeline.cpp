#include "beamlab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>
#include <utility>

#include "json.hpp"

#include "beamlab/numeric_text.hpp"

namespace beamlab::rt {
namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point from, Clock::time_point to) {
    return std::chrono::duration<double, std::milli>(to - from).count();
}

// Nearest-rank percentile over ascending values: rank = ceil(p/100 * n),
// computed in integers so the rank never drifts by a rounding ulp.
double nearest_rank(const std::vector<double>& sorted, int percent) {
    const std::size_t n = sorted.size();
    std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
    if (rank < 1) rank = 1;
    return sorted[rank - 1];
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string sanitize_message(std::string_view message) {
    std::string out(message);
    for (char& c : out)
        if (c == '\n' || c == '\r') c = ' ';
    return out;
}

struct WorkItem {
    std::size_t seq = 0;
    io::FramePrediction prediction;
    double predict_ms = 0.0;
    Clock::time_point start{};
    bool error = false;
    std::string error_message;
};

}  // namespace

std::vector<FrameSpec> frames_from_manifest(const io::DatasetManifest& manifest) {
    std::vector<FrameSpec> frames;
    frames.reserve(manifest.records.size());
    for (const io::FrameRecord& r : manifest.records)
        frames.push_back({r.id, r.width, r.height});
    return frames;
}

LatencyStats LatencyStats::from_timings(std::span<const FrameTimings> timings, double wall_ms,
                                        std::span<const double> budgets_ms) {
    LatencyStats s;
    s.frames = static_cast<int>(timings.size());
    s.wall_ms = wall_ms;
    s.fps = wall_ms > 0.0 ? 1000.0 * static_cast<double>(s.frames) / wall_ms : 0.0;
    if (!timings.empty()) {
        std::vector<double> totals;
        totals.reserve(timings.size());
        double sum = 0.0;
        for (const FrameTimings& t : timings) {
            totals.push_back(t.total_ms);
            sum += t.total_ms;
        }
        std::sort(totals.begin(), totals.end());
        s.mean_ms = sum / static_cast<double>(totals.size());
        s.median_ms = nearest_rank(totals, 50);
        s.p95_ms = nearest_rank(totals, 95);
        s.max_ms = totals.back();
    }
    for (double budget : budgets_ms) s.verdicts.push_back({budget, s.p95_ms <= budget});
    return s;
}

FrameEvent postprocess_prediction(const FrameSpec& frame, const io::FramePrediction& prediction,
                                  const PipelineConfig& config) {
    if (prediction.id != frame.id)
        throw ValidationError("postprocess: prediction for " + io::to_string(prediction.id) +
                              " does not match frame " + io::to_string(frame.id));
    if (prediction.width != frame.width || prediction.height != frame.height)
        throw ValidationError("postprocess: prediction dimensions for " + io::to_string(frame.id) +
                              " differ from the frame (" + std::to_string(prediction.width) + "x" +
                              std::to_string(prediction.height) + " vs " +
                              std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                              ")");
    FrameEvent event;
    event.frame = frame.id;
    event.exclusion_mask = geo::BinaryMask(frame.width, frame.height);
    const io::PolygonInstance* best = nullptr;
    for (const io::PolygonInstance& inst : prediction.instances) {
        if (inst.class_id == config.target_class) {
            if (!best || inst.confidence.value_or(0.0) > best->confidence.value_or(0.0))
                best = &inst;
        } else if (std::find(config.exclusion_classes.begin(), config.exclusion_classes.end(),
                             inst.class_id) != config.exclusion_classes.end()) {
            event.exclusion_mask |= geo::rasterize(inst.polygon, frame.width, frame.height);
        }
    }
    if (best) {
        event.beam_centroid = geo::polygon_centroid(best->polygon);
        event.beam_radius = geo::equivalent_radius(best->polygon);
    }
    return event;
}

StreamResult run_stream(std::span<const FrameSpec> frames, pred::Predictor& predictor,
                        const PipelineConfig& config,
                        const std::function<void(const FrameEvent&)>& on_event) {
    {
        std::map<std::string, int> last_index;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const FrameSpec& f = frames[i];
            if (f.width <= 0 || f.height <= 0)
                throw ValidationError("run_stream: frame " + io::to_string(f.id) +
                                      " has no dimensions");
            auto [it, fresh] = last_index.try_emplace(f.id.video, f.id.index);
            if (!fresh) {
                if (f.id.index <= it->second)
                    throw ValidationError("run_stream: frame " + std::to_string(i) + " (" +
                                          io::to_string(f.id) + ") out of order");
                it->second = f.id.index;
            }
        }
    }

    StreamResult result;
    std::vector<FrameTimings> timings;
    timings.reserve(frames.size());
    BoundedQueue<WorkItem> queue(config.queue_depth);

    const Clock::time_point wall_start = Clock::now();
    std::jthread worker([&] {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            WorkItem item;
            item.seq = i;
            item.start = Clock::now();
            try {
                item.prediction = predictor.predict(frames[i].id);
            } catch (const std::exception& e) {
                item.error = true;
                item.error_message = e.what();
            }
            item.predict_ms = ms_between(item.start, Clock::now());
            if (!queue.push(std::move(item))) return;
        }
        queue.close();
    });

    try {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            std::optional<WorkItem> item = queue.pop();
            if (!item) break;
            const FrameSpec& spec = frames[item->seq];
            const Clock::time_point post_start = Clock::now();
            FrameEvent event;
            if (item->error) {
                event.error = true;
                event.error_message = item->error_message;
            } else {
                try {
                    event = postprocess_prediction(spec, item->prediction, config);
                } catch (const std::exception& e) {
                    event = FrameEvent{};
                    event.error = true;
                    event.error_message = e.what();
                }
            }
            if (event.error) {
                event.frame = spec.id;
                event.exclusion_mask = geo::BinaryMask(spec.width, spec.height);
                if (config.fail_fast)
                    throw ValidationError("run_stream: predictor failed at " +
                                          io::to_string(spec.id) + ": " + event.error_message);
            }
            const Clock::time_point now = Clock::now();
            event.timings.predict_ms = item->predict_ms;
            event.timings.postprocess_ms = ms_between(post_start, now);
            event.timings.total_ms = ms_between(item->start, now);
            timings.push_back(event.timings);
            if (!item->error && config.keep_predictions)
                result.predictions.push_back(std::move(item->prediction));
            if (on_event) on_event(event);
            if (config.keep_events) result.events.push_back(std::move(event));
        }
    } catch (...) {
        queue.cancel();  // unblocks the worker; jthread joins on unwind
        throw;
    }
    worker.join();
    const double wall_ms = ms_between(wall_start, Clock::now());
    result.stats = LatencyStats::from_timings(timings, wall_ms, config.budgets_ms);
    return result;
}

std::string format_event(const FrameEvent& event) {
    std::string out = "event\t" + event.frame.video + "\t" + std::to_string(event.frame.index) +
                      "\tpredict_ms\t" + format_double(event.timings.predict_ms) +
                      "\tpostprocess_ms\t" + format_double(event.timings.postprocess_ms) +
                      "\ttotal_ms\t" + format_double(event.timings.total_ms) + "\texcluded_px\t" +
                      std::to_string(event.exclusion_mask.popcount()) + "\tbeam\t";
    if (event.beam_centroid) {
        out += format_double(event.beam_centroid->x) + "\t" + format_double(event.beam_centroid->y) +
               "\t" + format_double(event.beam_radius.value_or(0.0));
    } else {
        out += "-";
    }
    if (event.error) out += "\terror\t" + sanitize_message(event.error_message);
    out += "\n";
    return out;
}

std::string format_event_log(std::span<const FrameEvent> events, double wall_ms) {
    std::string out = "beamlab_events v1\n";
    for (const FrameEvent& e : events) out += format_event(e);
    out += "wall_ms\t" + format_double(wall_ms) + "\n";
    return out;
}

EventLog parse_event_log(std::string_view text, std::string_view source_name) {
    const std::string source(source_name);
    EventLog log;
    bool saw_header = false;
    bool saw_wall = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (line.empty()) {
            if (pos > text.size()) break;  // trailing newline
            throw ParseError(source, line_no, "blank line");
        }
        if (!saw_header) {
            if (line != "beamlab_events v1")
                throw ParseError(source, line_no, "expected header \"beamlab_events v1\"");
            saw_header = true;
            continue;
        }
        if (saw_wall) throw ParseError(source, line_no, "content after the wall_ms line");
        const std::vector<std::string_view> t = split_tabs(line);
        if (t[0] == "wall_ms") {
            if (t.size() != 2) throw ParseError(source, line_no, "malformed wall_ms line");
            const auto v = parse_double(t[1]);
            if (!v) throw ParseError(source, line_no, "bad wall_ms value");
            log.wall_ms = *v;
            saw_wall = true;
            continue;
        }
        if (t[0] != "event") throw ParseError(source, line_no, "expected an event line");
        if (t.size() < 13 || t[3] != "predict_ms" || t[5] != "postprocess_ms" ||
            t[7] != "total_ms" || t[9] != "excluded_px" || t[11] != "beam")
            throw ParseError(source, line_no, "malformed event line");
        LoggedEvent e;
        e.frame.video = std::string(t[1]);
        const auto index = parse_int(t[2]);
        const auto predict = parse_double(t[4]);
        const auto post = parse_double(t[6]);
        const auto total = parse_double(t[8]);
        const auto excluded = parse_u64(t[10]);
        if (!index || !predict || !post || !total || !excluded)
            throw ParseError(source, line_no, "bad numeric field in event line");
        e.frame.index = *index;
        e.timings = {*predict, *post, *total};
        e.excluded_px = static_cast<std::size_t>(*excluded);
        std::size_t next = 12;
        if (t[12] == "-") {
            next = 13;
        } else {
            if (t.size() < 15) throw ParseError(source, line_no, "truncated beam fields");
            const auto x = parse_double(t[12]);
            const auto y = parse_double(t[13]);
            const auto r = parse_double(t[14]);
            if (!x || !y || !r) throw ParseError(source, line_no, "bad beam coordinates");
            e.beam_centroid = geo::Point{*x, *y};
            e.beam_radius = *r;
            next = 15;
        }
        if (next < t.size()) {
            if (t[next] != "error")
                throw ParseError(source, line_no, "unexpected trailing fields");
            e.error = true;
            std::string message;
            for (std::size_t k = next + 1; k < t.size(); ++k) {
                if (k > next + 1) message += '\t';
                message += std::string(t[k]);
            }
            e.error_message = std::move(message);
        }
        log.events.push_back(std::move(e));
    }
    if (!saw_header) throw ParseError(source, 1, "empty event log");
    if (!saw_wall) throw ParseError(source, line_no, "missing wall_ms line (truncated log)");
    return log;
}

std::string format_latency_stats(const LatencyStats& stats) {
    std::string out = "beamlab_stream_stats v1\n";
    out += "frames\t" + std::to_string(stats.frames) + "\n";
    out += "wall_ms\t" + format_double(stats.wall_ms) + "\n";
    out += "fps\t" + format_double(stats.fps) + "\n";
    out += "total_ms\tmean\t" + format_double(stats.mean_ms) + "\tmedian\t" +
           format_double(stats.median_ms) + "\tp95\t" + format_double(stats.p95_ms) + "\tmax\t" +
           format_double(stats.max_ms) + "\n";
    for (const BudgetVerdict& v : stats.verdicts)
        out += "budget_ms\t" + format_double(v.budget_ms) + "\tverdict\t" +
               (v.pass ? "PASS" : "FAIL") + "\n";
    return out;
}

std::string latency_stats_json(const LatencyStats& stats) {
    nlohmann::ordered_json j;
    j["schema"] = "beamlab_stream_stats.v1";
    j["frames"] = stats.frames;
    j["wall_ms"] = stats.wall_ms;
    j["fps"] = stats.fps;
    j["total_ms"] = {{"mean", stats.mean_ms},
                     {"median", stats.median_ms},
                     {"p95", stats.p95_ms},
                     {"max", stats.max_ms}};
    nlohmann::ordered_json budgets = nlohmann::ordered_json::array();
    for (const BudgetVerdict& v : stats.verdicts)
        budgets.push_back({{"budget_ms", v.budget_ms}, {"pass", v.pass}});
    j["budgets"] = std::move(budgets);
    return j.dump(2) + "\n";
}

std::vector<BenchmarkRow> benchmark(std::span<const std::string> variant_specs,
                                    const io::DatasetManifest& fixture,
                                    const PipelineConfig& config,
                                    const metrics::EvalConfig& eval_config) {
    if (variant_specs.empty()) throw ValidationError("benchmark: no predictor variants");
    if (fixture.records.empty()) throw ValidationError("benchmark: fixture has no frames");
    const std::vector<FrameSpec> frames = frames_from_manifest(fixture);
    std::vector<BenchmarkRow> rows;
    for (const std::string& spec : variant_specs) {
        BenchmarkRow row;
        row.variant = spec;
        try {
            const std::unique_ptr<pred::Predictor> predictor =
                pred::make_predictor(spec, eval_config.class_threshold);
            PipelineConfig run_config = config;
            run_config.keep_events = false;
            run_config.keep_predictions = true;
            run_config.target_class = eval_config.target_class;
            const StreamResult result = run_stream(frames, *predictor, run_config);
            const std::vector<metrics::VideoReport> reports =
                metrics::evaluate_dataset(fixture, result.predictions, eval_config);
            double sum = 0.0;
            for (const metrics::VideoReport& r : reports) sum += r.detection_rate;
            row.ok = true;
            row.frames = result.stats.frames;
            row.detection_rate = sum / static_cast<double>(reports.size());
            row.fps = result.stats.fps;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_benchmark(std::span<const BenchmarkRow> rows) {
    std::string out = "beamlab_bench v1\n";
    for (const BenchmarkRow& row : rows) {
        if (row.ok) {
            out += "bench\t" + row.variant + "\tframes\t" + std::to_string(row.frames) +
                   "\tdetection_rate\t" + format_double(row.detection_rate) + "\tfps\t" +
                   format_double(row.fps) + "\n";
        } else {
            out += "bench\t" + row.variant + "\terror\t" + sanitize_message(row.error) + "\n";
        }
    }
    return out;
}

}  // namespace beamlab::rt
