#include "beamlab/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "json.hpp"

#include "beamlab/numeric_text.hpp"

namespace beamlab::metrics {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::optional<Stats> stats_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    const double m = mean_of(v);
    return Stats{m, stddev_of(v, m), median_of(v)};
}

std::optional<double> pearson(const std::vector<double>& p, const std::vector<double>& a) {
    if (p.size() < 2) return std::nullopt;
    const double mp = mean_of(p);
    const double ma = mean_of(a);
    double num = 0.0, dp = 0.0, da = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        num += (p[i] - mp) * (a[i] - ma);
        dp += (p[i] - mp) * (p[i] - mp);
        da += (a[i] - ma) * (a[i] - ma);
    }
    if (dp == 0.0 || da == 0.0) return std::nullopt;
    return num / std::sqrt(dp * da);
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : "undefined";
}

nlohmann::ordered_json json_opt(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

nlohmann::ordered_json json_stats(const std::optional<Stats>& s) {
    if (!s) return nullptr;
    nlohmann::ordered_json j;
    j["mean"] = s->mean;
    j["std"] = s->stddev;
    j["median"] = s->median;
    return j;
}

}  // namespace

double euclidean(geo::Point a, geo::Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

DetectionOutcome match_frame(const io::FrameRecord& record,
                             const io::FramePrediction& prediction, const EvalConfig& config) {
    if (record.id != prediction.id)
        throw ValidationError("match_frame: frame ids differ (" + io::to_string(record.id) +
                              " vs " + io::to_string(prediction.id) + ")");
    if (!record.beam_point)
        throw ValidationError("match_frame: record " + io::to_string(record.id) +
                              " has no beam annotation");

    DetectionOutcome out;
    out.frame = record.id;
    out.annotated = *record.beam_point;

    const io::PolygonInstance* best = nullptr;
    for (const io::PolygonInstance& inst : prediction.instances) {
        if (inst.class_id != config.target_class) continue;
        if (inst.confidence.value_or(0.0) < config.class_threshold) continue;
        if (!best || inst.confidence.value_or(0.0) > best->confidence.value_or(0.0)) best = &inst;
    }
    if (best) {
        const geo::Point c = geo::polygon_centroid(best->polygon);
        if (!config.gate_px || euclidean(c, out.annotated) <= *config.gate_px) {
            out.predicted = c;
            out.chosen_confidence = best->confidence;
            out.predicted_radius = geo::equivalent_radius(best->polygon);
        }
    }
    return out;
}

double detection_rate(std::span<const DetectionOutcome> outcomes) {
    if (outcomes.empty()) throw ValidationError("detection_rate: empty outcome list");
    std::size_t detected = 0;
    for (const DetectionOutcome& o : outcomes)
        if (o.predicted) ++detected;
    return static_cast<double>(detected) / static_cast<double>(outcomes.size());
}

LocalizationStats localization_stats(std::span<const DetectionOutcome> outcomes) {
    LocalizationStats stats;
    std::vector<double> dist, px, ax, py, ay;
    for (const DetectionOutcome& o : outcomes) {
        if (!o.predicted) continue;
        dist.push_back(euclidean(*o.predicted, o.annotated));
        px.push_back(o.predicted->x);
        py.push_back(o.predicted->y);
        ax.push_back(o.annotated.x);
        ay.push_back(o.annotated.y);
    }
    stats.n_detected = static_cast<int>(dist.size());
    if (dist.empty()) return stats;
    stats.eu_mean = mean_of(dist);
    stats.eu_std = stddev_of(dist, *stats.eu_mean);
    stats.eu_median = median_of(dist);
    stats.pcc_x = pearson(px, ax);
    stats.pcc_y = pearson(py, ay);
    return stats;
}

VideoReport evaluate_video(std::span<const io::FrameRecord> records,
                           const io::PredictionIndex& predictions, const EvalConfig& config) {
    if (records.empty()) throw ValidationError("evaluate_video: empty record list");
    VideoReport report;
    report.video = records[0].id.video;
    report.surgery = records[0].surgery;
    int prev_index = -1;
    for (const io::FrameRecord& r : records) {
        if (r.id.video != report.video)
            throw ValidationError("evaluate_video: mixed video ids (" + report.video + " and " +
                                  r.id.video + ")");
        if (r.id.index <= prev_index)
            throw ValidationError("evaluate_video: frames out of order at " + io::to_string(r.id));
        prev_index = r.id.index;

        const auto it = predictions.find(r.id);
        const io::FramePrediction* fp = it != predictions.end() ? it->second : nullptr;
        if (r.beam_point) {
            if (fp) {
                report.outcomes.push_back(match_frame(r, *fp, config));
            } else {
                DetectionOutcome o;
                o.frame = r.id;
                o.annotated = *r.beam_point;
                report.outcomes.push_back(o);
            }
        } else if (fp) {
            const bool confident = std::any_of(
                fp->instances.begin(), fp->instances.end(), [&](const io::PolygonInstance& inst) {
                    return inst.class_id == config.target_class &&
                           inst.confidence.value_or(0.0) >= config.class_threshold;
                });
            if (confident) ++report.n_unannotated_with_prediction;
        }
    }
    if (report.outcomes.empty())
        throw ValidationError("evaluate_video: video " + report.video +
                              " has no beam-annotated frames");
    report.n_annotated = static_cast<int>(report.outcomes.size());
    report.loc = localization_stats(report.outcomes);
    report.n_detected = report.loc.n_detected;
    report.detection_rate = detection_rate(report.outcomes);
    return report;
}

AggregateReport aggregate(std::span<const VideoReport> reports) {
    if (reports.empty()) throw ValidationError("aggregate: no video reports");
    AggregateReport out;
    const std::array<std::pair<std::string, std::optional<io::SurgeryType>>, 3> strata = {
        std::pair<std::string, std::optional<io::SurgeryType>>{"overall", std::nullopt},
        {"TORS", io::SurgeryType::tors},
        {"non_TORS", io::SurgeryType::non_tors}};
    for (const auto& [name, filter] : strata) {
        AggregateStratum s;
        s.name = name;
        std::vector<double> rates, eu_means, pccx, pccy;
        for (const VideoReport& r : reports) {
            if (filter && r.surgery != *filter) continue;
            ++s.n_videos;
            rates.push_back(r.detection_rate);
            if (r.loc.eu_mean) {
                eu_means.push_back(*r.loc.eu_mean);
                ++s.n_videos_with_localization;
            }
            if (r.loc.pcc_x) {
                pccx.push_back(*r.loc.pcc_x);
                ++s.n_videos_with_pcc_x;
            }
            if (r.loc.pcc_y) {
                pccy.push_back(*r.loc.pcc_y);
                ++s.n_videos_with_pcc_y;
            }
        }
        s.detection_rate = stats_of(rates);
        s.euclidean_mean = stats_of(eu_means);
        s.pcc_x = stats_of(pccx);
        s.pcc_y = stats_of(pccy);
        out.strata.push_back(std::move(s));
    }
    return out;
}

std::vector<VideoReport> evaluate_dataset(const io::DatasetManifest& manifest,
                                          std::span<const io::FramePrediction> predictions,
                                          const EvalConfig& config) {
    const io::PredictionIndex index = io::index_predictions(predictions);
    std::vector<std::string> order;
    std::map<std::string, std::vector<io::FrameRecord>> by_video;
    for (const io::FrameRecord& r : manifest.records) {
        if (!by_video.contains(r.id.video)) order.push_back(r.id.video);
        by_video[r.id.video].push_back(r);
    }
    std::vector<VideoReport> reports;
    reports.reserve(order.size());
    for (const std::string& video : order)
        reports.push_back(evaluate_video(by_video.at(video), index, config));
    return reports;
}

namespace {

// 101-point interpolated AP from per-rank precision/recall. recalls must be
// non-decreasing (cumulative TP order).
double ap101(const std::vector<double>& recalls, const std::vector<double>& precisions) {
    const std::size_t n = recalls.size();
    std::vector<double> suffix_max(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, precisions[i]);
        suffix_max[i] = running;
    }
    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        const auto it = std::lower_bound(recalls.begin(), recalls.end(), r);
        if (it != recalls.end()) sum += suffix_max[static_cast<std::size_t>(it - recalls.begin())];
    }
    return sum / 101.0;
}

struct ClassPool {
    // Ground truth polygons per image (image = index into the record list).
    std::vector<std::vector<const geo::Polygon*>> gts;
    // (confidence, image, polygon) in stream order.
    struct Pred {
        double confidence;
        int image;
        const geo::Polygon* polygon;
    };
    std::vector<Pred> preds;
    int n_gt = 0;
};

}  // namespace

MapResult map_metric(const io::DatasetManifest& manifest,
                     std::span<const io::FramePrediction> predictions,
                     std::span<const double> iou_thresholds, int iou_resolution) {
    if (manifest.records.empty()) throw ValidationError("map_metric: empty dataset");
    if (iou_thresholds.empty()) throw ValidationError("map_metric: empty threshold list");
    for (double t : iou_thresholds)
        if (t <= 0.0 || t > 1.0)
            throw ValidationError("map_metric: IoU thresholds must lie in (0,1]");
    if (iou_resolution <= 0) throw ValidationError("map_metric: resolution must be positive");

    const io::PredictionIndex index = io::index_predictions(predictions);
    const int n_images = static_cast<int>(manifest.records.size());

    std::array<ClassPool, io::kNumClasses> pools;
    for (ClassPool& p : pools) p.gts.resize(n_images);
    for (int img = 0; img < n_images; ++img) {
        const io::FrameRecord& r = manifest.records[img];
        for (const io::PolygonInstance& inst : r.labels) {
            ClassPool& pool = pools[static_cast<int>(inst.class_id)];
            pool.gts[img].push_back(&inst.polygon);
            ++pool.n_gt;
        }
        const auto it = index.find(r.id);
        if (it == index.end()) continue;
        for (const io::PolygonInstance& inst : it->second->instances)
            pools[static_cast<int>(inst.class_id)].preds.push_back(
                {inst.confidence.value_or(0.0), img, &inst.polygon});
    }

    bool any_gt = false;
    for (const ClassPool& p : pools) any_gt = any_gt || p.n_gt > 0;
    if (!any_gt) throw ValidationError("map_metric: dataset has no ground-truth instances");

    MapResult result;
    double sum_ap50 = 0.0, sum_ap_mean = 0.0;
    int n_classes = 0;

    for (int c = 0; c < io::kNumClasses; ++c) {
        ClassPool& pool = pools[c];
        if (pool.n_gt == 0) continue;
        std::stable_sort(pool.preds.begin(), pool.preds.end(),
                         [](const ClassPool::Pred& a, const ClassPool::Pred& b) {
                             return a.confidence > b.confidence;
                         });
        // IoU of each prediction against every ground truth in its image.
        std::vector<std::vector<double>> iou(pool.preds.size());
        for (std::size_t k = 0; k < pool.preds.size(); ++k) {
            const ClassPool::Pred& p = pool.preds[k];
            iou[k].reserve(pool.gts[p.image].size());
            for (const geo::Polygon* gt : pool.gts[p.image])
                iou[k].push_back(geo::polygon_iou(*p.polygon, *gt, iou_resolution));
        }

        auto ap_at = [&](double threshold) {
            std::vector<std::vector<bool>> taken(n_images);
            for (int img = 0; img < n_images; ++img)
                taken[img].assign(pools[c].gts[img].size(), false);
            std::vector<double> recalls, precisions;
            recalls.reserve(pool.preds.size());
            precisions.reserve(pool.preds.size());
            int tp = 0;
            for (std::size_t k = 0; k < pool.preds.size(); ++k) {
                const int img = pool.preds[k].image;
                int best = -1;
                double best_iou = -1.0;
                for (std::size_t g = 0; g < iou[k].size(); ++g) {
                    if (taken[img][g] || iou[k][g] < threshold) continue;
                    if (iou[k][g] > best_iou) {
                        best = static_cast<int>(g);
                        best_iou = iou[k][g];
                    }
                }
                if (best >= 0) {
                    taken[img][best] = true;
                    ++tp;
                }
                recalls.push_back(static_cast<double>(tp) / pool.n_gt);
                precisions.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
            }
            return ap101(recalls, precisions);
        };

        ClassAp ap;
        ap.class_id = static_cast<io::ClassId>(c);
        ap.n_ground_truth = pool.n_gt;
        ap.ap50 = ap_at(0.50);
        double acc = 0.0;
        for (double t : iou_thresholds) acc += t == 0.50 ? ap.ap50 : ap_at(t);
        ap.ap_mean = acc / static_cast<double>(iou_thresholds.size());
        result.per_class.push_back(ap);
        sum_ap50 += ap.ap50;
        sum_ap_mean += ap.ap_mean;
        ++n_classes;
    }

    result.map50 = sum_ap50 / n_classes;
    result.map50_95 = sum_ap_mean / n_classes;
    return result;
}

geo::BinaryMask coverage_map(std::span<const DetectionOutcome> outcomes, double default_radius,
                             int width, int height) {
    geo::BinaryMask mask(width, height);
    for (const DetectionOutcome& o : outcomes) {
        if (!o.predicted) continue;
        geo::fill_disk(mask, *o.predicted, o.predicted_radius.value_or(default_radius));
    }
    return mask;
}

geo::BinaryMask annotation_coverage_map(std::span<const DetectionOutcome> outcomes,
                                        double default_radius, int width, int height) {
    geo::BinaryMask mask(width, height);
    for (const DetectionOutcome& o : outcomes)
        geo::fill_disk(mask, o.annotated, o.predicted_radius.value_or(default_radius));
    return mask;
}

std::optional<double> coverage_deficit(const geo::BinaryMask& model,
                                       const geo::BinaryMask& annotation) {
    const std::size_t total = annotation.popcount();
    if (total == 0) return std::nullopt;
    const std::size_t missed = geo::BinaryMask::difference_count(annotation, model);
    return static_cast<double>(missed) / static_cast<double>(total);
}

std::string format_eval_report(std::span<const VideoReport> reports,
                               const AggregateReport& aggregate_report, const EvalConfig& config) {
    std::string out = "beamlab_eval_report v1\n";
    out += "target_class " + std::string(io::class_name(config.target_class)) + "\n";
    out += "class_threshold " + format_double(config.class_threshold) + "\n";
    out += "gate_px " + fmt_opt(config.gate_px) + "\n";
    out += "mm_per_pixel " + fmt_opt(config.mm_per_pixel) + "\n";
    out += "videos " + std::to_string(reports.size()) + "\n";
    for (const VideoReport& r : reports) {
        out += "video\t" + r.video + "\t" + std::string(io::to_string(r.surgery)) + "\tannotated\t" +
               std::to_string(r.n_annotated) + "\tdetected\t" + std::to_string(r.n_detected) +
               "\trate\t" + format_double(r.detection_rate) + "\teu_mean\t" +
               fmt_opt(r.loc.eu_mean) + "\teu_std\t" + fmt_opt(r.loc.eu_std) + "\teu_median\t" +
               fmt_opt(r.loc.eu_median) + "\tpcc_x\t" + fmt_opt(r.loc.pcc_x) + "\tpcc_y\t" +
               fmt_opt(r.loc.pcc_y) + "\tunannotated_with_prediction\t" +
               std::to_string(r.n_unannotated_with_prediction);
        if (config.mm_per_pixel && r.loc.eu_mean)
            out += "\teu_mean_mm\t" + format_double(*r.loc.eu_mean * *config.mm_per_pixel);
        out += "\n";
    }
    for (const AggregateStratum& s : aggregate_report.strata) {
        auto stat_cols = [&](const char* name, const std::optional<Stats>& st) {
            if (!st) return std::string("\t") + name + "\tundefined";
            return std::string("\t") + name + "\tmean\t" + format_double(st->mean) + "\tstd\t" +
                   format_double(st->stddev) + "\tmedian\t" + format_double(st->median);
        };
        out += "aggregate\t" + s.name + "\tvideos\t" + std::to_string(s.n_videos);
        out += stat_cols("detection_rate", s.detection_rate);
        out += stat_cols("euclidean_mean", s.euclidean_mean);
        out += stat_cols("pcc_x", s.pcc_x);
        out += stat_cols("pcc_y", s.pcc_y);
        out += "\n";
    }
    return out;
}

std::string eval_report_json(std::span<const VideoReport> reports,
                             const AggregateReport& aggregate_report, const EvalConfig& config) {
    nlohmann::ordered_json j;
    j["schema"] = "beamlab_eval_report.v1";
    j["config"] = {{"target_class", io::class_name(config.target_class)},
                   {"class_threshold", config.class_threshold},
                   {"gate_px", json_opt(config.gate_px)},
                   {"mm_per_pixel", json_opt(config.mm_per_pixel)}};
    nlohmann::ordered_json videos = nlohmann::ordered_json::array();
    for (const VideoReport& r : reports) {
        nlohmann::ordered_json v;
        v["video"] = r.video;
        v["surgery"] = io::to_string(r.surgery);
        v["n_annotated"] = r.n_annotated;
        v["n_detected"] = r.n_detected;
        v["detection_rate"] = r.detection_rate;
        v["euclidean"] = {{"mean", json_opt(r.loc.eu_mean)},
                          {"std", json_opt(r.loc.eu_std)},
                          {"median", json_opt(r.loc.eu_median)}};
        if (config.mm_per_pixel) {
            v["euclidean_mm"] = {
                {"mean", r.loc.eu_mean ? nlohmann::ordered_json(*r.loc.eu_mean *
                                                                *config.mm_per_pixel)
                                       : nlohmann::ordered_json(nullptr)},
                {"median", r.loc.eu_median ? nlohmann::ordered_json(*r.loc.eu_median *
                                                                    *config.mm_per_pixel)
                                           : nlohmann::ordered_json(nullptr)}};
        }
        v["pcc_x"] = json_opt(r.loc.pcc_x);
        v["pcc_y"] = json_opt(r.loc.pcc_y);
        v["unannotated_frames_with_prediction"] = r.n_unannotated_with_prediction;
        nlohmann::ordered_json frames = nlohmann::ordered_json::array();
        for (const DetectionOutcome& o : r.outcomes) {
            nlohmann::ordered_json f;
            f["index"] = o.frame.index;
            f["annotated"] = {o.annotated.x, o.annotated.y};
            if (o.predicted) {
                f["predicted"] = {o.predicted->x, o.predicted->y};
                f["confidence"] = json_opt(o.chosen_confidence);
                f["radius"] = json_opt(o.predicted_radius);
            } else {
                f["predicted"] = nullptr;
            }
            frames.push_back(std::move(f));
        }
        v["frames"] = std::move(frames);
        videos.push_back(std::move(v));
    }
    j["videos"] = std::move(videos);
    nlohmann::ordered_json strata = nlohmann::ordered_json::array();
    for (const AggregateStratum& s : aggregate_report.strata) {
        nlohmann::ordered_json a;
        a["stratum"] = s.name;
        a["n_videos"] = s.n_videos;
        a["detection_rate"] = json_stats(s.detection_rate);
        a["euclidean_mean"] = json_stats(s.euclidean_mean);
        a["pcc_x"] = json_stats(s.pcc_x);
        a["pcc_y"] = json_stats(s.pcc_y);
        a["n_videos_with_localization"] = s.n_videos_with_localization;
        strata.push_back(std::move(a));
    }
    j["aggregate"] = std::move(strata);
    return j.dump(2) + "\n";
}

std::string format_map_report(const MapResult& result, std::span<const double> thresholds) {
    std::string out = "beamlab_map_report v1\n";
    out += "iou_thresholds";
    for (double t : thresholds) out += " " + format_double(t);
    out += "\n";
    out += "map50 " + format_double(result.map50) + "\n";
    out += "map50_95 " + format_double(result.map50_95) + "\n";
    for (const ClassAp& c : result.per_class)
        out += "class\t" + std::string(io::class_name(c.class_id)) + "\tn_gt\t" +
               std::to_string(c.n_ground_truth) + "\tap50\t" + format_double(c.ap50) +
               "\tap_mean\t" + format_double(c.ap_mean) + "\n";
    return out;
}

std::string map_report_json(const MapResult& result, std::span<const double> thresholds) {
    nlohmann::ordered_json j;
    j["schema"] = "beamlab_map_report.v1";
    j["iou_thresholds"] = thresholds;
    j["map50"] = result.map50;
    j["map50_95"] = result.map50_95;
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (const ClassAp& c : result.per_class) {
        nlohmann::ordered_json e;
        e["class"] = io::class_name(c.class_id);
        e["n_ground_truth"] = c.n_ground_truth;
        e["ap50"] = c.ap50;
        e["ap_mean"] = c.ap_mean;
        classes.push_back(std::move(e));
    }
    j["classes"] = std::move(classes);
    return j.dump(2) + "\n";
}

}  // namespace beamlab::metrics
