#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beamlab/dataset_io.hpp"

namespace beamlab::metrics {

struct EvalConfig {
    io::ClassId target_class = io::ClassId::aiming_beam;
    // "Detected" means at least one target-class prediction at or above this.
    double class_threshold = 0.01;
    // Optional distance gate in pixels; a frame whose best prediction lands
    // farther than this from the annotation does not count as detected.
    std::optional<double> gate_px;
    int iou_resolution = 512;
    // When set, reports carry millimeter columns next to the pixel ones.
    std::optional<double> mm_per_pixel;
};

struct DetectionOutcome {
    io::FrameId frame;
    geo::Point annotated;
    // Present exactly when the frame counts toward the detected numerator.
    std::optional<geo::Point> predicted;
    std::optional<double> chosen_confidence;
    // Equivalent radius of the chosen beam mask; feeds coverage maps.
    std::optional<double> predicted_radius;
};

struct LocalizationStats {
    int n_detected = 0;
    // Euclidean distance stats over detected frames; absent when none.
    std::optional<double> eu_mean, eu_std, eu_median;
    // Absent (undefined) when fewer than 2 detected frames or when either
    // coordinate sequence has zero variance.
    std::optional<double> pcc_x, pcc_y;
};

struct VideoReport {
    std::string video;
    io::SurgeryType surgery = io::SurgeryType::unknown;
    int n_annotated = 0;
    int n_detected = 0;
    double detection_rate = 0.0;
    LocalizationStats loc;
    // Frames without a beam annotation that still carried a confident
    // target-class prediction; reported separately, never folded into the
    // detection rate.
    int n_unannotated_with_prediction = 0;
    std::vector<DetectionOutcome> outcomes;
};

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;  // population form
    double median = 0.0;
};

struct AggregateStratum {
    std::string name;  // "overall", "TORS", "non_TORS"
    int n_videos = 0;
    std::optional<Stats> detection_rate;
    // Stats over per-video mean Euclidean distances (videos weighted
    // equally); only videos with at least one detected frame contribute.
    std::optional<Stats> euclidean_mean;
    std::optional<Stats> pcc_x, pcc_y;
    int n_videos_with_localization = 0;
    int n_videos_with_pcc_x = 0, n_videos_with_pcc_y = 0;
};

struct AggregateReport {
    std::vector<AggregateStratum> strata;
};

double euclidean(geo::Point a, geo::Point b);

// Chooses the highest-confidence target-class instance at or above the class
// threshold (earliest wins ties) and takes its centroid as the predicted
// beam point. Requires a beam annotation and matching frame ids.
DetectionOutcome match_frame(const io::FrameRecord& record,
                             const io::FramePrediction& prediction, const EvalConfig& config);

double detection_rate(std::span<const DetectionOutcome> outcomes);

LocalizationStats localization_stats(std::span<const DetectionOutcome> outcomes);

// records: one video, ascending frame index. Frames missing from the
// prediction index count as not detected.
VideoReport evaluate_video(std::span<const io::FrameRecord> records,
                           const io::PredictionIndex& predictions, const EvalConfig& config);

AggregateReport aggregate(std::span<const VideoReport> reports);

// Convenience: groups manifest records by video (first-appearance order) and
// evaluates each.
std::vector<VideoReport> evaluate_dataset(const io::DatasetManifest& manifest,
                                          std::span<const io::FramePrediction> predictions,
                                          const EvalConfig& config);

struct ClassAp {
    io::ClassId class_id;
    int n_ground_truth = 0;
    double ap50 = 0.0;
    double ap_mean = 0.0;  // mean over the threshold list
};

struct MapResult {
    double map50 = 0.0;
    double map50_95 = 0.0;
    std::vector<ClassAp> per_class;
};

inline std::vector<double> default_iou_thresholds() {
    return {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
}

// COCO-style mAP: greedy highest-IoU matching in confidence order per image,
// 101-point interpolated AP per class and IoU threshold, averaged over
// classes that have ground truth. map50 is always computed at IoU 0.50;
// map50_95 averages over the given threshold list.
MapResult map_metric(const io::DatasetManifest& manifest,
                     std::span<const io::FramePrediction> predictions,
                     std::span<const double> iou_thresholds, int iou_resolution = 512);

// Union of disks at the detected predicted centroids; radius comes from the
// outcome's predicted_radius with default_radius as fallback.
geo::BinaryMask coverage_map(std::span<const DetectionOutcome> outcomes, double default_radius,
                             int width, int height);
// Union of disks at every annotated point (same per-frame radii rule).
geo::BinaryMask annotation_coverage_map(std::span<const DetectionOutcome> outcomes,
                                        double default_radius, int width, int height);

// |annotation \ model| / |annotation|; nullopt when the annotation map is
// empty.
std::optional<double> coverage_deficit(const geo::BinaryMask& model,
                                       const geo::BinaryMask& annotation);

std::string format_eval_report(std::span<const VideoReport> reports,
                               const AggregateReport& aggregate_report, const EvalConfig& config);
std::string eval_report_json(std::span<const VideoReport> reports,
                             const AggregateReport& aggregate_report, const EvalConfig& config);

std::string format_map_report(const MapResult& result, std::span<const double> thresholds);
std::string map_report_json(const MapResult& result, std::span<const double> thresholds);

}  // namespace beamlab::metrics
