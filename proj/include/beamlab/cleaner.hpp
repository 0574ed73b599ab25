#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beamlab/dataset_io.hpp"

namespace beamlab::dc {

struct CleaningConfig {
    // Keep a labeled instance when its matched prediction confidence is at
    // least kappa (or when the frame raises no issue at all).
    double kappa = 0.2;
    io::ClassId target_class = io::ClassId::aiming_beam;
    // Mask IoU needed before a prediction counts as matching a label.
    double match_iou = 0.5;
    // Confidence at which an unmatched prediction is suspicious enough to
    // flag the frame; defaults to kappa when unset.
    std::optional<double> spurious_min_confidence;
    int iou_resolution = 512;

    double effective_spurious_min() const { return spurious_min_confidence.value_or(kappa); }
    void validate() const;
};

enum class IssueKind {
    low_confidence_label,  // matched, but confidence in (0, kappa)
    missing_prediction,    // no matching prediction at all (score 0)
    unlabeled_object,      // confident prediction with no corresponding label
};

std::string_view to_string(IssueKind k);

struct LabelIssue {
    io::FrameId frame;
    IssueKind kind;
    // Matched prediction confidence for label issues; 0 when nothing matched.
    double sigma = 0.0;
    // Index into the frame's labels (label issues) or into the prediction's
    // instances (unlabeled_object).
    int instance_index = 0;
    // Offending prediction confidence, for unlabeled_object.
    std::optional<double> confidence;
};

struct CleaningOutcome {
    io::DatasetManifest clean_manifest;
    std::vector<std::pair<io::FrameId, std::vector<LabelIssue>>> removed;  // sorted by frame id
    double removed_fraction = 0.0;
    double kappa = 0.0;
};

// Confidence of the best-IoU matching prediction for one labeled instance;
// 0 when no prediction of the target class reaches match_iou. Ties on IoU
// keep the earliest instance in stream order.
double score_labeled_instance(const io::PolygonInstance& label,
                              const io::FramePrediction& prediction,
                              const CleaningConfig& config);

// All issues for one frame. Label issues come first (label order), then
// unlabeled objects (prediction order).
std::vector<LabelIssue> detect_label_issues(const io::FrameRecord& record,
                                            const io::FramePrediction& prediction,
                                            const CleaningConfig& config);

// Image-level filter: a frame survives only with zero issues. Predictions
// must cover every frame of the dataset.
CleaningOutcome clean(const io::DatasetManifest& dataset,
                      std::span<const io::FramePrediction> predictions,
                      const CleaningConfig& config);

// One clean() per kappa with match_iou and the spurious threshold held
// constant (resolved once from the base config), so removed_fraction is
// non-decreasing along the sweep.
std::vector<CleaningOutcome> sweep(const io::DatasetManifest& dataset,
                                   std::span<const io::FramePrediction> predictions,
                                   std::span<const double> kappas, const CleaningConfig& base);

std::string format_cleaning_report(const CleaningOutcome& outcome, const CleaningConfig& config,
                                   std::size_t input_frames);
std::string cleaning_report_json(const CleaningOutcome& outcome, const CleaningConfig& config,
                                 std::size_t input_frames);

}  // namespace beamlab::dc
