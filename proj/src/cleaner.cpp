#include "beamlab/cleaner.hpp"

#include <algorithm>
#include <array>

#include "json.hpp"

#include "beamlab/numeric_text.hpp"

namespace beamlab::dc {

namespace {

void count_issues(const CleaningOutcome& outcome, std::array<std::size_t, 3>& counts) {
    counts = {0, 0, 0};
    for (const auto& [id, issues] : outcome.removed)
        for (const LabelIssue& issue : issues) ++counts[static_cast<int>(issue.kind)];
}

}  // namespace

void CleaningConfig::validate() const {
    if (kappa < 0.0 || kappa > 1.0)
        throw ValidationError("kappa must be in [0,1], got " + format_double(kappa));
    if (match_iou < 0.0 || match_iou > 1.0)
        throw ValidationError("match_iou must be in [0,1], got " + format_double(match_iou));
    if (spurious_min_confidence &&
        (*spurious_min_confidence < 0.0 || *spurious_min_confidence > 1.0))
        throw ValidationError("spurious_min_confidence must be in [0,1]");
    if (iou_resolution <= 0) throw ValidationError("iou_resolution must be positive");
}

std::string_view to_string(IssueKind k) {
    switch (k) {
        case IssueKind::low_confidence_label: return "low_confidence_label";
        case IssueKind::missing_prediction: return "missing_prediction";
        default: return "unlabeled_object";
    }
}

double score_labeled_instance(const io::PolygonInstance& label,
                              const io::FramePrediction& prediction,
                              const CleaningConfig& config) {
    if (label.class_id != config.target_class)
        throw ValidationError("score_labeled_instance: label class is not the target class");
    double best_iou = -1.0;  // sentinel: nothing matched yet
    double best_conf = 0.0;
    for (const io::PolygonInstance& inst : prediction.instances) {
        if (inst.class_id != config.target_class) continue;
        const double iou = geo::polygon_iou(label.polygon, inst.polygon, config.iou_resolution);
        if (iou < config.match_iou) continue;
        if (iou > best_iou) {
            best_iou = iou;
            best_conf = inst.confidence.value_or(0.0);
        }
    }
    return best_iou >= 0.0 ? best_conf : 0.0;
}

std::vector<LabelIssue> detect_label_issues(const io::FrameRecord& record,
                                            const io::FramePrediction& prediction,
                                            const CleaningConfig& config) {
    config.validate();
    if (record.id != prediction.id)
        throw ValidationError("detect_label_issues: frame ids differ (" + io::to_string(record.id) +
                              " vs " + io::to_string(prediction.id) + ")");
    std::vector<LabelIssue> issues;

    for (std::size_t i = 0; i < record.labels.size(); ++i) {
        const io::PolygonInstance& label = record.labels[i];
        if (label.class_id != config.target_class) continue;
        const double sigma = score_labeled_instance(label, prediction, config);
        if (sigma == 0.0) {
            issues.push_back({record.id, IssueKind::missing_prediction, 0.0,
                              static_cast<int>(i), std::nullopt});
        } else if (sigma < config.kappa) {
            issues.push_back({record.id, IssueKind::low_confidence_label, sigma,
                              static_cast<int>(i), std::nullopt});
        }
    }

    const double spurious_min = config.effective_spurious_min();
    for (std::size_t j = 0; j < prediction.instances.size(); ++j) {
        const io::PolygonInstance& inst = prediction.instances[j];
        if (inst.class_id != config.target_class) continue;
        if (inst.confidence.value_or(0.0) < spurious_min) continue;
        double best_iou = 0.0;
        for (const io::PolygonInstance& label : record.labels) {
            if (label.class_id != config.target_class) continue;
            best_iou = std::max(best_iou,
                                geo::polygon_iou(label.polygon, inst.polygon,
                                                 config.iou_resolution));
        }
        // match_iou == 0 counts any coexisting label as a match.
        const bool matched = config.match_iou == 0.0
                                 ? std::any_of(record.labels.begin(), record.labels.end(),
                                               [&](const io::PolygonInstance& l) {
                                                   return l.class_id == config.target_class;
                                               })
                                 : best_iou >= config.match_iou;
        if (!matched)
            issues.push_back({record.id, IssueKind::unlabeled_object, 0.0, static_cast<int>(j),
                              inst.confidence});
    }
    return issues;
}

CleaningOutcome clean(const io::DatasetManifest& dataset,
                      std::span<const io::FramePrediction> predictions,
                      const CleaningConfig& config) {
    config.validate();
    const io::PredictionIndex index = io::index_predictions(predictions);

    std::vector<io::FrameId> missing;
    for (const io::FrameRecord& r : dataset.records)
        if (!index.contains(r.id)) missing.push_back(r.id);
    if (!missing.empty()) {
        std::string msg = "predictions do not cover " + std::to_string(missing.size()) +
                          " frame(s):";
        const std::size_t shown = std::min<std::size_t>(missing.size(), 50);
        for (std::size_t i = 0; i < shown; ++i) msg += " " + io::to_string(missing[i]);
        if (missing.size() > shown)
            msg += " (and " + std::to_string(missing.size() - shown) + " more)";
        throw ValidationError(msg);
    }

    CleaningOutcome outcome;
    outcome.kappa = config.kappa;
    outcome.clean_manifest.split = dataset.split;
    outcome.clean_manifest.notes = dataset.notes;
    for (const io::FrameRecord& r : dataset.records) {
        std::vector<LabelIssue> issues = detect_label_issues(r, *index.at(r.id), config);
        if (issues.empty())
            outcome.clean_manifest.records.push_back(r);
        else
            outcome.removed.emplace_back(r.id, std::move(issues));
    }
    std::sort(outcome.removed.begin(), outcome.removed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    outcome.removed_fraction =
        dataset.records.empty()
            ? 0.0
            : static_cast<double>(outcome.removed.size()) / dataset.records.size();
    return outcome;
}

std::vector<CleaningOutcome> sweep(const io::DatasetManifest& dataset,
                                   std::span<const io::FramePrediction> predictions,
                                   std::span<const double> kappas, const CleaningConfig& base) {
    base.validate();
    if (kappas.empty()) throw ValidationError("sweep needs at least one kappa");
    const double spurious_min = base.effective_spurious_min();
    std::vector<CleaningOutcome> out;
    out.reserve(kappas.size());
    for (double k : kappas) {
        CleaningConfig cfg = base;
        cfg.kappa = k;
        cfg.spurious_min_confidence = spurious_min;
        out.push_back(clean(dataset, predictions, cfg));
    }
    return out;
}

std::string format_cleaning_report(const CleaningOutcome& outcome, const CleaningConfig& config,
                                   std::size_t input_frames) {
    std::array<std::size_t, 3> counts;
    count_issues(outcome, counts);
    std::string out = "beamlab_cleaning_report v1\n";
    out += "kappa " + format_double(outcome.kappa) + "\n";
    out += "target_class " + std::string(io::class_name(config.target_class)) + "\n";
    out += "match_iou " + format_double(config.match_iou) + "\n";
    out += "spurious_min_confidence " + format_double(config.effective_spurious_min()) + "\n";
    out += "input_frames " + std::to_string(input_frames) + "\n";
    out += "kept_frames " + std::to_string(outcome.clean_manifest.records.size()) + "\n";
    out += "removed_frames " + std::to_string(outcome.removed.size()) + "\n";
    out += "removed_fraction " + format_double(outcome.removed_fraction) + "\n";
    out += "issue_counts low_confidence_label " + std::to_string(counts[0]) +
           " missing_prediction " + std::to_string(counts[1]) + " unlabeled_object " +
           std::to_string(counts[2]) + "\n";
    for (const auto& [id, issues] : outcome.removed) {
        for (const LabelIssue& issue : issues) {
            out += "removed\t" + id.video + "\t" + std::to_string(id.index) + "\t" +
                   std::string(to_string(issue.kind)) + "\t" + format_double(issue.sigma) + "\t" +
                   std::to_string(issue.instance_index);
            if (issue.confidence) out += "\t" + format_double(*issue.confidence);
            out += "\n";
        }
    }
    return out;
}

std::string cleaning_report_json(const CleaningOutcome& outcome, const CleaningConfig& config,
                                 std::size_t input_frames) {
    std::array<std::size_t, 3> counts;
    count_issues(outcome, counts);
    nlohmann::ordered_json j;
    j["schema"] = "beamlab_cleaning_report.v1";
    j["kappa"] = outcome.kappa;
    j["target_class"] = io::class_name(config.target_class);
    j["match_iou"] = config.match_iou;
    j["spurious_min_confidence"] = config.effective_spurious_min();
    j["input_frames"] = input_frames;
    j["kept_frames"] = outcome.clean_manifest.records.size();
    j["removed_frames"] = outcome.removed.size();
    j["removed_fraction"] = outcome.removed_fraction;
    j["issue_counts"] = {{"low_confidence_label", counts[0]},
                         {"missing_prediction", counts[1]},
                         {"unlabeled_object", counts[2]}};
    nlohmann::ordered_json removed = nlohmann::ordered_json::array();
    for (const auto& [id, issues] : outcome.removed) {
        nlohmann::ordered_json rec;
        rec["video"] = id.video;
        rec["index"] = id.index;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const LabelIssue& issue : issues) {
            nlohmann::ordered_json ji;
            ji["kind"] = to_string(issue.kind);
            ji["sigma"] = issue.sigma;
            ji["instance_index"] = issue.instance_index;
            if (issue.confidence) ji["confidence"] = *issue.confidence;
            arr.push_back(std::move(ji));
        }
        rec["issues"] = std::move(arr);
        removed.push_back(std::move(rec));
    }
    j["removed"] = std::move(removed);
    return j.dump(2) + "\n";
}

}  // namespace beamlab::dc
