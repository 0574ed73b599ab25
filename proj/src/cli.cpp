#include "beamlab/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "beamlab/calibration.hpp"
#include "beamlab/cleaner.hpp"
#include "beamlab/dataset_io.hpp"
#include "beamlab/errors.hpp"
#include "beamlab/evaluator.hpp"
#include "beamlab/mask_io.hpp"
#include "beamlab/numeric_text.hpp"
#include "beamlab/pipeline.hpp"
#include "beamlab/predictor.hpp"
#include "beamlab/synthetic.hpp"

namespace beamlab::cli {
namespace {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

io::ClassId class_from_flag(const std::string& token) {
    if (const auto c = io::class_from_name(token)) return *c;
    if (const auto v = parse_int(token))
        if (const auto c = io::class_from_id(*v)) return *c;
    std::string known;
    for (int i = 0; i < io::kNumClasses; ++i) {
        if (i) known += ", ";
        known += std::string(io::class_name(*io::class_from_id(i)));
    }
    throw ValidationError("unknown class \"" + token + "\" (known: " + known + ")");
}

std::string frame_stem(const io::FrameId& id) {
    std::string n = std::to_string(id.index);
    if (id.index >= 0 && n.size() < 6) n.insert(0, 6 - n.size(), '0');
    return id.video + "_" + n;
}

// Repeatable numeric flags are bound as strings so an empty token fails loudly
// instead of coercing to 0.
std::vector<double> number_list(const std::vector<std::string>& tokens, const char* flag) {
    std::vector<double> values;
    values.reserve(tokens.size());
    for (const std::string& t : tokens) {
        const std::optional<double> v = parse_double(t);
        if (!v) throw ValidationError(std::string(flag) + ": malformed number '" + t + "'");
        values.push_back(*v);
    }
    return values;
}

// ---- clean ----

struct CleanOpts {
    std::string manifest, predictions;
    double kappa = 0.2;
    std::string target_class = "aiming_beam";
    double match_iou = 0.5;
    std::optional<double> spurious_min;
    int iou_resolution = 512;
    std::string out_manifest, report, report_json;
};

dc::CleaningConfig cleaning_config(double kappa, const std::string& target_class,
                                   double match_iou, std::optional<double> spurious_min,
                                   int iou_resolution) {
    dc::CleaningConfig cfg;
    cfg.kappa = kappa;
    cfg.target_class = class_from_flag(target_class);
    cfg.match_iou = match_iou;
    cfg.spurious_min_confidence = spurious_min;
    cfg.iou_resolution = iou_resolution;
    return cfg;
}

void run_clean(const CleanOpts& opts, std::ostream& out) {
    const io::DatasetManifest manifest = io::load_manifest(opts.manifest);
    const std::vector<io::FramePrediction> predictions = io::load_predictions(opts.predictions);
    const dc::CleaningConfig cfg = cleaning_config(opts.kappa, opts.target_class, opts.match_iou,
                                                   opts.spurious_min, opts.iou_resolution);
    const dc::CleaningOutcome outcome = dc::clean(manifest, predictions, cfg);
    const std::string text = dc::format_cleaning_report(outcome, cfg, manifest.records.size());
    out << text;
    if (!opts.report.empty()) write_text_file(opts.report, text);
    if (!opts.report_json.empty())
        write_text_file(opts.report_json,
                        dc::cleaning_report_json(outcome, cfg, manifest.records.size()));
    if (!opts.out_manifest.empty()) io::write_manifest(outcome.clean_manifest, opts.out_manifest);
}

void add_clean(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<CleanOpts>();
    CLI::App* sub = app.add_subcommand(
        "clean", "Remove frames whose labels the model disputes (low-confidence, missing or "
                 "unlabeled objects)");
    sub->add_option("--manifest", opts->manifest, "Dataset manifest")->required();
    sub->add_option("--predictions", opts->predictions, "Prediction stream over every frame")
        ->required();
    sub->add_option("--kappa", opts->kappa, "Keep threshold on matched prediction confidence")
        ->capture_default_str();
    sub->add_option("--target-class", opts->target_class, "Class under curation")
        ->capture_default_str();
    sub->add_option("--match-iou", opts->match_iou, "Mask IoU for a prediction to match a label")
        ->capture_default_str();
    sub->add_option("--spurious-min", opts->spurious_min,
                    "Confidence at which an unmatched prediction flags the frame (default: kappa)");
    sub->add_option("--iou-resolution", opts->iou_resolution, "IoU raster grid resolution")
        ->capture_default_str();
    sub->add_option("--out-manifest", opts->out_manifest, "Write the cleaned manifest here");
    sub->add_option("--report", opts->report, "Write the text report here (also printed)");
    sub->add_option("--report-json", opts->report_json, "Write the JSON report here");
    sub->callback([opts, &out] { run_clean(*opts, out); });
}

// ---- sweep ----

struct SweepOpts {
    std::string manifest, predictions;
    std::vector<std::string> kappas;
    std::string target_class = "aiming_beam";
    double match_iou = 0.5;
    std::optional<double> spurious_min;
    int iou_resolution = 512;
    std::string out_dir;
};

void run_sweep(const SweepOpts& opts, std::ostream& out) {
    const io::DatasetManifest manifest = io::load_manifest(opts.manifest);
    const std::vector<io::FramePrediction> predictions = io::load_predictions(opts.predictions);
    std::vector<double> kappas = number_list(opts.kappas, "--kappas");
    if (kappas.empty()) kappas = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    const dc::CleaningConfig base = cleaning_config(0.2, opts.target_class, opts.match_iou,
                                                    opts.spurious_min, opts.iou_resolution);
    const std::vector<dc::CleaningOutcome> outcomes =
        dc::sweep(manifest, predictions, kappas, base);
    if (!opts.out_dir.empty()) ensure_dir(opts.out_dir);
    out << "beamlab_sweep v1\n";
    out << "spurious_min_confidence\t" << format_double(base.effective_spurious_min()) << "\n";
    for (const dc::CleaningOutcome& outcome : outcomes) {
        out << "kappa\t" << format_double(outcome.kappa) << "\tkept_frames\t"
            << outcome.clean_manifest.records.size() << "\tremoved_frames\t"
            << outcome.removed.size() << "\tremoved_fraction\t"
            << format_double(outcome.removed_fraction) << "\n";
        if (!opts.out_dir.empty()) {
            dc::CleaningConfig cfg = base;
            cfg.kappa = outcome.kappa;
            cfg.spurious_min_confidence = base.effective_spurious_min();
            write_text_file(
                fs::path(opts.out_dir) / ("clean_kappa_" + format_double(outcome.kappa) + ".txt"),
                dc::format_cleaning_report(outcome, cfg, manifest.records.size()));
        }
    }
}

void add_sweep(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<SweepOpts>();
    CLI::App* sub = app.add_subcommand(
        "sweep", "Run clean across a threshold ladder with the spurious cutoff held constant");
    sub->add_option("--manifest", opts->manifest, "Dataset manifest")->required();
    sub->add_option("--predictions", opts->predictions, "Prediction stream over every frame")
        ->required();
    sub->add_option("--kappas", opts->kappas,
                    "Thresholds to sweep (default 0.05,0.1,0.15,0.2,0.25,0.3)")
        ->delimiter(',')
        ->type_name("FLOAT");
    sub->add_option("--target-class", opts->target_class, "Class under curation")
        ->capture_default_str();
    sub->add_option("--match-iou", opts->match_iou, "Mask IoU for a prediction to match a label")
        ->capture_default_str();
    sub->add_option("--spurious-min", opts->spurious_min,
                    "Constant spurious-prediction cutoff (default 0.2)");
    sub->add_option("--iou-resolution", opts->iou_resolution, "IoU raster grid resolution")
        ->capture_default_str();
    sub->add_option("--out-dir", opts->out_dir, "Write one clean report per kappa here");
    sub->callback([opts, &out] { run_sweep(*opts, out); });
}

// ---- eval ----

struct EvalOpts {
    std::string manifest, predictions;
    std::string target_class = "aiming_beam";
    double class_threshold = 0.01;
    std::optional<double> gate_px;
    std::optional<double> mm_per_px;
    std::optional<double> reference_mm, reference_px;
    std::string report, report_json;
};

void run_eval(const EvalOpts& opts, std::ostream& out) {
    const io::DatasetManifest manifest = io::load_manifest(opts.manifest);
    const std::vector<io::FramePrediction> predictions = io::load_predictions(opts.predictions);
    metrics::EvalConfig cfg;
    cfg.target_class = class_from_flag(opts.target_class);
    cfg.class_threshold = opts.class_threshold;
    cfg.gate_px = opts.gate_px;
    if (opts.mm_per_px) {
        if (!(*opts.mm_per_px > 0.0)) throw ValidationError("--mm-per-px must be positive");
        cfg.mm_per_pixel = *opts.mm_per_px;
    } else if (opts.reference_mm) {
        cfg.mm_per_pixel =
            cal::derive_scale(*opts.reference_mm, *opts.reference_px).mm_per_pixel;
    }
    const std::vector<metrics::VideoReport> reports =
        metrics::evaluate_dataset(manifest, predictions, cfg);
    const metrics::AggregateReport agg = metrics::aggregate(reports);
    const std::string text = metrics::format_eval_report(reports, agg, cfg);
    out << text;
    if (!opts.report.empty()) write_text_file(opts.report, text);
    if (!opts.report_json.empty())
        write_text_file(opts.report_json, metrics::eval_report_json(reports, agg, cfg));
}

void add_eval(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<EvalOpts>();
    CLI::App* sub = app.add_subcommand(
        "eval", "Per-video detection rate, localization error and coordinate correlation");
    sub->add_option("--manifest", opts->manifest, "Annotated manifest (test protocol)")
        ->required();
    sub->add_option("--predictions", opts->predictions, "Prediction stream")->required();
    sub->add_option("--target-class", opts->target_class, "Class to evaluate")
        ->capture_default_str();
    sub->add_option("--class-threshold", opts->class_threshold,
                    "Minimum confidence for a prediction to count")
        ->capture_default_str();
    sub->add_option("--gate-px", opts->gate_px,
                    "Count a detection only within this distance of the annotation");
    CLI::Option* mm = sub->add_option("--mm-per-px", opts->mm_per_px,
                                      "Report millimeter columns at this scale");
    CLI::Option* ref_mm = sub->add_option("--reference-mm", opts->reference_mm,
                                          "Reference object size in mm (with --reference-px)");
    CLI::Option* ref_px = sub->add_option("--reference-px", opts->reference_px,
                                          "Reference object size in pixels");
    mm->excludes(ref_mm)->excludes(ref_px);
    ref_mm->needs(ref_px);
    ref_px->needs(ref_mm);
    sub->add_option("--report", opts->report, "Write the text report here (also printed)");
    sub->add_option("--report-json", opts->report_json, "Write the JSON report here");
    sub->callback([opts, &out] { run_eval(*opts, out); });
}

// ---- map ----

struct MapOpts {
    std::string manifest, predictions;
    int iou_resolution = 512;
    std::string report, report_json;
};

void run_map(const MapOpts& opts, std::ostream& out) {
    const io::DatasetManifest manifest = io::load_manifest(opts.manifest);
    const std::vector<io::FramePrediction> predictions = io::load_predictions(opts.predictions);
    const std::vector<double> thresholds = metrics::default_iou_thresholds();
    const metrics::MapResult result =
        metrics::map_metric(manifest, predictions, thresholds, opts.iou_resolution);
    const std::string text = metrics::format_map_report(result, thresholds);
    out << text;
    if (!opts.report.empty()) write_text_file(opts.report, text);
    if (!opts.report_json.empty())
        write_text_file(opts.report_json, metrics::map_report_json(result, thresholds));
}

void add_map(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<MapOpts>();
    CLI::App* sub =
        app.add_subcommand("map", "Mean average precision over mask IoU thresholds 0.50 to 0.95");
    sub->add_option("--manifest", opts->manifest, "Labeled manifest")->required();
    sub->add_option("--predictions", opts->predictions, "Prediction stream")->required();
    sub->add_option("--iou-resolution", opts->iou_resolution, "IoU raster grid resolution")
        ->capture_default_str();
    sub->add_option("--report", opts->report, "Write the text report here (also printed)");
    sub->add_option("--report-json", opts->report_json, "Write the JSON report here");
    sub->callback([opts, &out] { run_map(*opts, out); });
}

// ---- coverage ----

struct CoverageOpts {
    std::string manifest, predictions;
    std::string target_class = "aiming_beam";
    double class_threshold = 0.01;
    std::optional<double> gate_px;
    double default_radius = 12.0;
    std::string out_dir;
};

void run_coverage(const CoverageOpts& opts, std::ostream& out) {
    const io::DatasetManifest manifest = io::load_manifest(opts.manifest);
    const std::vector<io::FramePrediction> predictions = io::load_predictions(opts.predictions);
    if (!(opts.default_radius > 0.0))
        throw ValidationError("--default-radius must be positive");
    metrics::EvalConfig cfg;
    cfg.target_class = class_from_flag(opts.target_class);
    cfg.class_threshold = opts.class_threshold;
    cfg.gate_px = opts.gate_px;
    const std::vector<metrics::VideoReport> reports =
        metrics::evaluate_dataset(manifest, predictions, cfg);
    std::map<std::string, std::pair<int, int>> dims;
    for (const io::FrameRecord& r : manifest.records) {
        auto [it, fresh] = dims.try_emplace(r.id.video, std::pair{r.width, r.height});
        if (!fresh && (it->second.first != r.width || it->second.second != r.height))
            throw ValidationError("coverage: video " + r.id.video + " mixes frame dimensions");
    }
    if (!opts.out_dir.empty()) ensure_dir(opts.out_dir);
    out << "beamlab_coverage v1\n";
    for (const metrics::VideoReport& report : reports) {
        const auto [w, h] = dims.at(report.video);
        const geo::BinaryMask model =
            metrics::coverage_map(report.outcomes, opts.default_radius, w, h);
        const geo::BinaryMask annotation =
            metrics::annotation_coverage_map(report.outcomes, opts.default_radius, w, h);
        const std::optional<double> deficit = metrics::coverage_deficit(model, annotation);
        const std::size_t missed = geo::BinaryMask::difference_count(annotation, model);
        out << "coverage\t" << report.video << "\tannotation_px\t" << annotation.popcount()
            << "\tmodel_px\t" << model.popcount() << "\tmissed_px\t" << missed << "\tdeficit\t"
            << (deficit ? format_double(*deficit) : std::string("undefined")) << "\n";
        if (!opts.out_dir.empty()) {
            io::write_pgm(model, fs::path(opts.out_dir) / (report.video + "_model.pgm"));
            io::write_pgm(annotation,
                          fs::path(opts.out_dir) / (report.video + "_annotation.pgm"));
        }
    }
}

void add_coverage(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<CoverageOpts>();
    CLI::App* sub = app.add_subcommand(
        "coverage", "Scan coverage disks for detections vs annotations, with the missed fraction");
    sub->add_option("--manifest", opts->manifest, "Annotated manifest (test protocol)")
        ->required();
    sub->add_option("--predictions", opts->predictions, "Prediction stream")->required();
    sub->add_option("--target-class", opts->target_class, "Class to evaluate")
        ->capture_default_str();
    sub->add_option("--class-threshold", opts->class_threshold,
                    "Minimum confidence for a prediction to count")
        ->capture_default_str();
    sub->add_option("--gate-px", opts->gate_px,
                    "Count a detection only within this distance of the annotation");
    sub->add_option("--default-radius", opts->default_radius,
                    "Disk radius in px for frames without a measured beam radius")
        ->capture_default_str();
    sub->add_option("--out-dir", opts->out_dir, "Write per-video coverage graymaps here");
    sub->callback([opts, &out] { run_coverage(*opts, out); });
}

// ---- calibrate ----

struct CalibrateOpts {
    double reference_mm = 0.0;
    double reference_px = 0.0;
    std::string reference_object = "probe";
    std::vector<std::string> to_mm;
};

void run_calibrate(const CalibrateOpts& opts, std::ostream& out) {
    const std::vector<double> distances = number_list(opts.to_mm, "--to-mm");
    const cal::CalibrationScale scale =
        cal::derive_scale(opts.reference_mm, opts.reference_px, opts.reference_object);
    out << "beamlab_calibration v1\n";
    out << "mm_per_pixel\t" << format_double(scale.mm_per_pixel) << "\n";
    out << "reference\t" << scale.reference_object << "\t" << format_double(scale.reference_mm)
        << "\tmm\t" << format_double(scale.reference_px) << "\tpx\n";
    for (double d : distances)
        out << "to_mm\t" << format_double(d) << "\t" << format_double(cal::to_mm(d, scale))
            << "\n";
}

void add_calibrate(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<CalibrateOpts>();
    CLI::App* sub = app.add_subcommand(
        "calibrate", "Pixel-to-millimeter scale from a reference object of known size");
    sub->add_option("--reference-mm", opts->reference_mm, "Reference object size in mm")
        ->required();
    sub->add_option("--reference-px", opts->reference_px, "Reference object size in pixels")
        ->required();
    sub->add_option("--reference-object", opts->reference_object, "Reference object name")
        ->capture_default_str();
    sub->add_option("--to-mm", opts->to_mm, "Pixel distances to convert (repeatable)")
        ->delimiter(',')
        ->type_name("FLOAT");
    sub->callback([opts, &out] { run_calibrate(*opts, out); });
}

// ---- stream ----

struct StreamOpts {
    std::string frames;
    std::string predictor;
    std::size_t queue_depth = 1;
    std::vector<std::string> budgets_ms;
    bool fail_fast = false;
    std::string target_class = "aiming_beam";
    double class_threshold = pred::kDefaultClassThreshold;
    std::string events, masks_dir, stats_json;
};

void run_stream_command(const StreamOpts& opts, std::ostream& out) {
    const fs::path manifest_path(opts.frames);
    if (fs::is_directory(manifest_path))
        throw ValidationError("--frames expects a manifest file, got a directory: " +
                              opts.frames);
    const io::DatasetManifest manifest = io::load_manifest(manifest_path);
    if (manifest.records.empty()) throw ValidationError("stream: manifest lists no frames");
    const std::vector<rt::FrameSpec> frames = rt::frames_from_manifest(manifest);
    const std::unique_ptr<pred::Predictor> predictor =
        pred::make_predictor(opts.predictor, opts.class_threshold);
    rt::PipelineConfig cfg;
    cfg.queue_depth = opts.queue_depth;
    if (const std::vector<double> budgets = number_list(opts.budgets_ms, "--budget-ms");
        !budgets.empty())
        cfg.budgets_ms = budgets;
    cfg.fail_fast = opts.fail_fast;
    cfg.target_class = class_from_flag(opts.target_class);
    cfg.keep_events = false;

    std::optional<std::ofstream> events_out;
    if (!opts.events.empty()) {
        events_out.emplace(opts.events, std::ios::binary);
        if (!*events_out) throw IoError("cannot open " + opts.events + " for writing");
        *events_out << "beamlab_events v1\n";
    }
    if (!opts.masks_dir.empty()) ensure_dir(opts.masks_dir);

    int error_frames = 0;
    const rt::StreamResult result =
        rt::run_stream(frames, *predictor, cfg, [&](const rt::FrameEvent& e) {
            if (e.error) ++error_frames;
            if (events_out) *events_out << rt::format_event(e);
            if (!opts.masks_dir.empty())
                io::write_pbm(e.exclusion_mask,
                              fs::path(opts.masks_dir) / (frame_stem(e.frame) + ".pbm"));
        });
    if (events_out) {
        *events_out << "wall_ms\t" << format_double(result.stats.wall_ms) << "\n";
        events_out->flush();
        if (!*events_out) throw IoError("write failed: " + opts.events);
    }
    out << rt::format_latency_stats(result.stats);
    out << "error_frames\t" << error_frames << "\n";
    if (!opts.stats_json.empty())
        write_text_file(opts.stats_json, rt::latency_stats_json(result.stats));
}

void add_stream(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<StreamOpts>();
    CLI::App* sub = app.add_subcommand(
        "stream", "Frame-by-frame prediction with latency accounting and budget verdicts");
    sub->add_option("--frames", opts->frames, "Manifest listing the frames to stream")
        ->required();
    sub->add_option("--predictor", opts->predictor,
                    "Backend spec: replay:FILE | synthetic:CONFIG | engine:MODEL, optionally "
                    "prefixed delay<MS>+")
        ->required();
    sub->add_option("--queue-depth", opts->queue_depth,
                    "Predict-to-postprocess queue depth (deeper raises throughput and frame age)")
        ->capture_default_str();
    sub->add_option("--budget-ms", opts->budgets_ms, "Latency budgets to verdict (default 70,100)")
        ->delimiter(',')
        ->type_name("FLOAT");
    sub->add_flag("--fail-fast", opts->fail_fast,
                  "Abort on the first predictor failure instead of skipping the frame");
    sub->add_option("--target-class", opts->target_class, "Beam class")->capture_default_str();
    sub->add_option("--class-threshold", opts->class_threshold,
                    "Minimum confidence kept in predictor output")
        ->capture_default_str();
    sub->add_option("--events", opts->events, "Write the per-frame event log here");
    sub->add_option("--masks-dir", opts->masks_dir, "Write per-frame exclusion bitmaps here");
    sub->add_option("--stats-json", opts->stats_json, "Write the latency summary as JSON here");
    sub->callback([opts, &out] { run_stream_command(*opts, out); });
}

// ---- bench ----

struct BenchOpts {
    std::string manifest;
    std::vector<std::string> predictors;
    std::string target_class = "aiming_beam";
    double class_threshold = 0.01;
    std::optional<double> gate_px;
    std::size_t queue_depth = 1;
    std::vector<std::string> budgets_ms;
    std::string report;
};

void run_bench(const BenchOpts& opts, std::ostream& out) {
    const io::DatasetManifest manifest = io::load_manifest(opts.manifest);
    metrics::EvalConfig eval_cfg;
    eval_cfg.target_class = class_from_flag(opts.target_class);
    eval_cfg.class_threshold = opts.class_threshold;
    eval_cfg.gate_px = opts.gate_px;
    rt::PipelineConfig cfg;
    cfg.queue_depth = opts.queue_depth;
    if (const std::vector<double> budgets = number_list(opts.budgets_ms, "--budget-ms");
        !budgets.empty())
        cfg.budgets_ms = budgets;
    const std::vector<rt::BenchmarkRow> rows =
        rt::benchmark(opts.predictors, manifest, cfg, eval_cfg);
    const std::string text = rt::format_benchmark(rows);
    out << text;
    if (!opts.report.empty()) write_text_file(opts.report, text);
}

void add_bench(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<BenchOpts>();
    CLI::App* sub = app.add_subcommand(
        "bench", "Detection rate vs throughput for predictor variants on one fixture");
    sub->add_option("--manifest", opts->manifest, "Annotated fixture manifest")->required();
    sub->add_option("--predictor", opts->predictors, "Backend spec (repeatable)")->required();
    sub->add_option("--target-class", opts->target_class, "Class to evaluate")
        ->capture_default_str();
    sub->add_option("--class-threshold", opts->class_threshold,
                    "Minimum confidence for a prediction to count")
        ->capture_default_str();
    sub->add_option("--gate-px", opts->gate_px,
                    "Count a detection only within this distance of the annotation");
    sub->add_option("--queue-depth", opts->queue_depth, "Pipeline queue depth")
        ->capture_default_str();
    sub->add_option("--budget-ms", opts->budgets_ms, "Latency budgets (default 70,100)")
        ->delimiter(',')
        ->type_name("FLOAT");
    sub->add_option("--report", opts->report, "Write the table here (also printed)");
    sub->callback([opts, &out] { run_bench(*opts, out); });
}

// ---- synth ----

struct SynthOpts {
    std::string scene;
    int frames = 200;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

void run_synth(const SynthOpts& opts, std::ostream& out) {
    pred::SyntheticSceneConfig cfg = pred::load_scene_config(opts.scene);
    if (opts.seed) cfg.seed = *opts.seed;
    pred::SyntheticDataset dataset = pred::generate_synthetic_dataset(cfg, opts.frames);
    ensure_dir(opts.out_dir);
    pred::write_synthetic_dataset(dataset, opts.out_dir);
    out << "beamlab_synth v1\n";
    out << "frames\t" << dataset.manifest.records.size() << "\n";
    out << "manifest\tmanifest.txt\n";
    out << "predictions\tpredictions.txt\n";
    out << "corrupted_frames\t" << dataset.corrupted_frames.size() << "\n";
}

void add_synth(CLI::App& app, std::ostream& out) {
    auto opts = std::make_shared<SynthOpts>();
    CLI::App* sub = app.add_subcommand(
        "synth", "Generate a seeded synthetic scene: manifest, labels and predictions");
    sub->add_option("--scene", opts->scene, "Scene config file (key=value)")->required();
    sub->add_option("--frames", opts->frames, "Number of frames")->capture_default_str();
    sub->add_option("--out", opts->out_dir, "Output directory")->required();
    sub->add_option("--seed", opts->seed, "Override the scene seed");
    sub->callback([opts, &out] { run_synth(*opts, out); });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"aiming-beam dataset curation, evaluation and streaming toolkit", "beamlab"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file; sections per subcommand, flags take precedence");
    add_clean(app, out);
    add_sweep(app, out);
    add_eval(app, out);
    add_map(app, out);
    add_coverage(app, out);
    add_calibrate(app, out);
    add_stream(app, out);
    add_bench(app, out);
    add_synth(app, out);
    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int dispatch(int argc, const char* const* argv) {
    return run(argc, argv, std::cout, std::cerr);
}

}  // namespace beamlab::cli
