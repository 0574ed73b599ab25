#include "beamlab/predictor.hpp"

#include <chrono>
#include <thread>

#include "beamlab/numeric_text.hpp"

namespace beamlab::pred {

namespace {

void filter_by_threshold(io::FramePrediction& fp, double threshold) {
    std::erase_if(fp.instances, [&](const io::PolygonInstance& inst) {
        return inst.confidence.value_or(0.0) < threshold;
    });
}

void check_threshold(double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ValidationError("class threshold must be in [0,1], got " + format_double(threshold));
}

}  // namespace

ReplayPredictor::ReplayPredictor(const std::filesystem::path& path, double class_threshold)
    : class_threshold_(class_threshold) {
    check_threshold(class_threshold);
    for (io::FramePrediction& fp : io::load_predictions(path)) {
        const io::FrameId id = fp.id;
        frames_.emplace(id, std::move(fp));
    }
}

io::FramePrediction ReplayPredictor::predict(const io::FrameId& id) {
    const auto it = frames_.find(id);
    if (it == frames_.end())
        throw ValidationError("replay: unknown frame " + io::to_string(id));
    io::FramePrediction out = it->second;
    filter_by_threshold(out, class_threshold_);
    return out;
}

SyntheticPredictor::SyntheticPredictor(SyntheticSceneConfig config, double class_threshold)
    : config_(std::move(config)), class_threshold_(class_threshold) {
    check_threshold(class_threshold);
    config_.validate();
    if (config_.corrupt_fraction != 0.0)
        throw ValidationError(
            "corruption is a batch-generation feature; streaming synthetic prediction does not "
            "support corrupt_fraction");
}

io::FramePrediction SyntheticPredictor::predict(const io::FrameId& id) {
    if (id.video != config_.video_id)
        throw ValidationError("synthetic: unknown video '" + id.video + "' (configured '" +
                              config_.video_id + "')");
    if (id.index < 0) throw ValidationError("synthetic: negative frame index");
    io::FramePrediction out = synthetic_frame_prediction(config_, id.index, /*corrupted=*/false);
    filter_by_threshold(out, class_threshold_);
    return out;
}

DelayPredictor::DelayPredictor(std::unique_ptr<Predictor> inner, double delay_ms)
    : inner_(std::move(inner)), delay_ms_(delay_ms) {
    if (!inner_) throw ValidationError("delay predictor needs an inner predictor");
    if (delay_ms < 0.0) throw ValidationError("delay must be non-negative");
}

io::FramePrediction DelayPredictor::predict(const io::FrameId& id) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms_));
    return inner_->predict(id);
}

std::string DelayPredictor::name() const {
    // Mirrors the spec-string order: "delay<MS>+<inner>".
    return "delay" + format_double(delay_ms_) + "+" + inner_->name();
}

std::unique_ptr<Predictor> make_engine_predictor(const EngineConfig& config) {
    if (config.model_path.empty()) throw ValidationError("engine: model path must not be empty");
    if (config.input_side <= 0) throw ValidationError("engine: input side must be positive");
    check_threshold(config.class_threshold);
    throw ValidationError(
        "engine backend is not compiled into this build; use replay: or synthetic:, or rebuild "
        "with an inference engine enabled");
}

std::unique_ptr<Predictor> make_predictor(const std::string& spec, double class_threshold) {
    std::string_view rest{spec};
    double delay_ms = -1.0;
    if (rest.starts_with("delay")) {
        const std::size_t plus = rest.find('+');
        if (plus != std::string_view::npos) {
            const std::optional<double> d = parse_double(rest.substr(5, plus - 5));
            if (!d || *d < 0.0)
                throw ValidationError("malformed delay in predictor spec '" + spec + "'");
            delay_ms = *d;
            rest = rest.substr(plus + 1);
        }
    }
    const std::size_t colon = rest.find(':');
    if (colon == std::string_view::npos)
        throw ValidationError("predictor spec needs the form kind:argument, got '" + spec + "'");
    const std::string_view kind = rest.substr(0, colon);
    const std::string arg{rest.substr(colon + 1)};

    std::unique_ptr<Predictor> p;
    if (kind == "replay") {
        p = std::make_unique<ReplayPredictor>(arg, class_threshold);
    } else if (kind == "synthetic") {
        p = std::make_unique<SyntheticPredictor>(load_scene_config(arg), class_threshold);
    } else if (kind == "engine") {
        EngineConfig cfg;
        cfg.model_path = arg;
        cfg.class_threshold = class_threshold;
        p = make_engine_predictor(cfg);
    } else {
        throw ValidationError("unknown predictor kind '" + std::string(kind) +
                              "' (replay, synthetic, engine)");
    }
    if (delay_ms >= 0.0) p = std::make_unique<DelayPredictor>(std::move(p), delay_ms);
    return p;
}

}  // namespace beamlab::pred
