#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "beamlab/dataset_io.hpp"
#include "beamlab/synthetic.hpp"

namespace beamlab::pred {

// Instances below this confidence are dropped from predictor output.
inline constexpr double kDefaultClassThreshold = 0.01;

class Predictor {
public:
    virtual ~Predictor() = default;

    // Model output for one frame, already filtered by the class threshold.
    // Must be deterministic for a given frame id.
    virtual io::FramePrediction predict(const io::FrameId& id) = 0;

    virtual std::string name() const = 0;
};

// Replays a recorded prediction stream; the closest stand-in for a live
// model when pixel data is unavailable.
class ReplayPredictor : public Predictor {
public:
    explicit ReplayPredictor(const std::filesystem::path& path,
                             double class_threshold = kDefaultClassThreshold);

    io::FramePrediction predict(const io::FrameId& id) override;
    std::string name() const override { return "replay"; }

private:
    std::map<io::FrameId, io::FramePrediction> frames_;
    double class_threshold_;
};

// Seeded scene oracle; pure function of (config, frame index).
class SyntheticPredictor : public Predictor {
public:
    explicit SyntheticPredictor(SyntheticSceneConfig config,
                                double class_threshold = kDefaultClassThreshold);

    io::FramePrediction predict(const io::FrameId& id) override;
    std::string name() const override { return "synthetic"; }

    const SyntheticSceneConfig& config() const { return config_; }

private:
    SyntheticSceneConfig config_;
    double class_threshold_;
};

// Adds a fixed delay before delegating; stands in for model latency.
class DelayPredictor : public Predictor {
public:
    DelayPredictor(std::unique_ptr<Predictor> inner, double delay_ms);

    io::FramePrediction predict(const io::FrameId& id) override;
    std::string name() const override;

private:
    std::unique_ptr<Predictor> inner_;
    double delay_ms_;
};

// External inference engine adapter (interchange-format model file, square
// input, class threshold). This build carries the configuration surface only;
// constructing the predictor reports that no engine is compiled in.
struct EngineConfig {
    std::filesystem::path model_path;
    int input_side = 480;
    double class_threshold = kDefaultClassThreshold;
};

std::unique_ptr<Predictor> make_engine_predictor(const EngineConfig& config);

// Backend spec syntax: "replay:FILE" | "synthetic:CONFIG_FILE" |
// "engine:MODEL_FILE", optionally prefixed "delay<MS>+" (e.g.
// "delay30+replay:preds.txt").
std::unique_ptr<Predictor> make_predictor(const std::string& spec,
                                          double class_threshold = kDefaultClassThreshold);

}  // namespace beamlab::pred
