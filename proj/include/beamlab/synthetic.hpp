#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beamlab/dataset_io.hpp"

namespace beamlab::pred {

// Deterministic per-frame random stream. Frame i always sees the same draws
// for a given seed, independent of how many frames are generated or in what
// order, so batch generation and streaming prediction agree bit for bit.
// Distributions are implemented here (Box-Muller normal, inversion Poisson)
// instead of <random> adaptors so output is identical across toolchains.
struct FrameRng {
    std::uint64_t state;

    std::uint64_t next();
    // Uniform in (0, 1].
    double unit();
    double normal(double mean, double spread);
    double clipped_normal(double mean, double spread);  // clamped to [0,1]
    int poisson(double rate);
};

FrameRng frame_rng(std::uint64_t seed, std::uint64_t stream);

// Parametric beam trajectory over the frame index.
struct BeamPath {
    enum class Kind { fixed, linear, circular, raster };

    Kind kind = Kind::circular;
    geo::Point origin{320.0, 240.0};  // fixed point / linear start / circle center
    double dx = 0.0, dy = 0.0;        // linear velocity per frame
    double radius = 120.0;            // circular
    double period = 240.0;            // frames per revolution
    double x0 = 60, y0 = 60, x1 = 580, y1 = 420;  // raster scan rectangle
    int cols = 20, rows = 10;         // raster grid, serpentine order

    geo::Point at(int frame) const;

    // "fixed:x,y" | "linear:x,y,dx,dy" | "circular:cx,cy,r,period" |
    // "raster:x0,y0,x1,y1,cols,rows"
    static BeamPath parse(std::string_view spec);
    std::string to_spec() const;
};

struct ConfidenceModel {
    double mean = 0.8;
    double spread = 0.1;
};

struct SyntheticSceneConfig {
    std::string video_id = "synthetic";
    int width = 640;
    int height = 480;
    io::Split split = io::Split::train;
    io::SurgeryType surgery = io::SurgeryType::unknown;

    double beam_radius = 12.0;
    BeamPath path;
    double detection_probability = 1.0;
    double centroid_jitter = 0.0;          // std-dev of the centroid offset, px
    ConfidenceModel true_confidence{0.8, 0.1};
    double spurious_rate = 0.0;            // Poisson mean of extra beam instances per frame
    ConfidenceModel spurious_confidence{0.3, 0.1};
    // Fraction of frames whose beam confidence is drawn from the corrupted
    // population instead; models annotation errors the cleaner should flag.
    double corrupt_fraction = 0.0;
    ConfidenceModel corrupted_confidence{0.05, 0.05};

    bool scene_objects = true;  // static instrument/probe/fiber/shaft quads
    std::uint64_t seed = 1;

    void validate() const;
};

// Key=value config file ("#" comments, one pair per line); keys match the
// field names above, path uses the BeamPath spec syntax.
SyntheticSceneConfig parse_scene_config(std::string_view text, std::string_view source_name);
SyntheticSceneConfig load_scene_config(const std::filesystem::path& path);

struct SyntheticDataset {
    io::DatasetManifest manifest;
    std::vector<io::FramePrediction> predictions;
    std::vector<int> corrupted_frames;  // ascending frame indices
};

// No files are touched; records carry empty image/label paths until the
// dataset is written out.
SyntheticDataset generate_synthetic_dataset(const SyntheticSceneConfig& config, int n_frames);

// Per-frame model output before class-threshold filtering.
io::FramePrediction synthetic_frame_prediction(const SyntheticSceneConfig& config, int frame,
                                               bool corrupted);

// Writes manifest.txt, labels/, predictions.txt and (when corruption is on)
// corrupted_frames.txt into out_dir, updating the records' label paths.
void write_synthetic_dataset(SyntheticDataset& dataset, const std::filesystem::path& out_dir);

}  // namespace beamlab::pred
