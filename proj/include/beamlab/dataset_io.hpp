#pragma once

#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beamlab/errors.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab::io {

// Segmentation classes. The numeric values are the on-disk ids.
enum class ClassId : int {
    aiming_beam = 0,
    instrument = 1,
    probe = 2,
    fiber = 3,
    shaft = 4,
};

inline constexpr int kNumClasses = 5;

std::string_view class_name(ClassId c);
std::optional<ClassId> class_from_id(int id);
std::optional<ClassId> class_from_name(std::string_view name);

enum class SurgeryType { tors, non_tors, unknown };
enum class Split { train, val, test };

std::string_view to_string(SurgeryType s);
std::string_view to_string(Split s);
std::optional<SurgeryType> surgery_from_string(std::string_view s);
std::optional<Split> split_from_string(std::string_view s);

struct FrameId {
    std::string video;
    int index = 0;

    auto operator<=>(const FrameId&) const = default;
};

std::string to_string(const FrameId& id);

// One labeled or predicted object. `polygon` is the pixel-space form used by
// all computations; `normalized` is the authoritative on-disk form in
// [0,1]^2, kept alongside so rewriting a parsed file is lossless.
struct PolygonInstance {
    ClassId class_id;
    geo::Polygon polygon;
    std::vector<geo::Point> normalized;
    std::optional<double> confidence;
};

PolygonInstance instance_from_normalized(ClassId class_id, std::vector<geo::Point> normalized,
                                         int width, int height,
                                         std::optional<double> confidence = std::nullopt);
PolygonInstance instance_from_pixels(ClassId class_id, geo::Polygon pixels, int width, int height,
                                     std::optional<double> confidence = std::nullopt);

struct FrameRecord {
    FrameId id;
    int width = 0;
    int height = 0;
    std::vector<PolygonInstance> labels;
    // Beam-center annotation; only carried by test-protocol records.
    std::optional<geo::Point> beam_point;
    SurgeryType surgery = SurgeryType::unknown;
    // Absolute resolved paths; empty means "no file" (serialized as "-").
    std::filesystem::path image_path;
    std::filesystem::path label_path;
};

struct DatasetManifest {
    Split split = Split::train;
    std::vector<std::string> notes;
    std::vector<FrameRecord> records;
};

// Label file grammar: one instance per line,
//   <class_id> <x1> <y1> <x2> <y2> ... <xK> <yK>
// coordinates normalized to [0,1], K >= 3. Rejects unknown class ids,
// malformed numbers, out-of-range coordinates and degenerate polygons,
// reporting the offending line.
std::vector<PolygonInstance> parse_label_file(std::string_view text, int width, int height,
                                              std::string_view source_name = "<label>");
std::string format_label_file(std::span<const PolygonInstance> instances);
void write_label_file(const std::filesystem::path& path,
                      std::span<const PolygonInstance> instances);

// Manifest grammar (tab-separated records, canonical field order):
//   beamlab_manifest v1
//   split <train|val|test>
//   note <free text>                                   (zero or more)
//   record <video> <index> <width> <height> <surgery> <image> <label> [beam <x> <y>]
// Referenced label/image files must exist ("-" means none); label files are
// parsed eagerly so a load never silently drops instances. Duplicate frame
// ids and beam points outside test splits are rejected.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& path,
                               bool load_labels = true);
std::string format_manifest(const DatasetManifest& manifest,
                            const std::filesystem::path& base_dir);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// One frame of model output. Confidence is mandatory for every instance.
struct FramePrediction {
    FrameId id;
    int width = 0;
    int height = 0;
    std::vector<PolygonInstance> instances;
    std::optional<double> inference_ms;
};

// Prediction stream grammar (tab-separated, canonical):
//   beamlab_predictions v1
//   frame <video> <index> <width> <height> [inference_ms <t>]
//   inst <class_id> <confidence> <x1> <y1> ... <xK> <yK>    (zero or more per frame)
// Frames must be strictly increasing by index within each video.
class PredictionReader {
public:
    explicit PredictionReader(const std::filesystem::path& path);
    // Next frame block, or nullopt at end of stream.
    std::optional<FramePrediction> next();

private:
    std::optional<std::string> read_line();

    std::string source_;
    std::ifstream in_;
    int line_no_ = 0;
    std::optional<std::string> pending_;
    int pending_line_ = 0;
    std::map<std::string, int> last_index_;
};

std::vector<FramePrediction> load_predictions(const std::filesystem::path& path);
std::string format_predictions(std::span<const FramePrediction> frames);
void write_predictions(std::span<const FramePrediction> frames,
                       const std::filesystem::path& path);

using PredictionIndex = std::map<FrameId, const FramePrediction*>;
PredictionIndex index_predictions(std::span<const FramePrediction> frames);

}  // namespace beamlab::io
