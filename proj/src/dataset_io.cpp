#include "beamlab/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "beamlab/numeric_text.hpp"

namespace beamlab::io {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestHeader = "beamlab_manifest v1";
constexpr std::string_view kPredictionHeader = "beamlab_predictions v1";

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "aiming_beam", "instrument", "probe", "fiber", "shaft"};

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// Lines of a text blob; a single trailing newline does not produce an empty
// final line.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines = split_on(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::string read_file(const fs::path& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string(what) + " not readable: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

fs::path resolve(const fs::path& base_dir, std::string_view token) {
    fs::path p{std::string(token)};
    if (p.is_absolute()) return p.lexically_normal();
    return (base_dir / p).lexically_normal();
}

std::string path_token(const fs::path& p, const fs::path& base_dir) {
    if (p.empty()) return "-";
    const fs::path rel = p.lexically_relative(base_dir);
    if (rel.empty() || *rel.begin() == "..") return p.generic_string();
    return rel.generic_string();
}

void check_video_token(std::string_view video, const std::string& source, int line) {
    if (video.empty()) throw ParseError(source, line, "empty video id");
    for (char c : video)
        if (c == '\t' || c == '\n' || c == '\r' || c == ' ')
            throw ParseError(source, line, "video id must not contain whitespace");
}

}  // namespace

std::string_view class_name(ClassId c) { return kClassNames[static_cast<int>(c)]; }

std::optional<ClassId> class_from_id(int id) {
    if (id < 0 || id >= kNumClasses) return std::nullopt;
    return static_cast<ClassId>(id);
}

std::optional<ClassId> class_from_name(std::string_view name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (kClassNames[i] == name) return static_cast<ClassId>(i);
    return std::nullopt;
}

std::string_view to_string(SurgeryType s) {
    switch (s) {
        case SurgeryType::tors: return "TORS";
        case SurgeryType::non_tors: return "non_TORS";
        default: return "unknown";
    }
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

std::optional<SurgeryType> surgery_from_string(std::string_view s) {
    if (s == "TORS") return SurgeryType::tors;
    if (s == "non_TORS") return SurgeryType::non_tors;
    if (s == "unknown") return SurgeryType::unknown;
    return std::nullopt;
}

std::optional<Split> split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    return std::nullopt;
}

std::string to_string(const FrameId& id) { return id.video + "/" + std::to_string(id.index); }

namespace {

void check_instance_args(int width, int height, const std::optional<double>& confidence) {
    if (width <= 0 || height <= 0)
        throw ValidationError("polygon instance: image dimensions must be positive");
    if (confidence && !(*confidence >= 0.0 && *confidence <= 1.0))
        throw ValidationError("polygon instance: confidence " + format_double(*confidence) +
                              " outside [0,1]");
}

}  // namespace

PolygonInstance instance_from_normalized(ClassId class_id, std::vector<geo::Point> normalized,
                                         int width, int height,
                                         std::optional<double> confidence) {
    check_instance_args(width, height, confidence);
    std::vector<geo::Point> px;
    px.reserve(normalized.size());
    for (const geo::Point& p : normalized) {
        if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0))
            throw ValidationError("polygon instance: normalized coordinate (" +
                                  format_double(p.x) + "," + format_double(p.y) +
                                  ") outside [0,1]");
        px.push_back({p.x * width, p.y * height});
    }
    return PolygonInstance{class_id, geo::Polygon(std::move(px)), std::move(normalized),
                           confidence};
}

PolygonInstance instance_from_pixels(ClassId class_id, geo::Polygon pixels, int width, int height,
                                     std::optional<double> confidence) {
    check_instance_args(width, height, confidence);
    std::vector<geo::Point> norm;
    norm.reserve(pixels.size());
    for (const geo::Point& p : pixels.vertices()) {
        if (!(p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height))
            throw ValidationError("polygon instance: pixel coordinate (" + format_double(p.x) +
                                  "," + format_double(p.y) + ") outside " +
                                  std::to_string(width) + "x" + std::to_string(height));
        norm.push_back({p.x / width, p.y / height});
    }
    return PolygonInstance{class_id, std::move(pixels), std::move(norm), confidence};
}

std::vector<PolygonInstance> parse_label_file(std::string_view text, int width, int height,
                                              std::string_view source_name) {
    if (width <= 0 || height <= 0)
        throw ValidationError("parse_label_file: image dimensions must be positive");
    const std::string source{source_name};
    std::vector<PolygonInstance> out;
    const std::vector<std::string_view> lines = split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        const std::vector<std::string_view> tok = split_ws(lines[li]);
        if (tok.empty()) continue;
        if (tok.size() < 7 || tok.size() % 2 == 0)
            throw ParseError(source, line_no,
                             "expected a class id followed by at least 3 coordinate pairs");
        const std::optional<int> cid = parse_int(tok[0]);
        if (!cid) throw ParseError(source, line_no, "malformed class id '" + std::string(tok[0]) + "'");
        const std::optional<ClassId> cls = class_from_id(*cid);
        if (!cls)
            throw ParseError(source, line_no,
                             "unknown class id " + std::string(tok[0]) +
                                 " (known: 0=aiming_beam 1=instrument 2=probe 3=fiber 4=shaft)");
        std::vector<geo::Point> norm;
        norm.reserve((tok.size() - 1) / 2);
        for (std::size_t t = 1; t + 1 < tok.size(); t += 2) {
            const std::optional<double> x = parse_double(tok[t]);
            const std::optional<double> y = parse_double(tok[t + 1]);
            if (!x || !y) throw ParseError(source, line_no, "malformed coordinate");
            if (*x < 0.0 || *x > 1.0 || *y < 0.0 || *y > 1.0)
                throw ParseError(source, line_no, "normalized coordinate outside [0,1]");
            norm.push_back({*x, *y});
        }
        try {
            out.push_back(instance_from_normalized(*cls, std::move(norm), width, height));
        } catch (const ValidationError& e) {
            throw ParseError(source, line_no, e.what());
        }
    }
    return out;
}

std::string format_label_file(std::span<const PolygonInstance> instances) {
    std::string out;
    for (const PolygonInstance& inst : instances) {
        out += std::to_string(static_cast<int>(inst.class_id));
        for (const geo::Point& p : inst.normalized) {
            out += ' ';
            out += format_double(p.x);
            out += ' ';
            out += format_double(p.y);
        }
        out += '\n';
    }
    return out;
}

void write_label_file(const fs::path& path, std::span<const PolygonInstance> instances) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write label file: " + path.string());
    out << format_label_file(instances);
    if (!out) throw IoError("short write: " + path.string());
}

DatasetManifest load_manifest(const fs::path& path) {
    return parse_manifest(read_file(path, "manifest"), path, /*load_labels=*/true);
}

DatasetManifest parse_manifest(std::string_view text, const fs::path& path, bool load_labels) {
    const std::string source = path.string();
    const fs::path base_dir = fs::absolute(path).lexically_normal().parent_path();
    const std::vector<std::string_view> lines = split_lines(text);
    if (lines.empty() || lines[0] != kManifestHeader)
        throw ParseError(source, 1, "expected header '" + std::string(kManifestHeader) + "'");

    DatasetManifest m;
    enum class Section { split, notes, records } section = Section::split;
    std::set<FrameId> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        const std::string_view line = lines[li];
        if (line.empty()) throw ParseError(source, line_no, "blank line inside manifest");
        if (section == Section::split) {
            if (!line.starts_with("split "))
                throw ParseError(source, line_no, "expected 'split <train|val|test>'");
            const std::optional<Split> sp = split_from_string(line.substr(6));
            if (!sp)
                throw ParseError(source, line_no, "unknown split '" + std::string(line.substr(6)) +
                                                      "' (train, val, test)");
            m.split = *sp;
            section = Section::notes;
            continue;
        }
        if (section == Section::notes && line.starts_with("note ")) {
            m.notes.emplace_back(line.substr(5));
            continue;
        }
        section = Section::records;
        const std::vector<std::string_view> tok = split_on(line, '\t');
        if (tok[0] != "record")
            throw ParseError(source, line_no, "expected a 'record' line");
        if (tok.size() != 8 && !(tok.size() == 11 && tok[8] == "beam"))
            throw ParseError(source, line_no, "record needs 8 fields, optionally 'beam <x> <y>'");

        FrameRecord r;
        check_video_token(tok[1], source, line_no);
        r.id.video = std::string(tok[1]);
        const std::optional<int> idx = parse_int(tok[2]);
        if (!idx || *idx < 0) throw ParseError(source, line_no, "malformed frame index");
        r.id.index = *idx;
        const std::optional<int> w = parse_int(tok[3]);
        const std::optional<int> h = parse_int(tok[4]);
        if (!w || !h || *w <= 0 || *h <= 0)
            throw ParseError(source, line_no, "frame dimensions must be positive integers");
        r.width = *w;
        r.height = *h;
        const std::optional<SurgeryType> surgery = surgery_from_string(tok[5]);
        if (!surgery)
            throw ParseError(source, line_no,
                             "unknown surgery type '" + std::string(tok[5]) +
                                 "' (TORS, non_TORS, unknown)");
        r.surgery = *surgery;
        if (tok[6] != "-") r.image_path = resolve(base_dir, tok[6]);
        if (tok[7] != "-") r.label_path = resolve(base_dir, tok[7]);
        if (tok.size() == 11) {
            if (m.split != Split::test)
                throw ParseError(source, line_no,
                                 "beam point annotations are only allowed in test manifests");
            const std::optional<double> bx = parse_double(tok[9]);
            const std::optional<double> by = parse_double(tok[10]);
            if (!bx || !by) throw ParseError(source, line_no, "malformed beam point");
            r.beam_point = geo::Point{*bx, *by};
        }
        if (!seen.insert(r.id).second)
            throw ParseError(source, line_no, "duplicate frame_id " + to_string(r.id));

        if (!r.image_path.empty() && !fs::exists(r.image_path))
            throw IoError("manifest " + source + ":" + std::to_string(line_no) +
                          " references missing image file: " + r.image_path.string());
        if (!r.label_path.empty()) {
            if (!fs::exists(r.label_path))
                throw IoError("manifest " + source + ":" + std::to_string(line_no) +
                              " references missing label file: " + r.label_path.string());
            if (load_labels)
                r.labels = parse_label_file(read_file(r.label_path, "label file"), r.width,
                                            r.height, r.label_path.string());
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

std::string format_manifest(const DatasetManifest& manifest, const fs::path& base_dir) {
    std::set<FrameId> seen;
    for (const FrameRecord& r : manifest.records) {
        if (r.width <= 0 || r.height <= 0)
            throw ValidationError("manifest: frame " + to_string(r.id) +
                                  " has non-positive dimensions");
        if (r.beam_point && manifest.split != Split::test)
            throw ValidationError("manifest: beam point on " + to_string(r.id) +
                                  " but beam annotations are only allowed in test manifests");
        if (!seen.insert(r.id).second)
            throw ValidationError("manifest: duplicate frame_id " + to_string(r.id));
    }
    const fs::path base = fs::absolute(base_dir).lexically_normal();
    std::string out{kManifestHeader};
    out += '\n';
    out += "split ";
    out += to_string(manifest.split);
    out += '\n';
    for (const std::string& note : manifest.notes) {
        out += "note ";
        out += note;
        out += '\n';
    }
    for (const FrameRecord& r : manifest.records) {
        out += "record\t";
        out += r.id.video;
        out += '\t';
        out += std::to_string(r.id.index);
        out += '\t';
        out += std::to_string(r.width);
        out += '\t';
        out += std::to_string(r.height);
        out += '\t';
        out += to_string(r.surgery);
        out += '\t';
        out += path_token(r.image_path, base);
        out += '\t';
        out += path_token(r.label_path, base);
        if (r.beam_point) {
            out += "\tbeam\t";
            out += format_double(r.beam_point->x);
            out += '\t';
            out += format_double(r.beam_point->y);
        }
        out += '\n';
    }
    return out;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << format_manifest(manifest, fs::absolute(path).lexically_normal().parent_path());
    if (!out) throw IoError("short write: " + path.string());
}

PredictionReader::PredictionReader(const fs::path& path)
    : source_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw IoError("predictions not readable: " + path.string());
    const std::optional<std::string> header = read_line();
    if (!header || *header != kPredictionHeader)
        throw ParseError(source_, 1, "expected header '" + std::string(kPredictionHeader) + "'");
}

std::optional<std::string> PredictionReader::read_line() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_no_;
    return line;
}

std::optional<FramePrediction> PredictionReader::next() {
    std::optional<std::string> line;
    int line_no;
    if (pending_) {
        line = std::move(pending_);
        line_no = pending_line_;
        pending_.reset();
    } else {
        line = read_line();
        line_no = line_no_;
    }
    if (!line) return std::nullopt;
    if (line->empty()) throw ParseError(source_, line_no, "blank line inside prediction stream");

    const std::vector<std::string_view> tok = split_on(*line, '\t');
    if (tok[0] != "frame") throw ParseError(source_, line_no, "expected a 'frame' line");
    if (tok.size() != 5 && !(tok.size() == 7 && tok[5] == "inference_ms"))
        throw ParseError(source_, line_no,
                         "frame needs 5 fields, optionally 'inference_ms <t>'");

    FramePrediction fp;
    check_video_token(tok[1], source_, line_no);
    fp.id.video = std::string(tok[1]);
    const std::optional<int> idx = parse_int(tok[2]);
    if (!idx || *idx < 0) throw ParseError(source_, line_no, "malformed frame index");
    fp.id.index = *idx;
    const std::optional<int> w = parse_int(tok[3]);
    const std::optional<int> h = parse_int(tok[4]);
    if (!w || !h || *w <= 0 || *h <= 0)
        throw ParseError(source_, line_no, "frame dimensions must be positive integers");
    fp.width = *w;
    fp.height = *h;
    if (tok.size() == 7) {
        const std::optional<double> t = parse_double(tok[6]);
        if (!t || *t < 0) throw ParseError(source_, line_no, "malformed inference_ms");
        fp.inference_ms = *t;
    }

    const auto [it, inserted] = last_index_.try_emplace(fp.id.video, fp.id.index);
    if (!inserted) {
        if (fp.id.index <= it->second)
            throw ParseError(source_, line_no,
                             "non-monotonic frame index for video " + fp.id.video + ": " +
                                 std::to_string(fp.id.index) + " after " +
                                 std::to_string(it->second));
        it->second = fp.id.index;
    }

    while (true) {
        std::optional<std::string> inst_line = read_line();
        if (!inst_line) break;
        if (!inst_line->starts_with("inst\t")) {
            pending_ = std::move(inst_line);
            pending_line_ = line_no_;
            break;
        }
        const int inst_no = line_no_;
        const std::vector<std::string_view> it2 = split_on(*inst_line, '\t');
        if (it2.size() < 9 || (it2.size() - 3) % 2 != 0)
            throw ParseError(source_, inst_no,
                             "inst needs a class id, a confidence and at least 3 coordinate pairs");
        const std::optional<int> cid = parse_int(it2[1]);
        if (!cid) throw ParseError(source_, inst_no, "malformed class id");
        const std::optional<ClassId> cls = class_from_id(*cid);
        if (!cls) throw ParseError(source_, inst_no, "unknown class id " + std::string(it2[1]));
        const std::optional<double> conf = parse_double(it2[2]);
        if (!conf) throw ParseError(source_, inst_no, "missing or malformed confidence");
        if (*conf < 0.0 || *conf > 1.0)
            throw ParseError(source_, inst_no, "confidence outside [0,1]");
        std::vector<geo::Point> norm;
        norm.reserve((it2.size() - 3) / 2);
        for (std::size_t t = 3; t + 1 < it2.size(); t += 2) {
            const std::optional<double> x = parse_double(it2[t]);
            const std::optional<double> y = parse_double(it2[t + 1]);
            if (!x || !y) throw ParseError(source_, inst_no, "malformed coordinate");
            if (*x < 0.0 || *x > 1.0 || *y < 0.0 || *y > 1.0)
                throw ParseError(source_, inst_no, "normalized coordinate outside [0,1]");
            norm.push_back({*x, *y});
        }
        try {
            fp.instances.push_back(
                instance_from_normalized(*cls, std::move(norm), fp.width, fp.height, conf));
        } catch (const ValidationError& e) {
            throw ParseError(source_, inst_no, e.what());
        }
    }
    return fp;
}

std::vector<FramePrediction> load_predictions(const fs::path& path) {
    PredictionReader reader(path);
    std::vector<FramePrediction> out;
    while (std::optional<FramePrediction> fp = reader.next()) out.push_back(std::move(*fp));
    return out;
}

std::string format_predictions(std::span<const FramePrediction> frames) {
    std::map<std::string, int> last_index;
    for (const FramePrediction& f : frames) {
        if (f.width <= 0 || f.height <= 0)
            throw ValidationError("predictions: frame " + to_string(f.id) +
                                  " has non-positive dimensions");
        const auto [it, fresh] = last_index.emplace(f.id.video, f.id.index);
        if (!fresh) {
            if (f.id.index <= it->second)
                throw ValidationError("predictions: frame index not increasing in video " +
                                      f.id.video + " (" + std::to_string(f.id.index) + " after " +
                                      std::to_string(it->second) + ")");
            it->second = f.id.index;
        }
        for (const PolygonInstance& inst : f.instances)
            if (!inst.confidence)
                throw ValidationError("predictions: instance without confidence on frame " +
                                      to_string(f.id));
    }
    std::string out{kPredictionHeader};
    out += '\n';
    for (const FramePrediction& f : frames) {
        out += "frame\t";
        out += f.id.video;
        out += '\t';
        out += std::to_string(f.id.index);
        out += '\t';
        out += std::to_string(f.width);
        out += '\t';
        out += std::to_string(f.height);
        if (f.inference_ms) {
            out += "\tinference_ms\t";
            out += format_double(*f.inference_ms);
        }
        out += '\n';
        for (const PolygonInstance& inst : f.instances) {
            out += "inst\t";
            out += std::to_string(static_cast<int>(inst.class_id));
            out += '\t';
            out += format_double(*inst.confidence);
            for (const geo::Point& p : inst.normalized) {
                out += '\t';
                out += format_double(p.x);
                out += '\t';
                out += format_double(p.y);
            }
            out += '\n';
        }
    }
    return out;
}

void write_predictions(std::span<const FramePrediction> frames, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write predictions: " + path.string());
    out << format_predictions(frames);
    if (!out) throw IoError("short write: " + path.string());
}

PredictionIndex index_predictions(std::span<const FramePrediction> frames) {
    PredictionIndex index;
    for (const FramePrediction& f : frames) {
        if (!index.emplace(f.id, &f).second)
            throw ValidationError("duplicate prediction for frame " + to_string(f.id));
    }
    return index;
}

}  // namespace beamlab::io
