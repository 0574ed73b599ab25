#include "beamlab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "beamlab/numeric_text.hpp"

namespace beamlab::pred {

namespace fs = std::filesystem;

namespace {

constexpr int kBeamVertices = 32;
// Stream tag for the corruption shuffle; far outside any frame index.
constexpr std::uint64_t kCorruptionStream = 0xC0FFEE0000000001ull;

geo::Polygon regular_polygon(geo::Point center, double radius, int n) {
    std::vector<geo::Point> v;
    v.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        v.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return geo::Polygon(std::move(v));
}

geo::Polygon quad(double x0, double y0, double x1, double y1) {
    return geo::Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

geo::Point clamp_center(geo::Point c, double margin, int width, int height) {
    return {std::clamp(c.x, margin, width - margin), std::clamp(c.y, margin, height - margin)};
}

// Static surgical-tool layout, scaled to the frame.
std::vector<io::PolygonInstance> scene_object_instances(const SyntheticSceneConfig& cfg,
                                                        bool with_confidence) {
    const double w = cfg.width, h = cfg.height;
    const std::optional<double> conf =
        with_confidence ? std::optional<double>(0.9) : std::nullopt;
    std::vector<io::PolygonInstance> out;
    out.push_back(io::instance_from_pixels(io::ClassId::instrument,
                                           quad(0.78 * w, 0.10 * h, 0.97 * w, 0.55 * h),
                                           cfg.width, cfg.height, conf));
    out.push_back(io::instance_from_pixels(io::ClassId::probe,
                                           quad(0.05 * w, 0.05 * h, 0.22 * w, 0.18 * h),
                                           cfg.width, cfg.height, conf));
    out.push_back(io::instance_from_pixels(io::ClassId::fiber,
                                           quad(0.30 * w, 0.02 * h, 0.33 * w, 0.30 * h),
                                           cfg.width, cfg.height, conf));
    out.push_back(io::instance_from_pixels(io::ClassId::shaft,
                                           quad(0.02 * w, 0.75 * h, 0.30 * w, 0.95 * h),
                                           cfg.width, cfg.height, conf));
    return out;
}

std::vector<int> pick_corrupted(const SyntheticSceneConfig& cfg, int n_frames) {
    const int k = static_cast<int>(std::llround(cfg.corrupt_fraction * n_frames));
    if (k <= 0) return {};
    std::vector<int> idx(n_frames);
    for (int i = 0; i < n_frames; ++i) idx[i] = i;
    FrameRng rng = frame_rng(cfg.seed, kCorruptionStream);
    for (int i = n_frames - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(k, n_frames));
    std::sort(idx.begin(), idx.end());
    return idx;
}

void require_ratio(double v, const char* name) {
    if (v < 0.0 || v > 1.0)
        throw ValidationError(std::string(name) + " must be in [0,1], got " + format_double(v));
}

}  // namespace

std::uint64_t FrameRng::next() {
    // splitmix64
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double FrameRng::unit() { return ((next() >> 11) + 1) * 0x1.0p-53; }

double FrameRng::normal(double mean, double spread) {
    const double u1 = unit();
    const double u2 = unit();
    return mean + spread * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double FrameRng::clipped_normal(double mean, double spread) {
    return std::clamp(normal(mean, spread), 0.0, 1.0);
}

int FrameRng::poisson(double rate) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    double p = 1.0;
    int k = 0;
    do {
        ++k;
        p *= unit();
    } while (p > limit);
    return k - 1;
}

FrameRng frame_rng(std::uint64_t seed, std::uint64_t stream) {
    FrameRng rng{seed ^ (0x9E3779B97F4A7C15ull * (stream + 0x632BE59BD9B4E019ull))};
    rng.next();
    return rng;
}

geo::Point BeamPath::at(int frame) const {
    switch (kind) {
        case Kind::fixed:
            return origin;
        case Kind::linear:
            return {origin.x + dx * frame, origin.y + dy * frame};
        case Kind::circular: {
            const double a = 2.0 * std::numbers::pi * frame / period;
            return {origin.x + radius * std::cos(a), origin.y + radius * std::sin(a)};
        }
        case Kind::raster:
        default: {
            const int cells = cols * rows;
            const int i = ((frame % cells) + cells) % cells;
            const int row = i / cols;
            const int col_raw = i % cols;
            const int col = (row % 2 == 0) ? col_raw : cols - 1 - col_raw;
            const double fx = cols > 1 ? static_cast<double>(col) / (cols - 1) : 0.5;
            const double fy = rows > 1 ? static_cast<double>(row) / (rows - 1) : 0.5;
            return {x0 + (x1 - x0) * fx, y0 + (y1 - y0) * fy};
        }
    }
}

BeamPath BeamPath::parse(std::string_view spec) {
    const std::size_t colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string_view::npos) {
        std::string_view rest = spec.substr(colon + 1);
        while (!rest.empty()) {
            const std::size_t comma = rest.find(',');
            const std::string_view tok = rest.substr(0, comma);
            const std::optional<double> v = parse_double(tok);
            if (!v) throw ValidationError("malformed path parameter '" + std::string(tok) + "'");
            args.push_back(*v);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }
    BeamPath p;
    auto want = [&](std::size_t n) {
        if (args.size() != n)
            throw ValidationError("path '" + std::string(kind) + "' needs " + std::to_string(n) +
                                  " parameters, got " + std::to_string(args.size()));
    };
    if (kind == "fixed") {
        want(2);
        p.kind = Kind::fixed;
        p.origin = {args[0], args[1]};
    } else if (kind == "linear") {
        want(4);
        p.kind = Kind::linear;
        p.origin = {args[0], args[1]};
        p.dx = args[2];
        p.dy = args[3];
    } else if (kind == "circular") {
        want(4);
        p.kind = Kind::circular;
        p.origin = {args[0], args[1]};
        p.radius = args[2];
        p.period = args[3];
        if (p.period <= 0) throw ValidationError("circular path period must be positive");
    } else if (kind == "raster") {
        want(6);
        p.kind = Kind::raster;
        p.x0 = args[0];
        p.y0 = args[1];
        p.x1 = args[2];
        p.y1 = args[3];
        p.cols = static_cast<int>(args[4]);
        p.rows = static_cast<int>(args[5]);
        if (p.cols < 1 || p.rows < 1) throw ValidationError("raster grid must be at least 1x1");
    } else {
        throw ValidationError("unknown path kind '" + std::string(kind) +
                              "' (fixed, linear, circular, raster)");
    }
    return p;
}

std::string BeamPath::to_spec() const {
    switch (kind) {
        case Kind::fixed:
            return "fixed:" + format_double(origin.x) + "," + format_double(origin.y);
        case Kind::linear:
            return "linear:" + format_double(origin.x) + "," + format_double(origin.y) + "," +
                   format_double(dx) + "," + format_double(dy);
        case Kind::circular:
            return "circular:" + format_double(origin.x) + "," + format_double(origin.y) + "," +
                   format_double(radius) + "," + format_double(period);
        case Kind::raster:
        default:
            return "raster:" + format_double(x0) + "," + format_double(y0) + "," +
                   format_double(x1) + "," + format_double(y1) + "," + std::to_string(cols) + "," +
                   std::to_string(rows);
    }
}

void SyntheticSceneConfig::validate() const {
    if (width <= 0 || height <= 0)
        throw ValidationError("synthetic frame dimensions must be positive");
    if (video_id.empty()) throw ValidationError("synthetic video id must not be empty");
    if (beam_radius <= 0.0) throw ValidationError("beam radius must be positive");
    if (2.0 * beam_radius >= std::min(width, height))
        throw ValidationError("beam radius too large for the frame");
    require_ratio(detection_probability, "detection_probability");
    require_ratio(corrupt_fraction, "corrupt_fraction");
    require_ratio(true_confidence.mean, "true_confidence mean");
    require_ratio(spurious_confidence.mean, "spurious_confidence mean");
    require_ratio(corrupted_confidence.mean, "corrupted_confidence mean");
    if (true_confidence.spread < 0 || spurious_confidence.spread < 0 ||
        corrupted_confidence.spread < 0)
        throw ValidationError("confidence spread must be non-negative");
    if (centroid_jitter < 0) throw ValidationError("centroid_jitter must be non-negative");
    if (spurious_rate < 0) throw ValidationError("spurious_rate must be non-negative");
}

SyntheticSceneConfig parse_scene_config(std::string_view text, std::string_view source_name) {
    SyntheticSceneConfig cfg;
    const std::string source{source_name};
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start
                                                                                : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.remove_suffix(1);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t'))
            line.remove_prefix(1);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(source, line_no, "expected key=value");
        auto trim = [](std::string_view s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
            return s;
        };
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        auto num = [&]() {
            const std::optional<double> v = parse_double(value);
            if (!v) throw ParseError(source, line_no, "malformed number '" + value + "'");
            return *v;
        };
        auto conf_pair = [&]() {
            const std::size_t comma = value.find(',');
            if (comma == std::string::npos)
                throw ParseError(source, line_no, "expected mean,spread");
            const std::optional<double> m = parse_double(std::string_view(value).substr(0, comma));
            const std::optional<double> s = parse_double(std::string_view(value).substr(comma + 1));
            if (!m || !s) throw ParseError(source, line_no, "malformed mean,spread");
            return ConfidenceModel{*m, *s};
        };
        try {
            if (key == "video_id") cfg.video_id = value;
            else if (key == "width") cfg.width = static_cast<int>(num());
            else if (key == "height") cfg.height = static_cast<int>(num());
            else if (key == "split") {
                const std::optional<io::Split> sp = io::split_from_string(value);
                if (!sp)
                    throw ParseError(source, line_no,
                                     "unknown split '" + value + "' (train, val, test)");
                cfg.split = *sp;
            } else if (key == "surgery") {
                const std::optional<io::SurgeryType> s = io::surgery_from_string(value);
                if (!s)
                    throw ParseError(source, line_no,
                                     "unknown surgery type '" + value +
                                         "' (TORS, non_TORS, unknown)");
                cfg.surgery = *s;
            } else if (key == "beam_radius") cfg.beam_radius = num();
            else if (key == "path") cfg.path = BeamPath::parse(value);
            else if (key == "detection_probability") cfg.detection_probability = num();
            else if (key == "centroid_jitter") cfg.centroid_jitter = num();
            else if (key == "true_confidence") cfg.true_confidence = conf_pair();
            else if (key == "spurious_rate") cfg.spurious_rate = num();
            else if (key == "spurious_confidence") cfg.spurious_confidence = conf_pair();
            else if (key == "corrupt_fraction") cfg.corrupt_fraction = num();
            else if (key == "corrupted_confidence") cfg.corrupted_confidence = conf_pair();
            else if (key == "scene_objects") cfg.scene_objects = num() != 0.0;
            else if (key == "seed") {
                const std::optional<unsigned long long> s = parse_u64(value);
                if (!s) throw ParseError(source, line_no, "malformed seed");
                cfg.seed = *s;
            } else throw ParseError(source, line_no, "unknown key '" + key + "'");
        } catch (const ParseError&) {
            throw;
        } catch (const ValidationError& e) {
            throw ParseError(source, line_no, e.what());
        }
    }
    cfg.validate();
    return cfg;
}

SyntheticSceneConfig load_scene_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("scene config not readable: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scene_config(text, path.string());
}

io::FramePrediction synthetic_frame_prediction(const SyntheticSceneConfig& cfg, int frame,
                                               bool corrupted) {
    FrameRng rng = frame_rng(cfg.seed, static_cast<std::uint64_t>(frame));
    io::FramePrediction out;
    out.id = {cfg.video_id, frame};
    out.width = cfg.width;
    out.height = cfg.height;

    const bool present = rng.unit() <= cfg.detection_probability;
    if (present) {
        geo::Point center = cfg.path.at(frame);
        if (cfg.centroid_jitter > 0.0) {
            center.x += rng.normal(0.0, cfg.centroid_jitter);
            center.y += rng.normal(0.0, cfg.centroid_jitter);
        }
        center = clamp_center(center, cfg.beam_radius, cfg.width, cfg.height);
        const ConfidenceModel& model =
            corrupted ? cfg.corrupted_confidence : cfg.true_confidence;
        const double conf = rng.clipped_normal(model.mean, model.spread);
        out.instances.push_back(io::instance_from_pixels(
            io::ClassId::aiming_beam, regular_polygon(center, cfg.beam_radius, kBeamVertices),
            cfg.width, cfg.height, conf));
    }

    const int spurious = rng.poisson(cfg.spurious_rate);
    for (int k = 0; k < spurious; ++k) {
        const double margin = 1.5 * cfg.beam_radius + 1.0;
        const geo::Point c{margin + rng.unit() * (cfg.width - 2.0 * margin),
                           margin + rng.unit() * (cfg.height - 2.0 * margin)};
        const double r = cfg.beam_radius * (0.5 + rng.unit());
        const double conf =
            rng.clipped_normal(cfg.spurious_confidence.mean, cfg.spurious_confidence.spread);
        out.instances.push_back(io::instance_from_pixels(
            io::ClassId::aiming_beam, regular_polygon(c, r, kBeamVertices), cfg.width, cfg.height,
            conf));
    }

    if (cfg.scene_objects)
        for (io::PolygonInstance& inst : scene_object_instances(cfg, /*with_confidence=*/true))
            out.instances.push_back(std::move(inst));
    return out;
}

SyntheticDataset generate_synthetic_dataset(const SyntheticSceneConfig& cfg, int n_frames) {
    cfg.validate();
    if (n_frames < 0) throw ValidationError("frame count must be non-negative");

    SyntheticDataset ds;
    ds.corrupted_frames = pick_corrupted(cfg, n_frames);
    const std::set<int> corrupted(ds.corrupted_frames.begin(), ds.corrupted_frames.end());

    ds.manifest.split = cfg.split;
    ds.manifest.notes.push_back("synthetic scene, seed " + std::to_string(cfg.seed));
    for (int i = 0; i < n_frames; ++i) {
        io::FrameRecord r;
        r.id = {cfg.video_id, i};
        r.width = cfg.width;
        r.height = cfg.height;
        r.surgery = cfg.surgery;
        const geo::Point center =
            clamp_center(cfg.path.at(i), cfg.beam_radius, cfg.width, cfg.height);
        const geo::Polygon beam = regular_polygon(center, cfg.beam_radius, kBeamVertices);
        if (cfg.split == io::Split::test) r.beam_point = geo::polygon_centroid(beam);
        r.labels.push_back(io::instance_from_pixels(io::ClassId::aiming_beam, beam, cfg.width,
                                                    cfg.height));
        if (cfg.scene_objects)
            for (io::PolygonInstance& inst : scene_object_instances(cfg, /*with_confidence=*/false))
                r.labels.push_back(std::move(inst));
        ds.manifest.records.push_back(std::move(r));
        ds.predictions.push_back(synthetic_frame_prediction(cfg, i, corrupted.contains(i)));
    }
    return ds;
}

void write_synthetic_dataset(SyntheticDataset& ds, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir / "labels", ec);
    if (ec) throw IoError("cannot create output directory: " + (out_dir / "labels").string());

    for (io::FrameRecord& r : ds.manifest.records) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%06d.txt", r.id.video.c_str(), r.id.index);
        const fs::path label = fs::absolute(out_dir / "labels" / name).lexically_normal();
        io::write_label_file(label, r.labels);
        r.label_path = label;
    }
    io::write_manifest(ds.manifest, out_dir / "manifest.txt");
    io::write_predictions(ds.predictions, out_dir / "predictions.txt");
    if (!ds.corrupted_frames.empty()) {
        std::ofstream out(out_dir / "corrupted_frames.txt", std::ios::binary);
        if (!out) throw IoError("cannot write corrupted_frames.txt");
        for (int i : ds.corrupted_frames)
            out << ds.manifest.records[i].id.video << '\t' << i << '\n';
    }
}

}  // namespace beamlab::pred
