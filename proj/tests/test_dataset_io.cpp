#include <string>
#include <vector>

#include "doctest.h"

#include "beamlab/dataset_io.hpp"
#include "test_support.hpp"

using beamlab::IoError;
using beamlab::ParseError;
using beamlab::ValidationError;
namespace geo = beamlab::geo;
namespace io = beamlab::io;
using testutil::TempDir;
using testutil::TestRng;

namespace {

io::FrameRecord make_record(std::string video, int index, int width = 640, int height = 480) {
    io::FrameRecord r;
    r.id = {std::move(video), index};
    r.width = width;
    r.height = height;
    return r;
}

std::vector<geo::Point> norm_square(double x0, double y0, double side) {
    return {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}};
}

io::FramePrediction make_prediction(std::string video, int index, double confidence) {
    io::FramePrediction p;
    p.id = {std::move(video), index};
    p.width = 640;
    p.height = 480;
    p.instances.push_back(io::instance_from_normalized(
        io::ClassId::aiming_beam, norm_square(0.2, 0.2, 0.1), 640, 480, confidence));
    return p;
}

}  // namespace

TEST_SUITE("dataset_io") {

TEST_CASE("class registry round trips ids and names") {
    for (int id = 0; id < io::kNumClasses; ++id) {
        const auto c = io::class_from_id(id);
        REQUIRE(c.has_value());
        CHECK(static_cast<int>(*c) == id);
        CHECK(io::class_from_name(io::class_name(*c)) == *c);
    }
    CHECK(io::class_name(io::ClassId::aiming_beam) == "aiming_beam");
    CHECK(io::class_name(io::ClassId::shaft) == "shaft");
    CHECK_FALSE(io::class_from_id(5).has_value());
    CHECK_FALSE(io::class_from_id(-1).has_value());
    CHECK_FALSE(io::class_from_name("laser").has_value());
}

TEST_CASE("label line parses into pixel space") {
    const auto instances =
        io::parse_label_file("0 0.0 0.0 1.0 0.0 1.0 1.0 0.0 1.0\n", 100, 100);
    REQUIRE(instances.size() == 1);
    CHECK(instances[0].class_id == io::ClassId::aiming_beam);
    CHECK_FALSE(instances[0].confidence.has_value());
    CHECK(geo::polygon_area(instances[0].polygon) == doctest::Approx(10000.0));
    const geo::Point c = geo::polygon_centroid(instances[0].polygon);
    CHECK(c.x == doctest::Approx(50.0));
    CHECK(c.y == doctest::Approx(50.0));
}

TEST_CASE("empty label file yields no instances") {
    CHECK(io::parse_label_file("", 640, 480).empty());
    CHECK(io::parse_label_file("\n  \n\n", 640, 480).empty());
}

TEST_CASE("label file rejections carry the offending line") {
    // Unknown class id.
    CHECK_THROWS_WITH_AS(io::parse_label_file("7 0.1 0.1 0.2 0.1 0.2 0.2\n", 640, 480, "bad.txt"),
                         doctest::Contains("unknown class id 7"), ParseError);
    // Fewer than three vertices.
    CHECK_THROWS_AS(io::parse_label_file("0 0.1 0.1 0.2 0.2\n", 640, 480), ParseError);
    // Odd coordinate count.
    CHECK_THROWS_AS(io::parse_label_file("0 0.1 0.1 0.2 0.1 0.2\n", 640, 480), ParseError);
    // Coordinate outside [0,1].
    CHECK_THROWS_AS(io::parse_label_file("0 0.1 0.1 1.2 0.1 0.5 0.5\n", 640, 480), ParseError);
    CHECK_THROWS_AS(io::parse_label_file("0 0.1 0.1 -0.1 0.1 0.5 0.5\n", 640, 480), ParseError);
    // Malformed number.
    CHECK_THROWS_AS(io::parse_label_file("0 0.1 0.1 zero 0.1 0.5 0.5\n", 640, 480), ParseError);
    // Degenerate (collinear) polygon.
    CHECK_THROWS_AS(io::parse_label_file("0 0.1 0.1 0.2 0.2 0.3 0.3\n", 640, 480), ParseError);
    // Line number is reported.
    try {
        io::parse_label_file("0 0.0 0.0 1.0 0.0 1.0 1.0\n9 0.1 0.1 0.2 0.1 0.2 0.2\n", 640, 480,
                             "frames/clip_000004.txt");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(doctest::Contains("clip_000004.txt:2:").checkWith(e.what()));
    }
}

TEST_CASE("label format and parse are inverse") {
    TestRng rng(0x10a8e1);
    std::vector<io::PolygonInstance> instances;
    for (int i = 0; i < 12; ++i) {
        std::vector<geo::Point> norm;
        const int n = rng.uniform_int(3, 9);
        const geo::Polygon star = testutil::random_star_polygon(
            rng, rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), 0.05, 0.25, n);
        for (const geo::Point& p : star.vertices()) norm.push_back(p);
        instances.push_back(io::instance_from_normalized(
            *io::class_from_id(rng.uniform_int(0, 4)), std::move(norm), 640, 480));
    }
    const std::string text = io::format_label_file(instances);
    const auto parsed = io::parse_label_file(text, 640, 480);
    REQUIRE(parsed.size() == instances.size());
    for (size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].class_id == instances[i].class_id);
        REQUIRE(parsed[i].normalized.size() == instances[i].normalized.size());
        for (size_t k = 0; k < parsed[i].normalized.size(); ++k) {
            // Shortest round-trip formatting makes re-parsing exact.
            CHECK(parsed[i].normalized[k].x == instances[i].normalized[k].x);
            CHECK(parsed[i].normalized[k].y == instances[i].normalized[k].y);
        }
    }
    CHECK(io::format_label_file(parsed) == text);
}

TEST_CASE("instance constructors validate normalized range") {
    CHECK_THROWS_AS(io::instance_from_normalized(io::ClassId::probe, norm_square(0.95, 0.2, 0.1),
                                                 640, 480),
                    ValidationError);
    CHECK_THROWS_AS(io::instance_from_normalized(io::ClassId::probe, {{0.1, 0.1}, {0.2, 0.2}}, 640,
                                                 480),
                    ValidationError);
    const auto inst = io::instance_from_pixels(
        io::ClassId::fiber, geo::Polygon({{64, 48}, {128, 48}, {128, 96}}), 640, 480);
    REQUIRE(inst.normalized.size() == 3);
    CHECK(inst.normalized[0].x == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(inst.normalized[0].y == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(io::instance_from_pixels(io::ClassId::fiber,
                                             geo::Polygon({{-5, 0}, {10, 0}, {10, 10}}), 640, 480),
                    ValidationError);
}

TEST_CASE("manifest round trip is byte lossless") {
    TempDir tmp;
    io::DatasetManifest m;
    m.split = io::Split::val;
    m.notes = {"curated subset", "second pass"};

    io::FrameRecord a = make_record("clip_a", 0);
    a.surgery = io::SurgeryType::tors;
    a.label_path = tmp.file("clip_a_000000.txt");
    testutil::write_file(a.label_path, "0 0.25 0.25 0.5 0.25 0.5 0.5 0.25 0.5\n");
    io::FrameRecord b = make_record("clip_a", 1);
    b.surgery = io::SurgeryType::tors;
    io::FrameRecord c = make_record("clip_b", 4, 1280, 720);
    c.surgery = io::SurgeryType::non_tors;
    m.records = {a, b, c};

    const auto path = tmp.file("manifest.txt");
    io::write_manifest(m, path);
    const io::DatasetManifest loaded = io::load_manifest(path);
    CHECK(loaded.split == io::Split::val);
    CHECK(loaded.notes == m.notes);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.records[0].id == io::FrameId{"clip_a", 0});
    CHECK(loaded.records[0].labels.size() == 1);
    CHECK(loaded.records[0].surgery == io::SurgeryType::tors);
    CHECK(loaded.records[2].width == 1280);

    const auto second = tmp.file("manifest2.txt");
    io::write_manifest(loaded, second);
    CHECK(testutil::read_file(second) == testutil::read_file(path));
}

TEST_CASE("manifest carries beam points only on test records") {
    TempDir tmp;
    io::DatasetManifest m;
    m.split = io::Split::test;
    io::FrameRecord r = make_record("clip_t", 0);
    r.beam_point = geo::Point{320.5, 200.25};
    m.records = {r};
    const auto path = tmp.file("test_manifest.txt");
    io::write_manifest(m, path);
    const auto loaded = io::load_manifest(path);
    REQUIRE(loaded.records[0].beam_point.has_value());
    CHECK(loaded.records[0].beam_point->x == 320.5);
    CHECK(loaded.records[0].beam_point->y == 200.25);

    m.split = io::Split::train;
    CHECK_THROWS_AS(io::write_manifest(m, tmp.file("bad.txt")), ValidationError);
}

TEST_CASE("manifest load failures") {
    TempDir tmp;
    CHECK_THROWS_AS(io::load_manifest(tmp.file("absent.txt")), IoError);

    // Duplicate frame id.
    io::DatasetManifest dup;
    dup.records = {make_record("clip_a", 3), make_record("clip_a", 3)};
    const auto dup_path = tmp.file("dup.txt");
    CHECK_THROWS_WITH_AS(io::write_manifest(dup, dup_path), doctest::Contains("duplicate"),
                         ValidationError);

    // Dangling label reference.
    io::DatasetManifest dangling;
    io::FrameRecord r = make_record("clip_a", 0);
    r.label_path = tmp.path() / "missing_label.txt";
    dangling.records = {r};
    const auto path = tmp.file("dangling.txt");
    {
        io::DatasetManifest loose = dangling;
        loose.records[0].label_path.clear();
        io::write_manifest(loose, path);
    }
    std::string text = testutil::read_file(path);
    const std::string needle = "\t-\t-";
    const auto pos = text.rfind(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\t-\tmissing_label.txt");
    testutil::write_file(path, text);
    CHECK_THROWS_AS(io::load_manifest(path), IoError);

    // Bad header.
    testutil::write_file(path, "beamlab_manifest v9\nsplit train\n");
    CHECK_THROWS_AS(io::load_manifest(path), ParseError);
    testutil::write_file(path, "split train\n");
    CHECK_THROWS_AS(io::load_manifest(path), ParseError);
}

TEST_CASE("train and val split pair loads with expected record counts") {
    TempDir tmp;
    io::DatasetManifest train, val;
    train.split = io::Split::train;
    val.split = io::Split::val;
    int video = 0, index = 0;
    const auto fill = [&](io::DatasetManifest& m, int count) {
        for (int i = 0; i < count; ++i) {
            if (index == 50) {
                ++video;
                index = 0;
            }
            m.records.push_back(make_record("clip_" + std::to_string(video), index++));
        }
    };
    fill(train, 1530);
    fill(val, 655);
    io::write_manifest(train, tmp.file("train.txt"));
    io::write_manifest(val, tmp.file("val.txt"));
    CHECK(io::load_manifest(tmp.file("train.txt")).records.size() == 1530);
    CHECK(io::load_manifest(tmp.file("val.txt")).records.size() == 655);
}

TEST_CASE("prediction stream round trips and indexes") {
    TempDir tmp;
    std::vector<io::FramePrediction> frames;
    frames.push_back(make_prediction("clip_a", 0, 0.91));
    frames.push_back(make_prediction("clip_a", 2, 0.42));
    frames.back().inference_ms = 28.753;
    frames.push_back(make_prediction("clip_b", 1, 0.07));
    frames[2].instances.push_back(io::instance_from_normalized(
        io::ClassId::instrument, norm_square(0.5, 0.5, 0.2), 640, 480, 0.66));

    const auto path = tmp.file("pred.txt");
    io::write_predictions(frames, path);
    const auto loaded = io::load_predictions(path);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[1].inference_ms == frames[1].inference_ms);
    CHECK(loaded[2].instances.size() == 2);
    CHECK(loaded[2].instances[1].confidence == 0.66);
    CHECK(io::format_predictions(loaded) == testutil::read_file(path));

    const io::PredictionIndex idx = index_predictions(loaded);
    REQUIRE(idx.count(io::FrameId{"clip_a", 2}) == 1);
    CHECK(idx.at(io::FrameId{"clip_a", 2})->instances[0].confidence == 0.42);
    CHECK(idx.count(io::FrameId{"clip_a", 1}) == 0);
}

TEST_CASE("prediction reader streams frame blocks") {
    TempDir tmp;
    std::vector<io::FramePrediction> frames;
    for (int i = 0; i < 5; ++i) frames.push_back(make_prediction("clip_a", i, 0.5 + 0.01 * i));
    const auto path = tmp.file("pred.txt");
    io::write_predictions(frames, path);

    io::PredictionReader reader(path);
    int seen = 0;
    while (auto frame = reader.next()) {
        CHECK(frame->id.index == seen);
        ++seen;
    }
    CHECK(seen == 5);
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("prediction stream rejects protocol violations") {
    TempDir tmp;
    const auto path = tmp.file("pred.txt");

    // Non-monotonic frame index within a video.
    std::vector<io::FramePrediction> frames;
    frames.push_back(make_prediction("clip_a", 2, 0.9));
    frames.push_back(make_prediction("clip_a", 1, 0.9));
    CHECK_THROWS_WITH_AS(io::write_predictions(frames, path), doctest::Contains("clip_a"),
                         ValidationError);
    io::write_predictions(std::vector<io::FramePrediction>{frames[0]}, path);
    std::string text = testutil::read_file(path);
    testutil::write_file(path, text + text);  // same frame twice: index stalls
    CHECK_THROWS_AS(io::load_predictions(path), ParseError);

    // Missing confidence.
    testutil::write_file(path,
                         "beamlab_predictions v1\n"
                         "frame\tclip_a\t0\t640\t480\n"
                         "inst\t0\t0.1\t0.1\t0.2\t0.1\t0.2\t0.2\n");
    CHECK_THROWS_AS(io::load_predictions(path), ParseError);

    // Confidence outside [0,1].
    testutil::write_file(path,
                         "beamlab_predictions v1\n"
                         "frame\tclip_a\t0\t640\t480\n"
                         "inst\t0\t1.5\t0.1\t0.1\t0.2\t0.1\t0.2\t0.2\n");
    CHECK_THROWS_AS(io::load_predictions(path), ParseError);

    // Instance before any frame line.
    testutil::write_file(path,
                         "beamlab_predictions v1\n"
                         "inst\t0\t0.9\t0.1\t0.1\t0.2\t0.1\t0.2\t0.2\n");
    CHECK_THROWS_AS(io::load_predictions(path), ParseError);
}

TEST_CASE("random prediction sets survive a write and load cycle") {
    TempDir tmp;
    TestRng rng(0x10a8e2);
    for (int round = 0; round < 5; ++round) {
        std::vector<io::FramePrediction> frames;
        int index = 0;
        const int n = rng.uniform_int(1, 20);
        for (int i = 0; i < n; ++i) {
            index += rng.uniform_int(1, 3);
            io::FramePrediction p;
            p.id = {"clip_r", index};
            p.width = 640;
            p.height = 480;
            if (rng.bernoulli(0.5)) p.inference_ms = rng.uniform(1.0, 80.0);
            const int k = rng.uniform_int(0, 3);
            for (int j = 0; j < k; ++j) {
                const geo::Polygon star = testutil::random_star_polygon(
                    rng, rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), 0.05, 0.2, 5);
                p.instances.push_back(io::instance_from_normalized(
                    *io::class_from_id(rng.uniform_int(0, 4)), star.vertices(), 640, 480,
                    rng.uniform(0.0, 1.0)));
            }
            frames.push_back(std::move(p));
        }
        const auto path = tmp.file("round_" + std::to_string(round) + ".txt");
        io::write_predictions(frames, path);
        const auto loaded = io::load_predictions(path);
        REQUIRE(loaded.size() == frames.size());
        for (size_t i = 0; i < frames.size(); ++i) {
            CHECK(loaded[i].id == frames[i].id);
            CHECK(loaded[i].inference_ms == frames[i].inference_ms);
            REQUIRE(loaded[i].instances.size() == frames[i].instances.size());
            for (size_t j = 0; j < frames[i].instances.size(); ++j) {
                CHECK(loaded[i].instances[j].confidence == frames[i].instances[j].confidence);
                CHECK(loaded[i].instances[j].normalized == frames[i].instances[j].normalized);
            }
        }
    }
}

}  // TEST_SUITE("dataset_io")
