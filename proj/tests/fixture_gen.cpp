// Generates the committed 200-frame replay fixture: one raster-scan synthetic
// video with a hand-countable detection pattern, plus the frozen expected
// report the acceptance gate replays against.
//
// Drop pattern (hand-checkable):
//   - predictions.txt loses the aiming-beam instance on frames with
//     index % 14 == 7, i.e. {7, 21, ..., 189} = 14 frames, so the detection
//     rate is 186/200 = 0.93
//   - predictions_thinned.txt additionally drops the beam on the last 50
//     detected frames, so 136/200 = 0.68

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "beamlab/dataset_io.hpp"
#include "beamlab/synthetic.hpp"
#include "replay_fixture.hpp"

namespace fs = std::filesystem;
namespace io = beamlab::io;
namespace pred = beamlab::pred;

namespace {

void drop_beam(io::FramePrediction& p) {
    std::erase_if(p.instances, [](const io::PolygonInstance& inst) {
        return inst.class_id == io::ClassId::aiming_beam;
    });
}

bool has_beam(const io::FramePrediction& p) {
    for (const io::PolygonInstance& inst : p.instances)
        if (inst.class_id == io::ClassId::aiming_beam) return true;
    return false;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out_dir = argc > 1 ? argv[1] : "tests/fixtures/replay200";

    pred::SyntheticSceneConfig scene;
    scene.video_id = "scan_a";
    scene.split = io::Split::test;
    scene.surgery = io::SurgeryType::tors;
    scene.path = pred::BeamPath::parse("raster:60,60,580,420,20,10");  // 200 cells
    scene.beam_radius = 12.0;
    scene.centroid_jitter = 2.0;
    scene.detection_probability = 1.0;
    scene.seed = 20260817;

    pred::SyntheticDataset ds = pred::generate_synthetic_dataset(scene, 200);
    for (io::FramePrediction& p : ds.predictions)
        if (p.id.index % 14 == 7) drop_beam(p);

    std::vector<io::FramePrediction> thinned = ds.predictions;
    int kept = 0;
    for (io::FramePrediction& p : thinned)
        if (has_beam(p) && ++kept > 136) drop_beam(p);

    pred::write_synthetic_dataset(ds, out_dir);
    io::write_predictions(thinned, out_dir / "predictions_thinned.txt");

    // Freeze the report from the files as the acceptance gate will read them.
    const io::DatasetManifest manifest = io::load_manifest(out_dir / "manifest.txt");
    const std::vector<io::FramePrediction> predictions =
        io::load_predictions(out_dir / "predictions.txt");
    const std::vector<io::FramePrediction> thinned_loaded =
        io::load_predictions(out_dir / "predictions_thinned.txt");
    write_text(out_dir / "expected_report.txt",
               testutil::replay_expected_report(manifest, predictions, thinned_loaded));

    write_text(out_dir / "NOTES.txt",
               "replay200: one raster-scan video (scan_a, 20x10 grid, 200 frames,\n"
               "every frame annotated with a beam point in manifest.txt).\n"
               "\n"
               "predictions.txt drops the aiming-beam instance on frames with\n"
               "index % 14 == 7 (14 frames: 7, 21, ..., 189), so detected =\n"
               "200 - 14 = 186 and the detection rate is 186/200 = 0.93.\n"
               "\n"
               "predictions_thinned.txt additionally drops the beam on the last\n"
               "50 detected frames, so detected = 136 and the rate is 0.68.\n"
               "\n"
               "expected_report.txt freezes the evaluation and coverage numbers\n"
               "for both prediction sets. Regenerate only with fixture_gen and\n"
               "review the diff.\n");

    std::cout << "wrote " << out_dir.string() << " (" << manifest.records.size() << " frames)\n";
    return 0;
}
