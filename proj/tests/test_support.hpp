#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamlab/geometry.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("beamlab_test_" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("cannot create a temp directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Seeded generator with platform-stable output (raw mt19937_64 bits scaled
// by hand; the <random> distributions are implementation-defined).
struct TestRng {
    std::mt19937_64 gen;

    explicit TestRng(std::uint64_t seed) : gen(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
};

// Simple (star-shaped) polygon around (cx, cy): sorted random angles with
// random radii. Random reals make degenerate output measure-zero.
inline beamlab::geo::Polygon random_star_polygon(TestRng& rng, double cx, double cy, double rmin,
                                                 double rmax, int n_vertices) {
    std::vector<double> angles(n_vertices);
    for (double& a : angles) a = rng.uniform(0.0, 6.283185307179586);
    std::sort(angles.begin(), angles.end());
    std::vector<beamlab::geo::Point> vertices;
    vertices.reserve(angles.size());
    for (double a : angles) {
        const double r = rng.uniform(rmin, rmax);
        vertices.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    return beamlab::geo::Polygon(std::move(vertices));
}

// Independent even-odd point-in-polygon test (edge-crossing form), used as
// the rasterization oracle.
inline bool point_in_polygon_oracle(const std::vector<beamlab::geo::Point>& poly, double px,
                                    double py) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a.y > py) != (b.y > py) &&
            px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x)
            inside = !inside;
    }
    return inside;
}

}  // namespace testutil
