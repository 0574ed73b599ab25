#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "beamlab/errors.hpp"

namespace beamlab::geo {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

// Simple closed polygon in continuous image coordinates (sub-pixel allowed;
// vertices are not quantized, only rasterization is). The last vertex closes
// back to the first. Construction rejects fewer than three vertices,
// non-finite coordinates and zero signed area.
class Polygon {
public:
    explicit Polygon(std::vector<Point> vertices);

    const std::vector<Point>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }

    bool operator==(const Polygon&) const = default;

private:
    std::vector<Point> vertices_;
};

// Row-major bit grid; bit (x, y) covers the unit pixel whose center is
// (x + 0.5, y + 0.5). Bits are packed 64 per word, trailing bits stay zero.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    bool get(int x, int y) const;
    void set(int x, int y);
    // Sets [x0, x1) within row y; clamps to the mask bounds.
    void set_row_range(int y, int x0, int x1);

    std::size_t popcount() const;
    BinaryMask& operator|=(const BinaryMask& other);

    bool operator==(const BinaryMask&) const = default;

    static std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);
    static std::size_t union_count(const BinaryMask& a, const BinaryMask& b);
    // popcount of (a & ~b); used for coverage deficits.
    static std::size_t difference_count(const BinaryMask& a, const BinaryMask& b);

    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> words_;
};

double signed_area(const Polygon& p);
double polygon_area(const Polygon& p);

// Area-weighted centroid (the shoelace centroid, not the vertex mean).
Point polygon_centroid(const Polygon& p);

// Radius of the circle with the same area: sqrt(area / pi).
double equivalent_radius(const Polygon& p);

// Pixel-center-inside test (even-odd rule) on a width x height grid.
BinaryMask rasterize(const Polygon& p, int width, int height);

// Raster IoU on a resolution x resolution sample grid stretched over the
// joint bounding box of both polygons. Quantization error is on the order of
// one sample cell along the boundary, so results carry a ~1/resolution error
// bound; identical polygons rasterize identically and return exactly 1.0.
double polygon_iou(const Polygon& a, const Polygon& b, int resolution);

// Bitwise OR of same-sized masks. Rejects an empty list or mixed dimensions.
BinaryMask mask_union(std::span<const BinaryMask> masks);

// Sets every pixel whose center lies within radius of center.
void fill_disk(BinaryMask& mask, Point center, double radius);

}  // namespace beamlab::geo
