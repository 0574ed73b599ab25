#include "beamlab/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

namespace beamlab::geo {

namespace {

struct Bounds {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

Bounds bounds_of(const Polygon& p) {
    Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Point& v : p.vertices()) {
        b.x0 = std::min(b.x0, v.x);
        b.y0 = std::min(b.y0, v.y);
        b.x1 = std::max(b.x1, v.x);
        b.y1 = std::max(b.y1, v.y);
    }
    return b;
}

Bounds merge(const Bounds& a, const Bounds& b) {
    return {std::min(a.x0, b.x0), std::min(a.y0, b.y0),
            std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

// Even-odd crossings of the horizontal line at y. Each edge is half-open in
// [min(ay,by), max(ay,by)) so a vertex on the scan line is counted once.
void row_crossings(const std::vector<Point>& v, double y, std::vector<double>& xs) {
    xs.clear();
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = v[j];
        const Point& b = v[i];
        if (a.y == b.y) continue;
        if (y < std::min(a.y, b.y) || y >= std::max(a.y, b.y)) continue;
        xs.push_back(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
    }
    std::sort(xs.begin(), xs.end());
}

}  // namespace

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3)
        throw ValidationError("polygon needs at least 3 vertices, got " +
                              std::to_string(vertices_.size()));
    for (const Point& v : vertices_) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw ValidationError("polygon has a non-finite vertex coordinate");
    }
    if (signed_area(*this) == 0.0)
        throw ValidationError("degenerate polygon (zero signed area)");
}

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        throw ValidationError("mask dimensions must be positive");
    words_.assign((static_cast<std::size_t>(width) * height + 63) / 64, 0);
}

bool BinaryMask::get(int x, int y) const {
    const std::size_t bit = static_cast<std::size_t>(y) * width_ + x;
    return (words_[bit / 64] >> (bit % 64)) & 1u;
}

void BinaryMask::set(int x, int y) {
    const std::size_t bit = static_cast<std::size_t>(y) * width_ + x;
    words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
}

void BinaryMask::set_row_range(int y, int x0, int x1) {
    x0 = std::max(x0, 0);
    x1 = std::min(x1, width_);
    if (y < 0 || y >= height_ || x0 >= x1) return;
    const std::size_t b0 = static_cast<std::size_t>(y) * width_ + x0;
    const std::size_t b1 = static_cast<std::size_t>(y) * width_ + x1;  // exclusive
    std::size_t w0 = b0 / 64;
    const std::size_t w1 = (b1 - 1) / 64;
    const std::uint64_t first = ~std::uint64_t{0} << (b0 % 64);
    const std::uint64_t last = ~std::uint64_t{0} >> (63 - (b1 - 1) % 64);
    if (w0 == w1) {
        words_[w0] |= first & last;
        return;
    }
    words_[w0] |= first;
    for (std::size_t w = w0 + 1; w < w1; ++w) words_[w] = ~std::uint64_t{0};
    words_[w1] |= last;
}

std::size_t BinaryMask::popcount() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += std::popcount(w);
    return n;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
    if (width_ != other.width_ || height_ != other.height_)
        throw ValidationError("mask dimensions differ");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
}

std::size_t BinaryMask::intersection_count(const BinaryMask& a, const BinaryMask& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_)
        throw ValidationError("mask dimensions differ");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) n += std::popcount(a.words_[i] & b.words_[i]);
    return n;
}

std::size_t BinaryMask::union_count(const BinaryMask& a, const BinaryMask& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_)
        throw ValidationError("mask dimensions differ");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) n += std::popcount(a.words_[i] | b.words_[i]);
    return n;
}

std::size_t BinaryMask::difference_count(const BinaryMask& a, const BinaryMask& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_)
        throw ValidationError("mask dimensions differ");
    // Trailing bits of a are zero, so a & ~b cannot leak past width * height.
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) n += std::popcount(a.words_[i] & ~b.words_[i]);
    return n;
}

double signed_area(const Polygon& p) {
    const std::vector<Point>& v = p.vertices();
    const std::size_t n = v.size();
    double acc = 0.0;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        acc += v[j].x * v[i].y - v[i].x * v[j].y;
    return acc / 2.0;
}

double polygon_area(const Polygon& p) { return std::abs(signed_area(p)); }

Point polygon_centroid(const Polygon& p) {
    const std::vector<Point>& v = p.vertices();
    const std::size_t n = v.size();
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double cross = v[j].x * v[i].y - v[i].x * v[j].y;
        a += cross;
        cx += (v[j].x + v[i].x) * cross;
        cy += (v[j].y + v[i].y) * cross;
    }
    // a cannot be zero: the constructor rejects zero signed area.
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

double equivalent_radius(const Polygon& p) {
    return std::sqrt(polygon_area(p) / std::numbers::pi);
}

BinaryMask rasterize(const Polygon& p, int width, int height) {
    if (width <= 0 || height <= 0)
        throw ValidationError("rasterize: dimensions must be positive");
    BinaryMask mask(width, height);
    std::vector<double> xs;
    for (int j = 0; j < height; ++j) {
        row_crossings(p.vertices(), j + 0.5, xs);
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            // Pixel center i + 0.5 lies in [x0, x1) exactly when
            // i in [ceil(x0 - 0.5), ceil(x1 - 0.5)).
            const int i0 = static_cast<int>(std::ceil(xs[k] - 0.5));
            const int i1 = static_cast<int>(std::ceil(xs[k + 1] - 0.5));
            mask.set_row_range(j, i0, i1);
        }
    }
    return mask;
}

double polygon_iou(const Polygon& a, const Polygon& b, int resolution) {
    if (resolution <= 0)
        throw ValidationError("polygon_iou: resolution must be positive");
    const Bounds bb = merge(bounds_of(a), bounds_of(b));
    const double sx = resolution / (bb.x1 - bb.x0);
    const double sy = resolution / (bb.y1 - bb.y0);
    auto to_grid = [&](const Polygon& p) {
        std::vector<Point> v;
        v.reserve(p.size());
        for (const Point& q : p.vertices())
            v.push_back({(q.x - bb.x0) * sx, (q.y - bb.y0) * sy});
        return Polygon(std::move(v));
    };
    const BinaryMask ma = rasterize(to_grid(a), resolution, resolution);
    const BinaryMask mb = rasterize(to_grid(b), resolution, resolution);
    const std::size_t uni = BinaryMask::union_count(ma, mb);
    if (uni == 0) return 0.0;
    return static_cast<double>(BinaryMask::intersection_count(ma, mb)) / static_cast<double>(uni);
}

BinaryMask mask_union(std::span<const BinaryMask> masks) {
    if (masks.empty()) throw ValidationError("mask_union: empty mask list");
    BinaryMask out = masks[0];
    for (std::size_t i = 1; i < masks.size(); ++i) out |= masks[i];
    return out;
}

void fill_disk(BinaryMask& mask, Point center, double radius) {
    if (radius <= 0.0) return;
    const int j0 = std::max(0, static_cast<int>(std::ceil(center.y - radius - 0.5)));
    const int j1 = std::min(mask.height() - 1, static_cast<int>(std::floor(center.y + radius - 0.5)));
    for (int j = j0; j <= j1; ++j) {
        const double dy = (j + 0.5) - center.y;
        const double d2 = radius * radius - dy * dy;
        if (d2 < 0.0) continue;
        const double dx = std::sqrt(d2);
        const int i0 = static_cast<int>(std::ceil(center.x - dx - 0.5));
        const int i1 = static_cast<int>(std::floor(center.x + dx - 0.5));
        mask.set_row_range(j, i0, i1 + 1);
    }
}

}  // namespace beamlab::geo
