#include <cmath>
#include <vector>

#include "doctest.h"

#include "beamlab/geometry.hpp"
#include "test_support.hpp"

using beamlab::ValidationError;
namespace geo = beamlab::geo;
using testutil::TestRng;

namespace {

constexpr double kPi = 3.14159265358979323846;

geo::Polygon unit_square() { return geo::Polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

geo::Polygon l_shape() {
    return geo::Polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
}

geo::Polygon translated(const geo::Polygon& p, double dx, double dy) {
    std::vector<geo::Point> v = p.vertices();
    for (geo::Point& q : v) {
        q.x += dx;
        q.y += dy;
    }
    return geo::Polygon(std::move(v));
}

geo::Polygon regular_ngon(double cx, double cy, double radius, int n) {
    std::vector<geo::Point> v;
    v.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * kPi * k / n;
        v.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
    }
    return geo::Polygon(std::move(v));
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("polygon area matches closed-form shapes") {
    CHECK(geo::polygon_area(unit_square()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(geo::polygon_area(geo::Polygon({{0, 0}, {3, 0}, {0, 3}})) ==
          doctest::Approx(4.5).epsilon(1e-12));
    CHECK(geo::polygon_area(l_shape()) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("area is orientation independent") {
    std::vector<geo::Point> v = l_shape().vertices();
    std::reverse(v.begin(), v.end());
    const geo::Polygon reversed{std::move(v)};
    CHECK(geo::polygon_area(reversed) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(geo::polygon_centroid(reversed).x == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("degenerate polygons are rejected at construction") {
    CHECK_THROWS_AS(geo::Polygon({{0, 0}, {1, 1}}), ValidationError);
    CHECK_THROWS_AS(geo::Polygon({{0, 0}, {1, 1}, {2, 2}}), ValidationError);  // collinear
    const double nan = std::nan("");
    CHECK_THROWS_AS(geo::Polygon({{0, 0}, {1, 0}, {nan, 1}}), ValidationError);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(geo::Polygon({{0, 0}, {1, 0}, {inf, 1}}), ValidationError);
}

TEST_CASE("centroid matches closed-form shapes") {
    const geo::Point sq = geo::polygon_centroid(unit_square());
    CHECK(sq.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sq.y == doctest::Approx(0.5).epsilon(1e-12));

    const geo::Point tri = geo::polygon_centroid(geo::Polygon({{0, 0}, {3, 0}, {0, 3}}));
    CHECK(tri.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tri.y == doctest::Approx(1.0).epsilon(1e-12));

    // Decomposition: 2x1 rectangle at (1, 0.5) plus 1x1 square at (0.5, 1.5).
    const geo::Point l = geo::polygon_centroid(l_shape());
    CHECK(l.x == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
    CHECK(l.y == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("centroid is area weighted, not the vertex mean") {
    // Extra collinear vertices along the bottom edge skew the vertex mean
    // but cannot move the area centroid.
    const geo::Polygon padded({{0, 0}, {0.1, 0}, {0.2, 0}, {0.3, 0}, {0.4, 0}, {1, 0},
                               {1, 1}, {0, 1}});
    const geo::Point c = geo::polygon_centroid(padded);
    CHECK(c.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("centroid translation equivariance") {
    TestRng rng(0x5eed001);
    for (int i = 0; i < 50; ++i) {
        const geo::Polygon p = testutil::random_star_polygon(
            rng, rng.uniform(10, 50), rng.uniform(10, 50), 2.0, 15.0, rng.uniform_int(3, 12));
        const double dx = rng.uniform(-100, 100);
        const double dy = rng.uniform(-100, 100);
        const geo::Point before = geo::polygon_centroid(p);
        const geo::Point after = geo::polygon_centroid(translated(p, dx, dy));
        CHECK(after.x == doctest::Approx(before.x + dx).epsilon(1e-9));
        CHECK(after.y == doctest::Approx(before.y + dy).epsilon(1e-9));
    }
}

TEST_CASE("equivalent radius") {
    CHECK(geo::equivalent_radius(unit_square()) ==
          doctest::Approx(std::sqrt(1.0 / kPi)).epsilon(1e-4));
    CHECK(geo::equivalent_radius(l_shape()) ==
          doctest::Approx(std::sqrt(3.0 / kPi)).epsilon(1e-4));

    // Regular 64-gon of circumradius 10: area = n/2 r^2 sin(2 pi / n).
    const int n = 64;
    const double analytic_area = 0.5 * n * 100.0 * std::sin(2.0 * kPi / n);
    const geo::Polygon gon = regular_ngon(20, 20, 10.0, n);
    CHECK(geo::equivalent_radius(gon) ==
          doctest::Approx(std::sqrt(analytic_area / kPi)).epsilon(1e-9));
    CHECK(geo::equivalent_radius(gon) == doctest::Approx(10.0).epsilon(0.005));
}

TEST_CASE("equivalent radius squared times pi equals the area") {
    TestRng rng(0x5eed002);
    for (int i = 0; i < 30; ++i) {
        const geo::Polygon p = testutil::random_star_polygon(
            rng, 30, 30, 1.0, 20.0, rng.uniform_int(3, 16));
        const double r = geo::equivalent_radius(p);
        CHECK(r * r * kPi == doctest::Approx(geo::polygon_area(p)).epsilon(1e-12));
    }
}

TEST_CASE("rasterize uses the pixel-center even-odd rule") {
    const geo::BinaryMask one = geo::rasterize(unit_square(), 2, 2);
    CHECK(one.popcount() == 1);
    CHECK(one.get(0, 0));

    const geo::BinaryMask four =
        geo::rasterize(geo::Polygon({{0, 0}, {2, 0}, {2, 2}, {0, 2}}), 2, 2);
    CHECK(four.popcount() == 4);

    // A 1x2 strip covers only the x = 0 pixel column.
    const geo::BinaryMask strip =
        geo::rasterize(geo::Polygon({{0, 0}, {1, 0}, {1, 2}, {0, 2}}), 2, 2);
    CHECK(strip.popcount() == 2);
    CHECK(strip.get(0, 0));
    CHECK(strip.get(0, 1));

    // Clipped to the mask bounds.
    const geo::BinaryMask clipped =
        geo::rasterize(geo::Polygon({{-10, -10}, {10, -10}, {10, 10}, {-10, 10}}), 4, 4);
    CHECK(clipped.popcount() == 16);
}

TEST_CASE("rasterization agrees with an independent inside test") {
    TestRng rng(0x5eed003);
    for (int i = 0; i < 30; ++i) {
        const geo::Polygon p = testutil::random_star_polygon(
            rng, rng.uniform(8, 24), rng.uniform(8, 24), 1.5, 10.0, rng.uniform_int(3, 12));
        const geo::BinaryMask mask = geo::rasterize(p, 32, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                CHECK(mask.get(x, y) ==
                      testutil::point_in_polygon_oracle(p.vertices(), x + 0.5, y + 0.5));
    }
}

TEST_CASE("raster pixel count converges to the polygon area") {
    // Scale a smooth shape up so boundary pixels are a vanishing fraction.
    const geo::Polygon big = regular_ngon(1024, 1024, 640.0, 64);
    const geo::BinaryMask mask = geo::rasterize(big, 2048, 2048);
    const double area = geo::polygon_area(big);
    CHECK(std::abs(static_cast<double>(mask.popcount()) - area) / area < 0.01);
}

TEST_CASE("polygon iou closed forms") {
    const geo::Polygon a = unit_square();
    CHECK(geo::polygon_iou(a, a, 512) == 1.0);

    const geo::Polygon far({{10, 10}, {11, 10}, {11, 11}, {10, 11}});
    CHECK(geo::polygon_iou(a, far, 512) == 0.0);

    // Overlap 0.5 of union 1.5.
    const geo::Polygon shifted({{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}});
    CHECK(geo::polygon_iou(a, shifted, 512) == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("polygon iou is symmetric and bounded") {
    TestRng rng(0x5eed004);
    for (int i = 0; i < 20; ++i) {
        const geo::Polygon a = testutil::random_star_polygon(
            rng, rng.uniform(10, 30), rng.uniform(10, 30), 2.0, 12.0, rng.uniform_int(3, 10));
        const geo::Polygon b = testutil::random_star_polygon(
            rng, rng.uniform(10, 30), rng.uniform(10, 30), 2.0, 12.0, rng.uniform_int(3, 10));
        const double ab = geo::polygon_iou(a, b, 256);
        CHECK(ab == geo::polygon_iou(b, a, 256));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
    CHECK_THROWS_AS(geo::polygon_iou(unit_square(), unit_square(), 0), ValidationError);
}

TEST_CASE("binary mask bit operations") {
    geo::BinaryMask m(130, 3);
    CHECK(m.width() == 130);
    CHECK(m.height() == 3);
    CHECK(m.popcount() == 0);
    m.set(129, 2);
    CHECK(m.get(129, 2));
    CHECK(m.popcount() == 1);

    geo::BinaryMask range(130, 2);
    range.set_row_range(0, 60, 70);  // crosses the first word boundary
    CHECK(range.popcount() == 10);
    CHECK_FALSE(range.get(59, 0));
    CHECK(range.get(60, 0));
    CHECK(range.get(69, 0));
    CHECK_FALSE(range.get(70, 0));

    range.set_row_range(1, -5, 1000);  // clamped to the row
    CHECK(range.popcount() == 10 + 130);
}

TEST_CASE("mask set operations") {
    geo::BinaryMask a(70, 1), b(70, 1);
    a.set(0, 0);
    a.set(65, 0);
    b.set(65, 0);
    b.set(69, 0);
    CHECK(geo::BinaryMask::intersection_count(a, b) == 1);
    CHECK(geo::BinaryMask::union_count(a, b) == 3);
    CHECK(geo::BinaryMask::difference_count(a, b) == 1);
    CHECK(geo::BinaryMask::difference_count(b, a) == 1);

    geo::BinaryMask u = a;
    u |= b;
    CHECK(u.popcount() == 3);
    geo::BinaryMask self = a;
    self |= a;
    CHECK(self == a);
}

TEST_CASE("mask union validates input") {
    const std::vector<geo::BinaryMask> none;
    CHECK_THROWS_AS(geo::mask_union(none), ValidationError);
    const std::vector<geo::BinaryMask> mixed{geo::BinaryMask(4, 4), geo::BinaryMask(5, 4)};
    CHECK_THROWS_AS(geo::mask_union(mixed), ValidationError);

    geo::BinaryMask a(8, 8), b(8, 8);
    a.set(1, 1);
    b.set(6, 6);
    const std::vector<geo::BinaryMask> both{a, b};
    CHECK(geo::mask_union(both).popcount() == 2);
}

TEST_CASE("fill disk covers exactly the pixel centers within the radius") {
    geo::BinaryMask m(21, 21);
    const geo::Point c{10.5, 10.5};
    const double radius = 3.0;
    geo::fill_disk(m, c, radius);
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) {
            const double dx = (x + 0.5) - c.x;
            const double dy = (y + 0.5) - c.y;
            const bool inside = dx * dx + dy * dy <= radius * radius;
            CHECK(m.get(x, y) == inside);
        }
    }
    CHECK(m.popcount() == 29);  // hand count of the r=3 disk on centered grid
}

}  // TEST_SUITE("geometry")
