#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pegtransfer/geometry.hpp"

using namespace pegtransfer;

TEST_CASE("rotate and wrap") {
    const Vec2 r = rotate({1.0, 0.0}, 90.0);
    CHECK(r.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.y == doctest::Approx(1.0));
    CHECK(wrap_angle(-10.0, 120.0) == doctest::Approx(110.0));
    CHECK(wrap_angle(240.0, 120.0) == 0.0);
    CHECK(wrap_angle(119.999, 120.0) == doctest::Approx(119.999));
    const Vec2 q = rotate_about({2.0, 1.0}, {1.0, 1.0}, 180.0);
    CHECK(q.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(1.0));
}

TEST_CASE("equilateral triangle") {
    const Polygon t = equilateral_triangle({3.0, 4.0}, 2.0, 0.0);
    REQUIRE(t.size() == 3);
    CHECK(t[0].x == doctest::Approx(3.0));
    CHECK(t[0].y == doctest::Approx(6.0));
    CHECK(polygon_area(t) == doctest::Approx(3.0 * std::sqrt(3.0) / 4.0 * 4.0));
    for (int i = 0; i < 3; ++i) {
        CHECK(distance(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>((i + 1) % 3)]) ==
              doctest::Approx(2.0 * std::sqrt(3.0)));
    }
}

TEST_CASE("convex point test agrees with winding number") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0), yaw(0.0, 360.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Polygon tri = equilateral_triangle({u(rng), u(rng)}, 2.0, yaw(rng));
        for (int k = 0; k < 50; ++k) {
            const Vec2 p{u(rng) * 2.0, u(rng) * 2.0};
            CHECK(point_in_convex_polygon(p, tri) == oracle::inside_winding(p, tri));
        }
    }
    const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(point_in_convex_polygon({1.0, 0.5}, sq));
    CHECK(point_in_convex_polygon({0.0, 0.0}, sq));
    CHECK_FALSE(point_in_convex_polygon({1.0 + 1e-9, 0.5}, sq));
}

TEST_CASE("boundary distance") {
    const Polygon sq{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
    CHECK(distance_to_boundary({1.0, 1.0}, sq) == doctest::Approx(1.0));
    CHECK(distance_to_boundary({3.0, 1.0}, sq) == doctest::Approx(1.0));
    CHECK(distance_to_convex_region({1.0, 1.0}, sq) == 0.0);
    CHECK(distance_to_convex_region({3.0, 3.0}, sq) == doctest::Approx(std::sqrt(2.0)));
    const Vec2 c = closest_point_on_boundary({1.0, -5.0}, sq);
    CHECK(c.x == doctest::Approx(1.0));
    CHECK(c.y == doctest::Approx(0.0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 6.0);
    for (int k = 0; k < 500; ++k) {
        const Vec2 p{u(rng), u(rng)};
        CHECK(distance_to_boundary(p, sq) == doctest::Approx(oracle::polyline_distance(p, sq)).epsilon(1e-12));
        CHECK(distance(closest_point_on_boundary(p, sq), p) == doctest::Approx(distance_to_boundary(p, sq)));
    }
}

TEST_CASE("half-plane clipping and barycentric weights") {
    const Polygon sq{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
    const Polygon half = clip_half_plane(sq, {1.0, 0.0}, 1.0);
    CHECK(polygon_area(half) == doctest::Approx(2.0));
    CHECK(clip_half_plane(sq, {1.0, 0.0}, -1.0).empty());
    CHECK(polygon_area(clip_half_plane(sq, {1.0, 0.0}, 5.0)) == doctest::Approx(4.0));

    const Barycentric w = barycentric({1.0, 1.0}, {0, 0}, {3, 0}, {0, 3});
    CHECK(w.wa == doctest::Approx(1.0 / 3.0));
    CHECK(w.wb == doctest::Approx(1.0 / 3.0));
    CHECK(w.wc == doctest::Approx(1.0 / 3.0));
    const Barycentric v = barycentric({3.0, 0.0}, {0, 0}, {3, 0}, {0, 3});
    CHECK(v.wb == doctest::Approx(1.0));
}
