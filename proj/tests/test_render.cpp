#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pegtransfer/errors.hpp"
#include "pegtransfer/render.hpp"

using namespace pegtransfer;

namespace {

CameraConfig clean_camera() {
    CameraConfig c = CameraConfig::covering(WorkspaceConfig::standard());
    c.noise_sd = 0.0;
    c.dropout_prob = 0.0;
    return c;
}

Scene empty_scene() {
    Scene s = init_episode(WorkspaceConfig::standard(), 1);
    for (BlockState& b : s.blocks) {
        b.status = Held{ArmSide::Left};
    }
    return s;
}

bool on_peg_top(const WorkspaceConfig& c, Vec2 p) {
    for (Vec2 q : c.peg_positions) {
        if (distance(p, q) <= c.peg_radius) {
            return true;
        }
    }
    return false;
}

// Closest-surface depth computed independently of the renderer.
double oracle_depth(const Scene& s, const CameraConfig& cam, Vec2 p) {
    const WorkspaceConfig& c = s.config;
    double d = cam.board_depth;
    if (on_peg_top(c, p)) {
        d = std::min(d, cam.board_depth - c.peg_height);
    }
    for (const BlockState& b : s.blocks) {
        if (std::holds_alternative<Held>(b.status)) {
            continue;
        }
        const Polygon outer = block_outline(b, c);
        if (!oracle::inside_winding(p, outer) || oracle::inside_winding(p, block_hole(b, c))) {
            continue;
        }
        // Plane through the three vertex tops.
        const Vec2 a = outer[0], e1 = outer[1] - a, e2 = outer[2] - a, q = p - a;
        const double det = e1.x * e2.y - e1.y * e2.x;
        const double s1 = (q.x * e2.y - q.y * e2.x) / det;
        const double s2 = (e1.x * q.y - e1.y * q.x) / det;
        const double h = b.vertex_heights[0] + s1 * (b.vertex_heights[1] - b.vertex_heights[0]) +
                         s2 * (b.vertex_heights[2] - b.vertex_heights[0]);
        d = std::min(d, cam.board_depth - (b.seat_height + h));
    }
    return d;
}

}  // namespace

TEST_CASE("camera covering the board") {
    const CameraConfig c = CameraConfig::covering(WorkspaceConfig::standard());
    CHECK(c.width == 851);
    CHECK(c.height == 691);
    CHECK(c.pixel_pitch() == doctest::Approx(0.2));
    CameraConfig bad = c;
    bad.dropout_prob = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.pixels_per_mm = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.noise_sd = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("pixel_to_board is the exact affine inverse") {
    const CameraConfig c = CameraConfig::covering(WorkspaceConfig::standard());
    const Vec2 corner = pixel_to_board({0.0, 0.0}, c);
    CHECK(corner == c.origin_mm);
    const Vec2 centre = pixel_to_board({(c.width - 1) / 2.0, (c.height - 1) / 2.0}, c);
    CHECK(centre.x == doctest::Approx(80.0));
    CHECK(centre.y == doctest::Approx(64.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 850.0);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 px{u(rng), u(rng)};
        const Vec2 back = c.board_to_pixel(pixel_to_board(px, c));
        CHECK(distance(back, px) < 1e-9);
    }
}

TEST_CASE("empty noiseless board renders as a flat plane with peg tops") {
    const CameraConfig cam = clean_camera();
    const Scene s = empty_scene();
    const DepthImage img = render_depth(s, cam, 5);
    REQUIRE(img.width == cam.width);
    long pegs = 0;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const Vec2 p = img.pixel_to_board({static_cast<double>(u), static_cast<double>(v)});
            if (on_peg_top(s.config, p)) {
                ++pegs;
                CHECK(img.at(u, v) == static_cast<float>(cam.board_depth - s.config.peg_height));
            } else if (img.at(u, v) != static_cast<float>(cam.board_depth)) {
                FAIL("board pixel off the plane");
            }
        }
    }
    CHECK(pegs > 12 * 100);
}

TEST_CASE("render matches the closest-surface oracle") {
    const CameraConfig cam = clean_camera();
    Scene s = init_episode(WorkspaceConfig::standard(), 17);
    // One block raised onto a peg top and another resting on top of it.
    s.block(5).center = s.config.peg_positions[9] + Vec2{0.0, -6.5};
    s.block(5).status = StuckOn{9};
    s.block(5).seat_height = s.config.peg_height;
    s.block(4).center = s.config.peg_positions[9] + Vec2{1.0, 1.0};
    s.block(4).status = StuckOn{9};
    s.block(4).seat_height = s.config.peg_height + s.config.block_height;
    const DepthImage img = render_depth(s, cam, 0);
    long mismatches = 0;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const Vec2 p = img.pixel_to_board({static_cast<double>(u), static_cast<double>(v)});
            if (std::abs(img.at(u, v) - static_cast<float>(oracle_depth(s, cam, p))) > 1e-3f) {
                ++mismatches;
            }
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("block annulus depth and hole") {
    const CameraConfig cam = clean_camera();
    Scene s = empty_scene();
    BlockState& b = s.block(0);
    b = init_episode(s.config, 2).blocks[0];
    const DepthImage img = render_depth(s, cam, 0);
    const Polygon outer = block_outline(b, s.config);
    const Polygon hole = block_hole(b, s.config);
    int annulus = 0, in_hole = 0;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const Vec2 p = img.pixel_to_board({static_cast<double>(u), static_cast<double>(v)});
            if (!oracle::inside_winding(p, outer)) {
                continue;
            }
            if (oracle::inside_winding(p, hole)) {
                ++in_hole;
                CHECK(img.at(u, v) > cam.board_depth - s.config.peg_height - 1e-3);
            } else {
                ++annulus;
                const double top = block_top_height(b, s.config, p);
                CHECK(img.at(u, v) == doctest::Approx(cam.board_depth - (b.seat_height + top)).epsilon(1e-6));
            }
        }
    }
    CHECK(annulus > 2000);
    CHECK(in_hole > 500);
}

TEST_CASE("sensor noise has the configured spread") {
    CameraConfig cam = clean_camera();
    cam.noise_sd = 0.5;
    const Scene s = empty_scene();
    const DepthImage img = render_depth(s, cam, 8);
    double sum = 0.0, sq = 0.0;
    long n = 0;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            if (on_peg_top(s.config, img.pixel_to_board({static_cast<double>(u), static_cast<double>(v)}))) {
                continue;
            }
            const double d = img.at(u, v);
            sum += d;
            sq += d * d;
            ++n;
        }
    }
    REQUIRE(n >= 100000);
    const double mean = sum / n;
    const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
    CHECK(sd == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(mean - cam.board_depth) < 0.01);
}

TEST_CASE("dropout rate and determinism") {
    CameraConfig cam = clean_camera();
    cam.dropout_prob = 0.05;
    const Scene s = init_episode(WorkspaceConfig::standard(), 4);
    const DepthImage a = render_depth(s, cam, 31);
    const DepthImage b = render_depth(s, cam, 31);
    long drops = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool da = DepthImage::is_dropout(a.data[i]);
        CHECK(da == DepthImage::is_dropout(b.data[i]));
        if (da) {
            ++drops;
        } else {
            CHECK(std::isfinite(a.data[i]));
            CHECK(a.data[i] > 0.0f);
            CHECK(a.data[i] == b.data[i]);
        }
    }
    const double rate = static_cast<double>(drops) / static_cast<double>(a.data.size());
    // Binomial standard error is about 3e-4 here.
    CHECK(std::abs(rate - 0.05) < 0.002);
}

TEST_CASE("noiseless rendering ignores the seed") {
    const CameraConfig cam = clean_camera();
    const Scene s = init_episode(WorkspaceConfig::standard(), 6);
    CHECK(render_depth(s, cam, 1).data == render_depth(s, cam, 999).data);
}

TEST_CASE("integer-pixel shifts shift the footprint") {
    const CameraConfig cam = clean_camera();
    Scene a = empty_scene();
    a.block(0).status = OnPeg{0};
    a.block(0).center = {40.3, 50.7};
    a.block(0).yaw_deg = 17.3;
    a.block(0).vertex_heights = {15.0, 15.0, 15.0};
    Scene b = a;
    const int du = 15, dv = -10;  // pixels
    b.block(0).center = a.block(0).center + Vec2{du * cam.pixel_pitch(), dv * cam.pixel_pitch()};
    const BinaryImage fa = [&] {
        const DepthImage img = render_depth(a, cam, 0);
        BinaryImage m(img.width, img.height);
        for (int v = 0; v < img.height; ++v)
            for (int u = 0; u < img.width; ++u) m.at(u, v) = img.at(u, v) < cam.board_depth - 12.0 ? 1 : 0;
        return m;
    }();
    const DepthImage ib = render_depth(b, cam, 0);
    long mismatches = 0, count = 0;
    for (int v = 40; v < 500; ++v) {
        for (int u = 40; u < 500; ++u) {
            const bool in_b = ib.at(u + du, v + dv) < cam.board_depth - 12.0;
            count += fa.at(u, v);
            mismatches += (fa.at(u, v) != 0) != in_b ? 1 : 0;
        }
    }
    CHECK(count > 2000);
    CHECK(mismatches == 0);
}

TEST_CASE("scene outside the image is a render error") {
    CameraConfig cam = clean_camera();
    cam.width = 300;
    const Scene s = init_episode(WorkspaceConfig::standard(), 2);
    Scene moved = s;
    for (BlockState& b : moved.blocks) {
        b.status = Held{ArmSide::Right};
    }
    CHECK_THROWS_AS(render_depth(moved, cam, 0), RenderError);
}

TEST_CASE("make_masks orientations and area") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = clean_camera();
    const MaskSet set = make_masks(c, cam, 30);
    REQUIRE(set.count() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(set.orientations[i] == doctest::Approx(4.0 * static_cast<double>(i)));
        CHECK(set.masks[i].width == set.size());
    }
    const MaskSet one = make_masks(c, cam, 1);
    CHECK(one.orientations[0] == 0.0);
    const double ppm = cam.pixels_per_mm;
    const double outer_area = std::sqrt(3.0) / 4.0 * 18.0 * 18.0;
    const double hole_side = 2.0 * std::sqrt(3.0) * c.hole_inradius();
    const double hole_area = std::sqrt(3.0) / 4.0 * hole_side * hole_side;
    const double expected = (outer_area - hole_area) * ppm * ppm;
    // One pixel row along every edge of both triangles.
    const double tolerance = (3.0 * 18.0 + 3.0 * hole_side) * ppm;
    CHECK(std::abs(static_cast<double>(one.masks[0].count()) - expected) <= tolerance);
    CHECK_THROWS_AS(make_masks(c, cam, 0), ConfigError);
}

TEST_CASE("masks repeat with period 120 degrees") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = clean_camera();
    for (double phi : {0.0, 7.5, 44.0, 101.0}) {
        CHECK(make_block_mask(c, cam, phi) == make_block_mask(c, cam, phi + 120.0));
    }
    // The true triangle agrees with its 120-degree rotation up to boundary pixels.
    const BinaryImage m = make_block_mask(c, cam, 10.0);
    const int h = m.width / 2;
    long agree = 0, total = 0;
    for (int v = 0; v < m.height; ++v) {
        for (int u = 0; u < m.width; ++u) {
            if (!m.at(u, v)) continue;
            ++total;
            const Vec2 r = rotate({static_cast<double>(u - h), static_cast<double>(v - h)}, 120.0);
            const int ru = static_cast<int>(std::lround(r.x)) + h, rv = static_cast<int>(std::lround(r.y)) + h;
            agree += (ru >= 0 && rv >= 0 && ru < m.width && rv < m.height && m.at(ru, rv)) ? 1 : 0;
        }
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) > 0.9);
}

TEST_CASE("mask set validation") {
    BinaryImage a(3, 3), b(3, 3), c(4, 4);
    a.at(1, 1) = 1;
    b.at(0, 0) = 1;
    c.at(0, 0) = 1;
    CHECK_NOTHROW(make_mask_set({a, b}, {0.0, 10.0}, 0.2));
    CHECK_THROWS_AS(make_mask_set({a, b}, {10.0, 0.0}, 0.2), ConfigError);
    CHECK_THROWS_AS(make_mask_set({a, c}, {0.0, 10.0}, 0.2), ConfigError);
    CHECK_THROWS_AS(make_mask_set({a, BinaryImage(3, 3)}, {0.0, 10.0}, 0.2), ConfigError);
    CHECK(make_mask_set({a}, {0.0}, 0.2).fingerprint != make_mask_set({b}, {0.0}, 0.2).fingerprint);
}
