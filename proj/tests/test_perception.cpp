#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pegtransfer/errors.hpp"
#include "pegtransfer/perception.hpp"

using namespace pegtransfer;

namespace {

CameraConfig camera_with(double noise, double dropout) {
    CameraConfig c = CameraConfig::covering(WorkspaceConfig::standard());
    c.noise_sd = noise;
    c.dropout_prob = dropout;
    return c;
}

double angle_gap(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 120.0);
    return std::min(d, 120.0 - d);
}

BinaryImage random_binary(int w, int h, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution bit(p);
    BinaryImage img(w, h);
    for (auto& x : img.data) x = bit(rng) ? 1 : 0;
    return img;
}

MaskSet small_masks() {
    BinaryImage a(5, 5), b(5, 5);
    for (int i = 0; i < 5; ++i) {
        a.at(i, 2) = 1;  // horizontal bar
        b.at(2, i) = 1;  // vertical bar
    }
    a.at(2, 1) = 1;
    return make_mask_set({a, b}, {0.0, 60.0}, 0.2);
}

}  // namespace

TEST_CASE("depth band threshold is inclusive and skips dropout") {
    DepthImage img;
    img.width = 5;
    img.height = 1;
    img.data = {482.0f, 485.0f, 488.0f, 488.5f, kDropout};
    const BinaryImage t = threshold_depth(img, {485.0, 3.0});
    CHECK(t.data == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
    CHECK_THROWS_AS(threshold_depth(img, {485.0, -1.0}), ConfigError);
}

TEST_CASE("bands sit at block and peg tops") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0, 0);
    CHECK(block_top_band(c, cam).depth == 485.0);
    CHECK(block_top_band(c, cam, 10.0).depth == 475.0);
    CHECK(peg_top_band(c, cam).depth == 490.0);
}

TEST_CASE("FFT correlation agrees with direct summation") {
    const MaskSet masks = small_masks();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const BinaryImage img = random_binary(37 + static_cast<int>(seed), 29, 0.3, seed);
        const std::vector<ActivationMap> fft = correlate_fft(img, masks);
        REQUIRE(fft.size() == 2);
        for (std::size_t m = 0; m < 2; ++m) {
            const ActivationMap direct = correlate_direct(img, masks.masks[m]);
            REQUIRE(direct.width == img.width);
            double worst = 0.0;
            for (std::size_t i = 0; i < direct.data.size(); ++i) {
                worst = std::max(worst, std::abs(direct.data[i] - fft[m].data[i]));
            }
            CHECK(worst < 1e-6);
            // Direct summation against the window oracle.
            for (int v = 0; v < img.height; v += 3) {
                for (int u = 0; u < img.width; u += 3) {
                    CHECK(direct.at(u, v) == oracle::window_score(img, masks.masks[m], u, v));
                }
            }
        }
    }
}

TEST_CASE("FFT correlation on a real block mask") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.5, 0.02);
    const MaskSet masks = make_masks(c, cam, 3);
    const Scene s = init_episode(c, 12);
    const DepthImage img = render_depth(s, cam, 3).crop(100, 100, 160, 140);
    const BinaryImage t = threshold_depth(img, block_top_band(c, cam));
    const std::vector<ActivationMap> fft = correlate_fft(t, masks);
    for (std::size_t m = 0; m < masks.count(); ++m) {
        const ActivationMap d = correlate_direct(t, masks.masks[m]);
        double worst = 0.0;
        for (std::size_t i = 0; i < d.data.size(); ++i) worst = std::max(worst, std::abs(d.data[i] - fft[m].data[i]));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("fft_friendly_size") {
    CHECK(fft_friendly_size(1) == 1);
    CHECK(fft_friendly_size(11) == 12);
    CHECK(fft_friendly_size(97) == 98);
    CHECK(fft_friendly_size(851 + 105) == 960);
    for (int n = 1; n < 500; ++n) {
        int m = fft_friendly_size(n);
        CHECK(m >= n);
        for (int p : {2, 3, 5, 7}) while (m % p == 0) m /= p;
        CHECK(m == 1);
    }
}

TEST_CASE("peak extraction matches the brute-force oracle") {
    const MaskSet masks = small_masks();
    for (std::uint64_t seed = 10; seed < 16; ++seed) {
        const BinaryImage img = random_binary(40, 32, 0.35, seed);
        const std::vector<oracle::Peak> expected = oracle::brute_force_detect(img, masks, 6, 0.5);
        std::vector<ActivationMap> maps = correlate_fft(img, masks);
        for (ActivationMap& m : maps) for (double& a : m.data) a = std::round(a);
        std::vector<Detection> got;
        try {
            got = extract_peaks(maps, 6, masks);
        } catch (const NotEnoughBlocks& e) {
            got = e.partial();
        }
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].u == expected[i].u);
            CHECK(got[i].v == expected[i].v);
            CHECK(got[i].orientation_index == expected[i].m);
            CHECK(got[i].score == static_cast<double>(expected[i].score));
        }
    }
}

TEST_CASE("no two detections fall inside each other's suppression disc") {
    const MaskSet masks = small_masks();
    const BinaryImage img = random_binary(60, 60, 0.4, 99);
    const std::vector<Detection> d = detect_blocks(
        [&] {
            DepthImage di;
            di.width = img.width;
            di.height = img.height;
            for (auto x : img.data) di.data.push_back(x ? 100.0f : 0.0f);
            return di;
        }(),
        8, masks, {100.0, 0.5});
    const double r2 = 0.5 * masks.size() * masks.size();
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = i + 1; j < d.size(); ++j) {
            const double du = d[i].u - d[j].u, dv = d[i].v - d[j].v;
            CHECK(du * du + dv * dv > r2);
        }
        if (i > 0) CHECK(d[i].score <= d[i - 1].score);
    }
}

TEST_CASE("empty board yields no block detections") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.5, 0.02);
    Scene s = init_episode(c, 3);
    for (BlockState& b : s.blocks) b.status = Held{ArmSide::Left};
    const MaskSet masks = make_masks(c, cam, 30);
    try {
        detect_blocks(render_depth(s, cam, 4), 6, masks, block_top_band(c, cam));
        FAIL("expected NotEnoughBlocks");
    } catch (const NotEnoughBlocks& e) {
        CHECK(e.found() == 0);
        CHECK(e.requested() == 6);
    }
}

TEST_CASE("six blocks are localised on a noisy render") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.5, 0.02);
    const MaskSet masks = make_masks(c, cam, 30);
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const Scene s = init_episode(c, seed);
        const DepthImage img = render_depth(s, cam, seed + 100);
        const std::vector<Detection> d = detect_blocks(img, 6, masks, block_top_band(c, cam));
        REQUIRE(d.size() == 6);
        for (const BlockState& b : s.blocks) {
            const Vec2 px = cam.board_to_pixel(b.center);
            const Detection* best = &d[0];
            for (const Detection& x : d) {
                if (distance(x.pixel(), px) < distance(best->pixel(), px)) best = &x;
            }
            CHECK(distance(best->pixel(), px) <= 2.0);
            CHECK(angle_gap(best->theta_deg, b.yaw_deg) <= 4.0);
            CHECK(distance(detection_to_board(*best, img), b.center) <= 0.4 + 1e-9);
        }
    }
}

TEST_CASE("detections on a crop map back to board coordinates") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.0, 0.0);
    const MaskSet masks = make_masks(c, cam, 30);
    const Scene s = init_episode(c, 41);
    const DepthImage full = render_depth(s, cam, 0);
    const Vec2 target = s.block(2).center;
    const DepthImage roi = full.crop_board(target - Vec2{14.0, 14.0}, target + Vec2{14.0, 14.0});
    const std::vector<Detection> d = detect_blocks(roi, 1, masks, block_top_band(c, cam));
    REQUIRE(d.size() == 1);
    CHECK(distance(detection_to_board(d[0], roi), target) <= 0.6);
}

TEST_CASE("peg detection finds all twelve pegs in order") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.5, 0.02);
    Scene s = init_episode(c, 5);
    for (BlockState& b : s.blocks) b.status = Held{ArmSide::Left};
    const std::vector<Vec2> pegs = detect_pegs(render_depth(s, cam, 77), c, cam);
    REQUIRE(pegs.size() == 12);
    for (int i = 0; i < 12; ++i) {
        CHECK(distance(pegs[static_cast<std::size_t>(i)], cam.board_to_pixel(c.peg_positions[static_cast<std::size_t>(i)])) <= 1.0);
    }
}

TEST_CASE("occluded pegs are reported with the partial set") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.0, 0.0);
    Scene s = init_episode(c, 5);
    for (BlockState& b : s.blocks) b.status = Held{ArmSide::Left};
    // A block resting across a peg top hides it.
    // Peg under the solid part of the top, 7.5 mm from the centre towards a vertex.
    s.block(0).status = StuckOn{11};
    s.block(0).center = c.peg_positions[11];
    s.block(0).seat_height = c.peg_height;
    const Vec2 towards = block_outline(s.block(0), c)[0] - s.block(0).center;
    s.block(0).center = c.peg_positions[11] - towards * (7.5 / norm(towards));
    try {
        detect_pegs(render_depth(s, cam, 0), c, cam);
        FAIL("expected PegsNotFound");
    } catch (const PegsNotFound& e) {
        CHECK(e.count() == 11);
        for (Vec2 p : e.found()) {
            CHECK(distance(p, cam.board_to_pixel(c.peg_positions[11])) > 10.0);
        }
    }
}

TEST_CASE("left-right row-major ordering") {
    std::vector<Vec2> pts{{30, 11}, {10, 10}, {80, 5}, {20, 30}, {70, 6}, {10, 31}};
    const std::vector<Vec2> o = order_left_right_row_major(pts, 50.0, 3.0);
    const std::vector<Vec2> expected{{10, 10}, {30, 11}, {10, 31}, {20, 30}, {70, 6}, {80, 5}};
    CHECK(o == expected);
}

TEST_CASE("detection is equivariant under integer pixel shifts") {
    const WorkspaceConfig c = WorkspaceConfig::standard();
    const CameraConfig cam = camera_with(0.0, 0.0);
    const MaskSet masks = make_masks(c, cam, 30);
    Scene a = init_episode(c, 8);
    Scene b = a;
    const Vec2 shift{7 * cam.pixel_pitch(), 4 * cam.pixel_pitch()};
    for (BlockState& blk : b.blocks) blk.center = blk.center + shift;
    const std::vector<Detection> da = detect_blocks(render_depth(a, cam, 0), 6, masks, block_top_band(c, cam));
    const std::vector<Detection> db = detect_blocks(render_depth(b, cam, 0), 6, masks, block_top_band(c, cam));
    REQUIRE(da.size() == db.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
        CHECK(db[i].u == da[i].u + 7);
        CHECK(db[i].v == da[i].v + 4);
        CHECK(db[i].orientation_index == da[i].orientation_index);
    }
}
