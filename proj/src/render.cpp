#include "pegtransfer/render.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "pegtransfer/errors.hpp"
#include "pegtransfer/random.hpp"

namespace pegtransfer {

CameraConfig CameraConfig::covering(const WorkspaceConfig& config, double pixels_per_mm, double margin_mm) {
    CameraConfig camera;
    camera.pixels_per_mm = pixels_per_mm;
    camera.origin_mm = {-margin_mm, -margin_mm};
    camera.width = static_cast<int>(std::lround((config.board_size.x + 2.0 * margin_mm) * pixels_per_mm)) + 1;
    camera.height = static_cast<int>(std::lround((config.board_size.y + 2.0 * margin_mm) * pixels_per_mm)) + 1;
    return camera;
}

void CameraConfig::validate() const {
    if (!(pixels_per_mm > 0.0)) {
        throw ConfigError("pixels_per_mm must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw ConfigError("image size must be positive");
    }
    if (!(noise_sd >= 0.0)) {
        throw ConfigError("noise_sd must be non-negative");
    }
    if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
        throw ConfigError("dropout_prob must lie in [0, 1)");
    }
    if (!(board_depth > 0.0)) {
        throw ConfigError("board_depth must be positive");
    }
}

Vec2 pixel_to_board(Vec2 pixel, const CameraConfig& camera) { return camera.origin_mm + pixel / camera.pixels_per_mm; }

DepthImage DepthImage::crop(int u0, int v0, int w, int h) const {
    const int u_begin = std::clamp(u0, 0, width);
    const int v_begin = std::clamp(v0, 0, height);
    const int u_end = std::clamp(u0 + w, u_begin, width);
    const int v_end = std::clamp(v0 + h, v_begin, height);
    DepthImage out;
    out.width = u_end - u_begin;
    out.height = v_end - v_begin;
    out.pixel_pitch = pixel_pitch;
    out.origin_mm = pixel_to_board({static_cast<double>(u_begin), static_cast<double>(v_begin)});
    out.data.reserve(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
    for (int v = v_begin; v < v_end; ++v) {
        for (int u = u_begin; u < u_end; ++u) {
            out.data.push_back(at(u, v));
        }
    }
    return out;
}

DepthImage DepthImage::crop_board(Vec2 min_mm, Vec2 max_mm) const {
    const Vec2 lo = board_to_pixel(min_mm);
    const Vec2 hi = board_to_pixel(max_mm);
    const int u0 = static_cast<int>(std::floor(lo.x));
    const int v0 = static_cast<int>(std::floor(lo.y));
    const int u1 = static_cast<int>(std::ceil(hi.x));
    const int v1 = static_cast<int>(std::ceil(hi.y));
    return crop(u0, v0, u1 - u0 + 1, v1 - v0 + 1);
}

long BinaryImage::count() const { return static_cast<long>(std::count(data.begin(), data.end(), std::uint8_t{1})); }

namespace {

struct PixelBox {
    int u0, v0, u1, v1;  // inclusive
};

PixelBox bounding_box(const CameraConfig& camera, const Polygon& poly, const std::string& what) {
    double xmin = poly[0].x, xmax = poly[0].x, ymin = poly[0].y, ymax = poly[0].y;
    for (Vec2 p : poly) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const Vec2 lo = camera.board_to_pixel({xmin, ymin});
    const Vec2 hi = camera.board_to_pixel({xmax, ymax});
    if (lo.x < -0.5 || lo.y < -0.5 || hi.x > camera.width - 0.5 || hi.y > camera.height - 0.5) {
        throw RenderError(what + " extends beyond the image bounds");
    }
    return {std::max(0, static_cast<int>(std::floor(lo.x))), std::max(0, static_cast<int>(std::floor(lo.y))),
            std::min(camera.width - 1, static_cast<int>(std::ceil(hi.x))),
            std::min(camera.height - 1, static_cast<int>(std::ceil(hi.y)))};
}

Vec2 pixel_center(const CameraConfig& camera, int u, int v) {
    return pixel_to_board({static_cast<double>(u), static_cast<double>(v)}, camera);
}

}  // namespace

DepthImage render_depth(const Scene& scene, const CameraConfig& camera, std::uint64_t seed) {
    camera.validate();
    const WorkspaceConfig& config = scene.config;
    DepthImage image;
    image.width = camera.width;
    image.height = camera.height;
    image.pixel_pitch = camera.pixel_pitch();
    image.origin_mm = camera.origin_mm;
    image.data.assign(static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height),
                      static_cast<float>(camera.board_depth));

    auto write_min = [&](int u, int v, double depth) {
        float& px = image.at(u, v);
        px = std::min(px, static_cast<float>(depth));
    };

    const double peg_depth = camera.board_depth - config.peg_height;
    for (std::size_t i = 0; i < config.peg_positions.size(); ++i) {
        const Vec2 c = config.peg_positions[i];
        const double r = config.peg_radius;
        const PixelBox box = bounding_box(camera, {{c.x - r, c.y - r}, {c.x + r, c.y + r}}, "peg " + std::to_string(i));
        for (int v = box.v0; v <= box.v1; ++v) {
            for (int u = box.u0; u <= box.u1; ++u) {
                if (distance(pixel_center(camera, u, v), c) <= r) {
                    write_min(u, v, peg_depth);
                }
            }
        }
    }

    for (const BlockState& block : scene.blocks) {
        if (std::holds_alternative<Held>(block.status)) {
            continue;
        }
        const Polygon outline = block_outline(block, config);
        const Polygon hole = block_hole(block, config);
        const PixelBox box = bounding_box(camera, outline, "block " + std::to_string(block.id));
        for (int v = box.v0; v <= box.v1; ++v) {
            for (int u = box.u0; u <= box.u1; ++u) {
                const Vec2 p = pixel_center(camera, u, v);
                if (!point_in_convex_polygon(p, outline) || point_in_convex_polygon(p, hole)) {
                    continue;
                }
                const Barycentric w = barycentric(p, outline[0], outline[1], outline[2]);
                const double top = w.wa * block.vertex_heights[0] + w.wb * block.vertex_heights[1] +
                                   w.wc * block.vertex_heights[2];
                write_min(u, v, camera.board_depth - (block.seat_height + top));
            }
        }
    }

    if (camera.noise_sd > 0.0) {
        Rng rng = make_rng(seed, "render.noise");
        boost::random::normal_distribution<float> noise(0.0f, static_cast<float>(camera.noise_sd));
        for (float& d : image.data) {
            d += noise(rng);
        }
    }
    if (camera.dropout_prob >= 1.0) {
        std::fill(image.data.begin(), image.data.end(), kDropout);
    } else if (camera.dropout_prob > 0.0) {
        // Gaps between independent Bernoulli dropouts are geometric.
        Rng rng = make_rng(seed, "render.dropout");
        std::geometric_distribution<std::size_t> gap(camera.dropout_prob);
        for (std::size_t i = gap(rng); i < image.data.size(); i += gap(rng) + 1) {
            image.data[i] = kDropout;
        }
    }
    return image;
}

BinaryImage make_block_mask(const WorkspaceConfig& config, const CameraConfig& camera, double yaw_deg) {
    const int half = static_cast<int>(std::ceil(config.block_circumradius() * camera.pixels_per_mm));
    const int size = 2 * half + 1;
    const BlockPose pose{{0.0, 0.0}, wrap_angle(yaw_deg, 120.0)};
    const Polygon outline = block_outline(pose, config.block_edge);
    const Polygon hole = block_hole(pose, config.hole_inradius(), config.hole_circumradius());
    BinaryImage mask(size, size);
    for (int v = 0; v < size; ++v) {
        for (int u = 0; u < size; ++u) {
            const Vec2 p{(u - half) / camera.pixels_per_mm, (v - half) / camera.pixels_per_mm};
            if (point_in_convex_polygon(p, outline) && !point_in_convex_polygon(p, hole)) {
                mask.at(u, v) = 1;
            }
        }
    }
    return mask;
}

MaskSet make_mask_set(std::vector<BinaryImage> masks, std::vector<double> orientations, double pitch) {
    if (masks.empty() || masks.size() != orientations.size()) {
        throw ConfigError("mask set needs one orientation per mask");
    }
    std::uint64_t h = splitmix64(masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const BinaryImage& m = masks[i];
        if (m.width != masks[0].width || m.height != masks[0].height) {
            throw ConfigError("all masks must share dimensions");
        }
        if (m.count() == 0) {
            throw ConfigError("mask " + std::to_string(i) + " is empty");
        }
        if (i > 0 && !(orientations[i] > orientations[i - 1])) {
            throw ConfigError("mask orientations must be strictly increasing");
        }
        h = splitmix64(h ^ static_cast<std::uint64_t>(m.width) ^ (static_cast<std::uint64_t>(m.height) << 20));
        for (std::size_t j = 0; j < m.data.size(); ++j) {
            if (m.data[j] != 0) {
                h = splitmix64(h + j);
            }
        }
    }
    MaskSet set;
    set.masks = std::move(masks);
    set.orientations = std::move(orientations);
    set.mask_pitch = pitch;
    set.fingerprint = h;
    return set;
}

MaskSet make_masks(const WorkspaceConfig& config, const CameraConfig& camera, int k) {
    if (k < 1) {
        throw ConfigError("mask count k must be at least 1");
    }
    config.validate();
    camera.validate();
    std::vector<BinaryImage> masks;
    std::vector<double> orientations;
    for (int i = 0; i < k; ++i) {
        const double phi = i * (120.0 / k);
        orientations.push_back(phi);
        masks.push_back(make_block_mask(config, camera, phi));
    }
    return make_mask_set(std::move(masks), std::move(orientations), camera.pixel_pitch());
}

}  // namespace pegtransfer
