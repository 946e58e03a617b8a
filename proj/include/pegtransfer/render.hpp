#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pegtransfer/geometry.hpp"
#include "pegtransfer/scene.hpp"

namespace pegtransfer {

/// Overhead orthographic depth camera. Pixel (u, v) has its centre at board
/// point origin_mm + (u, v) / pixels_per_mm; u runs along board x, v along board y.
struct CameraConfig {
    double pixels_per_mm = 5.0;
    int width = 851;
    int height = 691;
    Vec2 origin_mm{-5.0, -5.0};
    double board_depth = 500.0;  // camera-to-board distance
    double noise_sd = 0.5;
    double dropout_prob = 0.02;

    /// Camera whose image covers the board plus `margin_mm` on every side.
    static CameraConfig covering(const WorkspaceConfig& config, double pixels_per_mm = 5.0, double margin_mm = 5.0);

    void validate() const;
    double pixel_pitch() const { return 1.0 / pixels_per_mm; }
    Vec2 board_to_pixel(Vec2 board) const { return (board - origin_mm) * pixels_per_mm; }
};

/// Inverse of the render projection: pixel coordinate to board millimetres.
Vec2 pixel_to_board(Vec2 pixel, const CameraConfig& camera);

inline const float kDropout = std::numeric_limits<float>::quiet_NaN();

/// Row-major depth raster in millimetres from the camera plane; NaN marks dropout.
struct DepthImage {
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.2;  // mm per pixel
    Vec2 origin_mm;            // board point at the centre of pixel (0, 0)
    std::vector<float> data;

    float at(int u, int v) const { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    float& at(int u, int v) { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    static bool is_dropout(float d) { return d != d; }

    Vec2 pixel_to_board(Vec2 p) const { return origin_mm + p * pixel_pitch; }
    Vec2 board_to_pixel(Vec2 b) const { return (b - origin_mm) / pixel_pitch; }

    /// Sub-image [u0, u0 + w) x [v0, v0 + h), clamped to the image; keeps the board mapping.
    DepthImage crop(int u0, int v0, int w, int h) const;
    /// Sub-image covering the given board rectangle.
    DepthImage crop_board(Vec2 min_mm, Vec2 max_mm) const;
};

/// Row-major binary raster.
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

    std::uint8_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    std::uint8_t& at(int u, int v) { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    long count() const;
    bool operator==(const BinaryImage&) const = default;
};

/// Block-top templates at k orientations; every mask is square with the block
/// centre at pixel (size / 2, size / 2).
struct MaskSet {
    std::vector<BinaryImage> masks;
    std::vector<double> orientations;  // degrees in [0, 120), strictly increasing
    double mask_pitch = 0.2;
    std::uint64_t fingerprint = 0;  // content hash, used to cache transforms

    int size() const { return masks.empty() ? 0 : masks.front().width; }
    int center() const { return size() / 2; }
    std::size_t count() const { return masks.size(); }
};

DepthImage render_depth(const Scene& scene, const CameraConfig& camera, std::uint64_t seed);

/// Rasterises the nominal block annulus (outline minus hole) at one orientation.
BinaryImage make_block_mask(const WorkspaceConfig& config, const CameraConfig& camera, double yaw_deg);

/// k masks at orientations i * 120 / k degrees.
MaskSet make_masks(const WorkspaceConfig& config, const CameraConfig& camera, int k);

/// Mask set wrapped around user-supplied templates (used by tests and by peg detection).
MaskSet make_mask_set(std::vector<BinaryImage> masks, std::vector<double> orientations, double pitch);

}  // namespace pegtransfer
