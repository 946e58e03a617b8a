#pragma once

#include <stdexcept>
#include <vector>

#include "pegtransfer/correlate.hpp"
#include "pegtransfer/render.hpp"
#include "pegtransfer/scene.hpp"

namespace pegtransfer {

/// Depth interval [depth - epsilon, depth + epsilon] in millimetres from the camera.
struct DepthBand {
    double depth = 0.0;
    double epsilon = 3.0;
    void validate() const;
};

/// Band around the nominal top of a block whose bottom sits `seat_height` above the board.
DepthBand block_top_band(const WorkspaceConfig& config, const CameraConfig& camera, double seat_height = 0.0,
                         double epsilon = 3.0);
DepthBand peg_top_band(const WorkspaceConfig& config, const CameraConfig& camera, double epsilon = 2.0);

struct Detection {
    int u = 0;
    int v = 0;
    double theta_deg = 0.0;
    double score = 0.0;
    int orientation_index = 0;

    Vec2 pixel() const { return {static_cast<double>(u), static_cast<double>(v)}; }
    bool operator==(const Detection&) const = default;
};

class NotEnoughBlocks : public std::runtime_error {
public:
    NotEnoughBlocks(int requested, std::vector<Detection> partial);
    int found() const { return static_cast<int>(partial_.size()); }
    int requested() const { return requested_; }
    const std::vector<Detection>& partial() const { return partial_; }

private:
    int requested_;
    std::vector<Detection> partial_;
};

class PegsNotFound : public std::runtime_error {
public:
    explicit PegsNotFound(std::vector<Vec2> found);
    int count() const { return static_cast<int>(found_.size()); }
    const std::vector<Vec2>& found() const { return found_; }

private:
    std::vector<Vec2> found_;
};

struct DetectOptions {
    /// A match needs at least this fraction of its mask area to be active.
    double floor_fraction = 0.5;
};

BinaryImage threshold_depth(const DepthImage& image, DepthBand band);

/// Iterative peak extraction over activation maps (one per mask orientation).
/// Each step takes the global maximum, ties broken by lowest orientation index then
/// row-major position, and zeroes every map within half the mask diagonal of it.
std::vector<Detection> extract_peaks(std::vector<ActivationMap> maps, int n, const MaskSet& masks,
                                     const DetectOptions& options = {});

/// Threshold, correlate against every mask, then extract `n` peaks.
/// Throws NotEnoughBlocks (carrying the partial result) when the best remaining
/// activation drops below the floor.
std::vector<Detection> detect_blocks(const DepthImage& image, int n, const MaskSet& masks, DepthBand band,
                                     const DetectOptions& options = {});

/// Disc template of the peg top.
MaskSet make_peg_mask(const WorkspaceConfig& config, const CameraConfig& camera);

/// The 12 peg centres in pixels, left half first, each half row-major.
std::vector<Vec2> detect_pegs(const DepthImage& image, const WorkspaceConfig& config, const CameraConfig& camera);

/// Orders pixel points left half before right half, each half row-major. Rows are
/// split where consecutive v values differ by more than `row_gap_px`.
std::vector<Vec2> order_left_right_row_major(std::vector<Vec2> points, double mid_u, double row_gap_px);

/// Board-frame centre of a detection made on `image` (which may be a crop).
Vec2 detection_to_board(const Detection& d, const DepthImage& image);

}  // namespace pegtransfer
