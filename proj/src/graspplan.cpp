#include "pegtransfer/graspplan.hpp"

#include <algorithm>
#include <cmath>

namespace pegtransfer {

namespace {
constexpr double kTieTolerance = 1e-9;
constexpr double kArmStandoff = 60.0;
}  // namespace

ArmId ArmId::left(const WorkspaceConfig& config) {
    return {ArmSide::Left, {-kArmStandoff, 0.5 * config.board_size.y}};
}

ArmId ArmId::right(const WorkspaceConfig& config) {
    return {ArmSide::Right, {config.board_size.x + kArmStandoff, 0.5 * config.board_size.y}};
}

double snap_roll(double edge_dir_deg) {
    const double perp = wrap_angle(edge_dir_deg + 90.0, 180.0);
    const double to_zero = std::min(perp, 180.0 - perp);
    const double to_ninety = std::abs(perp - 90.0);
    return to_ninety < to_zero ? 90.0 : 0.0;
}

std::array<GraspCandidate, 6> enumerate_grasps(BlockPose block, double block_edge) {
    const Polygon tri = block_outline(block, block_edge);
    std::array<GraspCandidate, 6> out{};
    for (int s = 0; s < 3; ++s) {
        const Vec2 a = tri[static_cast<std::size_t>(s)];
        const Vec2 b = tri[static_cast<std::size_t>((s + 1) % 3)];
        const Vec2 e = b - a;
        const double roll = snap_roll(rad_to_deg(std::atan2(e.y, e.x)));
        for (int t = 0; t < 2; ++t) {
            GraspCandidate& g = out[static_cast<std::size_t>(2 * s + t)];
            g.point = a + e * ((t + 1) / 3.0);
            g.side_index = s;
            g.candidate_index = 2 * s + t;
            g.approach_yaw = roll;
        }
    }
    return out;
}

Vec2 side_midpoint(BlockPose block, double block_edge, int side_index) {
    const Polygon tri = block_outline(block, block_edge);
    return (tri[static_cast<std::size_t>(side_index)] + tri[static_cast<std::size_t>((side_index + 1) % 3)]) * 0.5;
}

GraspCandidate plan_grasp(BlockPose block, const ArmId& arm, Vec2 peg, double block_edge) {
    std::array<int, 3> sides{0, 1, 2};
    std::array<double, 3> side_dist{};
    for (int s = 0; s < 3; ++s) {
        side_dist[static_cast<std::size_t>(s)] = distance(side_midpoint(block, block_edge, s), arm.home_position);
    }
    std::stable_sort(sides.begin(), sides.end(), [&](int a, int b) {
        return side_dist[static_cast<std::size_t>(a)] < side_dist[static_cast<std::size_t>(b)] - kTieTolerance;
    });
    const int excluded = sides[2];

    std::array<GraspCandidate, 6> candidates = enumerate_grasps(block, block_edge);
    const GraspCandidate* best = nullptr;
    for (GraspCandidate& g : candidates) {
        g.dist_to_peg = distance(g.point, peg);
        if (g.side_index == excluded) {
            continue;
        }
        // Enumeration order is (side, position), so strict improvement keeps the
        // declared tie-break.
        if (best == nullptr || g.dist_to_peg > best->dist_to_peg + kTieTolerance) {
            best = &g;
        }
    }
    return *best;
}

PlacePose plan_place(Vec2 target_peg, const ArmId& arm, bool bilateral, const PlaceOptions& options) {
    if (!bilateral) {
        return {target_peg, 0.0};
    }
    return {target_peg, arm.side == ArmSide::Left ? options.bilateral_left_yaw : options.bilateral_right_yaw};
}

}  // namespace pegtransfer
