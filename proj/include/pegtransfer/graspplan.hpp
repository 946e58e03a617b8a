#pragma once

#include <array>

#include "pegtransfer/geometry.hpp"
#include "pegtransfer/scene.hpp"

namespace pegtransfer {

struct GraspCandidate {
    Vec2 point;
    int side_index = 0;
    int candidate_index = 0;  // 0..5, order of enumeration
    double dist_to_peg = 0.0;
    double approach_yaw = 0.0;  // gripper roll, snapped to {0, 90}
};

struct ArmId {
    ArmSide side = ArmSide::Right;
    Vec2 home_position;

    /// Home positions beside the board: left arm at x < 0, right arm at x > board width.
    static ArmId left(const WorkspaceConfig& config);
    static ArmId right(const WorkspaceConfig& config);
};

/// Gripper roll perpendicular to an edge with direction `edge_dir_deg`, snapped to
/// the nearer calibrated roll (0 or 90; the jaw is symmetric under 180 degrees).
double snap_roll(double edge_dir_deg);

/// Two candidates per edge, at 1/3 and 2/3 along it; distances left at zero.
std::array<GraspCandidate, 6> enumerate_grasps(BlockPose block, double block_edge);

/// Midpoint of side `side_index` (edge from vertex i to vertex i + 1).
Vec2 side_midpoint(BlockPose block, double block_edge, int side_index);

/// Among the four candidates on the two sides nearest the arm's home, the one
/// farthest from the peg. Ties go to the lower side index, then enumeration order.
GraspCandidate plan_grasp(BlockPose block, const ArmId& arm, Vec2 peg, double block_edge);

struct PlacePose {
    Vec2 point;
    double yaw_deg = 0.0;  // wrist roll change applied while carrying the block
};

struct PlaceOptions {
    double bilateral_left_yaw = -15.0;
    double bilateral_right_yaw = 15.0;
};

PlacePose plan_place(Vec2 target_peg, const ArmId& arm, bool bilateral, const PlaceOptions& options = {});

}  // namespace pegtransfer
