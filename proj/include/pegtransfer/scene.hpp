#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "pegtransfer/geometry.hpp"

namespace pegtransfer {

enum class ArmSide { Left, Right };

inline constexpr int kBlockCount = 6;
inline constexpr int kPegCount = 12;
inline constexpr int kPegsPerHalf = 6;

/// Peg board layout and block dimensions. Pegs 0-5 sit on the left half and
/// 6-11 on the right half, each half in row-major order (rows by y, then x).
struct WorkspaceConfig {
    Vec2 board_size{160.0, 128.0};
    std::vector<Vec2> peg_positions;
    double peg_height = 10.0;
    double peg_radius = 1.5;
    double block_edge = 18.0;
    double block_height = 15.0;
    double hole_span_min = 5.0;
    double hole_span_max = 10.0;
    double height_jitter_sd = 0.5;

    /// Board with two mirrored 3x2 peg grids, one centred on each half.
    static WorkspaceConfig standard(double pitch_mm = 40.0);

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    double block_circumradius() const;
    double block_inradius() const;
    double hole_inradius() const { return 0.5 * hole_span_min; }
    double hole_circumradius() const { return 0.5 * hole_span_max; }

    bool is_left_peg(int peg) const { return peg >= 0 && peg < kPegsPerHalf; }
    /// Peg on the opposite half with the same row/column.
    static int mirror_peg(int peg) { return peg < kPegsPerHalf ? peg + kPegsPerHalf : peg - kPegsPerHalf; }
    bool operator==(const WorkspaceConfig&) const = default;
};

/// Two mirrored rows x cols grids with the given pitch, centred on each half.
std::vector<Vec2> mirrored_peg_grid(Vec2 board_size, double pitch_mm, int rows = 3, int cols = 2);

struct OnPeg {
    int peg;
    bool operator==(const OnPeg&) const = default;
};
struct StuckOn {
    int peg;
    bool operator==(const StuckOn&) const = default;
};
struct Fallen {
    Vec2 point;
    bool operator==(const Fallen&) const = default;
};
struct Held {
    ArmSide arm;
    bool operator==(const Held&) const = default;
};
using BlockStatus = std::variant<OnPeg, StuckOn, Fallen, Held>;

/// Peg a block is resting on (OnPeg or StuckOn), or -1.
int peg_of(const BlockStatus& status);

struct BlockPose {
    Vec2 center;
    double yaw_deg = 0.0;
};

struct BlockState {
    int id = 0;
    Vec2 center;
    double yaw_deg = 0.0;  // kept in [0, 120)
    BlockStatus status = OnPeg{0};
    std::array<double, 3> vertex_heights{15.0, 15.0, 15.0};
    double seat_height = 0.0;  // height of the block's bottom above the board

    BlockPose pose() const { return {center, yaw_deg}; }
    void set_pose(BlockPose p);
    bool operator==(const BlockState&) const = default;
};

/// Outer triangle of a block footprint (counter-clockwise).
Polygon block_outline(const BlockState& block, const WorkspaceConfig& config);
Polygon block_outline(BlockPose pose, double edge);
/// Hollow centre: triangle with inradius hole_span_min / 2, truncated at hole_span_max / 2.
Polygon block_hole(const BlockState& block, const WorkspaceConfig& config);
Polygon block_hole(BlockPose pose, double hole_inradius, double hole_circumradius);
/// Height of the solid top surface above the block bottom, interpolated over the vertices.
double block_top_height(const BlockState& block, const WorkspaceConfig& config, Vec2 p);
/// True when `p` lies on the solid part of the footprint (outline minus hole).
bool in_block_annulus(const BlockState& block, const WorkspaceConfig& config, Vec2 p);

struct Scene {
    WorkspaceConfig config;
    std::array<BlockState, kBlockCount> blocks;
    std::uint64_t rng_seed = 0;

    const BlockState& block(int id) const;
    BlockState& block(int id);
    bool operator==(const Scene&) const = default;
};

/// Six blocks dropped on the six left pegs with random yaw, clearance offset and
/// per-vertex heights. Deterministic per seed.
Scene init_episode(const WorkspaceConfig& config, std::uint64_t seed);

enum class PlaceKind { Inserted, Stuck, Fell };

struct PlaceOutcome {
    PlaceKind kind;
    Vec2 landing;  // final block centre
};

/// Settles a held block released at `drop` above `target_peg`.
PlaceOutcome resolve_place(Scene& scene, int block_id, BlockPose drop, int target_peg, std::uint64_t seed);

struct PickOutcome {
    bool lifted = false;
    /// Blocks that were resting on the lifted block and dropped into full insertion.
    std::vector<int> settled;
};

/// Lifts the block iff `grasp_point` is within `capture_radius` of its outline.
PickOutcome resolve_pick(Scene& scene, int block_id, Vec2 grasp_point, double capture_radius,
                         ArmSide arm = ArmSide::Right);

/// Convex polygon overlap by the separating axis theorem (touching counts as overlap).
bool convex_polygons_overlap(const Polygon& a, const Polygon& b);

}  // namespace pegtransfer
