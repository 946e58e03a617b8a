#include "pegtransfer/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pegtransfer/errors.hpp"
#include "pegtransfer/random.hpp"

namespace pegtransfer {

std::vector<Vec2> mirrored_peg_grid(Vec2 board_size, double pitch_mm, int rows, int cols) {
    std::vector<Vec2> pegs;
    pegs.reserve(static_cast<std::size_t>(2 * rows * cols));
    for (int half = 0; half < 2; ++half) {
        const Vec2 center{board_size.x * (half == 0 ? 0.25 : 0.75), board_size.y * 0.5};
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                pegs.push_back({center.x + (c - 0.5 * (cols - 1)) * pitch_mm,
                                center.y + (r - 0.5 * (rows - 1)) * pitch_mm});
            }
        }
    }
    return pegs;
}

WorkspaceConfig WorkspaceConfig::standard(double pitch_mm) {
    WorkspaceConfig config;
    config.peg_positions = mirrored_peg_grid(config.board_size, pitch_mm);
    return config;
}

double WorkspaceConfig::block_circumradius() const { return block_edge / std::sqrt(3.0); }
double WorkspaceConfig::block_inradius() const { return block_edge / (2.0 * std::sqrt(3.0)); }

void WorkspaceConfig::validate() const {
    if (!(board_size.x > 0.0 && board_size.y > 0.0)) {
        throw ConfigError("board size must be positive");
    }
    if (!(block_edge > 0.0 && block_height > 0.0 && peg_height > 0.0 && peg_radius > 0.0)) {
        throw ConfigError("block and peg dimensions must be positive");
    }
    if (!(height_jitter_sd >= 0.0)) {
        throw ConfigError("height_jitter_sd must be non-negative");
    }
    if (peg_positions.size() != static_cast<std::size_t>(kPegCount)) {
        throw ConfigError("expected exactly 12 pegs, got " + std::to_string(peg_positions.size()));
    }
    const double mid = 0.5 * board_size.x;
    for (int i = 0; i < kPegCount; ++i) {
        const Vec2 p = peg_positions[static_cast<std::size_t>(i)];
        if (p.x < 0.0 || p.y < 0.0 || p.x > board_size.x || p.y > board_size.y) {
            throw ConfigError("peg " + std::to_string(i) + " lies outside the board");
        }
        const bool on_left = p.x < mid;
        if (on_left != is_left_peg(i)) {
            throw ConfigError("pegs 0-5 must lie on the left half and 6-11 on the right half");
        }
    }
    for (std::size_t i = 0; i < peg_positions.size(); ++i) {
        for (std::size_t j = i + 1; j < peg_positions.size(); ++j) {
            if (distance(peg_positions[i], peg_positions[j]) < 2.0 * block_edge) {
                throw ConfigError("pegs " + std::to_string(i) + " and " + std::to_string(j) +
                                  " are closer than twice the block edge");
            }
        }
    }
    if (!(hole_span_min > 2.0 * peg_radius)) {
        throw ConfigError("hole span minimum must exceed the peg diameter");
    }
    if (hole_span_max < hole_span_min) {
        throw ConfigError("hole span maximum must not be below its minimum");
    }
    if (!(hole_inradius() < block_inradius())) {
        throw ConfigError("hole does not fit inside the block outline");
    }
}

int peg_of(const BlockStatus& status) {
    if (const auto* on = std::get_if<OnPeg>(&status)) {
        return on->peg;
    }
    if (const auto* stuck = std::get_if<StuckOn>(&status)) {
        return stuck->peg;
    }
    return -1;
}

void BlockState::set_pose(BlockPose p) {
    center = p.center;
    yaw_deg = wrap_angle(p.yaw_deg, 120.0);
}

Polygon block_outline(BlockPose pose, double edge) {
    return equilateral_triangle(pose.center, edge / std::sqrt(3.0), pose.yaw_deg);
}

Polygon block_outline(const BlockState& block, const WorkspaceConfig& config) {
    return block_outline(block.pose(), config.block_edge);
}

Polygon block_hole(BlockPose pose, double hole_inradius, double hole_circumradius) {
    Polygon hole = equilateral_triangle({0.0, 0.0}, 2.0 * hole_inradius, pose.yaw_deg);
    if (hole_circumradius < 2.0 * hole_inradius) {
        for (int i = 0; i < 3; ++i) {
            hole = clip_half_plane(hole, unit_at(pose.yaw_deg + 90.0 + 120.0 * i), hole_circumradius);
        }
    }
    for (Vec2& v : hole) {
        v += pose.center;
    }
    return hole;
}

Polygon block_hole(const BlockState& block, const WorkspaceConfig& config) {
    return block_hole(block.pose(), config.hole_inradius(), config.hole_circumradius());
}

double block_top_height(const BlockState& block, const WorkspaceConfig& config, Vec2 p) {
    const Polygon tri = block_outline(block, config);
    const Barycentric w = barycentric(p, tri[0], tri[1], tri[2]);
    return w.wa * block.vertex_heights[0] + w.wb * block.vertex_heights[1] + w.wc * block.vertex_heights[2];
}

bool in_block_annulus(const BlockState& block, const WorkspaceConfig& config, Vec2 p) {
    return point_in_convex_polygon(p, block_outline(block, config)) &&
           !point_in_convex_polygon(p, block_hole(block, config));
}

const BlockState& Scene::block(int id) const {
    if (id < 0 || id >= kBlockCount) {
        throw UnknownIdError("unknown block id " + std::to_string(id));
    }
    return blocks[static_cast<std::size_t>(id)];
}

BlockState& Scene::block(int id) {
    return const_cast<BlockState&>(std::as_const(*this).block(id));
}

namespace {

void check_peg(const WorkspaceConfig& config, int peg) {
    if (peg < 0 || peg >= static_cast<int>(config.peg_positions.size())) {
        throw UnknownIdError("unknown peg id " + std::to_string(peg));
    }
}

// Peg axis position relative to the block centre that keeps the whole peg disc
// inside the hole, sampled uniformly by rejection.
Vec2 sample_clearance_offset(const WorkspaceConfig& config, Rng& rng) {
    const double inner = config.hole_inradius() - config.peg_radius;
    const double outer = config.hole_circumradius() - config.peg_radius;
    const Polygon region = block_hole(BlockPose{{0.0, 0.0}, 0.0}, inner, outer);
    const double reach = std::min(2.0 * inner, outer);
    std::uniform_real_distribution<double> u(-reach, reach);
    for (;;) {
        const Vec2 q{u(rng), u(rng)};
        if (point_in_convex_polygon(q, region)) {
            return q;
        }
    }
}

}  // namespace

Scene init_episode(const WorkspaceConfig& config, std::uint64_t seed) {
    config.validate();
    Scene scene;
    scene.config = config;
    scene.rng_seed = seed;
    Rng rng = make_rng(seed, "scene.init");
    std::uniform_real_distribution<double> yaw_dist(0.0, 120.0);
    std::normal_distribution<double> height_dist(0.0, 1.0);
    const double sd = config.height_jitter_sd;
    for (int i = 0; i < kBlockCount; ++i) {
        BlockState& b = scene.blocks[static_cast<std::size_t>(i)];
        b.id = i;
        b.yaw_deg = wrap_angle(yaw_dist(rng), 120.0);
        const Vec2 q = sample_clearance_offset(config, rng);
        b.center = config.peg_positions[static_cast<std::size_t>(i)] - rotate(q, b.yaw_deg);
        for (double& h : b.vertex_heights) {
            h = config.block_height + sd * std::clamp(height_dist(rng), -3.0, 3.0);
        }
        b.status = OnPeg{i};
        b.seat_height = 0.0;
    }
    return scene;
}

bool convex_polygons_overlap(const Polygon& a, const Polygon& b) {
    auto separated_along_edges = [](const Polygon& p, const Polygon& q) {
        const std::size_t n = p.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 e = p[(i + 1) % n] - p[i];
            const Vec2 axis{e.y, -e.x};
            double pmin = std::numeric_limits<double>::infinity();
            double pmax = -pmin;
            double qmin = pmin;
            double qmax = -pmin;
            for (Vec2 v : p) {
                pmin = std::min(pmin, dot(axis, v));
                pmax = std::max(pmax, dot(axis, v));
            }
            for (Vec2 v : q) {
                qmin = std::min(qmin, dot(axis, v));
                qmax = std::max(qmax, dot(axis, v));
            }
            if (pmax < qmin || qmax < pmin) {
                return true;
            }
        }
        return false;
    };
    return !separated_along_edges(a, b) && !separated_along_edges(b, a);
}

namespace {

// Topmost other block resting on `peg`, or nullptr.
const BlockState* topmost_on_peg(const Scene& scene, int peg, int exclude_id) {
    const BlockState* top = nullptr;
    for (const BlockState& other : scene.blocks) {
        if (other.id == exclude_id || peg_of(other.status) != peg) {
            continue;
        }
        if (top == nullptr || other.seat_height > top->seat_height) {
            top = &other;
        }
    }
    return top;
}

// Whether the peg top disc touches the solid part of the block.
bool rests_on_peg_top(const BlockState& block, const WorkspaceConfig& config, Vec2 axis) {
    const Polygon outline = block_outline(block, config);
    if (distance_to_convex_region(axis, outline) > config.peg_radius) {
        return false;
    }
    const Polygon hole = block_hole(block, config);
    const bool disc_inside_hole =
        point_in_convex_polygon(axis, hole) && distance_to_boundary(axis, hole) >= config.peg_radius;
    return !disc_inside_hole;
}

}  // namespace

PlaceOutcome resolve_place(Scene& scene, int block_id, BlockPose drop, int target_peg, std::uint64_t seed) {
    const WorkspaceConfig& config = scene.config;
    BlockState& block = scene.block(block_id);
    check_peg(config, target_peg);
    if (!std::holds_alternative<Held>(block.status)) {
        throw StateError("resolve_place: block " + std::to_string(block_id) + " is not held");
    }
    block.set_pose(drop);
    const Vec2 axis = config.peg_positions[static_cast<std::size_t>(target_peg)];
    const bool axis_in_hole = point_in_convex_polygon(axis, block_hole(block, config));
    const BlockState* below = topmost_on_peg(scene, target_peg, block_id);

    if (axis_in_hole && below == nullptr) {
        block.status = OnPeg{target_peg};
        block.seat_height = 0.0;
        return {PlaceKind::Inserted, block.center};
    }
    if (below != nullptr && convex_polygons_overlap(block_outline(block, config), block_outline(*below, config))) {
        block.seat_height = below->seat_height + config.block_height;
        block.status = StuckOn{target_peg};
        return {PlaceKind::Stuck, block.center};
    }
    if (!axis_in_hole && rests_on_peg_top(block, config, axis)) {
        block.seat_height = config.peg_height;
        block.status = StuckOn{target_peg};
        return {PlaceKind::Stuck, block.center};
    }

    Rng rng = make_rng(seed, "scene.tumble", static_cast<std::uint64_t>(block_id));
    std::normal_distribution<double> tumble(0.0, 0.5 * config.block_edge);
    const Vec2 offset{tumble(rng), tumble(rng)};
    const double margin = config.block_circumradius();
    Vec2 landing = drop.center + offset;
    landing.x = std::clamp(landing.x, margin, config.board_size.x - margin);
    landing.y = std::clamp(landing.y, margin, config.board_size.y - margin);
    block.center = landing;
    block.seat_height = 0.0;
    block.status = Fallen{landing};
    return {PlaceKind::Fell, landing};
}

PickOutcome resolve_pick(Scene& scene, int block_id, Vec2 grasp_point, double capture_radius, ArmSide arm) {
    const WorkspaceConfig& config = scene.config;
    BlockState& block = scene.block(block_id);
    if (std::holds_alternative<Held>(block.status)) {
        throw StateError("resolve_pick: block " + std::to_string(block_id) + " is already held");
    }
    PickOutcome outcome;
    if (distance_to_boundary(grasp_point, block_outline(block, config)) > capture_radius) {
        return outcome;
    }
    const int peg = peg_of(block.status);
    const double lifted_seat = block.seat_height;
    block.status = Held{arm};
    outcome.lifted = true;
    if (peg < 0) {
        return outcome;
    }
    // Blocks that were resting on the lifted one drop down the peg.
    const Vec2 axis = config.peg_positions[static_cast<std::size_t>(peg)];
    for (BlockState& other : scene.blocks) {
        if (other.id == block_id || peg_of(other.status) != peg || other.seat_height <= lifted_seat) {
            continue;
        }
        const BlockState* below = topmost_on_peg(scene, peg, other.id);
        const bool has_support_below = below != nullptr && below->seat_height < other.seat_height;
        if (has_support_below) {
            continue;
        }
        if (point_in_convex_polygon(axis, block_hole(other, config))) {
            other.status = OnPeg{peg};
            other.seat_height = 0.0;
            outcome.settled.push_back(other.id);
        } else {
            other.seat_height = config.peg_height;
        }
    }
    return outcome;
}

}  // namespace pegtransfer
