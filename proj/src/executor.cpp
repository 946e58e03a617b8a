#include "pegtransfer/executor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pegtransfer/errors.hpp"
#include "pegtransfer/random.hpp"

namespace pegtransfer {

double MotionTimingConfig::attempt_s() const {
    double total = 0.0;
    for (double p : phases()) {
        total += p;
    }
    return total;
}

void MotionTimingConfig::validate() const {
    for (double p : phases()) {
        if (!(p > 0.0)) {
            throw ConfigError("all motion phase durations must be positive");
        }
    }
    if (!(scan_s >= 0.0)) {
        throw ConfigError("scan duration must be non-negative");
    }
}

void MotionConfig::validate() const {
    if (!(clearance_mm >= 0.0 && release_gap_mm >= 0.0 && capture_radius_mm > 0.0)) {
        throw ConfigError("motion clearances must be non-negative and capture radius positive");
    }
    if (!(nudge_prob >= 0.0 && nudge_prob <= 1.0)) {
        throw ConfigError("nudge probability must lie in [0, 1]");
    }
}

std::optional<std::size_t> find_safety_violation(const Trace& trace, double peg_top, double clearance) {
    const double plane = peg_top + clearance;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Waypoint& w = trace[i];
        if (w.state.jaw == Jaw::Open && w.state.height < plane && !w.in_window) {
            return i;
        }
    }
    return std::nullopt;
}

void audit_trace(const Trace& trace, double peg_top, double clearance) {
    if (const auto bad = find_safety_violation(trace, peg_top, clearance)) {
        const Waypoint& w = trace[*bad];
        throw SafetyFault("open jaw at height " + std::to_string(w.state.height) + " mm below the peg-top clearance plane " +
                          std::to_string(peg_top + clearance) + " mm (waypoint " + std::to_string(*bad) + ")");
    }
}

AttemptOutcome execute_attempt(Scene& scene, const AttemptPlan& plan, const ArmContext& arm,
                               const MotionTimingConfig& timing, const MotionConfig& motion, std::uint64_t seed) {
    const WorkspaceConfig& ws = scene.config;
    const BlockState before = scene.block(plan.block_id);
    if (const auto* held = std::get_if<Held>(&before.status); held != nullptr) {
        throw StateError("block " + std::to_string(plan.block_id) + " is already held");
    }
    Rng jitter = make_rng(seed, "exec.jitter");
    Rng slip = make_rng(seed, "exec.slip");
    const CalibrationSet* calib = arm.calibration ? &*arm.calibration : nullptr;
    auto command = [&](Vec2 target, double roll) { return command_position(target, roll, calib, arm.field, jitter); };

    const double seat = plan.perceived_seat;
    const double z_above = seat + ws.block_height + motion.clearance_mm;
    const double z_grasp = seat + 0.5 * ws.block_height;
    const double z_carry = ws.peg_height + ws.block_height + motion.clearance_mm + 0.5 * ws.block_height;
    const double z_release = ws.peg_height + motion.release_gap_mm + 0.5 * ws.block_height;
    const double roll_grasp = plan.grasp.approach_yaw;
    const double roll_place = roll_grasp + plan.place.yaw_deg;
    const Vec2 place_command =
        plan.place.point - rotate(plan.perceived.center - plan.grasp.point, plan.place.yaw_deg);

    Trace trace;
    auto push = [&](Phase phase, Vec2 p, double z, Jaw jaw, double roll, bool window) {
        trace.push_back({phase, {p, z, jaw, roll}, window});
    };
    const Vec2 above = command(plan.grasp.point, roll_grasp);
    push(Phase::Approach, above, z_above, Jaw::Closed, roll_grasp, false);
    const Jaw descend_jaw = motion.open_before_descent ? Jaw::Open : Jaw::Closed;
    if (motion.open_before_descent) {
        push(Phase::Approach, above, z_above, Jaw::Open, roll_grasp, false);
    }
    const Vec2 grasp_at = command(plan.grasp.point, roll_grasp) + plan.grasp_disturbance;
    push(Phase::Descend, grasp_at, z_grasp, descend_jaw, roll_grasp, false);
    push(Phase::Grip, grasp_at, z_grasp, Jaw::Open, roll_grasp, true);
    push(Phase::Grip, grasp_at, z_grasp, Jaw::Closed, roll_grasp, true);
    push(Phase::Lift, grasp_at, z_carry, Jaw::Closed, roll_grasp, false);
    push(Phase::Transfer, command(place_command, roll_place), z_carry, Jaw::Closed, roll_place, false);
    const Vec2 release_at = command(place_command, roll_place);
    push(Phase::Release, release_at, z_release, Jaw::Closed, roll_place, false);
    push(Phase::Release, release_at, z_release, Jaw::Open, roll_place, true);
    push(Phase::Release, release_at, z_carry, Jaw::Open, roll_place, false);
    push(Phase::Release, release_at, z_carry, Jaw::Closed, roll_place, false);
    audit_trace(trace, ws.peg_height, motion.clearance_mm);

    AttemptOutcome out;
    AttemptRecord& rec = out.record;
    rec.arm = arm.arm.side;
    rec.block_id = plan.block_id;
    rec.direction = plan.direction;
    rec.duration_s = timing.attempt_s();
    rec.is_recovery_attempt = plan.is_recovery;
    rec.source_peg = plan.source_peg;
    rec.target_peg = plan.target_peg;

    const PickOutcome pick = resolve_pick(scene, plan.block_id, grasp_at, motion.capture_radius_mm, arm.arm.side);
    out.settled_blocks = pick.settled;
    if (!pick.lifted) {
        rec.result = AttemptResult::PickFail;
        out.trace = std::move(trace);
        return out;
    }
    // The closing jaw pulls the block wall onto the jaw axis; the block may then
    // rotate about the contact before release.
    const Vec2 contact = closest_point_on_boundary(grasp_at, block_outline(before, ws));
    const double slip_deg =
        arm.field.grip_slip_sd_deg > 0.0 ? std::normal_distribution<double>(0.0, arm.field.grip_slip_sd_deg)(slip) : 0.0;
    const Vec2 in_jaw = rotate(before.center - contact, slip_deg);
    const BlockPose drop{release_at + rotate(in_jaw, plan.place.yaw_deg), before.yaw_deg + slip_deg + plan.place.yaw_deg};
    const PlaceOutcome placed = resolve_place(scene, plan.block_id, drop, plan.target_peg, derive_seed(seed, "exec.place"));
    switch (placed.kind) {
        case PlaceKind::Inserted:
            rec.result = AttemptResult::Success;
            break;
        case PlaceKind::Stuck:
            rec.result = AttemptResult::PlaceStuck;
            break;
        case PlaceKind::Fell:
            rec.result = AttemptResult::PlaceFall;
            break;
    }
    out.trace = std::move(trace);
    return out;
}

bool round_is_non_crossing(const Round& round) {
    const Assignment* left = nullptr;
    const Assignment* right = nullptr;
    for (const Assignment& a : round.assignments) {
        (a.arm == ArmSide::Left ? left : right) = &a;
    }
    if (left == nullptr || right == nullptr) {
        return true;
    }
    return left->grasp.point.x < right->grasp.point.x && left->place.point.x < right->place.point.x;
}

std::vector<Round> bilateral_schedule(std::span<const SourceBlock> blocks, const WorkspaceConfig& config,
                                      std::span<const Vec2> pegs, const ArmId& left, const ArmId& right,
                                      const PlaceOptions& place) {
    // Neighbouring pegs share a row of the source grid (same y), ordered by row.
    std::vector<std::vector<SourceBlock>> rows;
    std::vector<double> row_y;
    std::vector<SourceBlock> sorted(blocks.begin(), blocks.end());
    std::sort(sorted.begin(), sorted.end(), [&](const SourceBlock& a, const SourceBlock& b) {
        const Vec2 pa = pegs[static_cast<std::size_t>(a.source_peg)];
        const Vec2 pb = pegs[static_cast<std::size_t>(b.source_peg)];
        return pa.y < pb.y || (pa.y == pb.y && pa.x < pb.x);
    });
    const double row_tol = config.block_edge;
    for (const SourceBlock& b : sorted) {
        const double y = pegs[static_cast<std::size_t>(b.source_peg)].y;
        if (row_y.empty() || std::abs(y - row_y.back()) > row_tol) {
            rows.emplace_back();
            row_y.push_back(y);
        }
        rows.back().push_back(b);
    }

    auto make = [&](const SourceBlock& b, const ArmId& arm) {
        Assignment a;
        a.arm = arm.side;
        a.source_peg = b.source_peg;
        a.target_peg = WorkspaceConfig::mirror_peg(b.source_peg);
        a.block = b.pose;
        a.grasp = plan_grasp(b.pose, arm, pegs[static_cast<std::size_t>(b.source_peg)], config.block_edge);
        a.place = plan_place(pegs[static_cast<std::size_t>(a.target_peg)], arm, true, place);
        return a;
    };

    std::vector<Round> rounds;
    for (std::vector<SourceBlock>& row : rows) {
        while (!row.empty()) {
            Round round;
            if (row.size() == 1) {
                const SourceBlock b = row.front();
                row.clear();
                const bool left_side = distance(b.pose.center, left.home_position) <=
                                       distance(b.pose.center, right.home_position);
                round.assignments.push_back(make(b, left_side ? left : right));
            } else {
                // Left arm takes the block nearest to it, right arm the nearest remaining.
                auto nearest = [&](const ArmId& arm) {
                    return std::min_element(row.begin(), row.end(), [&](const SourceBlock& a, const SourceBlock& b) {
                        return distance(a.pose.center, arm.home_position) < distance(b.pose.center, arm.home_position);
                    });
                };
                auto li = nearest(left);
                const SourceBlock lb = *li;
                row.erase(li);
                auto ri = nearest(right);
                const SourceBlock rb = *ri;
                row.erase(ri);
                round.assignments.push_back(make(lb, left));
                round.assignments.push_back(make(rb, right));
            }
            rounds.push_back(std::move(round));
        }
    }
    return rounds;
}

namespace {

struct Perceived {
    BlockPose pose;
    double seat = 0.0;
};

Scene empty_board(const WorkspaceConfig& ws) {
    Scene scene = init_episode(ws, 0);
    for (BlockState& b : scene.blocks) {
        b.status = Held{ArmSide::Right};
    }
    return scene;
}

int column_of(int peg) { return (peg % kPegsPerHalf) % 2; }

}  // namespace

EpisodeRunner::EpisodeRunner(EpisodeSetup setup) : setup_(std::move(setup)) {
    setup_.workspace.validate();
    setup_.camera.validate();
    setup_.timing.validate();
    setup_.motion.validate();
    masks_ = make_masks(setup_.workspace, setup_.camera, setup_.mask_count);
    CameraConfig clean = setup_.camera;
    clean.noise_sd = 0.0;
    clean.dropout_prob = 0.0;
    const DepthImage board = render_depth(empty_board(setup_.workspace), clean, 0);
    for (Vec2 px : detect_pegs(board, setup_.workspace, clean)) {
        pegs_.push_back(pixel_to_board(px, clean));
    }
}

EpisodeReport run_episode(const EpisodeSetup& setup, Mode mode, std::uint64_t seed, int episode_id) {
    return EpisodeRunner(setup).run(mode, episode_id, seed);
}

EpisodeReport EpisodeRunner::run(Mode mode, int episode_id, std::uint64_t seed) const {
    const WorkspaceConfig& ws = setup_.workspace;
    const CameraConfig& camera = setup_.camera;
    const double ppm = camera.pixels_per_mm;
    const double margin = ws.block_circumradius() + 6.0;
    const double gate = ws.block_circumradius() + ws.peg_radius;
    const std::array<double, 2> tiers{0.0, ws.peg_height};

    Scene scene = init_episode(ws, seed);
    EpisodeReport report;
    report.episode_id = episode_id;
    report.seed = seed;
    report.mode = mode;

    std::uint64_t render_pass = 0;
    std::uint64_t attempt_counter = 0;
    std::vector<FaultInjection> pending_faults = setup_.forced_pick_failures;
    std::vector<std::size_t> pending_stuck;
    Rng nudge_rng = make_rng(seed, "episode.nudge");
    std::bernoulli_distribution nudge(setup_.motion.nudge_prob);

    auto capture = [&]() {
        report.wall_time_s += setup_.timing.scan_s;
        return render_depth(scene, camera, derive_seed(seed, "episode.render", render_pass++));
    };

    auto pixel_of = [&](Vec2 board) {
        const Vec2 p = camera.board_to_pixel(board);
        return std::pair<int, int>{static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
    };

    // Alg. 1 over a window, trying the inserted tier first and then blocks resting on peg tops.
    auto detect_window = [&](const DepthImage& window, int n) {
        std::vector<std::pair<Detection, double>> hits;
        for (double seat : tiers) {
            const int wanted = n - static_cast<int>(hits.size());
            if (wanted <= 0) {
                break;
            }
            std::vector<Detection> found;
            try {
                found = detect_blocks(window, wanted, masks_, block_top_band(ws, camera, seat, setup_.band_epsilon),
                                      setup_.detect);
            } catch (const NotEnoughBlocks& e) {
                found = e.partial();
            }
            for (const Detection& d : found) {
                hits.emplace_back(d, seat);
            }
        }
        return hits;
    };

    auto half_scan = [&](const DepthImage& image, int first_peg) {
        int u0 = std::numeric_limits<int>::max(), v0 = u0, u1 = std::numeric_limits<int>::min(), v1 = u1;
        for (int p = first_peg; p < first_peg + kPegsPerHalf; ++p) {
            const auto [u, v] = pixel_of(pegs_[static_cast<std::size_t>(p)]);
            u0 = std::min(u0, u);
            v0 = std::min(v0, v);
            u1 = std::max(u1, u);
            v1 = std::max(v1, v);
        }
        const int pad = static_cast<int>(std::ceil(margin * ppm));
        const DepthImage window = image.crop(u0 - pad, v0 - pad, u1 - u0 + 2 * pad + 1, v1 - v0 + 2 * pad + 1);
        std::array<std::optional<Perceived>, kPegsPerHalf> slots{};
        for (const auto& [det, seat] : detect_window(window, kPegsPerHalf)) {
            const Vec2 c = detection_to_board(det, window);
            int best = -1;
            double best_d = gate;
            for (int s = 0; s < kPegsPerHalf; ++s) {
                const double d = distance(c, pegs_[static_cast<std::size_t>(first_peg + s)]);
                if (!slots[static_cast<std::size_t>(s)] && d <= best_d) {
                    best = s;
                    best_d = d;
                }
            }
            if (best >= 0) {
                slots[static_cast<std::size_t>(best)] = Perceived{{c, det.theta_deg}, seat};
            }
        }
        return slots;
    };

    auto peg_scan = [&](const DepthImage& image, int peg) -> std::optional<Perceived> {
        const auto [u, v] = pixel_of(pegs_[static_cast<std::size_t>(peg)]);
        const int pad = static_cast<int>(std::ceil(margin * ppm));
        const DepthImage window = image.crop(u - pad, v - pad, 2 * pad + 1, 2 * pad + 1);
        for (const auto& [det, seat] : detect_window(window, 1)) {
            const Vec2 c = detection_to_board(det, window);
            if (distance(c, pegs_[static_cast<std::size_t>(peg)]) <= gate) {
                return Perceived{{c, det.theta_deg}, seat};
            }
        }
        return std::nullopt;
    };

    auto block_near = [&](Vec2 c) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (const BlockState& b : scene.blocks) {
            if (std::holds_alternative<Held>(b.status)) {
                continue;
            }
            const double d = distance(b.center, c);
            if (d < best_d) {
                best_d = d;
                best = b.id;
            }
        }
        return best;
    };

    auto mark_corrected = [&](int block_id) {
        for (auto it = report.records.rbegin(); it != report.records.rend(); ++it) {
            if (it->block_id == block_id) {
                if (it->result == AttemptResult::PlaceStuck) {
                    it->corrected_later = true;
                }
                return;
            }
        }
    };

    // A place-stuck block may be knocked home by the next action.
    auto settle_after_action = [&](std::vector<std::size_t> new_stuck) {
        for (std::size_t idx : pending_stuck) {
            AttemptRecord& rec = report.records[idx];
            BlockState& b = scene.block(rec.block_id);
            const auto* stuck = std::get_if<StuckOn>(&b.status);
            if (stuck == nullptr || !nudge(nudge_rng)) {
                continue;
            }
            const bool occupied = std::any_of(scene.blocks.begin(), scene.blocks.end(), [&](const BlockState& o) {
                return o.id != b.id && std::holds_alternative<OnPeg>(o.status) && peg_of(o.status) == stuck->peg;
            });
            if (occupied) {
                continue;
            }
            b.center = ws.peg_positions[static_cast<std::size_t>(stuck->peg)];
            b.seat_height = 0.0;
            b.status = OnPeg{stuck->peg};
            rec.corrected_later = true;
        }
        pending_stuck = std::move(new_stuck);
    };

    auto attempt = [&](const ArmContext& arm, const Perceived& seen, int source, bool recovery, Direction dir,
                       std::optional<Assignment> assigned) -> std::optional<std::size_t> {
        const int block_id = block_near(seen.pose.center);
        if (block_id < 0) {
            return std::nullopt;
        }
        const int target = WorkspaceConfig::mirror_peg(source);
        AttemptPlan plan;
        plan.arm = arm.arm.side;
        plan.block_id = block_id;
        plan.perceived = seen.pose;
        plan.perceived_seat = seen.seat;
        plan.source_peg = source;
        plan.target_peg = target;
        plan.direction = dir;
        plan.is_recovery = recovery;
        if (assigned) {
            plan.grasp = assigned->grasp;
            plan.place = assigned->place;
        } else {
            plan.grasp = plan_grasp(seen.pose, arm.arm, pegs_[static_cast<std::size_t>(source)], ws.block_edge);
            plan.place = plan_place(pegs_[static_cast<std::size_t>(target)], arm.arm, mode == Mode::Bilateral,
                                    setup_.place);
        }
        const auto fault = std::find_if(pending_faults.begin(), pending_faults.end(), [&](const FaultInjection& f) {
            return f.block_id == block_id && f.direction == dir;
        });
        if (fault != pending_faults.end()) {
            const Vec2 outward = plan.grasp.point - seen.pose.center;
            plan.grasp_disturbance = outward / norm(outward) * (setup_.motion.capture_radius_mm + 5.0);
            pending_faults.erase(fault);
        }
        AttemptOutcome out = execute_attempt(scene, plan, arm, setup_.timing, setup_.motion,
                                             derive_seed(seed, "episode.attempt", attempt_counter++));
        out.record.episode_id = episode_id;
        out.record.mode = mode;
        report.records.push_back(out.record);
        if (setup_.record_traces) {
            report.traces.push_back(std::move(out.trace));
        }
        for (int settled : out.settled_blocks) {
            mark_corrected(settled);
        }
        return report.records.size() - 1;
    };

    auto stuck_indices = [&](std::initializer_list<std::optional<std::size_t>> idxs) {
        std::vector<std::size_t> out;
        for (const auto& i : idxs) {
            if (i && report.records[*i].result == AttemptResult::PlaceStuck) {
                out.push_back(*i);
            }
        }
        return out;
    };

    const ArmId left_arm = setup_.left.arm;
    const ArmId right_arm = setup_.right.arm;
    for (Direction dir : {Direction::LeftToRight, Direction::RightToLeft}) {
        const int first = dir == Direction::LeftToRight ? 0 : kPegsPerHalf;
        std::array<int, kBlockCount> tries{};
        auto count_try = [&](std::optional<std::size_t> idx) {
            if (idx) {
                ++tries[static_cast<std::size_t>(report.records[*idx].block_id)];
            }
        };

        const auto slots = half_scan(capture(), first);
        if (mode == Mode::Single) {
            for (int s = 0; s < kPegsPerHalf; ++s) {
                if (!slots[static_cast<std::size_t>(s)]) {
                    continue;
                }
                const auto idx = attempt(setup_.right, *slots[static_cast<std::size_t>(s)], first + s, false, dir, std::nullopt);
                count_try(idx);
                if (idx) {
                    report.wall_time_s += report.records[*idx].duration_s;
                }
                settle_after_action(stuck_indices({idx}));
            }
        } else {
            std::vector<SourceBlock> found;
            for (int s = 0; s < kPegsPerHalf; ++s) {
                if (slots[static_cast<std::size_t>(s)]) {
                    found.push_back({first + s, slots[static_cast<std::size_t>(s)]->pose});
                }
            }
            for (const Round& round : bilateral_schedule(found, ws, pegs_, left_arm, right_arm, setup_.place)) {
                std::vector<std::optional<std::size_t>> done;
                for (const Assignment& a : round.assignments) {
                    const Perceived& seen = *slots[static_cast<std::size_t>(a.source_peg - first)];
                    const ArmContext& arm = a.arm == ArmSide::Left ? setup_.left : setup_.right;
                    done.push_back(attempt(arm, seen, a.source_peg, false, dir, a));
                    count_try(done.back());
                }
                double round_time = 0.0;
                const std::array<double, 6> phases = setup_.timing.phases();
                const double n_arms = static_cast<double>(std::count_if(done.begin(), done.end(), [](const auto& i) { return i.has_value(); }));
                for (double p : phases) {
                    round_time += setup_.timing.bilateral_overlap ? p : p * n_arms;
                }
                if (n_arms > 0) {
                    report.wall_time_s += round_time;
                    for (const auto& i : done) {
                        if (i) {
                            report.records[*i].duration_s = round_time / n_arms;
                        }
                    }
                }
                std::vector<std::size_t> stuck;
                for (const auto& i : done) {
                    if (i && report.records[*i].result == AttemptResult::PlaceStuck) {
                        stuck.push_back(*i);
                    }
                }
                settle_after_action(std::move(stuck));
            }
        }

        // Error recovery: rescan the six known start positions, one more try each.
        const DepthImage rescan = capture();
        for (int s = 0; s < kPegsPerHalf; ++s) {
            const int source = first + s;
            const auto seen = peg_scan(rescan, source);
            if (!seen) {
                continue;
            }
            const int block_id = block_near(seen->pose.center);
            if (block_id < 0 || tries[static_cast<std::size_t>(block_id)] >= 2) {
                continue;
            }
            const ArmContext& arm =
                mode == Mode::Single ? setup_.right : (column_of(source) == 0 ? setup_.left : setup_.right);
            const auto idx = attempt(arm, *seen, source, true, dir, std::nullopt);
            count_try(idx);
            if (idx) {
                report.wall_time_s += report.records[*idx].duration_s;
            }
            settle_after_action(stuck_indices({idx}));
        }
    }
    settle_after_action({});

    for (const BlockState& b : scene.blocks) {
        if (const auto* on = std::get_if<OnPeg>(&b.status); on != nullptr && on->peg == b.id) {
            ++report.blocks_home;
        }
    }
    return report;
}

std::string to_string(Direction d) { return d == Direction::LeftToRight ? "LeftToRight" : "RightToLeft"; }

std::string to_string(AttemptResult r) {
    switch (r) {
        case AttemptResult::Success:
            return "Success";
        case AttemptResult::PickFail:
            return "PickFail";
        case AttemptResult::PlaceStuck:
            return "PlaceStuck";
        case AttemptResult::PlaceFall:
            return "PlaceFall";
    }
    return "Unknown";
}

std::string to_string(Mode m) { return m == Mode::Single ? "single" : "bilateral"; }
std::string to_string(ArmSide a) { return a == ArmSide::Left ? "Left" : "Right"; }

Direction parse_direction(const std::string& s) {
    if (s == "LeftToRight") {
        return Direction::LeftToRight;
    }
    if (s == "RightToLeft") {
        return Direction::RightToLeft;
    }
    throw ConfigError("unknown direction '" + s + "'");
}

AttemptResult parse_result(const std::string& s) {
    for (AttemptResult r : {AttemptResult::Success, AttemptResult::PickFail, AttemptResult::PlaceStuck,
                            AttemptResult::PlaceFall}) {
        if (to_string(r) == s) {
            return r;
        }
    }
    throw ConfigError("unknown attempt result '" + s + "'");
}

Mode parse_mode(const std::string& s) {
    if (s == "single") {
        return Mode::Single;
    }
    if (s == "bilateral") {
        return Mode::Bilateral;
    }
    throw ConfigError("unknown mode '" + s + "' (expected single or bilateral)");
}

ArmSide parse_arm(const std::string& s) {
    if (s == "Left") {
        return ArmSide::Left;
    }
    if (s == "Right") {
        return ArmSide::Right;
    }
    throw ConfigError("unknown arm '" + s + "'");
}

}  // namespace pegtransfer
