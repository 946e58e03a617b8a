#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pegtransfer/calibration.hpp"
#include "pegtransfer/graspplan.hpp"
#include "pegtransfer/perception.hpp"
#include "pegtransfer/render.hpp"
#include "pegtransfer/scene.hpp"

namespace pegtransfer {

enum class Direction { LeftToRight, RightToLeft };
enum class AttemptResult { Success, PickFail, PlaceStuck, PlaceFall };
enum class Mode { Single, Bilateral };

struct AttemptRecord {
    int episode_id = 0;
    Mode mode = Mode::Single;
    ArmSide arm = ArmSide::Right;
    int block_id = 0;
    Direction direction = Direction::LeftToRight;
    AttemptResult result = AttemptResult::Success;
    double duration_s = 0.0;
    bool is_recovery_attempt = false;
    bool corrected_later = false;
    int source_peg = -1;
    int target_peg = -1;
    bool operator==(const AttemptRecord&) const = default;
};

/// Phase durations of one pick-transfer-place cycle.
struct MotionTimingConfig {
    double approach_s = 2.0;
    double descend_s = 1.5;
    double grip_s = 1.0;
    double lift_s = 1.5;
    double transfer_s = 2.5;
    double release_s = 1.5;
    double scan_s = 1.5;  // one perception pass (image capture + detection)
    bool bilateral_overlap = true;

    std::array<double, 6> phases() const { return {approach_s, descend_s, grip_s, lift_s, transfer_s, release_s}; }
    double attempt_s() const;
    void validate() const;
};

/// Geometric parameters of the motion sequence.
struct MotionConfig {
    double clearance_mm = 5.0;    // added above peg tops on every waypoint
    double release_gap_mm = 2.0;  // block bottom above the peg top at release
    double capture_radius_mm = 3.0;
    /// Open the jaw before descending instead of after passing the peg top.
    /// Violates the safety rule; exists to exercise the fault path.
    bool open_before_descent = false;
    /// Probability that the action following a place-stuck knocks the block home.
    double nudge_prob = 0.3;
    void validate() const;
};

enum class Jaw { Open, Closed };
enum class Phase { Approach, Descend, Grip, Lift, Transfer, Release };

struct GripperState {
    Vec2 position;
    double height = 0.0;  // tip height above the board, mm
    Jaw jaw = Jaw::Closed;
    double roll = 0.0;
};

struct Waypoint {
    Phase phase = Phase::Approach;
    GripperState state;
    bool in_window = false;  // inside a grasp or release window
};

using Trace = std::vector<Waypoint>;

/// First waypoint with an open jaw below peg_top + clearance outside a window, or nullopt.
std::optional<std::size_t> find_safety_violation(const Trace& trace, double peg_top, double clearance);
/// Throws SafetyFault on a violation.
void audit_trace(const Trace& trace, double peg_top, double clearance);

/// Actuation model and calibration of one arm.
struct ArmContext {
    ArmId arm;
    ErrorField field;
    std::optional<CalibrationSet> calibration;
};

struct AttemptPlan {
    ArmSide arm = ArmSide::Right;
    int block_id = 0;
    BlockPose perceived;  // block pose estimated by perception
    double perceived_seat = 0.0;  // estimated height of the block bottom
    GraspCandidate grasp;
    PlacePose place;
    int source_peg = -1;
    int target_peg = -1;
    Direction direction = Direction::LeftToRight;
    bool is_recovery = false;
    /// Extra displacement of the achieved grasp point (failure injection).
    Vec2 grasp_disturbance;
};

struct AttemptOutcome {
    AttemptRecord record;
    Trace trace;
    std::vector<int> settled_blocks;  // blocks knocked into insertion by the pick
};

/// Simulates the waypoint sequence for one block transfer and updates the scene.
/// Throws SafetyFault if the planned sequence breaks the jaw rule.
AttemptOutcome execute_attempt(Scene& scene, const AttemptPlan& plan, const ArmContext& arm,
                               const MotionTimingConfig& timing, const MotionConfig& motion, std::uint64_t seed);

/// One block found at a source peg.
struct SourceBlock {
    int source_peg = -1;
    BlockPose pose;
};

struct Assignment {
    ArmSide arm = ArmSide::Right;
    int source_peg = -1;
    int target_peg = -1;
    BlockPose block;
    GraspCandidate grasp;
    PlacePose place;
};

/// Simultaneous assignments of one bilateral round (one or two).
struct Round {
    std::vector<Assignment> assignments;
};

/// Rounds over neighbouring peg pairs (one per grid row, in row order). In each
/// round the left arm takes the block nearest its home; targets are the mirrored pegs.
std::vector<Round> bilateral_schedule(std::span<const SourceBlock> blocks, const WorkspaceConfig& config,
                                      std::span<const Vec2> pegs, const ArmId& left, const ArmId& right,
                                      const PlaceOptions& place = {});

/// Left arm strictly left of the right arm at both grasp and place.
bool round_is_non_crossing(const Round& round);

struct FaultInjection {
    int block_id = -1;
    Direction direction = Direction::LeftToRight;
};

struct EpisodeSetup {
    WorkspaceConfig workspace = WorkspaceConfig::standard();
    CameraConfig camera = CameraConfig::covering(WorkspaceConfig::standard());
    MotionTimingConfig timing;
    MotionConfig motion;
    PlaceOptions place;
    int mask_count = 30;
    double band_epsilon = 3.0;
    DetectOptions detect;
    ArmContext left;
    ArmContext right;
    /// First attempt on each listed block in the given direction misses its grasp.
    std::vector<FaultInjection> forced_pick_failures;
    bool record_traces = false;
};

struct EpisodeReport {
    int episode_id = 0;
    std::uint64_t seed = 0;
    Mode mode = Mode::Single;
    std::vector<AttemptRecord> records;
    double wall_time_s = 0.0;
    int blocks_home = 0;  // blocks inserted on the original pegs at the end
    std::vector<Trace> traces;
};

/// Owns the precomputed perception state (masks, peg estimates) shared by episodes.
class EpisodeRunner {
public:
    explicit EpisodeRunner(EpisodeSetup setup);

    EpisodeReport run(Mode mode, int episode_id, std::uint64_t seed) const;

    const EpisodeSetup& setup() const { return setup_; }
    const MaskSet& masks() const { return masks_; }
    /// Board-frame peg centres detected once on an empty board.
    const std::vector<Vec2>& pegs() const { return pegs_; }

private:
    EpisodeSetup setup_;
    MaskSet masks_;
    std::vector<Vec2> pegs_;
};

EpisodeReport run_episode(const EpisodeSetup& setup, Mode mode, std::uint64_t seed, int episode_id = 0);

std::string to_string(Direction d);
std::string to_string(AttemptResult r);
std::string to_string(Mode m);
std::string to_string(ArmSide a);
Direction parse_direction(const std::string& s);
AttemptResult parse_result(const std::string& s);
Mode parse_mode(const std::string& s);
ArmSide parse_arm(const std::string& s);

}  // namespace pegtransfer
