#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "pegtransfer/geometry.hpp"
#include "pegtransfer/random.hpp"
#include "pegtransfer/scene.hpp"

namespace pegtransfer {

/// Regular grid of checkerboard corners; row r runs along board y, column c along x.
struct GridSpec {
    Vec2 origin;
    double cell = 16.0;
    int rows = 2;
    int cols = 2;

    /// Largest grid with this cell size that fits on the board, anchored at the board corner.
    static GridSpec covering(Vec2 board_size, double cell_mm);

    Vec2 corner(int row, int col) const { return origin + Vec2{col * cell, row * cell}; }
    Vec2 extent_max() const { return corner(rows - 1, cols - 1); }
    bool contains(Vec2 p) const;
    bool operator==(const GridSpec&) const = default;
};

struct ZeroField {};
struct ConstantField {
    Vec2 offset;
};
/// e(x) = [a00 a01; a10 a11] x + b
struct AffineField {
    std::array<double, 4> a{};
    Vec2 b;
};
struct SinusoidMode {
    Vec2 wavevector;  // rad / mm
    Vec2 amplitude;   // per component, before scaling
    Vec2 phase;       // per component, radians
};
/// Sum of a few low-frequency plane waves, scaled so the max over a dense board
/// sampling equals the requested magnitude.
struct SinusoidField {
    std::vector<SinusoidMode> modes;
    double scale = 1.0;
};
/// Bilinear within the cells of `grid`, clamped outside it.
struct GridField {
    GridSpec grid;
    std::vector<Vec2> values;  // row-major
};
using SystematicField = std::variant<ZeroField, ConstantField, AffineField, SinusoidField, GridField>;

/// Actuation error model of a cable-driven arm.
struct ErrorField {
    SystematicField shape = ZeroField{};
    double jitter_sd = 0.0;       // per-axis Gaussian, mm, independent per command
    Vec2 roll_offset_0;           // tip offset at roll 0
    Vec2 roll_offset_90;          // tip offset at roll 90
    double grip_slip_sd_deg = 0.0;  // block rotation inside the closed jaw
    std::uint64_t seed = 0;

    Vec2 systematic(Vec2 p) const;
    /// Linear in roll on [0, 90] and periodic with period 180 (symmetric jaw).
    Vec2 roll_coupling(double roll_deg) const;
    bool is_zero() const;

    static ErrorField none() { return {}; }
};

/// Parameters of the default cable-driven arm error model.
struct ArmErrorModel {
    double e_sys = 4.0;
    double jitter_sd = 0.3;
    double roll_offset_mm = 0.5;
    double grip_slip_sd_deg = 18.0;
};

/// Band-limited sinusoidal field over `board_size` with max magnitude e_sys, plus
/// jitter, roll coupling and grip slip from `model`. Deterministic per seed.
ErrorField make_error_field(const ArmErrorModel& model, Vec2 board_size, std::uint64_t seed);
SinusoidField make_sinusoid_field(double e_sys, Vec2 board_size, std::uint64_t seed);

struct CalibrationTable {
    ArmSide arm = ArmSide::Right;
    double roll_deg = 0.0;
    GridSpec grid;
    std::vector<Vec2> entries;  // recorded achieved position per corner, row-major

    const Vec2& entry(int row, int col) const { return entries[static_cast<std::size_t>(row * grid.cols + col)]; }
    Vec2 correction(int row, int col) const { return grid.corner(row, col) - entry(row, col); }
    void validate() const;
    bool operator==(const CalibrationTable&) const = default;
};

/// Tables recorded at roll 0 and roll 90 for one arm.
struct CalibrationSet {
    ArmSide arm = ArmSide::Right;
    CalibrationTable roll0;
    CalibrationTable roll90;
};

/// Servos the arm to every grid corner at rolls 0 and 90 and records where the tip
/// actually ended up. Throws ConfigError when the grid leaves the board.
CalibrationSet generate_calibration(ArmSide arm, const ErrorField& field, const GridSpec& grid, Vec2 board_size);

/// Target plus the bilinear blend of the four surrounding corner corrections.
/// Throws ExtrapolationError outside the grid.
Vec2 bilinear(const CalibrationTable& table, Vec2 target);

/// Bilinear estimate of the actuation offset (achieved - commanded) at `p`; the
/// border cells continue linearly outside the grid.
Vec2 interpolated_offset(const CalibrationTable& table, Vec2 p);

/// Entrywise linear blend with weight roll / 90; roll must lie in [0, 90].
CalibrationTable roll_interp(const CalibrationTable& at0, const CalibrationTable& at90, double roll_deg);

/// Table for any roll, using the 180-degree symmetry of the jaw for rolls outside [0, 90].
CalibrationTable table_for_roll(const CalibrationSet& set, double roll_deg);

/// Where the tip ends up when the controller is asked to reach `target`.
/// Without calibration the raw error applies; with it the command is pre-corrected
/// by inverting the interpolated offset map.
Vec2 command_position(Vec2 target, double roll_deg, const CalibrationSet* calib, const ErrorField& field, Rng& rng);
Vec2 command_position(Vec2 target, double roll_deg, const CalibrationSet* calib, const ErrorField& field,
                      std::uint64_t seed);

/// Command that the calibrated controller sends for `target` (before actuation error).
Vec2 calibrated_command(Vec2 target, const CalibrationTable& table);

struct ResidualSummary {
    int targets = 0;
    double mean_mm = 0.0;
    double p95_mm = 0.0;
    double max_mm = 0.0;
};

/// Position error |achieved - target| over uniformly random in-grid targets at
/// uniformly random roll in [0, 90]; calib may be null for the raw arm.
ResidualSummary residual_summary(const ErrorField& field, const CalibrationSet* calib, const GridSpec& grid,
                                 int n_targets, std::uint64_t seed);

}  // namespace pegtransfer
