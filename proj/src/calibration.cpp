#include "pegtransfer/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pegtransfer/errors.hpp"

namespace pegtransfer {

namespace {
constexpr double kGridTolerance = 1e-9;
constexpr double kFieldSampleStep = 1.0;  // mm, for normalising the sinusoid field
}  // namespace

GridSpec GridSpec::covering(Vec2 board_size, double cell_mm) {
    if (!(cell_mm > 0.0)) {
        throw ConfigError("grid cell must be positive");
    }
    GridSpec g;
    g.origin = {0.0, 0.0};
    g.cell = cell_mm;
    g.cols = static_cast<int>(std::floor(board_size.x / cell_mm + kGridTolerance)) + 1;
    g.rows = static_cast<int>(std::floor(board_size.y / cell_mm + kGridTolerance)) + 1;
    return g;
}

bool GridSpec::contains(Vec2 p) const {
    const Vec2 hi = extent_max();
    return p.x >= origin.x - kGridTolerance && p.y >= origin.y - kGridTolerance && p.x <= hi.x + kGridTolerance &&
           p.y <= hi.y + kGridTolerance;
}

namespace {

struct CellCoord {
    int row;
    int col;
    double tx;
    double ty;
};

// With `extrapolate`, points outside the grid use the linear continuation of the
// border cell; otherwise they are clamped onto the grid.
CellCoord locate(const GridSpec& g, Vec2 p, bool extrapolate = false) {
    double fx = (p.x - g.origin.x) / g.cell;
    double fy = (p.y - g.origin.y) / g.cell;
    if (!extrapolate) {
        fx = std::clamp(fx, 0.0, static_cast<double>(g.cols - 1));
        fy = std::clamp(fy, 0.0, static_cast<double>(g.rows - 1));
    }
    const int col = std::clamp(static_cast<int>(std::floor(fx)), 0, g.cols - 2);
    const int row = std::clamp(static_cast<int>(std::floor(fy)), 0, g.rows - 2);
    return {row, col, fx - col, fy - row};
}

template <typename ValueAt>
Vec2 blend(const CellCoord& c, ValueAt value) {
    const Vec2 v00 = value(c.row, c.col);
    const Vec2 v01 = value(c.row, c.col + 1);
    const Vec2 v10 = value(c.row + 1, c.col);
    const Vec2 v11 = value(c.row + 1, c.col + 1);
    return v00 * ((1 - c.tx) * (1 - c.ty)) + v01 * (c.tx * (1 - c.ty)) + v10 * ((1 - c.tx) * c.ty) +
           v11 * (c.tx * c.ty);
}

Vec2 eval_sinusoid(const SinusoidField& f, Vec2 p) {
    Vec2 v;
    for (const SinusoidMode& m : f.modes) {
        const double arg = dot(m.wavevector, p);
        v.x += m.amplitude.x * std::sin(arg + m.phase.x);
        v.y += m.amplitude.y * std::sin(arg + m.phase.y);
    }
    return v * f.scale;
}

}  // namespace

Vec2 ErrorField::systematic(Vec2 p) const {
    struct Visitor {
        Vec2 p;
        Vec2 operator()(const ZeroField&) const { return {}; }
        Vec2 operator()(const ConstantField& f) const { return f.offset; }
        Vec2 operator()(const AffineField& f) const {
            return {f.a[0] * p.x + f.a[1] * p.y + f.b.x, f.a[2] * p.x + f.a[3] * p.y + f.b.y};
        }
        Vec2 operator()(const SinusoidField& f) const { return eval_sinusoid(f, p); }
        Vec2 operator()(const GridField& f) const {
            const CellCoord c = locate(f.grid, p);
            return blend(c, [&](int r, int col) { return f.values[static_cast<std::size_t>(r * f.grid.cols + col)]; });
        }
    };
    return std::visit(Visitor{p}, shape);
}

Vec2 ErrorField::roll_coupling(double roll_deg) const {
    const double r = wrap_angle(roll_deg, 180.0);
    if (r <= 90.0) {
        const double w = r / 90.0;
        return roll_offset_0 * (1.0 - w) + roll_offset_90 * w;
    }
    const double w = (r - 90.0) / 90.0;
    return roll_offset_90 * (1.0 - w) + roll_offset_0 * w;
}

bool ErrorField::is_zero() const {
    return std::holds_alternative<ZeroField>(shape) && jitter_sd == 0.0 && roll_offset_0 == Vec2{} &&
           roll_offset_90 == Vec2{} && grip_slip_sd_deg == 0.0;
}

SinusoidField make_sinusoid_field(double e_sys, Vec2 board_size, std::uint64_t seed) {
    SinusoidField field;
    if (!(e_sys > 0.0)) {
        field.scale = 0.0;
        return field;
    }
    Rng rng = make_rng(seed, "calibration.field");
    std::uniform_int_distribution<int> count(3, 5);
    std::uniform_real_distribution<double> wavelength(120.0, 240.0);
    std::uniform_real_distribution<double> direction(0.0, 360.0);
    std::uniform_real_distribution<double> amplitude(0.5, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        SinusoidMode m;
        const double k = 2.0 * std::numbers::pi / wavelength(rng);
        m.wavevector = unit_at(direction(rng)) * k;
        m.amplitude = {amplitude(rng), amplitude(rng)};
        m.phase = {phase(rng), phase(rng)};
        field.modes.push_back(m);
    }
    double peak = 0.0;
    const int nx = static_cast<int>(std::ceil(board_size.x / kFieldSampleStep));
    const int ny = static_cast<int>(std::ceil(board_size.y / kFieldSampleStep));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const Vec2 p{std::min(i * kFieldSampleStep, board_size.x), std::min(j * kFieldSampleStep, board_size.y)};
            peak = std::max(peak, norm(eval_sinusoid(field, p)));
        }
    }
    field.scale = peak > 0.0 ? e_sys / peak : 0.0;
    return field;
}

ErrorField make_error_field(const ArmErrorModel& model, Vec2 board_size, std::uint64_t seed) {
    if (!(model.e_sys >= 0.0 && model.jitter_sd >= 0.0 && model.roll_offset_mm >= 0.0 &&
          model.grip_slip_sd_deg >= 0.0)) {
        throw ConfigError("error model magnitudes must be non-negative");
    }
    ErrorField field;
    if (model.e_sys > 0.0) {
        field.shape = make_sinusoid_field(model.e_sys, board_size, seed);
    }
    field.jitter_sd = model.jitter_sd;
    Rng rng = make_rng(seed, "calibration.roll");
    std::uniform_real_distribution<double> direction(0.0, 360.0);
    field.roll_offset_0 = {};
    field.roll_offset_90 = unit_at(direction(rng)) * model.roll_offset_mm;
    field.grip_slip_sd_deg = model.grip_slip_sd_deg;
    field.seed = seed;
    return field;
}

void CalibrationTable::validate() const {
    if (grid.rows < 2 || grid.cols < 2 || !(grid.cell > 0.0)) {
        throw ConfigError("calibration grid needs at least 2x2 corners and a positive cell");
    }
    if (entries.size() != static_cast<std::size_t>(grid.rows) * static_cast<std::size_t>(grid.cols)) {
        throw ConfigError("calibration table is not fully populated");
    }
}

CalibrationSet generate_calibration(ArmSide arm, const ErrorField& field, const GridSpec& grid, Vec2 board_size) {
    if (grid.rows < 2 || grid.cols < 2 || !(grid.cell > 0.0)) {
        throw ConfigError("calibration grid needs at least 2x2 corners and a positive cell");
    }
    const Vec2 hi = grid.extent_max();
    if (grid.origin.x < -kGridTolerance || grid.origin.y < -kGridTolerance || hi.x > board_size.x + kGridTolerance ||
        hi.y > board_size.y + kGridTolerance) {
        throw ConfigError("calibration grid extends beyond the reachable board");
    }
    CalibrationSet set;
    set.arm = arm;
    for (double roll : {0.0, 90.0}) {
        CalibrationTable table;
        table.arm = arm;
        table.roll_deg = roll;
        table.grid = grid;
        const std::uint64_t stream = (arm == ArmSide::Left ? 0u : 2u) + (roll == 0.0 ? 0u : 1u);
        Rng rng = make_rng(field.seed, "calibration.record", stream);
        std::normal_distribution<double> jitter(0.0, 1.0);
        const Vec2 coupling = field.roll_coupling(roll);
        for (int r = 0; r < grid.rows; ++r) {
            for (int c = 0; c < grid.cols; ++c) {
                const Vec2 corner = grid.corner(r, c);
                Vec2 achieved = corner + field.systematic(corner) + coupling;
                if (field.jitter_sd > 0.0) {
                    achieved += Vec2{jitter(rng), jitter(rng)} * field.jitter_sd;
                }
                table.entries.push_back(achieved);
            }
        }
        (roll == 0.0 ? set.roll0 : set.roll90) = std::move(table);
    }
    return set;
}

Vec2 interpolated_offset(const CalibrationTable& table, Vec2 p) {
    const CellCoord c = locate(table.grid, p, true);
    return blend(c, [&](int r, int col) { return table.entry(r, col) - table.grid.corner(r, col); });
}

Vec2 bilinear(const CalibrationTable& table, Vec2 target) {
    table.validate();
    if (!table.grid.contains(target)) {
        throw ExtrapolationError("target (" + std::to_string(target.x) + ", " + std::to_string(target.y) +
                                 ") lies outside the calibration grid");
    }
    const CellCoord c = locate(table.grid, target);
    return target + blend(c, [&](int r, int col) { return table.correction(r, col); });
}

CalibrationTable roll_interp(const CalibrationTable& at0, const CalibrationTable& at90, double roll_deg) {
    if (!(at0.grid == at90.grid) || at0.entries.size() != at90.entries.size()) {
        throw ConfigError("roll_interp: tables have mismatched grids");
    }
    if (!(roll_deg >= 0.0 && roll_deg <= 90.0)) {
        throw ConfigError("roll_interp: roll must lie in [0, 90]");
    }
    if (roll_deg == 0.0) {
        return at0;
    }
    if (roll_deg == 90.0) {
        return at90;
    }
    const double w = roll_deg / 90.0;
    CalibrationTable out = at0;
    out.roll_deg = roll_deg;
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        out.entries[i] = at0.entries[i] * (1.0 - w) + at90.entries[i] * w;
    }
    return out;
}

CalibrationTable table_for_roll(const CalibrationSet& set, double roll_deg) {
    const double r = wrap_angle(roll_deg, 180.0);
    if (r <= 90.0) {
        return roll_interp(set.roll0, set.roll90, r);
    }
    // Roll 180 is mechanically roll 0, so (90, 180) blends the 90 table back to 0.
    CalibrationTable t = roll_interp(set.roll90, set.roll0, r - 90.0);
    t.roll_deg = r;
    return t;
}

Vec2 calibrated_command(Vec2 target, const CalibrationTable& table) {
    table.validate();
    if (!table.grid.contains(target)) {
        throw ExtrapolationError("target (" + std::to_string(target.x) + ", " + std::to_string(target.y) +
                                 ") lies outside the calibration grid");
    }
    // Solve c + offset(c) = target by fixed-point iteration; the offset map is a
    // contraction for smooth fields. Commands just outside the grid use the border
    // cell's linear continuation.
    Vec2 c = target;
    for (int it = 0; it < 100; ++it) {
        const Vec2 next = target - interpolated_offset(table, c);
        const double step = norm(next - c);
        c = next;
        if (step < 1e-13) {
            break;
        }
    }
    return c;
}

Vec2 command_position(Vec2 target, double roll_deg, const CalibrationSet* calib, const ErrorField& field, Rng& rng) {
    Vec2 command = target;
    if (calib != nullptr) {
        command = calibrated_command(target, table_for_roll(*calib, roll_deg));
    }
    Vec2 achieved = command + field.systematic(command) + field.roll_coupling(roll_deg);
    if (field.jitter_sd > 0.0) {
        std::normal_distribution<double> jitter(0.0, field.jitter_sd);
        achieved += Vec2{jitter(rng), jitter(rng)};
    }
    return achieved;
}

Vec2 command_position(Vec2 target, double roll_deg, const CalibrationSet* calib, const ErrorField& field,
                      std::uint64_t seed) {
    Rng rng = make_rng(seed, "calibration.command");
    return command_position(target, roll_deg, calib, field, rng);
}

}  // namespace pegtransfer

namespace pegtransfer {

ResidualSummary residual_summary(const ErrorField& field, const CalibrationSet* calib, const GridSpec& grid,
                                 int n_targets, std::uint64_t seed) {
    if (n_targets < 1) {
        throw ConfigError("residual summary needs at least one target");
    }
    Rng target_rng = make_rng(seed, "residual.target");
    Rng exec_rng = make_rng(seed, "residual.exec");
    const Vec2 hi = grid.extent_max();
    std::uniform_real_distribution<double> ux(grid.origin.x, hi.x), uy(grid.origin.y, hi.y), roll(0.0, 90.0);
    std::vector<double> err;
    err.reserve(static_cast<std::size_t>(n_targets));
    for (int i = 0; i < n_targets; ++i) {
        const Vec2 t{ux(target_rng), uy(target_rng)};
        const double r = roll(target_rng);
        err.push_back(distance(command_position(t, r, calib, field, exec_rng), t));
    }
    std::sort(err.begin(), err.end());
    ResidualSummary s;
    s.targets = n_targets;
    for (double e : err) {
        s.mean_mm += e;
    }
    s.mean_mm /= n_targets;
    const auto idx = static_cast<std::size_t>(std::ceil(0.95 * n_targets)) - 1;
    s.p95_mm = err[idx];
    s.max_mm = err.back();
    return s;
}

}  // namespace pegtransfer
