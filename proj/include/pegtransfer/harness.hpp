#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "pegtransfer/calibration.hpp"
#include "pegtransfer/executor.hpp"

namespace pegtransfer {

using Rational = boost::rational<std::int64_t>;

/// Decimal rendering rounded half-up at `digits` places, computed exactly.
std::string format_fixed(const Rational& r, int digits = 3);

struct StatsTable {
    Mode mode = Mode::Single;
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    std::int64_t pick_failures = 0;
    std::int64_t stuck_failures = 0;
    std::int64_t fall_failures = 0;
    std::int64_t corrected_stuck = 0;

    Rational success_rate;
    Rational pick_fraction;
    Rational stuck_fraction;
    Rational fall_fraction;
    Rational corrected_success_rate;
    double mean_attempt_s = 0.0;

    int episodes = 0;
    double episode_time_mean_s = 0.0;
    double episode_time_sd_s = 0.0;

    /// "0.869 (205/236)" style cell.
    std::string success_cell() const;
    /// Table row: mode, success, time, pick, stuck, fall.
    std::string row() const;
};

/// Throws std::invalid_argument on empty input or mixed modes. Result does not
/// depend on record order.
StatsTable aggregate(std::span<const AttemptRecord> records, std::span<const double> episode_times = {});

struct BatchConfig {
    EpisodeSetup setup;
    ArmErrorModel error;
    bool zero_error = false;
    bool calibrated = true;
    double grid_mm = 16.0;
    int threads = 1;
};

struct BatchResult {
    StatsTable stats;
    std::vector<EpisodeReport> episodes;  // in seed order
    std::vector<AttemptRecord> records;   // episode order, then attempt order
};

/// Arm models for a batch: one error field per arm, fixed for the whole batch,
/// plus calibration tables recorded against it when requested.
void prepare_arms(BatchConfig& config, std::uint64_t base_seed);

/// Runs episodes with seeds base_seed .. base_seed + n - 1 (episode ids 0 .. n - 1).
/// Results are identical for any thread count.
BatchResult run_batch(int n_episodes, Mode mode, const BatchConfig& config, std::uint64_t base_seed);

}  // namespace pegtransfer
