#include "pegtransfer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pegtransfer/errors.hpp"
#include "pegtransfer/random.hpp"

namespace pegtransfer {

std::string format_fixed(const Rational& r, int digits) {
    if (digits < 0 || digits > 15) {
        throw std::invalid_argument("format_fixed: digits must lie in [0, 15]");
    }
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) {
        scale *= 10;
    }
    const bool negative = r < 0;
    const Rational scaled = (negative ? -r : r) * scale + Rational(1, 2);
    const std::int64_t q = scaled.numerator() / scaled.denominator();
    std::string out = (negative && q != 0 ? "-" : "") + std::to_string(q / scale);
    if (digits > 0) {
        std::string frac = std::to_string(q % scale);
        frac.insert(frac.begin(), static_cast<std::size_t>(digits) - frac.size(), '0');
        out += "." + frac;
    }
    return out;
}

std::string StatsTable::success_cell() const {
    return format_fixed(success_rate) + " (" + std::to_string(successes) + "/" + std::to_string(attempts) + ")";
}

std::string StatsTable::row() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << to_string(mode) << " | " << success_cell() << " | " << mean_attempt_s << " | " << format_fixed(pick_fraction)
       << " | " << format_fixed(stuck_fraction) << " | " << format_fixed(fall_fraction);
    return os.str();
}

namespace {

double sorted_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

StatsTable aggregate(std::span<const AttemptRecord> records, std::span<const double> episode_times) {
    if (records.empty()) {
        throw std::invalid_argument("aggregate needs at least one attempt record");
    }
    StatsTable t;
    t.mode = records.front().mode;
    std::vector<double> durations;
    durations.reserve(records.size());
    std::map<int, double> per_episode;
    std::map<int, std::vector<double>> per_episode_parts;
    for (const AttemptRecord& r : records) {
        if (r.mode != t.mode) {
            throw std::invalid_argument("aggregate needs records of a single mode");
        }
        ++t.attempts;
        switch (r.result) {
            case AttemptResult::Success:
                ++t.successes;
                break;
            case AttemptResult::PickFail:
                ++t.pick_failures;
                break;
            case AttemptResult::PlaceStuck:
                ++t.stuck_failures;
                if (r.corrected_later) {
                    ++t.corrected_stuck;
                }
                break;
            case AttemptResult::PlaceFall:
                ++t.fall_failures;
                break;
        }
        durations.push_back(r.duration_s);
        per_episode_parts[r.episode_id].push_back(r.duration_s);
    }
    t.success_rate = Rational(t.successes, t.attempts);
    t.pick_fraction = Rational(t.pick_failures, t.attempts);
    t.stuck_fraction = Rational(t.stuck_failures, t.attempts);
    t.fall_fraction = Rational(t.fall_failures, t.attempts);
    t.corrected_success_rate = Rational(t.successes + t.corrected_stuck, t.attempts);
    t.mean_attempt_s = sorted_sum(durations) / static_cast<double>(t.attempts);

    std::vector<double> times(episode_times.begin(), episode_times.end());
    if (times.empty()) {
        for (auto& [id, parts] : per_episode_parts) {
            times.push_back(sorted_sum(parts));
        }
    }
    std::sort(times.begin(), times.end());
    t.episodes = static_cast<int>(times.size());
    const double n = static_cast<double>(times.size());
    t.episode_time_mean_s = sorted_sum(times) / n;
    if (times.size() > 1) {
        std::vector<double> sq;
        for (double x : times) {
            sq.push_back((x - t.episode_time_mean_s) * (x - t.episode_time_mean_s));
        }
        t.episode_time_sd_s = std::sqrt(sorted_sum(sq) / (n - 1.0));
    }
    return t;
}

void prepare_arms(BatchConfig& config, std::uint64_t base_seed) {
    const WorkspaceConfig& ws = config.setup.workspace;
    const GridSpec grid = GridSpec::covering(ws.board_size, config.grid_mm);
    auto build = [&](ArmContext& ctx, ArmId id, const char* tag) {
        ctx.arm = id;
        ctx.field = config.zero_error ? ErrorField::none()
                                      : make_error_field(config.error, ws.board_size, derive_seed(base_seed, tag));
        ctx.calibration.reset();
        if (config.calibrated && !config.zero_error) {
            ctx.calibration = generate_calibration(id.side, ctx.field, grid, ws.board_size);
        }
    };
    build(config.setup.left, ArmId::left(ws), "arm.left");
    build(config.setup.right, ArmId::right(ws), "arm.right");
}

BatchResult run_batch(int n_episodes, Mode mode, const BatchConfig& config, std::uint64_t base_seed) {
    if (n_episodes < 1) {
        throw ConfigError("run_batch needs at least one episode");
    }
    if (config.threads < 1) {
        throw ConfigError("thread count must be at least 1");
    }
    BatchConfig prepared = config;
    prepare_arms(prepared, base_seed);
    const EpisodeRunner runner(prepared.setup);

    BatchResult result;
    result.episodes.resize(static_cast<std::size_t>(n_episodes));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_episodes));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next++; i < n_episodes; i = next++) {
            try {
                result.episodes[static_cast<std::size_t>(i)] =
                    runner.run(mode, i, base_seed + static_cast<std::uint64_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int n_threads = std::min(config.threads, n_episodes);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }
    // Report the first failure in seed order so errors are deterministic too.
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<double> times;
    for (const EpisodeReport& ep : result.episodes) {
        result.records.insert(result.records.end(), ep.records.begin(), ep.records.end());
        times.push_back(ep.wall_time_s);
    }
    result.stats = aggregate(result.records, times);
    return result;
}

}  // namespace pegtransfer
