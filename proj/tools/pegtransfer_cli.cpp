// Command-line front end: run batches, record calibration tables, dump renders,
// aggregate logs.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pegtransfer/errors.hpp"
#include "pegtransfer/harness.hpp"
#include "pegtransfer/io.hpp"

namespace fs = std::filesystem;
using namespace pegtransfer;

namespace {

struct Options {
    std::string mode = "single";
    int episodes = 20;
    std::uint64_t seed = 1;
    double error_mm = 4.0;
    double noise_sd = 0.5;
    double dropout = 0.02;
    double grid_mm = 16.0;
    double jitter_mm = 0.3;
    double slip_deg = 18.0;
    std::string out;
    int threads = 1;
    bool uncalibrated = false;
    bool zero_error = false;
    bool open_before_descent = false;
    bool traces = false;
    bool no_overlap = false;
    int targets = 1000;
    std::string csv;
};

BatchConfig batch_config(const Options& o) {
    BatchConfig cfg;
    cfg.setup.camera.noise_sd = o.noise_sd;
    cfg.setup.camera.dropout_prob = o.dropout;
    cfg.setup.motion.open_before_descent = o.open_before_descent;
    cfg.setup.timing.bilateral_overlap = !o.no_overlap;
    cfg.setup.record_traces = o.traces;
    cfg.error.e_sys = o.error_mm;
    cfg.error.jitter_sd = o.jitter_mm;
    cfg.error.grip_slip_sd_deg = o.slip_deg;
    cfg.zero_error = o.zero_error;
    cfg.calibrated = !o.uncalibrated;
    cfg.grid_mm = o.grid_mm;
    cfg.threads = o.threads;
    if (o.error_mm < 0.0 || o.jitter_mm < 0.0 || o.slip_deg < 0.0) {
        throw ConfigError("error magnitudes must be non-negative");
    }
    if (o.episodes < 1) {
        throw ConfigError("--episodes must be at least 1");
    }
    cfg.setup.camera.validate();
    return cfg;
}

fs::path out_dir(const Options& o) {
    fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + p.string());
    }
    f << s;
}

void print_stats(std::ostream& os, const StatsTable& t) {
    os << "mode | success | time (s) | pick | stuck | fall\n" << t.row() << "\n";
    os << "corrected success: " << format_fixed(t.corrected_success_rate) << " ("
       << (t.successes + t.corrected_stuck) << "/" << t.attempts << ")\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "episode time: %.1f +/- %.1f s over %d episodes\n", t.episode_time_mean_s,
                  t.episode_time_sd_s, t.episodes);
    os << buf;
}

int cmd_run(const Options& o) {
    const BatchConfig cfg = batch_config(o);
    const BatchResult r = run_batch(o.episodes, parse_mode(o.mode), cfg, o.seed);
    std::ostringstream csv;
    write_records_csv(csv, r.records);
    if (o.out.empty()) {
        std::cout << csv.str();
        print_stats(std::cerr, r.stats);
        return 0;
    }
    const fs::path dir = out_dir(o);
    write_text(dir / "attempts.csv", csv.str());
    Json summaries = Json::array();
    for (const EpisodeReport& ep : r.episodes) {
        summaries.push_back(episode_summary(ep));
    }
    write_text(dir / "episodes.json", summaries.dump(2) + "\n");
    if (o.traces) {
        Json traces = Json::array();
        for (const EpisodeReport& ep : r.episodes) {
            Json per = Json::array();
            for (const Trace& t : ep.traces) {
                per.push_back(to_json(t));
            }
            traces.push_back({{"episode_id", ep.episode_id}, {"attempts", per}});
        }
        write_text(dir / "traces.json", traces.dump() + "\n");
    }
    print_stats(std::cout, r.stats);
    return 0;
}

int cmd_calibrate(const Options& o) {
    BatchConfig cfg = batch_config(o);
    cfg.zero_error = false;
    cfg.calibrated = true;
    prepare_arms(cfg, o.seed);
    const fs::path dir = out_dir(o);
    const GridSpec grid = GridSpec::covering(cfg.setup.workspace.board_size, o.grid_mm);
    std::printf("arm   | uncalibrated mean/p95/max (mm) | calibrated mean/p95/max (mm)\n");
    for (const ArmContext* arm : {&cfg.setup.left, &cfg.setup.right}) {
        const CalibrationSet& set = *arm->calibration;
        const std::string side = arm->arm.side == ArmSide::Left ? "left" : "right";
        write_text(dir / ("calibration_" + side + "_roll0.json"), to_json(set.roll0).dump(2) + "\n");
        write_text(dir / ("calibration_" + side + "_roll90.json"), to_json(set.roll90).dump(2) + "\n");
        const ResidualSummary raw = residual_summary(arm->field, nullptr, grid, o.targets, o.seed);
        const ResidualSummary cal = residual_summary(arm->field, &set, grid, o.targets, o.seed);
        std::printf("%-5s | %.2f / %.2f / %.2f             | %.2f / %.2f / %.2f\n", side.c_str(), raw.mean_mm,
                    raw.p95_mm, raw.max_mm, cal.mean_mm, cal.p95_mm, cal.max_mm);
    }
    return 0;
}

int cmd_render(const Options& o) {
    const BatchConfig cfg = batch_config(o);
    const EpisodeSetup& setup = cfg.setup;
    const Scene scene = init_episode(setup.workspace, o.seed);
    const DepthImage image = render_depth(scene, setup.camera, derive_seed(o.seed, "cli.render"));
    const fs::path dir = out_dir(o);
    write_raster((dir / "depth").string(), image);
    write_pgm16((dir / "depth.pgm").string(), image);
    write_text(dir / "scene.json", to_json(scene).dump(2) + "\n");

    const EpisodeRunner runner(setup);
    std::vector<Detection> blocks;
    try {
        blocks = detect_blocks(image, kBlockCount, runner.masks(), block_top_band(setup.workspace, setup.camera));
    } catch (const NotEnoughBlocks& e) {
        blocks = e.partial();
        std::cerr << "warning: only " << e.found() << " of 6 blocks detected\n";
    }
    OverlayMarks marks;
    const ArmId arm = ArmId::right(setup.workspace);
    for (Vec2 p : runner.pegs()) {
        marks.pegs.push_back(setup.camera.board_to_pixel(p));
    }
    for (const Detection& d : blocks) {
        const BlockPose pose{detection_to_board(d, image), d.theta_deg};
        int nearest = 0;
        for (int p = 1; p < kPegsPerHalf; ++p) {
            if (distance(runner.pegs()[static_cast<std::size_t>(p)], pose.center) <
                distance(runner.pegs()[static_cast<std::size_t>(nearest)], pose.center)) {
                nearest = p;
            }
        }
        const GraspCandidate g =
            plan_grasp(pose, arm, runner.pegs()[static_cast<std::size_t>(nearest)], setup.workspace.block_edge);
        marks.grasps.push_back(setup.camera.board_to_pixel(g.point));
        marks.places.push_back(
            setup.camera.board_to_pixel(runner.pegs()[static_cast<std::size_t>(WorkspaceConfig::mirror_peg(nearest))]));
    }
    marks.blocks = blocks;
    write_overlay_ppm((dir / "overlay.ppm").string(), image, marks);
    write_text(dir / "detections.json", to_json(blocks).dump(2) + "\n");
    std::cout << "detected " << blocks.size() << " blocks; wrote " << dir.string() << "\n";
    return 0;
}

int cmd_stats(const Options& o) {
    std::ifstream f(o.csv);
    if (!f) {
        throw ConfigError("cannot open " + o.csv);
    }
    const std::vector<AttemptRecord> records = read_records_csv(f);
    if (records.empty()) {
        throw ConfigError("no attempt records in " + o.csv);
    }
    print_stats(std::cout, aggregate(records));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peg-transfer simulator"};
    app.set_config("--config", "", "Key-value config file (key = value per line); flags override it");
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--mode", o.mode, "single or bilateral")->check(CLI::IsMember({"single", "bilateral"}));
    app.add_option("--episodes", o.episodes, "Number of episodes");
    app.add_option("--seed", o.seed, "Base seed");
    app.add_option("--error-mm", o.error_mm, "Max systematic actuation error e_sys");
    app.add_option("--noise-sd", o.noise_sd, "Depth noise sd (mm)");
    app.add_option("--dropout", o.dropout, "Depth dropout probability");
    app.add_option("--grid-mm", o.grid_mm, "Calibration grid cell (mm)");
    app.add_option("--jitter-mm", o.jitter_mm, "Per-command jitter sd (mm)");
    app.add_option("--slip-deg", o.slip_deg, "Grip slip sd (degrees)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--threads", o.threads, "Worker threads");
    app.add_option("--targets", o.targets, "Random targets for the residual report");
    app.add_flag("--uncalibrated", o.uncalibrated, "Run without calibration tables");
    app.add_flag("--zero-error", o.zero_error, "Perfect actuation");
    app.add_flag("--open-before-descent", o.open_before_descent, "Open the jaw above the block (unsafe)");
    app.add_flag("--traces", o.traces, "Dump waypoint traces");
    app.add_flag("--no-overlap", o.no_overlap, "Run bilateral phases back to back");

    CLI::App* run = app.add_subcommand("run", "Run a batch of episodes");
    CLI::App* calibrate = app.add_subcommand("calibrate", "Record calibration tables and report residuals");
    CLI::App* render = app.add_subcommand("render", "Render a depth image and detection overlay for a seed");
    CLI::App* stats = app.add_subcommand("stats", "Aggregate an attempt CSV");
    stats->add_option("csv", o.csv, "Attempt log")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        if (run->parsed()) {
            return cmd_run(o);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(o);
        }
        if (render->parsed()) {
            return cmd_render(o);
        }
        if (stats->parsed()) {
            return cmd_stats(o);
        }
    } catch (const SafetyFault& e) {
        std::cerr << "safety fault: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
