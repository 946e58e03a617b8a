// Python bindings: scenes and depth renders as numpy arrays, detection, batches
// and log aggregation. JSON-shaped results are returned as Python dicts.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pegtransfer/errors.hpp"
#include "pegtransfer/harness.hpp"
#include "pegtransfer/io.hpp"

namespace py = pybind11;
using namespace pegtransfer;

namespace {

py::object to_py(const Json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

Json from_py(const py::object& o) {
    return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict stats_dict(const StatsTable& t) {
    py::dict d;
    d["mode"] = to_string(t.mode);
    d["attempts"] = t.attempts;
    d["successes"] = t.successes;
    d["pick_failures"] = t.pick_failures;
    d["stuck_failures"] = t.stuck_failures;
    d["fall_failures"] = t.fall_failures;
    d["corrected_stuck"] = t.corrected_stuck;
    d["success_rate"] = format_fixed(t.success_rate);
    d["pick_fraction"] = format_fixed(t.pick_fraction);
    d["stuck_fraction"] = format_fixed(t.stuck_fraction);
    d["fall_fraction"] = format_fixed(t.fall_fraction);
    d["corrected_success_rate"] = format_fixed(t.corrected_success_rate);
    d["mean_attempt_s"] = t.mean_attempt_s;
    d["episodes"] = t.episodes;
    d["episode_time_mean_s"] = t.episode_time_mean_s;
    d["episode_time_sd_s"] = t.episode_time_sd_s;
    d["row"] = t.row();
    return d;
}

BatchConfig make_config(double error_mm, double noise_sd, double dropout, bool calibrated, bool zero_error,
                        double grid_mm, int threads) {
    BatchConfig cfg;
    cfg.error.e_sys = error_mm;
    cfg.setup.camera.noise_sd = noise_sd;
    cfg.setup.camera.dropout_prob = dropout;
    cfg.calibrated = calibrated;
    cfg.zero_error = zero_error;
    cfg.grid_mm = grid_mm;
    cfg.threads = threads;
    cfg.setup.camera.validate();
    return cfg;
}

py::array_t<float> depth_array(const DepthImage& img) {
    py::array_t<float> out({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

DepthImage depth_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a, double pitch) {
    if (a.ndim() != 2) {
        throw ConfigError("depth image must be two-dimensional");
    }
    DepthImage img;
    img.height = static_cast<int>(a.shape(0));
    img.width = static_cast<int>(a.shape(1));
    img.pixel_pitch = pitch;
    img.data.assign(a.data(), a.data() + a.size());
    return img;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Peg-transfer simulator core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SafetyFault>(m, "SafetyFault", PyExc_RuntimeError);
    py::register_exception<RenderError>(m, "RenderError", PyExc_RuntimeError);
    py::register_exception<ExtrapolationError>(m, "ExtrapolationError", PyExc_ValueError);

    m.def("standard_workspace", [](double pitch) { return to_py(to_json(WorkspaceConfig::standard(pitch))); },
          py::arg("pitch_mm") = 40.0);

    m.def(
        "init_episode",
        [](std::uint64_t seed, py::object workspace) {
            const WorkspaceConfig ws =
                workspace.is_none() ? WorkspaceConfig::standard() : workspace_from_json(from_py(workspace));
            return to_py(to_json(init_episode(ws, seed)));
        },
        py::arg("seed"), py::arg("workspace") = py::none());

    m.def(
        "render_depth",
        [](const py::object& scene, std::uint64_t seed, double noise_sd, double dropout) {
            const Scene s = scene_from_json(from_py(scene));
            CameraConfig cam = CameraConfig::covering(s.config);
            cam.noise_sd = noise_sd;
            cam.dropout_prob = dropout;
            return depth_array(render_depth(s, cam, seed));
        },
        py::arg("scene"), py::arg("seed") = 0, py::arg("noise_sd") = 0.5, py::arg("dropout") = 0.02,
        "Depth image (rows = v, columns = u) in mm; NaN marks dropout.");

    m.def(
        "detect_blocks",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& depth, int n, int k) {
            const WorkspaceConfig ws = WorkspaceConfig::standard();
            const CameraConfig cam = CameraConfig::covering(ws);
            DepthImage img = depth_from_array(depth, cam.pixel_pitch());
            img.origin_mm = cam.origin_mm;
            const MaskSet masks = make_masks(ws, cam, k);
            std::vector<Detection> found;
            try {
                found = detect_blocks(img, n, masks, block_top_band(ws, cam));
            } catch (const NotEnoughBlocks& e) {
                found = e.partial();
            }
            Json out = to_json(found);
            for (std::size_t i = 0; i < found.size(); ++i) {
                const Vec2 b = detection_to_board(found[i], img);
                out[i]["board_mm"] = {b.x, b.y};
            }
            return to_py(out);
        },
        py::arg("depth"), py::arg("n") = kBlockCount, py::arg("k") = 30,
        "Blocks on a standard-board depth image; fewer than n entries when the floor is reached.");

    m.def(
        "run_batch",
        [](int episodes, const std::string& mode, std::uint64_t seed, double error_mm, double noise_sd, double dropout,
           bool calibrated, bool zero_error, double grid_mm, int threads) {
            const BatchConfig cfg = make_config(error_mm, noise_sd, dropout, calibrated, zero_error, grid_mm, threads);
            BatchResult r;
            {
                py::gil_scoped_release release;
                r = run_batch(episodes, parse_mode(mode), cfg, seed);
            }
            std::ostringstream csv;
            write_records_csv(csv, r.records);
            py::list eps;
            for (const EpisodeReport& ep : r.episodes) {
                eps.append(to_py(episode_summary(ep)));
            }
            py::dict d;
            d["stats"] = stats_dict(r.stats);
            d["episodes"] = eps;
            d["csv"] = csv.str();
            return d;
        },
        py::arg("episodes"), py::arg("mode") = "single", py::arg("seed") = 1, py::arg("error_mm") = 4.0,
        py::arg("noise_sd") = 0.5, py::arg("dropout") = 0.02, py::arg("calibrated") = true,
        py::arg("zero_error") = false, py::arg("grid_mm") = 16.0, py::arg("threads") = 1);

    m.def(
        "aggregate_csv",
        [](const std::string& text) {
            std::istringstream in(text);
            const std::vector<AttemptRecord> rec = read_records_csv(in);
            return stats_dict(aggregate(rec));
        },
        py::arg("text"));

    m.def(
        "calibration_report",
        [](std::uint64_t seed, double error_mm, double grid_mm, int targets) {
            BatchConfig cfg = make_config(error_mm, 0.0, 0.0, true, false, grid_mm, 1);
            prepare_arms(cfg, seed);
            const GridSpec grid = GridSpec::covering(cfg.setup.workspace.board_size, grid_mm);
            py::dict out;
            for (const ArmContext* arm : {&cfg.setup.left, &cfg.setup.right}) {
                const ResidualSummary raw = residual_summary(arm->field, nullptr, grid, targets, seed);
                const ResidualSummary cal = residual_summary(arm->field, &*arm->calibration, grid, targets, seed);
                py::dict d;
                d["uncalibrated"] = py::make_tuple(raw.mean_mm, raw.p95_mm, raw.max_mm);
                d["calibrated"] = py::make_tuple(cal.mean_mm, cal.p95_mm, cal.max_mm);
                out[py::str(to_string(arm->arm.side))] = d;
            }
            return out;
        },
        py::arg("seed") = 1, py::arg("error_mm") = 4.0, py::arg("grid_mm") = 16.0, py::arg("targets") = 1000,
        "Mean, p95 and max position error (mm) per arm, with and without calibration.");
}
