#include "pegtransfer/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pegtransfer/errors.hpp"

namespace pegtransfer {

namespace {

Json point(Vec2 p) { return Json::array({p.x, p.y}); }

Vec2 point_from(const Json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError("expected a two-element point");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Json status_json(const BlockStatus& s) {
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, OnPeg>) {
                return {{"kind", "OnPeg"}, {"peg", v.peg}};
            } else if constexpr (std::is_same_v<T, StuckOn>) {
                return {{"kind", "StuckOn"}, {"peg", v.peg}};
            } else if constexpr (std::is_same_v<T, Fallen>) {
                return {{"kind", "Fallen"}, {"point_mm", point(v.point)}};
            } else {
                return {{"kind", "Held"}, {"arm", to_string(v.arm)}};
            }
        },
        s);
}

BlockStatus status_from(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "OnPeg") {
        return OnPeg{j.at("peg").get<int>()};
    }
    if (kind == "StuckOn") {
        return StuckOn{j.at("peg").get<int>()};
    }
    if (kind == "Fallen") {
        return Fallen{point_from(j.at("point_mm"))};
    }
    if (kind == "Held") {
        return Held{parse_arm(j.at("arm").get<std::string>())};
    }
    throw ConfigError("unknown block status '" + kind + "'");
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot open '" + path + "' for writing");
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

Json to_json(const WorkspaceConfig& c) {
    Json pegs = Json::array();
    for (Vec2 p : c.peg_positions) {
        pegs.push_back(point(p));
    }
    return {{"board_size_mm", point(c.board_size)}, {"peg_positions_mm", pegs},
            {"peg_height_mm", c.peg_height},        {"peg_radius_mm", c.peg_radius},
            {"block_edge_mm", c.block_edge},        {"block_height_mm", c.block_height},
            {"hole_span_mm", {c.hole_span_min, c.hole_span_max}},
            {"height_jitter_sd_mm", c.height_jitter_sd}};
}

WorkspaceConfig workspace_from_json(const Json& j) {
    WorkspaceConfig c;
    c.board_size = point_from(j.at("board_size_mm"));
    for (const Json& p : j.at("peg_positions_mm")) {
        c.peg_positions.push_back(point_from(p));
    }
    c.peg_height = j.at("peg_height_mm").get<double>();
    c.peg_radius = j.at("peg_radius_mm").get<double>();
    c.block_edge = j.at("block_edge_mm").get<double>();
    c.block_height = j.at("block_height_mm").get<double>();
    c.hole_span_min = j.at("hole_span_mm").at(0).get<double>();
    c.hole_span_max = j.at("hole_span_mm").at(1).get<double>();
    c.height_jitter_sd = j.at("height_jitter_sd_mm").get<double>();
    return c;
}

Json to_json(const Scene& scene) {
    Json blocks = Json::array();
    for (const BlockState& b : scene.blocks) {
        blocks.push_back({{"id", b.id},
                          {"center_mm", point(b.center)},
                          {"yaw_deg", b.yaw_deg},
                          {"status", status_json(b.status)},
                          {"vertex_heights_mm", b.vertex_heights},
                          {"seat_height_mm", b.seat_height}});
    }
    return {{"config", to_json(scene.config)}, {"blocks", blocks}, {"rng_seed", scene.rng_seed}};
}

Scene scene_from_json(const Json& j) {
    Scene s;
    s.config = workspace_from_json(j.at("config"));
    s.rng_seed = j.value("rng_seed", std::uint64_t{0});
    const Json& blocks = j.at("blocks");
    if (!blocks.is_array() || blocks.size() != kBlockCount) {
        throw ConfigError("a scene holds exactly 6 blocks");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Json& b = blocks[i];
        BlockState& out = s.blocks[i];
        out.id = b.at("id").get<int>();
        out.center = point_from(b.at("center_mm"));
        out.yaw_deg = b.at("yaw_deg").get<double>();
        out.status = status_from(b.at("status"));
        out.vertex_heights = b.at("vertex_heights_mm").get<std::array<double, 3>>();
        out.seat_height = b.value("seat_height_mm", 0.0);
    }
    return s;
}

Json to_json(const CalibrationTable& t) {
    Json entries = Json::array();
    for (Vec2 e : t.entries) {
        entries.push_back(point(e));
    }
    return {{"arm", to_string(t.arm)},  {"roll_deg", t.roll_deg}, {"grid_origin_mm", point(t.grid.origin)},
            {"cell_mm", t.grid.cell}, {"rows", t.grid.rows},      {"cols", t.grid.cols},
            {"entries", entries}};
}

CalibrationTable calibration_from_json(const Json& j) {
    CalibrationTable t;
    t.arm = parse_arm(j.at("arm").get<std::string>());
    t.roll_deg = j.at("roll_deg").get<double>();
    t.grid.origin = point_from(j.at("grid_origin_mm"));
    t.grid.cell = j.at("cell_mm").get<double>();
    t.grid.rows = j.at("rows").get<int>();
    t.grid.cols = j.at("cols").get<int>();
    for (const Json& e : j.at("entries")) {
        t.entries.push_back(point_from(e));
    }
    t.validate();
    return t;
}

Json to_json(const std::vector<Detection>& detections) {
    Json out = Json::array();
    for (const Detection& d : detections) {
        out.push_back({{"u", d.u}, {"v", d.v}, {"theta_deg", d.theta_deg}, {"score", d.score}});
    }
    return out;
}

Json to_json(const Trace& trace) {
    static const char* phases[] = {"approach", "descend", "grip", "lift", "transfer", "release"};
    Json out = Json::array();
    for (const Waypoint& w : trace) {
        out.push_back({{"phase", phases[static_cast<int>(w.phase)]},
                       {"position_mm", point(w.state.position)},
                       {"height_mm", w.state.height},
                       {"jaw", w.state.jaw == Jaw::Open ? "open" : "closed"},
                       {"roll_deg", w.state.roll},
                       {"in_window", w.in_window}});
    }
    return out;
}

Json episode_summary(const EpisodeReport& r) {
    int successes = 0;
    for (const AttemptRecord& a : r.records) {
        successes += a.result == AttemptResult::Success ? 1 : 0;
    }
    return {{"episode_id", r.episode_id},
            {"seed", r.seed},
            {"mode", to_string(r.mode)},
            {"attempts", r.records.size()},
            {"successes", successes},
            {"blocks_home", r.blocks_home},
            {"wall_time_s", r.wall_time_s}};
}

void write_raster(const std::string& stem, const DepthImage& image) {
    std::string bytes(image.data.size() * sizeof(float), '\0');
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        std::uint32_t w = std::bit_cast<std::uint32_t>(image.data[i]);
        for (int b = 0; b < 4; ++b) {
            bytes[4 * i + static_cast<std::size_t>(b)] = static_cast<char>((w >> (8 * b)) & 0xffu);
        }
    }
    write_file(stem + ".f32", bytes);
    const Json sidecar = {{"width", image.width},
                          {"height", image.height},
                          {"pixel_pitch_mm", image.pixel_pitch},
                          {"origin_mm", point(image.origin_mm)},
                          {"dropout_sentinel", "NaN"}};
    write_file(stem + ".json", sidecar.dump(2) + "\n");
}

DepthImage read_raster(const std::string& stem) {
    std::ifstream meta(stem + ".json");
    if (!meta) {
        throw ConfigError("cannot open '" + stem + ".json'");
    }
    const Json j = Json::parse(meta);
    DepthImage img;
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    img.pixel_pitch = j.at("pixel_pitch_mm").get<double>();
    img.origin_mm = point_from(j.at("origin_mm"));
    std::ifstream f(stem + ".f32", std::ios::binary);
    if (!f) {
        throw ConfigError("cannot open '" + stem + ".f32'");
    }
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (bytes.size() != 4 * n) {
        throw ConfigError("raster size does not match its sidecar");
    }
    img.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t w = 0;
        for (int b = 0; b < 4; ++b) {
            w |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + static_cast<std::size_t>(b)])) << (8 * b);
        }
        img.data[i] = std::bit_cast<float>(w);
    }
    return img;
}

void write_pgm16(const std::string& path, const DepthImage& image) {
    std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n65535\n";
    for (float d : image.data) {
        std::uint16_t v = 0;
        if (!DepthImage::is_dropout(d)) {
            const double scaled = std::round(static_cast<double>(d) * 100.0);
            v = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
        }
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    write_file(path, out);
}

void write_overlay_ppm(const std::string& path, const DepthImage& image, const OverlayMarks& marks) {
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (float d : image.data) {
        if (!DepthImage::is_dropout(d)) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    }
    const float span = hi > lo ? hi - lo : 1.0f;
    std::vector<std::array<std::uint8_t, 3>> px(image.data.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        const float d = image.data[i];
        const auto g = DepthImage::is_dropout(d) ? std::uint8_t{0}
                                                 : static_cast<std::uint8_t>(40 + 200 * (hi - d) / span);
        px[i] = {g, g, g};
    }
    auto put = [&](int u, int v, std::array<std::uint8_t, 3> c) {
        if (u >= 0 && v >= 0 && u < image.width && v < image.height) {
            px[static_cast<std::size_t>(v) * static_cast<std::size_t>(image.width) + static_cast<std::size_t>(u)] = c;
        }
    };
    auto ring = [&](Vec2 c, double r, std::array<std::uint8_t, 3> col) {
        const int steps = std::max(16, static_cast<int>(8 * r));
        for (int s = 0; s < steps; ++s) {
            const double a = 2.0 * M_PI * s / steps;
            put(static_cast<int>(std::lround(c.x + r * std::cos(a))), static_cast<int>(std::lround(c.y + r * std::sin(a))), col);
        }
    };
    auto dot = [&](Vec2 c, int r, std::array<std::uint8_t, 3> col) {
        for (int dv = -r; dv <= r; ++dv) {
            for (int du = -r; du <= r; ++du) {
                if (du * du + dv * dv <= r * r) {
                    put(static_cast<int>(std::lround(c.x)) + du, static_cast<int>(std::lround(c.y)) + dv, col);
                }
            }
        }
    };
    const std::array<std::uint8_t, 3> white{255, 255, 255}, red{255, 40, 40}, green{40, 220, 40};
    for (Vec2 p : marks.pegs) {
        ring(p, 12.0, green);
    }
    for (const Detection& d : marks.blocks) {
        for (int k = -6; k <= 6; ++k) {
            put(d.u + k, d.v, red);
            put(d.u, d.v + k, red);
        }
    }
    for (Vec2 g : marks.grasps) {
        dot(g, 3, white);
    }
    for (Vec2 p : marks.places) {
        ring(p, 6.0, white);
    }
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    for (const auto& c : px) {
        out.append(reinterpret_cast<const char*>(c.data()), 3);
    }
    write_file(path, out);
}

void write_records_csv(std::ostream& os, const std::vector<AttemptRecord>& records) {
    os << kCsvHeader << '\n';
    char duration[32];
    for (const AttemptRecord& r : records) {
        std::snprintf(duration, sizeof duration, "%.3f", r.duration_s);
        os << r.episode_id << ',' << to_string(r.mode) << ',' << to_string(r.arm) << ',' << r.block_id << ','
           << to_string(r.direction) << ',' << to_string(r.result) << ',' << duration << ','
           << (r.is_recovery_attempt ? 1 : 0) << ',' << (r.corrected_later ? 1 : 0) << '\n';
    }
}

std::vector<AttemptRecord> read_records_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw ConfigError("empty CSV");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kCsvHeader) {
        throw ConfigError("unexpected CSV header: " + line);
    }
    std::vector<AttemptRecord> out;
    int lineno = 1;
    auto flag = [&](const std::string& s) {
        if (s == "1" || s == "true") {
            return true;
        }
        if (s == "0" || s == "false") {
            return false;
        }
        throw ConfigError("line " + std::to_string(lineno) + ": bad flag '" + s + "'");
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 9) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 9 fields");
        }
        try {
            AttemptRecord r;
            r.episode_id = std::stoi(f[0]);
            r.mode = parse_mode(f[1]);
            r.arm = parse_arm(f[2]);
            r.block_id = std::stoi(f[3]);
            r.direction = parse_direction(f[4]);
            r.result = parse_result(f[5]);
            r.duration_s = std::stod(f[6]);
            r.is_recovery_attempt = flag(f[7]);
            r.corrected_later = flag(f[8]);
            if (!(r.duration_s > 0.0)) {
                throw ConfigError("duration must be positive");
            }
            out.push_back(r);
        } catch (const std::logic_error& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace pegtransfer
