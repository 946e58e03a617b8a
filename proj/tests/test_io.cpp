#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pegtransfer/errors.hpp"
#include "pegtransfer/io.hpp"

using namespace pegtransfer;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pegtransfer_test_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("workspace and scene survive a JSON round trip") {
    Scene s = init_episode(WorkspaceConfig::standard(), 9);
    s.block(1).status = Fallen{{12.5, 3.25}};
    s.block(2).status = StuckOn{4};
    s.block(3).status = Held{ArmSide::Left};
    const Json j = Json::parse(to_json(s).dump());
    CHECK(scene_from_json(j) == s);
    const WorkspaceConfig w = workspace_from_json(Json::parse(to_json(s.config).dump()));
    CHECK(w.peg_positions == s.config.peg_positions);
    CHECK(w.hole_span_max == s.config.hole_span_max);
    CHECK(j["blocks"][1]["status"]["kind"] == "Fallen");
    Json bad = j;
    bad["blocks"][0]["status"]["kind"] = "Flying";
    CHECK_THROWS_AS(scene_from_json(bad), ConfigError);
    bad = j;
    bad["blocks"].erase(0);
    CHECK_THROWS_AS(scene_from_json(bad), ConfigError);
}

TEST_CASE("calibration table round trip") {
    ArmErrorModel m;
    const ErrorField f = make_error_field(m, {160.0, 128.0}, 4);
    const CalibrationTable t =
        generate_calibration(ArmSide::Left, f, GridSpec::covering({160.0, 128.0}, 32.0), {160.0, 128.0}).roll90;
    const Json j = Json::parse(to_json(t).dump());
    CHECK(j["arm"] == "Left");
    CHECK(j["roll_deg"] == 90.0);
    CHECK(calibration_from_json(j) == t);
}

TEST_CASE("raster files") {
    DepthImage img;
    img.width = 3;
    img.height = 2;
    img.pixel_pitch = 0.2;
    img.origin_mm = {-5.0, -5.0};
    img.data = {500.0f, 485.25f, kDropout, 0.0f, 700.0f, 490.0f};
    const fs::path stem = scratch("raster");
    write_raster(stem.string(), img);
    CHECK(fs::file_size(stem.string() + ".f32") == 24);
    const DepthImage back = read_raster(stem.string());
    CHECK(back.width == 3);
    CHECK(back.origin_mm == img.origin_mm);
    CHECK(DepthImage::is_dropout(back.data[2]));
    CHECK(back.data[1] == 485.25f);
    const Json side = Json::parse(slurp(stem.string() + ".json"));
    CHECK(side["dropout_sentinel"] == "NaN");
    CHECK_THROWS_AS(read_raster(scratch("missing").string()), ConfigError);

    const fs::path pgm = scratch("depth.pgm");
    write_pgm16(pgm.string(), img);
    const std::string bytes = slurp(pgm);
    const std::string header = "P5\n3 2\n65535\n";
    REQUIRE(bytes.size() == header.size() + 12);
    CHECK(bytes.substr(0, header.size()) == header);
    auto px = [&](int i) {
        return (static_cast<unsigned char>(bytes[header.size() + 2 * i]) << 8) |
               static_cast<unsigned char>(bytes[header.size() + 2 * i + 1]);
    };
    CHECK(px(0) == 50000);
    CHECK(px(1) == 48525);
    CHECK(px(2) == 0);
    CHECK(px(4) == 65535);
}

TEST_CASE("overlay image") {
    DepthImage img;
    img.width = 40;
    img.height = 30;
    img.data.assign(1200, 500.0f);
    OverlayMarks marks;
    marks.pegs = {{10, 10}};
    Detection d;
    d.u = 20;
    d.v = 15;
    marks.blocks = {d};
    marks.grasps = {{25, 15}};
    const fs::path p = scratch("overlay.ppm");
    write_overlay_ppm(p.string(), img, marks);
    const std::string bytes = slurp(p);
    CHECK(bytes.rfind("P6\n40 30\n255\n", 0) == 0);
    CHECK(bytes.size() == std::string("P6\n40 30\n255\n").size() + 3 * 1200);
}

TEST_CASE("attempt CSV round trip") {
    std::vector<AttemptRecord> rec(3);
    rec[0] = {0, Mode::Bilateral, ArmSide::Left, 3, Direction::LeftToRight, AttemptResult::PlaceStuck, 5.0, false, true};
    rec[1] = {0, Mode::Bilateral, ArmSide::Right, 4, Direction::RightToLeft, AttemptResult::Success, 5.0, true, false};
    rec[2] = {1, Mode::Bilateral, ArmSide::Right, 0, Direction::RightToLeft, AttemptResult::PickFail, 2.125, false, false};
    std::stringstream ss;
    write_records_csv(ss, rec);
    const std::string text = ss.str();
    CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(text.find("0,bilateral,Left,3,LeftToRight,PlaceStuck,5.000,0,1\n") != std::string::npos);
    const std::vector<AttemptRecord> back = read_records_csv(ss);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].episode_id == rec[i].episode_id);
        CHECK(back[i].arm == rec[i].arm);
        CHECK(back[i].result == rec[i].result);
        CHECK(back[i].duration_s == rec[i].duration_s);
        CHECK(back[i].is_recovery_attempt == rec[i].is_recovery_attempt);
        CHECK(back[i].corrected_later == rec[i].corrected_later);
    }
}

TEST_CASE("malformed CSV is rejected with a line number") {
    const std::string h = std::string(kCsvHeader) + "\n";
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return read_records_csv(in);
    };
    CHECK_THROWS_AS(parse(""), ConfigError);
    CHECK_THROWS_AS(parse("a,b,c\n"), ConfigError);
    CHECK_THROWS_AS(parse(h + "0,single,Right,1,LeftToRight,Success,10.0,0\n"), ConfigError);
    CHECK_THROWS_AS(parse(h + "0,single,Right,1,LeftToRight,Maybe,10.0,0,0\n"), ConfigError);
    CHECK_THROWS_AS(parse(h + "0,single,Right,1,LeftToRight,Success,10.0,2,0\n"), ConfigError);
    try {
        parse(h + "0,single,Right,1,LeftToRight,Success,10.0,0,0\n0,single,Up,1,LeftToRight,Success,10.0,0,0\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(parse(h).empty());
}

TEST_CASE("episode summary") {
    EpisodeReport r;
    r.episode_id = 4;
    r.seed = 104;
    r.mode = Mode::Bilateral;
    r.records.resize(3);
    r.records[1].result = AttemptResult::PlaceFall;
    r.blocks_home = 5;
    r.wall_time_s = 66.0;
    const Json j = episode_summary(r);
    CHECK(j["attempts"] == 3);
    CHECK(j["successes"] == 2);
    CHECK(j["mode"] == "bilateral");
    CHECK(j["blocks_home"] == 5);
}
