#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "pegtransfer/calibration.hpp"
#include "pegtransfer/executor.hpp"
#include "pegtransfer/perception.hpp"
#include "pegtransfer/render.hpp"
#include "pegtransfer/scene.hpp"

namespace pegtransfer {

using Json = nlohmann::json;

Json to_json(const WorkspaceConfig& config);
WorkspaceConfig workspace_from_json(const Json& j);
Json to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

Json to_json(const CalibrationTable& table);
CalibrationTable calibration_from_json(const Json& j);

/// [{u, v, theta_deg, score}, ...]
Json to_json(const std::vector<Detection>& detections);
Json to_json(const Trace& trace);
Json episode_summary(const EpisodeReport& report);

/// Writes `<stem>.f32` (little-endian float32, row-major) and `<stem>.json`.
void write_raster(const std::string& stem, const DepthImage& image);
DepthImage read_raster(const std::string& stem);

/// 16-bit binary PGM of depth in hundredths of a millimetre, saturating; dropouts are 0.
void write_pgm16(const std::string& path, const DepthImage& image);

struct OverlayMarks {
    std::vector<Vec2> pegs;         // pixels, circled
    std::vector<Detection> blocks;  // crosses at the detected centres
    std::vector<Vec2> grasps;       // pixels, white dots
    std::vector<Vec2> places;       // pixels, white rings
};

/// Grayscale depth rendering with the marks drawn on top, as binary PPM.
void write_overlay_ppm(const std::string& path, const DepthImage& image, const OverlayMarks& marks);

inline constexpr const char* kCsvHeader =
    "episode_id,mode,arm,block_id,direction,result,duration_s,is_recovery,corrected_later";

void write_records_csv(std::ostream& os, const std::vector<AttemptRecord>& records);
/// Parses a CSV written by write_records_csv; throws ConfigError on malformed rows.
std::vector<AttemptRecord> read_records_csv(std::istream& is);

}  // namespace pegtransfer
