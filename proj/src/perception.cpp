#include "pegtransfer/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pegtransfer/errors.hpp"

namespace pegtransfer {

void DepthBand::validate() const {
    if (!(epsilon > 0.0)) {
        throw ConfigError("depth band epsilon must be positive");
    }
}

DepthBand block_top_band(const WorkspaceConfig& config, const CameraConfig& camera, double seat_height,
                         double epsilon) {
    return {camera.board_depth - seat_height - config.block_height, epsilon};
}

DepthBand peg_top_band(const WorkspaceConfig& config, const CameraConfig& camera, double epsilon) {
    return {camera.board_depth - config.peg_height, epsilon};
}

NotEnoughBlocks::NotEnoughBlocks(int requested, std::vector<Detection> partial)
    : std::runtime_error("found " + std::to_string(partial.size()) + " of " + std::to_string(requested) +
                         " blocks above the activation floor"),
      requested_(requested),
      partial_(std::move(partial)) {}

PegsNotFound::PegsNotFound(std::vector<Vec2> found)
    : std::runtime_error("found " + std::to_string(found.size()) + " of 12 pegs"), found_(std::move(found)) {}

BinaryImage threshold_depth(const DepthImage& image, DepthBand band) {
    band.validate();
    BinaryImage out(image.width, image.height);
    const double lo = band.depth - band.epsilon;
    const double hi = band.depth + band.epsilon;
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        const float d = image.data[i];
        out.data[i] = (!DepthImage::is_dropout(d) && d >= lo && d <= hi) ? 1 : 0;
    }
    return out;
}

namespace {

struct RowMax {
    double value = -std::numeric_limits<double>::infinity();
    int u = 0;
};

RowMax scan_row(const ActivationMap& map, int v) {
    RowMax best;
    const double* row = map.data.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(map.width);
    for (int u = 0; u < map.width; ++u) {
        if (row[u] > best.value) {
            best.value = row[u];
            best.u = u;
        }
    }
    return best;
}

}  // namespace

std::vector<Detection> extract_peaks(std::vector<ActivationMap> maps, int n, const MaskSet& masks,
                                     const DetectOptions& options) {
    if (n < 1) {
        throw ConfigError("detection count n must be at least 1");
    }
    if (maps.size() != masks.count()) {
        throw ConfigError("one activation map per mask expected");
    }
    std::vector<Detection> found;
    if (maps.empty() || maps[0].width == 0 || maps[0].height == 0) {
        throw NotEnoughBlocks(n, found);
    }
    const int width = maps[0].width;
    const int height = maps[0].height;
    const std::size_t k = maps.size();

    // Per-map row maxima so each extraction step costs O(k * height) plus the
    // rows touched by suppression.
    std::vector<RowMax> row_max(k * static_cast<std::size_t>(height));
    for (std::size_t m = 0; m < k; ++m) {
        for (int v = 0; v < height; ++v) {
            row_max[m * static_cast<std::size_t>(height) + static_cast<std::size_t>(v)] = scan_row(maps[m], v);
        }
    }

    const double side = masks.size();
    const double radius2 = 0.5 * side * side;
    const int reach = static_cast<int>(std::floor(std::sqrt(radius2)));

    for (int j = 0; j < n; ++j) {
        std::size_t best_m = 0;
        int best_v = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < k; ++m) {
            for (int v = 0; v < height; ++v) {
                const RowMax& r = row_max[m * static_cast<std::size_t>(height) + static_cast<std::size_t>(v)];
                if (r.value > best) {
                    best = r.value;
                    best_m = m;
                    best_v = v;
                }
            }
        }
        const int best_u = row_max[best_m * static_cast<std::size_t>(height) + static_cast<std::size_t>(best_v)].u;
        const double floor = options.floor_fraction * static_cast<double>(masks.masks[best_m].count());
        if (!(best >= floor) || best <= 0.0) {
            throw NotEnoughBlocks(n, std::move(found));
        }
        found.push_back({best_u, best_v, masks.orientations[best_m], best, static_cast<int>(best_m)});

        const int v0 = std::max(0, best_v - reach);
        const int v1 = std::min(height - 1, best_v + reach);
        for (std::size_t m = 0; m < k; ++m) {
            ActivationMap& map = maps[m];
            for (int v = v0; v <= v1; ++v) {
                const double dv = v - best_v;
                const double span2 = radius2 - dv * dv;
                if (span2 < 0.0) {
                    continue;
                }
                const int du = static_cast<int>(std::floor(std::sqrt(span2)));
                const int u0 = std::max(0, best_u - du);
                const int u1 = std::min(width - 1, best_u + du);
                double* row = map.data.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(width);
                for (int u = u0; u <= u1; ++u) {
                    const double ddu = u - best_u;
                    if (ddu * ddu + dv * dv <= radius2) {
                        row[u] = 0.0;
                    }
                }
                // Zeroing only lowers values, so the row maximum survives unless it was erased.
                RowMax& r = row_max[m * static_cast<std::size_t>(height) + static_cast<std::size_t>(v)];
                if (r.u >= u0 && r.u <= u1) {
                    r = scan_row(map, v);
                }
            }
        }
    }
    return found;
}

std::vector<Detection> detect_blocks(const DepthImage& image, int n, const MaskSet& masks, DepthBand band,
                                     const DetectOptions& options) {
    if (n < 1) {
        throw ConfigError("detection count n must be at least 1");
    }
    if (image.width < masks.size() || image.height < masks.size()) {
        throw ConfigError("image must be larger than the masks");
    }
    const BinaryImage thresh = threshold_depth(image, band);
    // An activation never exceeds the number of active pixels, so a nearly empty
    // band cannot reach any floor.
    long min_area = std::numeric_limits<long>::max();
    for (const BinaryImage& m : masks.masks) {
        min_area = std::min(min_area, m.count());
    }
    if (static_cast<double>(thresh.count()) < options.floor_fraction * static_cast<double>(min_area)) {
        if (masks.count() == 0) {
            throw ConfigError("empty mask set");
        }
        throw NotEnoughBlocks(n, {});
    }
    std::vector<ActivationMap> maps = correlate_fft(thresh, masks);
    // Binary inputs give integer activations; rounding removes transform noise so
    // the argmax matches direct summation exactly.
    for (ActivationMap& map : maps) {
        for (double& a : map.data) {
            a = std::round(a);
        }
    }
    return extract_peaks(std::move(maps), n, masks, options);
}

MaskSet make_peg_mask(const WorkspaceConfig& config, const CameraConfig& camera) {
    const double r_px = config.peg_radius * camera.pixels_per_mm;
    const int half = static_cast<int>(std::ceil(r_px));
    BinaryImage disc(2 * half + 1, 2 * half + 1);
    for (int v = 0; v < disc.height; ++v) {
        for (int u = 0; u < disc.width; ++u) {
            const double du = u - half;
            const double dv = v - half;
            if (std::hypot(du, dv) <= r_px) {
                disc.at(u, v) = 1;
            }
        }
    }
    return make_mask_set({std::move(disc)}, {0.0}, camera.pixel_pitch());
}

std::vector<Vec2> order_left_right_row_major(std::vector<Vec2> points, double mid_u, double row_gap_px) {
    std::vector<Vec2> ordered;
    ordered.reserve(points.size());
    for (int half = 0; half < 2; ++half) {
        std::vector<Vec2> side;
        for (Vec2 p : points) {
            if ((p.x < mid_u) == (half == 0)) {
                side.push_back(p);
            }
        }
        std::sort(side.begin(), side.end(), [](Vec2 a, Vec2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
        std::size_t row_start = 0;
        for (std::size_t i = 1; i <= side.size(); ++i) {
            if (i == side.size() || side[i].y - side[i - 1].y > row_gap_px) {
                std::sort(side.begin() + static_cast<std::ptrdiff_t>(row_start),
                          side.begin() + static_cast<std::ptrdiff_t>(i),
                          [](Vec2 a, Vec2 b) { return a.x < b.x; });
                row_start = i;
            }
        }
        ordered.insert(ordered.end(), side.begin(), side.end());
    }
    return ordered;
}

std::vector<Vec2> detect_pegs(const DepthImage& image, const WorkspaceConfig& config, const CameraConfig& camera) {
    const MaskSet disc = make_peg_mask(config, camera);
    const double mid_u = camera.board_to_pixel({0.5 * config.board_size.x, 0.0}).x;
    const double row_gap = 2.0 * config.peg_radius * camera.pixels_per_mm;
    std::vector<Detection> hits;
    try {
        hits = detect_blocks(image, kPegCount, disc, peg_top_band(config, camera));
    } catch (const NotEnoughBlocks& e) {
        std::vector<Vec2> partial;
        for (const Detection& d : e.partial()) {
            partial.push_back(d.pixel());
        }
        throw PegsNotFound(order_left_right_row_major(std::move(partial), mid_u, row_gap));
    }
    std::vector<Vec2> pegs;
    pegs.reserve(hits.size());
    for (const Detection& d : hits) {
        pegs.push_back(d.pixel());
    }
    return order_left_right_row_major(std::move(pegs), mid_u, row_gap);
}

Vec2 detection_to_board(const Detection& d, const DepthImage& image) { return image.pixel_to_board(d.pixel()); }

}  // namespace pegtransfer
