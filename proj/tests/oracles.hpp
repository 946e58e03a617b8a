#pragma once
// Independent reference implementations used only by the tests.

#include <cmath>
#include <limits>
#include <vector>

#include "pegtransfer/correlate.hpp"
#include "pegtransfer/geometry.hpp"
#include "pegtransfer/perception.hpp"

namespace oracle {

using pegtransfer::Vec2;

/// Winding number of a closed polygon around p (Sunday's crossing rule); points
/// on an edge count as inside.
inline bool inside_winding(Vec2 p, const std::vector<Vec2>& poly) {
    int wn = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (std::abs(side) <= 1e-12 * len && (p.x - a.x) * (p.x - b.x) <= 1e-12 && (p.y - a.y) * (p.y - b.y) <= 1e-12) {
            return true;
        }
        if (a.y <= p.y) {
            if (b.y > p.y && side > 0) {
                ++wn;
            }
        } else if (b.y <= p.y && side < 0) {
            --wn;
        }
    }
    return wn != 0;
}

/// Distance from p to a polyline by ternary-free closed form on each segment,
/// written with the parametric projection clamped to [0, 1].
inline double polyline_distance(Vec2 p, const std::vector<Vec2>& poly) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % poly.size()];
        const double dx = b.x - a.x, dy = b.y - a.y;
        double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy);
        t = t < 0 ? 0 : (t > 1 ? 1 : t);
        best = std::min(best, std::hypot(a.x + t * dx - p.x, a.y + t * dy - p.y));
    }
    return best;
}

/// Count of overlapping set pixels with the mask centred at (u, v).
inline long window_score(const pegtransfer::BinaryImage& img, const pegtransfer::BinaryImage& mask, int u, int v) {
    const int c = mask.width / 2;
    long s = 0;
    for (int j = 0; j < mask.height; ++j) {
        for (int i = 0; i < mask.width; ++i) {
            const int x = u + i - c, y = v + j - c;
            if (x >= 0 && y >= 0 && x < img.width && y < img.height && mask.at(i, j) && img.at(x, y)) {
                ++s;
            }
        }
    }
    return s;
}

struct Peak {
    int u, v, m;
    long score;
};

/// Brute-force detector: rescans every (orientation, position) after each
/// suppression instead of maintaining activation maps. Suppressed positions are
/// remembered as a list of disc centres.
inline std::vector<Peak> brute_force_detect(const pegtransfer::BinaryImage& img, const pegtransfer::MaskSet& masks,
                                            int n, double floor_fraction) {
    const double side = masks.size();
    const double r2 = 0.5 * side * side;
    std::vector<Peak> out;
    for (int step = 0; step < n; ++step) {
        Peak best{0, 0, 0, -1};
        for (std::size_t m = 0; m < masks.count(); ++m) {
            for (int v = 0; v < img.height; ++v) {
                for (int u = 0; u < img.width; ++u) {
                    bool suppressed = false;
                    for (const Peak& q : out) {
                        const double du = u - q.u, dv = v - q.v;
                        if (du * du + dv * dv <= r2) {
                            suppressed = true;
                            break;
                        }
                    }
                    const long s = suppressed ? 0 : window_score(img, masks.masks[m], u, v);
                    if (s > best.score) {
                        best = {u, v, static_cast<int>(m), s};
                    }
                }
            }
        }
        const double floor = floor_fraction * static_cast<double>(masks.masks[static_cast<std::size_t>(best.m)].count());
        if (best.score <= 0 || static_cast<double>(best.score) < floor) {
            break;
        }
        out.push_back(best);
    }
    return out;
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against U(lo, hi).
inline double ks_uniform(std::vector<double> x, double lo, double hi) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = (x[i] - lo) / (hi - lo);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

}  // namespace oracle
