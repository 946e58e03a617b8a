#include "pegtransfer/geometry.hpp"

#include <algorithm>
#include <limits>

namespace pegtransfer {

bool point_in_convex_polygon(Vec2 p, std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    if (n < 3) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        if (cross(b - a, p - a) < 0.0) {
            return false;
        }
    }
    return true;
}

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) {
        return a;
    }
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return a + ab * t;
}

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) { return distance(p, closest_point_on_segment(p, a, b)); }

Vec2 closest_point_on_boundary(Vec2 p, std::span<const Vec2> poly) {
    Vec2 best = poly.empty() ? p : poly[0];
    double best_d = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 q = closest_point_on_segment(p, poly[i], poly[(i + 1) % n]);
        const double d = distance(p, q);
        if (d < best_d) {
            best_d = d;
            best = q;
        }
    }
    return best;
}

double distance_to_boundary(Vec2 p, std::span<const Vec2> poly) {
    return distance(p, closest_point_on_boundary(p, poly));
}

double distance_to_convex_region(Vec2 p, std::span<const Vec2> poly) {
    if (point_in_convex_polygon(p, poly)) {
        return 0.0;
    }
    return distance_to_boundary(p, poly);
}

double polygon_area(std::span<const Vec2> poly) {
    double twice = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        twice += cross(poly[i], poly[(i + 1) % n]);
    }
    return 0.5 * twice;
}

Polygon clip_half_plane(const Polygon& poly, Vec2 n, double d) {
    Polygon out;
    const std::size_t count = poly.size();
    out.reserve(count + 1);
    for (std::size_t i = 0; i < count; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % count];
        const double fa = dot(n, a) - d;
        const double fb = dot(n, b) - d;
        if (fa <= 0.0) {
            out.push_back(a);
        }
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
            const double t = fa / (fa - fb);
            out.push_back(a + (b - a) * t);
        }
    }
    return out;
}

Polygon equilateral_triangle(Vec2 center, double radius, double yaw_deg) {
    Polygon tri;
    tri.reserve(3);
    for (int i = 0; i < 3; ++i) {
        tri.push_back(center + unit_at(yaw_deg + 90.0 + 120.0 * i) * radius);
    }
    return tri;
}

Barycentric barycentric(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    const double area = cross(b - a, c - a);
    const double wa = cross(b - p, c - p) / area;
    const double wb = cross(c - p, a - p) / area;
    return {wa, wb, 1.0 - wa - wb};
}

}  // namespace pegtransfer
