#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace pegtransfer {

/// Point or vector in the board plane, millimetres.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2& operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr Vec2& operator-=(Vec2 o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rotates `v` counter-clockwise by `deg` degrees about the origin.
inline Vec2 rotate(Vec2 v, double deg) {
    const double r = deg_to_rad(deg);
    const double c = std::cos(r);
    const double s = std::sin(r);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Vec2 rotate_about(Vec2 p, Vec2 pivot, double deg) { return pivot + rotate(p - pivot, deg); }

inline Vec2 unit_at(double deg) {
    const double r = deg_to_rad(deg);
    return {std::cos(r), std::sin(r)};
}

/// Wraps an angle into [0, period).
inline double wrap_angle(double deg, double period) {
    double w = std::fmod(deg, period);
    if (w < 0.0) {
        w += period;
    }
    if (w >= period) {
        w = 0.0;
    }
    return w;
}

/// Closed polygon given by its vertices in counter-clockwise order.
using Polygon = std::vector<Vec2>;

/// Inclusive test for a convex counter-clockwise polygon.
bool point_in_convex_polygon(Vec2 p, std::span<const Vec2> poly);

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b);
Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b);

/// Distance from `p` to the closed polyline through `poly` (boundary, not interior).
double distance_to_boundary(Vec2 p, std::span<const Vec2> poly);
Vec2 closest_point_on_boundary(Vec2 p, std::span<const Vec2> poly);

/// Distance from `p` to the filled convex polygon; zero inside.
double distance_to_convex_region(Vec2 p, std::span<const Vec2> poly);

double polygon_area(std::span<const Vec2> poly);

/// Clips a convex polygon by the half plane {x : dot(n, x) <= d}.
Polygon clip_half_plane(const Polygon& poly, Vec2 n, double d);

/// Equilateral triangle with circumradius `radius`, first vertex at angle `yaw + 90`.
Polygon equilateral_triangle(Vec2 center, double radius, double yaw_deg);

/// Barycentric weights of `p` with respect to triangle (a, b, c).
struct Barycentric {
    double wa;
    double wb;
    double wc;
};
Barycentric barycentric(Vec2 p, Vec2 a, Vec2 b, Vec2 c);

}  // namespace pegtransfer
