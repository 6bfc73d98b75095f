#pragma once
#include <cmath>
#include <variant>
#include "vec.hpp"
#include "quat.hpp"
#include "errors.hpp"

namespace s3forge {

// Unit point of S3 in R4 coordinates, and its image in R3.
using PointS3 = Vec4;
using PointR3 = Vec3;

constexpr Vec4 kNorthPole{0, 0, 0, 1};

// A circle on S3: the slice of S3 by an affine 2-plane.
//   point_at(t) = plane_center + radius*(cos t * u + sin t * v)
// u, v are orthonormal directions of the plane, both perpendicular to
// plane_center; |plane_center|^2 + radius^2 = 1 keeps every point on S3.
// Great circle iff plane_center = 0 and radius = 1.
struct CircleS3 {
    Vec4 plane_center;
    Vec4 u, v;
    double radius;

    CircleS3(const Vec4& pc, const Vec4& u_, const Vec4& v_, double r)
        : plane_center(pc), u(u_), v(v_), radius(r) {
        if (r <= 1e-12 || r > 1.0 + 1e-9) throw DegenerateCircle("CircleS3: radius outside (0, 1]");
        if (std::abs(norm(u) - 1.0) > 1e-9 || std::abs(norm(v) - 1.0) > 1e-9 ||
            std::abs(dot(u, v)) > 1e-9 || std::abs(dot(pc, u)) > 1e-9 ||
            std::abs(dot(pc, v)) > 1e-9 || std::abs(norm2(pc) + r * r - 1.0) > 1e-9)
            throw DegenerateCircle("CircleS3: plane frame invariants violated");
    }

    Vec4 point_at(double t) const {
        return plane_center + (u * std::cos(t) + v * std::sin(t)) * radius;
    }
    // d/dt of point_at; tangent to S3 at point_at(t).
    Vec4 tangent_at(double t) const { return (v * std::cos(t) - u * std::sin(t)) * radius; }
    bool is_great() const { return norm2(plane_center) <= 1e-18 && std::abs(radius - 1.0) <= 1e-12; }
};

// Great circle through two non-parallel unit points.
inline CircleS3 great_circle(const Vec4& a, const Vec4& b) {
    Vec4 w = b - a * dot(a, b);
    double n = norm(w);
    if (n <= 1e-12) throw DegenerateCircle("great_circle: points parallel or antipodal");
    return CircleS3({0, 0, 0, 0}, a, w * (1.0 / n), 1.0);
}

// Image of a circle under stereographic projection: a circle or a line.
struct Circle {
    Vec3 center;
    double radius;      // finite, > 0
    Vec3 plane_normal;  // unit
};
struct Line {
    Vec3 base;
    Vec3 direction;  // unit
};
using Circline = std::variant<Circle, Line>;

// Stereographic projection from the canonical north pole N = (0,0,0,1):
//   rho(x) = (x0, x1, x2) / (1 - x3).
inline Vec3 stereo(const Vec4& x) {
    double w = 1.0 - x.x3;
    if (w <= 1e-12) throw AtPole("stereo: 1 - x3 <= 1e-12");
    return {x.x0 / w, x.x1 / w, x.x2 / w};
}

// Inverse: y -> (2y, |y|^2 - 1) / (|y|^2 + 1). Always lands on S3 \ {N}.
inline Vec4 stereo_inv(const Vec3& y) {
    double s = norm2(y);
    double w = 1.0 / (s + 1.0);
    return {2.0 * y.x * w, 2.0 * y.y * w, 2.0 * y.z * w, (s - 1.0) * w};
}

// Differential of stereo at x applied to tangent v:
//   d rho_x(v) = (v_xyz * (1 - x3) + x_xyz * v3) / (1 - x3)^2.
inline Vec3 stereo_diff(const Vec4& x, const Vec4& v) {
    double w = 1.0 - x.x3;
    if (w <= 1e-12) throw AtPole("stereo_diff: 1 - x3 <= 1e-12");
    double inv2 = 1.0 / (w * w);
    return {(v.x0 * w + x.x0 * v.x3) * inv2, (v.x1 * w + x.x1 * v.x3) * inv2,
            (v.x2 * w + x.x2 * v.x3) * inv2};
}

// Projection setup: a pole anywhere on S3, realized by rotating the design
// so the pole lands on N and then projecting canonically.
struct ProjectionFrame {
    UnitQuaternion pole;
    UnitQuaternion pre_rotation;  // pre_rotation * pole = N

    ProjectionFrame(const UnitQuaternion& p, const UnitQuaternion& rot) : pole(p), pre_rotation(rot) {
        if (dist(rotate4(pre_rotation, pole.vec()), kNorthPole) > 1e-12)
            throw Error("ProjectionFrame: pre_rotation does not carry pole to N");
    }
};

inline ProjectionFrame frame_from_pole(const UnitQuaternion& pole) {
    return ProjectionFrame(pole, mover(pole, UnitQuaternion(kNorthPole)));
}

inline Vec3 project_point(const Vec4& x, const ProjectionFrame& f) {
    return stereo(rotate4(f.pre_rotation, x));
}

// Differential of the full frame projection (rotate, then stereo).
inline Vec3 project_diff(const Vec4& x, const Vec4& v, const ProjectionFrame& f) {
    return stereo_diff(rotate4(f.pre_rotation, x), rotate4(f.pre_rotation, v));
}

// Conformal scale factor lambda(x) = 1/(1 - <x_rot, N>): infinitesimal
// lengths at x are stretched by exactly this factor under projection.
inline double conformal_scale(const Vec4& x, const ProjectionFrame& f) {
    double w = 1.0 - rotate4(f.pre_rotation, x).x3;
    if (w <= 1e-12) throw AtPole("conformal_scale: point at pole");
    return 1.0 / w;
}

// Project a circle of S3 to its image circline. Line iff the circle passes
// within 1e-9 (chordal) of the pole; otherwise a circle fitted through three
// projected samples.
inline Circline project_circle(const CircleS3& c, const ProjectionFrame& f) {
    if (c.radius <= 1e-12) throw DegenerateCircle("project_circle: radius <= 1e-12");
    Vec4 pc = rotate4(f.pre_rotation, c.plane_center);
    Vec4 u = rotate4(f.pre_rotation, c.u);
    Vec4 v = rotate4(f.pre_rotation, c.v);
    CircleS3 cr(pc, u, v, c.radius);

    // x3 along the circle is pc3 + r*(u3 cos t + v3 sin t); its max decides
    // how close the circle comes to the pole N.
    double amp = c.radius * std::hypot(u.x3, v.x3);
    double maxdot = pc.x3 + amp;
    double chord2 = std::max(0.0, 2.0 - 2.0 * maxdot);
    if (chord2 <= 1e-18) {
        // Through the pole: image is a line. Anchor it at the sample
        // farthest from the pole, where projection is well conditioned.
        double t_near = std::atan2(v.x3, u.x3);  // argmax of x3
        double t_far = t_near + M_PI;
        Vec4 x = cr.point_at(t_far);
        Vec3 base = stereo(x);
        Vec3 dir = stereo_diff(x, cr.tangent_at(t_far));
        double n = norm(dir);
        if (n <= 1e-300) throw DegenerateCircle("project_circle: vanishing image tangent");
        return Line{base, dir * (1.0 / n)};
    }

    Vec3 y1 = stereo(cr.point_at(0.0));
    Vec3 y2 = stereo(cr.point_at(2.0 * M_PI / 3.0));
    Vec3 y3 = stereo(cr.point_at(4.0 * M_PI / 3.0));
    Vec3 a = y1 - y3, b = y2 - y3;
    Vec3 axb = cross(a, b);
    double n2 = norm2(axb);
    if (n2 <= 1e-300) throw DegenerateCircle("project_circle: collinear samples");
    Vec3 center = y3 + cross(b * norm2(a) - a * norm2(b), axb) * (1.0 / (2.0 * n2));
    double radius = dist(y1, center);
    return Circle{center, radius, axb * (1.0 / std::sqrt(n2))};
}

// Angle between two circles at a shared point, before and after projection.
// Both must pass through `at` within 1e-9.
inline std::pair<double, double> angle_check(const CircleS3& c1, const CircleS3& c2,
                                             const Vec4& at, const ProjectionFrame& f) {
    auto tangent_at_point = [&](const CircleS3& c) {
        Vec4 rel = at - c.plane_center;
        double t = std::atan2(dot(rel, c.v), dot(rel, c.u));
        if (dist(c.point_at(t), at) > 1e-9) throw NotIncident("angle_check: circle misses the point");
        return normalized(c.tangent_at(t));
    };
    Vec4 t1 = tangent_at_point(c1);
    Vec4 t2 = tangent_at_point(c2);
    double clamp = std::min(1.0, std::max(-1.0, dot(t1, t2)));
    double angle_s3 = std::acos(clamp);

    Vec3 d1 = project_diff(at, t1, f);
    Vec3 d2 = project_diff(at, t2, f);
    double c = dot(d1, d2) / (norm(d1) * norm(d2));
    double angle_r3 = std::acos(std::min(1.0, std::max(-1.0, c)));
    return {angle_s3, angle_r3};
}

} // namespace s3forge
