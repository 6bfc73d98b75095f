#pragma once
#include <cmath>
#include <algorithm>

namespace s3forge {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }
inline double dist(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Point of R4. Doubles as the coordinate form of a quaternion via
// (x0,x1,x2,x3) <-> x0 + x1 i + x2 j + x3 k.
struct Vec4 {
    double x0 = 0, x1 = 0, x2 = 0, x3 = 0;

    Vec4 operator+(const Vec4& o) const { return {x0 + o.x0, x1 + o.x1, x2 + o.x2, x3 + o.x3}; }
    Vec4 operator-(const Vec4& o) const { return {x0 - o.x0, x1 - o.x1, x2 - o.x2, x3 - o.x3}; }
    Vec4 operator*(double s) const { return {x0 * s, x1 * s, x2 * s, x3 * s}; }
    Vec4 operator/(double s) const { return {x0 / s, x1 / s, x2 / s, x3 / s}; }
    Vec4 operator-() const { return {-x0, -x1, -x2, -x3}; }

    double operator[](int i) const { return i == 0 ? x0 : i == 1 ? x1 : i == 2 ? x2 : x3; }
    double& operator[](int i) { return i == 0 ? x0 : i == 1 ? x1 : i == 2 ? x2 : x3; }
};

inline double dot(const Vec4& a, const Vec4& b) {
    return a.x0 * b.x0 + a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3;
}
inline double norm2(const Vec4& a) { return dot(a, a); }
inline double norm(const Vec4& a) { return std::sqrt(norm2(a)); }
inline Vec4 normalized(const Vec4& a) { return a / norm(a); }
inline double dist(const Vec4& a, const Vec4& b) { return norm(a - b); }

// Geodesic distance on S3 between unit vectors.
inline double geodesic(const Vec4& a, const Vec4& b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

} // namespace s3forge
