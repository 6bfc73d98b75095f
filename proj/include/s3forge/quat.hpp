#pragma once
#include <cmath>
#include "vec.hpp"
#include "errors.hpp"

namespace s3forge {

// Quaternion a + bi + cj + dk. Plain value type; no unit constraint.
struct Quat {
    double a = 0, b = 0, c = 0, d = 0;

    Quat() = default;
    Quat(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}
    explicit Quat(const Vec4& v) : a(v.x0), b(v.x1), c(v.x2), d(v.x3) {}

    Vec4 vec() const { return {a, b, c, d}; }
    Quat operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
    Quat operator+(const Quat& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    Quat operator-(const Quat& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
};

inline double norm2(const Quat& q) { return q.a * q.a + q.b * q.b + q.c * q.c + q.d * q.d; }
inline double norm(const Quat& q) { return std::sqrt(norm2(q)); }

// Hamilton product. Non-commutative; |pq| = |p||q|.
inline Quat q_mul(const Quat& p, const Quat& q) {
    return {p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
            p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
            p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
            p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a};
}

inline Quat q_conj(const Quat& q) { return {q.a, -q.b, -q.c, -q.d}; }

// q * q_inv(q) = 1. Throws ZeroQuaternion when |q| <= 1e-300.
inline Quat q_inv(const Quat& q) {
    double n2 = norm2(q);
    if (std::sqrt(n2) <= 1e-300) throw ZeroQuaternion("q_inv: |q| <= 1e-300");
    return q_conj(q) * (1.0 / n2);
}

// Unit quaternion: a point of S3, or an isometry via left multiplication.
// |q| must be within 1e-12 of 1 at construction; results of composition
// chains are renormalized once drift exceeds 1e-9.
class UnitQuaternion {
  public:
    explicit UnitQuaternion(const Quat& q) : q_(q) {
        if (std::abs(norm(q) - 1.0) > 1e-12) throw NotUnit("UnitQuaternion: |q| - 1 exceeds 1e-12");
    }
    UnitQuaternion(double a, double b, double c, double d) : UnitQuaternion(Quat{a, b, c, d}) {}
    explicit UnitQuaternion(const Vec4& v) : UnitQuaternion(Quat{v}) {}

    // Accepts op results with accumulated rounding; renormalizes if needed.
    static UnitQuaternion from_op(Quat q) {
        double n = norm(q);
        if (std::abs(n - 1.0) > 1e-9) q = q * (1.0 / n);
        UnitQuaternion u;
        u.q_ = q;
        return u;
    }

    const Quat& q() const { return q_; }
    Vec4 vec() const { return q_.vec(); }

  private:
    UnitQuaternion() = default;
    Quat q_;
};

inline UnitQuaternion q_one() { return UnitQuaternion(1, 0, 0, 0); }
inline UnitQuaternion q_i() { return UnitQuaternion(0, 1, 0, 0); }
inline UnitQuaternion q_j() { return UnitQuaternion(0, 0, 1, 0); }
inline UnitQuaternion q_k() { return UnitQuaternion(0, 0, 0, 1); }

// x -> q*x, an isometry of R4 restricted to S3. Preserves inner products.
inline UnitQuaternion left_isometry(const UnitQuaternion& q, const UnitQuaternion& x) {
    return UnitQuaternion::from_op(q_mul(q.q(), x.q()));
}

// The unique unit q with q*a = b under the left action: q = b * a^-1.
inline UnitQuaternion mover(const UnitQuaternion& a, const UnitQuaternion& b) {
    return UnitQuaternion::from_op(q_mul(b.q(), q_inv(a.q())));
}

// Right-action sibling: the unique unit q with a*q = b, i.e. q = a^-1 * b.
inline UnitQuaternion mover_right(const UnitQuaternion& a, const UnitQuaternion& b) {
    return UnitQuaternion::from_op(q_mul(q_inv(a.q()), b.q()));
}

// Rotate a plain R4 vector by left multiplication (linear in x, so no unit
// requirement on x).
inline Vec4 rotate4(const UnitQuaternion& q, const Vec4& x) {
    return q_mul(q.q(), Quat{x}).vec();
}

} // namespace s3forge
