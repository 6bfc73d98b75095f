#pragma once
#include <array>
#include <vector>
#include "meshkit.hpp"
#include "polytope4.hpp"
#include "s3geom.hpp"

namespace s3forge {

enum class CapStyle { SphericalCap, FlatDisk };

struct TubeSpec {
    double radius_s3;         // geodesic tube radius in S3, (0, pi/4)
    int segments_along = 2;   // lower bound; refined until image chords are tight
    int segments_around = 16;
    CapStyle cap_style = CapStyle::SphericalCap;
};

namespace detail {

inline void check_tube_spec(const TubeSpec& s) {
    if (!(s.radius_s3 > 0.0) || !(s.radius_s3 < M_PI / 4))
        throw Error("TubeSpec: radius_s3 must lie in (0, pi/4)");
    if (s.segments_along < 2) throw Error("TubeSpec: segments_along must be >= 2");
    if (s.segments_around < 3) throw Error("TubeSpec: segments_around must be >= 3");
}

// Orthonormal basis {e1, e2} of the plane orthogonal to span{a, w}; the seeds
// are picked deterministically from the standard basis.
inline std::array<Vec4, 2> complement_basis(const Vec4& a, const Vec4& w) {
    std::array<Vec4, 2> out{};
    int found = 0;
    double best_residual = -1.0;
    // Two passes: take the standard vector with the largest residual first,
    // then the best one orthogonal to everything chosen so far.
    for (int pick = 0; pick < 2; ++pick) {
        Vec4 best{0, 0, 0, 0};
        best_residual = -1.0;
        for (int i = 0; i < 4; ++i) {
            Vec4 e{0, 0, 0, 0};
            e[i] = 1.0;
            Vec4 r = e - a * dot(e, a) - w * dot(e, w);
            for (int j = 0; j < found; ++j) r = r - out[j] * dot(r, out[j]);
            double n = norm(r);
            if (n > best_residual) {
                best_residual = n;
                best = r * (1.0 / n);
            }
        }
        out[found++] = best;
    }
    return out;
}

} // namespace detail

// The small circle of points at geodesic distance radius_s3 from the arc
// point p(t), in the plane orthogonal to the arc's motion there.
inline CircleS3 tube_circle(const GreatArc& arc, double t, const TubeSpec& spec) {
    detail::check_tube_spec(spec);
    if (t < arc.t_start - 1e-12 || t > arc.t_end + 1e-12)
        throw Error("tube_circle: parameter outside the arc");
    auto [e1, e2] = detail::complement_basis(arc.circle.u, arc.circle.v);
    return CircleS3(arc.point_at(t) * std::cos(spec.radius_s3), e1, e2, std::sin(spec.radius_s3));
}

// Thickness variation a constant-Euclidean-radius tube would need to span:
// max over the design of the projected tube diameter, relative to its min.
// Diameters scale as sin(radius) * lambda, so the radius cancels.
inline double euclidean_tube_ratio(const std::vector<GreatArc>& design, const TubeSpec& spec,
                                   const ProjectionFrame& f) {
    detail::check_tube_spec(spec);
    if (design.empty()) throw Error("euclidean_tube_ratio: empty design");
    double lo = 1e300, hi = 0.0;
    for (const GreatArc& a : design) {
        auto [lmin, lmax] = lambda_extremes(a, f);
        lo = std::min(lo, lmin);
        hi = std::max(hi, lmax);
    }
    return hi / lo;
}

// Mesh one arc as a capped tube. Rings are exact projected small circles;
// the along-direction is subdivided until every image chord sags less than
// 0.2% of the local tube diameter.
inline TriMesh mesh_tube(const GreatArc& arc, const TubeSpec& spec, const ProjectionFrame& f) {
    detail::check_tube_spec(spec);
    const double eps = spec.radius_s3;

    // The tube surface sits within geodesic eps of the core segment, so its
    // closest approach to the pole is the core's closest approach minus eps.
    auto [x3_lo, x3_hi] = detail::arc_x3_range(arc, f);
    double core_gap = std::acos(std::clamp(x3_hi, -1.0, 1.0));
    if (core_gap - eps <= 1e-6)
        throw PoleCollision("mesh_tube: tube surface reaches the projection pole");

    auto proj = [&](const Vec4& x) { return project_point(x, f); };

    // Adaptive along-count: double until the measured mid-chord sagitta of
    // the projected core stays under 0.2% of the local projected diameter.
    int n = std::max(spec.segments_along, 2);
    const double L = arc.length();
    while (n < (1 << 16)) {
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            double t0 = arc.t_start + L * i / n;
            double t1 = arc.t_start + L * (i + 1) / n;
            Vec3 y0 = proj(arc.point_at(t0));
            Vec3 y1 = proj(arc.point_at(t1));
            Vec3 ym = proj(arc.point_at(0.5 * (t0 + t1)));
            double diam = 2.0 * std::sin(eps) * conformal_scale(arc.point_at(0.5 * (t0 + t1)), f);
            ok = dist(ym, (y0 + y1) * 0.5) <= 0.002 * diam;
        }
        if (ok) break;
        n *= 2;
    }

    auto [e1, e2] = detail::complement_basis(arc.circle.u, arc.circle.v);
    const int around = spec.segments_around;
    const int ncap = std::max(2, (around + 3) / 4);
    const bool spherical = spec.cap_style == CapStyle::SphericalCap;

    // Row list: optional start apex, rings, optional end apex. Every ring row
    // shares the angular parametrization, so one winding rule covers all.
    std::vector<std::vector<Vec4>> rows;
    auto ring_row = [&](const Vec4& center_dir, const Vec4& tilt, double beta) {
        std::vector<Vec4> row(around);
        for (int i = 0; i < around; ++i) {
            double al = 2.0 * M_PI * i / around;
            Vec4 radial = e1 * std::cos(al) + e2 * std::sin(al);
            row[i] = center_dir * std::cos(eps) +
                     (radial * std::cos(beta) + tilt * std::sin(beta)) * std::sin(eps);
        }
        return row;
    };

    const Vec4 v_start = arc.point_at(arc.t_start);
    const Vec4 v_end = arc.point_at(arc.t_end);
    const Vec4 t_start_out = normalized(arc.tangent_at(arc.t_start)) * -1.0;
    const Vec4 t_end_out = normalized(arc.tangent_at(arc.t_end));

    Vec4 apex_start{}, apex_end{};
    if (spherical) {
        apex_start = v_start * std::cos(eps) + t_start_out * std::sin(eps);
        apex_end = v_end * std::cos(eps) + t_end_out * std::sin(eps);
        for (int j = ncap - 1; j >= 1; --j)
            rows.push_back(ring_row(v_start, t_start_out, (M_PI / 2) * j / ncap));
    }
    const std::size_t first_body_row = rows.size();
    for (int j = 0; j <= n; ++j)
        rows.push_back(ring_row(arc.point_at(arc.t_start + L * j / n), {0, 0, 0, 0}, 0.0));
    const std::size_t last_body_row = rows.size() - 1;
    if (spherical)
        for (int j = 1; j <= ncap - 1; ++j)
            rows.push_back(ring_row(v_end, t_end_out, (M_PI / 2) * j / ncap));

    TriMesh m;
    m.shells = {0};
    std::vector<std::vector<std::uint32_t>> row_ids(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        row_ids[r].resize(around);
        for (int i = 0; i < around; ++i) {
            row_ids[r][i] = static_cast<std::uint32_t>(m.vertices.size());
            m.vertices.push_back(proj(rows[r][i]));
        }
    }

    auto quad_band = [&](const std::vector<std::uint32_t>& lo, const std::vector<std::uint32_t>& hi) {
        for (int i = 0; i < around; ++i) {
            int k = (i + 1) % around;
            m.triangles.push_back({lo[i], lo[k], hi[k]});
            m.triangles.push_back({lo[i], hi[k], hi[i]});
        }
    };
    for (std::size_t r = 0; r + 1 < rows.size(); ++r) quad_band(row_ids[r], row_ids[r + 1]);

    if (spherical) {
        std::uint32_t a0 = static_cast<std::uint32_t>(m.vertices.size());
        m.vertices.push_back(proj(apex_start));
        std::uint32_t a1 = static_cast<std::uint32_t>(m.vertices.size());
        m.vertices.push_back(proj(apex_end));
        for (int i = 0; i < around; ++i) {
            int k = (i + 1) % around;
            m.triangles.push_back({a0, row_ids.front()[k], row_ids.front()[i]});
            m.triangles.push_back({a1, row_ids.back()[i], row_ids.back()[k]});
        }
    } else {
        // Flat disks: fan to the exact Euclidean center of each projected
        // end ring.
        for (bool at_end : {false, true}) {
            double t = at_end ? arc.t_end : arc.t_start;
            Circline cl = project_circle(tube_circle(arc, t, spec), f);
            const Circle& c = std::get<Circle>(cl);
            std::uint32_t ctr = static_cast<std::uint32_t>(m.vertices.size());
            m.vertices.push_back(c.center);
            const auto& ring = at_end ? row_ids.back() : row_ids.front();
            for (int i = 0; i < around; ++i) {
                int k = (i + 1) % around;
                if (at_end)
                    m.triangles.push_back({ctr, ring[i], ring[k]});
                else
                    m.triangles.push_back({ctr, ring[k], ring[i]});
            }
        }
    }

    // Winding above is consistent band-to-band; make it globally outward.
    double vol6 = 0.0;
    for (const auto& t : m.triangles)
        vol6 += dot(m.vertices[t[0]], cross(m.vertices[t[1]], m.vertices[t[2]]));
    if (vol6 < 0)
        for (auto& t : m.triangles) std::swap(t[1], t[2]);

    // Printability metadata: one sample per body ring, measured on the exact
    // projected circle.
    m.metadata.part_count = 1;
    for (std::size_t r = first_body_row; r <= last_body_row; ++r) {
        double t = arc.t_start + L * (static_cast<double>(r - first_body_row)) / n;
        Circline cl = project_circle(tube_circle(arc, t, spec), f);
        const Circle& c = std::get<Circle>(cl);
        m.metadata.features.push_back({c.center, 2.0 * c.radius, 0});
        m.metadata.axis_samples.push_back({c.center, c.radius, 0});
    }
    auto [lmin, lmax] = lambda_extremes(arc, f);
    m.metadata.lambda_min = lmin;
    m.metadata.lambda_max = lmax;
    return m;
}

} // namespace s3forge
