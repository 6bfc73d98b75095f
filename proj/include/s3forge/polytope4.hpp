#pragma once
#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>
#include "s3geom.hpp"

namespace s3forge {

enum class PolytopeKind { Simplex5, Tesseract8, Cross16, Cell24, Cell120, Cell600 };

// Regular 4-polytope normalized onto S3: unit vertices plus the edge graph
// (pairs at the kind's minimal inter-vertex distance). cell_centers holds the
// unit centroid direction of every 3-cell, in a fixed deterministic order;
// rotations carry it along so orientation stays pose-independent.
struct Polytope4 {
    PolytopeKind kind;
    std::vector<Vec4> vertices;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j
    std::vector<Vec4> cell_centers;
};

// Arc of a great circle, shorter than a half turn.
struct GreatArc {
    CircleS3 circle;
    double t_start, t_end;

    GreatArc(const CircleS3& c, double t0, double t1) : circle(c), t_start(t0), t_end(t1) {
        if (!c.is_great()) throw Error("GreatArc: circle must be great");
        if (!(t_end - t_start > 0.0) || t_end - t_start >= M_PI)
            throw Error("GreatArc: span must lie in (0, pi)");
    }
    Vec4 point_at(double t) const { return circle.point_at(t); }
    Vec4 tangent_at(double t) const { return circle.tangent_at(t); }
    double length() const { return t_end - t_start; }
};

namespace detail {

inline std::vector<std::pair<std::uint32_t, std::uint32_t>> minimal_edges(
    const std::vector<Vec4>& vs) {
    const std::uint32_t n = static_cast<std::uint32_t>(vs.size());
    double best2 = 1e300;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            best2 = std::min(best2, norm2(vs[i] - vs[j]));
    const double thr = std::sqrt(best2) + 1e-9;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (norm2(vs[i] - vs[j]) <= thr * thr) edges.emplace_back(i, j);
    return edges;
}

// Centroid directions of all 4-cliques of the edge graph. For polytopes with
// tetrahedral cells (Cross16, Cell600) these are exactly the cell centers.
inline std::vector<Vec4> tetra_cell_centers(
    const std::vector<Vec4>& vs, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    const std::uint32_t n = static_cast<std::uint32_t>(vs.size());
    const std::uint32_t words = (n + 63) / 64;
    std::vector<std::uint64_t> adj(static_cast<size_t>(n) * words, 0);
    auto set = [&](std::uint32_t a, std::uint32_t b) { adj[a * words + b / 64] |= 1ull << (b % 64); };
    for (auto [a, b] : edges) { set(a, b); set(b, a); }

    auto for_bits_above = [&](const std::vector<std::uint64_t>& mask, std::uint32_t lo, auto&& fn) {
        for (std::uint32_t w = 0; w < words; ++w) {
            std::uint64_t bits = mask[w];
            if (w == lo / 64) bits &= ~((lo % 64 == 63) ? ~0ull : ((2ull << (lo % 64)) - 1));
            else if (w < lo / 64) bits = 0;
            while (bits) {
                std::uint32_t b = w * 64 + static_cast<std::uint32_t>(__builtin_ctzll(bits));
                bits &= bits - 1;
                fn(b);
            }
        }
    };
    auto intersect = [&](const std::vector<std::uint64_t>& m, std::uint32_t v) {
        std::vector<std::uint64_t> out(words);
        for (std::uint32_t w = 0; w < words; ++w) out[w] = m[w] & adj[v * words + w];
        return out;
    };

    std::vector<Vec4> centers;
    for (auto [u, v] : edges) {
        std::vector<std::uint64_t> row_u(adj.begin() + u * words, adj.begin() + (u + 1) * words);
        auto uv = intersect(row_u, v);
        for_bits_above(uv, v, [&](std::uint32_t w) {
            auto uvw = intersect(uv, w);
            for_bits_above(uvw, w, [&](std::uint32_t x) {
                centers.push_back(normalized(vs[u] + vs[v] + vs[w] + vs[x]));
            });
        });
    }
    return centers;
}

inline void normalize_all(std::vector<Vec4>& vs) {
    for (Vec4& v : vs) v = normalized(v);
}

} // namespace detail

inline Polytope4 build(PolytopeKind kind) {
    const double PHI = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec4> vs, cc;

    auto cross_verts = [] {
        std::vector<Vec4> out;
        for (int axis = 0; axis < 4; ++axis)
            for (double s : {1.0, -1.0}) {
                Vec4 v{0, 0, 0, 0};
                v[axis] = s;
                out.push_back(v);
            }
        return out;
    };
    auto tesseract_verts = [] {
        std::vector<Vec4> out;
        for (int b = 0; b < 16; ++b)
            out.push_back({(b & 1) ? -0.5 : 0.5, (b & 2) ? -0.5 : 0.5,
                           (b & 4) ? -0.5 : 0.5, (b & 8) ? -0.5 : 0.5});
        return out;
    };
    auto cell600_verts = [&] {
        std::vector<Vec4> out = cross_verts();
        for (const Vec4& v : tesseract_verts()) out.push_back(v);
        // Even permutations of (phi, 1, 1/phi, 0)/2 with all sign choices.
        const double tmpl[3] = {PHI / 2, 0.5, 1.0 / (2.0 * PHI)};
        int perm[4] = {0, 1, 2, 3};
        do {
            int inv = 0;
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b)
                    if (perm[a] > perm[b]) ++inv;
            if (inv % 2) continue;
            for (int s = 0; s < 8; ++s) {
                Vec4 v{0, 0, 0, 0};
                for (int m = 0; m < 3; ++m) v[perm[m]] = (s >> m & 1) ? -tmpl[m] : tmpl[m];
                out.push_back(v);
            }
        } while (std::next_permutation(perm, perm + 4));
        return out;
    };

    switch (kind) {
        case PolytopeKind::Simplex5: {
            // Standard simplex in the hyperplane sum(x)=const of R5, recentred,
            // expressed in a deterministic orthonormal basis of that hyperplane.
            std::array<std::array<double, 5>, 4> basis{};
            for (int i = 0; i < 4; ++i) {  // Gram-Schmidt over e_i - e_4
                std::array<double, 5> b{};
                b[i] = 1;
                b[4] = -1;
                for (int j = 0; j < i; ++j) {
                    double d = 0;
                    for (int k = 0; k < 5; ++k) d += b[k] * basis[j][k];
                    for (int k = 0; k < 5; ++k) b[k] -= d * basis[j][k];
                }
                double n = 0;
                for (int k = 0; k < 5; ++k) n += b[k] * b[k];
                n = std::sqrt(n);
                for (int k = 0; k < 5; ++k) basis[i][k] = b[k] / n;
            }
            for (int i = 0; i < 5; ++i) {
                std::array<double, 5> w{};
                for (int k = 0; k < 5; ++k) w[k] = (k == i ? 1.0 : 0.0) - 0.2;
                Vec4 v;
                for (int j = 0; j < 4; ++j) {
                    double d = 0;
                    for (int k = 0; k < 5; ++k) d += w[k] * basis[j][k];
                    v[j] = d;
                }
                vs.push_back(v);
            }
            detail::normalize_all(vs);
            for (const Vec4& v : vs) cc.push_back(v * -1.0);  // opposite facet centroid
            break;
        }
        case PolytopeKind::Tesseract8:
            vs = tesseract_verts();
            cc = cross_verts();  // one cube per coordinate halfspace
            break;
        case PolytopeKind::Cross16:
            vs = cross_verts();
            break;  // tetrahedral cells found below
        case PolytopeKind::Cell24: {
            const double s = 1.0 / std::sqrt(2.0);
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    for (int b = 0; b < 4; ++b) {
                        Vec4 v{0, 0, 0, 0};
                        v[i] = (b & 1) ? -s : s;
                        v[j] = (b & 2) ? -s : s;
                        vs.push_back(v);
                    }
            cc = cross_verts();  // self-dual: octahedron centers
            for (const Vec4& v : tesseract_verts()) cc.push_back(v);
            break;
        }
        case PolytopeKind::Cell600:
            vs = cell600_verts();
            break;  // tetrahedral cells found below
        case PolytopeKind::Cell120: {
            // Dual construction: vertices are the normalized tetrahedron
            // centroids of the 600-cell; cells sit at the 600-cell's vertices.
            Polytope4 six = build(PolytopeKind::Cell600);
            vs = detail::tetra_cell_centers(six.vertices, six.edges);
            cc = six.vertices;
            break;
        }
    }

    Polytope4 p{kind, std::move(vs), {}, std::move(cc)};
    p.edges = detail::minimal_edges(p.vertices);
    if (kind == PolytopeKind::Cross16 || kind == PolytopeKind::Cell600)
        p.cell_centers = detail::tetra_cell_centers(p.vertices, p.edges);
    return p;
}

// One geodesic arc per edge, running from vertex i to vertex j.
inline std::vector<GreatArc> skeleton_arcs(const Polytope4& p) {
    std::vector<GreatArc> arcs;
    arcs.reserve(p.edges.size());
    for (auto [i, j] : p.edges) {
        const Vec4& a = p.vertices[i];
        const Vec4& b = p.vertices[j];
        double d = std::clamp(dot(a, b), -1.0, 1.0);
        if (d <= -1.0 + 1e-12) throw AntipodalEdge("skeleton_arcs: antipodal edge endpoints");
        Vec4 w = b - a * d;
        arcs.emplace_back(CircleS3({0, 0, 0, 0}, a, normalized(w), 1.0), 0.0, std::acos(d));
    }
    return arcs;
}

// How to place a polytope relative to the projection pole.
struct Orientation {
    enum class Mode { VertexCentered, CellCentered, Generic };
    Mode mode;
    Quat q{1, 0, 0, 0};

    static Orientation vertex_centered() { return {Mode::VertexCentered, {1, 0, 0, 0}}; }
    static Orientation cell_centered() { return {Mode::CellCentered, {1, 0, 0, 0}}; }
    static Orientation generic(const UnitQuaternion& g) { return {Mode::Generic, g.q()}; }
};

// Rotate the polytope so a vertex (or a cell center) lands on the frame's
// pole; Generic applies the given rotation as-is.
inline Polytope4 orient(const Polytope4& p, const Orientation& mode, const ProjectionFrame& f) {
    UnitQuaternion r = q_one();
    switch (mode.mode) {
        case Orientation::Mode::VertexCentered:
            r = mover(UnitQuaternion::from_op(Quat{p.vertices.at(0)}), f.pole);
            break;
        case Orientation::Mode::CellCentered:
            r = mover(UnitQuaternion::from_op(Quat{p.cell_centers.at(0)}), f.pole);
            break;
        case Orientation::Mode::Generic:
            r = UnitQuaternion::from_op(mode.q);
            break;
    }
    Polytope4 out{p.kind, {}, p.edges, {}};
    out.vertices.reserve(p.vertices.size());
    for (const Vec4& v : p.vertices) out.vertices.push_back(rotate4(r, v));
    out.cell_centers.reserve(p.cell_centers.size());
    for (const Vec4& c : p.cell_centers) out.cell_centers.push_back(rotate4(r, c));
    return out;
}

namespace detail {

// Height above the frame's equator along an arc: x3(t) = pc3 + R cos(t - sigma).
struct ArcHeight {
    double pc3, R, sigma;
};

inline ArcHeight arc_height(const GreatArc& a, const ProjectionFrame& f) {
    double u3 = rotate4(f.pre_rotation, a.circle.u).x3;
    double v3 = rotate4(f.pre_rotation, a.circle.v).x3;
    double pc3 = rotate4(f.pre_rotation, a.circle.plane_center).x3;
    return {pc3, a.circle.radius * std::hypot(u3, v3), std::atan2(v3, u3)};
}

// Exact x3 range over the arc: the sinusoid peaks at t - sigma = 0 and pi;
// otherwise the extremes sit at the endpoints.
inline std::pair<double, double> arc_x3_range(const GreatArc& a, const ProjectionFrame& f) {
    auto [pc3, R, sigma] = arc_height(a, f);
    double s = std::fmod(a.t_start - sigma, 2.0 * M_PI);
    if (s < 0) s += 2.0 * M_PI;
    const double L = a.length();
    auto reaches = [&](double phase) {
        return (s <= phase && phase <= s + L) ||
               (s <= phase + 2.0 * M_PI && phase + 2.0 * M_PI <= s + L);
    };
    double hi = std::max(std::cos(s), std::cos(s + L));
    double lo = std::min(std::cos(s), std::cos(s + L));
    if (reaches(0.0)) hi = 1.0;
    if (reaches(M_PI)) lo = -1.0;
    return {pc3 + R * lo, pc3 + R * hi};
}

} // namespace detail

// Keep only the southern part (x3 <= 1e-12 in the frame), splitting arcs at
// equator crossings. Closed form: the crossing parameters solve
// pc3 + R cos(t - sigma) = tau.
inline std::vector<GreatArc> half_cut(const std::vector<GreatArc>& arcs, const ProjectionFrame& f) {
    const double tau = 1e-12;
    std::vector<GreatArc> out;
    for (const GreatArc& a : arcs) {
        auto [x3_lo, x3_hi] = detail::arc_x3_range(a, f);
        if (x3_hi <= tau) {
            out.push_back(a);  // never rises above the equator: unchanged
            continue;
        }
        if (x3_lo > tau) continue;  // entirely northern
        auto [pc3, R, sigma] = detail::arc_height(a, f);
        double c = std::clamp((tau - pc3) / R, -1.0, 1.0);
        double delta = std::acos(c);  // allowed band: t - sigma in [delta, 2pi - delta]
        double s = std::fmod(a.t_start - sigma, 2.0 * M_PI);
        if (s < 0) s += 2.0 * M_PI;
        const double L = a.length();
        auto emit = [&](double lo, double hi) {
            if (hi - lo > 1e-12)
                out.emplace_back(a.circle, a.t_start + (lo - s), a.t_start + (hi - s));
        };
        emit(std::max(s, delta), std::min(s + L, 2.0 * M_PI - delta));
        emit(std::max(s, 2.0 * M_PI + delta), std::min(s + L, 4.0 * M_PI - delta));
    }
    return out;
}

// Exact min/max of the conformal scale along one arc: lambda is monotone in
// x3, and x3 is a sinusoid whose interior extremes sit at sigma and sigma+pi.
inline std::pair<double, double> lambda_extremes(const GreatArc& a, const ProjectionFrame& f) {
    auto [x3_min, x3_max] = detail::arc_x3_range(a, f);
    if (1.0 - x3_max <= 1e-12) throw AtPole("lambda_extremes: arc reaches the pole");
    return {1.0 / (1.0 - x3_min), 1.0 / (1.0 - x3_max)};
}

} // namespace s3forge
