#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "meshkit.hpp"
#include "parallel.hpp"
#include "s3geom.hpp"

namespace s3forge {

enum class SurfaceKind { CliffordTorus, SudaneseMobius, KleinBottle, TorusKnotBand };

// Knot fields (num, den, theta0, half_width) are ignored by the other kinds.
struct SurfaceSpec {
    SurfaceKind kind = SurfaceKind::CliffordTorus;
    int num = 3, den = 2;
    double theta0 = M_PI / 4;
    double half_width = 0.1;
};

enum class NormalMode { Cramer, KnotAlternative };

struct PunctureRect {
    double theta, phi;            // center, in surface parameters
    double half_theta, half_phi;  // half extents; may overhang a free boundary
};

struct ShellSpec {
    double thickness_s3;  // half-thickness: the solid spans psi in [-t, +t]
    int grid_theta = 16;
    int grid_phi = 24;
    double strut_fraction = 0.5;  // material fraction of each cell along gridlines
    std::vector<PunctureRect> punctures;
};

struct CogSpec {
    int tooth_count;
    double tooth_height;  // radial extent beyond the shell surface
    double top_fraction = 0.6;
    double base_fraction = 0.7;  // footprint in grid-cell units
};

namespace detail {

struct ParamDomain {
    double th_lo, th_hi, ph_lo, ph_hi;
};

inline void check_surface_spec(const SurfaceSpec& s) {
    if (s.kind != SurfaceKind::TorusKnotBand) return;
    if (s.num < 1 || s.den < 1) throw Error("SurfaceSpec: knot fraction must be positive");
    if (std::gcd(s.num, s.den) != 1) throw Error("SurfaceSpec: knot fraction must be reduced");
    if (!(s.half_width > 0.0) || !(s.theta0 - s.half_width > 0.0) ||
        !(s.theta0 + s.half_width < M_PI / 2))
        throw Error("SurfaceSpec: knot band must fit inside (0, pi/2)");
}

inline ParamDomain domain_of(const SurfaceSpec& s) {
    switch (s.kind) {
        case SurfaceKind::CliffordTorus: return {0.0, 2.0 * M_PI, 0.0, M_PI};
        case SurfaceKind::SudaneseMobius: return {0.0, M_PI, 0.0, M_PI};
        case SurfaceKind::KleinBottle: return {0.0, 2.0 * M_PI, 0.0, M_PI};
        case SurfaceKind::TorusKnotBand:
        default:
            return {s.theta0 - s.half_width, s.theta0 + s.half_width, 0.0, 2.0 * M_PI * s.den};
    }
}

// Checks accept the closure of the half-open domain: the open edges state
// where the map is injective, but seam meshing evaluates the boundary too.
inline void check_domain(const SurfaceSpec& s, double th, double ph) {
    check_surface_spec(s);
    ParamDomain d = domain_of(s);
    if (th < d.th_lo - 1e-9 || th > d.th_hi + 1e-9 || ph < d.ph_lo - 1e-9 || ph > d.ph_hi + 1e-9)
        throw OutOfDomain("surface parameter outside domain");
}

inline double knot_frac(const SurfaceSpec& s) {
    return static_cast<double>(s.num) / static_cast<double>(s.den);
}

} // namespace detail

inline Vec4 eval_p(const SurfaceSpec& s, double th, double ph) {
    detail::check_domain(s, th, ph);
    double ct = std::cos(th), st = std::sin(th);
    switch (s.kind) {
        case SurfaceKind::CliffordTorus:
            return {ct * std::cos(ph), ct * std::sin(ph), st * std::cos(ph), st * std::sin(ph)};
        case SurfaceKind::SudaneseMobius:
        case SurfaceKind::KleinBottle:
            return {ct * std::cos(ph), ct * std::sin(ph), st * std::cos(2 * ph),
                    st * std::sin(2 * ph)};
        case SurfaceKind::TorusKnotBand:
        default: {
            double g = detail::knot_frac(s) * ph;
            return {ct * std::cos(ph), ct * std::sin(ph), st * std::cos(g), st * std::sin(g)};
        }
    }
}

inline std::pair<Vec4, Vec4> eval_partials(const SurfaceSpec& s, double th, double ph) {
    detail::check_domain(s, th, ph);
    double ct = std::cos(th), st = std::sin(th);
    double cp = std::cos(ph), sp = std::sin(ph);
    switch (s.kind) {
        case SurfaceKind::CliffordTorus:
            return {{-st * cp, -st * sp, ct * cp, ct * sp},
                    {-ct * sp, ct * cp, -st * sp, st * cp}};
        case SurfaceKind::SudaneseMobius:
        case SurfaceKind::KleinBottle: {
            double c2 = std::cos(2 * ph), s2 = std::sin(2 * ph);
            return {{-st * cp, -st * sp, ct * c2, ct * s2},
                    {-ct * sp, ct * cp, -2 * st * s2, 2 * st * c2}};
        }
        case SurfaceKind::TorusKnotBand:
        default: {
            double fr = detail::knot_frac(s);
            double cg = std::cos(fr * ph), sg = std::sin(fr * ph);
            return {{-st * cp, -st * sp, ct * cg, ct * sg},
                    {-ct * sp, ct * cp, -fr * st * sg, fr * st * cg}};
        }
    }
}

// Normal as the formal determinant of the matrix with rows p, dp/dtheta,
// dp/dphi and a basis row, expanded along the basis row. The alternating
// signs are chosen so the result matches the closed forms this construction
// is known to produce for the torus and Mobius cases.
inline Vec4 normal_cramer(const SurfaceSpec& s, double th, double ph) {
    Vec4 p = eval_p(s, th, ph);
    auto [pt, pp] = eval_partials(s, th, ph);
    auto minor3 = [&](int skip) {
        double m[3][3];
        for (int c = 0, k = 0; c < 4; ++c) {
            if (c == skip) continue;
            m[0][k] = p[c];
            m[1][k] = pt[c];
            m[2][k] = pp[c];
            ++k;
        }
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    Vec4 n{-minor3(0), minor3(1), -minor3(2), minor3(3)};
    double len = norm(n);
    if (len < 1e-10) throw DegenerateTangent("normal_cramer: rows nearly dependent");
    return n * (1.0 / len);
}

// Unit field orthogonal to p but deliberately not orthogonal to dp/dphi;
// its slight shear keeps the offset band from twisting against the knot.
inline Vec4 knot_alt_normal(const SurfaceSpec& s, double th, double ph) {
    if (s.kind != SurfaceKind::TorusKnotBand)
        throw Error("knot_alt_normal: only defined for knot bands");
    detail::check_domain(s, th, ph);
    double g = detail::knot_frac(s) * ph;
    return {-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph),
            std::cos(th) * std::sin(g), -std::cos(th) * std::cos(g)};
}

inline Vec4 offset_r(const SurfaceSpec& s, double th, double ph, double psi,
                     NormalMode mode = NormalMode::Cramer) {
    if (std::abs(psi) > M_PI / 2 + 1e-12) throw OutOfDomain("offset_r: |psi| must be <= pi/2");
    Vec4 n = mode == NormalMode::KnotAlternative ? knot_alt_normal(s, th, ph)
                                                 : normal_cramer(s, th, ph);
    Vec4 p = eval_p(s, th, ph);
    return p * std::cos(psi) + n * std::sin(psi);
}

namespace detail {

// One parameter identification: (theta, phi) -> (sgn*theta + a, phi + b).
struct ParamImage {
    double sgn, a, b;
};

inline std::vector<ParamImage> param_images(const SurfaceSpec& s) {
    std::vector<ParamImage> out;
    switch (s.kind) {
        case SurfaceKind::CliffordTorus:
            for (int n = -2; n <= 2; ++n)
                for (int m = -3; m <= 3; ++m)
                    out.push_back({1.0, 2.0 * M_PI * m + M_PI * n, M_PI * n});
            break;
        case SurfaceKind::SudaneseMobius:
            for (int k = -2; k <= 2; ++k) {
                out.push_back({1.0, 0.0, 2.0 * M_PI * k});
                out.push_back({-1.0, M_PI, M_PI + 2.0 * M_PI * k});
            }
            break;
        case SurfaceKind::KleinBottle:
            for (int m = -2; m <= 2; ++m)
                for (int k = -2; k <= 2; ++k) {
                    out.push_back({1.0, 2.0 * M_PI * m, 2.0 * M_PI * k});
                    out.push_back({-1.0, M_PI + 2.0 * M_PI * m, M_PI + 2.0 * M_PI * k});
                }
            break;
        case SurfaceKind::TorusKnotBand:
            for (int k = -2; k <= 2; ++k) out.push_back({1.0, 0.0, 2.0 * M_PI * s.den * k});
            break;
    }
    return out;
}

// Map a parameter point into the fundamental domain, or nullopt if no image
// lands there (possible only across free boundaries).
inline std::optional<std::pair<double, double>> canon_param(const ParamDomain& d,
                                                            const std::vector<ParamImage>& imgs,
                                                            double th, double ph) {
    for (const ParamImage& g : imgs) {
        double t = g.sgn * th + g.a;
        double p = ph + g.b;
        if (t >= d.th_lo - 1e-12 && t < d.th_hi - 1e-12 && p >= d.ph_lo - 1e-12 &&
            p < d.ph_hi - 1e-12)
            return std::make_pair(std::max(t, d.th_lo), std::max(p, d.ph_lo));
    }
    return std::nullopt;
}

inline bool in_puncture(const std::vector<PunctureRect>& rects,
                        const std::vector<ParamImage>& imgs, double th, double ph) {
    for (const PunctureRect& r : rects)
        for (const ParamImage& g : imgs) {
            double t = g.sgn * th + g.a;
            double p = ph + g.b;
            if (std::abs(t - r.theta) <= r.half_theta && std::abs(p - r.phi) <= r.half_phi)
                return true;
        }
    return false;
}

// All parameter points mapping to the given location, found by a coarse scan
// plus Gauss-Newton polish, deduplicated modulo the identifications.
inline std::vector<std::pair<double, double>> pole_preimages(const SurfaceSpec& s,
                                                             const Vec4& target) {
    ParamDomain d = domain_of(s);
    auto imgs = param_images(s);
    auto residual = [&](double th, double ph) { return dist(eval_p(s, th, ph), target); };
    std::vector<std::pair<double, double>> found;
    const int N = 160;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) {
            double th = d.th_lo + (d.th_hi - d.th_lo) * i / N;
            double ph = d.ph_lo + (d.ph_hi - d.ph_lo) * j / N;
            if (residual(th, ph) > 0.3) continue;
            // Gauss-Newton on |p - target|^2
            bool ok = false;
            for (int it = 0; it < 40; ++it) {
                Vec4 r = eval_p(s, th, ph) - target;
                if (norm(r) < 1e-11) {
                    ok = true;
                    break;
                }
                auto [pt, pp] = eval_partials(s, th, ph);
                double a11 = dot(pt, pt), a12 = dot(pt, pp), a22 = dot(pp, pp);
                double b1 = -dot(pt, r), b2 = -dot(pp, r);
                double det = a11 * a22 - a12 * a12;
                if (std::abs(det) < 1e-14) break;
                th = std::clamp(th + (b1 * a22 - b2 * a12) / det, d.th_lo, d.th_hi);
                ph = std::clamp(ph + (b2 * a11 - b1 * a12) / det, d.ph_lo, d.ph_hi);
            }
            if (!ok) continue;
            auto c = canon_param(d, imgs, th, ph);
            if (!c) continue;
            bool dup = false;
            for (auto& [ft, fp] : found)
                for (const ParamImage& g : imgs)
                    if (std::abs(g.sgn * c->first + g.a - ft) < 1e-5 &&
                        std::abs(c->second + g.b - fp) < 1e-5)
                        dup = true;
            if (!dup) found.push_back(*c);
        }
    return found;
}

// theta map across the phi seam, used to permute breakpoints when gluing.
inline double seam_theta(const SurfaceSpec& s, const ParamDomain& d, double th) {
    switch (s.kind) {
        case SurfaceKind::CliffordTorus: {
            double t = th + M_PI;
            return t >= d.th_hi ? t - 2.0 * M_PI : t;
        }
        case SurfaceKind::SudaneseMobius: return M_PI - th;
        case SurfaceKind::KleinBottle: {
            double t = M_PI - th;
            return t < d.th_lo ? t + 2.0 * M_PI : t;
        }
        case SurfaceKind::TorusKnotBand:
        default: return th;
    }
}

inline bool seam_flips_normal(SurfaceKind k) {
    return k == SurfaceKind::SudaneseMobius || k == SurfaceKind::KleinBottle;
}

inline bool theta_wraps(SurfaceKind k) {
    return k == SurfaceKind::CliffordTorus || k == SurfaceKind::KleinBottle;
}

inline void sort_unique(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            v.end());
}

} // namespace detail

// Thickened perforated surface: outer layer at psi = +t, inner at -t, walls
// along every material/void transition, plus optional cog teeth as separate
// closed frustum shells. Seam identifications are applied per kind.
inline TriMesh mesh_shell(const SurfaceSpec& spec, const ShellSpec& shell,
                          const ProjectionFrame& f,
                          const std::optional<CogSpec>& cogs = std::nullopt,
                          NormalMode mode = NormalMode::Cramer) {
    detail::check_surface_spec(spec);
    if (!(shell.thickness_s3 > 0.0) || !(shell.thickness_s3 < M_PI / 8))
        throw Error("ShellSpec: thickness_s3 must lie in (0, pi/8)");
    if (shell.grid_theta < 2 || shell.grid_phi < 2)
        throw Error("ShellSpec: grid counts must be >= 2");
    if (shell.strut_fraction < 0.1 || shell.strut_fraction > 0.9)
        throw Error("ShellSpec: strut_fraction must lie in [0.1, 0.9]");
    if (cogs) {
        if (cogs->tooth_count < 3) throw Error("CogSpec: tooth_count must be >= 3");
        if (!(cogs->tooth_height > 0.0) ||
            !(cogs->tooth_height + shell.thickness_s3 < M_PI / 8))
            throw Error("CogSpec: tooth_height + shell thickness must stay under pi/8");
        if (cogs->top_fraction <= 0.0 || cogs->top_fraction >= 1.0 ||
            cogs->base_fraction <= 0.0 || cogs->base_fraction >= 1.0)
            throw Error("CogSpec: fractions must lie in (0,1)");
    }

    const double eps = shell.thickness_s3;
    const detail::ParamDomain d = detail::domain_of(spec);
    const auto imgs = detail::param_images(spec);
    const double Hth = (d.th_hi - d.th_lo) / shell.grid_theta;
    const double Hph = (d.ph_hi - d.ph_lo) / shell.grid_phi;
    const double th_mid = 0.5 * (d.th_lo + d.th_hi);

    // Per-cell hole intervals. The phi holes are centered; theta holes are
    // centered too unless a cog base edge runs through the cell, in which
    // case the hole abuts that edge so no sliver of material is left between
    // the hole and the tooth footprint.
    const double hole_th = (1.0 - shell.strut_fraction) * Hth;
    const double hole_ph = (1.0 - shell.strut_fraction) * Hph;
    double base_half_th = cogs ? 0.5 * cogs->base_fraction * Hth : 0.0;
    std::vector<std::pair<double, double>> th_holes(shell.grid_theta), ph_holes(shell.grid_phi);
    for (int i = 0; i < shell.grid_theta; ++i) {
        double a = d.th_lo + i * Hth, b = a + Hth;
        double lo = 0.5 * (a + b) - 0.5 * hole_th, hi = lo + hole_th;
        if (cogs) {
            double e_lo = th_mid - base_half_th, e_hi = th_mid + base_half_th;
            bool has_lo = e_lo > a + 1e-12 && e_lo < b - 1e-12;
            bool has_hi = e_hi > a + 1e-12 && e_hi < b - 1e-12;
            if (has_lo && has_hi) {
                lo = hi = a;  // cell sits under the tooth base: no hole
            } else if (has_lo) {
                hi = e_lo;
                lo = std::max(a, hi - hole_th);
            } else if (has_hi) {
                lo = e_hi;
                hi = std::min(b, lo + hole_th);
            }
        }
        th_holes[i] = {lo, hi};
    }
    for (int j = 0; j < shell.grid_phi; ++j) {
        double c = d.ph_lo + (j + 0.5) * Hph;
        ph_holes[j] = {c - 0.5 * hole_ph, c + 0.5 * hole_ph};
    }

    auto material_at = [&](double th, double ph) {
        auto c = detail::canon_param(d, imgs, th, ph);
        if (!c) return false;
        auto [t, p] = *c;
        if (detail::in_puncture(shell.punctures, imgs, t, p)) return false;
        int i = std::clamp(static_cast<int>((t - d.th_lo) / Hth), 0, shell.grid_theta - 1);
        int j = std::clamp(static_cast<int>((p - d.ph_lo) / Hph), 0, shell.grid_phi - 1);
        return !(t > th_holes[i].first && t < th_holes[i].second && p > ph_holes[j].first &&
                 p < ph_holes[j].second);
    };

    // A surface running through the pole must be opened by a puncture there.
    const Vec4 pole = f.pole.vec();
    for (auto& [pt, pp] : detail::pole_preimages(spec, pole))
        if (!detail::in_puncture(shell.punctures, imgs, pt, pp))
            throw PoleCollision("mesh_shell: pole preimage not covered by a puncture");

    // Tooth tips reach further from the mid-surface than the plate does.
    if (cogs)
        for (int site = 0; site < cogs->tooth_count; ++site) {
            double pc = d.ph_lo + (site + 0.5) * (d.ph_hi - d.ph_lo) / cogs->tooth_count;
            for (int a = -1; a <= 1; ++a)
                for (int b = -1; b <= 1; ++b) {
                    Vec4 q = eval_p(spec, th_mid + a * base_half_th,
                                    pc + b * 0.5 * cogs->base_fraction * Hph);
                    if (geodesic(q, pole) <= eps + cogs->tooth_height + 1e-5)
                        throw PoleCollision("mesh_shell: cog tooth reaches the projection pole");
                }
        }

    // Breakpoints: gridlines, hole edges, puncture edges (orbit-expanded so
    // seam vertex sets match), then closure under the seam theta map.
    std::vector<double> T{d.th_lo, d.th_hi}, P{d.ph_lo, d.ph_hi};
    for (int i = 1; i < shell.grid_theta; ++i) T.push_back(d.th_lo + i * Hth);
    for (int j = 1; j < shell.grid_phi; ++j) P.push_back(d.ph_lo + j * Hph);
    for (auto& [a, b] : th_holes)
        if (b > a) T.insert(T.end(), {a, b});
    for (auto& [a, b] : ph_holes) P.insert(P.end(), {a, b});
    for (const PunctureRect& r : shell.punctures)
        for (const detail::ParamImage& g : imgs) {
            // image of the rect under g (theta edges swap when mirrored)
            double t0 = g.sgn * (r.theta - r.half_theta) + g.a;
            double t1 = g.sgn * (r.theta + r.half_theta) + g.a;
            if (t0 > t1) std::swap(t0, t1);
            double p0 = r.phi - r.half_phi + g.b, p1 = r.phi + r.half_phi + g.b;
            if (t1 < d.th_lo || t0 > d.th_hi || p1 < d.ph_lo || p0 > d.ph_hi) continue;
            for (double t : {t0, t1})
                if (t > d.th_lo + 1e-12 && t < d.th_hi - 1e-12) T.push_back(t);
            for (double p : {p0, p1})
                if (p > d.ph_lo + 1e-12 && p < d.ph_hi - 1e-12) P.push_back(p);
        }
    auto symmetrize_T = [&] {
        if (spec.kind == SurfaceKind::TorusKnotBand) return;
        std::vector<double> extra;
        for (double t : T) {
            double m = detail::seam_theta(spec, d, t);
            if (m > d.th_lo + 1e-12 && m < d.th_hi - 1e-12) extra.push_back(m);
        }
        T.insert(T.end(), extra.begin(), extra.end());
        detail::sort_unique(T);
    };
    detail::sort_unique(T);
    detail::sort_unique(P);
    symmetrize_T();

    auto project_r = [&](double th, double ph, double psi) {
        return project_point(offset_r(spec, th, ph, psi, mode), f);
    };
    auto feature_scale = [&](double th, double ph) {
        return 2.0 * std::sin(eps) * conformal_scale(eval_p(spec, th, ph), f);
    };

    // Adaptive refinement: split intervals until the projected mid-chord
    // deviation of both offset layers is under 0.2% of the local feature
    // size, probing at the cross-direction interval midpoints.
    auto refine = [&](std::vector<double>& main, const std::vector<double>& probe, bool is_th) {
        for (int round = 0; round < 10; ++round) {
            std::vector<double> splits;
            std::size_t stride = std::max<std::size_t>(1, (probe.size() - 1) / 24);
            for (std::size_t i = 0; i + 1 < main.size(); ++i) {
                double a = main[i], b = main[i + 1], m = 0.5 * (a + b);
                if (b - a < 1e-6) continue;
                bool split = false;
                for (std::size_t j = 0; j + 1 < probe.size() && !split; j += stride) {
                    double q = 0.5 * (probe[j] + probe[j + 1]);
                    double th = is_th ? m : q, ph = is_th ? q : m;
                    if (!material_at(th, ph)) continue;
                    double target = 0.002 * feature_scale(th, ph);
                    for (double psi : {eps, -eps}) {
                        Vec3 y0 = is_th ? project_r(a, q, psi) : project_r(q, a, psi);
                        Vec3 y1 = is_th ? project_r(b, q, psi) : project_r(q, b, psi);
                        Vec3 ym = is_th ? project_r(m, q, psi) : project_r(q, m, psi);
                        if (dist(ym, (y0 + y1) * 0.5) > target) {
                            split = true;
                            break;
                        }
                    }
                }
                if (split) splits.push_back(m);
            }
            if (splits.empty() || main.size() + splits.size() > 1500) break;
            main.insert(main.end(), splits.begin(), splits.end());
            detail::sort_unique(main);
            if (is_th) symmetrize_T();
        }
    };
    refine(T, P, true);
    refine(P, T, false);

    const int NT = static_cast<int>(T.size()) - 1;  // pixel counts
    const int NP = static_cast<int>(P.size()) - 1;
    std::vector<std::uint8_t> mat(static_cast<std::size_t>(NT) * NP);
    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j)
            mat[i * NP + j] =
                material_at(0.5 * (T[i] + T[i + 1]), 0.5 * (P[j] + P[j + 1])) ? 1 : 0;

    // No material may come within 1e-5 of the pole (the offset solid stays
    // within geodesic eps of the mid-surface).
    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j) {
            if (!mat[i * NP + j]) continue;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double th = T[i] + (T[i + 1] - T[i]) * a / 2.0;
                    double ph = P[j] + (P[j + 1] - P[j]) * b / 2.0;
                    if (geodesic(eval_p(spec, th, ph), pole) <= eps + 1e-5)
                        throw PoleCollision("mesh_shell: material reaches the projection pole");
                }
        }

    // psi layer count: walls are ruled in psi, refined the same way.
    int NPSI = 2;
    {
        std::vector<std::pair<double, double>> probes;
        for (int i = 0; i < NT && probes.size() < 48; ++i)
            for (int j = 0; j < NP && probes.size() < 48; ++j)
                if (mat[i * NP + j] &&
                    (i == 0 || j == 0 || !mat[(i - 1) * NP + j] || !mat[i * NP + j - 1]))
                    probes.emplace_back(0.5 * (T[i] + T[i + 1]), 0.5 * (P[j] + P[j + 1]));
        for (; NPSI < 32; NPSI *= 2) {
            bool ok = true;
            for (auto& [th, ph] : probes) {
                double target = 0.002 * feature_scale(th, ph);
                for (int k = 0; k < NPSI && ok; ++k) {
                    double s0 = -eps + 2.0 * eps * k / NPSI;
                    double s1 = -eps + 2.0 * eps * (k + 1) / NPSI;
                    Vec3 y0 = project_r(th, ph, s0), y1 = project_r(th, ph, s1);
                    Vec3 ym = project_r(th, ph, 0.5 * (s0 + s1));
                    ok = dist(ym, (y0 + y1) * 0.5) <= target;
                }
                if (!ok) break;
            }
            if (ok) break;
        }
    }

    // Canonical node map. Nodes on the far phi line fold onto the phi_lo
    // line through the seam permutation (with the psi flip for one-sided
    // gluings); the far theta line folds onto theta_lo for periodic kinds.
    const int nodes_t = NT + 1, nodes_p = NP + 1;
    const bool wrap_t = detail::theta_wraps(spec.kind);
    const bool flip = detail::seam_flips_normal(spec.kind);
    std::vector<int> seam_perm(nodes_t);
    for (int i = 0; i < nodes_t; ++i) {
        double want = detail::seam_theta(spec, d, T[i]);
        auto it = std::lower_bound(T.begin(), T.end(), want - 1e-9);
        if (it == T.end() || std::abs(*it - want) > 1e-9)
            throw BadIdentification("mesh_shell: seam breakpoints do not match");
        seam_perm[i] = static_cast<int>(it - T.begin());
    }
    struct NodeKey {
        int i, j, k;
    };
    auto canon_node = [&](int i, int j, int k) {
        if (wrap_t && i == NT) i = 0;
        if (j == NP) {
            i = seam_perm[i];
            j = 0;
            if (flip) k = NPSI - k;
            if (wrap_t && i == NT) i = 0;
        }
        return NodeKey{i, j, k};
    };

    // Positions for every node adjacent to a material pixel, all layers.
    std::vector<std::int32_t> slot(static_cast<std::size_t>(nodes_t) * nodes_p, -1);
    std::vector<std::pair<int, int>> needed;
    auto mark = [&](int i, int j) {
        NodeKey c = canon_node(i, j, 0);
        auto& s = slot[static_cast<std::size_t>(c.i) * nodes_p + c.j];
        if (s < 0) {
            s = static_cast<std::int32_t>(needed.size());
            needed.emplace_back(c.i, c.j);
        }
    };
    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j)
            if (mat[i * NP + j]) {
                mark(i, j);
                mark(i + 1, j);
                mark(i, j + 1);
                mark(i + 1, j + 1);
            }
    std::vector<Vec3> pos(needed.size() * (NPSI + 1));
    parallel_for(needed.size(), [&](std::size_t n) {
        auto [i, j] = needed[n];
        for (int k = 0; k <= NPSI; ++k)
            pos[n * (NPSI + 1) + k] = project_r(T[i], P[j], -eps + 2.0 * eps * k / NPSI);
    });

    // Seam consistency: the same node reached through the seam must land on
    // the same projected point.
    for (int i = 0; i < nodes_t; ++i) {
        NodeKey c = canon_node(i, NP, NPSI);
        auto s = slot[static_cast<std::size_t>(c.i) * nodes_p + c.j];
        if (s < 0) continue;
        Vec3 via_seam = project_r(T[i], P[NP], eps);
        if (dist(via_seam, pos[s * (NPSI + 1) + c.k]) > 1e-9)
            throw BadIdentification("mesh_shell: glued edges disagree beyond 1e-9");
    }
    if (wrap_t)
        for (int j = 0; j < nodes_p; ++j) {
            NodeKey c = canon_node(NT, j, NPSI);
            auto s = slot[static_cast<std::size_t>(c.i) * nodes_p + c.j];
            if (s < 0) continue;
            Vec3 via_wrap = project_r(T[NT], P[j], eps);
            if (dist(via_wrap, pos[s * (NPSI + 1) + c.k]) > 1e-9)
                throw BadIdentification("mesh_shell: wrapped edges disagree beyond 1e-9");
        }

    TriMesh m;
    m.shells = {0};
    std::unordered_map<std::uint64_t, std::uint32_t> vid;
    auto vertex = [&](int i, int j, int k) {
        NodeKey c = canon_node(i, j, k);
        std::uint64_t key =
            (static_cast<std::uint64_t>(c.i) * nodes_p + c.j) * (NPSI + 1) + c.k;
        auto [it, fresh] = vid.try_emplace(key, static_cast<std::uint32_t>(m.vertices.size()));
        if (fresh) {
            auto s = slot[static_cast<std::size_t>(c.i) * nodes_p + c.j];
            m.vertices.push_back(pos[s * (NPSI + 1) + c.k]);
        }
        return it->second;
    };
    auto tri = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
        m.triangles.push_back({a, b, c});
    };

    // Orbit-aware neighbor materiality: probe just beyond the shared edge.
    auto neighbor_material = [&](double th, double ph) { return material_at(th, ph); };

    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j) {
            if (!mat[i * NP + j]) continue;
            double tc = 0.5 * (T[i] + T[i + 1]), pc = 0.5 * (P[j] + P[j + 1]);
            std::uint32_t v00t = vertex(i, j, NPSI), v10t = vertex(i + 1, j, NPSI);
            std::uint32_t v11t = vertex(i + 1, j + 1, NPSI), v01t = vertex(i, j + 1, NPSI);
            tri(v00t, v10t, v11t);
            tri(v00t, v11t, v01t);
            std::uint32_t v00b = vertex(i, j, 0), v10b = vertex(i + 1, j, 0);
            std::uint32_t v11b = vertex(i + 1, j + 1, 0), v01b = vertex(i, j + 1, 0);
            tri(v00b, v11b, v10b);
            tri(v00b, v01b, v11b);

            // wall on every side whose neighbor is void or outside; (S,T)
            // reverses the top face boundary so the strips pair up
            struct Side {
                double pth, pph;  // probe point
                int si, sj, ti, tj;
            };
            const double dlt = 1e-7;
            Side sides[4] = {
                {tc, P[j] - dlt, i + 1, j, i, j},              // south
                {T[i + 1] + dlt, pc, i + 1, j + 1, i + 1, j},  // east
                {tc, P[j + 1] + dlt, i, j + 1, i + 1, j + 1},  // north
                {T[i] - dlt, pc, i, j, i, j + 1},              // west
            };
            for (const Side& sd : sides) {
                if (neighbor_material(sd.pth, sd.pph)) continue;
                for (int k = 0; k < NPSI; ++k) {
                    std::uint32_t s0 = vertex(sd.si, sd.sj, k), s1 = vertex(sd.si, sd.sj, k + 1);
                    std::uint32_t t0 = vertex(sd.ti, sd.tj, k), t1 = vertex(sd.ti, sd.tj, k + 1);
                    tri(s1, t1, t0);
                    tri(s1, t0, s0);
                }
            }
        }

    // Metadata: thickness at every material pixel, strut widths from maximal
    // material runs along both directions, conformal range over the plate.
    m.metadata.part_count = 1;
    double lmin = 1e300, lmax = 0.0;
    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j) {
            if (!mat[i * NP + j]) continue;
            double tc = 0.5 * (T[i] + T[i + 1]), pc = 0.5 * (P[j] + P[j + 1]);
            double lam = conformal_scale(eval_p(spec, tc, pc), f);
            lmin = std::min(lmin, lam);
            lmax = std::max(lmax, lam);
            Vec3 a = project_r(tc, pc, eps), b = project_r(tc, pc, -eps);
            m.metadata.features.push_back({(a + b) * 0.5, dist(a, b), 0});
        }
    m.metadata.lambda_min = lmin;
    m.metadata.lambda_max = lmax;

    // Material runs: walk pixels in one parameter direction, continuing
    // through seams, and record each void-bounded run's projected width.
    auto locate = [&](double th, double ph) -> std::optional<std::pair<int, int>> {
        auto c = detail::canon_param(d, imgs, th, ph);
        if (!c) return std::nullopt;
        int i = std::clamp(
            static_cast<int>(std::upper_bound(T.begin(), T.end(), c->first) - T.begin()) - 1, 0,
            NT - 1);
        int j = std::clamp(
            static_cast<int>(std::upper_bound(P.begin(), P.end(), c->second) - P.begin()) - 1,
            0, NP - 1);
        return std::make_pair(i, j);
    };
    auto emit_runs = [&](bool along_phi) {
        const double dlt = 1e-7;
        for (int i = 0; i < NT; ++i)
            for (int j = 0; j < NP; ++j) {
                if (!mat[i * NP + j]) continue;
                double tc = 0.5 * (T[i] + T[i + 1]), pc = 0.5 * (P[j] + P[j + 1]);
                // run starts where the previous pixel along the walk is void
                double bth = along_phi ? tc : T[i] - dlt;
                double bph = along_phi ? P[j] - dlt : pc;
                if (neighbor_material(bth, bph)) continue;
                double width = 0.0;
                std::vector<Vec3> centers;
                int ci = i, cj = j;
                for (int step = 0; step < 4 * NT * NP; ++step) {
                    double ct = 0.5 * (T[ci] + T[ci + 1]), cp = 0.5 * (P[cj] + P[cj + 1]);
                    Vec3 e0 = along_phi ? project_r(ct, P[cj], 0.0) : project_r(T[ci], cp, 0.0);
                    Vec3 e1 = along_phi ? project_r(ct, P[cj + 1], 0.0)
                                        : project_r(T[ci + 1], cp, 0.0);
                    width += dist(e0, e1);
                    centers.push_back(project_r(ct, cp, 0.0));
                    double nth = along_phi ? ct : T[ci + 1] + dlt;
                    double nph = along_phi ? P[cj + 1] + dlt : cp;
                    auto nx = locate(nth, nph);
                    if (!nx || !mat[nx->first * NP + nx->second]) break;
                    ci = nx->first;
                    cj = nx->second;
                }
                m.metadata.features.push_back({centers[centers.size() / 2], width, 0});
            }
    };
    emit_runs(true);
    emit_runs(false);

    // Cog teeth: truncated pyramids in (theta, phi, psi), one pointing out of
    // each face, meshed as their own closed shells that overlap the plate.
    if (cogs) {
        double base_half_ph = 0.5 * cogs->base_fraction * Hph;
        for (int site = 0; site < cogs->tooth_count; ++site) {
            double pc = d.ph_lo + (site + 0.5) * (d.ph_hi - d.ph_lo) / cogs->tooth_count;
            for (double sign : {1.0, -1.0}) {
                std::uint32_t part = 1 + static_cast<std::uint32_t>(site) * 2 + (sign < 0);
                double tip = sign * (eps + cogs->tooth_height);
                double tb = base_half_th, pb = base_half_ph;
                double tt = cogs->top_fraction * tb, pt = cogs->top_fraction * pb;
                std::uint32_t base = static_cast<std::uint32_t>(m.vertices.size());
                const double cs[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
                for (auto& c : cs)
                    m.vertices.push_back(
                        project_r(th_mid + c[0] * tb, pc + c[1] * pb, 0.0));
                for (auto& c : cs)
                    m.vertices.push_back(
                        project_r(th_mid + c[0] * tt, pc + c[1] * pt, tip));
                m.shells.push_back(static_cast<std::uint32_t>(m.triangles.size()));
                const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                         {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
                for (auto& q : quads) {
                    tri(base + q[0], base + q[1], base + q[2]);
                    tri(base + q[0], base + q[2], base + q[3]);
                }
                // top face spans, the smallest printable widths of the tooth
                Vec3 ta = project_r(th_mid - tt, pc, tip), tb2 = project_r(th_mid + tt, pc, tip);
                Vec3 pa = project_r(th_mid, pc - pt, tip), pb2 = project_r(th_mid, pc + pt, tip);
                m.metadata.features.push_back({(ta + tb2) * 0.5, dist(ta, tb2), part});
                m.metadata.features.push_back({(pa + pb2) * 0.5, dist(pa, pb2), part});
                Vec3 centroid{0, 0, 0};
                for (int v = 0; v < 8; ++v) centroid = centroid + m.vertices[base + v];
                centroid = centroid * 0.125;
                double rad = 0.0;
                for (int v = 0; v < 8; ++v)
                    rad = std::max(rad, dist(centroid, m.vertices[base + v]));
                m.metadata.axis_samples.push_back({centroid, rad, part});
                m.metadata.adjacent_parts.emplace_back(0, part);
            }
            // the two teeth of one site share their base plane
            std::uint32_t up = 1 + static_cast<std::uint32_t>(site) * 2;
            m.metadata.adjacent_parts.emplace_back(up, up + 1);
        }
        m.metadata.part_count = 1 + 2 * static_cast<std::uint32_t>(cogs->tooth_count);
    }

    // Make every shell positively oriented.
    for (std::size_t s = 0; s < m.shell_count(); ++s) {
        auto [lo, hi] = m.shell_range(s);
        double vol6 = 0.0;
        for (std::uint32_t t = lo; t < hi; ++t)
            vol6 += dot(m.vertices[m.triangles[t][0]],
                        cross(m.vertices[m.triangles[t][1]], m.vertices[m.triangles[t][2]]));
        if (vol6 < 0)
            for (std::uint32_t t = lo; t < hi; ++t)
                std::swap(m.triangles[t][1], m.triangles[t][2]);
    }
    return m;
}

} // namespace s3forge
