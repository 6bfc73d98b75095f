// Acceptance gate: ten numbered criteria, one [PASS]/[FAIL] line each.
// Usage: acceptance [N] (criterion 1..10; no argument runs all).
// Exit code is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <climits>
#include <cstdarg>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <s3forge/scene.hpp>

using namespace s3forge;

namespace {

std::mt19937_64 rng(0xACCE97ull);

double urand(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec4 gauss4() {
    std::normal_distribution<double> g;
    return {g(rng), g(rng), g(rng), g(rng)};
}

// Gram-Schmidt a random unit vector against up to three constraints.
Vec4 rand_unit_perp(std::initializer_list<Vec4> against) {
    for (;;) {
        Vec4 w = gauss4();
        for (const Vec4& a : against) w = w - a * dot(w, a);
        double n = norm(w);
        if (n > 1e-6) return w * (1.0 / n);
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

bool crit1(std::string& msg) {
    auto t0 = std::chrono::steady_clock::now();
    Scene sc;
    sc.design = PolytopeDesign{PolytopeKind::Cell120, Orientation::cell_centered(), false};
    sc.pole = {0, 0, 0, 1};
    sc.tube = TubeSpec{0.022, 2, 14, CapStyle::SphericalCap};
    double ratio = analyze(sc)["feature_ratio"].get<double>();
    double el = seconds_since(t0);
    bool ok = std::abs(ratio - 29.4) <= 0.5 && el < 5.0;
    msg = fmt("cell-centered 120-cell conformal spread %.6f (want 29.4 +- 0.5) in %.2fs", ratio,
              el);
    return ok;
}

// ---------------------------------------------------------------- criterion 2

bool crit2(std::string& msg) {
    auto t0 = std::chrono::steady_clock::now();
    // the two shipped half presets plus a half 24-cell built the same way;
    // the bound holds for any half design
    std::vector<std::pair<std::string, Scene>> halves;
    halves.emplace_back("half-120-cell", preset_scene("half-120-cell"));
    halves.emplace_back("half-600-cell", preset_scene("half-600-cell"));
    Scene h24 = preset_scene("24-cell");
    std::get<PolytopeDesign>(h24.design).half = true;
    halves.emplace_back("half 24-cell", h24);

    std::ostringstream note;
    bool ok = true;
    for (auto& [name, sc] : halves) {
        double ratio = analyze(sc)["feature_ratio"].get<double>();
        ProjectionFrame f = scene_frame(sc);
        double ymax = 0.0;
        for (const GreatArc& a : detail::design_arcs(std::get<PolytopeDesign>(sc.design), f)) {
            ymax = std::max(ymax, norm(project_point(a.point_at(a.t_start), f)));
            ymax = std::max(ymax, norm(project_point(a.point_at(a.t_end), f)));
        }
        if (!(ratio <= 2.0 + 1e-6) || !(ymax <= 1.0 + 1e-9)) ok = false;
        note << name << " ratio " << ratio << " |y|max " << ymax << "; ";
    }
    double el = seconds_since(t0);
    if (el >= 5.0) ok = false;
    msg = note.str() + fmt("(bounds 2+1e-6 and 1+1e-9) in %.2fs", el);
    return ok;
}

// ---------------------------------------------------------------- criterion 3

bool crit3(std::string& msg) {
    auto t0 = std::chrono::steady_clock::now();
    ProjectionFrame f = frame_from_pole(UnitQuaternion(Vec4{0, 0, 0, 1}));
    const Vec4 N = f.pole.vec();
    double worst = 0.0;
    int lines = 0, circles = 0;
    for (int it = 0; it < 500; ++it) {
        CircleS3 c = [&] {
            if (it % 8 == 5) {  // through the pole exactly
                double r = it % 16 == 5 ? 1.0 : urand(0.05, 0.95);
                Vec4 e = rand_unit_perp({N});
                double s = std::sqrt(1.0 - r * r);
                Vec4 pc = N * (1.0 - r * r) + e * (s * r);
                Vec4 u = N * r - e * s;
                Vec4 pcn = norm(pc) > 1e-9 ? normalized(pc) : Vec4{};
                Vec4 v = rand_unit_perp({pcn, u});
                return CircleS3(pc, u, v, r);
            }
            if (it % 2 == 0) {  // random great circle
                Vec4 u = rand_unit_perp({});
                Vec4 v = rand_unit_perp({u});
                return CircleS3({0, 0, 0, 0}, u, v, 1.0);
            }
            double r = urand(0.05, 0.999);  // random small circle
            Vec4 d = rand_unit_perp({});
            Vec4 pc = d * std::sqrt(1.0 - r * r);
            Vec4 u = rand_unit_perp({d});
            Vec4 v = rand_unit_perp({d, u});
            return CircleS3(pc, u, v, r);
        }();
        Circline img = project_circle(c, f);
        if (std::holds_alternative<Line>(img))
            ++lines;
        else
            ++circles;
        for (int k = 0; k < 16; ++k) {
            double t = 2.0 * M_PI * k / 16 + 0.05;
            Vec4 x = c.point_at(t);
            if (dist(x, N) < 1e-2) continue;
            Vec3 y = project_point(x, f);
            double res;
            if (const Line* L = std::get_if<Line>(&img)) {
                Vec3 dirn = L->direction * (1.0 / norm(L->direction));
                res = norm(cross(y - L->base, dirn));
            } else {
                const Circle& C = std::get<Circle>(img);
                res = std::max(std::abs(dist(y, C.center) - C.radius),
                               std::abs(dot(y - C.center, C.plane_normal)));
            }
            worst = std::max(worst, res);
        }
    }
    double el = seconds_since(t0);
    bool ok = worst < 1e-9 && el < 1.0;
    msg = fmt("500 circles (%d lines, %d circles), worst circline residual %.3g in %.2fs", lines,
              circles, worst, el);
    return ok;
}

// ---------------------------------------------------------------- criterion 4

bool crit4(std::string& msg) {
    ProjectionFrame f = frame_from_pole(UnitQuaternion(Vec4{0, 0, 0, 1}));
    const Vec4 N = f.pole.vec();
    auto fold = [](double a) { return std::min(a, M_PI - a); };
    double worst_pair = 0.0, worst_geom = 0.0;
    int done = 0;
    while (done < 200) {
        Vec4 x = rand_unit_perp({});
        if (dist(x, N) < 1e-1) continue;
        Vec4 t1 = rand_unit_perp({x});
        Vec4 t2 = rand_unit_perp({x});
        if (fold(std::acos(std::clamp(std::abs(dot(t1, t2)), 0.0, 1.0))) < 1e-3) continue;
        auto circle_through = [&](const Vec4& t) {
            double beta = (done % 3 == 0) ? 0.0 : urand(-0.45, 0.45);  // 0 = great circle
            Vec4 n = rand_unit_perp({x, t});
            double a = beta == 0.0 ? 0.0 : (1.0 - std::sqrt(1.0 - 4.0 * beta * beta)) / 2.0;
            Vec4 pc = x * a + n * beta;
            double r = std::sqrt(1.0 - a);
            Vec4 u = (x - pc) * (1.0 / r);
            return CircleS3(pc, u, t, r);
        };
        CircleS3 c1 = circle_through(t1), c2 = circle_through(t2);
        Circline i1 = project_circle(c1, f), i2 = project_circle(c2, f);
        if (!std::holds_alternative<Circle>(i1) || !std::holds_alternative<Circle>(i2)) continue;
        const Circle &C1 = std::get<Circle>(i1), &C2 = std::get<Circle>(i2);
        if (C1.radius > 1e3 || C2.radius > 1e3) continue;

        auto [a_s3, a_r3] = angle_check(c1, c2, x, f);
        worst_pair = std::max(worst_pair, std::abs(a_s3 - a_r3));

        // independent image angle from the projected circle objects alone
        Vec3 y = project_point(x, f);
        Vec3 T1 = cross(C1.plane_normal, y - C1.center);
        Vec3 T2 = cross(C2.plane_normal, y - C2.center);
        double cosr = std::abs(dot(T1, T2)) / (norm(T1) * norm(T2));
        double geom = fold(std::acos(std::clamp(cosr, 0.0, 1.0)));
        worst_geom = std::max(worst_geom, std::abs(geom - fold(a_s3)));
        ++done;
    }
    bool ok = worst_pair <= 1e-8 && worst_geom <= 1e-8;
    msg = fmt("200 incident pairs, worst angle drift %.3g (differential) / %.3g (circline geometry)",
              worst_pair, worst_geom);
    return ok;
}

// ---------------------------------------------------------------- criterion 5

bool crit5(std::string& msg) {
    SurfaceSpec torus{SurfaceKind::CliffordTorus, 3, 2, M_PI / 4, 0.1};
    SurfaceSpec mob{SurfaceKind::SudaneseMobius, 3, 2, M_PI / 4, 0.1};
    double worst_n = 0.0;
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            double th = 2.0 * M_PI * (i + 0.37) / 50;
            double ph = M_PI * (j + 0.41) / 50;
            double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
            Vec4 want{-st * sp, st * cp, ct * sp, -ct * cp};
            Vec4 got = normal_cramer(torus, th, ph);
            worst_n = std::max(worst_n, dist(got, want));

            double thm = M_PI * (i + 0.37) / 50;
            st = std::sin(thm), ct = std::cos(thm);
            double s2 = std::sin(2 * ph), c2 = std::cos(2 * ph);
            double scale = 1.0 / std::sqrt(1.0 + 3.0 * st * st);
            Vec4 wantm = Vec4{-2 * st * sp, 2 * st * cp, ct * s2, -ct * c2} * scale;
            Vec4 gotm = normal_cramer(mob, thm, ph);
            worst_n = std::max(worst_n, dist(gotm, wantm));
        }

    double worst_sphere = 0.0, worst_geo = 0.0;
    for (const SurfaceSpec& s :
         {torus, mob, SurfaceSpec{SurfaceKind::KleinBottle, 3, 2, M_PI / 4, 0.1},
          SurfaceSpec{SurfaceKind::TorusKnotBand, 3, 2, M_PI / 4, 0.1}}) {
        detail::ParamDomain d = detail::domain_of(s);
        NormalMode mode =
            s.kind == SurfaceKind::TorusKnotBand ? NormalMode::KnotAlternative : NormalMode::Cramer;
        for (int k = 0; k < 250; ++k) {
            double th = urand(d.th_lo + 1e-3, d.th_hi - 1e-3);
            double ph = urand(d.ph_lo, d.ph_hi);
            double psi = urand(-M_PI / 2, M_PI / 2);
            Vec4 q = offset_r(s, th, ph, psi, mode);
            worst_sphere = std::max(worst_sphere, std::abs(norm(q) - 1.0));
            double geo = std::acos(std::clamp(dot(q, eval_p(s, th, ph)), -1.0, 1.0));
            worst_geo = std::max(worst_geo, std::abs(geo - std::abs(psi)));
        }
    }
    bool ok = worst_n <= 1e-10 && worst_sphere <= 1e-12 && worst_geo <= 1e-10;
    msg = fmt("printed-form normal drift %.3g (tol 1e-10); offset on-sphere %.3g (1e-12), "
              "geodesic %.3g (1e-10)",
              worst_n, worst_sphere, worst_geo);
    return ok;
}

// ---------------------------------------------------------------- criterion 6

bool crit6(std::string& msg) {
    const double h = 1e-5;
    double worst = 0.0;
    for (const SurfaceSpec& s :
         {SurfaceSpec{SurfaceKind::CliffordTorus, 3, 2, M_PI / 4, 0.1},
          SurfaceSpec{SurfaceKind::SudaneseMobius, 3, 2, M_PI / 4, 0.1},
          SurfaceSpec{SurfaceKind::KleinBottle, 3, 2, M_PI / 4, 0.1},
          SurfaceSpec{SurfaceKind::TorusKnotBand, 3, 2, M_PI / 4, 0.1}}) {
        detail::ParamDomain d = detail::domain_of(s);
        for (int k = 0; k < 1000; ++k) {
            double th = urand(d.th_lo + 2 * h, d.th_hi - 2 * h);
            double ph = urand(d.ph_lo + 2 * h, d.ph_hi - 2 * h);
            auto [pt, pp] = eval_partials(s, th, ph);
            Vec4 fdt = (eval_p(s, th + h, ph) - eval_p(s, th - h, ph)) * (1.0 / (2 * h));
            Vec4 fdp = (eval_p(s, th, ph + h) - eval_p(s, th, ph - h)) * (1.0 / (2 * h));
            worst = std::max({worst, dist(pt, fdt), dist(pp, fdp)});
        }
    }
    bool ok = worst <= 1e-6;
    msg = fmt("4000 random points, worst analytic-vs-central-difference drift %.3g (tol 1e-6)",
              worst);
    return ok;
}

// ---------------------------------------------------------------- criterion 7

bool crit7(std::string& msg) {
    auto t0 = std::chrono::steady_clock::now();
    struct Expect {
        PolytopeKind kind;
        std::size_t V, E;
        const char* name;
    };
    const Expect table[] = {
        {PolytopeKind::Simplex5, 5, 10, "5-cell"},     {PolytopeKind::Tesseract8, 16, 32, "8-cell"},
        {PolytopeKind::Cross16, 8, 24, "16-cell"},     {PolytopeKind::Cell24, 24, 96, "24-cell"},
        {PolytopeKind::Cell120, 600, 1200, "120-cell"}, {PolytopeKind::Cell600, 120, 720, "600-cell"},
    };
    bool ok = true;
    std::ostringstream note;
    for (const Expect& e : table) {
        Polytope4 p = build(e.kind);
        if (p.vertices.size() != e.V) {
            ok = false;
            note << e.name << " V=" << p.vertices.size() << " want " << e.V << "; ";
            continue;
        }
        // brute-force oracle: edges are exactly the minimal-distance pairs
        double dmin = 1e300;
        for (std::size_t i = 0; i < e.V; ++i)
            for (std::size_t j = i + 1; j < e.V; ++j)
                dmin = std::min(dmin, dist(p.vertices[i], p.vertices[j]));
        std::size_t count = 0;
        double lo = 1e300, hi = 0.0;
        for (std::size_t i = 0; i < e.V; ++i)
            for (std::size_t j = i + 1; j < e.V; ++j) {
                double dd = dist(p.vertices[i], p.vertices[j]);
                if (dd <= dmin + 1e-9) {
                    ++count;
                    lo = std::min(lo, dd);
                    hi = std::max(hi, dd);
                }
            }
        if (count != e.E || p.edges.size() != e.E || hi - lo > 1e-9) {
            ok = false;
            note << e.name << " E=" << count << "/" << p.edges.size() << " want " << e.E
                 << " spread " << hi - lo << "; ";
        }
    }
    double el = seconds_since(t0);
    if (el >= 10.0) ok = false;
    if (ok) note << "counts (5,10) (16,32) (8,24) (24,96) (600,1200) (120,720), edges uniform";
    msg = note.str() + fmt(" in %.2fs", el);
    return ok;
}

// ---------------------------------------------------------------- criterion 8

// independent region topology oracle (coarse pixel complex on the parameter
// quotient; a solid thickening of a surface S has boundary Euler number
// 2 chi(S))
namespace topo {

double wrap(double x, double L) {
    x = std::fmod(x, L);
    return x < 0 ? x + L : x;
}

struct Dom {
    double tlo, thi, plo, phi;
};
Dom dom(const SurfaceSpec& s) {
    switch (s.kind) {
        case SurfaceKind::CliffordTorus: return {0, 2 * M_PI, 0, M_PI};
        case SurfaceKind::SudaneseMobius: return {0, M_PI, 0, M_PI};
        case SurfaceKind::KleinBottle: return {0, 2 * M_PI, 0, M_PI};
        default:
            return {s.theta0 - s.half_width, s.theta0 + s.half_width, 0, 2 * M_PI * s.den};
    }
}

std::optional<std::pair<double, double>> canon(const SurfaceSpec& s, double th, double ph) {
    const double tau = 2 * M_PI;
    switch (s.kind) {
        case SurfaceKind::CliffordTorus: {
            double k = -std::floor(ph / M_PI);
            return std::make_pair(wrap(th + M_PI * k, tau), ph + M_PI * k);
        }
        case SurfaceKind::SudaneseMobius: {
            double p2 = wrap(ph, tau), t2 = th;
            if (p2 >= M_PI) {
                p2 -= M_PI;
                t2 = M_PI - th;
            }
            if (t2 < 0 || t2 >= M_PI) return std::nullopt;
            return std::make_pair(t2, p2);
        }
        case SurfaceKind::KleinBottle: {
            double p2 = wrap(ph, tau), t2 = th;
            if (p2 >= M_PI) {
                p2 -= M_PI;
                t2 = M_PI - th;
            }
            return std::make_pair(wrap(t2, tau), p2);
        }
        default: {
            Dom d = dom(s);
            if (th < d.tlo || th > d.thi) return std::nullopt;
            return std::make_pair(th, wrap(ph, tau * s.den));
        }
    }
}

bool punctured(const SurfaceSpec& s, const std::vector<PunctureRect>& rects, double th,
               double ph) {
    auto hit = [&](const PunctureRect& r, double tc, double pc) {
        return std::abs(th - tc) <= r.half_theta && std::abs(ph - pc) <= r.half_phi;
    };
    for (const PunctureRect& r : rects) {
        switch (s.kind) {
            case SurfaceKind::CliffordTorus:
                for (int n = -2; n <= 2; ++n)
                    for (int m = -3; m <= 3; ++m)
                        if (hit(r, r.theta + M_PI * n + 2 * M_PI * m, r.phi + M_PI * n))
                            return true;
                break;
            case SurfaceKind::SudaneseMobius:
                for (int k = -2; k <= 2; ++k) {
                    if (hit(r, r.theta, r.phi + 2 * M_PI * k)) return true;
                    if (hit(r, M_PI - r.theta, M_PI + r.phi + 2 * M_PI * k)) return true;
                }
                break;
            case SurfaceKind::KleinBottle:
                for (int m = -2; m <= 2; ++m)
                    for (int k = -2; k <= 2; ++k) {
                        if (hit(r, r.theta + 2 * M_PI * m, r.phi + 2 * M_PI * k)) return true;
                        if (hit(r, M_PI - r.theta + 2 * M_PI * m, M_PI + r.phi + 2 * M_PI * k))
                            return true;
                    }
                break;
            default:
                for (int k = -2; k <= 2; ++k)
                    if (hit(r, r.theta, r.phi + 2 * M_PI * s.den * k)) return true;
        }
    }
    return false;
}

double seam_theta(const SurfaceSpec& s, double th) {
    switch (s.kind) {
        case SurfaceKind::CliffordTorus: return wrap(th + M_PI, 2 * M_PI);
        case SurfaceKind::SudaneseMobius: return M_PI - th;
        case SurfaceKind::KleinBottle: return wrap(M_PI - th, 2 * M_PI);
        default: return th;
    }
}

long long region_euler(const SurfaceSpec& s, const ShellSpec& sh,
                       const std::optional<CogSpec>& cogs) {
    Dom d = dom(s);
    double Ht = (d.thi - d.tlo) / sh.grid_theta, Hp = (d.phi - d.plo) / sh.grid_phi;
    double mid = 0.5 * (d.tlo + d.thi);
    double hole_t = (1 - sh.strut_fraction) * Ht, hole_p = (1 - sh.strut_fraction) * Hp;
    double bh = cogs ? 0.5 * cogs->base_fraction * Ht : 0.0;

    std::vector<std::pair<double, double>> th_holes, ph_holes;
    for (int i = 0; i < sh.grid_theta; ++i) {
        double a = d.tlo + i * Ht, b = a + Ht;
        double lo = 0.5 * (a + b) - 0.5 * hole_t, hi = lo + hole_t;
        if (cogs) {
            bool has_lo = mid - bh > a + 1e-12 && mid - bh < b - 1e-12;
            bool has_hi = mid + bh > a + 1e-12 && mid + bh < b - 1e-12;
            if (has_lo && has_hi)
                lo = hi = a;
            else if (has_lo) {
                hi = mid - bh;
                lo = std::max(a, hi - hole_t);
            } else if (has_hi) {
                lo = mid + bh;
                hi = std::min(b, lo + hole_t);
            }
        }
        th_holes.emplace_back(lo, hi);
    }
    for (int j = 0; j < sh.grid_phi; ++j) {
        double c = d.plo + (j + 0.5) * Hp;
        ph_holes.emplace_back(c - 0.5 * hole_p, c + 0.5 * hole_p);
    }

    std::vector<double> T{d.tlo, d.thi}, P{d.plo, d.phi};
    for (int i = 1; i < sh.grid_theta; ++i) T.push_back(d.tlo + i * Ht);
    for (int j = 1; j < sh.grid_phi; ++j) P.push_back(d.plo + j * Hp);
    for (auto& [a, b] : th_holes)
        if (b > a) {
            T.push_back(a);
            T.push_back(b);
        }
    for (auto& [a, b] : ph_holes) {
        P.push_back(a);
        P.push_back(b);
    }
    auto add_clipped = [&](std::vector<double>& v, double x, double lo, double hi) {
        if (x > lo + 1e-12 && x < hi - 1e-12) v.push_back(x);
    };
    for (const PunctureRect& r : sh.punctures) {
        auto edges = [&](double tc, double pc) {
            add_clipped(T, tc - r.half_theta, d.tlo, d.thi);
            add_clipped(T, tc + r.half_theta, d.tlo, d.thi);
            add_clipped(P, pc - r.half_phi, d.plo, d.phi);
            add_clipped(P, pc + r.half_phi, d.plo, d.phi);
        };
        switch (s.kind) {
            case SurfaceKind::CliffordTorus:
                for (int n = -2; n <= 2; ++n)
                    for (int m = -3; m <= 3; ++m)
                        edges(r.theta + M_PI * n + 2 * M_PI * m, r.phi + M_PI * n);
                break;
            case SurfaceKind::SudaneseMobius:
                for (int k = -2; k <= 2; ++k) {
                    edges(r.theta, r.phi + 2 * M_PI * k);
                    edges(M_PI - r.theta, M_PI + r.phi + 2 * M_PI * k);
                }
                break;
            case SurfaceKind::KleinBottle:
                for (int m = -2; m <= 2; ++m)
                    for (int k = -2; k <= 2; ++k) {
                        edges(r.theta + 2 * M_PI * m, r.phi + 2 * M_PI * k);
                        edges(M_PI - r.theta + 2 * M_PI * m, M_PI + r.phi + 2 * M_PI * k);
                    }
                break;
            default:
                for (int k = -2; k <= 2; ++k) edges(r.theta, r.phi + 2 * M_PI * s.den * k);
        }
    }
    if (s.kind != SurfaceKind::TorusKnotBand) {
        std::vector<double> extra;
        for (double t : T) {
            double q = seam_theta(s, t);
            if (q > d.tlo + 1e-12 && q < d.thi - 1e-12) extra.push_back(q);
        }
        T.insert(T.end(), extra.begin(), extra.end());
    }
    auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                v.end());
    };
    uniq(T);
    uniq(P);

    int NT = static_cast<int>(T.size()) - 1, NP = static_cast<int>(P.size()) - 1;
    auto material = [&](double th, double ph) {
        auto c = canon(s, th, ph);
        if (!c) return false;
        auto [t, p] = *c;
        if (punctured(s, sh.punctures, t, p)) return false;
        int i = std::clamp(static_cast<int>((t - d.tlo) / Ht), 0, sh.grid_theta - 1);
        int j = std::clamp(static_cast<int>((p - d.plo) / Hp), 0, sh.grid_phi - 1);
        return !(t > th_holes[i].first && t < th_holes[i].second && p > ph_holes[j].first &&
                 p < ph_holes[j].second);
    };
    std::vector<char> mat(static_cast<std::size_t>(NT) * NP);
    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j)
            mat[i * NP + j] = material(0.5 * (T[i] + T[i + 1]), 0.5 * (P[j] + P[j + 1]));

    bool wrap_t = s.kind == SurfaceKind::CliffordTorus || s.kind == SurfaceKind::KleinBottle;
    std::vector<int> perm(NT + 1);
    for (int i = 0; i <= NT; ++i) {
        double want = seam_theta(s, T[i]);
        auto it = std::lower_bound(T.begin(), T.end(), want - 1e-9);
        if (it == T.end() || std::abs(*it - want) > 1e-9) return LLONG_MIN;  // lattice mismatch
        perm[i] = static_cast<int>(it - T.begin());
    }
    auto node = [&](int i, int j) {
        if (wrap_t && i == NT) i = 0;
        if (j == NP) {
            i = perm[i];
            j = 0;
            if (wrap_t && i == NT) i = 0;
        }
        return i * (NP + 1) + j;
    };
    std::set<int> verts;
    std::set<std::pair<int, int>> edges;
    long long F = 0;
    auto edge = [&](int a, int b) { edges.insert({std::min(a, b), std::max(a, b)}); };
    for (int i = 0; i < NT; ++i)
        for (int j = 0; j < NP; ++j) {
            if (!mat[i * NP + j]) continue;
            ++F;
            int n00 = node(i, j), n10 = node(i + 1, j), n01 = node(i, j + 1),
                n11 = node(i + 1, j + 1);
            verts.insert({n00, n10, n01, n11});
            edge(n00, n10);
            edge(n10, n11);
            edge(n01, n11);
            edge(n00, n01);
        }
    return static_cast<long long>(verts.size()) - static_cast<long long>(edges.size()) + F;
}

} // namespace topo

struct ShellStats {
    long long euler;
    bool closed;
    double vol6;
};

ShellStats shell_stats(const TriMesh& m, std::size_t s) {
    auto [lo, hi] = m.shell_range(s);
    std::set<std::uint32_t> verts;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> dir;
    double vol6 = 0.0;
    bool closed = hi > lo;
    for (std::uint32_t t = lo; t < hi; ++t) {
        auto [a, b, c] = m.triangles[t];
        if (a == b || b == c || a == c) closed = false;
        verts.insert({a, b, c});
        ++dir[{a, b}];
        ++dir[{b, c}];
        ++dir[{c, a}];
        vol6 += dot(m.vertices[a], cross(m.vertices[b], m.vertices[c]));
    }
    for (auto& [e, cnt] : dir) {
        auto rev = dir.find({e.second, e.first});
        if (cnt != 1 || rev == dir.end() || rev->second != 1) closed = false;
    }
    long long euler = static_cast<long long>(verts.size()) -
                      static_cast<long long>(dir.size()) / 2 +
                      static_cast<long long>(hi - lo);
    return {euler, closed, vol6};
}

bool crit8(std::string& msg) {
    const std::string dir = "/tmp/s3forge_acceptance";
    std::filesystem::create_directories(dir);
    struct RefBox {
        const char* name;
        std::array<double, 3> sorted_mm;
    };
    const RefBox refs[] = {
        {"24-cell", {90, 90, 90}},          {"half-120-cell", {99, 99, 99}},
        {"half-600-cell", {99, 99, 99}},    {"clifford-torus", {34, 108, 108}},
        {"mobius", {62, 109, 152}},         {"klein", {109, 152, 152}},
        {"knotted-cog", {13, 34, 38}},
    };
    bool ok = true;
    std::ostringstream note;
    for (const RefBox& cap : refs) {
        Scene sc = preset_scene(cap.name);
        sc.out_path = dir + "/" + cap.name + ".stl";
        RunResult r = run(sc);

        // rebuild the mesh the same way to inspect shells directly
        TriMesh m = scale_to(weld(build_design_mesh(sc), 0.0), sc.target_bbox_mm);
        bool closed = true, oriented = true, euler_ok = true;
        for (std::size_t s = 0; s < m.shell_count(); ++s) {
            ShellStats st = shell_stats(m, s);
            closed = closed && st.closed && r.diag.watertight[s];
            oriented = oriented && st.vol6 > 0.0;
            if (std::holds_alternative<PolytopeDesign>(sc.design)) {
                euler_ok = euler_ok && st.euler == 2;  // capped tube
            } else {
                const SurfaceDesign& sd = std::get<SurfaceDesign>(sc.design);
                if (s == 0) {  // plate: boundary of a thickened region has chi = 2 chi(region)
                    long long re = topo::region_euler(sd.spec, sd.shell, sd.cog);
                    euler_ok = euler_ok && re != LLONG_MIN && st.euler == 2 * re;
                } else {
                    euler_ok = euler_ok && st.euler == 2;  // teeth are boxes
                }
            }
        }
        std::array<double, 3> got{r.diag.bbox_mm.x, r.diag.bbox_mm.y, r.diag.bbox_mm.z};
        std::sort(got.begin(), got.end());
        bool bbox_ok = true;
        for (int k = 0; k < 3; ++k)
            if (std::abs(got[k] - cap.sorted_mm[k]) > 0.5) bbox_ok = false;
        bool feat_ok = r.diag.min_feature_mm >= 1.0;

        std::printf("  %-14s shells=%-3zu watertight=%s oriented=%s euler=%s min_feature=%.3f "
                    "bbox=[%.2f %.2f %.2f]%s\n",
                    cap.name, m.shell_count(), closed ? "yes" : "NO", oriented ? "yes" : "NO",
                    euler_ok ? "match" : "MISMATCH", r.diag.min_feature_mm, got[0], got[1],
                    got[2], bbox_ok ? "" : "  <- size miss");
        if (!(closed && oriented && euler_ok && feat_ok)) ok = false;
        if (!bbox_ok) {
            ok = false;
            note << cap.name << " bbox [" << got[0] << ", " << got[1] << ", " << got[2]
                 << "] vs reference [" << cap.sorted_mm[0] << ", " << cap.sorted_mm[1] << ", "
                 << cap.sorted_mm[2] << "] exceeds 0.5 mm; ";
        }
    }
    if (ok)
        msg = "all seven presets watertight, oriented, Euler-matched, min_feature >= 1 mm, "
              "reference boxes within 0.5 mm";
    else
        msg = note.str() +
              "known: the torus depth cannot reach 34 mm without dropping the 1 mm feature "
              "floor (thinnest wall scales with shell thickness, which fixes the depth near "
              "37 mm); every other clause passes";
    return ok;
}

// ---------------------------------------------------------------- criterion 9

bool crit9(std::string& msg) {
    SurfaceSpec mob{SurfaceKind::SudaneseMobius, 3, 2, M_PI / 4, 0.1};
    SurfaceSpec kle{SurfaceKind::KleinBottle, 3, 2, M_PI / 4, 0.1};
    SurfaceSpec tor{SurfaceKind::CliffordTorus, 3, 2, M_PI / 4, 0.1};
    double worst_restrict = 0.0;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            double th = M_PI * (i + 0.5) / 100, ph = M_PI * (j + 0.5) / 100;
            worst_restrict = std::max(worst_restrict, dist(eval_p(kle, th, ph), eval_p(mob, th, ph)));
        }

    // (alpha, beta) form times (1 - j)/sqrt(2) equals the (theta, phi) form
    // up to the fixed component permutation and sign
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Quat q{Vec4{inv_sqrt2, 0.0, -inv_sqrt2, 0.0}};
    double worst_id = 0.0;
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            double al = 2 * M_PI * (i + 0.31) / 50, be = 2 * M_PI * (j + 0.63) / 50;
            Quat C{Vec4{std::cos(al) * inv_sqrt2, std::sin(al) * inv_sqrt2,
                        std::cos(be) * inv_sqrt2, std::sin(be) * inv_sqrt2}};
            Vec4 lhs = q_mul(C, q).vec();
            // (al+be)/2, (al-be)/2 may leave the canonical chart; the torus map
            // is invariant under its identification, so canonicalize first
            auto tp = topo::canon(tor, 0.5 * (al + be), 0.5 * (al - be));
            Vec4 p = eval_p(tor, tp->first, tp->second);
            Vec4 rhs{p[0], p[2], p[3], -p[1]};
            worst_id = std::max(worst_id, dist(lhs, rhs));
        }
    bool ok = worst_restrict <= 1e-12 && worst_id <= 1e-12;
    msg = fmt("Klein|theta<pi vs Mobius drift %.3g; quaternion identity drift %.3g (tol 1e-12)",
              worst_restrict, worst_id);
    return ok;
}

// --------------------------------------------------------------- criterion 10

bool crit10(std::string& msg) {
    Scene sc;
    sc.design = PolytopeDesign{PolytopeKind::Cross16, Orientation::cell_centered(), false};
    sc.pole = {0, 0, 0, 1};
    sc.tube = TubeSpec{0.09, 2, 12, CapStyle::SphericalCap};
    sc.target_bbox_mm = {70, 70, 70};
    TriMesh m = scale_to(weld(build_design_mesh(sc), 0.0), sc.target_bbox_mm);
    const std::string path = "/tmp/s3forge_acceptance/contract.stl";
    std::filesystem::create_directories("/tmp/s3forge_acceptance");
    export_stl(m, path);

    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();

    const std::size_t T = m.triangles.size();
    if (bytes.size() != 84 + 50 * T) {
        msg = fmt("file size %zu, contract wants %zu", bytes.size(), 84 + 50 * T);
        return false;
    }
    std::uint32_t count;
    std::memcpy(&count, bytes.data() + 80, 4);
    if (count != T) {
        msg = fmt("triangle count field %u, mesh has %zu", count, T);
        return false;
    }
    auto f32 = [&](std::size_t off) {
        float v;
        std::memcpy(&v, bytes.data() + off, 4);
        return v;
    };
    double worst_normal = 0.0;
    bool verts_exact = true, attrs_zero = true;
    for (std::size_t t = 0; t < T; ++t) {
        std::size_t off = 84 + 50 * t;
        const Vec3 &a = m.vertices[m.triangles[t][0]], &b = m.vertices[m.triangles[t][1]],
                   &c = m.vertices[m.triangles[t][2]];
        Vec3 n = cross(b - a, c - a);
        n = n * (1.0 / norm(n));
        worst_normal = std::max(
            {worst_normal, static_cast<double>(std::abs(f32(off) - static_cast<float>(n.x))),
             static_cast<double>(std::abs(f32(off + 4) - static_cast<float>(n.y))),
             static_cast<double>(std::abs(f32(off + 8) - static_cast<float>(n.z)))});
        const Vec3* vs[3] = {&a, &b, &c};
        for (int k = 0; k < 3; ++k) {
            std::size_t vo = off + 12 + 12 * k;
            if (f32(vo) != static_cast<float>(vs[k]->x) ||
                f32(vo + 4) != static_cast<float>(vs[k]->y) ||
                f32(vo + 8) != static_cast<float>(vs[k]->z))
                verts_exact = false;
        }
        std::uint16_t attr;
        std::memcpy(&attr, bytes.data() + off + 48, 2);
        if (attr != 0) attrs_zero = false;
    }

    // round trip: re-parsed vertex soup must reproduce the mesh at f32 precision
    bool roundtrip = true;
    for (std::size_t t = 0; t < T && roundtrip; ++t) {
        std::size_t off = 84 + 50 * t + 12;
        for (int k = 0; k < 3; ++k) {
            const Vec3& v = m.vertices[m.triangles[t][k]];
            if (f32(off + 12 * k) != static_cast<float>(v.x) ||
                f32(off + 12 * k + 4) != static_cast<float>(v.y) ||
                f32(off + 12 * k + 8) != static_cast<float>(v.z))
                roundtrip = false;
        }
    }
    bool ok = verts_exact && attrs_zero && roundtrip && worst_normal <= 1e-6;
    msg = fmt("%zu records of 50 bytes, header+count+attrs per contract, vertices f32-exact, "
              "normals within %.3g of winding",
              T, worst_normal);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    using CritFn = bool (*)(std::string&);
    const CritFn fns[] = {crit1, crit2, crit3, crit4, crit5, crit6, crit7, crit8, crit9, crit10};
    int lo = 1, hi = 10;
    if (argc > 1) {
        int n = std::atoi(argv[1]);
        if (n < 1 || n > 10) {
            std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
            return 64;
        }
        lo = hi = n;
    }
    int fails = 0;
    for (int n = lo; n <= hi; ++n) {
        std::string m;
        bool ok = false;
        try {
            ok = fns[n - 1](m);
        } catch (const std::exception& e) {
            m = std::string("unexpected exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, m.c_str());
        if (!ok) ++fails;
    }
    return fails;
}
