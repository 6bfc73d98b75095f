#pragma once
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "meshkit.hpp"
#include "polytope4.hpp"
#include "surfaces.hpp"
#include "tubes.hpp"

namespace s3forge {

struct PolytopeDesign {
    PolytopeKind kind;
    Orientation orientation;
    bool half = false;
};

struct SurfaceDesign {
    SurfaceSpec spec;
    ShellSpec shell;
    std::optional<CogSpec> cog;
    NormalMode normal_mode = NormalMode::Cramer;
};

// Declarative build request: one design, one projection frame, physical
// target size, and an output file.
struct Scene {
    std::variant<PolytopeDesign, SurfaceDesign> design;
    Vec4 pole{0, 0, 0, 1};
    Quat extra_rotation{1, 0, 0, 0};
    TubeSpec tube{0.05, 2, 16, CapStyle::SphericalCap};  // polytope designs only
    Vec3 target_bbox_mm{100, 100, 100};
    std::string format = "stl";
    std::string out_path = "out.stl";
};

namespace detail {

[[noreturn]] inline void schema_fail(const std::string& msg) {
    throw SchemaError("scene: " + msg);
}

inline const nlohmann::json& member(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) schema_fail(std::string("missing field '") + key + "'");
    return *it;
}

inline double num(const nlohmann::json& j, const char* key) {
    const nlohmann::json& v = member(j, key);
    if (!v.is_number()) schema_fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

inline double num_or(const nlohmann::json& j, const char* key, double dflt) {
    return j.contains(key) ? num(j, key) : dflt;
}

inline int int_field(const nlohmann::json& j, const char* key, int dflt) {
    if (!j.contains(key)) return dflt;
    const nlohmann::json& v = j[key];
    if (!v.is_number_integer()) schema_fail(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

inline std::string str_field(const nlohmann::json& j, const char* key) {
    const nlohmann::json& v = member(j, key);
    if (!v.is_string()) schema_fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

template <std::size_t N>
std::array<double, N> num_array(const nlohmann::json& j, const char* key) {
    const nlohmann::json& v = member(j, key);
    if (!v.is_array() || v.size() != N)
        schema_fail(std::string("field '") + key + "' must be an array of " +
                    std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) schema_fail(std::string("field '") + key + "' must be numeric");
        out[i] = v[i].get<double>();
    }
    return out;
}

inline PolytopeKind polytope_kind(const std::string& s) {
    if (s == "simplex5") return PolytopeKind::Simplex5;
    if (s == "tesseract8") return PolytopeKind::Tesseract8;
    if (s == "cross16") return PolytopeKind::Cross16;
    if (s == "cell24") return PolytopeKind::Cell24;
    if (s == "cell120") return PolytopeKind::Cell120;
    if (s == "cell600") return PolytopeKind::Cell600;
    schema_fail("unknown polytope kind '" + s + "'");
}

inline SurfaceKind surface_kind(const std::string& s) {
    if (s == "clifford-torus") return SurfaceKind::CliffordTorus;
    if (s == "sudanese-mobius") return SurfaceKind::SudaneseMobius;
    if (s == "klein-bottle") return SurfaceKind::KleinBottle;
    if (s == "torus-knot-band") return SurfaceKind::TorusKnotBand;
    schema_fail("unknown surface kind '" + s + "'");
}

} // namespace detail

inline Scene parse_scene(const nlohmann::json& j) {
    using detail::schema_fail;
    Scene sc;
    try {
        if (!j.is_object()) schema_fail("top level must be an object");
        const nlohmann::json& design = detail::member(j, "design");
        bool has_poly = design.contains("polytope"), has_surf = design.contains("surface");
        if (has_poly == has_surf)
            schema_fail("design must contain exactly one of 'polytope' or 'surface'");

        if (has_poly) {
            const nlohmann::json& p = design["polytope"];
            PolytopeDesign pd;
            pd.kind = detail::polytope_kind(detail::str_field(p, "kind"));
            std::string ori = detail::str_field(p, "orientation");
            if (ori == "cell-centered")
                pd.orientation = Orientation::cell_centered();
            else if (ori == "vertex-centered")
                pd.orientation = Orientation::vertex_centered();
            else
                schema_fail("orientation must be 'cell-centered' or 'vertex-centered'");
            if (p.contains("half")) {
                if (!p["half"].is_boolean()) schema_fail("'half' must be a boolean");
                pd.half = p["half"].get<bool>();
            }
            sc.design = pd;

            const nlohmann::json& t = detail::member(j, "tube");
            sc.tube.radius_s3 = detail::num(t, "radius_s3");
            sc.tube.segments_along = detail::int_field(t, "segments_along", 2);
            sc.tube.segments_around = detail::int_field(t, "segments_around", 16);
            std::string cap = t.contains("cap_style") ? detail::str_field(t, "cap_style")
                                                      : std::string("spherical-cap");
            if (cap == "spherical-cap")
                sc.tube.cap_style = CapStyle::SphericalCap;
            else if (cap == "flat-disk")
                sc.tube.cap_style = CapStyle::FlatDisk;
            else
                schema_fail("cap_style must be 'spherical-cap' or 'flat-disk'");
        } else {
            const nlohmann::json& s = design["surface"];
            SurfaceDesign sd;
            sd.spec.kind = detail::surface_kind(detail::str_field(s, "kind"));
            sd.spec.num = detail::int_field(s, "num", 3);
            sd.spec.den = detail::int_field(s, "den", 2);
            sd.spec.theta0 = detail::num_or(s, "theta0", M_PI / 4);
            sd.spec.half_width = detail::num_or(s, "half_width", 0.1);

            const nlohmann::json& sh = detail::member(s, "shell");
            sd.shell.thickness_s3 = detail::num(sh, "thickness_s3");
            sd.shell.grid_theta = detail::int_field(sh, "grid_theta", 16);
            sd.shell.grid_phi = detail::int_field(sh, "grid_phi", 24);
            sd.shell.strut_fraction = detail::num_or(sh, "strut_fraction", 0.5);
            if (sh.contains("punctures")) {
                if (!sh["punctures"].is_array()) schema_fail("'punctures' must be an array");
                for (const nlohmann::json& r : sh["punctures"]) {
                    if (!r.is_array() || r.size() != 4)
                        schema_fail("each puncture must be [theta, phi, half_theta, half_phi]");
                    sd.shell.punctures.push_back(
                        {r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                         r[3].get<double>()});
                }
            }
            if (s.contains("cog")) {
                const nlohmann::json& c = s["cog"];
                CogSpec cg;
                cg.tooth_count = detail::int_field(c, "tooth_count", 12);
                cg.tooth_height = detail::num(c, "tooth_height");
                cg.top_fraction = detail::num_or(c, "top_fraction", 0.6);
                cg.base_fraction = detail::num_or(c, "base_fraction", 0.7);
                sd.cog = cg;
            }
            std::string nm = s.contains("normal_mode") ? detail::str_field(s, "normal_mode")
                                                       : std::string("cramer");
            if (nm == "cramer")
                sd.normal_mode = NormalMode::Cramer;
            else if (nm == "knot-alternative")
                sd.normal_mode = NormalMode::KnotAlternative;
            else
                schema_fail("normal_mode must be 'cramer' or 'knot-alternative'");
            sc.design = sd;
        }

        const nlohmann::json& fr = detail::member(j, "frame");
        auto pole = detail::num_array<4>(fr, "pole");
        sc.pole = {pole[0], pole[1], pole[2], pole[3]};
        if (norm(sc.pole) < 1e-12) schema_fail("pole must not be the zero vector");
        sc.pole = normalized(sc.pole);
        if (fr.contains("extra_rotation")) {
            auto er = detail::num_array<4>(fr, "extra_rotation");
            Vec4 q{er[0], er[1], er[2], er[3]};
            if (norm(q) < 1e-12) schema_fail("extra_rotation must not be the zero quaternion");
            q = normalized(q);
            sc.extra_rotation = Quat{q};
        }

        auto bbox = detail::num_array<3>(j, "target_bbox_mm");
        if (bbox[0] <= 0 || bbox[1] <= 0 || bbox[2] <= 0)
            schema_fail("target_bbox_mm must be positive");
        sc.target_bbox_mm = {bbox[0], bbox[1], bbox[2]};

        const nlohmann::json& out = detail::member(j, "output");
        sc.format = detail::str_field(out, "format");
        if (sc.format != "stl" && sc.format != "obj")
            schema_fail("output format must be 'stl' or 'obj'");
        sc.out_path = detail::str_field(out, "path");
        if (sc.out_path.empty()) schema_fail("output path must not be empty");
    } catch (const nlohmann::json::exception& e) {
        schema_fail(e.what());
    }
    return sc;
}

inline Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot read scene file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("scene: invalid JSON: ") + e.what());
    }
    return parse_scene(j);
}

// The frame realizing "rotate the sphere by extra_rotation, then project
// from pole": the composite still carries its divergence point in `pole`.
inline ProjectionFrame scene_frame(const Scene& sc) {
    UnitQuaternion extra = UnitQuaternion::from_op(sc.extra_rotation);
    ProjectionFrame base = frame_from_pole(UnitQuaternion(sc.pole));
    Vec4 eff_pole = rotate4(UnitQuaternion::from_op(q_conj(extra.q())), sc.pole);
    return ProjectionFrame(UnitQuaternion(eff_pole),
                           UnitQuaternion::from_op(q_mul(base.pre_rotation.q(), extra.q())));
}

namespace detail {

inline std::vector<GreatArc> design_arcs(const PolytopeDesign& pd, const ProjectionFrame& f) {
    Polytope4 poly = orient(build(pd.kind), pd.orientation, f);
    std::vector<GreatArc> arcs = skeleton_arcs(poly);
    if (pd.half) {
        arcs = half_cut(arcs, f);
        // An edge leaving the equator northward is cut into a piece whose
        // length is only the cut tolerance; its material is a single point
        // already covered by the neighboring tube caps. Drop such slivers.
        std::erase_if(arcs, [](const GreatArc& a) { return a.length() < 1e-6; });
    }
    return arcs;
}

// Full designs must clear the pole by the tube radius; checked up front so
// the failure arrives before any meshing work.
inline void ensure_pole_clearance(const std::vector<GreatArc>& arcs, const TubeSpec& tube,
                                  const ProjectionFrame& f) {
    for (const GreatArc& a : arcs) {
        double hi = std::clamp(arc_x3_range(a, f).second, -1.0, 1.0);
        if (std::acos(hi) - tube.radius_s3 <= 1e-6)
            throw PoleCollision("scene: tube skeleton passes through the projection pole");
    }
}

inline std::string diag_path_for(const std::string& mesh_path) {
    std::size_t slash = mesh_path.find_last_of('/');
    std::size_t dot = mesh_path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return mesh_path + ".diag.json";
    return mesh_path.substr(0, dot) + ".diag.json";
}

} // namespace detail

// Mesh the design at unit scale (projection units, millimeters only after
// scale_to). Tube designs mesh one shell per arc; arcs that share a skeleton
// vertex are expected to touch there, so their parts are marked adjacent.
inline TriMesh build_design_mesh(const Scene& sc) {
    ProjectionFrame f = scene_frame(sc);
    if (std::holds_alternative<SurfaceDesign>(sc.design)) {
        const SurfaceDesign& sd = std::get<SurfaceDesign>(sc.design);
        return mesh_shell(sd.spec, sd.shell, f, sd.cog, sd.normal_mode);
    }
    const PolytopeDesign& pd = std::get<PolytopeDesign>(sc.design);
    std::vector<GreatArc> arcs = detail::design_arcs(pd, f);
    if (arcs.empty()) throw Error("scene: design leaves nothing to mesh");
    detail::ensure_pole_clearance(arcs, sc.tube, f);
    TriMesh total;
    std::vector<std::array<Vec4, 2>> ends;
    ends.reserve(arcs.size());
    for (const GreatArc& a : arcs) {
        total.append(mesh_tube(a, sc.tube, f));
        ends.push_back({a.point_at(a.t_start), a.point_at(a.t_end)});
    }
    for (std::uint32_t i = 0; i < ends.size(); ++i)
        for (std::uint32_t j = i + 1; j < ends.size(); ++j) {
            bool touch = false;
            for (const Vec4& a : ends[i])
                for (const Vec4& b : ends[j])
                    if (dist(a, b) < 1e-9) touch = true;
            if (touch) total.metadata.adjacent_parts.emplace_back(i, j);
        }
    return total;
}

struct RunResult {
    Diagnostics diag;
    std::string mesh_path;
    std::string diag_path;
};

// generate pipeline: mesh, weld, scale to physical size, validate the scaled
// result (so every reported number is in millimeters), export mesh plus a
// diagnostics JSON next to it.
inline RunResult run(const Scene& sc, double weld_tol = 0.0) {
    TriMesh mesh = scale_to(weld(build_design_mesh(sc), weld_tol), sc.target_bbox_mm);
    Diagnostics diag = validate(mesh);
    if (sc.format == "stl")
        export_stl(mesh, sc.out_path);
    else
        export_obj(mesh, sc.out_path);
    std::string dpath = detail::diag_path_for(sc.out_path);
    std::ofstream out(dpath);
    if (!out || !(out << diag.to_json()))
        throw IoFailure("cannot write diagnostics: " + dpath);
    return {std::move(diag), sc.out_path, dpath};
}

// Printability report without meshing: conformal spread, projected bounding
// box at unit scale, and the smallest uniform scale that lifts the thinnest
// feature to 1 mm. Designs that would project material to infinity are
// refused.
inline nlohmann::json analyze(const Scene& sc) {
    ProjectionFrame f = scene_frame(sc);
    double lmin = 1e300, lmax = 0.0, half_width_s3 = 0.0;
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    auto grow = [&](const Vec4& p, double pad_s3) {
        double lam = conformal_scale(p, f);
        lmin = std::min(lmin, lam);
        lmax = std::max(lmax, lam);
        Vec3 y = project_point(p, f);
        double pad = std::sin(pad_s3) * lam;
        lo = {std::min(lo.x, y.x - pad), std::min(lo.y, y.y - pad), std::min(lo.z, y.z - pad)};
        hi = {std::max(hi.x, y.x + pad), std::max(hi.y, y.y + pad), std::max(hi.z, y.z + pad)};
    };

    if (std::holds_alternative<PolytopeDesign>(sc.design)) {
        const PolytopeDesign& pd = std::get<PolytopeDesign>(sc.design);
        std::vector<GreatArc> arcs = detail::design_arcs(pd, f);
        if (arcs.empty()) throw Error("scene: design leaves nothing to analyze");
        half_width_s3 = sc.tube.radius_s3;
        try {
            detail::ensure_pole_clearance(arcs, sc.tube, f);
            for (const GreatArc& a : arcs) {
                auto [llo, lhi] = lambda_extremes(a, f);
                lmin = std::min(lmin, llo);
                lmax = std::max(lmax, lhi);
                for (int k = 0; k <= 32; ++k)
                    grow(a.point_at(a.t_start + a.length() * k / 32), sc.tube.radius_s3);
            }
        } catch (const AtPole&) {
            throw PoleCollision(
                "scene: skeleton touches the projection pole; the print would have "
                "infinite volume");
        }
    } else {
        const SurfaceDesign& sd = std::get<SurfaceDesign>(sc.design);
        detail::check_surface_spec(sd.spec);
        half_width_s3 = sd.shell.thickness_s3;
        const auto imgs = detail::param_images(sd.spec);
        for (auto& [pt, pp] : detail::pole_preimages(sd.spec, f.pole.vec()))
            if (!detail::in_puncture(sd.shell.punctures, imgs, pt, pp))
                throw PoleCollision(
                    "scene: surface passes through the projection pole without a "
                    "puncture; the print would have infinite volume");
        detail::ParamDomain d = detail::domain_of(sd.spec);
        for (int i = 0; i <= 200; ++i)
            for (int j = 0; j <= 200; ++j) {
                double th = d.th_lo + (d.th_hi - d.th_lo) * i / 200;
                double ph = d.ph_lo + (d.ph_hi - d.ph_lo) * j / 200;
                auto c = detail::canon_param(d, imgs, th, ph);
                if (!c) continue;
                if (detail::in_puncture(sd.shell.punctures, imgs, c->first, c->second))
                    continue;
                grow(eval_p(sd.spec, th, ph), sd.shell.thickness_s3);
            }
    }

    double min_diam_unit = 2.0 * std::sin(half_width_s3) * lmin;
    nlohmann::json out;
    out["feature_ratio"] = lmax / lmin;
    out["lambda_min"] = lmin;
    out["lambda_max"] = lmax;
    out["bbox_unit"] = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
    out["min_scale_for_1mm"] = 1.0 / min_diam_unit;
    return out;
}

// Embedded preset scenes. Target sizes are fixed reference dimensions; radii, grids
// and punctures are choices made for printability at those sizes.
struct PresetInfo {
    const char* name;
    const char* blurb;
    const char* json;
};

inline const std::vector<PresetInfo>& presets() {
    static const std::vector<PresetInfo> table = {
        {"24-cell",
         "all 96 edges of the cell-centered 24-cell as spherical tubes, 90 mm cube",
         R"({
  "design": {"polytope": {"kind": "cell24", "orientation": "cell-centered", "half": false}},
  "frame": {"pole": [0, 0, 0, 1]},
  "tube": {"radius_s3": 0.07, "segments_along": 2, "segments_around": 24,
           "cap_style": "spherical-cap"},
  "target_bbox_mm": [90, 90, 90],
  "output": {"format": "stl", "path": "24-cell.stl"}
})"},
        {"half-120-cell",
         "southern half of the cell-centered 120-cell edge skeleton, 99 mm cube",
         R"({
  "design": {"polytope": {"kind": "cell120", "orientation": "cell-centered", "half": true}},
  "frame": {"pole": [0, 0, 0, 1]},
  "tube": {"radius_s3": 0.022, "segments_along": 2, "segments_around": 14,
           "cap_style": "spherical-cap"},
  "target_bbox_mm": [99, 99, 99],
  "output": {"format": "stl", "path": "half-120-cell.stl"}
})"},
        {"half-600-cell",
         "southern half of the vertex-centered 600-cell edge skeleton, 99 mm cube",
         R"({
  "design": {"polytope": {"kind": "cell600", "orientation": "vertex-centered", "half": true}},
  "frame": {"pole": [0, 0, 0, 1]},
  "tube": {"radius_s3": 0.025, "segments_along": 2, "segments_around": 14,
           "cap_style": "spherical-cap"},
  "target_bbox_mm": [99, 99, 99],
  "output": {"format": "stl", "path": "half-600-cell.stl"}
})"},
        {"clifford-torus",
         "square-grid shell on the Clifford torus, punctured at the pole",
         R"({
  "design": {"surface": {"kind": "clifford-torus",
    "shell": {"thickness_s3": 0.0824, "grid_theta": 16, "grid_phi": 8,
              "strut_fraction": 0.5, "punctures": [[0, 0, 0.45, 0.45]]}}},
  "frame": {"pole": [1, 0, 0, 0]},
  "target_bbox_mm": [108, 108, 34],
  "output": {"format": "stl", "path": "clifford-torus.stl"}
})"},
        {"mobius",
         "one-sided band shell swept around a great circle, with a viewing puncture",
         R"({
  "design": {"surface": {"kind": "sudanese-mobius",
    "shell": {"thickness_s3": 0.018727, "grid_theta": 16, "grid_phi": 24,
              "strut_fraction": 0.5,
              "punctures": [[1.5707963267948966, 1.5707963267948966, 1.242641, 1.052693]]}}},
  "frame": {"pole": [0, 0, -1, 0]},
  "target_bbox_mm": [152, 109, 62],
  "output": {"format": "stl", "path": "mobius.stl"}
})"},
        {"klein",
         "closed one-sided bottle shell, punctured at both pole preimages",
         R"({
  "design": {"surface": {"kind": "klein-bottle",
    "shell": {"thickness_s3": 0.065, "grid_theta": 16, "grid_phi": 12,
              "strut_fraction": 0.5,
              "punctures": [[1.5707963267948966, 1.5707963267948966, 0.45, 0.30985],
                            [4.71238898038469, 0, 0.45, 0.30985]]}}},
  "frame": {"pole": [0, 0, -1, 0]},
  "target_bbox_mm": [152, 152, 109],
  "output": {"format": "stl", "path": "klein.stl"}
})"},
        {"knotted-cog",
         "trefoil band shell with 12 teeth on each side and a boundary notch",
         R"({
  "design": {"surface": {"kind": "torus-knot-band",
    "num": 3, "den": 2, "theta0": 0.27, "half_width": 0.23,
    "shell": {"thickness_s3": 0.06343, "grid_theta": 2, "grid_phi": 24,
              "strut_fraction": 0.9, "punctures": [[0.50, 0.0, 0.03, 0.35]]},
    "cog": {"tooth_count": 12, "tooth_height": 0.052, "top_fraction": 0.95,
            "base_fraction": 0.6},
    "normal_mode": "knot-alternative"}},
  "frame": {"pole": [0, 0, 1, 0]},
  "target_bbox_mm": [38, 34, 13],
  "output": {"format": "stl", "path": "knotted-cog.stl"}
})"},
    };
    return table;
}

inline const PresetInfo* find_preset(std::string_view name) {
    for (const PresetInfo& p : presets())
        if (name == p.name) return &p;
    return nullptr;
}

inline Scene preset_scene(std::string_view name) {
    const PresetInfo* p = find_preset(name);
    if (!p) throw SchemaError("scene: unknown preset '" + std::string(name) + "'");
    return parse_scene(nlohmann::json::parse(p->json));
}

inline std::string list_presets() {
    std::ostringstream out;
    for (const PresetInfo& p : presets()) out << p.name << ": " << p.blurb << "\n";
    return out.str();
}

} // namespace s3forge
