#pragma once
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>
#include <nlohmann/json.hpp>
#include "errors.hpp"
#include "parallel.hpp"
#include "vec.hpp"

namespace s3forge {

// Printability metadata carried alongside the triangles. Generators record
// where they know their own local thickness; validate() turns that into
// min_feature without a general mesh-to-mesh distance query.
struct FeatureSample {
    Vec3 pos;
    double size;  // local material diameter (wall thickness, strut width)
    std::uint32_t part;
};
struct AxisSample {
    Vec3 pos;       // centerline / mid-surface point
    double radius;  // local material half-thickness around pos
    std::uint32_t part;
};
struct MeshMetadata {
    std::vector<FeatureSample> features;
    std::vector<AxisSample> axis_samples;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> adjacent_parts;  // allowed to touch
    std::uint32_t part_count = 0;
    double lambda_min = 1.0, lambda_max = 1.0;  // conformal scale range over the design
};

// Indexed triangle soup with shell markers: shells[s] is the first triangle
// of shell s, which extends to the next marker (or the end).
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<std::uint32_t> shells;
    MeshMetadata metadata;

    std::size_t shell_count() const { return shells.size(); }
    std::pair<std::uint32_t, std::uint32_t> shell_range(std::size_t s) const {
        std::uint32_t lo = shells[s];
        std::uint32_t hi = s + 1 < shells.size() ? shells[s + 1]
                                                 : static_cast<std::uint32_t>(triangles.size());
        return {lo, hi};
    }

    // Concatenate another mesh as additional shells; its part ids shift up so
    // they stay distinct.
    void append(const TriMesh& o) {
        const bool was_empty = triangles.empty();
        const std::uint32_t voff = static_cast<std::uint32_t>(vertices.size());
        const std::uint32_t toff = static_cast<std::uint32_t>(triangles.size());
        const std::uint32_t poff = metadata.part_count;
        vertices.insert(vertices.end(), o.vertices.begin(), o.vertices.end());
        for (const auto& t : o.triangles)
            triangles.push_back({t[0] + voff, t[1] + voff, t[2] + voff});
        for (std::uint32_t s : o.shells) shells.push_back(s + toff);
        for (FeatureSample f : o.metadata.features) {
            f.part += poff;
            metadata.features.push_back(f);
        }
        for (AxisSample a : o.metadata.axis_samples) {
            a.part += poff;
            metadata.axis_samples.push_back(a);
        }
        for (auto [a, b] : o.metadata.adjacent_parts)
            metadata.adjacent_parts.emplace_back(a + poff, b + poff);
        metadata.part_count += o.metadata.part_count;
        if (was_empty) {
            metadata.lambda_min = o.metadata.lambda_min;
            metadata.lambda_max = o.metadata.lambda_max;
        } else {
            metadata.lambda_min = std::min(metadata.lambda_min, o.metadata.lambda_min);
            metadata.lambda_max = std::max(metadata.lambda_max, o.metadata.lambda_max);
        }
    }
};

struct Diagnostics {
    std::vector<bool> watertight;  // per shell
    std::vector<long long> euler;  // per shell
    double volume_mm3 = 0.0;
    Vec3 bbox_mm{0, 0, 0};
    double min_feature_mm = std::numeric_limits<double>::quiet_NaN();
    double feature_ratio = 1.0;

    bool all_watertight() const {
        for (bool w : watertight)
            if (!w) return false;
        return !watertight.empty();
    }

    std::string to_json() const {
        nlohmann::json j;
        j["watertight"] = watertight;
        j["euler"] = euler;
        j["volume_mm3"] = volume_mm3;
        j["bbox_mm"] = {bbox_mm.x, bbox_mm.y, bbox_mm.z};
        if (std::isnan(min_feature_mm))
            j["min_feature_mm"] = nullptr;  // mesh carried no thickness metadata
        else
            j["min_feature_mm"] = min_feature_mm;
        j["feature_ratio"] = feature_ratio;
        return j.dump(2) + "\n";
    }
};

namespace detail {

inline double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

// Disjoint-set over vertex indices; representative is the smallest index.
struct UnionFind {
    std::vector<std::uint32_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::uint32_t>(i);
    }
    std::uint32_t find(std::uint32_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);
        parent[b] = a;  // keep the smaller index as representative
    }
};

inline std::uint64_t cell_key(long long cx, long long cy, long long cz) {
    std::uint64_t h = 1469598103934665603ull;
    for (long long v : {cx, cy, cz}) {
        std::uint64_t u = static_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (u >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    return h;
}

} // namespace detail

// Merge vertices closer than tol (exact duplicates when tol = 0), drop the
// triangles this degenerates, and remap shell ranges. Deterministic: merged
// groups keep the lowest original index, compacted in first-appearance order.
inline TriMesh weld(const TriMesh& m, double tol_mm) {
    const std::size_t n = m.vertices.size();
    std::vector<std::uint32_t> rep(n);

    if (tol_mm <= 0.0) {
        std::map<std::array<double, 3>, std::uint32_t> seen;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& v = m.vertices[i];
            rep[i] = seen.try_emplace({v.x, v.y, v.z}, static_cast<std::uint32_t>(i)).first->second;
        }
    } else {
        detail::UnionFind uf(n);
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
        grid.reserve(n * 2);
        const double inv = 1.0 / tol_mm;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& v = m.vertices[i];
            long long cx = static_cast<long long>(std::floor(v.x * inv));
            long long cy = static_cast<long long>(std::floor(v.y * inv));
            long long cz = static_cast<long long>(std::floor(v.z * inv));
            for (long long dx = -1; dx <= 1; ++dx)
                for (long long dy = -1; dy <= 1; ++dy)
                    for (long long dz = -1; dz <= 1; ++dz) {
                        auto it = grid.find(detail::cell_key(cx + dx, cy + dy, cz + dz));
                        if (it == grid.end()) continue;
                        for (std::uint32_t j : it->second)
                            if (dist(v, m.vertices[j]) <= tol_mm)
                                uf.unite(static_cast<std::uint32_t>(i), j);
                    }
            grid[detail::cell_key(cx, cy, cz)].push_back(static_cast<std::uint32_t>(i));
        }
        for (std::size_t i = 0; i < n; ++i) rep[i] = uf.find(static_cast<std::uint32_t>(i));
    }

    TriMesh out;
    out.metadata = m.metadata;
    std::vector<std::uint32_t> compact(n, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t r = rep[i];
        if (compact[r] == std::numeric_limits<std::uint32_t>::max()) {
            compact[r] = static_cast<std::uint32_t>(out.vertices.size());
            out.vertices.push_back(m.vertices[r]);
        }
        compact[i] = compact[r];
    }

    std::size_t shell = 0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        while (shell < m.shells.size() && m.shells[shell] == t) {
            out.shells.push_back(static_cast<std::uint32_t>(out.triangles.size()));
            ++shell;
        }
        std::array<std::uint32_t, 3> tri{compact[m.triangles[t][0]], compact[m.triangles[t][1]],
                                         compact[m.triangles[t][2]]};
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
        if (detail::tri_area(out.vertices[tri[0]], out.vertices[tri[1]], out.vertices[tri[2]]) <=
            1e-12)
            continue;
        out.triangles.push_back(tri);
    }
    while (shell < m.shells.size()) {
        out.shells.push_back(static_cast<std::uint32_t>(out.triangles.size()));
        ++shell;
    }
    return out;
}

// Topology, volume and printability report. Never throws: problems show up
// as falsy/degenerate numbers, not exceptions.
inline Diagnostics validate(const TriMesh& m) {
    Diagnostics d;
    const std::size_t ns = m.shell_count();
    d.watertight.assign(ns, false);
    d.euler.assign(ns, 0);
    std::vector<double> shell_volume(ns, 0.0);
    std::vector<char> shell_ok(ns, 0);

    parallel_for(ns, [&](std::size_t s) {
        auto [lo, hi] = m.shell_range(s);
        std::unordered_map<std::uint64_t, int> directed;
        std::unordered_set<std::uint32_t> verts;
        directed.reserve(static_cast<std::size_t>(hi - lo) * 3);
        double vol6 = 0.0;
        for (std::uint32_t t = lo; t < hi; ++t) {
            const auto& tr = m.triangles[t];
            const Vec3 &a = m.vertices[tr[0]], &b = m.vertices[tr[1]], &c = m.vertices[tr[2]];
            vol6 += dot(a, cross(b, c));
            for (int e = 0; e < 3; ++e) {
                std::uint32_t u = tr[e], v = tr[(e + 1) % 3];
                verts.insert(u);
                directed[(static_cast<std::uint64_t>(u) << 32) | v] += 1;
            }
        }
        bool ok = hi > lo;
        std::size_t undirected = 0;
        for (const auto& [key, count] : directed) {
            std::uint32_t u = static_cast<std::uint32_t>(key >> 32);
            std::uint32_t v = static_cast<std::uint32_t>(key & 0xffffffffu);
            if (count != 1) ok = false;
            auto rev = directed.find((static_cast<std::uint64_t>(v) << 32) | u);
            if (rev == directed.end() || rev->second != 1) ok = false;
            if (u < v) ++undirected;
        }
        // an unpaired edge leaves its partner missing, so undirected pairs
        // must account for every directed edge
        if (2 * undirected != directed.size()) ok = false;
        shell_ok[s] = ok ? 1 : 0;
        shell_volume[s] = vol6 / 6.0;
        d.euler[s] = static_cast<long long>(verts.size()) -
                     static_cast<long long>(undirected) + (hi - lo);
    });

    for (std::size_t s = 0; s < ns; ++s) {
        d.watertight[s] = shell_ok[s] != 0;
        d.volume_mm3 += shell_volume[s];
    }

    if (!m.vertices.empty()) {
        Vec3 lo = m.vertices[0], hi = m.vertices[0];
        for (const Vec3& v : m.vertices) {
            lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
            hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
        }
        d.bbox_mm = hi - lo;
    }

    // Thinnest local feature...
    double feat = std::numeric_limits<double>::infinity();
    for (const FeatureSample& f : m.metadata.features) feat = std::min(feat, f.size);

    // ...and tightest clearance between parts that are not meant to touch.
    // Only gaps below the current minimum matter, which caps the search
    // radius and lets a coarse grid prune almost every pair.
    const auto& ax = m.metadata.axis_samples;
    if (!ax.empty() && std::isfinite(feat)) {
        std::unordered_set<std::uint64_t> allowed;
        for (auto [a, b] : m.metadata.adjacent_parts) {
            if (a > b) std::swap(a, b);
            allowed.insert((static_cast<std::uint64_t>(a) << 32) | b);
        }
        auto eligible = [&](std::uint32_t pa, std::uint32_t pb) {
            if (pa == pb) return false;
            if (pa > pb) std::swap(pa, pb);
            return !allowed.count((static_cast<std::uint64_t>(pa) << 32) | pb);
        };
        double rmax = 0;
        for (const AxisSample& a : ax) rmax = std::max(rmax, a.radius);
        const double cell = feat + 2.0 * rmax;
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
        grid.reserve(ax.size() * 2);
        auto key_of = [&](const Vec3& p) {
            return detail::cell_key(static_cast<long long>(std::floor(p.x / cell)),
                                    static_cast<long long>(std::floor(p.y / cell)),
                                    static_cast<long long>(std::floor(p.z / cell)));
        };
        for (std::uint32_t i = 0; i < ax.size(); ++i) grid[key_of(ax[i].pos)].push_back(i);
        for (std::uint32_t i = 0; i < ax.size(); ++i) {
            const AxisSample& a = ax[i];
            long long cx = static_cast<long long>(std::floor(a.pos.x / cell));
            long long cy = static_cast<long long>(std::floor(a.pos.y / cell));
            long long cz = static_cast<long long>(std::floor(a.pos.z / cell));
            for (long long dx = -1; dx <= 1; ++dx)
                for (long long dy = -1; dy <= 1; ++dy)
                    for (long long dz = -1; dz <= 1; ++dz) {
                        auto it = grid.find(detail::cell_key(cx + dx, cy + dy, cz + dz));
                        if (it == grid.end()) continue;
                        for (std::uint32_t j : it->second) {
                            if (j <= i) continue;
                            const AxisSample& b = ax[j];
                            if (!eligible(a.part, b.part)) continue;
                            feat = std::min(feat, dist(a.pos, b.pos) - a.radius - b.radius);
                        }
                    }
        }
    }
    if (std::isfinite(feat)) d.min_feature_mm = feat;
    d.feature_ratio = m.metadata.lambda_max / m.metadata.lambda_min;
    return d;
}

// Uniform scale placing the largest bbox extent on the largest target extent.
// No translation; metadata lengths scale along.
inline TriMesh scale_to(const TriMesh& m, const Vec3& target_bbox_mm) {
    if (m.vertices.empty()) throw Error("scale_to: empty mesh");
    Vec3 lo = m.vertices[0], hi = m.vertices[0];
    for (const Vec3& v : m.vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    Vec3 ext = hi - lo;
    double emax = std::max({ext.x, ext.y, ext.z});
    double tmax = std::max({target_bbox_mm.x, target_bbox_mm.y, target_bbox_mm.z});
    if (emax <= 0 || tmax <= 0) throw Error("scale_to: degenerate extents");
    const double s = tmax / emax;

    TriMesh out = m;
    for (Vec3& v : out.vertices) v = v * s;
    for (FeatureSample& f : out.metadata.features) {
        f.pos = f.pos * s;
        f.size *= s;
    }
    for (AxisSample& a : out.metadata.axis_samples) {
        a.pos = a.pos * s;
        a.radius *= s;
    }
    return out;
}

// Binary STL: 80-byte header, u32 triangle count, then 50 bytes per triangle
// (normal + 3 vertices as f32 little-endian, u16 attribute = 0).
inline void export_stl(const TriMesh& m, const std::string& path) {
    static_assert(std::endian::native == std::endian::little,
                  "binary STL writer assumes a little-endian host");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("export_stl: cannot open " + path);

    char header[80] = {};
    std::snprintf(header, sizeof header, "s3forge mesh; %zu triangles", m.triangles.size());
    out.write(header, 80);
    std::uint32_t count = static_cast<std::uint32_t>(m.triangles.size());
    out.write(reinterpret_cast<const char*>(&count), 4);

    auto put_f32 = [&](double v) {
        float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    };
    for (const auto& t : m.triangles) {
        const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
        Vec3 n = cross(b - a, c - a);
        double len = norm(n);
        n = len > 0 ? n * (1.0 / len) : Vec3{0, 0, 0};
        for (const Vec3& v : {n, a, b, c}) {
            put_f32(v.x);
            put_f32(v.y);
            put_f32(v.z);
        }
        std::uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
    if (!out) throw IoFailure("export_stl: write failed for " + path);
    out.close();
    if (!out) throw IoFailure("export_stl: close failed for " + path);
}

// ASCII OBJ with v/f records, 1-based indices, 9 significant digits.
inline void export_obj(const TriMesh& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("export_obj: cannot open " + path);
    char line[128];
    for (const Vec3& v : m.vertices) {
        std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << line;
    }
    for (const auto& t : m.triangles) {
        std::snprintf(line, sizeof line, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out << line;
    }
    if (!out) throw IoFailure("export_obj: write failed for " + path);
    out.close();
    if (!out) throw IoFailure("export_obj: close failed for " + path);
}

} // namespace s3forge
