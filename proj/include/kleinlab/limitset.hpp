#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kleinlab/families.hpp"
#include "kleinlab/moebius.hpp"
#include "kleinlab/words.hpp"

namespace kleinlab {

struct SamplePoint {
    BoundaryPoint p;
    SpherePoint sphere;  // cached embedding; chordal distance = Euclidean here
    Word word;
    int depth = 0;
};

enum class SampleMode { fixed_point, orbit };

struct LimitSample {
    std::vector<SamplePoint> points;
    int depth = 0;
    SampleMode mode = SampleMode::fixed_point;
    double dedup_tol = cal::kDedupTol;
    int elliptic_skipped = 0;  // nonzero signals torsion or non-discreteness
    std::vector<double> orbit_distances;  // orbit mode: d(O, w O) per point
};

namespace detail {

// dedup grid on the embedded sphere: first point claims the cluster
class DedupGrid {
public:
    explicit DedupGrid(double tol) : tol_(tol), cell_(tol) {}

    bool try_insert(const SpherePoint& s) {
        int64_t cx = static_cast<int64_t>(std::floor(s.x / cell_));
        int64_t cy = static_cast<int64_t>(std::floor(s.y / cell_));
        int64_t cz = static_cast<int64_t>(std::floor(s.w / cell_));
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dy = -1; dy <= 1; ++dy)
                for (int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find(key(cx + dx, cy + dy, cz + dz));
                    if (it == cells_.end()) continue;
                    for (size_t idx : it->second) {
                        const SpherePoint& q = pts_[idx];
                        double d2 = (s.x - q.x) * (s.x - q.x) + (s.y - q.y) * (s.y - q.y) +
                                    (s.w - q.w) * (s.w - q.w);
                        if (d2 < tol_ * tol_) return false;
                    }
                }
        cells_[key(cx, cy, cz)].push_back(pts_.size());
        pts_.push_back(s);
        return true;
    }

private:
    static uint64_t key(int64_t x, int64_t y, int64_t z) {
        uint64_t h = 1469598103934665603ULL;
        for (int64_t v : {x, y, z}) {
            h ^= static_cast<uint64_t>(v);
            h *= 1099511628211ULL;
        }
        return h;
    }
    double tol_, cell_;
    std::unordered_map<uint64_t, std::vector<size_t>> cells_;
    std::vector<SpherePoint> pts_;
};

inline void canonical_sort(std::vector<SamplePoint>& pts) {
    std::sort(pts.begin(), pts.end(), [](const SamplePoint& a, const SamplePoint& b) {
        if (a.sphere.w != b.sphere.w) return a.sphere.w < b.sphere.w;
        if (a.sphere.x != b.sphere.x) return a.sphere.x < b.sphere.x;
        return a.sphere.y < b.sphere.y;
    });
}

}  // namespace detail

// fixed points of all cyclically reduced words up to depth maxLen; repelling
// points are limit points too and are kept unless told otherwise
inline LimitSample sample_fixed_points(const Representation& rep, int maxLen,
                                       bool includeRepelling = true,
                                       double dedupTol = cal::kDedupTol) {
    LimitSample out;
    out.depth = maxLen;
    out.mode = SampleMode::fixed_point;
    out.dedup_tol = dedupTol;
    detail::DedupGrid grid(dedupTol);

    scan_orbit(rep, maxLen, [&](std::span<const Letter> ls, const MoebiusMap& m) {
        if (ls.size() >= 2 && ls.front() == letter_inverse(ls.back())) return;
        Classification cls = classify(m);
        if (cls.cls == MapClass::identity) return;
        if (cls.cls == MapClass::elliptic) {
            ++out.elliptic_skipped;
            return;
        }
        FixedPoints fp = fixed_points(m);
        Word w(std::vector<Letter>(ls.begin(), ls.end()));
        SpherePoint sp = boundary_to_sphere(fp.attracting);
        if (grid.try_insert(sp))
            out.points.push_back({fp.attracting, sp, w, static_cast<int>(ls.size())});
        if (includeRepelling && fp.repelling) {
            SpherePoint sr = boundary_to_sphere(*fp.repelling);
            if (grid.try_insert(sr))
                out.points.push_back({*fp.repelling, sr, w, static_cast<int>(ls.size())});
        }
    });
    detail::canonical_sort(out.points);
    return out;
}

// boundary shadows of the orbit sphere |w| = depth
inline LimitSample sample_orbit(const Representation& rep, int depth,
                                double dedupTol = cal::kDedupTol) {
    for (const auto& g : rep.gens)
        if (proj_equal(g, MoebiusMap::identity(), 1e-9))
            throw std::invalid_argument("sample_orbit: degenerate representation (a generator "
                                        "acts as the identity)");
    LimitSample out;
    out.depth = depth;
    out.mode = SampleMode::orbit;
    out.dedup_tol = dedupTol;
    detail::DedupGrid grid(dedupTol);
    const H3Point O = base_point();

    scan_orbit(rep, depth, [&](std::span<const Letter> ls, const MoebiusMap& m) {
        if (static_cast<int>(ls.size()) != depth) return;
        H3Point img = act_h3(m, O);
        BoundaryPoint shadow = boundary_shadow(img);
        SpherePoint sp = boundary_to_sphere(shadow);
        if (grid.try_insert(sp)) {
            out.points.push_back(
                {shadow, sp, Word(std::vector<Letter>(ls.begin(), ls.end())), depth});
            out.orbit_distances.push_back(dist_h3(O, img));
        }
    });
    detail::canonical_sort(out.points);
    return out;
}

// ---------------------------------------------------------------------------
// Hausdorff distance
// ---------------------------------------------------------------------------

namespace detail {

// nearest-neighbour grid over sphere embeddings; cells only prune, every
// candidate within the current best is still examined exactly
class NnGrid {
public:
    explicit NnGrid(const std::vector<SamplePoint>& pts, double cell) : cell_(cell) {
        for (const auto& sp : pts) cells_[key_of(sp.sphere)].push_back(sp.sphere);
    }

    double nearest_dist(const SpherePoint& q) const {
        double best = INFINITY;
        int64_t cx = coord(q.x), cy = coord(q.y), cz = coord(q.w);
        for (int ring = 0;; ++ring) {
            if (best < (ring - 1) * cell_ && ring > 0) break;
            bool any = false;
            for (int64_t dx = -ring; dx <= ring; ++dx)
                for (int64_t dy = -ring; dy <= ring; ++dy)
                    for (int64_t dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = cells_.find(key(cx + dx, cy + dy, cz + dz));
                        if (it == cells_.end()) continue;
                        any = true;
                        for (const auto& p : it->second) {
                            double d2 = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) +
                                        (p.w - q.w) * (p.w - q.w);
                            best = std::min(best, std::sqrt(d2));
                        }
                    }
            if (ring * cell_ > 4.0 && !any && best == INFINITY) break;  // sphere diameter is 2
            if (best <= ring * cell_) break;
        }
        return best;
    }

private:
    int64_t coord(double v) const { return static_cast<int64_t>(std::floor(v / cell_)); }
    uint64_t key_of(const SpherePoint& s) const { return key(coord(s.x), coord(s.y), coord(s.w)); }
    static uint64_t key(int64_t x, int64_t y, int64_t z) {
        uint64_t h = 1469598103934665603ULL;
        for (int64_t v : {x, y, z}) {
            h ^= static_cast<uint64_t>(v);
            h *= 1099511628211ULL;
        }
        return h;
    }
    double cell_;
    std::unordered_map<uint64_t, std::vector<SpherePoint>> cells_;
};

inline double directed_hausdorff(const std::vector<SamplePoint>& from,
                                 const std::vector<SamplePoint>& to) {
    if (from.empty() || to.empty())
        throw std::invalid_argument("hausdorff_chordal: empty sample");
    const size_t kBruteLimit = 10000;
    double worst = 0;
    if (from.size() * to.size() <= kBruteLimit * kBruteLimit / 10 &&
        std::max(from.size(), to.size()) <= kBruteLimit) {
        for (const auto& f : from) {
            double best = INFINITY;
            for (const auto& t : to) {
                double d2 = (f.sphere.x - t.sphere.x) * (f.sphere.x - t.sphere.x) +
                            (f.sphere.y - t.sphere.y) * (f.sphere.y - t.sphere.y) +
                            (f.sphere.w - t.sphere.w) * (f.sphere.w - t.sphere.w);
                best = std::min(best, d2);
            }
            worst = std::max(worst, std::sqrt(best));
        }
        return worst;
    }
    NnGrid grid(to, 0.02);
    for (const auto& f : from) worst = std::max(worst, grid.nearest_dist(f.sphere));
    return worst;
}

}  // namespace detail

inline double hausdorff_chordal(const LimitSample& s1, const LimitSample& s2) {
    return std::max(detail::directed_hausdorff(s1.points, s2.points),
                    detail::directed_hausdorff(s2.points, s1.points));
}

}  // namespace kleinlab
