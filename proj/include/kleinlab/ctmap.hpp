#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kleinlab/diagnostics.hpp"
#include "kleinlab/families.hpp"
#include "kleinlab/limitset.hpp"
#include "kleinlab/rng.hpp"
#include "kleinlab/words.hpp"

namespace kleinlab {

// ---------------------------------------------------------------------------
// Boundary-map evaluation
// ---------------------------------------------------------------------------

struct CtOptions {
    double tol = cal::kCtTol;          // chordal acceptance on the tail spread
    int tail_window = cal::kCtTailWindow;
};

struct CtError : std::runtime_error {
    double spread;
    CtError(const std::string& msg, double s) : std::runtime_error(msg), spread(s) {}
};

struct CTEvaluation {
    BoundaryPoint source;
    BoundaryPoint value;
    double residual = 0;        // chordal diameter of the tail shadows
    int depth_used = 0;
    bool parabolic_branch = false;
    std::vector<BoundaryPoint> shadows;      // per-prefix orbit shadows
    std::vector<double> orbit_distances;     // d(O, rho(g_r) O)
};

// Evaluate the boundary map along a word path under the destination marking.
// Paths into a designated parabolic direction short-circuit to the image
// parabolic fixed point; otherwise the orbit shadows must settle within tol
// over the trailing window.
inline CTEvaluation ct_eval(const Representation& dst, const BoundaryWordPath& path,
                            const CtOptions& opt = {}) {
    CTEvaluation out;
    out.source = path.target;

    if (path.powers_of_word && dst.is_designated_parabolic(path.power_base)) {
        MoebiusMap image = dst.eval(path.power_base);
        Classification cls = classify(image);
        if (cls.cls == MapClass::parabolic) {
            out.parabolic_branch = true;
            out.value = fixed_points(image).attracting;
            return out;
        }
    }

    const H3Point O = base_point();
    MoebiusMap acc;
    Word prev;
    auto window_spread = [&] {
        size_t window = std::min<size_t>(static_cast<size_t>(opt.tail_window),
                                         out.shadows.size());
        double spread = 0;
        for (size_t i = out.shadows.size() - window; i < out.shadows.size(); ++i)
            for (size_t j = i + 1; j < out.shadows.size(); ++j)
                spread = std::max(spread, chordal_dist(out.shadows[i], out.shadows[j]));
        return spread;
    };
    for (size_t r = 1; r < path.prefixes.size(); ++r) {
        Word delta = concat(inverse(prev), path.prefixes[r]);
        if (delta.size() != 1)
            throw std::invalid_argument("ct_eval: path steps must differ by one generator");
        acc = acc * dst.gen(delta.letters[0]);
        prev = path.prefixes[r];
        H3Point img = act_h3(acc, O);
        double d = dist_h3(O, img);
        if (d < 1e-12) continue;  // path may revisit the basepoint early on
        out.orbit_distances.push_back(d);
        out.shadows.push_back(boundary_shadow(img));
        // accept as soon as a full window has settled; walking further only
        // burns conditioning
        if (out.shadows.size() >= static_cast<size_t>(opt.tail_window)) {
            double spread = window_spread();
            if (spread < opt.tol) {
                out.residual = spread;
                out.depth_used = static_cast<int>(out.shadows.size());
                out.value = out.shadows.back();
                return out;
            }
        }
    }
    if (out.shadows.empty()) throw std::invalid_argument("ct_eval: empty path");
    out.depth_used = static_cast<int>(out.shadows.size());
    out.residual = window_spread();
    if (out.residual >= opt.tol)
        throw CtError("ct_eval: shadows did not settle at this depth (spread " +
                          fmt_double(out.residual) + ")",
                      out.residual);
    out.value = out.shadows.back();
    return out;
}

// power path carrying at least reps repetitions and enough letters to fill
// the acceptance window with room to settle
inline BoundaryWordPath settled_power_path(const Word& w, int reps, BoundaryPoint target,
                                           const CtOptions& opt = {}) {
    int minLetters = opt.tail_window + 30;
    int need = std::max(reps, (minLetters + static_cast<int>(w.size()) - 1) /
                                  static_cast<int>(w.size()));
    return make_power_path(w, need, target);
}

struct CtPair {
    const Representation* src;
    const Representation* dst;
};

// evaluation keyed by a target point: the path must actually aim at xi
inline CTEvaluation ct_eval(const CtPair& pair, const BoundaryPoint& xi,
                            const BoundaryWordPath& path, const CtOptions& opt = {}) {
    if (chordal_dist(path.target, xi) > 1e-9)
        throw std::invalid_argument("ct_eval: path does not target the requested point");
    (void)pair.src;
    return ct_eval(*pair.dst, path, opt);
}

// max over sample words w and grid directions v of
//   d( ct(w . v+), rho_dst(w) . ct(v+) )
inline double equivariance_check(const CtPair& pair, const std::vector<Word>& samples,
                                 const std::vector<Word>& grid, int pathReps,
                                 const CtOptions& opt = {}) {
    double worst = 0;
    for (const Word& v : grid) {
        MoebiusMap mv = pair.src->eval(v);
        if (classify(mv).cls != MapClass::loxodromic) continue;
        BoundaryPoint xi = fixed_points(mv).attracting;
        BoundaryWordPath base = settled_power_path(v, pathReps, xi, opt);
        BoundaryPoint eta = ct_eval(*pair.dst, base, opt).value;
        for (const Word& w : samples) {
            BoundaryPoint xiMoved = act_boundary(pair.src->eval(w), xi);
            BoundaryWordPath moved = translate_path(w, base, xiMoved);
            BoundaryPoint lhs = ct_eval(*pair.dst, moved, opt).value;
            BoundaryPoint rhs = act_boundary(pair.dst->eval(w), eta);
            worst = std::max(worst, chordal_dist(lhs, rhs));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Orbit-growth fits
// ---------------------------------------------------------------------------

struct FloydFit {
    double a = 0;                       // max d(O, g O) / |g|
    std::optional<double> b;            // min of the same ratio (no cusps)
    std::optional<double> k;            // max of 2 log|g| - d(O, g O) (cusps)
    int depth = 0;
    std::vector<double> min_dist_per_len;  // index = word length
};

inline FloydFit floyd_fit(const Representation& rep, int maxLen) {
    if (rep.evidence == Evidence::none && rep.family != "cyclic-divergent")
        throw std::invalid_argument("floyd_fit: representation carries no discreteness evidence");
    FloydFit fit;
    fit.depth = maxLen;
    fit.min_dist_per_len.assign(static_cast<size_t>(maxLen) + 1, INFINITY);
    fit.min_dist_per_len[0] = 0;
    const H3Point O = base_point();
    double ratioLo = INFINITY, ratioHi = 0, kMax = -INFINITY;
    scan_orbit(rep, maxLen, [&](std::span<const Letter> ls, const MoebiusMap& m) {
        double d = dist_h3(O, act_h3(m, O));
        double len = static_cast<double>(ls.size());
        ratioLo = std::min(ratioLo, d / len);
        ratioHi = std::max(ratioHi, d / len);
        auto& slot = fit.min_dist_per_len[ls.size()];
        slot = std::min(slot, d);
        if (ls.size() >= 2) kMax = std::max(kMax, 2.0 * std::log(len) - d);
    });
    fit.a = ratioHi;
    if (rep.convex_cocompact) {
        fit.b = ratioLo;
        // orbit points failing to escape mean the marking is not what the
        // convex-cocompact tag promises
        if (maxLen >= 4 &&
            fit.min_dist_per_len[static_cast<size_t>(maxLen)] -
                    fit.min_dist_per_len[static_cast<size_t>(maxLen) - 2] <
                0.05)
            throw std::runtime_error("floyd_fit: family mistagged or non-discrete");
    } else {
        fit.k = kMax;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Geodesic segment pools
// ---------------------------------------------------------------------------

// Sampled Cayley-graph geodesic segments grouped by their distance to the
// identity (= common prefix depth, exact in a free group). The same pool
// serves every table row, so suffix minima are nested and the reported
// profiles are monotone by construction.
struct SegmentPool {
    struct Segment {
        Word u, v;
        int closest;  // d(1, [u,v]) = gromov product
    };
    std::vector<std::vector<Segment>> by_depth;  // index N: segments with closest = N + 1
    uint64_t seed = 0;
    int spread = 0;
};

inline SegmentPool make_segment_pool(int rank, int maxN, int spread, int perDepth,
                                     uint64_t seed) {
    SegmentPool pool;
    pool.seed = seed;
    pool.spread = spread;
    pool.by_depth.resize(static_cast<size_t>(maxN) + 1);
    for (int N = 0; N <= maxN; ++N) {
        Rng rng = Rng::derive(seed, static_cast<uint64_t>(N));
        auto randomWord = [&](int len, Letter avoidFirst, Letter banCancel) {
            std::vector<Letter> ls;
            while (static_cast<int>(ls.size()) < len) {
                Letter next = letter_from_rank(rng.uniform_int(0, 2 * rank - 1));
                if (ls.empty() && (next == avoidFirst || next == banCancel)) continue;
                if (!ls.empty() && next == letter_inverse(ls.back())) continue;
                ls.push_back(next);
            }
            return ls;
        };
        for (int s = 0; s < perDepth; ++s) {
            std::vector<Letter> prefix = randomWord(N + 1, 0, 0);
            Letter last = prefix.back();
            int extraU = rng.uniform_int(0, spread - 1);
            int extraV = rng.uniform_int(0, spread - 1);
            std::vector<Letter> su = randomWord(extraU, 0, letter_inverse(last));
            Letter firstU = su.empty() ? 0 : su.front();
            std::vector<Letter> sv = randomWord(extraV, firstU, letter_inverse(last));
            SegmentPool::Segment seg;
            std::vector<Letter> uu = prefix, vv = prefix;
            uu.insert(uu.end(), su.begin(), su.end());
            vv.insert(vv.end(), sv.begin(), sv.end());
            seg.u = Word(uu);
            seg.v = Word(vv);
            seg.closest = gromov_product(seg.u, seg.v);
            pool.by_depth[static_cast<size_t>(N)].push_back(std::move(seg));
        }
    }
    return pool;
}

// distance from the basepoint to the straightened image of a segment
inline double segment_image_distance(const Representation& rep, const SegmentPool::Segment& seg) {
    H3Point x = rep.orbit(seg.u), y = rep.orbit(seg.v);
    return point_to_segment(base_point(), x, y);
}

// per-N exclusion radii: the straightened images of all pooled segments at
// combinatorial depth > N stay this far from the basepoint
inline DiagnosticsTable exclusion_profile(const Representation& rep, const SegmentPool& pool) {
    DiagnosticsTable table;
    table.add_meta("experiment", "exclusion-profile");
    table.add_meta("pool-seed", std::to_string(pool.seed));
    size_t colN = table.add_column("N");
    size_t colF = table.add_column("f");
    size_t colCount = table.add_column("samples");
    int maxN = static_cast<int>(pool.by_depth.size()) - 1;
    std::vector<double> minAt(static_cast<size_t>(maxN) + 1, INFINITY);
    std::vector<double> counts(static_cast<size_t>(maxN) + 1, 0);
    for (int N = 0; N <= maxN; ++N)
        for (const auto& seg : pool.by_depth[static_cast<size_t>(N)]) {
            minAt[static_cast<size_t>(N)] =
                std::min(minAt[static_cast<size_t>(N)], segment_image_distance(rep, seg));
            counts[static_cast<size_t>(N)] += 1;
        }
    // suffix minimum: rows report inf over strictly deeper segments
    for (int N = maxN; N >= 0; --N) {
        if (N < maxN) {
            minAt[static_cast<size_t>(N)] =
                std::min(minAt[static_cast<size_t>(N)], minAt[static_cast<size_t>(N) + 1]);
            counts[static_cast<size_t>(N)] += counts[static_cast<size_t>(N) + 1];
        }
    }
    for (int N = 0; N <= maxN; ++N) {
        table.data[colN].push_back(N);
        table.data[colF].push_back(minAt[static_cast<size_t>(N)]);
        table.data[colCount].push_back(counts[static_cast<size_t>(N)]);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Escape tables
// ---------------------------------------------------------------------------

struct UepCaps {
    int table_max = 30;        // rows N = 0..table_max
    int depth_cap = 31;        // words up to this length enter the minimum
    int exhaustive_cap = 10;   // full enumeration below, sampling above
    int samples_per_length = 512;
    uint64_t seed = 1;
};

enum class GrowthFlag { growing, bounded, undetermined };

inline const char* to_string(GrowthFlag f) {
    switch (f) {
        case GrowthFlag::growing: return "growing";
        case GrowthFlag::bounded: return "bounded";
        default: return "undetermined";
    }
}

// frozen decision rule shared by the escape tables: bounded when the last row
// improves on the middle row by less than the slack, growing when it clears
// the slack and the column never falls back (suffix minima guarantee the
// latter by construction)
inline GrowthFlag growth_flag(const std::vector<double>& column) {
    if (column.size() < 4) return GrowthFlag::undetermined;
    double last = column.back();
    double mid = column[column.size() / 2];
    if (last - mid < cal::kTableFlatSlack) return GrowthFlag::bounded;
    for (size_t i = 1; i < column.size(); ++i)
        if (column[i] < column[i - 1] - 1e-12) return GrowthFlag::undetermined;
    return GrowthFlag::growing;
}

// smallest orbit displacement over all indices and all words longer than N;
// exhaustive to the exhaustive cap, seeded sampling beyond
inline DiagnosticsTable uep_table(const RepSequence& seq, const UepCaps& caps) {
    if (caps.table_max >= caps.depth_cap)
        throw std::invalid_argument("uep_table: insufficient depth (table rows reach the cap)");
    const H3Point O = base_point();
    int rank = seq.source().rank();
    int exhaustive = std::min(caps.exhaustive_cap, caps.depth_cap);
    if (rank == 1) exhaustive = caps.depth_cap;  // the ball is two words per length

    std::vector<double> minPerLen(static_cast<size_t>(caps.depth_cap) + 1, INFINITY);
    for (size_t idx = 0; idx < seq.steps.size(); ++idx) {
        const Representation& rep = seq.steps[idx];
        if (rank == 1) {
            MoebiusMap fwd, bwd;
            for (int L = 1; L <= caps.depth_cap; ++L) {
                fwd = fwd * rep.gen(static_cast<Letter>(1));
                bwd = bwd * rep.gen(static_cast<Letter>(-1));
                auto& slot = minPerLen[static_cast<size_t>(L)];
                slot = std::min(slot, dist_h3(O, act_h3(fwd, O)));
                slot = std::min(slot, dist_h3(O, act_h3(bwd, O)));
            }
            continue;
        }
        scan_orbit(rep, exhaustive, [&](std::span<const Letter> ls, const MoebiusMap& m) {
            auto& slot = minPerLen[ls.size()];
            slot = std::min(slot, dist_h3(O, act_h3(m, O)));
        });
        for (int L = exhaustive + 1; L <= caps.depth_cap; ++L) {
            Rng rng = Rng::derive(caps.seed, (static_cast<uint64_t>(idx) << 20) ^
                                                 static_cast<uint64_t>(L));
            for (int s = 0; s < caps.samples_per_length; ++s) {
                MoebiusMap m;
                Letter lastLetter = 0;
                for (int i = 0; i < L; ++i) {
                    Letter next;
                    do {
                        next = letter_from_rank(rng.uniform_int(0, 2 * rank - 1));
                    } while (next == letter_inverse(lastLetter));
                    m = m * rep.gen(next);
                    lastLetter = next;
                }
                auto& slot = minPerLen[static_cast<size_t>(L)];
                slot = std::min(slot, dist_h3(O, act_h3(m, O)));
            }
        }
    }

    DiagnosticsTable table;
    table.add_meta("experiment", "uep");
    table.add_meta("depth-cap", std::to_string(caps.depth_cap));
    table.add_meta("exhaustive-cap", std::to_string(exhaustive));
    table.add_meta("samples-per-length", std::to_string(caps.samples_per_length));
    table.add_meta("seed", std::to_string(caps.seed));
    size_t colN = table.add_column("N");
    size_t colU = table.add_column("u");
    std::vector<double> suffix(minPerLen.size() + 1, INFINITY);
    for (size_t L = minPerLen.size(); L-- > 0;)
        suffix[L] = std::min(minPerLen[L], suffix[L + 1]);
    for (int N = 0; N <= caps.table_max; ++N) {
        table.data[colN].push_back(N);
        table.data[colU].push_back(suffix[static_cast<size_t>(N) + 1]);
    }
    table.add_verdict("uep", growth_flag(table.data[colU]) == GrowthFlag::bounded
                                 ? "violating"
                                 : (growth_flag(table.data[colU]) == GrowthFlag::growing
                                        ? "consistent"
                                        : "undetermined"));
    return table;
}

// segment analogue: distance from the basepoint to straightened segment
// images, over all indices and pooled segments deeper than N
inline DiagnosticsTable uepp_table(const RepSequence& seq, const SegmentPool& pool,
                                   int tableMax) {
    int maxN = static_cast<int>(pool.by_depth.size()) - 1;
    if (tableMax > maxN)
        throw std::invalid_argument("uepp_table: pool too shallow for the requested rows");
    std::vector<double> minAt(static_cast<size_t>(maxN) + 1, INFINITY);
    for (size_t idx = 0; idx < seq.steps.size(); ++idx)
        for (int N = 0; N <= maxN; ++N)
            for (const auto& seg : pool.by_depth[static_cast<size_t>(N)])
                minAt[static_cast<size_t>(N)] = std::min(
                    minAt[static_cast<size_t>(N)], segment_image_distance(seq.steps[idx], seg));
    std::vector<double> suffix(minAt.size() + 1, INFINITY);
    for (size_t N = minAt.size(); N-- > 0;) suffix[N] = std::min(minAt[N], suffix[N + 1]);

    DiagnosticsTable table;
    table.add_meta("experiment", "uepp");
    table.add_meta("pool-seed", std::to_string(pool.seed));
    size_t colN = table.add_column("N");
    size_t colV = table.add_column("v");
    for (int N = 0; N <= tableMax; ++N) {
        table.data[colN].push_back(N);
        table.data[colV].push_back(suffix[static_cast<size_t>(N)]);
    }
    table.add_verdict("uepp", growth_flag(table.data[colV]) == GrowthFlag::bounded
                                  ? "violating"
                                  : (growth_flag(table.data[colV]) == GrowthFlag::growing
                                         ? "consistent"
                                         : "undetermined"));
    return table;
}

// ---------------------------------------------------------------------------
// Per-point escape diagnostics
// ---------------------------------------------------------------------------

enum class PathCase { bounded_blocks, growing_blocks, terminal_block };

inline const char* to_string(PathCase c) {
    switch (c) {
        case PathCase::bounded_blocks: return "bounded-blocks";
        case PathCase::growing_blocks: return "growing-blocks";
        default: return "terminal-block";
    }
}

// classify a path word by its parabolic-block profile: a final block covering
// a quarter of the word reads as heading into the cusp; strictly growing
// block lengths read as unbounded blocks
inline PathCase classify_path(const Word& w, const Alphabet& alphabet, int k0) {
    BlockParse parse = parse_parabolic_blocks(w, alphabet, k0);
    std::vector<int> lens;
    for (const auto& b : parse.blocks()) lens.push_back(std::abs(b.exponent));
    if (!parse.segments.empty() && parse.segments.back().is_block &&
        lens.back() * 4 >= static_cast<int>(w.size()))
        return PathCase::terminal_block;
    if (lens.size() >= 2) {
        bool growing = true;
        for (size_t i = 1; i < lens.size(); ++i)
            if (lens[i] <= lens[i - 1]) growing = false;
        if (growing && lens.back() >= 2 * k0) return PathCase::growing_blocks;
    }
    return PathCase::bounded_blocks;
}

struct EpDiagnostic {
    DiagnosticsTable table;  // columns N, f, M
    PathCase path_case = PathCase::bounded_blocks;
    bool skipped = false;    // terminal-block paths follow from algebraic convergence
};

// For each N: the escape level f(N) = min over indices n >= M(N) and path
// vertices beyond combinatorial depth N of d(O, j_n(g_r)).  M(N) is the
// smallest burn-in achieving at least half of the best attainable level
// (frozen rule; a uniform family reports M = 1 throughout).
inline EpDiagnostic ep_diagnostic(const RepSequence& seq, const BoundaryWordPath& path,
                                  int tableMax, int k0 = 2) {
    EpDiagnostic out;
    out.path_case = classify_path(path.final_word(), seq.source().alphabet, k0);
    out.table.add_meta("experiment", "ep");
    out.table.add_meta("path-word", to_string(path.final_word()));
    out.table.add_verdict("path-case", to_string(out.path_case));
    if (out.path_case == PathCase::terminal_block) {
        out.skipped = true;
        out.table.add_verdict("note", "terminal parabolic block: follows from algebraic convergence");
        return out;
    }
    int maxPrefix = 0;
    for (const auto& g : path.prefixes) maxPrefix = std::max(maxPrefix, static_cast<int>(g.size()));
    if (maxPrefix < tableMax)
        throw std::invalid_argument("ep_diagnostic: path too short for the requested rows");

    const H3Point O = base_point();
    size_t count = seq.steps.size();
    // dist[idx][r]
    std::vector<std::vector<double>> dist(count);
    for (size_t idx = 0; idx < count; ++idx) {
        const Representation& rep = seq.steps[idx];
        dist[idx].reserve(path.prefixes.size());
        MoebiusMap acc;
        Word prev;
        for (size_t r = 1; r < path.prefixes.size(); ++r) {
            Word delta = concat(inverse(prev), path.prefixes[r]);
            acc = acc * rep.gen(delta.letters[0]);
            prev = path.prefixes[r];
            dist[idx].push_back(dist_h3(O, act_h3(acc, O)));
        }
    }
    size_t colN = out.table.add_column("N");
    size_t colF = out.table.add_column("f");
    size_t colM = out.table.add_column("M");
    for (int N = 1; N <= tableMax; ++N) {
        auto levelFrom = [&](size_t mStart) {
            double level = INFINITY;
            for (size_t idx = mStart; idx < count; ++idx)
                for (size_t r = 1; r < path.prefixes.size(); ++r)
                    if (static_cast<int>(path.prefixes[r].size()) >= N)
                        level = std::min(level, dist[idx][r - 1]);
            return level;
        };
        double best = levelFrom(count - 1);
        size_t m = 0;
        while (m + 1 < count && levelFrom(m) < 0.5 * best) ++m;
        out.table.data[colN].push_back(N);
        out.table.data[colF].push_back(levelFrom(m));
        out.table.data[colM].push_back(static_cast<double>(m + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convergence reports
// ---------------------------------------------------------------------------

enum class ConvergenceVerdict { uniform_consistent, pointwise_only_consistent, inconsistent };

inline const char* to_string(ConvergenceVerdict v) {
    switch (v) {
        case ConvergenceVerdict::uniform_consistent: return "uniform-consistent";
        case ConvergenceVerdict::pointwise_only_consistent: return "pointwise-only-consistent";
        default: return "inconsistent";
    }
}

struct ConvergenceReport {
    DiagnosticsTable table;                    // rows n: sup distance, failures
    std::vector<std::vector<double>> pointwise;  // [n][grid index], NaN on failure
    std::vector<Word> grid_words;
    ConvergenceVerdict verdict = ConvergenceVerdict::inconsistent;
};

struct ConvergenceCaps {
    int grid_depth = 6;
    int grid_size = 200;
    int path_reps = 12;
    int jobs = 1;
};

// grid directions: cyclically reduced words, loxodromic under the source and
// the limit, deduplicated by their attracting fixed points
inline std::vector<Word> convergence_grid(const RepSequence& seq, int depth, int size) {
    std::vector<Word> grid;
    detail::DedupGrid dedup(1e-6);
    for (const Word& w : enumerate_ball(seq.source().rank(), depth)) {
        if (w.empty() || !cyclically_reduced(w)) continue;
        MoebiusMap src = seq.source().eval(w);
        if (classify(src).cls != MapClass::loxodromic) continue;
        if (classify(seq.limit.eval(w)).cls == MapClass::elliptic) continue;
        if (!dedup.try_insert(boundary_to_sphere(fixed_points(src).attracting))) continue;
        grid.push_back(w);
        if (static_cast<int>(grid.size()) >= size) break;
    }
    return grid;
}

// Frozen verdict rule.  Uniform-consistent: the sup column is non-increasing
// over the last five indices and either ends below tol or shrinks by the
// frozen factor across that tail.  Pointwise-only: every grid column passes
// the same test while the sup does not.
inline ConvergenceVerdict convergence_verdict(const std::vector<std::vector<double>>& pointwise,
                                              const std::vector<double>& sup, double tol) {
    size_t n = sup.size();
    size_t tail = std::min<size_t>(5, n);
    auto tailOk = [&](auto&& value) {
        for (size_t i = n - tail + 1; i < n; ++i)
            if (value(i) > value(i - 1) + 1e-12) return false;
        double first = value(n - tail), last = value(n - 1);
        return last <= tol || first >= cal::kSupDecreaseFactor * last;
    };
    if (tailOk([&](size_t i) { return sup[i]; })) return ConvergenceVerdict::uniform_consistent;
    size_t grid = pointwise.empty() ? 0 : pointwise.front().size();
    bool allCols = grid > 0;
    for (size_t g = 0; g < grid && allCols; ++g)
        if (!tailOk([&](size_t i) { return pointwise[i][g]; })) allCols = false;
    return allCols ? ConvergenceVerdict::pointwise_only_consistent
                   : ConvergenceVerdict::inconsistent;
}

inline ConvergenceReport convergence_report(const RepSequence& seq, const ConvergenceCaps& caps,
                                            const CtOptions& opt = {}) {
    ConvergenceReport report;
    report.grid_words = convergence_grid(seq, caps.grid_depth, caps.grid_size);
    if (report.grid_words.empty())
        throw std::runtime_error("convergence_report: empty evaluation grid");

    size_t count = seq.steps.size();
    size_t grid = report.grid_words.size();

    // limit values first
    std::vector<BoundaryPoint> limitValue(grid);
    std::vector<bool> limitOk(grid, false);
    for (size_t g = 0; g < grid; ++g) {
        const Word& w = report.grid_words[g];
        MoebiusMap src = seq.source().eval(w);
        BoundaryPoint xi = fixed_points(src).attracting;
        try {
            limitValue[g] =
                ct_eval(seq.limit, settled_power_path(w, caps.path_reps, xi, opt), opt).value;
            limitOk[g] = true;
        } catch (const CtError&) {
        }
    }

    report.pointwise.assign(count, std::vector<double>(grid, NAN));
    std::vector<double> failures(count, 0);
    parallel_for(caps.jobs, count, [&](size_t idx) {
        for (size_t g = 0; g < grid; ++g) {
            if (!limitOk[g]) { failures[idx] += 1; continue; }
            const Word& w = report.grid_words[g];
            BoundaryPoint xi = fixed_points(seq.source().eval(w)).attracting;
            try {
                BoundaryPoint val =
                    ct_eval(seq.steps[idx], settled_power_path(w, caps.path_reps, xi, opt), opt)
                        .value;
                report.pointwise[idx][g] = chordal_dist(val, limitValue[g]);
            } catch (const CtError&) {
                failures[idx] += 1;
            }
        }
    });

    report.table.add_meta("experiment", "ct-converge");
    report.table.add_meta("grid-depth", std::to_string(caps.grid_depth));
    report.table.add_meta("grid-size", std::to_string(grid));
    report.table.add_meta("path-reps", std::to_string(caps.path_reps));
    size_t colIdx = report.table.add_column("n");
    size_t colSup = report.table.add_column("sup");
    size_t colFail = report.table.add_column("failures");
    std::vector<double> sup(count, 0);
    for (size_t idx = 0; idx < count; ++idx) {
        for (size_t g = 0; g < grid; ++g)
            if (!std::isnan(report.pointwise[idx][g]))
                sup[idx] = std::max(sup[idx], report.pointwise[idx][g]);
        report.table.data[colIdx].push_back(static_cast<double>(idx + 1));
        report.table.data[colSup].push_back(sup[idx]);
        report.table.data[colFail].push_back(failures[idx]);
    }
    report.verdict = convergence_verdict(report.pointwise, sup, opt.tol);
    report.table.add_verdict("convergence", to_string(report.verdict));
    return report;
}

// ---------------------------------------------------------------------------
// Geometric-limit bookkeeping
// ---------------------------------------------------------------------------

struct MatchResult {
    std::optional<Word> match;
    std::vector<Word> violations;  // nonempty when several words landed in the ball
};

// for each candidate isometry, the unique enumerated word whose orbit point
// lands within delta0 of the candidate's
inline std::vector<MatchResult> geometric_limit_match(const RepSequence& seq, size_t index,
                                                      const std::vector<MoebiusMap>& candidates,
                                                      double delta0, int wordCap,
                                                      const std::vector<Word>& extraWords = {}) {
    const Representation& rep = seq.steps.at(index);
    const H3Point O = base_point();
    std::vector<H3Point> targets;
    targets.reserve(candidates.size());
    for (const auto& h : candidates) targets.push_back(act_h3(h, O));

    std::vector<MatchResult> results(candidates.size());
    auto consider = [&](std::span<const Letter> ls, const MoebiusMap& m) {
        H3Point img = act_h3(m, O);
        for (size_t c = 0; c < targets.size(); ++c) {
            if (dist_h3(img, targets[c]) >= delta0) continue;
            Word w(std::vector<Letter>(ls.begin(), ls.end()));
            if (!results[c].match) {
                results[c].match = w;
            } else if (!(*results[c].match == w)) {
                results[c].violations.push_back(w);
            }
        }
    };
    scan_orbit(rep, wordCap, consider);
    for (const Word& w : extraWords) {
        MoebiusMap m = rep.eval(w);
        consider(std::span<const Letter>(w.letters.data(), w.letters.size()), m);
    }
    return results;
}

// does the straightened span of a parabolic block meet its thin part?
inline bool penetration_witness(const RepSequence& seq, size_t index, const ParabolicBlock& block,
                                double margulis = 0.5) {
    if (block.exponent == 0) return false;
    const Representation& rep = seq.steps.at(index);
    if (!rep.is_designated_parabolic(block.base))
        throw std::invalid_argument(
            "penetration_witness: no thin part constructed for this block base");
    MoebiusMap g = rep.eval(block.base);
    ThinShape part = thin_part_of(g, margulis, classify(g).cls == MapClass::parabolic);
    Word end = concat(block.expand(), block.remainder);
    H3Point A = base_point();
    H3Point B = rep.orbit(end);
    Crossing crossing = segment_thinpart_crossing(A, B, part);
    return crossing.kind == CrossingKind::crossing || crossing.kind == CrossingKind::contained ||
           crossing.kind == CrossingKind::enters_end;
}

}  // namespace kleinlab
