#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "kleinlab/moebius.hpp"

namespace kleinlab {

// ---------------------------------------------------------------------------
// Geodesics
// ---------------------------------------------------------------------------

struct Geodesic {
    BoundaryPoint e1, e2;  // oriented e1 -> e2

    Geodesic(BoundaryPoint from, BoundaryPoint to) : e1(from), e2(to) {
        if (chordal_dist(e1, e2) < 1e-14)
            throw std::invalid_argument("Geodesic: endpoints coincide");
    }
};

inline Geodesic transform(const MoebiusMap& m, const Geodesic& g) {
    return Geodesic(act_boundary(m, g.e1), act_boundary(m, g.e2));
}

// distance from a point to a full geodesic, plus the foot of the perpendicular;
// for a vertical axis sinh(dist) = |z|/t
inline std::pair<double, H3Point> point_to_geodesic(const H3Point& p, const Geodesic& g) {
    MoebiusMap n = map_to_zero_inf(g.e1, g.e2);
    H3Point q = act_h3(n, p);
    double r = std::abs(q.z);
    double dist = std::asinh(r / q.t);
    H3Point foot(Complex(0, 0), std::sqrt(std::norm(q.z) + q.t * q.t));
    return {dist, act_h3(n.inverse(), foot)};
}

// distance from a point to the geodesic segment [x, y] (interior endpoints);
// the foot on the axis is clamped to the segment, which is exact by convexity
inline double point_to_segment(const H3Point& p, const H3Point& x, const H3Point& y) {
    double direct = std::min(dist_h3(p, x), dist_h3(p, y));
    if (dist_h3(x, y) < 1e-13) return direct;
    auto ends = geodesic_endpoints_through(x, y);
    MoebiusMap n = map_to_zero_inf(ends.first, ends.second);
    H3Point px = act_h3(n, x), py = act_h3(n, y), pp = act_h3(n, p);
    double slo = std::log(px.t), shi = std::log(py.t);
    if (slo > shi) std::swap(slo, shi);
    double sstar = 0.5 * std::log(std::norm(pp.z) + pp.t * pp.t);
    sstar = std::min(std::max(sstar, slo), shi);
    return dist_h3(pp, H3Point(Complex(0, 0), std::exp(sstar)));
}

// ---------------------------------------------------------------------------
// Horoballs and tubes
// ---------------------------------------------------------------------------

struct Horoball {
    BoundaryPoint base;
    double size;  // base at infinity: region t >= size; finite base: tangent
                  // Euclidean ball of diameter size

    Horoball(BoundaryPoint b, double s) : base(b), size(s) {
        if (!(s > 0.0)) throw std::invalid_argument("Horoball: size must be positive");
    }
};

struct Tube {
    Geodesic axis;
    double radius;

    Tube(Geodesic a, double r) : axis(a), radius(r) {
        if (!(r > 0.0)) throw std::invalid_argument("Tube: radius must be positive");
    }
};

// signed distance to the boundary: negative inside, hyperbolic distance outside
inline double signed_dist(const H3Point& p, const Horoball& h) {
    if (h.base.inf) return std::log(h.size / p.t);
    double ratio = (std::norm(p.z - h.base.z) + p.t * p.t) / (h.size * p.t);
    return std::log(ratio);
}

inline double signed_dist(const H3Point& p, const Tube& t) {
    return point_to_geodesic(p, t.axis).first - t.radius;
}

inline Horoball transform(const MoebiusMap& m, const Horoball& h) {
    // track one horosphere point to recover the size: (0, size) on the plane
    // t = size, or the apex (base, size) of the tangent ball
    H3Point sample = h.base.inf ? H3Point(Complex(0, 0), h.size) : H3Point(h.base.z, h.size);
    BoundaryPoint nb = act_boundary(m, h.base);
    H3Point ns = act_h3(m, sample);
    if (nb.inf) return Horoball(nb, ns.t);
    double diam = (std::norm(ns.z - nb.z) + ns.t * ns.t) / ns.t;
    return Horoball(nb, diam);
}

// any Moebius map sending the given boundary point to infinity
inline MoebiusMap map_base_to_inf(const BoundaryPoint& base) {
    if (base.inf) return MoebiusMap::identity();
    return map_to_zero_inf(BoundaryPoint(base.z + 1.0), base);
}

inline Tube transform(const MoebiusMap& m, const Tube& t) {
    return Tube(transform(m, t.axis), t.radius);
}

// ---------------------------------------------------------------------------
// Surface metrics
// ---------------------------------------------------------------------------

// shortest path on a horosphere between two of its points; the induced metric
// is flat, and against the chord d the length satisfies l = 2 sinh(d/2)
inline double horoball_surface_dist(const Horoball& h, const H3Point& p1, const H3Point& p2) {
    double o1 = signed_dist(p1, h), o2 = signed_dist(p2, h);
    if (std::abs(o1) > cal::kOnSurfaceTol || std::abs(o2) > cal::kOnSurfaceTol)
        throw std::invalid_argument("horoball_surface_dist: point off the horosphere by " +
                                    std::to_string(std::max(std::abs(o1), std::abs(o2))));
    MoebiusMap n = map_base_to_inf(h.base);
    H3Point q1 = act_h3(n, p1), q2 = act_h3(n, p2);
    return std::abs(q1.z - q2.z) / q1.t;
}

struct TubeChord {
    double length = 0;  // geodesic length in the flat cone metric on the tube boundary
    double h = 0;       // axial distance between the projections
    double phi = 0;     // unwrapped rotation angle in [0, pi]
};

// flat coordinates on the tube boundary: ds^2 = cosh^2(R) du^2 + sinh^2(R) dtheta^2
// with u = log of the polar radius
inline TubeChord tube_surface_length(const Tube& t, const H3Point& p1, const H3Point& p2) {
    double o1 = signed_dist(p1, t), o2 = signed_dist(p2, t);
    if (std::abs(o1) > cal::kOnSurfaceTol || std::abs(o2) > cal::kOnSurfaceTol)
        throw std::invalid_argument("tube_surface_length: point off the tube boundary by " +
                                    std::to_string(std::max(std::abs(o1), std::abs(o2))));
    MoebiusMap n = map_to_zero_inf(t.axis.e1, t.axis.e2);
    H3Point q1 = act_h3(n, p1), q2 = act_h3(n, p2);
    double u1 = 0.5 * std::log(std::norm(q1.z) + q1.t * q1.t);
    double u2 = 0.5 * std::log(std::norm(q2.z) + q2.t * q2.t);
    double dtheta = 0.0;
    if (std::abs(q1.z) > 0 && std::abs(q2.z) > 0) {
        dtheta = std::arg(q2.z) - std::arg(q1.z);
        while (dtheta > M_PI) dtheta -= 2.0 * M_PI;
        while (dtheta < -M_PI) dtheta += 2.0 * M_PI;
    }
    TubeChord out;
    out.h = std::abs(u2 - u1);
    out.phi = std::abs(dtheta);
    out.length = std::hypot(out.phi * std::sinh(t.radius), out.h * std::cosh(t.radius));
    return out;
}

// point on the boundary cone of a vertical-axis tube: polar radius rho,
// rotation angle theta
inline H3Point cone_point(double radius, double rho, double theta) {
    return H3Point(rho * std::tanh(radius) * std::exp(Complex(0, theta)),
                   rho / std::cosh(radius));
}

// ---------------------------------------------------------------------------
// Geodesic / thin-part crossings
// ---------------------------------------------------------------------------

using ThinShape = std::variant<Horoball, Tube>;

inline double signed_dist(const H3Point& p, const ThinShape& s) {
    return std::visit([&](const auto& shape) { return signed_dist(p, shape); }, s);
}

inline ThinShape transform(const MoebiusMap& m, const ThinShape& s) {
    return std::visit([&](const auto& shape) { return ThinShape(transform(m, shape)); }, s);
}

enum class CrossingKind { none, tangent, crossing, contained, enters_end };

struct Crossing {
    CrossingKind kind = CrossingKind::none;
    std::optional<H3Point> entry, exit;
};

namespace detail {

// golden-section minimum of a unimodal function on [lo, hi]
template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, int iters = 200) {
    const double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = f(x2);
        }
    }
    double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

template <class F>
double bisect_root(F&& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200 && (hi - lo) > 1e-14 * (1.0 + std::abs(lo) + std::abs(hi)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if ((fm < 0) == (flo < 0)) { lo = mid; flo = fm; }
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Intersection of a boundary-to-boundary geodesic with the boundary of a thin
// part. The signed distance is convex along the geodesic, so there are at most
// two crossings; they are located by golden section plus bisection.
inline Crossing geodesic_thinpart_crossing(const Geodesic& g, const ThinShape& shape,
                                           double span = 45.0) {
    MoebiusMap n = map_to_zero_inf(g.e1, g.e2);
    MoebiusMap ninv = n.inverse();
    ThinShape local = transform(n, shape);
    auto f = [&](double s) { return signed_dist(H3Point(Complex(0, 0), std::exp(s)), local); };

    auto [smin, fmin] = detail::golden_min(f, -span, span);
    Crossing out;
    if (fmin > cal::kTangencyTol) return out;  // kind = none
    if (std::abs(fmin) <= cal::kTangencyTol) {
        out.kind = CrossingKind::tangent;
        return out;
    }
    double fLo = f(-span), fHi = f(span);
    if (fLo < 0 && fHi < 0) {
        out.kind = CrossingKind::contained;
        return out;
    }
    if (fLo < 0 || fHi < 0) {
        out.kind = CrossingKind::enters_end;
        double s = fLo < 0 ? detail::bisect_root(f, smin, span)
                           : detail::bisect_root(f, -span, smin);
        out.entry = act_h3(ninv, H3Point(Complex(0, 0), std::exp(s)));
        return out;
    }
    double sIn = detail::bisect_root(f, -span, smin);
    double sOut = detail::bisect_root(f, smin, span);
    out.kind = CrossingKind::crossing;
    out.entry = act_h3(ninv, H3Point(Complex(0, 0), std::exp(sIn)));
    out.exit = act_h3(ninv, H3Point(Complex(0, 0), std::exp(sOut)));
    return out;
}

// crossing of the segment [x, y] (interior endpoints) with a thin part
inline Crossing segment_thinpart_crossing(const H3Point& x, const H3Point& y,
                                          const ThinShape& shape) {
    if (dist_h3(x, y) < 1e-12) return Crossing{};
    auto ends = geodesic_endpoints_through(x, y);
    MoebiusMap n = map_to_zero_inf(ends.first, ends.second);
    MoebiusMap ninv = n.inverse();
    ThinShape local = transform(n, shape);
    double sx = std::log(act_h3(n, x).t), sy = std::log(act_h3(n, y).t);
    if (sx > sy) std::swap(sx, sy);
    auto f = [&](double s) { return signed_dist(H3Point(Complex(0, 0), std::exp(s)), local); };

    auto [smin, fmin] = detail::golden_min(f, sx, sy);
    Crossing out;
    if (fmin > cal::kTangencyTol) return out;
    if (std::abs(fmin) <= cal::kTangencyTol) { out.kind = CrossingKind::tangent; return out; }
    double fLo = f(sx), fHi = f(sy);
    if (fLo < 0 && fHi < 0) { out.kind = CrossingKind::contained; return out; }
    if (fLo < 0 || fHi < 0) {
        out.kind = CrossingKind::enters_end;
        double s = fLo < 0 ? detail::bisect_root(f, smin, sy) : detail::bisect_root(f, sx, smin);
        out.entry = act_h3(ninv, H3Point(Complex(0, 0), std::exp(s)));
        return out;
    }
    out.kind = CrossingKind::crossing;
    out.entry = act_h3(ninv, H3Point(Complex(0, 0), std::exp(detail::bisect_root(f, sx, smin))));
    out.exit = act_h3(ninv, H3Point(Complex(0, 0), std::exp(detail::bisect_root(f, smin, sy))));
    return out;
}

// minimum distance from a point to the geodesic segment [p1, p2]
inline double min_dist_on_segment(const H3Point& origin, const H3Point& p1, const H3Point& p2) {
    return point_to_segment(origin, p1, p2);
}

// ---------------------------------------------------------------------------
// Penetration bounds
// ---------------------------------------------------------------------------

struct PenetrationResult {
    double min_dist_on_segment = 0;
    double bound = 0;       // N/4 - c with the frozen constant
    double n_value = 0;     // N = min distance from the origin to the endpoints
};

// Chord between two horosphere points far from the origin stays far from the
// origin: min distance >= N/4 - c.
inline PenetrationResult horoball_penetration_check(const Horoball& h, const H3Point& origin,
                                                    const H3Point& p1, const H3Point& p2) {
    if (signed_dist(origin, h) < -cal::kOnSurfaceTol)
        throw std::invalid_argument("horoball_penetration_check: origin inside the horoball");
    if (std::abs(signed_dist(p1, h)) > cal::kOnSurfaceTol ||
        std::abs(signed_dist(p2, h)) > cal::kOnSurfaceTol)
        throw std::invalid_argument("horoball_penetration_check: endpoint off the horosphere");
    PenetrationResult out;
    out.n_value = std::min(dist_h3(origin, p1), dist_h3(origin, p2));
    out.min_dist_on_segment = min_dist_on_segment(origin, p1, p2);
    out.bound = out.n_value / 4.0 - cal::kHoroballPenetrationC;
    return out;
}

struct TubePenetrationResult : PenetrationResult {
    double surface_path_min = 0;  // min distance from the origin to the connecting surface path
};

// Same bound for tubes, under the extra hypothesis that the surface chord
// between the endpoints stays outside the N-ball around the origin. The
// coplanar-midpoint configuration (origin sitting on the surface path)
// genuinely breaks the bound and is rejected.
inline TubePenetrationResult tube_penetration_check(const Tube& t, const H3Point& origin,
                                                    const H3Point& p1, const H3Point& p2,
                                                    int surface_samples = 256) {
    if (signed_dist(origin, t) < -cal::kOnSurfaceTol)
        throw std::invalid_argument("tube_penetration_check: origin inside the tube");
    if (std::abs(signed_dist(p1, t)) > cal::kOnSurfaceTol ||
        std::abs(signed_dist(p2, t)) > cal::kOnSurfaceTol)
        throw std::invalid_argument("tube_penetration_check: endpoint off the tube boundary");

    TubePenetrationResult out;
    out.n_value = std::min(dist_h3(origin, p1), dist_h3(origin, p2));
    out.min_dist_on_segment = min_dist_on_segment(origin, p1, p2);
    out.bound = out.n_value / 4.0 - cal::kTubePenetrationC;

    // sample the flat-metric surface geodesic between p1 and p2
    MoebiusMap n = map_to_zero_inf(t.axis.e1, t.axis.e2);
    MoebiusMap ninv = n.inverse();
    H3Point q1 = act_h3(n, p1), q2 = act_h3(n, p2);
    double u1 = 0.5 * std::log(std::norm(q1.z) + q1.t * q1.t);
    double u2 = 0.5 * std::log(std::norm(q2.z) + q2.t * q2.t);
    double th1 = std::abs(q1.z) > 0 ? std::arg(q1.z) : 0.0;
    double dtheta = 0.0;
    if (std::abs(q1.z) > 0 && std::abs(q2.z) > 0) {
        dtheta = std::arg(q2.z) - th1;
        while (dtheta > M_PI) dtheta -= 2.0 * M_PI;
        while (dtheta < -M_PI) dtheta += 2.0 * M_PI;
    }
    double best = INFINITY;
    for (int i = 0; i <= surface_samples; ++i) {
        double s = static_cast<double>(i) / surface_samples;
        H3Point pt = cone_point(t.radius, std::exp(u1 + s * (u2 - u1)), th1 + s * dtheta);
        best = std::min(best, dist_h3(origin, act_h3(ninv, pt)));
    }
    out.surface_path_min = best;
    if (best < out.n_value - cal::kTubePathSlack)
        throw std::invalid_argument(
            "tube_penetration_check: connecting surface path enters the excluded ball "
            "(coplanar-midpoint configuration); bound not applicable");
    return out;
}

// ---------------------------------------------------------------------------
// Thin-part systems
// ---------------------------------------------------------------------------

// distance between the closures of two thin parts (0 if they meet)
inline double thinpart_distance(const ThinShape& s1, const ThinShape& s2) {
    if (std::holds_alternative<Horoball>(s1) && std::holds_alternative<Horoball>(s2)) {
        const auto& h1 = std::get<Horoball>(s1);
        const auto& h2 = std::get<Horoball>(s2);
        if (chordal_dist(h1.base, h2.base) < 1e-14) return 0.0;
        MoebiusMap n = map_base_to_inf(h1.base);
        Horoball a = transform(n, h1);  // becomes t >= a.size
        Horoball b = transform(n, h2);  // finite tangent ball with apex height b.size
        return std::max(0.0, std::log(a.size / b.size));
    }
    if (std::holds_alternative<Tube>(s1) && std::holds_alternative<Tube>(s2)) {
        const auto& t1 = std::get<Tube>(s1);
        const auto& t2 = std::get<Tube>(s2);
        MoebiusMap n = map_to_zero_inf(t1.axis.e1, t1.axis.e2);
        BoundaryPoint u = act_boundary(n, t2.axis.e1), v = act_boundary(n, t2.axis.e2);
        double axisDist;
        if (u.inf || v.inf) {
            axisDist = 0.0;  // shares the endpoint at infinity: asymptotic axes
        } else {
            Complex ratio = (u.z + v.z) / (u.z - v.z);
            axisDist = std::abs(std::real(std::acosh(ratio)));
        }
        return std::max(0.0, axisDist - t1.radius - t2.radius);
    }
    const Horoball& h = std::holds_alternative<Horoball>(s1) ? std::get<Horoball>(s1)
                                                             : std::get<Horoball>(s2);
    const Tube& t = std::holds_alternative<Tube>(s1) ? std::get<Tube>(s1) : std::get<Tube>(s2);
    MoebiusMap n = map_base_to_inf(h.base);
    Horoball hh = transform(n, h);  // t >= hh.size
    Geodesic axis = transform(n, t.axis);
    if (axis.e1.inf || axis.e2.inf) return 0.0;  // axis reaches the horoball base point
    double apex = 0.5 * std::abs(axis.e1.z - axis.e2.z);
    return std::max(0.0, std::log(hh.size / apex) - t.radius);
}

}  // namespace kleinlab
