#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

#include "kleinlab/calibration.hpp"

namespace kleinlab {

using Complex = std::complex<double>;

// acosh(1+u) without cancellation for small u
inline double acosh1p(double u) {
    if (u < 0) u = 0;
    return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

// ---------------------------------------------------------------------------
// Riemann sphere
// ---------------------------------------------------------------------------

struct BoundaryPoint {
    Complex z{0.0, 0.0};
    bool inf = false;

    BoundaryPoint() = default;
    BoundaryPoint(Complex value) : z(value) {}          // NOLINT(google-explicit-constructor)
    BoundaryPoint(double re, double im) : z(re, im) {}
    static BoundaryPoint infinity() { BoundaryPoint p; p.inf = true; return p; }
};

// chordal metric on C-hat, bounded by 2; equals the Euclidean metric between
// the images under stereographic projection to the unit sphere
inline double chordal_dist(const BoundaryPoint& p, const BoundaryPoint& q) {
    if (p.inf && q.inf) return 0.0;
    if (p.inf) return 2.0 / std::sqrt(1.0 + std::norm(q.z));
    if (q.inf) return 2.0 / std::sqrt(1.0 + std::norm(p.z));
    return 2.0 * std::abs(p.z - q.z) /
           std::sqrt((1.0 + std::norm(p.z)) * (1.0 + std::norm(q.z)));
}

struct SpherePoint { double x = 0, y = 0, w = 0; };

inline SpherePoint boundary_to_sphere(const BoundaryPoint& p) {
    if (p.inf) return {0.0, 0.0, 1.0};
    double n = std::norm(p.z);
    double d = 1.0 + n;
    return {2.0 * p.z.real() / d, 2.0 * p.z.imag() / d, (n - 1.0) / d};
}

inline BoundaryPoint sphere_to_boundary(const SpherePoint& s) {
    if (s.w > 1.0 - 1e-15) return BoundaryPoint::infinity();
    return BoundaryPoint(Complex(s.x, s.y) / (1.0 - s.w));
}

// ---------------------------------------------------------------------------
// Upper half-space and ball models
// ---------------------------------------------------------------------------

struct H3Point {
    Complex z{0.0, 0.0};
    double t = 1.0;

    H3Point() = default;
    H3Point(Complex horizontal, double height) : z(horizontal), t(height) {
        if (!(t > 0.0)) throw std::invalid_argument("H3Point: height must be positive");
    }
};

inline H3Point base_point() { return H3Point(Complex(0, 0), 1.0); }

inline double dist_h3(const H3Point& p, const H3Point& q) {
    double u = (std::norm(p.z - q.z) + (p.t - q.t) * (p.t - q.t)) / (2.0 * p.t * q.t);
    return acosh1p(u);
}

struct BallPoint { double x = 0, y = 0, u = 0; double norm2() const { return x * x + y * y + u * u; } };

namespace detail {
// quaternion z + w*j in Cayley-Dickson form; enough for the model change
struct Quat { Complex z, w; };
inline Quat qmul(const Quat& p, const Quat& q) {
    return {p.z * q.z - p.w * std::conj(q.w), p.z * q.w + p.w * std::conj(q.z)};
}
inline Quat qinv(const Quat& p) {
    double n = std::norm(p.z) + std::norm(p.w);
    return {std::conj(p.z) / n, -p.w / n};
}
}  // namespace detail

// Fixed model change: upper half-space (0,1) <-> ball centre, q |-> (q-j)(1-jq)^{-1}.
inline BallPoint ball_from_h3(const H3Point& p) {
    using detail::Quat;
    Quat num{p.z, Complex(p.t - 1.0, 0.0)};
    Quat den{Complex(1.0 + p.t, 0.0), -std::conj(p.z)};
    Quat r = detail::qmul(num, detail::qinv(den));
    return {r.z.real(), r.z.imag(), r.w.real()};
}

inline H3Point h3_from_ball(const BallPoint& b) {
    using detail::Quat;
    Complex zb(b.x, b.y);
    Quat den{Complex(1.0 - b.u, 0.0), zb};
    Quat num{zb, Complex(b.u + 1.0, 0.0)};
    Quat r = detail::qmul(detail::qinv(den), num);
    return H3Point(r.z, r.w.real());
}

// radial projection of a ball-model point to the sphere at infinity
inline BoundaryPoint boundary_shadow(const H3Point& p) {
    BallPoint b = ball_from_h3(p);
    double r = std::sqrt(b.norm2());
    if (r == 0.0) throw std::invalid_argument("boundary_shadow: point is the basepoint");
    return sphere_to_boundary({b.x / r, b.y / r, b.u / r});
}

// ---------------------------------------------------------------------------
// PSL(2,C)
// ---------------------------------------------------------------------------

struct MoebiusMap {
    Complex a{1, 0}, b{0, 0}, c{0, 0}, d{1, 0};

    MoebiusMap() = default;
    MoebiusMap(Complex a_, Complex b_, Complex c_, Complex d_) : a(a_), b(b_), c(c_), d(d_) {
        normalize();
    }

    Complex det() const { return a * d - b * c; }
    Complex trace() const { return a + d; }
    Complex trace_sq() const { Complex t = a + d; return t * t; }

    void normalize() {
        Complex dt = det();
        if (std::abs(dt) == 0.0)
            throw std::invalid_argument("MoebiusMap: singular matrix");
        Complex s = std::sqrt(dt);
        a /= s; b /= s; c /= s; d /= s;
    }

    MoebiusMap inverse() const {
        MoebiusMap m;
        m.a = d; m.b = -b; m.c = -c; m.d = a;
        return m;
    }

    static MoebiusMap identity() { return MoebiusMap(); }

    double max_abs_entry() const {
        return std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
    }
};

// conditioning monitor: composes whose entries exceeded the bound
inline uint64_t& conditioning_flag() {
    thread_local uint64_t count = 0;
    return count;
}

inline MoebiusMap operator*(const MoebiusMap& m, const MoebiusMap& n) {
    MoebiusMap r;
    r.a = m.a * n.a + m.b * n.c;
    r.b = m.a * n.b + m.b * n.d;
    r.c = m.c * n.a + m.d * n.c;
    r.d = m.c * n.b + m.d * n.d;
    double scale = r.max_abs_entry();
    if (scale > cal::kEntryBound) ++conditioning_flag();
    // Products of unit-det factors keep det within rounding of 1, while the
    // computed det of a large-entry matrix carries cancellation noise of
    // order scale^2 * eps.  Renormalize only when the measured drift clears
    // that noise floor; rescaling by an untrustworthy estimate would corrupt
    // an otherwise entrywise-accurate product.
    Complex dt = r.det();
    double drift = std::abs(dt - Complex(1, 0));
    double noise = 16.0 * scale * scale * 2.22e-16;
    if (drift > 1e-14 && drift > noise) {
        Complex s = std::sqrt(dt);
        r.a /= s; r.b /= s; r.c /= s; r.d /= s;
    }
    return r;
}

// projective distance: M and -M are the same map
inline double proj_dist(const MoebiusMap& m, const MoebiusMap& n) {
    auto span = [](Complex p, Complex q, Complex r, Complex s) {
        return std::max(std::max(std::abs(p), std::abs(q)), std::max(std::abs(r), std::abs(s)));
    };
    double plus = span(m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d);
    double minus = span(m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d);
    return std::min(plus, minus);
}

inline bool proj_equal(const MoebiusMap& m, const MoebiusMap& n, double tol = cal::kProjIdTol) {
    return proj_dist(m, n) < tol;
}

inline MoebiusMap pow(const MoebiusMap& m, int k) {
    MoebiusMap base = k >= 0 ? m : m.inverse();
    int e = k >= 0 ? k : -k;
    MoebiusMap acc;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = (e >>= 1) ? base * base : base;
    }
    return acc;
}

enum class MapClass { identity, parabolic, elliptic, loxodromic };

inline const char* to_string(MapClass c) {
    switch (c) {
        case MapClass::identity: return "identity";
        case MapClass::parabolic: return "parabolic";
        case MapClass::elliptic: return "elliptic";
        default: return "loxodromic";
    }
}

struct Classification {
    MapClass cls = MapClass::identity;
    Complex multiplier{1, 0};          // |multiplier| > 1 for loxodromic
    double translation_length = 0.0;   // log|multiplier|
    double rotation_angle = 0.0;       // arg multiplier
};

inline Classification classify(const MoebiusMap& m, double eps_par = cal::kParabolicTol) {
    Classification out;
    if (proj_equal(m, MoebiusMap::identity())) {
        out.cls = MapClass::identity;
        return out;
    }
    Complex t2 = m.trace_sq();
    if (std::abs(t2 - 4.0) < eps_par) {
        out.cls = MapClass::parabolic;
        return out;
    }
    Complex tr = m.trace();
    Complex disc = std::sqrt(t2 - 4.0);
    Complex mu1 = (tr + disc) / 2.0;
    Complex mu2 = (tr - disc) / 2.0;
    Complex mu = std::abs(mu1) >= std::abs(mu2) ? mu1 : mu2;
    out.multiplier = mu * mu;
    out.translation_length = std::log(std::abs(out.multiplier));
    out.rotation_angle = std::arg(out.multiplier);
    if (std::abs(t2.imag()) < eps_par && t2.real() >= 0.0 && t2.real() < 4.0) {
        out.cls = MapClass::elliptic;
        out.translation_length = 0.0;
    } else {
        out.cls = MapClass::loxodromic;
    }
    return out;
}

struct FixedPoints {
    BoundaryPoint attracting;
    std::optional<BoundaryPoint> repelling;
    bool labeled = true;  // false for elliptic: the two points are unordered
};

inline FixedPoints fixed_points(const MoebiusMap& m, double eps_par = cal::kParabolicTol) {
    Classification cls = classify(m, eps_par);
    if (cls.cls == MapClass::identity)
        throw std::invalid_argument("fixed_points: identity has no isolated fixed points");

    FixedPoints out;
    out.labeled = cls.cls != MapClass::elliptic;

    if (std::abs(m.c) < 1e-15) {
        // upper triangular: infinity is fixed, eigenvalues a and d
        if (cls.cls == MapClass::parabolic || std::abs(m.d - m.a) < 1e-15) {
            out.attracting = BoundaryPoint::infinity();
            return out;
        }
        BoundaryPoint finite(m.b / (m.d - m.a));
        if (std::abs(m.a) > std::abs(m.d)) {
            out.attracting = BoundaryPoint::infinity();
            out.repelling = finite;
        } else {
            out.attracting = finite;
            out.repelling = BoundaryPoint::infinity();
        }
        return out;
    }

    // roots of c z^2 + (d-a) z - b = 0; discriminant equals tr^2 - 4
    Complex disc = std::sqrt(m.trace_sq() - 4.0);
    if (cls.cls == MapClass::parabolic) {
        out.attracting = BoundaryPoint((m.a - m.d) / (2.0 * m.c));
        return out;
    }
    Complex B = m.d - m.a;
    Complex r1 = (-B + disc) / (2.0 * m.c);
    Complex r2 = (-B - disc) / (2.0 * m.c);
    // keep the numerically better root, recover the mate from the product -b/c
    if (std::abs(-B + disc) < std::abs(-B - disc)) std::swap(r1, r2);
    if (std::abs(r1) > 1e-100) r2 = (-m.b / m.c) / r1;

    // attracting fixed point carries eigenvalue |c z + d| > 1
    double mu1 = std::abs(m.c * r1 + m.d);
    BoundaryPoint p1(r1), p2(r2);
    if (mu1 >= 1.0) {
        out.attracting = p1;
        out.repelling = p2;
    } else {
        out.attracting = p2;
        out.repelling = p1;
    }
    return out;
}

inline BoundaryPoint act_boundary(const MoebiusMap& m, const BoundaryPoint& p) {
    if (p.inf) {
        if (std::abs(m.c) <= 1e-13 * std::abs(m.a)) return BoundaryPoint::infinity();
        return BoundaryPoint(m.a / m.c);
    }
    Complex w = m.c * p.z + m.d;
    // the cancellation c z + d = 0 rarely lands on exact zero after
    // renormalization; decide infinity relative to the term sizes
    if (std::abs(w) <= 1e-13 * (std::abs(m.c * p.z) + std::abs(m.d)))
        return BoundaryPoint::infinity();
    return BoundaryPoint((m.a * p.z + m.b) / w);
}

// Poincare extension to upper half-space
inline H3Point act_h3(const MoebiusMap& m, const H3Point& p) {
    Complex w = m.c * p.z + m.d;
    double denom = std::norm(w) + std::norm(m.c) * p.t * p.t;
    Complex z = ((m.a * p.z + m.b) * std::conj(w) + m.a * std::conj(m.c) * p.t * p.t) / denom;
    return H3Point(z, p.t / denom);
}

// isometric circle |cz + d| = 1 of the map itself
inline std::pair<Complex, double> isometric_circle(const MoebiusMap& m) {
    if (std::abs(m.c) < 1e-15)
        throw std::invalid_argument("isometric_circle: map fixes infinity; no isometric circle");
    return {-m.d / m.c, 1.0 / std::abs(m.c)};
}

// the Moebius map sending p -> 0, q -> infinity
inline MoebiusMap map_to_zero_inf(const BoundaryPoint& p, const BoundaryPoint& q) {
    if (chordal_dist(p, q) < 1e-14)
        throw std::invalid_argument("map_to_zero_inf: endpoints coincide");
    if (p.inf) return MoebiusMap(Complex(0, 0), Complex(1, 0), Complex(1, 0), -q.z);
    if (q.inf) return MoebiusMap(Complex(1, 0), -p.z, Complex(0, 0), Complex(1, 0));
    return MoebiusMap(Complex(1, 0), -p.z, Complex(1, 0), -q.z);
}

// boundary endpoints of the geodesic through two interior points, oriented
// from p to q
inline std::pair<BoundaryPoint, BoundaryPoint> geodesic_endpoints_through(const H3Point& p,
                                                                          const H3Point& q) {
    Complex dz = q.z - p.z;
    double len = std::abs(dz);
    if (len < 1e-14) {
        // vertical line
        if (q.t > p.t) return {BoundaryPoint(p.z), BoundaryPoint::infinity()};
        return {BoundaryPoint::infinity(), BoundaryPoint(p.z)};
    }
    Complex u = dz / len;
    // center c = p.z + s*u on the chord line
    double s = (std::norm(q.z) + q.t * q.t - std::norm(p.z) - p.t * p.t -
                2.0 * (std::conj(p.z) * dz).real()) /
               (2.0 * len);
    Complex center = p.z + s * u;
    double radius = std::sqrt(std::norm(p.z - center) + p.t * p.t);
    double xp = ((p.z - center) * std::conj(u)).real();
    double xq = ((q.z - center) * std::conj(u)).real();
    BoundaryPoint plusEnd(center + radius * u), minusEnd(center - radius * u);
    if (xq > xp) return {minusEnd, plusEnd};
    return {plusEnd, minusEnd};
}

}  // namespace kleinlab
