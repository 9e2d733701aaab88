#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kleinlab/ctmap.hpp"
#include "kleinlab/families.hpp"
#include "kleinlab/hypgeo.hpp"
#include "kleinlab/moebius.hpp"
#include "kleinlab/rng.hpp"

namespace kleinlab {

// Self-contained property suites behind the command line.  Each check either
// passes or contributes a witness line with the offending parameters.  The
// fault hook exists for meta-testing the harness: scaling a computed distance
// must make the suites fail loudly.
struct FaultInjection {
    double dist_scale = 1.0;
};

struct VerifyReport {
    std::string suite;
    int checks = 0;
    std::vector<std::string> witnesses;
    std::vector<std::string> warnings;
    bool passed() const { return witnesses.empty(); }
};

namespace verify_detail {

inline MoebiusMap random_map(Rng& rng) {
    while (true) {
        Complex a = rng.cnormal(), b = rng.cnormal(), c = rng.cnormal(), d = rng.cnormal();
        if (std::abs(a * d - b * c) > 1e-3) return MoebiusMap(a, b, c, d);
    }
}

inline H3Point random_point(Rng& rng) { return H3Point(rng.cnormal(), std::exp(rng.normal())); }

inline MoebiusMap loxodromic_at(Rng& rng, double ell, double theta, double r) {
    Complex mu = std::exp(Complex(ell, theta) / 2.0);
    MoebiusMap diag(mu, Complex(0, 0), Complex(0, 0), 1.0 / mu);
    double ang = rng.uniform(0, 2 * M_PI);
    MoebiusMap push(std::cosh(r / 2), std::sinh(r / 2) * std::exp(Complex(0, ang)),
                    std::sinh(r / 2) * std::exp(Complex(0, -ang)), std::cosh(r / 2));
    return push * diag * push.inverse();
}

struct SlopeFit {
    double slope = 0;
    int count = 0;
    void add(double x, double y) { sx += x; sy += y; sxx += x * x; sxy += x * y; ++count; }
    double value() const { return (count * sxy - sx * sy) / (count * sxx - sx * sx); }

private:
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
};

}  // namespace verify_detail

inline VerifyReport verify_moebius(uint64_t seed, int trials, const FaultInjection& fault = {}) {
    using namespace verify_detail;
    VerifyReport report;
    report.suite = "moebius";
    if (trials == 0) {
        report.warnings.push_back("trials = 0: vacuous pass");
        return report;
    }
    Rng rng(seed);
    const H3Point O = base_point();

    // isometry invariance and det preservation
    MoebiusMap acc;
    for (int i = 0; i < trials; ++i) {
        MoebiusMap m = random_map(rng);
        H3Point p = random_point(rng), q = random_point(rng);
        double before = dist_h3(p, q) * fault.dist_scale;
        double after = dist_h3(act_h3(m, p), act_h3(m, q));
        ++report.checks;
        if (std::abs(before - after) > 1e-10 * (1.0 + before))
            report.witnesses.push_back("isometry violated: delta " +
                                       fmt_double(std::abs(before - after)));
        acc = acc * m;
        if (acc.max_abs_entry() > 30) acc = MoebiusMap::identity();
        ++report.checks;
        if (std::abs(acc.det() - Complex(1, 0)) > 1e-12)
            report.witnesses.push_back("det drift " + fmt_double(std::abs(acc.det() - 1.0)));
    }

    // conjugation invariance of the classification
    for (int i = 0; i < trials / 2; ++i) {
        MoebiusMap m = random_map(rng), n = random_map(rng);
        Classification base = classify(m);
        Classification conj = classify(n * m * n.inverse());
        ++report.checks;
        if (base.cls != conj.cls)
            report.witnesses.push_back(std::string("conjugation changed class: ") +
                                       to_string(base.cls) + " -> " + to_string(conj.cls));
        else if (base.cls == MapClass::loxodromic &&
                 std::abs(base.multiplier - conj.multiplier) >
                     1e-9 * (1.0 + std::abs(base.multiplier)))
            report.witnesses.push_back("conjugation moved multiplier by " +
                                       fmt_double(std::abs(base.multiplier - conj.multiplier)));
    }

    // fixed points stay fixed
    for (int i = 0; i < trials / 2; ++i) {
        MoebiusMap m = random_map(rng);
        if (classify(m).cls != MapClass::loxodromic) continue;
        FixedPoints fp = fixed_points(m);
        ++report.checks;
        if (chordal_dist(act_boundary(m, fp.attracting), fp.attracting) > 1e-9)
            report.witnesses.push_back("attracting point moved under its own map");
    }

    // orbit-to-fixed-point decay exponent
    SlopeFit fit;
    Rng rngSlope(seed ^ 0xa5a5);
    for (int i = 0; i < std::max(trials, 600); ++i) {
        double target = rngSlope.uniform(4.0, 16.0);
        double ell = rngSlope.uniform(0.05, 0.5);
        double theta = rngSlope.uniform(0.0, 2 * M_PI);
        double s2 = (std::cosh(target) - std::cosh(ell)) / (std::cosh(ell) - std::cos(theta));
        if (!(s2 > 0)) continue;
        MoebiusMap a = loxodromic_at(rngSlope, ell, theta, std::asinh(std::sqrt(s2)));
        double R = dist_h3(O, act_h3(a, O));
        if (R < 4.0 || R > 16.0) continue;
        BallPoint img = ball_from_h3(act_h3(a, O));
        SpherePoint fp = boundary_to_sphere(fixed_points(a).attracting);
        double dE = std::sqrt((img.x - fp.x) * (img.x - fp.x) + (img.y - fp.y) * (img.y - fp.y) +
                              (img.u - fp.w) * (img.u - fp.w)) *
                    fault.dist_scale;
        if (dE <= 0) continue;
        fit.add(R, std::log(dE));
    }
    ++report.checks;
    if (fit.count < 400)
        report.warnings.push_back("orbit decay fit undersampled");
    else if (fit.value() < -0.55 || fit.value() > -0.45)
        report.witnesses.push_back("orbit->fixed-point decay slope " + fmt_double(fit.value()) +
                                   " outside [-0.55, -0.45]");
    return report;
}

inline VerifyReport verify_hypgeo(uint64_t seed, int trials, const FaultInjection& fault = {}) {
    using namespace verify_detail;
    VerifyReport report;
    report.suite = "hypgeo";
    if (trials == 0) {
        report.warnings.push_back("trials = 0: vacuous pass");
        return report;
    }
    Rng rng(seed);
    const H3Point O = base_point();

    // horosphere chord identity l = 2 sinh(d/2)
    for (int i = 0; i < trials; ++i) {
        Horoball ball(BoundaryPoint(rng.cnormal()), std::exp(rng.normal()));
        MoebiusMap toInf = map_base_to_inf(ball.base);
        double s = transform(toInf, ball).size;
        H3Point a = act_h3(toInf.inverse(), H3Point(rng.cnormal() * 3.0, s));
        H3Point b = act_h3(toInf.inverse(), H3Point(rng.cnormal() * 3.0, s));
        double d = dist_h3(a, b);
        if (d < 0.5) continue;
        double len = horoball_surface_dist(ball, a, b) * fault.dist_scale;
        ++report.checks;
        if (std::abs(len - 2.0 * std::sinh(d / 2.0)) > 1e-10 * len)
            report.witnesses.push_back("horosphere chord identity off by " +
                                       fmt_double(std::abs(len - 2.0 * std::sinh(d / 2.0)) / len) +
                                       " relative at d " + fmt_double(d));
    }

    // far-chord decay exponent
    SlopeFit fit;
    Rng rngSlope(seed ^ 0x7777);
    for (int i = 0; i < std::max(trials, 1500); ++i) {
        double R = rngSlope.uniform(3.0, 12.0);
        double ang = rngSlope.uniform(0, 2 * M_PI);
        MoebiusMap push(std::cosh(R / 2), std::sinh(R / 2) * std::exp(Complex(0, ang)),
                        std::sinh(R / 2) * std::exp(Complex(0, -ang)), std::cosh(R / 2));
        H3Point x = act_h3(push, H3Point(Complex(0, 0), std::exp(rngSlope.uniform(0.5, 3.0))));
        H3Point y = act_h3(push, H3Point(Complex(0, 0), std::exp(-rngSlope.uniform(0.5, 3.0))));
        if (point_to_segment(O, x, y) < R - 1e-6) continue;
        BallPoint bx = ball_from_h3(x), by = ball_from_h3(y);
        double dE = std::sqrt((bx.x - by.x) * (bx.x - by.x) + (bx.y - by.y) * (bx.y - by.y) +
                              (bx.u - by.u) * (bx.u - by.u)) *
                    fault.dist_scale;
        fit.add(R, std::log(dE));
    }
    ++report.checks;
    if (fit.count < 800)
        report.warnings.push_back("far-chord fit undersampled");
    else if (fit.value() < -1.1 || fit.value() > -0.9)
        report.witnesses.push_back("far-chord decay slope " + fmt_double(fit.value()) +
                                   " outside [-1.1, -0.9]");

    // right-triangle identity at the ball centre
    for (int i = 0; i < trials / 4; ++i) {
        double b = rng.uniform(0.3, 5.0), a = rng.uniform(0.1, 4.0);
        H3Point P(Complex(0, 0), std::exp(b));
        double phi = std::asin(std::tanh(a));
        double dir = rng.uniform(0, 2 * M_PI);
        H3Point X(std::exp(b) * std::sin(phi) * std::exp(Complex(0, dir)),
                  std::exp(b) * std::cos(phi));
        BallPoint bp = ball_from_h3(P), bx = ball_from_h3(X);
        double dot = bp.x * bx.x + bp.y * bx.y + bp.u * bx.u;
        double theta = std::acos(dot / (std::sqrt(bp.norm2()) * std::sqrt(bx.norm2())));
        ++report.checks;
        if (std::abs(std::tan(theta) - fault.dist_scale * std::tanh(a) / std::sinh(b)) > 1e-9)
            report.witnesses.push_back("right-triangle identity off at a " + fmt_double(a) +
                                       " b " + fmt_double(b));
    }

    // chord-vs-ball bounds with the frozen constants
    for (int i = 0; i < trials; ++i) {
        Horoball h(BoundaryPoint::infinity(), 1.0);
        H3Point o(rng.cnormal() * 0.5, std::exp(-rng.uniform(0.0, 6.0)));
        auto sample = [&] {
            double angp = rng.uniform(0, 2 * M_PI);
            double rad = std::exp(rng.uniform(std::log(1e-2), std::log(500.0)));
            return H3Point(o.z + rad * std::exp(Complex(0, angp)), 1.0);
        };
        H3Point p1 = sample(), p2 = sample();
        if (std::min(dist_h3(o, p1), dist_h3(o, p2)) < 4.0) continue;
        PenetrationResult r = horoball_penetration_check(h, o, p1, p2);
        ++report.checks;
        if (r.min_dist_on_segment * fault.dist_scale < r.bound)
            report.witnesses.push_back("horoball chord bound violated: min " +
                                       fmt_double(r.min_dist_on_segment) + " bound " +
                                       fmt_double(r.bound));
    }
    for (int i = 0; i < trials; ++i) {
        double R = rng.uniform(0.5, 4.0);
        Tube t(Geodesic(BoundaryPoint(0, 0), BoundaryPoint::infinity()), R);
        double ro = R + rng.uniform(0.0, 6.0);
        H3Point o(Complex(std::tanh(ro), 0), 1.0 / std::cosh(ro));
        auto sample = [&] {
            return cone_point(R, std::exp(rng.uniform(-8.0, 8.0)), rng.uniform(-M_PI, M_PI));
        };
        H3Point p1 = sample(), p2 = sample();
        if (std::min(dist_h3(o, p1), dist_h3(o, p2)) < 4.0) continue;
        try {
            TubePenetrationResult r = tube_penetration_check(t, o, p1, p2);
            ++report.checks;
            if (r.min_dist_on_segment * fault.dist_scale < r.bound)
                report.witnesses.push_back("tube chord bound violated: min " +
                                           fmt_double(r.min_dist_on_segment) + " bound " +
                                           fmt_double(r.bound));
        } catch (const std::invalid_argument&) {
        }
    }

    // tube chord-length window
    for (int i = 0; i < trials; ++i) {
        double R = rng.uniform(0.5, 3.0);
        Tube t(Geodesic(BoundaryPoint(0, 0), BoundaryPoint::infinity()), R);
        double u1 = rng.uniform(-3.0, 3.0);
        H3Point p1 = cone_point(R, std::exp(u1), rng.uniform(-M_PI, M_PI));
        H3Point p2 = cone_point(R, std::exp(u1 + rng.uniform(0.0, 2.0)),
                                rng.uniform(-M_PI, M_PI));
        double d = dist_h3(p1, p2);
        if (d < 0.5) continue;
        double ratio = tube_surface_length(t, p1, p2).length * fault.dist_scale /
                       std::exp(d / 2.0);
        ++report.checks;
        if (ratio <= cal::kTubeChordWindowLo || ratio >= cal::kTubeChordWindowHi)
            report.witnesses.push_back("tube chord ratio " + fmt_double(ratio) +
                                       " left the frozen window");
    }
    return report;
}

inline VerifyReport verify_floyd(uint64_t seed, int trials, const FaultInjection& fault = {}) {
    VerifyReport report;
    report.suite = "floyd";
    if (trials == 0) {
        report.warnings.push_back("trials = 0: vacuous pass");
        return report;
    }
    (void)seed;
    const H3Point O = base_point();

    Representation schottky = make_schottky_standard(3.0, 1.0);
    FloydFit loDepth = floyd_fit(schottky, 6);
    FloydFit hiDepth = floyd_fit(schottky, 8);
    ++report.checks;
    if (!hiDepth.b || *hiDepth.b <= 0)
        report.witnesses.push_back("linear lower constant missing or nonpositive");
    ++report.checks;
    if (std::abs(*hiDepth.b * fault.dist_scale - *loDepth.b) > 0.1 * *loDepth.b ||
        std::abs(hiDepth.a * fault.dist_scale - loDepth.a) > 0.1 * loDepth.a)
        report.witnesses.push_back("escape window drifts between depths 6 and 8");

    Representation torus = make_punctured_torus(Complex(3, 0), Complex(3, 0));
    MoebiusMap K = torus.eval(word_from_string("abAB"));
    MoebiusMap powK;
    double lo = INFINITY, hi = -INFINITY;
    int maxJ = std::min(1000, std::max(100, trials));
    for (int j = 1; j <= maxJ; ++j) {
        powK = powK * K;
        if (j < 10) continue;
        double resid = dist_h3(O, act_h3(powK, O)) * fault.dist_scale -
                       2.0 * std::log(static_cast<double>(j));
        lo = std::min(lo, resid);
        hi = std::max(hi, resid);
    }
    ++report.checks;
    if (hi - lo >= 3.0)
        report.witnesses.push_back("parabolic power residual window " + fmt_double(hi - lo) +
                                   " exceeds 3");
    return report;
}

inline std::vector<VerifyReport> verify_all(uint64_t seed, int trials,
                                            const FaultInjection& fault = {}) {
    return {verify_moebius(seed, trials, fault), verify_hypgeo(seed, trials, fault),
            verify_floyd(seed, trials, fault)};
}

}  // namespace kleinlab
