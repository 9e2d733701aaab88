#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kleinlab/hypgeo.hpp"
#include "kleinlab/moebius.hpp"
#include "kleinlab/words.hpp"

namespace kleinlab {

struct CertificateError : std::runtime_error {
    Complex witness;
    CertificateError(const std::string& msg, Complex w) : std::runtime_error(msg), witness(w) {}
};

struct Disk {
    Complex center;
    double radius;
};

struct PingPongCertificate {
    std::vector<std::pair<Disk, Disk>> pairs;
    int boundary_samples = 64;
    double slack = 1e-9;
};

enum class Evidence { none, ping_pong, jorgensen_only };

// ---------------------------------------------------------------------------
// Marked representations
// ---------------------------------------------------------------------------

struct Representation {
    Alphabet alphabet;
    std::vector<MoebiusMap> gens;   // one per generator
    std::vector<MoebiusMap> invs;
    std::vector<Word> parabolic_words;  // designated parabolic elements (e.g. the commutator)
    bool convex_cocompact = false;
    Evidence evidence = Evidence::none;
    std::optional<PingPongCertificate> certificate;
    std::string family;
    std::vector<std::pair<std::string, std::string>> metadata;

    int rank() const { return alphabet.rank; }

    const MoebiusMap& gen(Letter l) const {
        int idx = std::abs(static_cast<int>(l)) - 1;
        return l > 0 ? gens[static_cast<size_t>(idx)] : invs[static_cast<size_t>(idx)];
    }

    MoebiusMap eval(const Word& w) const {
        MoebiusMap m;
        for (Letter l : w.letters) m = m * gen(l);
        return m;
    }

    H3Point orbit(const Word& w) const { return act_h3(eval(w), base_point()); }

    bool is_designated_parabolic(const Word& w) const {
        for (const auto& p : parabolic_words)
            if (w == p || w == kleinlab::inverse(p)) return true;
        int idx = w.size() == 1 ? std::abs(static_cast<int>(w.letters[0])) - 1 : -1;
        return idx >= 0 && alphabet.is_parabolic_gen(idx);
    }
};

// DFS over the ball of radius maxLen carrying the matrix product along;
// visit(letters, map) runs once per nonempty reduced word
template <class F>
void scan_orbit(const Representation& rep, int maxLen, F&& visit) {
    std::vector<Letter> stack;
    std::vector<MoebiusMap> mats(static_cast<size_t>(maxLen) + 1);
    std::vector<int> choice(static_cast<size_t>(maxLen) + 1, 0);
    int depth = 0;
    const int nLetters = 2 * rep.rank();
    while (true) {
        if (depth < maxLen && choice[static_cast<size_t>(depth)] < nLetters) {
            Letter next = letter_from_rank(choice[static_cast<size_t>(depth)]++);
            if (!stack.empty() && stack.back() == letter_inverse(next)) continue;
            mats[static_cast<size_t>(depth) + 1] = mats[static_cast<size_t>(depth)] * rep.gen(next);
            stack.push_back(next);
            ++depth;
            choice[static_cast<size_t>(depth)] = 0;
            visit(std::span<const Letter>(stack.data(), stack.size()),
                  mats[static_cast<size_t>(depth)]);
        } else {
            if (depth == 0) break;
            stack.pop_back();
            --depth;
        }
    }
}

inline BoundaryWordPath standard_path_to(const Representation& rep, const BoundaryPoint& xi,
                                         int depth) {
    return standard_path_to([&](Letter l) -> const MoebiusMap& { return rep.gen(l); },
                            rep.rank(), xi, depth);
}

// ---------------------------------------------------------------------------
// Schottky groups
// ---------------------------------------------------------------------------

// the map sending the exterior of d1 onto the interior of d2 with the fixed
// normalization z -> c2 + r1 r2 / (z - c1)
inline MoebiusMap schottky_pair_map(const Disk& d1, const Disk& d2) {
    return MoebiusMap(d2.center, d1.radius * d2.radius - d1.center * d2.center,
                      Complex(1, 0), -d1.center);
}

inline void verify_ping_pong(const std::vector<std::pair<Disk, Disk>>& pairs,
                             const std::vector<MoebiusMap>& maps, int samples = 64,
                             double slack = 1e-9) {
    std::vector<Disk> all;
    for (const auto& [d1, d2] : pairs) {
        all.push_back(d1);
        all.push_back(d2);
    }
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i + 1; j < all.size(); ++j) {
            double gap = std::abs(all[i].center - all[j].center) - all[i].radius - all[j].radius;
            if (gap <= 0.0)
                throw CertificateError("ping-pong: disks overlap", all[i].center);
        }
    for (size_t k = 0; k < pairs.size(); ++k) {
        const auto& [d1, d2] = pairs[k];
        const MoebiusMap& m = maps[k];
        for (int s = 0; s < samples; ++s) {
            double ang = 2.0 * M_PI * s / samples;
            Complex z = d1.center + d1.radius * std::exp(Complex(0, ang));
            BoundaryPoint img = act_boundary(m, BoundaryPoint(z));
            if (img.inf || std::abs(std::abs(img.z - d2.center) - d2.radius) > slack)
                throw CertificateError("ping-pong: mapping condition fails on the boundary", z);
        }
        BoundaryPoint far = act_boundary(m, BoundaryPoint::infinity());
        if (far.inf || std::abs(far.z - d2.center) >= d2.radius - slack)
            throw CertificateError("ping-pong: exterior does not land inside the partner disk",
                                   d1.center);
    }
}

inline Representation make_schottky(const std::vector<std::pair<Disk, Disk>>& pairs,
                                    const std::vector<MoebiusMap>& maps) {
    if (pairs.size() != maps.size() || pairs.empty())
        throw std::invalid_argument("make_schottky: need one map per disk pair");
    verify_ping_pong(pairs, maps);
    Representation rep;
    rep.alphabet.rank = static_cast<int>(pairs.size());
    rep.gens = maps;
    for (const auto& m : maps) rep.invs.push_back(m.inverse());
    rep.convex_cocompact = true;
    rep.evidence = Evidence::ping_pong;
    rep.certificate = PingPongCertificate{pairs, 64, 1e-9};
    rep.family = "schottky";
    return rep;
}

// the standard two-generator example: disks of the given radius at +-c (paired
// by a) and +-ci (paired by b)
inline Representation make_schottky_standard(double c, double radius) {
    Disk a1{Complex(c, 0), radius}, a2{Complex(-c, 0), radius};
    Disk b1{Complex(0, c), radius}, b2{Complex(0, -c), radius};
    std::vector<std::pair<Disk, Disk>> pairs{{a1, a2}, {b1, b2}};
    std::vector<MoebiusMap> maps{schottky_pair_map(a1, a2), schottky_pair_map(b1, b2)};
    Representation rep = make_schottky(pairs, maps);
    rep.metadata.push_back({"center", std::to_string(c)});
    rep.metadata.push_back({"radius", std::to_string(radius)});
    return rep;
}

// ---------------------------------------------------------------------------
// Once-punctured-torus groups
// ---------------------------------------------------------------------------

enum class RootChoice { smaller, larger };

inline Complex pick_root(Complex r1, Complex r2, RootChoice choice) {
    bool firstSmaller = std::abs(r1) < std::abs(r2) ||
                        (std::abs(r1) == std::abs(r2) &&
                         (r1.real() < r2.real() ||
                          (r1.real() == r2.real() && r1.imag() < r2.imag())));
    return (choice == RootChoice::smaller) == firstSmaller ? r1 : r2;
}

// marked group on the trace variety x^2 + y^2 + z^2 = xyz, commutator parabolic
inline Representation make_punctured_torus(Complex x, Complex y,
                                           RootChoice choice = RootChoice::smaller) {
    Complex disc = std::sqrt(x * x * y * y - 4.0 * (x * x + y * y));
    Complex z = pick_root((x * y + disc) / 2.0, (x * y - disc) / 2.0, choice);
    Complex zdisc = std::sqrt(z * z - 4.0);
    Complex zeta = pick_root((-z + zdisc) / 2.0, (-z - zdisc) / 2.0, RootChoice::smaller);

    MoebiusMap A(x, Complex(1, 0), Complex(-1, 0), Complex(0, 0));
    MoebiusMap B(Complex(0, 0), zeta, -1.0 / zeta, y);

    auto near = [](Complex u, Complex v) { return std::abs(u - v) < 1e-9; };
    MoebiusMap AB = A * B;
    MoebiusMap comm = A * B * A.inverse() * B.inverse();
    bool ok = (near(A.trace(), x) || near(A.trace(), -x)) &&
              (near(B.trace(), y) || near(B.trace(), -y)) &&
              (near(AB.trace(), z) || near(AB.trace(), -z)) &&
              (near(comm.trace(), Complex(-2, 0)) || near(comm.trace(), Complex(2, 0)));
    if (!ok) throw std::logic_error("make_punctured_torus: trace identities failed");

    Representation rep;
    rep.alphabet.rank = 2;
    rep.gens = {A, B};
    rep.invs = {A.inverse(), B.inverse()};
    rep.parabolic_words = {word_from_string("abAB")};
    rep.convex_cocompact = false;
    rep.evidence = Evidence::jorgensen_only;
    rep.family = "punctured-torus";
    double jorgensen = std::abs(A.trace_sq() - 4.0) + std::abs(comm.trace() - 2.0);
    rep.metadata.push_back({"jorgensen", std::to_string(jorgensen)});
    if (jorgensen < 1.0 - 1e-9)
        rep.metadata.push_back({"warning", "likely non-discrete"});
    return rep;
}

// ---------------------------------------------------------------------------
// Jorgensen filter
// ---------------------------------------------------------------------------

struct JorgensenResult {
    enum class Outcome { pass, fail, elementary } outcome;
    double value = 0;
};

inline JorgensenResult jorgensen_filter(const MoebiusMap& a, const MoebiusMap& b) {
    MoebiusMap comm = a * b * a.inverse() * b.inverse();
    JorgensenResult out;
    out.value = std::abs(a.trace_sq() - 4.0) + std::abs(comm.trace() - 2.0);
    if (proj_equal(comm, MoebiusMap::identity(), 1e-9) ||
        proj_equal(a, MoebiusMap::identity(), 1e-6) ||
        proj_equal(b, MoebiusMap::identity(), 1e-6)) {
        out.outcome = JorgensenResult::Outcome::elementary;
        return out;
    }
    out.outcome = out.value < 1.0 - 1e-9 ? JorgensenResult::Outcome::fail
                                         : JorgensenResult::Outcome::pass;
    return out;
}

// ---------------------------------------------------------------------------
// Representation sequences
// ---------------------------------------------------------------------------

struct RepSequence {
    std::vector<Representation> steps;  // indices 1..N
    Representation limit;
    enum class Mode { strong_claimed, algebraic_only_claimed } mode = Mode::strong_claimed;
    std::string family;

    const Representation& source() const { return steps.front(); }
    size_t count() const { return steps.size(); }
};

// per-index algebraic residual: max over generators of the projective distance
inline std::vector<double> algebraic_residuals(const RepSequence& seq) {
    std::vector<double> out;
    out.reserve(seq.steps.size());
    for (const auto& rep : seq.steps) {
        double r = 0;
        for (size_t i = 0; i < rep.gens.size(); ++i)
            r = std::max(r, proj_dist(rep.gens[i], seq.limit.gens[i]));
        out.push_back(r);
    }
    return out;
}

// Schottky family with disk centers sliding from +-c0 to +-c1; the limit is
// the endpoint, every step is certificate-checked, and step n sits at
// parameter n/(steps+1) so the last step stays strictly short of the limit.
inline RepSequence make_schottky_interpolation(double c0, double c1, double radius, int steps) {
    RepSequence seq;
    seq.family = "schottky-interpolation";
    seq.mode = RepSequence::Mode::strong_claimed;
    for (int n = 1; n <= steps; ++n) {
        double s = static_cast<double>(n) / (steps + 1);
        double c = c0 + s * (c1 - c0);
        try {
            seq.steps.push_back(make_schottky_standard(c, radius));
        } catch (const CertificateError& e) {
            throw std::runtime_error("schottky interpolation fails at index " +
                                     std::to_string(n) + ": " + e.what());
        }
        seq.steps.back().metadata.push_back({"index", std::to_string(n)});
    }
    seq.limit = make_schottky_standard(c1, radius);
    return seq;
}

inline RepSequence make_constant_sequence(const Representation& rep, int steps) {
    RepSequence seq;
    seq.family = "constant";
    seq.mode = RepSequence::Mode::strong_claimed;
    seq.steps.assign(static_cast<size_t>(steps), rep);
    seq.limit = rep;
    return seq;
}

inline RepSequence make_torus_interpolation(Complex x0, Complex y0, Complex x1, Complex y1,
                                            int steps, RootChoice choice = RootChoice::smaller) {
    RepSequence seq;
    seq.family = "torus-interpolation";
    seq.mode = RepSequence::Mode::strong_claimed;
    for (int n = 1; n <= steps; ++n) {
        double s = static_cast<double>(n) / (steps + 1);
        seq.steps.push_back(make_punctured_torus(x0 + s * (x1 - x0), y0 + s * (y1 - y0), choice));
        seq.steps.back().metadata.push_back({"index", std::to_string(n)});
    }
    seq.limit = make_punctured_torus(x1, y1, choice);
    return seq;
}

// ---------------------------------------------------------------------------
// The divergent cyclic family
// ---------------------------------------------------------------------------
//
// A single loxodromic A_n with fixed points +-eps_n, multiplier exponent
// ell_n + 2 pi i / m_n.  With eps_n * m_n held at 1 and ell_n = sigma * eps_n
// / m_n, A_n tends to a parabolic P fixing 0 while the powers A_n^{m_n} tend
// to an independent parabolic Q fixing 0, so <P, Q> is a rank-two parabolic
// group and d(O, A_n^{m_n} O) stays bounded while the word length m_n blows up.

struct CyclicSchedules {
    double sigma = 1.0;
    std::function<double(int)> eps = [](int n) { return 1.0 / (static_cast<double>(n) * n); };
    std::function<long(int)> m = [](int n) { return static_cast<long>(n) * n; };
    std::function<double(int)> ell;  // defaults to sigma * eps(n) / m(n)

    double ell_at(int n) const {
        if (ell) return ell(n);
        return sigma * eps(n) / static_cast<double>(m(n));
    }
};

inline void validate_schedules(const CyclicSchedules& s, int count) {
    if (count < 2) throw std::invalid_argument("cyclic family: need at least two indices");
    if (!(s.eps(count) < s.eps(1)) || !(s.eps(count) < 0.5))
        throw std::invalid_argument("cyclic family: eps_n must decrease toward 0");
    for (int n = 1; n <= count; ++n) {
        double ml = static_cast<double>(s.m(n)) * s.ell_at(n);
        if (!(ml < 10.0))
            throw std::invalid_argument("cyclic family: m_n * ell_n must stay bounded");
        if (!(s.ell_at(n) > 0))
            throw std::invalid_argument("cyclic family: ell_n must be positive");
    }
}

struct CyclicElement {
    MoebiusMap map;
    long power;  // the designated exponent m_n
};

inline CyclicElement cyclic_element(const CyclicSchedules& s, int n) {
    double eps = s.eps(n);
    long m = s.m(n);
    double ell = s.ell_at(n);
    double theta = 2.0 * M_PI / static_cast<double>(m);
    Complex half = Complex(ell, theta) / 2.0;
    Complex ch = std::cosh(half), sh = std::sinh(half);
    // S^{-1} diag(e^{tau/2}, e^{-tau/2}) S with S sending +-eps to 0, infinity
    MoebiusMap a(ch, -eps * sh, -sh / eps, ch);
    return {a, m};
}

struct CyclicFamily {
    RepSequence seq;
    std::vector<long> powers;
    MoebiusMap limit_p;  // algebraic limit of A_n
    MoebiusMap limit_q;  // geometric-limit parabolic reached by A_n^{m_n}
    CyclicSchedules schedules;
};

inline CyclicFamily make_cyclic_family(const CyclicSchedules& s, int count) {
    validate_schedules(s, count);
    CyclicFamily fam;
    fam.schedules = s;
    fam.seq.family = "cyclic-divergent";
    fam.seq.mode = RepSequence::Mode::algebraic_only_claimed;

    auto wrap = [](const MoebiusMap& m, const char* name) {
        Representation rep;
        rep.alphabet.rank = 1;
        rep.alphabet.parabolic = {0};
        rep.gens = {m};
        rep.invs = {m.inverse()};
        rep.family = name;
        rep.evidence = Evidence::none;
        return rep;
    };
    for (int n = 1; n <= count; ++n) {
        CyclicElement e = cyclic_element(s, n);
        fam.seq.steps.push_back(wrap(e.map, "cyclic-divergent"));
        fam.seq.steps.back().metadata.push_back({"index", std::to_string(n)});
        fam.powers.push_back(e.power);
    }
    fam.limit_p = MoebiusMap(Complex(1, 0), Complex(0, 0), Complex(0, -M_PI), Complex(1, 0));
    fam.limit_q =
        MoebiusMap(Complex(-1, 0), Complex(0, 0), Complex(s.sigma / 2.0, 0), Complex(-1, 0));
    fam.seq.limit = wrap(fam.limit_p, "cyclic-divergent");
    return fam;
}

// ---------------------------------------------------------------------------
// Thin parts of a marked group
// ---------------------------------------------------------------------------

struct ThinPart {
    ThinShape shape;
    Word stabilizer;
    double margulis;
};

struct ThinPartSystem {
    std::vector<ThinPart> parts;
    double min_separation = INFINITY;  // over distinct base components
    double margulis = 0;
};

// the set {x : d(x, gx) <= eps} for a parabolic is a horoball, for a short
// loxodromic an equidistant tube; cosh d(x,gx) = cosh l + (cosh l - cos
// theta) sinh^2 r gives the radius
inline ThinShape thin_part_of(const MoebiusMap& g, double eps, bool forceParabolic = false) {
    Classification cls = classify(g);
    if (forceParabolic || cls.cls == MapClass::parabolic) {
        FixedPoints fp = fixed_points(g);
        MoebiusMap n = map_base_to_inf(fp.attracting);
        MoebiusMap conj = n * g * n.inverse();
        // translation z -> z + b/d after normalizing to upper triangular form
        Complex shift = conj.b / conj.d;
        double size = std::abs(shift) / (2.0 * std::sinh(eps / 2.0));
        return transform(n.inverse(), Horoball(BoundaryPoint::infinity(), size));
    }
    if (cls.cls != MapClass::loxodromic)
        throw std::invalid_argument("thin_part_of: element is neither parabolic nor loxodromic");
    if (cls.translation_length >= eps)
        throw std::invalid_argument("thin_part_of: element is not short at this margulis value");
    double num = std::cosh(eps) - std::cosh(cls.translation_length);
    double den = std::cosh(cls.translation_length) - std::cos(cls.rotation_angle);
    FixedPoints fp = fixed_points(g);
    double radius = std::asinh(std::sqrt(num / den));
    return Tube(Geodesic(*fp.repelling, fp.attracting), radius);
}

inline ThinPartSystem build_thin_parts(const Representation& rep, double eps,
                                       const std::vector<Word>& stabilizers) {
    ThinPartSystem sys;
    sys.margulis = eps;
    for (const auto& w : stabilizers) {
        MoebiusMap g = rep.eval(w);
        bool force = rep.is_designated_parabolic(w);
        sys.parts.push_back({thin_part_of(g, eps, force), w, eps});
    }
    for (size_t i = 0; i < sys.parts.size(); ++i)
        for (size_t j = i + 1; j < sys.parts.size(); ++j)
            sys.min_separation = std::min(
                sys.min_separation, thinpart_distance(sys.parts[i].shape, sys.parts[j].shape));
    return sys;
}

}  // namespace kleinlab
