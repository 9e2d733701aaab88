#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kleinlab/families.hpp"
#include "kleinlab/rng.hpp"

using namespace kleinlab;

TEST_CASE("schottky certificates") {
    // disks of radius 1 at +-3 and +-3i with the standard pair maps
    Representation rep = make_schottky_standard(3.0, 1.0);
    CHECK(rep.rank() == 2);
    CHECK(rep.evidence == Evidence::ping_pong);
    CHECK(rep.convex_cocompact);

    // overlapping disks are refused
    CHECK_THROWS_WITH(make_schottky_standard(1.2, 1.0),
                      Catch::Matchers::ContainsSubstring("overlap"));
    Disk d1{Complex(0.9, 0), 1.0}, d2{Complex(-0.9, 0), 1.0};
    CHECK_THROWS_WITH(make_schottky({{d1, d2}}, {schottky_pair_map(d1, d2)}),
                      Catch::Matchers::ContainsSubstring("overlap"));

    // identity maps fail the mapping condition
    Disk a1{Complex(3, 0), 1.0}, a2{Complex(-3, 0), 1.0};
    CHECK_THROWS_WITH(make_schottky({{a1, a2}}, {MoebiusMap::identity()}),
                      Catch::Matchers::ContainsSubstring("mapping condition"));
}

TEST_CASE("schottky words act freely at desk scale") {
    Representation rep = make_schottky_standard(3.0, 1.0);
    int checked = 0;
    scan_orbit(rep, 8, [&](std::span<const Letter>, const MoebiusMap& m) {
        CHECK(proj_dist(m, MoebiusMap::identity()) > 1e-6);
        ++checked;
    });
    CHECK(checked == static_cast<int>(ball_size(2, 8)) - 1);
}

TEST_CASE("punctured torus groups") {
    // (3,3): the smaller trace root is z = 3, the larger 6
    Representation rep = make_punctured_torus(Complex(3, 0), Complex(3, 0));
    MoebiusMap A = rep.gens[0], B = rep.gens[1];
    CHECK(std::abs(A.trace() - Complex(3, 0)) < 1e-12);
    CHECK(std::abs(B.trace() - Complex(3, 0)) < 1e-12);
    MoebiusMap AB = A * B;
    CHECK(std::abs(AB.trace() - Complex(3, 0)) < 1e-9);

    // direct commutator oracle
    MoebiusMap comm = A * B * A.inverse() * B.inverse();
    CHECK(std::abs(comm.trace() + 2.0) < 1e-9);
    CHECK(classify(rep.eval(word_from_string("abAB"))).cls == MapClass::parabolic);

    // Markov identity residual
    Complex x = A.trace(), y = B.trace(), z = AB.trace();
    CHECK(std::abs(x * x + y * y + z * z - x * y * z) < 1e-9);

    // larger root: z = 6 and 9 + 9 + 36 = 54 = 3*3*6
    Representation big = make_punctured_torus(Complex(3, 0), Complex(3, 0), RootChoice::larger);
    Complex zBig = (big.gens[0] * big.gens[1]).trace();
    CHECK(std::abs(zBig - Complex(6, 0)) < 1e-9);
    CHECK(std::abs(9.0 + 9.0 + zBig * zBig - 3.0 * 3.0 * zBig) < 1e-9);

    // the commutator relation holds across the variety, complex traces included
    Representation cx = make_punctured_torus(Complex(0, 2), Complex(3, 0));
    MoebiusMap ccomm = cx.eval(word_from_string("abAB"));
    CHECK(std::abs(ccomm.trace() + 2.0) < 1e-9);

    // all real traces produce real entries, keeping the limit set on the line
    CHECK(std::abs(A.a.imag()) + std::abs(A.b.imag()) + std::abs(A.c.imag()) +
              std::abs(A.d.imag()) < 1e-12);
}

TEST_CASE("jorgensen filter") {
    Representation rep = make_punctured_torus(Complex(3, 0), Complex(3, 0));
    JorgensenResult r = jorgensen_filter(rep.gens[0], rep.gens[1]);
    CHECK(r.outcome == JorgensenResult::Outcome::pass);
    CHECK(r.value == Catch::Approx(9.0));

    // elementary pair flagged, not failed
    MoebiusMap nearId(Complex(1, 0), Complex(1e-8, 0), Complex(0, 0), Complex(1, 0));
    CHECK(jorgensen_filter(nearId, nearId).outcome == JorgensenResult::Outcome::elementary);

    // parabolic a with tr^2 - 4 = 0 against b = [[1,0],[c,1]]: the commutator
    // trace is 2 + c^2, giving value c^2 < 1 and a fail
    MoebiusMap a(Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(1, 0));
    double c = std::sqrt(0.5);
    MoebiusMap b(Complex(1, 0), Complex(0, 0), Complex(c, 0), Complex(1, 0));
    MoebiusMap comm = a * b * a.inverse() * b.inverse();
    CHECK(std::abs(comm.trace() - (2.0 + c * c)) < 1e-12);  // oracle for the construction
    JorgensenResult f = jorgensen_filter(a, b);
    CHECK(f.outcome == JorgensenResult::Outcome::fail);
    CHECK(f.value == Catch::Approx(0.5));
}

TEST_CASE("strong schottky interpolation") {
    RepSequence seq = make_schottky_interpolation(3.0, 4.0, 1.0, 32);
    CHECK(seq.count() == 32);
    for (const auto& rep : seq.steps) CHECK(rep.evidence == Evidence::ping_pong);

    // algebraic residuals decrease monotonically
    std::vector<double> res = algebraic_residuals(seq);
    for (size_t i = 1; i < res.size(); ++i) CHECK(res[i] < res[i - 1]);
    CHECK(res.back() > 0);  // the last step stays short of the limit

    // a path that would cross disk overlap reports its first bad index
    CHECK_THROWS_WITH(make_schottky_interpolation(3.0, 0.5, 1.0, 32),
                      Catch::Matchers::ContainsSubstring("index"));

    // constant sequence is trivially valid
    RepSequence cst = make_constant_sequence(make_schottky_standard(3.0, 1.0), 8);
    for (double r : algebraic_residuals(cst)) CHECK(r == 0.0);
}

TEST_CASE("divergent cyclic family limits") {
    CyclicSchedules s;
    CyclicFamily fam = make_cyclic_family(s, 16);
    CHECK(fam.seq.count() == 16);
    CHECK(fam.powers[3] == 16);

    // genuinely loxodromic while the classification threshold can resolve it
    for (int n : {2, 4, 10, 16, 30}) {
        Classification c = classify(cyclic_element(s, n).map);
        CHECK(c.cls == MapClass::loxodromic);
        CHECK(c.translation_length > 0);
    }

    // algebraic limit: A_n approaches the parabolic P, checked out to n = 10^4
    for (int n : {10, 100, 1000, 10000}) {
        CyclicElement e = cyclic_element(s, n);
        double resid = proj_dist(e.map, fam.limit_p);
        CHECK(resid < 2.0 / (static_cast<double>(n) * n));
        CHECK(std::abs(std::abs(e.map.trace()) - 2.0) < 1e-3);
    }
    CHECK(proj_dist(cyclic_element(s, 10000).map, fam.limit_p) < 1e-6);
    CHECK(classify(fam.limit_p).cls == MapClass::parabolic);

    // fixed points collide at 0
    for (int n : {10, 100, 1000}) {
        FixedPoints fp = fixed_points(cyclic_element(s, n).map);
        CHECK(chordal_dist(fp.attracting, BoundaryPoint(0, 0)) <
              2.5 / (static_cast<double>(n) * n));
    }

    // power limit: A_n^{m_n} approaches the independent parabolic Q
    for (int n : {10, 40, 100}) {
        CyclicElement e = cyclic_element(s, n);
        MoebiusMap powN = pow(e.map, static_cast<int>(e.power));
        CHECK(proj_dist(powN, fam.limit_q) < 2.0 / (static_cast<double>(n) * n));
    }
    CHECK(classify(fam.limit_q).cls == MapClass::parabolic);

    // Q is not any small power of P
    for (int j = -5; j <= 5; ++j)
        CHECK(proj_dist(fam.limit_q, pow(fam.limit_p, j)) > 0.1);

    // P and Q share the fixed point 0 and commute: a rank-two parabolic pair
    CHECK(chordal_dist(fixed_points(fam.limit_p).attracting, BoundaryPoint(0, 0)) < 1e-12);
    CHECK(chordal_dist(fixed_points(fam.limit_q).attracting, BoundaryPoint(0, 0)) < 1e-12);
    CHECK(proj_dist(fam.limit_p * fam.limit_q, fam.limit_q * fam.limit_p) < 1e-6);

    // the escape bound fails along the designated powers: d(O, A_n^{m_n} O)
    // stays bounded while the word length m_n grows
    const H3Point O = base_point();
    double qDist = dist_h3(O, act_h3(fam.limit_q, O));
    for (size_t i = 3; i < fam.seq.count(); ++i) {
        MoebiusMap powN = pow(fam.seq.steps[i].gens[0], static_cast<int>(fam.powers[i]));
        CHECK(dist_h3(O, act_h3(powN, O)) < qDist + 1.0);
    }

    // schedule validation
    CyclicSchedules bad;
    bad.eps = [](int) { return 0.7; };
    CHECK_THROWS_WITH(make_cyclic_family(bad, 8), Catch::Matchers::ContainsSubstring("eps"));
    CyclicSchedules badEll;
    badEll.ell = [](int) { return 5.0; };
    CHECK_THROWS_WITH(make_cyclic_family(badEll, 8),
                      Catch::Matchers::ContainsSubstring("bounded"));
}

TEST_CASE("thin parts of designated elements") {
    // parabolic z -> z + 1 at the margulis value 0.5: horoball at infinity
    MoebiusMap shear(Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(1, 0));
    ThinShape shape = thin_part_of(shear, 0.5);
    REQUIRE(std::holds_alternative<Horoball>(shape));
    const Horoball& h = std::get<Horoball>(shape);
    CHECK(h.base.inf);
    CHECK(h.size == Catch::Approx(1.0 / (2.0 * std::sinh(0.25))));
    // on its boundary the displacement is exactly the margulis value
    H3Point onBoundary(Complex(0, 0), h.size);
    CHECK(dist_h3(onBoundary, act_h3(shear, onBoundary)) == Catch::Approx(0.5));

    // short loxodromic: tube whose boundary displacement matches
    Complex mu = std::exp(Complex(0.05, 0.3) / 2.0);
    MoebiusMap lox(mu, Complex(0, 0), Complex(0, 0), 1.0 / mu);
    ThinShape tube = thin_part_of(lox, 0.5);
    REQUIRE(std::holds_alternative<Tube>(tube));
    double R = std::get<Tube>(tube).radius;
    H3Point onTube = cone_point(R, 1.0, 0.0);
    CHECK(dist_h3(onTube, act_h3(lox, onTube)) == Catch::Approx(0.5).epsilon(1e-6));

    // not short: refused
    MoebiusMap big(Complex(2, 0), Complex(0, 0), Complex(0, 0), Complex(0.5, 0));
    CHECK_THROWS_AS(thin_part_of(big, 0.5), std::invalid_argument);

    // a system built from the punctured-torus commutator and a conjugate of it
    Representation rep = make_punctured_torus(Complex(3, 0), Complex(3, 0));
    Word comm = word_from_string("abAB");
    Word conj = concat(concat(word_from_string("a"), comm), word_from_string("A"));
    ThinPartSystem sys = build_thin_parts(rep, 0.4, {comm, conj});
    CHECK(sys.parts.size() == 2);
    CHECK(sys.min_separation >= 0.0);
}
