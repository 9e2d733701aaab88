#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kleinlab/ctmap.hpp"
#include "kleinlab/rng.hpp"

using namespace kleinlab;

namespace {

Representation fuchsian() { return make_punctured_torus(Complex(3, 0), Complex(3, 0)); }

Representation deformed() {
    return make_punctured_torus(Complex(3.1, 0.05), Complex(3.0, -0.02));
}

std::vector<Word> hyperbolic_words(const Representation& rep, int depth, size_t count) {
    std::vector<Word> out;
    for (const Word& w : enumerate_ball(rep.rank(), depth)) {
        if (w.empty() || !cyclically_reduced(w)) continue;
        if (classify(rep.eval(w)).cls != MapClass::loxodromic) continue;
        out.push_back(w);
        if (out.size() == count) break;
    }
    return out;
}

}  // namespace

TEST_CASE("boundary map evaluation") {
    Representation src = fuchsian();
    Representation dst = deformed();

    // identity pair reproduces the input on every grid direction
    CtPair idPair{&src, &src};
    for (const Word& w : hyperbolic_words(src, 4, 12)) {
        BoundaryPoint xi = fixed_points(src.eval(w)).attracting;
        CTEvaluation ev = ct_eval(idPair, xi, make_power_path(w, 40, xi));
        CHECK(chordal_dist(ev.value, xi) < 1e-6);
    }

    // deformation pair: the image of a generator direction is the image
    // group's fixed point, independently computed
    Word a = word_from_string("a");
    BoundaryPoint xiA = fixed_points(src.eval(a)).attracting;
    CTEvaluation evA = ct_eval(dst, make_power_path(a, 60, xiA));
    CHECK(chordal_dist(evA.value, fixed_points(dst.eval(a)).attracting) < 1e-6);
    CHECK(evA.residual < 1e-6);
    CHECK(!evA.parabolic_branch);

    // designated parabolic direction short-circuits
    Word comm = word_from_string("abAB");
    BoundaryPoint xiK = fixed_points(src.eval(comm)).attracting;
    CTEvaluation evK = ct_eval(dst, make_power_path(comm, 3, xiK));
    CHECK(evK.parabolic_branch);
    CHECK(chordal_dist(evK.value, fixed_points(dst.eval(comm)).attracting) < 1e-12);

    // too-shallow paths refuse to answer and carry the spread
    Word slow = word_from_string("ab");
    BoundaryPoint xiS = fixed_points(src.eval(slow)).attracting;
    try {
        ct_eval(dst, make_power_path(slow, 1, xiS));
        FAIL("expected CtError");
    } catch (const CtError& e) {
        CHECK(e.spread > 1e-6);
    }

    // path/target mismatch is refused
    CHECK_THROWS_AS(ct_eval(idPair, xiA, make_power_path(slow, 10, xiS)),
                    std::invalid_argument);
}

TEST_CASE("equivariance residuals") {
    Representation src = fuchsian();
    Representation dst = deformed();

    std::vector<Word> grid = hyperbolic_words(src, 3, 6);
    std::vector<Word> samples = {Word(), word_from_string("a"), word_from_string("B"),
                                 word_from_string("ab"), word_from_string("aB")};

    CtPair idPair{&src, &src};
    CHECK(equivariance_check(idPair, samples, grid, 40) < 1e-9);

    CtPair pair{&src, &dst};
    CHECK(equivariance_check(pair, samples, grid, 40) < 1e-5);

    // the empty sample word contributes exactly zero
    CHECK(equivariance_check(pair, {Word()}, grid, 40) < 1e-12);
}

TEST_CASE("orbit growth fits") {
    Representation schottky = make_schottky_standard(3.0, 1.0);
    FloydFit fit6 = floyd_fit(schottky, 6);
    FloydFit fit8 = floyd_fit(schottky, 8);
    REQUIRE(fit8.b);
    CHECK(*fit8.b > 0);
    // window endpoints stable between depths
    CHECK(std::abs(*fit8.b - *fit6.b) <= 0.1 * *fit6.b);
    CHECK(std::abs(fit8.a - fit6.a) <= 0.1 * fit6.a);

    // at depth one the upper constant is the largest generator displacement
    FloydFit fit1 = floyd_fit(schottky, 1);
    double genMax = 0;
    const H3Point O = base_point();
    for (const auto& g : schottky.gens)
        genMax = std::max(genMax, dist_h3(O, act_h3(g, O)));
    for (const auto& g : schottky.invs)
        genMax = std::max(genMax, dist_h3(O, act_h3(g, O)));
    CHECK(fit1.a == Catch::Approx(genMax));

    // cusped family: the log-escape constant exists and the parabolic powers
    // follow the 2 log j shape
    Representation torus = fuchsian();
    FloydFit tfit = floyd_fit(torus, 8);
    REQUIRE(tfit.k);
    MoebiusMap K = torus.eval(word_from_string("abAB"));
    MoebiusMap powK;
    double lo = INFINITY, hi = -INFINITY;
    for (int j = 1; j <= 100; ++j) {
        powK = powK * K;
        if (j < 10) continue;
        double resid = dist_h3(O, act_h3(powK, O)) - 2.0 * std::log(static_cast<double>(j));
        lo = std::min(lo, resid);
        hi = std::max(hi, resid);
    }
    CHECK(hi - lo < 3.0);

    // a marking whose words collapse back to the identity is caught
    Representation fake;
    fake.alphabet.rank = 2;
    MoebiusMap g = schottky.gens[0];
    fake.gens = {g, g.inverse()};
    fake.invs = {g.inverse(), g};
    fake.convex_cocompact = true;
    fake.evidence = Evidence::ping_pong;
    CHECK_THROWS_WITH(floyd_fit(fake, 6), Catch::Matchers::ContainsSubstring("mistagged"));
}

TEST_CASE("segment pools and exclusion profiles") {
    SegmentPool pool = make_segment_pool(2, 10, 4, 32, 99);
    for (int N = 0; N <= 10; ++N)
        for (const auto& seg : pool.by_depth[static_cast<size_t>(N)]) {
            CHECK(seg.closest == N + 1);
            CHECK(static_cast<int>(seg.u.size()) >= N + 1);
            CHECK(static_cast<int>(seg.u.size()) <= N + 4);
        }

    Representation schottky = make_schottky_standard(3.0, 1.0);
    DiagnosticsTable prof = exclusion_profile(schottky, pool);
    const auto& f = prof.data[1];
    CHECK(f.front() > 0);
    for (size_t i = 1; i < f.size(); ++i) CHECK(f[i] >= f[i - 1]);

    // determinism: same seed, byte-identical tables
    DiagnosticsTable prof2 = exclusion_profile(schottky, make_segment_pool(2, 10, 4, 32, 99));
    CHECK(prof.to_csv() == prof2.to_csv());
}

TEST_CASE("escape tables") {
    UepCaps caps;
    caps.table_max = 12;
    caps.depth_cap = 16;
    caps.exhaustive_cap = 8;
    caps.samples_per_length = 64;
    caps.seed = 7;

    RepSequence constant = make_constant_sequence(make_schottky_standard(3.0, 1.0), 6);
    DiagnosticsTable u = uep_table(constant, caps);
    const auto& uCol = u.data[1];
    for (size_t i = 1; i < uCol.size(); ++i) CHECK(uCol[i] > uCol[i - 1]);
    CHECK(u.verdicts[0].second == "consistent");
    // linear escape: the level at row N tracks the Floyd window (the finite
    // fit only bounds the infimum from above, so leave a sampling margin)
    FloydFit fit = floyd_fit(constant.source(), 8);
    for (size_t i = 0; i + 1 < uCol.size(); ++i) {
        double perLetter = uCol[i] / static_cast<double>(i + 1);
        CHECK(perLetter >= 0.75 * *fit.b);
        CHECK(perLetter <= fit.a + 1e-9);
    }

    // divergent cyclic family: the designated powers pin the table down
    CyclicFamily fam = make_cyclic_family(CyclicSchedules{}, 16);
    UepCaps cy;
    cy.table_max = 30;
    cy.depth_cap = 260;
    DiagnosticsTable uc = uep_table(fam.seq, cy);
    double top = 0;
    for (double v : uc.data[1]) top = std::max(top, v);
    CHECK(top < 1.0);
    CHECK(uc.verdicts[0].second == "violating");

    UepCaps bad;
    bad.table_max = 20;
    bad.depth_cap = 16;
    CHECK_THROWS_WITH(uep_table(constant, bad),
                      Catch::Matchers::ContainsSubstring("insufficient depth"));
}

TEST_CASE("segment escape tables") {
    RepSequence seq = make_schottky_interpolation(3.0, 3.5, 1.0, 8);
    SegmentPool pool = make_segment_pool(2, 10, 4, 24, 123);
    DiagnosticsTable v = uepp_table(seq, pool, 10);
    const auto& vCol = v.data[1];
    for (size_t i = 1; i < vCol.size(); ++i) CHECK(vCol[i] >= vCol[i - 1]);
    CHECK(v.verdicts[0].second == "consistent");

    // reproducibility under an identical pool
    DiagnosticsTable v2 = uepp_table(seq, make_segment_pool(2, 10, 4, 24, 123), 10);
    CHECK(v.to_csv() == v2.to_csv());

    // segments cannot escape farther than their endpoints: v stays within an
    // upper-Floyd margin of u over the shared depth range
    UepCaps caps;
    caps.table_max = 10;
    caps.depth_cap = 15;
    caps.exhaustive_cap = 8;
    caps.samples_per_length = 64;
    DiagnosticsTable u = uep_table(seq, caps);
    FloydFit fit = floyd_fit(seq.source(), 6);
    for (size_t i = 0; i < vCol.size(); ++i)
        CHECK(vCol[i] <= u.data[1][i] + fit.a * (pool.spread + 1));
}

TEST_CASE("per-point escape diagnostics") {
    RepSequence seq = make_schottky_interpolation(3.0, 3.5, 1.0, 8);
    Word a = word_from_string("a");
    BoundaryPoint xi = fixed_points(seq.source().eval(a)).attracting;
    BoundaryWordPath path = make_power_path(a, 24, xi);

    EpDiagnostic ep = ep_diagnostic(seq, path, 12);
    CHECK(ep.path_case == PathCase::bounded_blocks);
    const auto& f = ep.table.data[1];
    const auto& m = ep.table.data[2];
    for (size_t i = 1; i < f.size(); ++i) CHECK(f[i] >= f[i - 1]);
    CHECK(f.back() > f.front());
    for (double mv : m) CHECK(mv == 1.0);

    // terminal parabolic block: classified and skipped
    CyclicFamily fam = make_cyclic_family(CyclicSchedules{}, 8);
    Word p = word_from_string("a");
    BoundaryWordPath cusp = make_power_path(p, 20, BoundaryPoint(0, 0));
    EpDiagnostic epCusp = ep_diagnostic(fam.seq, cusp, 8);
    CHECK(epCusp.path_case == PathCase::terminal_block);
    CHECK(epCusp.skipped);

    // growing blocks classification on a constructed word
    Alphabet withP;
    withP.rank = 2;
    withP.parabolic = {0};
    Word growing = word_from_string("aabaaaabaaaaaaaab");  // runs 2, 4, 8
    CHECK(classify_path(growing, withP, 2) == PathCase::growing_blocks);
    Word flat = word_from_string("aabaabaab");
    CHECK(classify_path(flat, withP, 2) == PathCase::bounded_blocks);

    CHECK_THROWS_WITH(ep_diagnostic(seq, make_power_path(a, 3, xi), 12),
                      Catch::Matchers::ContainsSubstring("too short"));
}

TEST_CASE("convergence reports") {
    // constant sequence: everything collapses to zero distance
    RepSequence constant = make_constant_sequence(make_schottky_standard(3.0, 1.0), 8);
    ConvergenceCaps caps;
    caps.grid_depth = 4;
    caps.grid_size = 40;
    caps.path_reps = 10;
    ConvergenceReport rep = convergence_report(constant, caps);
    CHECK(rep.verdict == ConvergenceVerdict::uniform_consistent);
    for (double s : rep.table.data[1]) CHECK(s < 1e-6);
    for (double fcount : rep.table.data[2]) CHECK(fcount == 0);

    // interpolated family: sup distances fall roughly linearly to the limit
    RepSequence strong = make_schottky_interpolation(3.0, 3.5, 1.0, 16);
    ConvergenceReport rep2 = convergence_report(strong, caps);
    CHECK(rep2.verdict == ConvergenceVerdict::uniform_consistent);
    const auto& sup = rep2.table.data[1];
    CHECK(sup[15] < sup[7] / 1.5);
    CHECK(rep2.grid_words.size() == 40);

    // jobs do not change the bytes
    ConvergenceCaps par = caps;
    par.jobs = 4;
    CHECK(convergence_report(strong, par).table.to_csv() == rep2.table.to_csv());

    // the divergent cyclic family still converges pointwise on its two
    // boundary directions while its escape table stays bounded
    CyclicFamily fam = make_cyclic_family(CyclicSchedules{}, 12);
    ConvergenceCaps cy;
    cy.grid_depth = 2;
    cy.grid_size = 8;
    cy.path_reps = 30;
    ConvergenceReport rc = convergence_report(fam.seq, cy);
    CHECK(rc.grid_words.size() == 2);
    const auto& supc = rc.table.data[1];
    for (size_t i = 1; i < supc.size(); ++i) CHECK(supc[i] <= supc[i - 1] + 1e-12);
    CHECK(supc.back() < supc.front());
}

TEST_CASE("geometric limit matching") {
    // strong family: the limit generators are matched by themselves
    RepSequence strong = make_schottky_interpolation(3.0, 3.2, 1.0, 12);
    std::vector<MoebiusMap> candidates = {strong.limit.gens[0], strong.limit.gens[1]};
    auto res = geometric_limit_match(strong, 11, candidates, 0.5, 4);
    REQUIRE(res.size() == 2);
    REQUIRE(res[0].match);
    CHECK(to_string(*res[0].match) == "a");
    CHECK(res[0].violations.empty());
    REQUIRE(res[1].match);
    CHECK(to_string(*res[1].match) == "b");

    // a huge ball destroys uniqueness
    auto coarse = geometric_limit_match(strong, 11, candidates, 10.0, 4);
    CHECK(!coarse[0].violations.empty());

    // cyclic family: the extra parabolic is reached by the designated power
    CyclicFamily fam = make_cyclic_family(CyclicSchedules{}, 12);
    size_t idx = 9;  // index n = 10, m_n = 100
    Word p = word_from_string("a");
    Word powerWord = word_pow(p, static_cast<int>(fam.powers[idx]));
    auto match = geometric_limit_match(fam.seq, idx, {fam.limit_q}, 0.3, 20, {powerWord});
    REQUIRE(match[0].match);
    CHECK(*match[0].match == powerWord);
    CHECK(match[0].violations.empty());
}

TEST_CASE("block penetration witnesses") {
    // torus deformation: commutator blocks dive into the cusp horoball
    RepSequence torusSeq =
        make_torus_interpolation(Complex(3.2, 0.1), Complex(3.1, 0), Complex(3, 0), Complex(3, 0),
                                 12);
    ParabolicBlock block;
    block.base = word_from_string("abAB");
    block.exponent = 6;
    CHECK(penetration_witness(torusSeq, 11, block));

    ParabolicBlock empty = block;
    empty.exponent = 0;
    CHECK_FALSE(penetration_witness(torusSeq, 11, empty));

    // early indices are recorded, not asserted
    (void)penetration_witness(torusSeq, 0, block);

    // no designated thin part for this base
    ParabolicBlock bad;
    bad.base = word_from_string("a");
    bad.exponent = 4;
    CHECK_THROWS_WITH(penetration_witness(torusSeq, 11, bad),
                      Catch::Matchers::ContainsSubstring("no thin part"));

    // divergent cyclic family: long designated-generator blocks penetrate
    CyclicFamily fam = make_cyclic_family(CyclicSchedules{}, 16);
    ParabolicBlock cyc;
    cyc.base = word_from_string("a");
    cyc.exponent = 40;
    CHECK(penetration_witness(fam.seq, 15, cyc));
}
