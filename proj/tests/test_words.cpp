#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "kleinlab/rng.hpp"
#include "kleinlab/words.hpp"

using namespace kleinlab;

TEST_CASE("free reduction") {
    CHECK(word_from_string("aA").empty());
    CHECK(to_string(word_from_string("abB")) == "a");
    CHECK(to_string(word_from_string("ab")) == "ab");
    CHECK(to_string(word_from_string("abBA")) == "");
    // idempotent
    Word w = word_from_string("abAbaB");
    CHECK(reduce(w.letters) == w);
    // subadditive
    Word u = word_from_string("abA"), v = word_from_string("aBA");
    CHECK(concat(u, v).size() <= u.size() + v.size());
}

TEST_CASE("ball enumeration sizes and order") {
    CHECK(ball_size(2, 0) == 1);
    CHECK(ball_size(2, 1) == 5);
    CHECK(ball_size(2, 2) == 17);  // 1 + 4 + 12

    auto ball = enumerate_ball(2, 3);
    CHECK(ball.size() == ball_size(2, 3));

    // each exactly once, freely reduced, length-lexicographic
    std::set<std::string> seen;
    size_t prev = 0;
    for (size_t i = 0; i < ball.size(); ++i) {
        const Word& w = ball[i];
        CHECK(reduce(w.letters) == w);
        CHECK(seen.insert(to_string(w)).second);
        CHECK(w.size() >= prev);
        prev = w.size();
        if (i > 0 && ball[i - 1].size() == w.size()) CHECK(ball[i - 1] < w);
    }

    CHECK_THROWS_AS(enumerate_ball(2, 40), std::invalid_argument);

    // the visitor walks the same set
    size_t count = 0;
    for_each_reduced(2, 3, [&](std::span<const Letter>) { ++count; });
    CHECK(count == ball.size());

    // rank one
    CHECK(enumerate_ball(1, 5).size() == 11);
}

TEST_CASE("geodesic words") {
    Word u = word_from_string("a"), v = word_from_string("a");
    CHECK(geodesic_word(u, v).size() == 1);

    auto path = geodesic_word(Word(), word_from_string("ab"));
    REQUIRE(path.size() == 3);
    CHECK(to_string(path[0]) == "");
    CHECK(to_string(path[1]) == "a");
    CHECK(to_string(path[2]) == "ab");

    CHECK(word_dist(word_from_string("a"), word_from_string("b")) == 2);

    // path length equals the distance, consecutive steps differ by one letter
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        auto rnd = [&] {
            std::vector<Letter> ls;
            for (int k = rng.uniform_int(0, 8); k > 0; --k)
                ls.push_back(letter_from_rank(rng.uniform_int(0, 3)));
            return reduce(ls);
        };
        Word a = rnd(), b = rnd();
        auto p = geodesic_word(a, b);
        CHECK(static_cast<int>(p.size()) - 1 == word_dist(a, b));
        for (size_t k = 1; k < p.size(); ++k) CHECK(word_dist(p[k - 1], p[k]) == 1);
    }
}

TEST_CASE("gromov product is the common prefix depth") {
    Word u = word_from_string("aab"), v = word_from_string("aaB");
    CHECK(gromov_product(u, v) == 2);
    CHECK(gromov_product(u, u) == 3);
    CHECK(gromov_product(word_from_string("a"), word_from_string("A")) == 0);
}

TEST_CASE("parabolic block parsing") {
    Alphabet ab;
    ab.rank = 16;  // p is letter index 15
    ab.parabolic = {15};

    Word w = word_from_string("pppab");
    BlockParse parse = parse_parabolic_blocks(w, ab, 2);
    auto blocks = parse.blocks();
    REQUIRE(blocks.size() == 1);
    CHECK(to_string(blocks[0].base) == "p");
    CHECK(blocks[0].exponent == 3);
    REQUIRE(parse.segments.size() == 2);
    CHECK(to_string(parse.segments[1].gap) == "ab");
    CHECK(parse.recompose() == w);

    CHECK(parse_parabolic_blocks(word_from_string("ab"), ab, 1).blocks().empty());

    parse = parse_parabolic_blocks(word_from_string("pppppaPPP"), ab, 2);
    blocks = parse.blocks();
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].exponent == 5);
    CHECK(blocks[1].exponent == -3);
    REQUIRE(parse.segments.size() == 3);
    CHECK(to_string(parse.segments[1].gap) == "a");
    CHECK(parse.recompose() == word_from_string("pppppaPPP"));

    // runs below the threshold stay in gaps
    parse = parse_parabolic_blocks(word_from_string("ppa"), ab, 3);
    CHECK(parse.blocks().empty());
    CHECK(parse.recompose() == word_from_string("ppa"));

    // block remainder records the short trailing context
    parse = parse_parabolic_blocks(word_from_string("pppabab"), ab, 2);
    CHECK(to_string(parse.blocks()[0].remainder) == "ab");

    // round trip over random words with random parabolic markings
    Rng rng(9);
    Alphabet r2;
    r2.rank = 2;
    r2.parabolic = {0};
    for (int i = 0; i < 200; ++i) {
        std::vector<Letter> ls;
        for (int k = rng.uniform_int(0, 20); k > 0; --k)
            ls.push_back(letter_from_rank(rng.uniform_int(0, 3)));
        Word w2 = reduce(ls);
        BlockParse p2 = parse_parabolic_blocks(w2, r2, rng.uniform_int(1, 3));
        CHECK(p2.recompose() == w2);
    }
}

TEST_CASE("power paths and translation") {
    Word w = word_from_string("ab");
    BoundaryWordPath path = make_power_path(w, 3, BoundaryPoint(1, 0));
    CHECK(path.prefixes.size() == 7);
    CHECK(to_string(path.final_word()) == "ababab");
    for (size_t i = 1; i < path.prefixes.size(); ++i)
        CHECK(word_dist(path.prefixes[i - 1], path.prefixes[i]) == 1);

    BoundaryWordPath moved = translate_path(word_from_string("b"), path, BoundaryPoint(2, 0));
    CHECK(to_string(moved.final_word()) == "bababab");
    for (size_t i = 1; i < moved.prefixes.size(); ++i)
        CHECK(word_dist(moved.prefixes[i - 1], moved.prefixes[i]) == 1);
}

TEST_CASE("greedy tracking of a loxodromic axis") {
    // rank-1 marked group generated by z -> 4z; the ray toward the attracting
    // fixed point is the axis itself, so tracking yields plain powers
    MoebiusMap diag(Complex(2, 0), Complex(0, 0), Complex(0, 0), Complex(0.5, 0));
    MoebiusMap inv = diag.inverse();
    auto gen = [&](Letter l) -> const MoebiusMap& { return l > 0 ? diag : inv; };

    BoundaryWordPath path = standard_path_to(gen, 1, BoundaryPoint::infinity(), 12);
    REQUIRE(path.prefixes.size() > 4);
    for (size_t i = 1; i < path.prefixes.size(); ++i) {
        CHECK(path.prefixes[i].size() == i);
        CHECK(path.prefixes[i].letters.front() == 1);
    }
    CHECK(path.observed_quasigeodesic <= cal::kTrackerLMax);

    BoundaryWordPath empty = standard_path_to(gen, 1, BoundaryPoint::infinity(), 0);
    CHECK(empty.prefixes.size() == 1);

    // a target no orbit direction approaches: the tracker must give up
    CHECK_THROWS_WITH(standard_path_to(gen, 1, BoundaryPoint(1, 0), 60),
                      Catch::Matchers::ContainsSubstring("not reachable"));
}

TEST_CASE("synthetic horosphere lattice tracking stays near the chord") {
    // rank-2 cusp picture: horosphere t = 1 with the flat lattice generated by
    // 1 and tau; a greedy lattice walk from 0 to a far lattice point should
    // stay within the frozen deviation of the straight chord
    Complex tau(0.31, 1.12);
    Complex target = 17.0 + 5.0 * tau;
    Complex pos(0, 0);
    double worst = 0;
    int guard = 0;
    while (std::abs(pos - target) > 1e-9 && guard++ < 200) {
        Complex best = pos;
        double bestD = INFINITY;
        for (Complex step : {Complex(1, 0), Complex(-1, 0), tau, -tau}) {
            Complex cand = pos + step;
            if (std::abs(cand - target) >= std::abs(pos - target)) continue;
            // distance from cand to the chord 0 -> target
            Complex dir = target / std::abs(target);
            double along = (cand * std::conj(dir)).real();
            Complex foot = std::clamp(along, 0.0, std::abs(target)) * dir;
            double d = std::abs(cand - foot);
            if (d < bestD) { bestD = d; best = cand; }
        }
        pos = best;
        worst = std::max(worst, bestD);
    }
    CHECK(std::abs(pos - target) < 1e-9);
    CHECK(worst <= cal::kRank2TrackingDeviation);
}
