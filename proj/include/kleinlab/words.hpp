#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kleinlab/hypgeo.hpp"
#include "kleinlab/moebius.hpp"

namespace kleinlab {

// Letters are signed 1-based generator indices: +1 = a, -1 = A, +2 = b, ...
using Letter = int8_t;

inline Letter letter_inverse(Letter l) { return static_cast<Letter>(-l); }

inline char letter_to_char(Letter l) {
    int idx = std::abs(static_cast<int>(l)) - 1;
    return static_cast<char>((l > 0 ? 'a' : 'A') + idx);
}

inline Letter letter_from_char(char c) {
    if (c >= 'a' && c <= 'z') return static_cast<Letter>(c - 'a' + 1);
    if (c >= 'A' && c <= 'Z') return static_cast<Letter>(-(c - 'A' + 1));
    throw std::invalid_argument(std::string("letter_from_char: bad symbol '") + c + "'");
}

// canonical letter order a < A < b < B < ...; used everywhere ties must break
inline int letter_rank(Letter l) {
    return 2 * (std::abs(static_cast<int>(l)) - 1) + (l < 0 ? 1 : 0);
}

inline Letter letter_from_rank(int r) {
    int idx = r / 2 + 1;
    return static_cast<Letter>(r % 2 == 0 ? idx : -idx);
}

struct Alphabet {
    int rank = 2;
    std::vector<int> parabolic;  // generator indices (0-based) designated parabolic

    bool is_parabolic_gen(int idx) const {
        for (int p : parabolic)
            if (p == idx) return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

struct Word {
    std::vector<Letter> letters;  // always freely reduced

    Word() = default;
    explicit Word(std::vector<Letter> ls) : letters(std::move(ls)) {}

    size_t size() const { return letters.size(); }
    bool empty() const { return letters.empty(); }
    bool operator==(const Word& o) const { return letters == o.letters; }
    bool operator<(const Word& o) const {  // length-lexicographic
        if (letters.size() != o.letters.size()) return letters.size() < o.letters.size();
        for (size_t i = 0; i < letters.size(); ++i)
            if (letters[i] != o.letters[i]) return letter_rank(letters[i]) < letter_rank(o.letters[i]);
        return false;
    }
};

inline Word reduce(std::span<const Letter> raw) {
    Word w;
    w.letters.reserve(raw.size());
    for (Letter l : raw) {
        if (l == 0) throw std::invalid_argument("reduce: zero letter");
        if (!w.letters.empty() && w.letters.back() == letter_inverse(l))
            w.letters.pop_back();
        else
            w.letters.push_back(l);
    }
    return w;
}

inline Word word_from_string(const std::string& s) {
    std::vector<Letter> raw;
    raw.reserve(s.size());
    for (char c : s) raw.push_back(letter_from_char(c));
    return reduce(raw);
}

inline std::string to_string(const Word& w) {
    std::string s;
    s.reserve(w.size());
    for (Letter l : w.letters) s.push_back(letter_to_char(l));
    return s;
}

inline Word inverse(const Word& w) {
    Word r;
    r.letters.reserve(w.size());
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
        r.letters.push_back(letter_inverse(*it));
    return r;
}

inline Word concat(const Word& u, const Word& v) {
    std::vector<Letter> raw = u.letters;
    raw.insert(raw.end(), v.letters.begin(), v.letters.end());
    return reduce(raw);
}

inline Word word_pow(const Word& w, int k) {
    Word base = k >= 0 ? w : inverse(w);
    Word out;
    for (int i = 0; i < std::abs(k); ++i) out = concat(out, base);
    return out;
}

inline int word_dist(const Word& u, const Word& v) {
    return static_cast<int>(concat(inverse(u), v).size());
}

inline bool cyclically_reduced(const Word& w) {
    return w.size() < 2 || w.letters.front() != letter_inverse(w.letters.back());
}

// tree Gromov product: graph distance from the identity to the geodesic [u, v]
inline int gromov_product(const Word& u, const Word& v) {
    return (static_cast<int>(u.size()) + static_cast<int>(v.size()) - word_dist(u, v)) / 2;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

inline uint64_t sphere_size(int rank, int len) {
    if (len == 0) return 1;
    uint64_t n = 2 * static_cast<uint64_t>(rank);
    uint64_t out = n;
    for (int i = 1; i < len; ++i) out *= n - 1;
    return out;
}

inline uint64_t ball_size(int rank, int maxLen) {
    uint64_t total = 0;
    for (int l = 0; l <= maxLen; ++l) total += sphere_size(rank, l);
    return total;
}

// depth-first walk over all reduced words up to maxLen, in prefix-lexicographic
// order; visit(letters) sees every word exactly once, starting from the empty
// word. The hot loop allocates nothing.
template <class F>
void for_each_reduced(int rank, int maxLen, F&& visit) {
    std::vector<Letter> stack;
    stack.reserve(static_cast<size_t>(maxLen));
    std::span<const Letter> empty;
    visit(empty);
    if (maxLen == 0) return;
    std::vector<int> choice(static_cast<size_t>(maxLen) + 1, 0);
    int depth = 0;
    const int nLetters = 2 * rank;
    while (true) {
        if (depth < maxLen && choice[static_cast<size_t>(depth)] < nLetters) {
            Letter next = letter_from_rank(choice[static_cast<size_t>(depth)]++);
            if (!stack.empty() && stack.back() == letter_inverse(next)) continue;
            stack.push_back(next);
            ++depth;
            choice[static_cast<size_t>(depth)] = 0;
            visit(std::span<const Letter>(stack.data(), stack.size()));
        } else {
            if (depth == 0) break;
            stack.pop_back();
            --depth;
        }
    }
}

// all reduced words with |w| <= maxLen in length-lexicographic order
inline std::vector<Word> enumerate_ball(int rank, int maxLen, int cap = cal::kWordDepthCap) {
    if (maxLen > cap)
        throw std::invalid_argument("enumerate_ball: depth " + std::to_string(maxLen) +
                                    " exceeds cap " + std::to_string(cap));
    std::vector<Word> out;
    out.reserve(static_cast<size_t>(ball_size(rank, maxLen)));
    out.emplace_back();
    size_t levelBegin = 0, levelEnd = 1;
    for (int len = 1; len <= maxLen; ++len) {
        for (size_t i = levelBegin; i < levelEnd; ++i) {
            for (int r = 0; r < 2 * rank; ++r) {
                Letter next = letter_from_rank(r);
                const Word& w = out[i];
                if (!w.letters.empty() && w.letters.back() == letter_inverse(next)) continue;
                Word ext = w;
                ext.letters.push_back(next);
                out.push_back(std::move(ext));
            }
        }
        levelBegin = levelEnd;
        levelEnd = out.size();
    }
    return out;
}

// vertices of the unique Cayley-graph geodesic from u to v
inline std::vector<Word> geodesic_word(const Word& u, const Word& v) {
    Word w = concat(inverse(u), v);
    std::vector<Word> path;
    path.reserve(w.size() + 1);
    Word cur = u;
    path.push_back(cur);
    for (Letter l : w.letters) {
        cur = concat(cur, Word({l}));
        path.push_back(cur);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Parabolic blocks
// ---------------------------------------------------------------------------

struct ParabolicBlock {
    Word base;       // single designated generator from the parser; any word in general
    int exponent = 0;
    Word remainder;  // up to kBlockRemainderCap trailing letters, for context

    Word expand() const { return word_pow(base, exponent); }
};

struct BlockParse {
    struct Segment {
        bool is_block = false;
        ParabolicBlock block;
        Word gap;
    };
    std::vector<Segment> segments;

    std::vector<ParabolicBlock> blocks() const {
        std::vector<ParabolicBlock> out;
        for (const auto& s : segments)
            if (s.is_block) out.push_back(s.block);
        return out;
    }

    Word recompose() const {
        Word out;
        for (const auto& s : segments)
            out = concat(out, s.is_block ? s.block.expand() : s.gap);
        return out;
    }
};

// maximal runs p^k with |k| >= k0 and p in the designated parabolic subset;
// gaps carry everything else, so blocks plus gaps recompose the input exactly
inline BlockParse parse_parabolic_blocks(const Word& w, const Alphabet& alphabet, int k0,
                                         int remainderCap = cal::kBlockRemainderCap) {
    if (k0 < 1) throw std::invalid_argument("parse_parabolic_blocks: k0 must be >= 1");
    BlockParse out;
    Word gap;
    size_t i = 0;
    const auto& ls = w.letters;
    while (i < ls.size()) {
        int genIdx = std::abs(static_cast<int>(ls[i])) - 1;
        size_t runEnd = i + 1;
        while (runEnd < ls.size() && ls[runEnd] == ls[i]) ++runEnd;
        size_t runLen = runEnd - i;
        if (alphabet.is_parabolic_gen(genIdx) && runLen >= static_cast<size_t>(k0)) {
            if (!gap.empty()) {
                out.segments.push_back({false, {}, gap});
                gap = Word();
            }
            ParabolicBlock blk;
            blk.base = Word({static_cast<Letter>(std::abs(static_cast<int>(ls[i])))});
            blk.exponent = ls[i] > 0 ? static_cast<int>(runLen) : -static_cast<int>(runLen);
            for (size_t j = runEnd; j < ls.size() && j < runEnd + static_cast<size_t>(remainderCap); ++j)
                blk.remainder.letters.push_back(ls[j]);
            out.segments.push_back({true, blk, {}});
        } else {
            for (size_t j = i; j < runEnd; ++j) gap.letters.push_back(ls[j]);
        }
        i = runEnd;
    }
    if (!gap.empty()) out.segments.push_back({false, {}, gap});
    return out;
}

// ---------------------------------------------------------------------------
// Boundary-directed paths
// ---------------------------------------------------------------------------

struct BoundaryWordPath {
    std::vector<Word> prefixes;  // starts with the empty word
    BoundaryPoint target;
    int depth = 0;  // division steps walked by the tracker, or letters for power paths
    double observed_quasigeodesic = 1.0;
    bool powers_of_word = false;
    Word power_base;

    const Word& final_word() const { return prefixes.back(); }
};

inline BoundaryWordPath make_power_path(const Word& w, int reps, BoundaryPoint target) {
    if (w.empty()) throw std::invalid_argument("make_power_path: empty word");
    BoundaryWordPath path;
    path.target = target;
    path.powers_of_word = true;
    path.power_base = w;
    path.prefixes.emplace_back();
    Word cur;
    for (int r = 0; r < reps; ++r) {
        for (Letter l : w.letters) {
            cur = concat(cur, Word({l}));
            path.prefixes.push_back(cur);
        }
    }
    path.depth = static_cast<int>(path.prefixes.size()) - 1;
    return path;
}

// left translation: the path 1, ..., w, w g_1, w g_2, ...
inline BoundaryWordPath translate_path(const Word& w, const BoundaryWordPath& path,
                                       BoundaryPoint newTarget) {
    BoundaryWordPath out;
    out.target = newTarget;
    out.depth = path.depth + static_cast<int>(w.size());
    Word cur;
    out.prefixes.push_back(cur);
    for (Letter l : w.letters) {
        cur = concat(cur, Word({l}));
        out.prefixes.push_back(cur);
    }
    for (size_t i = 1; i < path.prefixes.size(); ++i)
        out.prefixes.push_back(concat(w, path.prefixes[i]));
    return out;
}

// largest word-vs-step distortion over the path vertices
inline double observed_quasigeodesic_constant(const std::vector<Word>& prefixes) {
    double L = 1.0;
    size_t n = prefixes.size();
    size_t stride = std::max<size_t>(1, n / 64);
    for (size_t a = 0; a < n; a += stride) {
        for (size_t b = a + 1; b < n; b += stride) {
            int steps = static_cast<int>(b - a);
            int d = word_dist(prefixes[a], prefixes[b]);
            if (d > 0) L = std::max(L, static_cast<double>(steps) / d);
            L = std::max(L, static_cast<double>(d) / steps);
        }
    }
    return L;
}

// Greedy tracker: walk the geodesic ray from the basepoint toward xi in unit
// steps; at each division point keep extending the current word by whichever
// generator brings the orbit point closest, as long as that improves. Ties
// break on the canonical letter order. GenFn maps a letter to its matrix.
template <class GenFn>
BoundaryWordPath standard_path_to(GenFn&& gen, int rank, const BoundaryPoint& xi, int depth) {
    BoundaryWordPath path;
    path.target = xi;
    path.prefixes.emplace_back();
    path.depth = depth;
    if (depth == 0) return path;

    const H3Point O = base_point();
    MoebiusMap n = map_base_to_inf(xi);
    MoebiusMap ninv = n.inverse();
    H3Point start = act_h3(n, O);
    auto ray = [&](double s) { return act_h3(ninv, H3Point(start.z, start.t * std::exp(s))); };

    MoebiusMap cur;
    Word curWord;
    int stall = 0;
    const int stallLimit = 2 * 2 * rank;  // division steps with no accepted extension
    for (int m = 1; m <= depth; ++m) {
        H3Point q = ray(static_cast<double>(m));
        bool acceptedHere = false;
        while (true) {
            double curDist = dist_h3(act_h3(cur, O), q);
            double bestDist = INFINITY;
            Letter bestLetter = 0;
            MoebiusMap bestMap;
            for (int r = 0; r < 2 * rank; ++r) {
                Letter l = letter_from_rank(r);
                MoebiusMap cand = cur * gen(l);
                double d = dist_h3(act_h3(cand, O), q);
                if (d < bestDist - 1e-12) {
                    bestDist = d;
                    bestLetter = l;
                    bestMap = cand;
                }
            }
            if (bestLetter == 0 || bestDist >= curDist - 1e-12) break;
            cur = bestMap;
            curWord = concat(curWord, Word({bestLetter}));
            path.prefixes.push_back(curWord);
            acceptedHere = true;
        }
        stall = acceptedHere ? 0 : stall + 1;
        if (stall >= stallLimit)
            throw std::runtime_error("standard_path_to: target not reachable at this depth");
    }
    path.observed_quasigeodesic = observed_quasigeodesic_constant(path.prefixes);
    return path;
}

}  // namespace kleinlab
