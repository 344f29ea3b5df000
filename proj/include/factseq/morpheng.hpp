#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace factseq::morpheng {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

// Letters are dense indices [0, d); labels are display metadata only.
struct UniformMorphism {
    u32 d = 0;
    u32 L = 0;
    std::vector<u32> images; // d*L, image of a at [a*L, (a+1)*L)
    std::vector<std::string> labels;

    const u32* image(u32 a) const { return images.data() + (std::size_t)a * L; }
    std::string label(u32 a) const { return labels.empty() ? std::to_string(a) : labels[a]; }
};

inline UniformMorphism make_morphism(u32 d, u32 L, std::vector<u32> images,
                                     std::vector<std::string> labels = {}) {
    if (d == 0) throw std::domain_error("UniformMorphism: empty alphabet");
    if (L < 2) throw std::domain_error("UniformMorphism: arity must be >= 2");
    if (images.size() != (std::size_t)d * L)
        throw std::domain_error("UniformMorphism: image table size must be d*L");
    for (u32 x : images)
        if (x >= d) throw std::domain_error("UniformMorphism: image letter out of range");
    if (!labels.empty() && labels.size() != d)
        throw std::domain_error("UniformMorphism: label count must match alphabet");
    return {d, L, std::move(images), std::move(labels)};
}

struct Coding {
    std::vector<i64> values; // size d
    i64 operator()(u32 a) const { return values[a]; }
};

struct IncidenceMatrix {
    u32 d = 0;
    std::vector<i64> m; // row-major, m[i*d+j] = occurrences of letter i in image of j
    i64 at(u32 i, u32 j) const { return m[(std::size_t)i * d + j]; }
};

// Per-letter frequencies: exact rationals when derivable, else floats with the
// power-iteration residual.
struct FrequencyVector {
    bool exact = false;
    std::vector<Rational> ratio;  // populated when exact
    std::vector<double> value;    // always populated
    double residual = 0.0;
};

inline bool is_prolongable(const UniformMorphism& m, u32 a) {
    return a < m.d && m.image(a)[0] == a;
}

// First N letters of the fixed point, by index recursion: the letter at position n is
// images[w(n/L)][n%L], so the prefix fills left to right without global rewriting.
inline std::vector<u32> fixed_point_prefix(const UniformMorphism& m, u32 a, u64 N) {
    if (N == 0) throw std::domain_error("fixed_point_prefix: N must be >= 1");
    if (!is_prolongable(m, a)) throw std::domain_error("fixed_point_prefix: not prolongable");
    std::vector<u32> w((std::size_t)N);
    w[0] = a;
    for (u64 n = 1; n < N; ++n) w[(std::size_t)n] = m.image(w[(std::size_t)(n / m.L)])[n % m.L];
    return w;
}

inline constexpr u32 incidence_dim_cap = 2048;

inline IncidenceMatrix incidence_matrix(const UniformMorphism& m) {
    if (m.d > incidence_dim_cap)
        throw resource_error("incidence_matrix: alphabet exceeds dense cap " +
                             std::to_string(incidence_dim_cap));
    IncidenceMatrix M;
    M.d = m.d;
    M.m.assign((std::size_t)m.d * m.d, 0);
    for (u32 j = 0; j < m.d; ++j)
        for (u32 pos = 0; pos < m.L; ++pos) ++M.m[(std::size_t)m.image(j)[pos] * m.d + j];
    return M;
}

// Boolean reachability up to the Wielandt bound (d-1)^2+1 via repeated squaring.
inline bool is_primitive(const IncidenceMatrix& M) {
    const u32 d = M.d;
    const std::size_t words = (d + 63) / 64;
    using Bits = std::vector<u64>;
    auto mul = [&](const Bits& A, const Bits& B) {
        Bits C((std::size_t)d * words, 0);
        for (u32 i = 0; i < d; ++i)
            for (u32 k = 0; k < d; ++k)
                if (A[(std::size_t)i * words + k / 64] >> (k % 64) & 1)
                    for (std::size_t w = 0; w < words; ++w)
                        C[(std::size_t)i * words + w] |= B[(std::size_t)k * words + w];
        return C;
    };
    auto all_ones = [&](const Bits& A) {
        for (u32 i = 0; i < d; ++i) {
            for (u32 j = 0; j < d; ++j)
                if (!(A[(std::size_t)i * words + j / 64] >> (j % 64) & 1)) return false;
        }
        return true;
    };
    Bits base((std::size_t)d * words, 0);
    for (u32 i = 0; i < d; ++i)
        for (u32 j = 0; j < d; ++j)
            if (M.at(i, j) > 0) base[(std::size_t)i * words + j / 64] |= u64(1) << (j % 64);
    // Column sums are positive, so once some power is all-ones every larger power stays
    // all-ones; it suffices to test the single power at the bound.
    u64 target = (u64)(d - 1) * (d - 1) + 1;
    Bits acc = base, sq = base;
    --target;
    while (target) {
        if (target & 1) acc = mul(acc, sq);
        sq = mul(sq, sq);
        target >>= 1;
    }
    return all_ones(acc);
}

// Letter frequencies of the fixed point: normalized Perron eigenvector of M. Column sums
// all equal L, so the PF eigenvalue is exactly L. Row sums all equal to L mean M/L is
// row-stochastic and the eigenvector is exactly uniform.
inline FrequencyVector pf_frequencies(const IncidenceMatrix& M) {
    if (!is_primitive(M)) throw std::domain_error("pf_frequencies: matrix not primitive");
    const u32 d = M.d;
    i64 L = 0;
    for (u32 i = 0; i < d; ++i) L += M.at(i, 0);
    bool stochastic = true;
    for (u32 i = 0; i < d && stochastic; ++i) {
        i64 row = 0;
        for (u32 j = 0; j < d; ++j) row += M.at(i, j);
        stochastic = row == L;
    }
    FrequencyVector fv;
    if (stochastic) {
        fv.exact = true;
        fv.ratio.assign(d, Rational(1, (i64)d));
        fv.value.assign(d, 1.0 / d);
        return fv;
    }
    std::vector<double> x(d, 1.0 / d), next(d);
    double res = 0;
    for (int it = 0; it < 100000; ++it) {
        for (u32 i = 0; i < d; ++i) {
            double s = 0;
            for (u32 j = 0; j < d; ++j) s += (double)M.at(i, j) * x[j];
            next[i] = s / (double)L;
        }
        double sum = 0;
        for (double v : next) sum += v;
        res = 0;
        for (u32 i = 0; i < d; ++i) {
            next[i] /= sum;
            res = std::max(res, std::abs(next[i] - x[i]));
        }
        x.swap(next);
        if (res < 1e-12) {
            fv.value = x;
            fv.residual = res;
            return fv;
        }
    }
    throw numeric_error("pf_frequencies: power iteration did not converge", res);
}

struct CodedFrequencies {
    bool exact = false;
    std::map<i64, Rational> ratio;
    std::map<i64, double> value;
};

inline CodedFrequencies coded_frequencies(const FrequencyVector& fv, const Coding& c) {
    CodedFrequencies out;
    out.exact = fv.exact;
    for (std::size_t a = 0; a < fv.value.size(); ++a) {
        out.value[c.values[a]] += fv.value[a];
        if (fv.exact) out.ratio[c.values[a]] += fv.ratio[a];
    }
    return out;
}

struct MinimizeResult {
    UniformMorphism morphism;
    Coding coding;
    std::vector<u32> block_of; // original letter -> quotient letter
};

// Moore partition refinement: split by coded value, then by image-block signatures until
// stable. The quotient generates the same coded fixed point letter-for-letter.
inline MinimizeResult minimize(const UniformMorphism& m, const Coding& c) {
    if (c.values.size() != m.d) throw std::domain_error("minimize: coding size mismatch");
    const u32 d = m.d, L = m.L;
    std::vector<u32> block(d);
    {
        std::map<i64, u32> ids;
        for (u32 a = 0; a < d; ++a) block[a] = ids.try_emplace(c.values[a], (u32)ids.size()).first->second;
    }
    u32 nblocks = 0;
    for (u32 b : block) nblocks = std::max(nblocks, b + 1);
    while (true) {
        std::map<std::vector<u32>, u32> ids;
        std::vector<u32> next(d);
        std::vector<u32> sig(L + 1);
        for (u32 a = 0; a < d; ++a) {
            sig[0] = block[a];
            for (u32 pos = 0; pos < L; ++pos) sig[pos + 1] = block[m.image(a)[pos]];
            next[a] = ids.try_emplace(sig, (u32)ids.size()).first->second;
        }
        u32 n2 = (u32)ids.size();
        block.swap(next);
        if (n2 == nblocks) break;
        nblocks = n2;
    }
    // Order quotient letters by (coded value, smallest original letter) for stable output.
    std::vector<u32> rep(nblocks, ~u32(0));
    for (u32 a = 0; a < d; ++a)
        if (rep[block[a]] == ~u32(0)) rep[block[a]] = a;
    std::vector<u32> order(nblocks);
    for (u32 i = 0; i < nblocks; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](u32 x, u32 y) {
        if (c.values[rep[x]] != c.values[rep[y]]) return c.values[rep[x]] < c.values[rep[y]];
        return rep[x] < rep[y];
    });
    std::vector<u32> newid(nblocks);
    for (u32 i = 0; i < nblocks; ++i) newid[order[i]] = i;

    MinimizeResult out;
    out.block_of.resize(d);
    for (u32 a = 0; a < d; ++a) out.block_of[a] = newid[block[a]];
    std::vector<u32> qimages((std::size_t)nblocks * L);
    std::vector<std::string> qlabels(nblocks);
    std::vector<i64> qvalues(nblocks);
    std::map<i64, u32> dup;
    for (u32 i = 0; i < nblocks; ++i) {
        u32 r = rep[order[i]];
        for (u32 pos = 0; pos < L; ++pos) qimages[(std::size_t)i * L + pos] = out.block_of[m.image(r)[pos]];
        qvalues[i] = c.values[r];
        u32 n = dup[qvalues[i]]++;
        qlabels[i] = std::to_string(qvalues[i]) + (n ? "#" + std::to_string(n) : "");
    }
    out.morphism = make_morphism(nblocks, L, std::move(qimages), std::move(qlabels));
    out.coding = Coding{std::move(qvalues)};
    return out;
}

inline std::map<u32, Rational> empirical_letter_freq(const std::vector<u32>& word) {
    if (word.empty()) throw std::domain_error("empirical_letter_freq: empty word");
    std::map<u32, i64> counts;
    for (u32 a : word) ++counts[a];
    std::map<u32, Rational> out;
    for (auto [a, cnt] : counts) out.emplace(a, Rational(cnt, (i64)word.size()));
    return out;
}

} // namespace factseq::morpheng
