#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "factdig.hpp"
#include "morpheng.hpp"
#include "numth.hpp"
#include "rational.hpp"

namespace factseq::constructs {

using numth::u128;
using numth::u32;
using numth::u64;
using i64 = std::int64_t;

enum class Classification { AutomaticPrimePower, AutomaticStrict, DensityOneAutomatic };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::AutomaticPrimePower: return "AutomaticPrimePower";
        case Classification::AutomaticStrict: return "AutomaticStrict";
        default: return "DensityOneAutomatic";
    }
}

// Derived constants for base b and digit count k. The leading prime p1 maximizes
// l*(p-1) in the factorization; everything else is driven by the pair (p1, l1).
struct Params {
    numth::BaseFactorization bf;
    u32 k = 0;
    u64 b = 0, bk = 0;
    u64 p1 = 0;
    u32 l1 = 0;
    u32 K = 0;   // l1 * k
    u64 q1 = 0;  // p1^l1
    u64 q1k = 0; // q1^k = p1^K
    u64 q = 0;   // b / q1, coprime to p1
    u64 qk = 0;  // q^k (exact, < b^k)
    u64 t = 0;   // inverse of q mod q1^k (1 when q = 1)
    u64 s = 0;   // multiplicative order of q mod q1^k (1 when q = 1)
    u64 u = 0;   // l1 * s
    u64 v = 0;   // 4 when b^k = 4, else lcm(p1^(K-1), 2, u)
};

namespace detail {

inline u64 checked_lcm(u64 a, u64 b) {
    u64 g = std::gcd(a, b);
    u128 r = (u128)(a / g) * b;
    if (r >> 63) throw std::overflow_error("lcm overflow");
    return (u64)r;
}

inline u64 pow_u64(u64 base, u32 e) {
    u64 r = 1;
    while (e--) r *= base;
    return r;
}

} // namespace detail

inline Params derive_params(u64 b, u32 k) {
    if (k == 0) throw std::domain_error("derive_params: k must be >= 1");
    Params P;
    P.bf = numth::factorize(b);
    P.k = k;
    P.b = b;
    P.bk = numth::checked_pow(b, k);
    P.p1 = P.bf.factors[0].p;
    P.l1 = P.bf.factors[0].l;
    P.K = P.l1 * k;
    P.q1 = detail::pow_u64(P.p1, P.l1);
    P.q1k = detail::pow_u64(P.p1, P.K);
    P.q = b / P.q1;
    P.qk = detail::pow_u64(P.q, k);
    if (P.q == 1) {
        P.t = 1;
        P.s = 1;
    } else {
        numth::Modulus m(P.q1k);
        P.t = numth::mod_inverse(P.q % P.q1k, m);
        P.s = numth::mult_order(P.q, m);
    }
    P.u = (u64)P.l1 * P.s;
    if (P.bk == 4) {
        P.v = 4;
    } else {
        u64 pK1 = detail::pow_u64(P.p1, P.K - 1);
        P.v = detail::checked_lcm(pK1, detail::checked_lcm(2, P.u));
    }
    return P;
}

inline Classification classify(u64 b, u32 k) {
    if (k == 0) throw std::domain_error("classify: k must be >= 1");
    auto bf = numth::factorize(b);
    if (bf.factors.size() == 1) return Classification::AutomaticPrimePower;
    const auto& f1 = bf.factors[0];
    const auto& f2 = bf.factors[1];
    u128 a1 = (u128)f1.l * (f1.p - 1);
    u128 a2 = (u128)f2.l * (f2.p - 1);
    return a1 > a2 ? Classification::AutomaticStrict : Classification::DensityOneAutomatic;
}

// n belongs to S_{b,k} iff floor(nu_{p_i}(n!)/l_i) >= floor(nu_{p_1}(n!)/l_1) + k for
// every non-leading prime; all of N when b is a prime power.
inline bool in_S(const numth::BaseFactorization& bf, u32 k, u64 n) {
    if (bf.factors.size() == 1) return true;
    u64 lead = numth::nu_factorial(bf.factors[0].p, n) / bf.factors[0].l;
    for (std::size_t i = 1; i < bf.factors.size(); ++i)
        if (numth::nu_factorial(bf.factors[i].p, n) / bf.factors[i].l < lead + k) return false;
    return true;
}

inline bool in_S(u64 b, u32 k, u64 n) { return in_S(numth::factorize(b), k, n); }

// Pair-letter alphabet size before minimization: |multiples of q^k in [1,b^k) not
// divisible by b| * v = (q1^k - q1^(k-1)) * v.
inline u64 sigma_tilde_size(u64 b, u32 k) {
    Params P = derive_params(b, k);
    u64 delta = P.q1k - P.q1k / P.q1;
    u128 r = (u128)delta * P.v;
    if (r >> 63) throw std::overflow_error("sigma_tilde_size overflow");
    return (u64)r;
}

inline constexpr std::size_t default_alphabet_cap = 1'000'000;
inline constexpr u32 label_threshold = 4096; // letter labels only for small alphabets

// Triple-letter morphism on (units mod p^K) x Z_u x Z_v, ascending-lex letter order.
struct Psi {
    morpheng::UniformMorphism m;
    u64 p = 0, pK = 0;
    u32 K = 0;
    u64 u = 0, v = 0;
    u32 start = 0;
    std::vector<u64> units; // ascending units mod p^K

    void decode(u32 letter, u64& x, u64& y, u64& z) const {
        x = units[letter / (u * v)];
        y = (letter / v) % u;
        z = letter % v;
    }
};

inline Psi build_psi(u64 p, u32 K, u64 u, u64 v, std::size_t cap = default_alphabet_cap) {
    if (!numth::is_prime(p)) throw std::domain_error("build_psi: p must be prime");
    if (K == 0 || u == 0 || v == 0) throw std::domain_error("build_psi: K, u, v must be >= 1");
    u64 pK = numth::checked_pow(p, K);
    u64 need = detail::checked_lcm(pK / p, detail::checked_lcm(u, 2));
    if (p == 2 && K == 2) need = detail::checked_lcm(need, 4);
    if (v % need != 0)
        throw std::domain_error("build_psi: v must be divisible by lcm(p^(K-1), u, 2)" +
                                std::string(p == 2 && K == 2 ? " and by 4" : ""));
    u64 phi = pK / p * (p - 1);
    u128 d128 = (u128)phi * u * v;
    if (d128 > cap)
        throw resource_error("build_psi: alphabet size phi(p^K)*u*v = " +
                             std::to_string((u64)d128) + " exceeds cap " + std::to_string(cap));
    u32 d = (u32)d128;

    Psi psi;
    psi.p = p;
    psi.pK = pK;
    psi.K = K;
    psi.u = u;
    psi.v = v;
    psi.units.reserve(phi);
    std::vector<u32> unit_index(pK, ~u32(0));
    for (u64 x = 1; x < pK; ++x)
        if (x % p != 0) {
            unit_index[x] = (u32)psi.units.size();
            psi.units.push_back(x);
        }

    // Partial products of non-multiples of p, mod p^K, for all arguments below p*v.
    std::vector<u64> gauss((std::size_t)(p * v));
    u64 run = 1;
    for (u64 mval = 0; mval < p * v; ++mval) {
        if (mval % p != 0) run = numth::mul_mod(run, mval % pK, pK);
        gauss[(std::size_t)mval] = run;
    }

    std::vector<u32> images((std::size_t)d * p);
    for (u32 a = 0; a < d; ++a) {
        u64 x = psi.units[a / (u * v)], y = (a / v) % u, z = a % v;
        for (u64 i = 0; i < p; ++i) {
            u64 xi = numth::mul_mod(x, gauss[(std::size_t)(p * z + i)], pK);
            u64 yi = (y + z) % u;
            u64 zi = (p * z + i) % v;
            images[(std::size_t)a * p + i] = (u32)((u64)unit_index[xi] * (u * v) + yi * v + zi);
        }
    }
    std::vector<std::string> labels;
    if (d <= label_threshold) {
        labels.reserve(d);
        for (u32 a = 0; a < d; ++a) {
            u64 x, y, z;
            x = psi.units[a / (u * v)];
            y = (a / v) % u;
            z = a % v;
            labels.push_back("(" + std::to_string(x) + "," + std::to_string(y) + "," +
                             std::to_string(z) + ")");
        }
    }
    psi.m = morpheng::make_morphism(d, (u32)p, std::move(images), std::move(labels));
    psi.start = 0; // letter (1,0,0): 1 is the first unit
    if (!morpheng::is_prolongable(psi.m, psi.start))
        throw consistency_error("build_psi: start letter not prolongable");
    return psi;
}

struct AlphaCheck {
    bool ok = true;
    u64 first_mismatch = 0;
};

// Letter-by-letter comparison of the fixed point of psi against the arithmetic triple
// (ell_{p,K}(n!), nu_p(n!) mod u, n mod v).
inline AlphaCheck alpha_check(u64 p, u32 K, u64 u, u64 v, u64 N,
                              std::size_t cap = default_alphabet_cap) {
    if (N > 100000) throw std::domain_error("alpha_check: N must be <= 1e5");
    Psi psi = build_psi(p, K, u, v, cap);
    auto word = morpheng::fixed_point_prefix(psi.m, psi.start, N);
    auto table = factdig::GaussTable::build(p, K);
    for (u64 n = 0; n < N; ++n) {
        auto [ell, nuv] = factdig::ell_prime_fast(p, K, n, table);
        u64 x, y, z;
        psi.decode(word[(std::size_t)n], x, y, z);
        if (x != ell || y != nuv % u || z != n % v) return {false, n};
    }
    return {true, 0};
}

// Coded value of the triple (x, y, z): x * p1^(y mod l1) * q^k * t^(k + (floor(y/l1) mod s))
// mod b^k. Independent of z; any exponent representative mod s gives the same product
// because q^k * (t^s - 1) vanishes mod b^k.
inline u64 tau_value(const Params& P, u64 x, u64 y) {
    u64 val = numth::mul_mod(x % P.bk, numth::pow_mod(P.p1, y % P.l1, P.bk), P.bk);
    val = numth::mul_mod(val, P.qk % P.bk, P.bk);
    u64 e = P.k + (y / P.l1) % P.s;
    return numth::mul_mod(val, numth::pow_mod(P.t, e, P.bk), P.bk);
}

inline morpheng::Coding build_tau(const Params& P, const Psi& psi) {
    if (psi.p != P.p1 || psi.K != P.K)
        throw std::domain_error("build_tau: psi does not match params");
    u64 expected_range = P.q1k - P.q1k / P.q1;
    std::set<u64> seen;
    morpheng::Coding c;
    c.values.resize(psi.m.d);
    for (std::size_t ui = 0; ui < psi.units.size(); ++ui) {
        for (u64 y = 0; y < psi.u; ++y) {
            u64 val = tau_value(P, psi.units[ui], y);
            if (val == 0 || val % P.qk != 0 || (val / P.qk) % P.q1 == 0)
                throw consistency_error("build_tau: coded value escapes the target alphabet");
            seen.insert(val);
            for (u64 z = 0; z < psi.v; ++z)
                c.values[ui * (psi.u * psi.v) + y * psi.v + z] = (i64)val;
        }
    }
    if (seen.size() != expected_range)
        throw consistency_error("build_tau: coded range has " + std::to_string(seen.size()) +
                                " values, expected " + std::to_string(expected_range));
    return c;
}

// Pair-letter morphism on Delta-tilde x Z_v. Only defined when l1 = 1: for l1 >= 2 the
// pair (coded value, n mod v) does not determine the children (two positions can share a
// letter yet branch differently), so no such morphism generates the sequence.
struct PhiTilde {
    morpheng::UniformMorphism m;
    morpheng::Coding coding; // first component
    u32 start = 0;
    std::vector<u64> xs; // ascending Delta-tilde values
    u64 v = 0;
};

inline PhiTilde build_phi_tilde(const Params& P, std::size_t cap = default_alphabet_cap) {
    if (P.l1 != 1)
        throw std::domain_error(
            "build_phi_tilde: pair-letter construction requires l1 = 1; for l1 >= 2 the "
            "letter (value, position class) does not determine its children");
    u64 delta = P.q1k - P.q1k / P.q1;
    u128 d128 = (u128)delta * P.v;
    if (d128 > cap)
        throw resource_error("build_phi_tilde: alphabet size |Delta|*v = " +
                             std::to_string((u64)d128) + " exceeds cap " + std::to_string(cap));
    u32 d = (u32)d128;

    PhiTilde phi;
    phi.v = P.v;
    phi.xs.reserve(delta);
    std::vector<u32> xindex;
    xindex.assign(P.q1k, ~u32(0));
    for (u64 mfac = 1; mfac < P.q1k; ++mfac)
        if (mfac % P.p1 != 0) {
            xindex[mfac] = (u32)phi.xs.size();
            phi.xs.push_back(mfac * P.qk); // ascending since qk is a constant factor
        }

    std::vector<u64> gauss((std::size_t)(P.p1 * P.v));
    u64 run = 1;
    for (u64 mval = 0; mval < P.p1 * P.v; ++mval) {
        if (mval % P.p1 != 0) run = numth::mul_mod(run, mval % P.bk, P.bk);
        gauss[(std::size_t)mval] = run;
    }

    std::vector<u32> images((std::size_t)d * P.p1);
    std::vector<std::string> labels;
    morpheng::Coding coding;
    coding.values.resize(d);
    for (u32 a = 0; a < d; ++a) {
        u64 x = phi.xs[a / P.v], z = a % P.v;
        coding.values[a] = (i64)x;
        u64 tpow = numth::pow_mod(P.t, z % P.s, P.bk);
        for (u64 j = 0; j < P.p1; ++j) {
            u64 xj = numth::mul_mod(numth::mul_mod(x, tpow, P.bk),
                                    gauss[(std::size_t)(P.p1 * z + j)], P.bk);
            if (xj % P.qk != 0 || xindex[xj / P.qk] == ~u32(0))
                throw consistency_error("build_phi_tilde: image letter escapes the alphabet");
            u64 zj = (P.p1 * z + j) % P.v;
            images[(std::size_t)a * P.p1 + j] = xindex[xj / P.qk] * (u32)P.v + (u32)zj;
        }
    }
    if (d <= label_threshold) {
        labels.reserve(d);
        for (u32 a = 0; a < d; ++a)
            labels.push_back("(" + std::to_string(phi.xs[a / P.v]) + "," +
                             std::to_string(a % P.v) + ")");
    }
    phi.m = morpheng::make_morphism(d, (u32)P.p1, std::move(images), std::move(labels));
    phi.coding = std::move(coding);
    u64 x0 = numth::mul_mod(P.qk % P.bk, numth::pow_mod(P.t, P.k, P.bk), P.bk);
    phi.start = xindex[x0 / P.qk] * (u32)P.v;
    if (!morpheng::is_prolongable(phi.m, phi.start))
        throw consistency_error("build_phi_tilde: start letter not prolongable");
    return phi;
}

inline PhiTilde build_phi_tilde(u64 b, u32 k, std::size_t cap = default_alphabet_cap) {
    return build_phi_tilde(derive_params(b, k), cap);
}

// First N coded values: via the pair-letter fixed point when it exists and fits, else by
// streaming the triple formula directly.
inline std::vector<u64> beta_prefix(const Params& P, u64 N,
                                    std::size_t cap = default_alphabet_cap) {
    if (N == 0) throw std::domain_error("beta_prefix: N must be >= 1");
    std::vector<u64> out;
    out.reserve((std::size_t)N);
    u64 delta = P.q1k - P.q1k / P.q1;
    if (P.l1 == 1 && (u128)delta * P.v <= cap) {
        PhiTilde phi = build_phi_tilde(P, cap);
        auto word = morpheng::fixed_point_prefix(phi.m, phi.start, N);
        for (u32 a : word) out.push_back((u64)phi.coding.values[a]);
        return out;
    }
    auto table = factdig::GaussTable::build(P.p1, P.K);
    for (u64 n = 0; n < N; ++n) {
        auto [ell, nuv] = factdig::ell_prime_fast(P.p1, P.K, n, table);
        out.push_back(tau_value(P, ell, nuv));
    }
    return out;
}

inline std::vector<u64> beta_prefix(u64 b, u32 k, u64 N,
                                    std::size_t cap = default_alphabet_cap) {
    return beta_prefix(derive_params(b, k), N, cap);
}

struct AgreementReport {
    u64 checked = 0;
    std::vector<u64> on_S_mismatches;  // must be empty
    std::vector<u64> off_S_mismatches; // expected for small n outside S
};

// Compares the coded-formula value against the digit engine for every n < N, split by
// membership in S_{b,k}.
inline AgreementReport verify_agreement(u64 b, u32 k, u64 N) {
    if (N > 1000000) throw std::domain_error("verify_agreement: N must be <= 1e6");
    Params P = derive_params(b, k);
    auto engine = factdig::FastEngine::build(b, k);
    auto table = factdig::GaussTable::build(P.p1, P.K);
    AgreementReport rep;
    rep.checked = N;
    for (u64 n = 0; n < N; ++n) {
        auto [lp, nuv] = factdig::ell_prime_fast(P.p1, P.K, n, table);
        u64 beta = tau_value(P, lp, nuv);
        u64 ell = engine.ell(n);
        if (beta != ell)
            (in_S(P.bf, k, n) ? rep.on_S_mismatches : rep.off_S_mismatches).push_back(n);
    }
    return rep;
}

// Closed-form asymptotic frequency of the digit string a.
inline Rational frequency_formula(const Params& P, u64 a) {
    if (a == 0 || a >= P.bk) throw std::domain_error("frequency_formula: need 1 <= a < b^k");
    if (a % P.b == 0) throw std::domain_error("frequency_formula: a must not be divisible by b");
    if (a % P.qk != 0) return Rational(0);
    u32 nu = (u32)numth::nu(P.p1, a);
    // nu < l1 because b does not divide a; exponent nu - K + 1 <= 0.
    Rational f(1, (i64)((P.p1 - 1) * P.l1));
    return f * Rational(1, (i64)detail::pow_u64(P.p1, P.K - 1 - nu));
}

inline Rational frequency_formula(u64 b, u32 k, u64 a) {
    return frequency_formula(derive_params(b, k), a);
}

struct FrequencyTable {
    u64 b = 0;
    u32 k = 0;
    u64 bk = 0;
    u64 valid_count = 0;             // number of a in [1, b^k) with b not dividing a
    std::map<u64, Rational> nonzero; // every absent valid a has frequency 0
    Rational total;                  // sum over all valid a; must equal 1

    Rational f(u64 a) const {
        auto it = nonzero.find(a);
        return it == nonzero.end() ? Rational(0) : it->second;
    }
};

inline FrequencyTable frequency_table(u64 b, u32 k) {
    Params P = derive_params(b, k);
    FrequencyTable t;
    t.b = b;
    t.k = k;
    t.bk = P.bk;
    t.valid_count = P.bk - P.bk / P.b;
    // Nonzero support: a = m*q^k with p1^l1 not dividing m.
    for (u64 m = 1; m < P.q1k; ++m) {
        if (m % P.q1 == 0) continue;
        u64 a = m * P.qk;
        Rational f = frequency_formula(P, a);
        t.nonzero.emplace(a, f);
        t.total += f;
    }
    return t;
}

namespace detail {

// Sparse strong-connectivity + self-loop check (forward and reverse BFS from the start
// letter), used where the alphabet is too large for the dense primitivity test.
inline bool psi_primitive_sparse(const morpheng::UniformMorphism& m, u32 start) {
    if (m.image(start)[0] != start) return false;
    const u32 d = m.d, L = m.L;
    auto bfs = [&](bool forward) {
        std::vector<u32> radj_off, radj;
        if (!forward) {
            radj_off.assign((std::size_t)d + 1, 0);
            for (u32 aidx = 0; aidx < d; ++aidx)
                for (u32 i = 0; i < L; ++i) ++radj_off[(std::size_t)m.image(aidx)[i] + 1];
            for (u32 aidx = 0; aidx < d; ++aidx) radj_off[(std::size_t)aidx + 1] += radj_off[aidx];
            radj.resize((std::size_t)d * L);
            std::vector<u32> fill(radj_off.begin(), radj_off.end() - 1);
            for (u32 aidx = 0; aidx < d; ++aidx)
                for (u32 i = 0; i < L; ++i) radj[fill[m.image(aidx)[i]]++] = aidx;
        }
        std::vector<bool> seen((std::size_t)d, false);
        std::vector<u32> queue{start};
        seen[start] = true;
        std::size_t head = 0, count = 1;
        while (head < queue.size()) {
            u32 cur = queue[head++];
            if (forward) {
                for (u32 i = 0; i < L; ++i) {
                    u32 nxt = m.image(cur)[i];
                    if (!seen[nxt]) seen[nxt] = true, queue.push_back(nxt), ++count;
                }
            } else {
                for (u32 idx = radj_off[cur]; idx < radj_off[(std::size_t)cur + 1]; ++idx) {
                    u32 nxt = radj[idx];
                    if (!seen[nxt]) seen[nxt] = true, queue.push_back(nxt), ++count;
                }
            }
        }
        return count == d;
    };
    return bfs(true) && bfs(false);
}

} // namespace detail

// Exact coded frequencies from the triple-letter construction. Row sums of the incidence
// matrix all equal p1, so letter frequencies are uniform 1/|alphabet|; aggregation by
// coded value yields the spectrum. Above the cap the row-sum property is verified in
// factored form: every multiplier is a unit mod p^K and the child-position map
// (z,i) -> p*z+i is a bijection onto [0, p*v), so each (x',y',z') has exactly p1
// parents; frequencies then aggregate over the (x,y) marginal.
inline std::map<u64, Rational> spectral_frequencies(u64 b, u32 k,
                                                    std::size_t cap = default_alphabet_cap) {
    Params P = derive_params(b, k);
    u64 phi_count = P.q1k / P.p1 * (P.p1 - 1);
    u128 d128 = (u128)phi_count * P.u * P.v;
    std::map<u64, Rational> out;
    if (d128 <= cap) {
        Psi psi = build_psi(P.p1, P.K, P.u, P.v, cap);
        morpheng::Coding tau = build_tau(P, psi);
        const u32 d = psi.m.d;
        // The dense primitivity test is quadratic-with-squarings; beyond a few hundred
        // letters the sparse reachability check is equivalent and far cheaper.
        constexpr u32 dense_cap = 512;
        if (d <= dense_cap) {
            auto M = morpheng::incidence_matrix(psi.m);
            for (u32 i = 0; i < d; ++i) {
                i64 row = 0;
                for (u32 j = 0; j < d; ++j) row += M.at(i, j);
                if (row != (i64)P.p1)
                    throw consistency_error("spectral_frequencies: incidence row sum != p1");
            }
            if (!morpheng::is_primitive(M))
                throw consistency_error("spectral_frequencies: psi not primitive");
            auto fv = morpheng::pf_frequencies(M);
            if (!fv.exact)
                throw consistency_error("spectral_frequencies: expected exact uniform vector");
            auto coded = morpheng::coded_frequencies(fv, tau);
            for (auto& [val, f] : coded.ratio) out[(u64)val] = f;
            return out;
        }
        // Too large for a dense matrix: count occurrences directly.
        std::vector<u32> occ((std::size_t)d, 0);
        for (std::size_t idx = 0; idx < psi.m.images.size(); ++idx) ++occ[psi.m.images[idx]];
        for (u32 a = 0; a < d; ++a)
            if (occ[a] != P.p1)
                throw consistency_error("spectral_frequencies: incidence row sum != p1");
        if (!detail::psi_primitive_sparse(psi.m, psi.start))
            throw consistency_error("spectral_frequencies: psi not primitive");
        for (u32 a = 0; a < d; ++a) out[(u64)tau.values[a]] += Rational(1, (i64)d);
        return out;
    }
    // Factored verification: multipliers (p*z+i)-th partial products consist of non-
    // multiples of p only, hence are units mod p^K; check numerically for all arguments.
    u64 run = 1;
    for (u64 mval = 0; mval < P.p1 * P.v; ++mval) {
        if (mval % P.p1 != 0) run = numth::mul_mod(run, mval % P.q1k, P.q1k);
        if (std::gcd(run, P.p1) != 1)
            throw consistency_error("spectral_frequencies: non-unit multiplier in factored audit");
    }
    if ((u64)(d128 / P.v) != phi_count * P.u)
        throw consistency_error("spectral_frequencies: marginal size mismatch");
    i64 dm = (i64)(phi_count * P.u); // letters per coded (x,y) cell count = v; 1/d * v = 1/dm
    for (u64 x = 1; x < P.q1k; ++x) {
        if (x % P.p1 == 0) continue;
        for (u64 y = 0; y < P.u; ++y) out[tau_value(P, x, y)] += Rational(1, dm);
    }
    return out;
}

// Exact share of n < N with ell_{b,k}((c n + d)!) = a.
inline Rational empirical_density(u64 b, u32 k, u64 a, u64 c, u64 d, u64 N,
                                  unsigned threads = 1) {
    if (N == 0 || N > 10000000) throw std::domain_error("empirical_density: need 1 <= N <= 1e7");
    if (c == 0) throw std::domain_error("empirical_density: c must be >= 1");
    Params P = derive_params(b, k);
    if (a == 0 || a >= P.bk || a % P.b == 0)
        throw std::domain_error("empirical_density: need 1 <= a < b^k with b not dividing a");
    if ((u128)c * (N - 1) + d > ~u64(0)) throw std::overflow_error("empirical_density: c*N+d overflows");
    auto engine = factdig::FastEngine::build(b, k);
    if (threads == 0) threads = 1;
    threads = (unsigned)std::min<u64>(threads, N);
    std::vector<u64> counts(threads, 0);
    u64 chunk = (N + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            u64 lo = (u64)w * chunk, hi = std::min(N, lo + chunk);
            u64 cnt = 0;
            for (u64 n = lo; n < hi; ++n)
                if (engine.ell(c * n + d) == a) ++cnt;
            counts[w] = cnt;
        });
    }
    for (auto& th : pool) th.join();
    u64 total = 0;
    for (u64 cnt : counts) total += cnt;
    return Rational((i64)total, (i64)N);
}

// Diagnostic: positions (z, j) where the shortcut multiplier (-1)^z * j! differs from the
// true partial product (p1*z+j)-th, mod q1^k. Empty means the shortcut would be valid.
inline std::vector<std::pair<u64, u64>> diagnose_simple_form(u64 b, u32 k) {
    Params P = derive_params(b, k);
    if (P.l1 != 1) throw std::domain_error("diagnose_simple_form: requires l1 = 1");
    std::vector<std::pair<u64, u64>> diffs;
    u64 run = 1;
    std::vector<u64> gauss((std::size_t)(P.p1 * P.v));
    for (u64 mval = 0; mval < P.p1 * P.v; ++mval) {
        if (mval % P.p1 != 0) run = numth::mul_mod(run, mval % P.q1k, P.q1k);
        gauss[(std::size_t)mval] = run;
    }
    u64 minus1 = P.q1k - 1;
    for (u64 z = 0; z < P.v; ++z) {
        u64 sign = z % 2 == 0 ? 1 : minus1;
        u64 fact = 1;
        for (u64 j = 0; j < P.p1; ++j) {
            if (j > 0) fact = numth::mul_mod(fact, j % P.q1k, P.q1k);
            if (numth::mul_mod(sign, fact, P.q1k) != gauss[(std::size_t)(P.p1 * z + j)])
                diffs.emplace_back(z, j);
        }
    }
    return diffs;
}

} // namespace factseq::constructs
