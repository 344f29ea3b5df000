#pragma once

#include <cstdint>
#include <thread>
#include <vector>

#include "numth.hpp"

namespace factseq::factdig {

using numth::u128;
using numth::u32;
using numth::u64;
using numth::BaseFactorization;
using numth::Modulus;

struct FactorialDigitQuery {
    u64 b;
    u32 k;
    u64 n;
};

inline constexpr std::size_t default_table_cap = std::size_t(1) << 26;
inline constexpr u64 oracle_n_limit = 10000;
inline constexpr u64 stream_n_limit = 100000000;

// Cached Gauss factorials (j)_p! mod p^K for j < p^K. (m)_p! for arbitrary m reduces to
// sign^(m div p^K) * (m mod p^K)_p!, the sign being that of the full-period product:
// +1 when p = 2 and K != 2, -1 otherwise. Above the entry cap the table stays empty and
// lookups fall back to a direct scan of the residual range.
struct GaussTable {
    u64 p = 0;
    u32 K = 0;
    u64 pK = 0;
    bool sign_plus = false;
    std::vector<u64> table;

    static GaussTable build(u64 p, u32 K, std::size_t cap = default_table_cap) {
        if (!numth::is_prime(p)) throw std::domain_error("GaussTable: p must be prime");
        if (K == 0) throw std::domain_error("GaussTable: K must be >= 1");
        GaussTable t;
        t.p = p;
        t.K = K;
        t.pK = numth::checked_pow(p, K);
        t.sign_plus = (p == 2 && K != 2);
        if (t.pK <= cap) {
            t.table.resize((std::size_t)t.pK);
            u64 acc = 1 % t.pK;
            t.table[0] = acc;
            for (u64 j = 1; j < t.pK; ++j) {
                if (j % p) acc = numth::mul_mod(acc, j, t.pK);
                t.table[(std::size_t)j] = acc;
            }
        }
        return t;
    }

    // (m)_p! mod p^K for any m >= 0.
    u64 gauss(u64 m) const {
        u64 whole = m / pK, rest = m % pK;
        u64 r;
        if (!table.empty()) {
            r = table[(std::size_t)rest];
        } else {
            r = 1 % pK;
            for (u64 j = 1; j <= rest; ++j)
                if (j % p) r = numth::mul_mod(r, j, pK);
        }
        if (!sign_plus && (whole & 1)) r = (pK - r) % pK;
        return r;
    }
};

// ell_{p,K}(n!) and nu_p(n!) by unrolling the digit recurrence
// ell_{p,K}((pn+i)!) = ell_{p,K}(n!) * (pn+i)_p! over the base-p digits of n.
inline std::pair<u64, u64> ell_prime_fast(u64 p, u32 K, u64 n, const GaussTable& tbl) {
    if (tbl.p != p || tbl.K != K) throw std::domain_error("ell_prime_fast: mismatched table");
    u64 ell = 1 % tbl.pK, nu = 0;
    for (u64 m = n; m; m /= p) {
        ell = numth::mul_mod(ell, tbl.gauss(m), tbl.pK);
        nu += m / p;
    }
    return {ell, nu};
}

// nu_b(n!) = min_i floor(nu_{p_i}(n!) / l_i).
inline u64 nu_base_factorial(const BaseFactorization& bf, u64 n) {
    u64 best = ~u64(0);
    for (auto [p, l] : bf.factors) best = std::min(best, numth::nu_factorial(p, n) / l);
    return best;
}

// Precomputed data for combining per-prime unit parts into ell_{b,k}(n!):
// moduli M_i = p_i^{k l_i} and multiplicative orders of the other primes mod M_i,
// so that giant exponents l_j * nu_b reduce modulo the order.
struct AssemblyPlan {
    BaseFactorization bf;
    u32 k = 0;
    u64 bk = 0;
    struct PerPrime {
        u64 M;
        u32 K;
        u64 l;
        std::vector<u64> other_p;
        std::vector<u64> other_l;
        std::vector<u64> other_ord;
    };
    std::vector<PerPrime> parts;

    static AssemblyPlan build(const BaseFactorization& bf, u32 k) {
        AssemblyPlan plan;
        plan.bf = bf;
        plan.k = k;
        plan.bk = numth::checked_pow(bf.b, k);
        for (std::size_t i = 0; i < bf.factors.size(); ++i) {
            PerPrime pp;
            pp.K = bf.factors[i].l * k;
            pp.M = numth::checked_pow(bf.factors[i].p, pp.K);
            pp.l = bf.factors[i].l;
            for (std::size_t j = 0; j < bf.factors.size(); ++j) {
                if (j == i) continue;
                pp.other_p.push_back(bf.factors[j].p);
                pp.other_l.push_back(bf.factors[j].l);
                pp.other_ord.push_back(numth::mult_order(bf.factors[j].p, Modulus(pp.M)));
            }
            plan.parts.push_back(std::move(pp));
        }
        return plan;
    }
};

// units[i] = ell_{p_i, k l_i}(n!), nus[i] = nu_{p_i}(n!). Residue of n!/b^{nu_b} mod M_i is
// units[i] * p_i^{e_i} * inv(prod_{j!=i} p_j^{l_j nu_b}) with e_i = nus[i] - l_i * nu_b;
// e_i >= k l_i short-circuits to 0.
inline u64 assemble_prime_parts(const AssemblyPlan& plan, const std::vector<u64>& units,
                                const std::vector<u64>& nus) {
    u64 nu_b = ~u64(0);
    for (std::size_t i = 0; i < plan.parts.size(); ++i)
        nu_b = std::min(nu_b, nus[i] / plan.parts[i].l);
    std::vector<std::pair<u64, u64>> residues;
    for (std::size_t i = 0; i < plan.parts.size(); ++i) {
        const auto& pp = plan.parts[i];
        u64 e = nus[i] - pp.l * nu_b;
        u64 r = 0;
        if (e < pp.K) {
            r = numth::mul_mod(units[i], numth::pow_mod(plan.bf.factors[i].p, e, pp.M), pp.M);
            u64 div = 1 % pp.M;
            for (std::size_t j = 0; j < pp.other_p.size(); ++j) {
                u64 exp = (u64)((u128)pp.other_l[j] * nu_b % pp.other_ord[j]);
                div = numth::mul_mod(div, numth::pow_mod(pp.other_p[j], exp, pp.M), pp.M);
            }
            if (pp.M > 1) r = numth::mul_mod(r, numth::mod_inverse(div, Modulus(pp.M)), pp.M);
        }
        residues.push_back({r, pp.M});
    }
    return numth::crt(residues);
}

namespace detail {

// Per-prime unit-part product and valuation count over j in [lo, hi].
inline void scan_range(const AssemblyPlan& plan, u64 lo, u64 hi, std::vector<u64>& units,
                       std::vector<u64>& nus) {
    const std::size_t r = plan.parts.size();
    units.assign(r, 1);
    nus.assign(r, 0);
    for (std::size_t i = 0; i < r; ++i) units[i] %= plan.parts[i].M;
    for (u64 j = lo; j <= hi; ++j) {
        for (std::size_t i = 0; i < r; ++i) {
            u64 p = plan.bf.factors[i].p, m = j;
            while (m % p == 0) {
                m /= p;
                ++nus[i];
            }
            units[i] = numth::mul_mod(units[i], m % plan.parts[i].M, plan.parts[i].M);
        }
    }
}

} // namespace detail

// O(n) scan: one pass over [1, n] accumulating per-prime unit parts and valuations,
// then CRT assembly. Deterministic for any thread count.
inline u64 ell_stream(FactorialDigitQuery q, unsigned threads = 1) {
    if (q.n > stream_n_limit) throw resource_error("ell_stream: n exceeds 10^8");
    numth::checked_pow(q.b, q.k);
    if (q.n < 2) return 1;
    auto plan = AssemblyPlan::build(numth::factorize(q.b), q.k);
    const std::size_t r = plan.parts.size();
    std::vector<u64> units, nus;
    if (threads <= 1 || q.n < (u64(1) << 16)) {
        detail::scan_range(plan, 1, q.n, units, nus);
    } else {
        unsigned T = threads;
        std::vector<std::vector<u64>> cu(T), cn(T);
        std::vector<std::thread> pool;
        u64 chunk = (q.n + T - 1) / T;
        for (unsigned w = 0; w < T; ++w) {
            u64 lo = 1 + (u64)w * chunk;
            u64 hi = std::min(q.n, lo + chunk - 1);
            if (lo > hi) continue;
            pool.emplace_back([&, w, lo, hi] { detail::scan_range(plan, lo, hi, cu[w], cn[w]); });
        }
        for (auto& t : pool) t.join();
        units.assign(r, 1);
        nus.assign(r, 0);
        for (unsigned w = 0; w < T; ++w) {
            if (cu[w].empty()) continue;
            for (std::size_t i = 0; i < r; ++i) {
                units[i] = numth::mul_mod(units[i], cu[w][i], plan.parts[i].M);
                nus[i] += cn[w][i];
            }
        }
    }
    return assemble_prime_parts(plan, units, nus);
}

// Incremental streaming state for generating ell_{b,k}(0!), ell_{b,k}(1!), ... in order.
struct StreamCursor {
    AssemblyPlan plan;
    u64 n = 0;
    std::vector<u64> units, nus;

    explicit StreamCursor(u64 b, u32 k) : plan(AssemblyPlan::build(numth::factorize(b), k)) {
        units.assign(plan.parts.size(), 1);
        nus.assign(plan.parts.size(), 0);
        for (std::size_t i = 0; i < plan.parts.size(); ++i) units[i] %= plan.parts[i].M;
    }
    void advance() {
        ++n;
        for (std::size_t i = 0; i < plan.parts.size(); ++i) {
            u64 p = plan.bf.factors[i].p, m = n;
            while (m % p == 0) {
                m /= p;
                ++nus[i];
            }
            units[i] = numth::mul_mod(units[i], m % plan.parts[i].M, plan.parts[i].M);
        }
    }
    u64 value() const {
        if (n < 2) return 1;
        return assemble_prime_parts(plan, units, nus);
    }
};

// Big-integer ground truth.
inline u64 ell_oracle(FactorialDigitQuery q) {
    if (q.n > oracle_n_limit) throw resource_error("ell_oracle: n exceeds 10^4");
    numth::bigint f = 1;
    for (u64 j = 2; j <= q.n; ++j) f *= j;
    return numth::last_nonzero_value(q.b, q.k, f);
}

// O(r log n) per query once tables are built.
struct FastEngine {
    AssemblyPlan plan;
    std::vector<GaussTable> tables;

    static FastEngine build(u64 b, u32 k, std::size_t table_cap = default_table_cap) {
        FastEngine e;
        e.plan = AssemblyPlan::build(numth::factorize(b), k);
        for (std::size_t i = 0; i < e.plan.parts.size(); ++i)
            e.tables.push_back(
                GaussTable::build(e.plan.bf.factors[i].p, e.plan.parts[i].K, table_cap));
        return e;
    }
    bool tables_materialized() const {
        for (const auto& t : tables)
            if (t.table.empty()) return false;
        return true;
    }
    u64 ell(u64 n) const {
        if (n < 2) return 1;
        std::vector<u64> units(plan.parts.size()), nus(plan.parts.size());
        for (std::size_t i = 0; i < plan.parts.size(); ++i) {
            auto [u, v] = ell_prime_fast(plan.bf.factors[i].p, plan.parts[i].K, n, tables[i]);
            units[i] = u;
            nus[i] = v;
        }
        return assemble_prime_parts(plan, units, nus);
    }
};

inline u64 ell_composite_fast(FactorialDigitQuery q, const BaseFactorization& bf,
                              const std::vector<GaussTable>& tables) {
    if (q.n < 2) {
        numth::checked_pow(q.b, q.k);
        return 1;
    }
    auto plan = AssemblyPlan::build(bf, q.k);
    if (tables.size() != plan.parts.size())
        throw std::domain_error("ell_composite_fast: one table per prime required");
    std::vector<u64> units(plan.parts.size()), nus(plan.parts.size());
    for (std::size_t i = 0; i < plan.parts.size(); ++i) {
        auto [u, v] = ell_prime_fast(bf.factors[i].p, plan.parts[i].K, q.n, tables[i]);
        units[i] = u;
        nus[i] = v;
    }
    return assemble_prime_parts(plan, units, nus);
}

} // namespace factseq::factdig
