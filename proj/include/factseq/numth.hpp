#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"

namespace factseq::numth {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;
using bigint = boost::multiprecision::cpp_int;

// All moduli stay below 2^63 so a*b fits in 128 bits with headroom.
inline constexpr u64 modulus_limit = u64(1) << 63;

struct Modulus {
    u64 value;
    explicit Modulus(u64 v) : value(v) {
        if (v < 2 || v >= modulus_limit)
            throw std::domain_error("Modulus: value must be in [2, 2^63)");
    }
};

inline u64 mul_mod(u64 a, u64 b, u64 m) { return (u64)((u128)a * b % m); }

inline u64 pow_mod(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mul_mod(r, a, m);
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    return r;
}

// b^k, rejecting results >= 2^63.
inline u64 checked_pow(u64 b, u32 k) {
    u128 r = 1;
    for (u32 i = 0; i < k; ++i) {
        r *= b;
        if (r >= modulus_limit) throw std::domain_error("checked_pow: b^k >= 2^63");
    }
    return (u64)r;
}

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    // Deterministic witness set for all n < 2^64.
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < r; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

namespace detail {

inline u64 pollard_brent(u64 n) {
    if ((n & 1) == 0) return 2;
    u64 x0 = 2, c = 1;
    while (true) {
        u64 x = x0, y = x0, d = 1;
        u64 q = 1;
        int lam = 1;
        while (d == 1) {
            y = x;
            for (int i = 0; i < lam; ++i) x = (u64)(((u128)x * x + c) % n);
            for (int i = 0; i < lam && d == 1; i += 128) {
                u64 ys = x;
                int lim = std::min(lam - i, 128);
                for (int j = 0; j < lim; ++j) {
                    x = (u64)(((u128)x * x + c) % n);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                d = std::gcd(q, n);
                if (d == n) {
                    // Backtrack one step at a time.
                    d = 1;
                    x = ys;
                    do {
                        x = (u64)(((u128)x * x + c) % n);
                        d = std::gcd(x > y ? x - y : y - x, n);
                    } while (d == 1);
                    break;
                }
            }
            lam *= 2;
        }
        if (d != n) return d;
        ++c;
        ++x0;
    }
}

inline void factor_into(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime(n)) {
        out.push_back(n);
        return;
    }
    u64 d = pollard_brent(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

} // namespace detail

struct PrimePower {
    u64 p;
    u32 l;
    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

// Factors ordered so l_1(p_1-1) >= ... >= l_r(p_r-1), ties broken by descending prime;
// in particular p_1 is the largest prime among those maximizing l(p-1).
struct BaseFactorization {
    u64 b;
    std::vector<PrimePower> factors;
};

inline BaseFactorization factorize(u64 b) {
    if (b < 2 || b >= modulus_limit) throw std::domain_error("factorize: b must be in [2, 2^63)");
    BaseFactorization bf;
    bf.b = b;
    u64 m = b;
    for (u64 d = 2; d < 1000000 && d * d <= m; d == 2 ? d = 3 : d += 2) {
        if (m % d) continue;
        u32 l = 0;
        while (m % d == 0) {
            m /= d;
            ++l;
        }
        bf.factors.push_back({d, l});
    }
    if (m > 1) {
        std::vector<u64> rest;
        detail::factor_into(m, rest);
        std::sort(rest.begin(), rest.end());
        for (std::size_t i = 0; i < rest.size();) {
            std::size_t j = i;
            while (j < rest.size() && rest[j] == rest[i]) ++j;
            bf.factors.push_back({rest[i], (u32)(j - i)});
            i = j;
        }
    }
    std::sort(bf.factors.begin(), bf.factors.end(), [](const PrimePower& a, const PrimePower& c) {
        u128 wa = (u128)a.l * (a.p - 1), wc = (u128)c.l * (c.p - 1);
        if (wa != wc) return wa > wc;
        return a.p > c.p;
    });
    return bf;
}

inline u64 nu(u64 c, u64 m) {
    if (c < 2) throw std::domain_error("nu: c must be >= 2");
    if (m == 0) throw std::domain_error("nu: valuation of 0 is infinite");
    u64 v = 0;
    while (m % c == 0) {
        m /= c;
        ++v;
    }
    return v;
}

inline u64 digit_sum(u64 p, u64 n) {
    if (p < 2) throw std::domain_error("digit_sum: base must be >= 2");
    u64 s = 0;
    while (n) {
        s += n % p;
        n /= p;
    }
    return s;
}

// Legendre: nu_p(n!) = sum_{i>=1} floor(n/p^i) = (n - s_p(n))/(p-1).
inline u64 nu_factorial(u64 p, u64 n) {
    u64 s = 0;
    while (n) {
        n /= p;
        s += n;
    }
    return s;
}

inline u64 mod_inverse(u64 a, Modulus m) {
    std::int64_t r0 = (std::int64_t)m.value, r1 = (std::int64_t)(a % m.value);
    std::int64_t t0 = 0, t1 = 1;
    while (r1) {
        std::int64_t q = r0 / r1;
        r0 -= q * r1;
        std::swap(r0, r1);
        t0 -= q * t1;
        std::swap(t0, t1);
    }
    if (r0 != 1) throw std::domain_error("mod_inverse: arguments not coprime");
    if (t0 < 0) t0 += (std::int64_t)m.value;
    return (u64)t0;
}

namespace detail {

// Carmichael function of m from its factorization.
inline u64 carmichael(u64 m) {
    auto bf = factorize(m);
    u64 lam = 1;
    for (auto [p, l] : bf.factors) {
        u64 contrib;
        if (p == 2)
            contrib = l == 1 ? 1 : l == 2 ? 2 : u64(1) << (l - 2);
        else
            contrib = checked_pow(p, l - 1) * (p - 1);
        lam = std::lcm(lam, contrib);
    }
    return lam;
}

} // namespace detail

inline u64 mult_order(u64 a, Modulus m) {
    a %= m.value;
    if (std::gcd(a, m.value) != 1) throw std::domain_error("mult_order: arguments not coprime");
    u64 e = detail::carmichael(m.value);
    std::vector<u64> primes;
    detail::factor_into(e, primes);
    std::sort(primes.begin(), primes.end());
    primes.erase(std::unique(primes.begin(), primes.end()), primes.end());
    for (u64 f : primes) {
        while (e % f == 0 && pow_mod(a, e / f, m.value) == 1) e /= f;
    }
    return e;
}

// Residues (r_i mod m_i) with pairwise coprime moduli, product below 2^63.
inline u64 crt(const std::vector<std::pair<u64, u64>>& residues) {
    if (residues.empty()) throw std::domain_error("crt: empty system");
    u64 r = 0, m = 1;
    for (auto [ri, mi] : residues) {
        Modulus mod(mi);
        if (std::gcd(m, mi) != 1) throw std::domain_error("crt: moduli not pairwise coprime");
        if ((u128)m * mi >= modulus_limit) throw std::domain_error("crt: modulus product >= 2^63");
        // r' = r + m * ((ri - r) * m^-1 mod mi)
        u64 diff = ((ri % mi) + mi - r % mi) % mi;
        u64 mult = mul_mod(diff, mod_inverse(m, mod), mi);
        r += m * mult;
        m *= mi;
    }
    return r;
}

// ell_{b,k}(m) = (m / b^{nu_b(m)}) mod b^k for arbitrary-precision m >= 1.
inline u64 last_nonzero_value(u64 b, u32 k, const bigint& m_in) {
    if (b < 2) throw std::domain_error("last_nonzero_value: b must be >= 2");
    u64 bk = checked_pow(b, k);
    if (m_in == 0) throw std::domain_error("last_nonzero_value: m must be >= 1");
    bigint m = m_in;
    // Strip b-factors in chunks of the largest word-sized power of b.
    u64 chunk = b;
    u32 w = 1;
    while ((u128)chunk * b < modulus_limit) {
        chunk *= b;
        ++w;
    }
    while (true) {
        bigint quo, rem;
        boost::multiprecision::divide_qr(m, bigint(chunk), quo, rem);
        if (rem != 0) break;
        m = quo;
    }
    while (m % b == 0) m /= b;
    return (u64)(m % bk);
}

inline u64 last_nonzero_value(u64 b, u32 k, u64 m) {
    if (b < 2) throw std::domain_error("last_nonzero_value: b must be >= 2");
    u64 bk = checked_pow(b, k);
    if (m == 0) throw std::domain_error("last_nonzero_value: m must be >= 1");
    while (m % b == 0) m /= b;
    return m % bk;
}

// Gauss factorial n_c! mod m: product of j in [1, n] coprime to c.
inline u64 gauss_factorial_mod(u64 n, u64 c, Modulus m) {
    if (c < 2) throw std::domain_error("gauss_factorial_mod: c must be >= 2");
    std::vector<u64> primes;
    for (auto& pp : factorize(c).factors) primes.push_back(pp.p);
    u64 r = 1 % m.value;
    for (u64 j = 1; j <= n; ++j) {
        bool coprime = true;
        for (u64 p : primes) {
            if (j % p == 0) {
                coprime = false;
                break;
            }
        }
        if (coprime) r = mul_mod(r, j % m.value, m.value);
    }
    return r;
}

} // namespace factseq::numth
