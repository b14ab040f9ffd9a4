#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "urnlab/errors.hpp"

namespace urnlab {

/// A sample of s balls from k colors: k nonnegative parts summing to s,
/// together with its 0-based position in the canonical ordering (largest
/// sample first).
struct Composition {
    std::vector<int> parts;
    int k = 0;
    int s = 0;
    long long rank = 0;

    bool operator==(const Composition& other) const {
        return parts == other.parts;
    }
};

namespace detail {

inline __int128 checked_mul(__int128 a, __int128 b) {
    if (a == 0 || b == 0) return 0;
    __int128 r = a * b;
    if (r / b != a) throw std::overflow_error("integer overflow in combinatorics");
    return r;
}

} // namespace detail

/// Exact binomial coefficient C(n, r) in 128-bit intermediate arithmetic.
inline long long binomial(long long n, long long r) {
    if (r < 0 || r > n) return 0;
    if (r > n - r) r = n - r;
    __int128 num = 1;
    for (long long i = 1; i <= r; ++i) {
        num = detail::checked_mul(num, n - r + i);
        num /= i; // product of i consecutive integers is divisible by i!
    }
    if (num > static_cast<__int128>(INT64_MAX))
        throw std::overflow_error("binomial exceeds 64 bits");
    return static_cast<long long>(num);
}

/// Falling factorial (z)_r = z(z-1)...(z-r+1); (z)_0 = 1.
inline double falling_factorial(double z, int r) {
    if (r < 0) throw std::invalid_argument("falling_factorial: r must be >= 0");
    double p = 1.0;
    for (int i = 0; i < r; ++i) p *= (z - i);
    return p;
}

/// Integer falling factorial, exact.
inline __int128 falling_factorial_int(long long z, int r) {
    if (r < 0) throw std::invalid_argument("falling_factorial_int: r must be >= 0");
    __int128 p = 1;
    for (int i = 0; i < r; ++i) p = detail::checked_mul(p, z - i);
    return p;
}

/// Multinomial coefficient s! / (c_1! ... c_k!).
inline long long multinomial(int s, const Composition& c) {
    int total = std::accumulate(c.parts.begin(), c.parts.end(), 0);
    if (total != s)
        throw std::invalid_argument("multinomial: parts sum to " + std::to_string(total) +
                                    ", expected " + std::to_string(s));
    __int128 r = 1;
    int drawn = 0;
    for (int ci : c.parts) {
        // C(drawn + ci, ci) accumulated as a product of binomials
        r = detail::checked_mul(r, binomial(drawn + ci, ci));
        drawn += ci;
    }
    if (r > static_cast<__int128>(INT64_MAX))
        throw std::overflow_error("multinomial exceeds 64 bits");
    return static_cast<long long>(r);
}

/// Number of compositions of s into k parts, C(s+k-1, s).
inline long long composition_count(int k, int s) {
    return binomial(s + k - 1, s);
}

/// Rank of a sample in the canonical order: number of samples preceding it.
/// The order lists first parts descending, ties broken by later parts.
inline long long composition_rank(const std::vector<int>& parts) {
    const int k = static_cast<int>(parts.size());
    int rem = std::accumulate(parts.begin(), parts.end(), 0);
    long long rank = 0;
    for (int i = 0; i + 1 < k; ++i) {
        // samples agreeing on parts[0..i-1] with a larger i-th part come first
        for (int v = parts[i] + 1; v <= rem; ++v)
            rank += composition_count(k - i - 1, rem - v);
        rem -= parts[i];
    }
    return rank;
}

/// Successor in the canonical order; returns false at the last sample.
inline bool next_composition(std::vector<int>& parts) {
    const int k = static_cast<int>(parts.size());
    int j = -1;
    for (int i = k - 2; i >= 0; --i) {
        if (parts[i] > 0) { j = i; break; }
    }
    if (j < 0) return false;
    int tail = 0;
    for (int i = j + 1; i < k; ++i) tail += parts[i];
    parts[j] -= 1;
    parts[j + 1] = tail + 1;
    for (int i = j + 2; i < k; ++i) parts[i] = 0;
    return true;
}

/// All samples of size s on k colors, canonically ordered from s*e_1
/// down to s*e_k.
inline std::vector<Composition> enumerate_compositions(int k, int s) {
    if (k < 1 || s < 1)
        throw std::invalid_argument("enumerate_compositions: need k >= 1 and s >= 1");
    std::vector<Composition> out;
    out.reserve(static_cast<size_t>(composition_count(k, s)));
    std::vector<int> cur(k, 0);
    cur[0] = s;
    long long rank = 0;
    do {
        out.push_back(Composition{cur, k, s, rank++});
    } while (next_composition(cur));
    return out;
}

} // namespace urnlab
