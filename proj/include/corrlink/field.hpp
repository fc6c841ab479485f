#pragma once

#include <cstdint>
#include <stdexcept>

namespace corrlink {

namespace detail {

inline uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(a) * b) % m);
}

inline uint64_t powmod_u64(uint64_t base, uint64_t exp, uint64_t m) {
    uint64_t acc = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) acc = mulmod_u64(acc, base, m);
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    return acc;
}

/* Deterministic Miller-Rabin for 64-bit integers. */
inline bool is_prime_u64(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                       23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                       23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod_u64(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

} // namespace detail

/* Arithmetic in the prime field F_q. The default modulus 2^31 - 1 reduces
 * with a shift-and-fold instead of a 128-bit divide. */
class PrimeField {
public:
    static constexpr uint64_t kMersenne31 = (1ull << 31) - 1;

    explicit PrimeField(uint64_t modulus = kMersenne31) : q_(modulus) {
        if (modulus < 2 || modulus >= (1ull << 62) || !detail::is_prime_u64(modulus))
            throw std::domain_error("field modulus must be a prime in [2, 2^62)");
        mersenne31_ = (modulus == kMersenne31);
    }

    uint64_t modulus() const { return q_; }

    uint64_t add(uint64_t a, uint64_t b) const {
        uint64_t s = a + b;
        return s >= q_ ? s - q_ : s;
    }

    uint64_t sub(uint64_t a, uint64_t b) const {
        return a >= b ? a - b : a + q_ - b;
    }

    uint64_t neg(uint64_t a) const { return a == 0 ? 0 : q_ - a; }

    uint64_t mul(uint64_t a, uint64_t b) const {
        if (mersenne31_) {
            uint64_t t = a * b; // a, b < 2^31 so no overflow
            uint64_t r = (t & kMersenne31) + (t >> 31);
            if (r >= kMersenne31) r -= kMersenne31;
            return r;
        }
        return detail::mulmod_u64(a, b, q_);
    }

    uint64_t pow(uint64_t base, uint64_t exp) const {
        uint64_t acc = 1 % q_;
        base %= q_;
        while (exp) {
            if (exp & 1) acc = mul(acc, base);
            base = mul(base, base);
            exp >>= 1;
        }
        return acc;
    }

    uint64_t inv(uint64_t a) const {
        if (a == 0) throw std::domain_error("division by zero in prime field");
        return pow(a, q_ - 2);
    }

    uint64_t reduce(uint64_t a) const { return a % q_; }

    bool operator==(const PrimeField& other) const { return q_ == other.q_; }

private:
    uint64_t q_;
    bool mersenne31_;
};

} // namespace corrlink
