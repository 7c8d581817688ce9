#pragma once

#include <cstdint>
#include <compare>
#include <string>
#include <vector>

namespace seprank {

// Arbitrary-precision signed integer, sign-magnitude over 32-bit limbs
// (little endian, no leading zero limbs; zero has an empty limb vector).
class BigInt {
public:
    BigInt() = default;
    BigInt(long long v);           // NOLINT(google-explicit-constructor)
    BigInt(int v) : BigInt(static_cast<long long>(v)) {}  // NOLINT
    static BigInt from_u64(std::uint64_t v);
    static BigInt from_string(const std::string& dec);

    bool is_zero() const { return limbs_.empty(); }
    int sign() const { return sign_; }
    bool is_negative() const { return sign_ < 0; }

    BigInt operator-() const;
    BigInt abs() const;

    BigInt& operator+=(const BigInt& o);
    BigInt& operator-=(const BigInt& o);
    BigInt& operator*=(const BigInt& o);
    friend BigInt operator+(BigInt a, const BigInt& b) { return a += b; }
    friend BigInt operator-(BigInt a, const BigInt& b) { return a -= b; }
    friend BigInt operator*(BigInt a, const BigInt& b) { return a *= b; }

    // Truncated division: quotient rounds toward zero, remainder has the
    // sign of the dividend and |r| < |divisor|.
    static void divmod(const BigInt& num, const BigInt& den, BigInt& q, BigInt& r);
    friend BigInt operator/(const BigInt& a, const BigInt& b);
    friend BigInt operator%(const BigInt& a, const BigInt& b);

    BigInt pow(std::uint64_t e) const;
    static BigInt gcd(BigInt a, BigInt b);  // non-negative result

    std::strong_ordering operator<=>(const BigInt& o) const;
    bool operator==(const BigInt& o) const = default;

    // Comparison of magnitudes only.
    int compare_abs(const BigInt& o) const;

    std::string to_string() const;
    double to_double() const;
    // Number of significant bits of the magnitude (0 for zero).
    std::size_t bit_length() const;
    // Exact conversion when the value fits, otherwise throws.
    long long to_ll() const;
    bool fits_ll() const;

private:
    int sign_ = 0;  // -1, 0, +1
    std::vector<std::uint32_t> limbs_;

    void normalize();
    static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b);
    static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b);
    static std::vector<std::uint32_t> mul_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b);
    static int cmp_mag(const std::vector<std::uint32_t>& a,
                       const std::vector<std::uint32_t>& b);
    static void divmod_mag(const std::vector<std::uint32_t>& u,
                           const std::vector<std::uint32_t>& v,
                           std::vector<std::uint32_t>& q,
                           std::vector<std::uint32_t>& r);
};

}  // namespace seprank
