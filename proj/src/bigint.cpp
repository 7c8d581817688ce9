#include "seprank/bigint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seprank {

namespace {
constexpr std::uint64_t kBase = 1ull << 32;
}

BigInt::BigInt(long long v) {
    if (v == 0) return;
    sign_ = v < 0 ? -1 : 1;
    // Avoid UB on LLONG_MIN by going through unsigned.
    std::uint64_t m = v < 0 ? ~static_cast<std::uint64_t>(v) + 1 : static_cast<std::uint64_t>(v);
    limbs_.push_back(static_cast<std::uint32_t>(m & 0xffffffffu));
    if (m >> 32) limbs_.push_back(static_cast<std::uint32_t>(m >> 32));
}

BigInt BigInt::from_u64(std::uint64_t v) {
    BigInt r;
    if (v == 0) return r;
    r.sign_ = 1;
    r.limbs_.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    if (v >> 32) r.limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
    return r;
}

void BigInt::normalize() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
    if (limbs_.empty()) sign_ = 0;
}

int BigInt::cmp_mag(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    }
    return 0;
}

std::vector<std::uint32_t> BigInt::add_mag(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
    const auto& lo = a.size() >= b.size() ? b : a;
    const auto& hi = a.size() >= b.size() ? a : b;
    std::vector<std::uint32_t> out(hi.size() + 1, 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < hi.size(); ++i) {
        std::uint64_t s = carry + hi[i] + (i < lo.size() ? lo[i] : 0u);
        out[i] = static_cast<std::uint32_t>(s);
        carry = s >> 32;
    }
    out[hi.size()] = static_cast<std::uint32_t>(carry);
    while (!out.empty() && out.back() == 0) out.pop_back();
    return out;
}

// Requires |a| >= |b|.
std::vector<std::uint32_t> BigInt::sub_mag(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out(a.size(), 0);
    std::int64_t borrow = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::int64_t d = static_cast<std::int64_t>(a[i]) - borrow -
                         (i < b.size() ? static_cast<std::int64_t>(b[i]) : 0);
        if (d < 0) {
            d += static_cast<std::int64_t>(kBase);
            borrow = 1;
        } else {
            borrow = 0;
        }
        out[i] = static_cast<std::uint32_t>(d);
    }
    while (!out.empty() && out.back() == 0) out.pop_back();
    return out;
}

std::vector<std::uint32_t> BigInt::mul_mag(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<std::uint32_t> out(a.size() + b.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::uint64_t carry = 0;
        std::uint64_t ai = a[i];
        if (ai == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            std::uint64_t cur = out[i + j] + ai * b[j] + carry;
            out[i + j] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        std::size_t k = i + b.size();
        while (carry) {
            std::uint64_t cur = out[k] + carry;
            out[k] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
            ++k;
        }
    }
    while (!out.empty() && out.back() == 0) out.pop_back();
    return out;
}

// Knuth algorithm D on 32-bit limbs.
void BigInt::divmod_mag(const std::vector<std::uint32_t>& u_in,
                        const std::vector<std::uint32_t>& v_in,
                        std::vector<std::uint32_t>& q,
                        std::vector<std::uint32_t>& r) {
    q.clear();
    r.clear();
    if (v_in.empty()) throw std::domain_error("BigInt: division by zero");
    if (cmp_mag(u_in, v_in) < 0) {
        r = u_in;
        return;
    }
    if (v_in.size() == 1) {
        std::uint64_t d = v_in[0];
        q.assign(u_in.size(), 0);
        std::uint64_t rem = 0;
        for (std::size_t i = u_in.size(); i-- > 0;) {
            std::uint64_t cur = (rem << 32) | u_in[i];
            q[i] = static_cast<std::uint32_t>(cur / d);
            rem = cur % d;
        }
        while (!q.empty() && q.back() == 0) q.pop_back();
        if (rem) r.push_back(static_cast<std::uint32_t>(rem));
        return;
    }

    const std::size_t n = v_in.size();
    const std::size_t m = u_in.size() - n;
    int shift = 0;
    while (((v_in.back() << shift) & 0x80000000u) == 0) ++shift;

    // Normalized copies.
    std::vector<std::uint32_t> v(n), u(u_in.size() + 1, 0);
    for (std::size_t i = n; i-- > 0;) {
        v[i] = (v_in[i] << shift) |
               (shift && i > 0 ? static_cast<std::uint32_t>(
                                     (static_cast<std::uint64_t>(v_in[i - 1]) >> (32 - shift)))
                               : 0u);
    }
    for (std::size_t i = u_in.size(); i-- > 0;) {
        std::uint64_t cur = static_cast<std::uint64_t>(u_in[i]) << shift;
        if (shift && i > 0) cur |= static_cast<std::uint64_t>(u_in[i - 1]) >> (32 - shift);
        u[i] = static_cast<std::uint32_t>(cur);
        if (i + 1 < u.size()) {
            u[i + 1] |= static_cast<std::uint32_t>((static_cast<std::uint64_t>(u_in[i]) << shift) >> 32);
        }
    }

    q.assign(m + 1, 0);
    const std::uint64_t vtop = v[n - 1];
    const std::uint64_t vsec = v[n - 2];
    for (std::size_t j = m + 1; j-- > 0;) {
        std::uint64_t num = (static_cast<std::uint64_t>(u[j + n]) << 32) | u[j + n - 1];
        std::uint64_t qhat = num / vtop;
        std::uint64_t rhat = num % vtop;
        if (qhat >= kBase) {
            qhat = kBase - 1;
            rhat = num - qhat * vtop;
        }
        while (rhat < kBase && qhat * vsec > ((rhat << 32) | u[j + n - 2])) {
            --qhat;
            rhat += vtop;
        }
        // Multiply-subtract qhat * v from u[j .. j+n].
        std::int64_t borrow = 0;
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t p = qhat * v[i] + carry;
            carry = p >> 32;
            std::int64_t t = static_cast<std::int64_t>(u[i + j]) -
                             static_cast<std::int64_t>(p & 0xffffffffu) - borrow;
            if (t < 0) {
                t += static_cast<std::int64_t>(kBase);
                borrow = 1;
            } else {
                borrow = 0;
            }
            u[i + j] = static_cast<std::uint32_t>(t);
        }
        std::int64_t t = static_cast<std::int64_t>(u[j + n]) - static_cast<std::int64_t>(carry) - borrow;
        if (t < 0) {
            // qhat was one too large: add v back once.
            u[j + n] = static_cast<std::uint32_t>(t + static_cast<std::int64_t>(kBase));
            --qhat;
            std::uint64_t c2 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t s = static_cast<std::uint64_t>(u[i + j]) + v[i] + c2;
                u[i + j] = static_cast<std::uint32_t>(s);
                c2 = s >> 32;
            }
            u[j + n] = static_cast<std::uint32_t>(u[j + n] + c2);
        } else {
            u[j + n] = static_cast<std::uint32_t>(t);
        }
        q[j] = static_cast<std::uint32_t>(qhat);
    }
    while (!q.empty() && q.back() == 0) q.pop_back();

    // Denormalize the remainder.
    r.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = u[i] >> shift;
        if (shift && i + 1 < n + 1) {
            r[i] |= static_cast<std::uint32_t>(static_cast<std::uint64_t>(u[i + 1]) << (32 - shift));
        }
    }
    while (!r.empty() && r.back() == 0) r.pop_back();
}

BigInt BigInt::operator-() const {
    BigInt r = *this;
    r.sign_ = -r.sign_;
    return r;
}

BigInt BigInt::abs() const {
    BigInt r = *this;
    if (r.sign_ < 0) r.sign_ = 1;
    return r;
}

BigInt& BigInt::operator+=(const BigInt& o) {
    if (o.sign_ == 0) return *this;
    if (sign_ == 0) {
        *this = o;
        return *this;
    }
    if (sign_ == o.sign_) {
        limbs_ = add_mag(limbs_, o.limbs_);
    } else {
        int c = cmp_mag(limbs_, o.limbs_);
        if (c == 0) {
            limbs_.clear();
            sign_ = 0;
        } else if (c > 0) {
            limbs_ = sub_mag(limbs_, o.limbs_);
        } else {
            limbs_ = sub_mag(o.limbs_, limbs_);
            sign_ = o.sign_;
        }
    }
    normalize();
    return *this;
}

BigInt& BigInt::operator-=(const BigInt& o) { return *this += -o; }

BigInt& BigInt::operator*=(const BigInt& o) {
    if (sign_ == 0 || o.sign_ == 0) {
        limbs_.clear();
        sign_ = 0;
        return *this;
    }
    limbs_ = mul_mag(limbs_, o.limbs_);
    sign_ *= o.sign_;
    normalize();
    return *this;
}

void BigInt::divmod(const BigInt& num, const BigInt& den, BigInt& q, BigInt& r) {
    if (den.sign_ == 0) throw std::domain_error("BigInt: division by zero");
    std::vector<std::uint32_t> qm, rm;
    divmod_mag(num.limbs_, den.limbs_, qm, rm);
    q.limbs_ = std::move(qm);
    r.limbs_ = std::move(rm);
    q.sign_ = q.limbs_.empty() ? 0 : num.sign_ * den.sign_;
    r.sign_ = r.limbs_.empty() ? 0 : num.sign_;
}

BigInt operator/(const BigInt& a, const BigInt& b) {
    BigInt q, r;
    BigInt::divmod(a, b, q, r);
    return q;
}

BigInt operator%(const BigInt& a, const BigInt& b) {
    BigInt q, r;
    BigInt::divmod(a, b, q, r);
    return r;
}

BigInt BigInt::pow(std::uint64_t e) const {
    BigInt base = *this, out = 1;
    while (e) {
        if (e & 1) out *= base;
        e >>= 1;
        if (e) base *= base;
    }
    return out;
}

BigInt BigInt::gcd(BigInt a, BigInt b) {
    a.sign_ = a.limbs_.empty() ? 0 : 1;
    b.sign_ = b.limbs_.empty() ? 0 : 1;
    while (!b.is_zero()) {
        BigInt q, r;
        divmod(a, b, q, r);
        a = std::move(b);
        b = std::move(r);
    }
    return a;
}

std::strong_ordering BigInt::operator<=>(const BigInt& o) const {
    if (sign_ != o.sign_) return sign_ <=> o.sign_;
    int c = cmp_mag(limbs_, o.limbs_);
    if (sign_ < 0) c = -c;
    return c <=> 0;
}

int BigInt::compare_abs(const BigInt& o) const { return cmp_mag(limbs_, o.limbs_); }

std::string BigInt::to_string() const {
    if (is_zero()) return "0";
    std::vector<std::uint32_t> cur = limbs_;
    std::string digits;
    const std::vector<std::uint32_t> ten9{1000000000u};
    while (!cur.empty()) {
        std::vector<std::uint32_t> q, r;
        divmod_mag(cur, ten9, q, r);
        std::uint32_t chunk = r.empty() ? 0 : r[0];
        for (int i = 0; i < 9; ++i) {
            digits.push_back(static_cast<char>('0' + chunk % 10));
            chunk /= 10;
        }
        cur = std::move(q);
    }
    while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
    if (sign_ < 0) digits.push_back('-');
    std::reverse(digits.begin(), digits.end());
    return digits;
}

BigInt BigInt::from_string(const std::string& dec) {
    BigInt out;
    std::size_t i = 0;
    int sgn = 1;
    if (i < dec.size() && (dec[i] == '+' || dec[i] == '-')) {
        if (dec[i] == '-') sgn = -1;
        ++i;
    }
    if (i == dec.size()) throw std::invalid_argument("BigInt: empty numeral");
    BigInt ten9 = 1000000000;
    while (i < dec.size()) {
        std::size_t take = std::min<std::size_t>(9, dec.size() - i);
        std::uint32_t chunk = 0;
        BigInt scale = 1;
        for (std::size_t k = 0; k < take; ++k) {
            char c = dec[i + k];
            if (c < '0' || c > '9') throw std::invalid_argument("BigInt: bad digit");
            chunk = chunk * 10 + static_cast<std::uint32_t>(c - '0');
        }
        scale = take == 9 ? ten9 : BigInt(static_cast<long long>(std::pow(10.0, static_cast<double>(take))));
        out = out * scale + BigInt(static_cast<long long>(chunk));
        i += take;
    }
    if (sgn < 0) out = -out;
    return out;
}

std::size_t BigInt::bit_length() const {
    if (limbs_.empty()) return 0;
    std::uint32_t top = limbs_.back();
    std::size_t bits = (limbs_.size() - 1) * 32;
    while (top) {
        ++bits;
        top >>= 1;
    }
    return bits;
}

double BigInt::to_double() const {
    if (is_zero()) return 0.0;
    // Take up to 64 leading bits and scale by the discarded bit count.
    std::size_t nbits = bit_length();
    double out = 0.0;
    std::size_t start = limbs_.size() >= 3 ? limbs_.size() - 3 : 0;
    for (std::size_t i = limbs_.size(); i-- > start;) {
        out = out * 4294967296.0 + static_cast<double>(limbs_[i]);
    }
    out = std::ldexp(out, static_cast<int>(start * 32));
    (void)nbits;
    return sign_ < 0 ? -out : out;
}

bool BigInt::fits_ll() const {
    if (limbs_.size() > 2) return false;
    if (limbs_.size() < 2) return true;
    std::uint64_t m = (static_cast<std::uint64_t>(limbs_[1]) << 32) | limbs_[0];
    if (sign_ > 0) return m <= 0x7fffffffffffffffull;
    return m <= 0x8000000000000000ull;
}

long long BigInt::to_ll() const {
    if (!fits_ll()) throw std::overflow_error("BigInt: does not fit long long");
    std::uint64_t m = 0;
    if (!limbs_.empty()) m = limbs_[0];
    if (limbs_.size() == 2) m |= static_cast<std::uint64_t>(limbs_[1]) << 32;
    return sign_ < 0 ? -static_cast<long long>(m) : static_cast<long long>(m);
}

}  // namespace seprank
