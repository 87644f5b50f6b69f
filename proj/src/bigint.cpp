#include "qclearn/bigint.hpp"

#include <algorithm>

#include "qclearn/errors.hpp"

namespace qclearn {

namespace {
constexpr std::uint64_t kBase = 1000000000ull;
}

BigUint::BigUint(std::uint64_t v) {
    limbs_.clear();
    do {
        limbs_.push_back(static_cast<std::uint32_t>(v % kBase));
        v /= kBase;
    } while (v != 0);
}

void BigUint::trim() {
    while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
}

BigUint BigUint::operator+(const BigUint& other) const {
    BigUint out;
    const std::size_t n = std::max(limbs_.size(), other.limbs_.size());
    out.limbs_.assign(n + 1, 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t s = carry;
        if (i < limbs_.size()) s += limbs_[i];
        if (i < other.limbs_.size()) s += other.limbs_[i];
        out.limbs_[i] = static_cast<std::uint32_t>(s % kBase);
        carry = s / kBase;
    }
    out.limbs_[n] = static_cast<std::uint32_t>(carry);
    out.trim();
    return out;
}

BigUint BigUint::operator*(const BigUint& other) const {
    BigUint out;
    out.limbs_.assign(limbs_.size() + other.limbs_.size(), 0);
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        unsigned __int128 carry = 0;
        for (std::size_t j = 0; j < other.limbs_.size(); ++j) {
            unsigned __int128 cur = carry + out.limbs_[i + j] +
                                    static_cast<unsigned __int128>(limbs_[i]) * other.limbs_[j];
            out.limbs_[i + j] = static_cast<std::uint32_t>(cur % kBase);
            carry = cur / kBase;
        }
        std::size_t k = i + other.limbs_.size();
        while (carry != 0) {
            unsigned __int128 cur = carry + out.limbs_[k];
            out.limbs_[k] = static_cast<std::uint32_t>(cur % kBase);
            carry = cur / kBase;
            ++k;
        }
    }
    out.trim();
    return out;
}

BigUint BigUint::pow(std::uint32_t exponent) const {
    BigUint result(1);
    BigUint base = *this;
    while (exponent != 0) {
        if (exponent & 1u) result *= base;
        exponent >>= 1;
        if (exponent != 0) base *= base;
    }
    return result;
}

bool BigUint::operator<(const BigUint& other) const {
    if (limbs_.size() != other.limbs_.size()) return limbs_.size() < other.limbs_.size();
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        if (limbs_[i] != other.limbs_[i]) return limbs_[i] < other.limbs_[i];
    }
    return false;
}

bool BigUint::fits_u64() const {
    if (limbs_.size() > 3) return false;
    if (limbs_.size() < 3) return true;
    // 2^64 - 1 = 18 446744073 709551615 in base 10^9.
    if (limbs_[2] != 18) return limbs_[2] < 18;
    if (limbs_[1] != 446744073) return limbs_[1] < 446744073;
    return limbs_[0] <= 709551615;
}

std::uint64_t BigUint::to_u64() const {
    if (!fits_u64()) throw Error("BigUint::to_u64: value exceeds 64 bits");
    std::uint64_t v = 0;
    for (std::size_t i = limbs_.size(); i-- > 0;) v = v * kBase + limbs_[i];
    return v;
}

std::string BigUint::to_string() const {
    std::string s = std::to_string(limbs_.back());
    for (std::size_t i = limbs_.size() - 1; i-- > 0;) {
        std::string part = std::to_string(limbs_[i]);
        s += std::string(9 - part.size(), '0') + part;
    }
    return s;
}

}  // namespace qclearn
