#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qclearn {

// Minimal arbitrary-precision unsigned integer. Circuit ensemble sizes reach
// ~10^48 already at N=20, P=6, far past 64 bits. Limbs are base 10^9 so
// decimal printing is direct; only the handful of operations the counting
// code needs are provided.
class BigUint {
  public:
    BigUint() : limbs_{0} {}
    BigUint(std::uint64_t v);  // NOLINT(google-explicit-constructor)

    BigUint operator+(const BigUint& other) const;
    BigUint operator*(const BigUint& other) const;
    BigUint& operator+=(const BigUint& other) { return *this = *this + other; }
    BigUint& operator*=(const BigUint& other) { return *this = *this * other; }

    BigUint pow(std::uint32_t exponent) const;

    bool operator==(const BigUint& other) const { return limbs_ == other.limbs_; }
    bool operator!=(const BigUint& other) const { return !(*this == other); }
    bool operator<(const BigUint& other) const;
    bool operator<=(const BigUint& other) const { return *this < other || *this == other; }

    bool fits_u64() const;
    std::uint64_t to_u64() const;  // throws Error if it does not fit

    std::string to_string() const;

  private:
    // Little-endian limbs in [0, 10^9); no leading zero limbs except for 0.
    std::vector<std::uint32_t> limbs_;

    void trim();
};

}  // namespace qclearn
