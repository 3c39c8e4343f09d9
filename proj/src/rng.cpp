#include "xsec/rng.hpp"

#include <cmath>

namespace xsec {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        philox_round(ctr, key);
    }
    return ctr;
}

Substream::Substream(std::uint64_t seed, std::uint32_t batch, std::uint32_t sample,
                     std::uint32_t domain)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      sample_(sample),
      batch_(batch),
      domain_(domain) {}

std::uint64_t Substream::next_bits() {
    if (phase_ > 1) {
        buf_ = philox4x32_10({block_++, sample_, batch_, domain_}, key_);
        phase_ = 0;
    }
    const int i = 2 * phase_++;
    return (static_cast<std::uint64_t>(buf_[static_cast<size_t>(i)]) << 32) |
           buf_[static_cast<size_t>(i + 1)];
}

double Substream::u01() {
    for (;;) {
        const double u = static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double Substream::uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

double Substream::exponential() { return -std::log(u01()); }

}  // namespace xsec
