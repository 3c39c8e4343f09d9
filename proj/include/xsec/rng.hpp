#pragma once

#include <array>
#include <cstdint>

namespace xsec {

/// Philox4x32-10 block cipher (Salmon et al.). Stateless: maps a 128-bit
/// counter and 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

/// Deterministic random substream addressed by (seed, batch, sample, domain).
/// The counter layout is {block, sample, batch, domain}, so distinct
/// addresses never collide and results are independent of scheduling.
/// Domains separate independent consumers sharing one seed.
class Substream {
public:
    static constexpr std::uint32_t kDomainExponential = 0;
    static constexpr std::uint32_t kDomainCube = 1;
    static constexpr std::uint32_t kDomainScanTriples = 2;
    static constexpr std::uint32_t kDomainConvexityPairs = 3;
    static constexpr std::uint32_t kDomainTestData = 4;

    Substream(std::uint64_t seed, std::uint32_t batch, std::uint32_t sample,
              std::uint32_t domain = kDomainExponential);

    /// Uniform on the open interval (0,1); zero is rejected and redrawn.
    double u01();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Standard one-sided exponential, -log(U).
    double exponential();

private:
    std::uint64_t next_bits();

    std::array<std::uint32_t, 2> key_;
    std::uint32_t sample_, batch_, domain_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int phase_ = 2;  // 0 or 1: which half of buf_ is next; 2: buffer empty
};

}  // namespace xsec
