#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace liq {

// Radical-inverse of i in the given base, in [0,1).
inline double halton(std::uint64_t i, std::uint32_t base) {
    double f = 1.0, r = 0.0;
    while (i) {
        f /= base;
        r += f * double(i % base);
        i /= base;
    }
    return r;
}

inline constexpr std::uint32_t kHaltonBases[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                                 23, 29, 31, 37, 41, 43, 47, 53};

// k-th quasi-random point of a low-discrepancy sequence in the box [lo, hi].
// Distinct seeds give disjoint index ranges of the same sequence.
inline std::vector<double> halton_point(std::size_t k, unsigned seed,
                                        const std::vector<double>& lo,
                                        const std::vector<double>& hi) {
    const std::size_t dim = lo.size();
    if (hi.size() != dim) throw std::invalid_argument("box bounds disagree");
    if (dim > sizeof(kHaltonBases) / sizeof(kHaltonBases[0]))
        throw std::invalid_argument("too many dimensions for the sampler");
    std::uint64_t idx = 1 + std::uint64_t(seed) * 4096 + k;
    std::vector<double> p(dim);
    for (std::size_t d = 0; d < dim; ++d)
        p[d] = lo[d] + (hi[d] - lo[d]) * halton(idx, kHaltonBases[d]);
    return p;
}

} // namespace liq
