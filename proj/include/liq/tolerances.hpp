#pragma once

namespace liq::tol {

inline constexpr double zero = 1e-9;     // symbolic/sampled vanishing test
inline constexpr double sigma = 1e-10;   // pointwise rank: smallest/largest singular value
inline constexpr double pivot = 1e-10;   // relative pivot threshold in echelon reduction
inline constexpr double jacobi = 1e-9;   // Jacobi identity on structure constants
inline constexpr double sc = 1e-8;       // structure-constant fit residual
inline constexpr double core = 1e-8;     // core membership residual
inline constexpr double quad = 1e-10;    // path integral, absolute
inline constexpr double newton = 1e-12;  // chart inversion residual
inline constexpr double leaf = 1e-9;     // leaf constraint satisfaction
inline constexpr double closed = 1e-7;   // finite-difference closedness residual
inline constexpr double flow = 1e-6;     // flow comparison, relative
inline constexpr double nf = 1e-6;       // normal-form triangularity

} // namespace liq::tol
