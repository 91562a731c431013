#pragma once

#include <liq/liealg.hpp>

#include <optional>
#include <vector>

namespace liq {

/**
 * A spanning set of fields treated as a function module. Regular means
 * the pointwise rank equals the dimension of the real span everywhere
 * sampled; completely regular additionally means that common rank fills
 * the tangent space.
 */
struct RegularSpace {
    Frame frame;
    Domain dom;
    bool regular = false;
    bool completely_regular = false;
    std::size_t span_dim = 0;
    std::size_t rank = 0;
    int skipped = 0;
};

RegularSpace regularity_check(const Frame& V, const Domain& dom);

/**
 * Smallest subspace whose module contains the given fields, as the row
 * space of their sampled coefficient vectors over the frame of V.
 */
struct CoreResult {
    Subspace core;
    std::size_t sample_rank = 0;
    Eigen::VectorXd spectrum;
    std::size_t samples_used = 0;
};

CoreResult core(const std::vector<VectorField>& S, const RegularSpace& V);

enum class DistKind { Derived, Central, Gamma };

struct DistSeriesTrace {
    DistKind kind = DistKind::Derived;
    std::vector<Subspace> entries;
    std::vector<bool> abelian;
    SeriesEnd end = SeriesEnd::Stabilized;
    std::size_t gamma = 0;

    std::vector<std::size_t> dims() const;
};

// derived: S_{i+1} = core[S_i, S_i]; central: S_{i+1} = core[S_i, V];
// gamma: S_k = <gamma> + core[S_{k-1}, S_{k-1}]
DistSeriesTrace dist_series(DistKind kind, const RegularSpace& V, std::size_t gamma = 0);

std::optional<int> dist_integrability_order(const DistSeriesTrace& trace);

// spanning fields of a subspace given in frame coordinates
std::vector<VectorField> span_fields(const RegularSpace& V, const Subspace& sub);

/**
 * Sampling certification that pointwise intersections of the two modules
 * fall inside the module of the subspace intersection. Not a proof.
 */
struct IntersectionCheck {
    bool ok = true;
    std::vector<double> witness;
    double residual = 0.0;
};

IntersectionCheck module_intersection_check(const Subspace& W1, const Subspace& W2,
                                            const RegularSpace& V);

/**
 * Integrability orders before and after rescaling the dynamic field by
 * f. The two can differ by at most one; a larger gap means the series
 * computation is inconsistent and raises.
 */
struct RescalePair {
    std::optional<int> order;
    std::optional<int> order_scaled;
};

RescalePair rescaling_order(const RegularSpace& V, std::size_t gamma, const ExprPtr& f);

/**
 * Stage layout of a descending chain: depth r, per-stage dimensions d_s,
 * cumulative w_s, and stage-ordered adapted basis rows in frame
 * coordinates (stage s spans entry s-1 modulo entry s).
 */
struct NormalFormProfile {
    std::size_t r = 0;
    std::vector<std::size_t> d;
    std::vector<std::size_t> w;
    Eigen::MatrixXd adapted;
};

NormalFormProfile make_profile(const std::vector<Subspace>& entries);

struct QuadratureChart;

/**
 * Numeric triangularity of the adapted fields in the chart coordinates:
 * for stage-s field i the pushed-forward component i is 1 and components
 * j <= w_s, j != i vanish. With `strong` set, coefficients beyond w_s are
 * also required (band by band) to be independent of late variables,
 * probed by finite differences.
 */
struct NormalFormCheck {
    bool ok = false;
    double worst = 0.0;
    int checked = 0;
    int skipped = 0;
    double worst_dep = 0.0;
};

NormalFormCheck normal_form_verify(const RegularSpace& V, const QuadratureChart& chart,
                                   const NormalFormProfile& profile, bool strong = false);

} // namespace liq
