#pragma once

#include <liq/linalg.hpp>
#include <liq/vfield.hpp>

#include <optional>
#include <vector>

namespace liq {

/**
 * Bracket tensor of a frame that closes under commutators. c[k](i,j) is
 * the coefficient of field k in [X_i, X_j]; antisymmetry in (i,j) holds
 * exactly by construction. When the frame does not close, `closed` is
 * false, (wi, wj) names a pair whose bracket left the span, and
 * `variance` is the scatter of its per-sample coefficient fits.
 */
struct StructureConstants {
    std::size_t n = 0;
    std::vector<Eigen::MatrixXd> c;
    double residual = 0.0;
    bool closed = false;
    int wi = -1, wj = -1;
    double variance = 0.0;

    double get(std::size_t i, std::size_t j, std::size_t k) const { return c[k](i, j); }
    // [a, b] for coefficient vectors a, b over the frame
    Eigen::VectorXd bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    // largest violation of the Jacobi identity on the tensor, relative to
    // the squared coefficient scale
    double jacobi_defect() const;
};

/**
 * Fits every pairwise bracket against the frame at 2n+4 box samples
 * (stacked least squares), snaps near-rational coefficients, and then
 * certifies the fit symbolically. A pair whose residual exceeds tol::sc
 * or whose symbolic difference fails the zero test marks the result as
 * not closed.
 */
StructureConstants structure_constants(const Frame& F, const Domain& dom);

enum class SeriesKind { Derived, Central, Gamma };
enum class SeriesEnd { Zero, Abelian, Stabilized };

/**
 * A descending chain of subspaces in frame coordinates. entries[0] is
 * always the full algebra. `end` reports why the recursion stopped:
 * reached zero, hit an abelian entry (gamma series only), or repeated a
 * previous entry without terminating.
 */
struct SeriesTrace {
    SeriesKind kind = SeriesKind::Derived;
    std::vector<Subspace> entries;
    std::vector<bool> abelian;
    SeriesEnd end = SeriesEnd::Stabilized;
    std::size_t gamma = 0;

    std::vector<std::size_t> dims() const;
};

// span of [u, v] over basis rows u of S, v of T
Subspace bracket_span(const StructureConstants& c, const Subspace& S, const Subspace& T);
bool is_abelian_subspace(const StructureConstants& c, const Subspace& S);

// S_{i+1} = [S_i, S_i], stopping at zero or stabilization
SeriesTrace derived_series(const StructureConstants& c);
// S_{i+1} = [L, S_i]
SeriesTrace central_series(const StructureConstants& c);
// S_k = <gamma> + [S_{k-1}, S_{k-1}], stopping at the first abelian entry
SeriesTrace gamma_series(const StructureConstants& c, std::size_t gamma);

bool is_solvable(const StructureConstants& c);
bool is_nilpotent(const StructureConstants& c);

// first abelian entry index k reported as k+1; empty when the chain
// stabilizes without becoming abelian
std::optional<int> lie_integrability_order(const SeriesTrace& trace);

struct CocycleCheck {
    bool ok = true;
    int wi = -1, wj = -1;
    std::vector<double> witness;
    double value = 0.0;
};

/**
 * Verifies X_i(h_j) - X_j(h_i) - sum_k c_ij^k h_k = 0 for every pair.
 * On failure the witnessing pair and sample point are reported.
 */
CocycleCheck cocycle_check(const std::vector<ExprPtr>& h, const StructureConstants& c,
                           const Frame& F, const Domain& dom);

struct SubspaceProps {
    bool is_ideal = false;
    bool is_abelian = false;
};

// [L, S] <= S and [S, S] = 0, both in frame coordinates
SubspaceProps subspace_props(const Subspace& S, const StructureConstants& c);

} // namespace liq
