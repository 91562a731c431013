#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace liq {

/**
 * Row space held in reduced row-echelon form. The reduction picks the
 * lowest usable column for each pivot (threshold relative to the largest
 * remaining entry), so a given subspace always produces the same matrix
 * and equality is a plain matrix comparison.
 */
class Subspace {
public:
    Subspace() = default;
    static Subspace from_rows(const Eigen::MatrixXd& rows);
    static Subspace zero(std::size_t ambient);
    static Subspace full(std::size_t ambient);

    std::size_t dim() const { return (std::size_t)b_.rows(); }
    std::size_t ambient() const { return amb_; }
    const Eigen::MatrixXd& basis() const { return b_; }

    bool contains(const Eigen::VectorXd& v, double tolerance = 1e-9) const;
    bool contains(const Subspace& other, double tolerance = 1e-9) const;
    bool same_as(const Subspace& other, double tolerance = 1e-9) const;

    Subspace join(const Subspace& other) const;
    Subspace intersect(const Subspace& other) const;

private:
    Eigen::MatrixXd b_;  // dim x ambient, reduced echelon rows
    std::size_t amb_ = 0;
};

// columns span the null space {x : M x = 0}; rank cut at the relative
// singular-value threshold
Eigen::MatrixXd kernel(const Eigen::MatrixXd& M);

// coefficient rows expressing each basis row of sub in ambient's basis;
// throws if sub is not contained in ambient
Eigen::MatrixXd coords_in(const Subspace& sub, const Subspace& ambient);

// canonical echelon basis of the covectors on ambient-coordinates that
// vanish on sub (sub given in ambient coordinates, as from coords_in)
Eigen::MatrixXd annihilator_rows(const Eigen::MatrixXd& sub_coords, std::size_t ambient_dim);

} // namespace liq
