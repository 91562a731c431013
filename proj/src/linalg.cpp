#include <liq/linalg.hpp>
#include <liq/tolerances.hpp>

#include <Eigen/SVD>

#include <stdexcept>

namespace liq {

namespace {

// In-place reduced row echelon form. Pivots take the lowest column whose
// best remaining entry clears the relative threshold.
Eigen::MatrixXd rref(Eigen::MatrixXd M) {
    const auto rows = M.rows(), cols = M.cols();
    double biggest = M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
    if (biggest == 0.0) return Eigen::MatrixXd(0, cols);
    const double thresh = tol::pivot * biggest;

    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
        Eigen::Index best = -1;
        double bestval = thresh;
        for (Eigen::Index i = r; i < rows; ++i)
            if (std::abs(M(i, c)) > bestval) {
                bestval = std::abs(M(i, c));
                best = i;
            }
        if (best < 0) continue;
        M.row(r).swap(M.row(best));
        M.row(r) /= M(r, c);
        for (Eigen::Index i = 0; i < rows; ++i)
            if (i != r && M(i, c) != 0.0) M.row(i) -= M(i, c) * M.row(r);
        ++r;
    }
    // zero out roundoff dust below the scale of the reduction
    Eigen::MatrixXd out = M.topRows(r);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            if (std::abs(out(i, j)) < thresh) out(i, j) = 0.0;
    return out;
}

} // namespace

Subspace Subspace::from_rows(const Eigen::MatrixXd& rows) {
    Subspace s;
    s.amb_ = (std::size_t)rows.cols();
    s.b_ = rref(rows);
    return s;
}

Subspace Subspace::zero(std::size_t ambient) {
    Subspace s;
    s.amb_ = ambient;
    s.b_ = Eigen::MatrixXd(0, (Eigen::Index)ambient);
    return s;
}

Subspace Subspace::full(std::size_t ambient) {
    Subspace s;
    s.amb_ = ambient;
    s.b_ = Eigen::MatrixXd::Identity((Eigen::Index)ambient, (Eigen::Index)ambient);
    return s;
}

bool Subspace::contains(const Eigen::VectorXd& v, double tolerance) const {
    if ((std::size_t)v.size() != amb_) throw std::invalid_argument("ambient mismatch");
    if (dim() == 0) return v.lpNorm<Eigen::Infinity>() <= tolerance;
    // least squares residual against the basis rows
    Eigen::VectorXd c = b_.transpose().colPivHouseholderQr().solve(v);
    double resid = (b_.transpose() * c - v).lpNorm<Eigen::Infinity>();
    return resid <= tolerance * (1.0 + v.lpNorm<Eigen::Infinity>());
}

bool Subspace::contains(const Subspace& other, double tolerance) const {
    for (Eigen::Index i = 0; i < other.b_.rows(); ++i)
        if (!contains(other.b_.row(i).transpose(), tolerance)) return false;
    return true;
}

bool Subspace::same_as(const Subspace& other, double tolerance) const {
    if (amb_ != other.amb_ || dim() != other.dim()) return false;
    if (dim() == 0) return true;
    return (b_ - other.b_).cwiseAbs().maxCoeff() <= tolerance;
}

Subspace Subspace::join(const Subspace& other) const {
    if (amb_ != other.amb_) throw std::invalid_argument("ambient mismatch");
    Eigen::MatrixXd stacked(b_.rows() + other.b_.rows(), (Eigen::Index)amb_);
    stacked << b_, other.b_;
    return from_rows(stacked);
}

Subspace Subspace::intersect(const Subspace& other) const {
    if (amb_ != other.amb_) throw std::invalid_argument("ambient mismatch");
    // x in both row spaces: x = A^T a = B^T b, so (a; -b) lies in the
    // kernel of [A^T  B^T]
    if (dim() == 0 || other.dim() == 0) return zero(amb_);
    Eigen::MatrixXd M((Eigen::Index)amb_, b_.rows() + other.b_.rows());
    M << b_.transpose(), other.b_.transpose();
    Eigen::MatrixXd K = kernel(M);
    if (K.cols() == 0) return zero(amb_);
    Eigen::MatrixXd xs(K.cols(), (Eigen::Index)amb_);
    for (Eigen::Index j = 0; j < K.cols(); ++j)
        xs.row(j) = (b_.transpose() * K.col(j).head(b_.rows())).transpose();
    return from_rows(xs);
}

Eigen::MatrixXd kernel(const Eigen::MatrixXd& M) {
    if (M.rows() == 0) return Eigen::MatrixXd::Identity(M.cols(), M.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    double cut = s.size() ? tol::pivot * s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut) ++rank;
    return svd.matrixV().rightCols(M.cols() - rank);
}

Eigen::MatrixXd coords_in(const Subspace& sub, const Subspace& ambient) {
    if (sub.ambient() != ambient.ambient()) throw std::invalid_argument("ambient mismatch");
    Eigen::MatrixXd C(sub.basis().rows(), ambient.basis().rows());
    Eigen::MatrixXd At = ambient.basis().transpose();
    auto qr = At.colPivHouseholderQr();
    for (Eigen::Index i = 0; i < sub.basis().rows(); ++i) {
        Eigen::VectorXd v = sub.basis().row(i).transpose();
        Eigen::VectorXd c = qr.solve(v);
        if ((At * c - v).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + v.lpNorm<Eigen::Infinity>()))
            throw std::invalid_argument("subspace not contained in the ambient space");
        C.row(i) = c.transpose();
    }
    return C;
}

Eigen::MatrixXd annihilator_rows(const Eigen::MatrixXd& sub_coords, std::size_t ambient_dim) {
    if (sub_coords.rows() == 0) {
        Subspace full = Subspace::full(ambient_dim);
        return full.basis();
    }
    if ((std::size_t)sub_coords.cols() != ambient_dim)
        throw std::invalid_argument("coordinate width mismatch");
    Eigen::MatrixXd K = kernel(sub_coords);  // columns z with sub_coords * z = 0
    if (K.cols() == 0) return Eigen::MatrixXd(0, (Eigen::Index)ambient_dim);
    return Subspace::from_rows(K.transpose()).basis();
}

} // namespace liq
