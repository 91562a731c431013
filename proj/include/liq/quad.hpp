#pragma once

#include <liq/distrib.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace liq {

// row over the stage frame basis, killing the next chain entry
struct Covector {
    Eigen::RowVectorXd row;
    int stage = 1;
};

// canonical echelon basis of the covectors on `ambient` vanishing on `sub`
std::vector<Covector> annihilator_basis(const Subspace& sub, const Subspace& ambient,
                                        int stage = 1);

/**
 * Pointwise 1-form. The defining fields are the stage frame followed by
 * the complementary directions (which carry value 0); at a point the
 * coordinate coefficient row solves values against the evaluated frame.
 */
struct OneForm {
    Covector zeta;
    std::vector<std::string> vars;
    Eigen::VectorXd values;
    std::shared_ptr<FrameEvaluator> frame;

    Eigen::RowVectorXd row(const std::vector<double>& p) const;
};

OneForm one_form(const Covector& zeta, const std::vector<VectorField>& stage_frame,
                 const std::vector<std::string>& vars,
                 const std::vector<VectorField>& complement = {});

struct ClosednessCheck {
    bool ok = true;
    double worst = 0.0;
    int wi = -1, wj = -1;
    std::vector<double> witness;
    int checked = 0;
};

// samples X a(Y) - Y a(X) - a([X,Y]) by central differences of the solved rows
ClosednessCheck closedness_check(const OneForm& alpha, const std::vector<VectorField>& fields,
                                 const Domain& dom);

/**
 * Level-set constraints {value(y) = target} with a quasi-Newton row
 * evaluator; `adjust` lists the coordinates Newton may move (one per
 * constraint).
 */
struct LeafSpec {
    std::function<Eigen::VectorXd(const std::vector<double>&)> value;
    std::function<Eigen::MatrixXd(const std::vector<double>&)> rows;
    Eigen::VectorXd target;
    std::vector<int> adjust;
};

// straight segment in the unconstrained block, Newton-projected per node
struct PathDescriptor {
    std::vector<double> from, to;
    std::shared_ptr<const LeafSpec> leaf;
};

struct PathNode {
    std::vector<double> p;
    Eigen::VectorXd v;
};

// position and velocity at parameter s in [0,1]; throws on projection failure
PathNode path_node(const PathDescriptor& path, double s);

PathDescriptor leaf_path(const std::vector<double>& from, const std::vector<double>& to,
                         std::shared_ptr<const LeafSpec> leaf = nullptr);

// adaptive Gauss-Legendre line integral of alpha along the path
double path_integral(const OneForm& alpha, const PathDescriptor& path);

struct ChartStage {
    std::size_t first = 0;
    std::size_t count = 0;
    std::vector<Covector> zetas;
    std::vector<OneForm> forms;
    std::vector<int> adjust;
};

struct NewtonSolve {
    std::vector<double> y;
    double residual = 0.0;
    int iters = 0;
    bool converged = false;
};

using QCache = std::map<std::vector<double>, Eigen::VectorXd>;

/**
 * Rectifying chart built stage by stage over a terminating chain. Q maps
 * the box into coordinates where the dynamic field becomes the constant
 * xi_gamma; jrows gives the quasi-Newton row system (the 1-form rows).
 */
struct QuadratureChart {
    Frame frame;
    Domain dom;
    std::size_t gamma = 0;
    std::vector<Subspace> chain;
    NormalFormProfile profile;
    Eigen::MatrixXd dual;
    Eigen::VectorXd xi_gamma;
    std::vector<VectorField> adapted_fields;
    std::shared_ptr<FrameEvaluator> aev;
    std::vector<ChartStage> stages;

    double q0_norm = 0.0;
    double gq_worst = 0.0;
    double jac_min_ratio = 1.0;
    double closed_worst = 0.0;

    std::size_t dim() const { return dom.dim(); }
    Eigen::MatrixXd jrows(const std::vector<double>& x) const;
    Eigen::VectorXd q_upto(const std::vector<double>& x, std::size_t nstages) const;
    Eigen::VectorXd Q(const std::vector<double>& x) const { return q_upto(x, stages.size()); }
    std::vector<double> anchor(const Eigen::VectorXd& constraints, std::size_t stage) const;
    NewtonSolve invert(const Eigen::VectorXd& target, std::vector<double> guess,
                       QCache* cache = nullptr) const;

private:
    mutable std::vector<std::pair<Eigen::VectorXd, std::vector<double>>> warm_;
    friend QuadratureChart build_chart(const std::vector<Subspace>&, const SystemDef&,
                                       std::size_t);
};

QuadratureChart build_chart(const std::vector<Subspace>& entries, const SystemDef& sys,
                            std::size_t gamma);
QuadratureChart build_chart(const SeriesTrace& trace, const SystemDef& sys);
QuadratureChart build_chart(const DistSeriesTrace& trace, const SystemDef& sys);

struct FlowPoint {
    std::vector<double> x;
    int iters = 0;
    double residual = 0.0;
    bool ok = true;
    bool exited = false;
};

struct FlowResult {
    std::vector<double> start;
    std::vector<double> times;
    std::vector<FlowPoint> points;
    std::string method;
    bool truncated = false;
    std::string note;
};

FlowResult chart_flow(const QuadratureChart& chart, const std::vector<double>& x,
                      const std::vector<double>& tgrid);

// independent adaptive embedded Runge-Kutta 4(5) reference integrator
FlowResult rk_oracle(const VectorField& gamma, const Domain& dom, const std::vector<double>& x,
                     const std::vector<double>& tgrid);

struct FlowComparison {
    bool ok = false;
    double max_dev = 0.0;
    std::size_t compared = 0;
    std::size_t worst_index = 0;
    int worst_comp = -1;
    std::vector<double> per_time;
};

// componentwise relative deviation over the shared grid, b as reference
FlowComparison compare_flow(const FlowResult& a, const FlowResult& b);

} // namespace liq
