#pragma once

#include <liq/expr.hpp>
#include <liq/sampling.hpp>

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace liq {

/**
 * Coordinate box with a distinguished interior reference point. All
 * sampling derives from the stored seed, so runs are reproducible.
 */
struct Domain {
    std::vector<std::string> vars;
    std::vector<double> lo, hi;
    std::vector<double> x0;
    int nsamples = 64;
    unsigned seed = 0;

    std::size_t dim() const { return vars.size(); }
    std::vector<double> sample(std::size_t k) const { return halton_point(k, seed, lo, hi); }
    bool inside(const std::vector<double>& p, double slack = 0.0) const;
    // throws std::invalid_argument on degenerate intervals or x0 on/outside
    // the boundary
    void validate() const;
};

struct VectorField {
    std::string name;
    std::vector<ExprPtr> comp;
};

struct Frame {
    std::vector<VectorField> fields;
    bool verified = false;
    std::size_t size() const { return fields.size(); }
};

struct SystemDef {
    Domain dom;
    Frame frame;
    std::size_t gamma = 0;
    std::map<std::string, double> params;
    std::string mode = "auto";

    const VectorField& gamma_field() const { return frame.fields[gamma]; }
};

// commutator [X, Y], components simplified
VectorField lie_bracket(const VectorField& X, const VectorField& Y,
                        const std::vector<std::string>& vars);

// directional derivative X(f), simplified
ExprPtr apply_field(const VectorField& X, const ExprPtr& f,
                    const std::vector<std::string>& vars);

// sum_j coeffs[j] * fields[j] with near-zero coefficients dropped
VectorField linear_combination(const std::vector<VectorField>& fields,
                               const Eigen::RowVectorXd& coeffs, const std::string& name);

/**
 * Compiled evaluator for a list of fields over fixed coordinates.
 * mat(p) is dim x count with column j holding field j at p. Domain
 * errors carry the offending field and component in their message.
 */
class FrameEvaluator {
public:
    FrameEvaluator(const std::vector<VectorField>& fields,
                   const std::vector<std::string>& vars);
    std::size_t dim() const { return nvars_; }
    std::size_t count() const { return names_.size(); }
    Eigen::MatrixXd mat(const std::vector<double>& p) const;
    Eigen::VectorXd field(std::size_t j, const std::vector<double>& p) const;

private:
    std::vector<std::vector<Tape>> tapes_;  // [field][component]
    std::vector<std::string> names_;
    std::size_t nvars_;
};

enum class Verdict { True, False, Indeterminate };

struct FrameCheck {
    Verdict verdict = Verdict::Indeterminate;
    double min_ratio = 0.0;           // worst sigma_min/sigma_max seen
    std::vector<double> witness;      // point of the worst ratio when False
    int skipped = 0;                  // samples lost to domain errors
};

// Pointwise independence at x0 and the domain's samples: the ratio of
// extreme singular values must stay above tol::sigma everywhere tested.
FrameCheck verify_frame(const Frame& F, const Domain& dom);

} // namespace liq
