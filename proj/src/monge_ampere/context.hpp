#pragma once

#include "dg4/monge_ampere.hpp"
#include "dg4/numeric.hpp"

namespace dg4::ma_detail {

/// Compiled pointwise data of an elliptic pair.
struct PairValues {
    Eigen::Matrix4d j, w;
    Eigen::Vector4d alpha, x_alpha;
    TensorAt n, r;
    Eigen::VectorXd dalpha;  // 6 coefficients
};

class PairContext {
public:
    explicit PairContext(const MongeAmperePair& p);
    /// Throws EvalError when a coefficient faults at x.
    PairValues at(const Point& x) const;
    const VectorValued2Form& nijenhuis_tensor() const { return n_; }

private:
    VectorValued2Form n_, r_;
    FieldBatch batch_;
    FieldBatch dalpha_;
};

NondegeneracyVerdict verdict(const PairValues& v, const Point& x, double cutoff, double rank_tol);

}  // namespace dg4::ma_detail
