#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "dg4/exterior.hpp"

namespace dg4 {

/// A batch of vector fields compiled into one evaluator; columns of the
/// returned matrix are the fields at the point.
class FieldBatch {
public:
    FieldBatch() = default;
    explicit FieldBatch(std::span<const VectorField> fields);
    explicit FieldBatch(const std::vector<VectorField>& fields)
        : FieldBatch(std::span<const VectorField>(fields.data(), fields.size())) {}

    /// Throws EvalError on a fault in any component.
    Eigen::MatrixXd operator()(const Point& x) const;
    int count() const { return count_; }

private:
    Evaluator ev_;
    int n_ = 0;
    int count_ = 0;
};

Eigen::VectorXd value(const VectorField& v, const Point& x);
Eigen::MatrixXd value(const ExprMatrix& m, const Point& x);
Eigen::MatrixXd value(const EndoField& e, const Point& x);
/// Coefficients ordered as multi_indices(n, k).
Eigen::VectorXd value(const DiffForm& f, const Point& x);

/// Number of singular values above rel_tol * sigma_max (0 for a zero matrix).
int numeric_rank(const Eigen::MatrixXd& m, double rel_tol);
/// sigma_min / sigma_max over min(rows, cols) singular values (0 for a zero matrix).
double condition_ratio(const Eigen::MatrixXd& m);
/// Orthonormal basis (as columns) of the column span, rank decided by rel_tol.
Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& cols, double rel_tol);
/// Component of v orthogonal to the span of the orthonormal columns of q.
Eigen::VectorXd orthogonal_part(const Eigen::MatrixXd& q, const Eigen::VectorXd& v);

/// Numeric value of k-form phi on the given vectors (determinant convention).
double form_value(const Eigen::VectorXd& coeffs, int n, int k, const Eigen::MatrixXd& vectors);

/// Lie bracket at a point from central differences (step h with one
/// Richardson extrapolation), for fields whose exact bracket is too large.
Eigen::VectorXd fd_bracket(const FieldBatch& pair, const Point& x, double h = 1e-5);
/// Directional derivative matrix: column k is d/dx_k of each field component.
Eigen::MatrixXd fd_jacobian(const FieldBatch& one_field, const Point& x, double h = 1e-5);

}  // namespace dg4
