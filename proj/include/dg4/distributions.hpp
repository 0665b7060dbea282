#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dg4/exterior.hpp"
#include "dg4/grid.hpp"

namespace dg4 {

/// Rank-p distribution given by p spanning vector fields.
struct Distribution {
    int n = 0;
    std::vector<VectorField> span;

    Distribution() = default;
    explicit Distribution(std::vector<VectorField> fields);
    int rank() const { return static_cast<int>(span.size()); }
};

/// Kernel of a set of pointwise independent 1-forms. Pivot columns are chosen
/// once, maximizing the smallest normalized pivot minor over the grid, so the
/// spanning fields are global expressions.
Distribution kernel_distribution(const std::vector<DiffForm>& annihilator, std::span<const Point> grid,
                                 double rank_tol = 1e-8);

/// Throws RankDrop (with the point as witness) if the spanning fields are
/// dependent at some grid point.
void require_independent(const Distribution& d, std::span<const Point> grid, double rank_tol = 1e-8);

struct FlagPoint {
    Point x;
    std::vector<int> growth;               // ranks of D^(1), D^(2), ...
    std::vector<std::vector<int>> basis;   // per level: chosen candidate indices
    std::optional<ErrorCode> fault;        // RankDrop or an evaluation error
    std::string message;
};

struct DerivedFlag {
    Distribution base;
    std::vector<VectorField> candidates;  // spanning fields, then brackets in lexicographic order
    std::vector<int> level;               // 1-based level at which each candidate enters
    std::vector<std::pair<int, int>> origin;  // (spanning index, candidate index); (-1,-1) for spanning fields
    std::vector<FlagPoint> points;
};

DerivedFlag derived_flag(const Distribution& d, std::span<const Point> grid, int max_depth = 4,
                         double rank_tol = 1e-8);

enum class RegularityClass { Integrable, ContactCylinder, EngelGeneralPosition, NonRegular };
const char* regularity_name(RegularityClass c);

struct Classification {
    RegularityClass cls = RegularityClass::NonRegular;
    std::vector<int> growth;  // common growth vector when regular
    std::vector<Point> witnesses;
    std::vector<std::string> reasons;
};

Classification classify_2dist_r4(const Distribution& d, std::span<const Point> grid, double rank_tol = 1e-8);

struct SymmetryReport {
    bool symmetry = true;
    double max_residual = 0.0;
    bool characteristic = true;  // v lies in the distribution at every point
    bool transversal = false;    // v leaves the distribution somewhere on the grid
    int tangent_points = 0;      // grid points where v lies in the distribution
    std::vector<Point> witnesses;
};

SymmetryReport verify_symmetry(const VectorField& v, const Distribution& d, std::span<const Point> grid,
                               double tol = 1e-9, double rank_tol = 1e-8);

/// Unit vector spanning the line in D with [v, D^(2)] inside D^(2), sign
/// normalized so the first nonzero component is positive.
Eigen::VectorXd canonical_line(const Distribution& d, const Point& x, double rank_tol = 1e-8);

struct TanakaData {
    Point x;
    std::vector<int> dims;  // graded dimensions
    /// Bracket 2-form: for each Q2 basis vector k, matrix[k](a,b) = Q2_k-component of [xi_a, xi_b].
    std::vector<Eigen::MatrixXd> two_form;
    /// Bracket 1-form: one_form(a, k*dim Q3 + l) = Q3_l-component of [xi_a, e_k] for Q2 basis e_k.
    std::optional<Eigen::MatrixXd> one_form;
    std::string basis_note;
};

TanakaData tanaka_data(const Distribution& d, const Point& x, double rank_tol = 1e-8);

}  // namespace dg4
