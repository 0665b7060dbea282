#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dg4/distributions.hpp"
#include "dg4/exterior.hpp"
#include "dg4/grid.hpp"

namespace dg4 {

struct AlmostComplexStructure {
    EndoField j;

    AlmostComplexStructure() = default;
    /// Throws InvalidStructure (with witness) if |j^2 + 1| > tol at a grid point.
    AlmostComplexStructure(EndoField endo, std::span<const Point> grid, double tol = 1e-9);
    int dim() const { return j.dim(); }
};

/// Symbolic Nijenhuis tensor on coordinate pairs.
VectorValued2Form nijenhuis(const EndoField& j);
/// N(x, y) computed from the bracket formula on the given fields (not from the tensor).
VectorField nijenhuis(const EndoField& j, const VectorField& x, const VectorField& y);

/// Pointwise value of a vector-valued 2-form.
struct TensorAt {
    int n = 0;
    Eigen::MatrixXd pairs;  // column p is the value on the p-th increasing pair
    Eigen::VectorXd operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double norm() const { return pairs.norm(); }
};
TensorAt value(const VectorValued2Form& t, const Point& x);

struct ImageReport {
    Distribution image;                // N_ab, j N_ab for the chosen pair (a, b)
    std::pair<int, int> pair{0, 1};
    std::vector<Point> vanishing;      // |N| <= tol
    std::vector<Point> chart_degenerate;  // N != 0 but the chosen pair vanishes
    int max_rank = 0;                  // largest pointwise rank of Im N over the grid
    double invariance_residual = 0.0;  // j-invariance of the span
};

/// Throws NijenhuisVanishes if N vanishes identically or at every grid point.
ImageReport image_distribution(const EndoField& j, std::span<const Point> grid, double zero_tol = 1e-9,
                               double rank_tol = 1e-8);

struct UTXiOptions {
    bool flip_xi3 = false;       // use the opposite half-space of Pi3 \ Pi2
    bool swap_labels = false;    // take xi1 on the negative eigenline
    double zero_tol = 1e-9;
    double rank_tol = 1e-8;
};

struct UTXiInvariant {
    Point x;
    Eigen::Vector4d xi1, xi2, xi3, xi4;
    double f = 0.0;               // eigenvalue of eta -> N(eta, xi3') on the xi1 line
    double t_metric = 0.0;        // length of the xi3 class in Pi3/Pi2
    double xi_metric = 0.0;       // length of the xi4 class in T/Pi3
    int t_orientation = 1;        // +1 if xi3 lies on the side of the reference bracket
    int xi_orientation = 1;       // sign of det(xi1, xi2, xi3, xi4)
    double omega2 = 0.0;          // [xi1, xi2] = omega2 xi3 mod Pi2
    Eigen::Vector2d omega1;       // [xi_i, xi3] = omega1_i xi4 mod Pi3
    /// Residuals of N(xi1,xi3)=xi1, N(xi2,xi3)=-xi2, N(xi1,xi4)=xi2, N(xi2,xi4)=-xi1.
    std::array<double, 4> residuals{};
    /// |N(xi2,xi4) - xi1|: the relation forced by N(jX,Y) = -j N(X,Y).
    double antilinear_residual = 0.0;
};

UTXiInvariant utxi_invariant(const EndoField& j, const Point& x, const UTXiOptions& opt = {});

struct RealizationReport {
    AlmostComplexStructure j;
    bool jsquare_structural = false;
    double jsquare_residual = 0.0;
    int image_equal = 0;                 // grid points with Im N = Pi2
    std::vector<Point> vanishing;        // grid points with N = 0
    std::vector<Point> mismatch;         // N != 0 but Im N != Pi2
    double image_residual = 0.0;         // max over nonvanishing points
    double lie_residual = 0.0;           // (L_{j s} j)(Pi2) modulo Pi2, both symmetries
    bool nijenhuis_zero = false;         // N vanishes identically
    int samples = 0;
};

struct RealizeOptions {
    /// The second section is weight * (second spanning field). Sections that
    /// commute with both symmetries give N = 0, e.g. the kernel fields of the
    /// Engel forms with d1 +- d4; a weight such as exp(x1) avoids that.
    Expr section_weight = Expr::integer(1);
    double zero_tol = 1e-9;
    double rank_tol = 1e-8;
    double symmetry_tol = 1e-9;
    double image_tol = 1e-8;
};

/// j xi1 = xi2, j xi2 = -xi1, j s1 = s2, j s2 = -s1.
RealizationReport realize_distribution(const Distribution& pi2, const VectorField& s1, const VectorField& s2,
                                       std::span<const Point> grid, const RealizeOptions& opt = {});

/// Residual of (L_w j)(xi) modulo span(Pi) for spanning fields xi, maximized over the grid.
double lie_derivative_residual(const EndoField& j, const VectorField& w, const Distribution& pi,
                               std::span<const Point> grid, double rank_tol = 1e-8);

/// Procomplex structure on Q^3 x R_t. Expressions use x1..x3 for the slice
/// coordinates and x4 for t; points are (q1, q2, q3, t).
struct ProcomplexStructure {
    EndoField J;        // 3x3
    VectorField w;      // kernel field
    DiffForm alpha;     // alpha(C) = 0, alpha(w) = 1
    int t_axis = -1;    // index of t in the source 4-chart (-1 for a cocomplex structure)
    std::vector<int> q_axes;

    /// Maps a source-chart point to (q1, q2, q3, t).
    Point slice_point(const Point& x) const;
};

ProcomplexStructure procomplex_from_acs(const EndoField& j, int t_axis, std::span<const Point> grid = {});

/// A(w) = 0, A = (L_w J - J dJ/dt) on C.
EndoField nijenhuis_operator(const ProcomplexStructure& p);

struct ProcomplexCheck {
    double spectrum_residual = 0.0;   // |J^3 + J|
    double kernel_residual = 0.0;     // |J w|
    int min_rank = 4, max_rank = 0;   // rank of J
    double anticommutation = 0.0;     // |A J + J A - (L_w alpha) (x) w|
    int samples = 0;
};

/// Points are (q1, q2, q3, t).
ProcomplexCheck check_procomplex(const ProcomplexStructure& p, std::span<const Point> points, double rank_tol = 1e-8);

struct CocomplexReport {
    ProcomplexStructure structure;
    double lie_alpha = 0.0;      // |L_w alpha| at samples
    int image_equal = 0;         // points with Im A = Pi2
    std::vector<Point> vanishing;
    std::vector<Point> mismatch;
    double image_residual = 0.0;
    int samples = 0;
};

/// Pi2 = ker alpha on a 3-chart; seed is a 2x2 matrix in the basis of the
/// kernel's spanning fields with seed^2 = -1. Points may carry a trailing t.
CocomplexReport cocomplex_realize(const DiffForm& alpha, const VectorField& w, const ExprMatrix& seed,
                                  std::span<const Point> grid, double zero_tol = 1e-9, double rank_tol = 1e-8,
                                  double symmetry_tol = 1e-9, double image_tol = 1e-8);

}  // namespace dg4
