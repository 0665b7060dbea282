#pragma once

#include <span>
#include <vector>

#include "dg4/expr.hpp"
#include "dg4/grid.hpp"

namespace dg4 {

/// Vector field on a chart: components along d/dx1..d/dxn.
struct VectorField {
    std::vector<Expr> c;

    VectorField() = default;
    explicit VectorField(int n) : c(static_cast<std::size_t>(n)) {}
    explicit VectorField(std::vector<Expr> comps) : c(std::move(comps)) {}
    static VectorField coordinate(int n, int i);

    int dim() const { return static_cast<int>(c.size()); }
    Expr& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    const Expr& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a);
VectorField operator*(const Expr& f, const VectorField& v);
VectorField simplify(const VectorField& v);
/// True when every component simplifies to the constant 0.
bool is_zero(const VectorField& v);

/// Dense matrix of expressions, row-major.
struct ExprMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<Expr> a;

    ExprMatrix() = default;
    ExprMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r * c)) {}
    static ExprMatrix identity(int n);

    Expr& operator()(int i, int j) { return a[static_cast<std::size_t>(i * cols + j)]; }
    const Expr& operator()(int i, int j) const { return a[static_cast<std::size_t>(i * cols + j)]; }
};

ExprMatrix operator*(const ExprMatrix& x, const ExprMatrix& y);
ExprMatrix operator+(const ExprMatrix& x, const ExprMatrix& y);
ExprMatrix operator-(const ExprMatrix& x, const ExprMatrix& y);
ExprMatrix transpose(const ExprMatrix& m);
ExprMatrix simplify(const ExprMatrix& m);
Expr det(const ExprMatrix& m);
/// Classical adjugate: adj(m) * m = det(m) * I.
ExprMatrix adjugate(const ExprMatrix& m);
/// Cramer's rule: x = adj(m) b / det(m), entries simplified.
std::vector<Expr> cramer_solve(const ExprMatrix& m, std::span<const Expr> b);

/// Endomorphism field; column j is the image of d/dxj.
struct EndoField {
    ExprMatrix m;

    EndoField() = default;
    explicit EndoField(ExprMatrix mat) : m(std::move(mat)) {}
    static EndoField identity(int n) { return EndoField(ExprMatrix::identity(n)); }
    int dim() const { return m.rows; }
    VectorField column(int j) const;
};

VectorField apply(const EndoField& e, const VectorField& v);
EndoField compose(const EndoField& a, const EndoField& b);  // a after b
EndoField operator+(const EndoField& a, const EndoField& b);
EndoField operator-(const EndoField& a, const EndoField& b);
EndoField simplify(const EndoField& e);

/// Increasing multi-indices of length k in 0..n-1 as bitmasks, in
/// lexicographic order of the index tuples (12, 13, 14, 23, ... for n=4, k=2).
const std::vector<unsigned>& multi_indices(int n, int k);
int multi_index_position(int n, int k, unsigned mask);
/// Index tuple of a mask in increasing order.
std::vector<int> mask_indices(unsigned mask);

/// Differential k-form with coefficients on increasing multi-indices, using the
/// determinant convention: phi(d_i1, ..., d_ik) equals the stored coefficient.
struct DiffForm {
    int n = 0;
    int k = 0;
    std::vector<Expr> c;  // ordered as multi_indices(n, k)

    DiffForm() = default;
    DiffForm(int dim, int degree);
    static DiffForm zero(int dim, int degree) { return DiffForm(dim, degree); }
    static DiffForm function(int dim, const Expr& f);
    static DiffForm coordinate(int dim, int i);  // dx_{i+1}

    Expr& at(unsigned mask);
    const Expr& at(unsigned mask) const;
    /// Coefficient on an arbitrary index tuple with the alternating sign (0 on repeats).
    Expr coefficient(std::span<const int> idx) const;
};

DiffForm operator+(const DiffForm& a, const DiffForm& b);
DiffForm operator-(const DiffForm& a, const DiffForm& b);
DiffForm operator*(const Expr& f, const DiffForm& a);
DiffForm simplify(const DiffForm& f);
bool is_zero(const DiffForm& f);

/// Vector-valued 2-form; value on (d_a, d_b) for each increasing pair.
struct VectorValued2Form {
    int n = 0;
    std::vector<VectorField> c;  // ordered as multi_indices(n, 2)

    VectorValued2Form() = default;
    explicit VectorValued2Form(int dim);
    VectorField on_basis(int a, int b) const;
};

/// Bilinear extension to arbitrary arguments.
VectorField evaluate(const VectorValued2Form& t, const VectorField& x, const VectorField& y);
VectorValued2Form simplify(const VectorValued2Form& t);

VectorField lie_bracket(const VectorField& v, const VectorField& w);
DiffForm ext_d(const DiffForm& phi);
DiffForm wedge(const DiffForm& a, const DiffForm& b);
DiffForm interior(const VectorField& v, const DiffForm& phi);
/// phi(v1, ..., vk) with the determinant convention.
Expr evaluate(const DiffForm& phi, std::span<const VectorField> vs);
Expr evaluate(const DiffForm& phi, const VectorField& v);
Expr evaluate(const DiffForm& phi, const VectorField& v, const VectorField& w);
DiffForm lie_derivative(const VectorField& v, const DiffForm& phi);
EndoField lie_derivative(const VectorField& v, const EndoField& e);

/// Matrix W with W(i,j) = omega(d_i, d_j).
ExprMatrix form_matrix(const DiffForm& omega);

/// Pf(theta) = (theta ^ theta) / (omega ^ omega) on a 4-chart. The grid is
/// used to reject an omega whose volume coefficient vanishes at a sample.
Expr pfaffian(const DiffForm& theta, const DiffForm& omega, std::span<const Point> grid = {});
/// X with i_X omega = alpha.
VectorField sharp(const DiffForm& omega, const DiffForm& alpha, std::span<const Point> grid = {});
/// alpha with omega ^ alpha = big_omega (4-chart).
DiffForm lepage_divide(const DiffForm& big_omega, const DiffForm& omega, std::span<const Point> grid = {});
/// j with theta(X, Y) = omega(jX, Y).
EndoField endo_from_pair(const DiffForm& omega, const DiffForm& theta, std::span<const Point> grid = {});

/// Throws DegenerateSymplectic when omega is degenerate (symbolically, or at a grid point).
void require_nondegenerate(const DiffForm& omega, std::span<const Point> grid, double rel_tol = 1e-8);

}  // namespace dg4
