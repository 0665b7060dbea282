#include <algorithm>
#include <array>
#include <bit>

#include "dg4/exterior.hpp"

namespace dg4 {

namespace {

void same_dim(int a, int b, const char* what) {
    if (a != b)
        throw Error(ErrorCode::ChartMismatch, std::string(what) + ": chart dimensions " + std::to_string(a) +
                                                  " and " + std::to_string(b) + " differ");
}

constexpr int kMaxDim = 8;

struct IndexTable {
    std::array<std::array<std::vector<unsigned>, kMaxDim + 1>, kMaxDim + 1> lists;
    IndexTable() {
        for (int n = 0; n <= kMaxDim; ++n) {
            for (unsigned mask = 0; mask < (1u << n); ++mask)
                lists[static_cast<std::size_t>(n)][static_cast<std::size_t>(std::popcount(mask))].push_back(mask);
            for (auto& l : lists[static_cast<std::size_t>(n)]) {
                std::sort(l.begin(), l.end(), [](unsigned x, unsigned y) { return mask_indices(x) < mask_indices(y); });
            }
        }
    }
};

const IndexTable& index_table() {
    static const IndexTable t;
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vector fields

VectorField VectorField::coordinate(int n, int i) {
    VectorField v(n);
    v[i] = Expr::integer(1);
    return v;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    same_dim(a.dim(), b.dim(), "vector sum");
    VectorField r(a.dim());
    for (int i = 0; i < a.dim(); ++i) r[i] = a[i] + b[i];
    return r;
}

VectorField operator-(const VectorField& a, const VectorField& b) {
    same_dim(a.dim(), b.dim(), "vector difference");
    VectorField r(a.dim());
    for (int i = 0; i < a.dim(); ++i) r[i] = a[i] - b[i];
    return r;
}

VectorField operator-(const VectorField& a) {
    VectorField r(a.dim());
    for (int i = 0; i < a.dim(); ++i) r[i] = -a[i];
    return r;
}

VectorField operator*(const Expr& f, const VectorField& v) {
    VectorField r(v.dim());
    for (int i = 0; i < v.dim(); ++i) r[i] = f * v[i];
    return r;
}

VectorField simplify(const VectorField& v) {
    VectorField r(v.dim());
    for (int i = 0; i < v.dim(); ++i) r[i] = simplify(v[i]);
    return r;
}

bool is_zero(const VectorField& v) {
    return std::all_of(v.c.begin(), v.c.end(), [](const Expr& e) { return simplify(e).is_zero(); });
}

// ---------------------------------------------------------------------------
// Matrices

ExprMatrix ExprMatrix::identity(int n) {
    ExprMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = Expr::integer(1);
    return m;
}

ExprMatrix operator*(const ExprMatrix& x, const ExprMatrix& y) {
    if (x.cols != y.rows) throw Error(ErrorCode::ChartMismatch, "matrix product shape mismatch");
    ExprMatrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < y.cols; ++j) {
            Expr s;
            for (int k = 0; k < x.cols; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

ExprMatrix operator+(const ExprMatrix& x, const ExprMatrix& y) {
    ExprMatrix r(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}

ExprMatrix operator-(const ExprMatrix& x, const ExprMatrix& y) {
    ExprMatrix r(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

ExprMatrix transpose(const ExprMatrix& m) {
    ExprMatrix r(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
    return r;
}

ExprMatrix simplify(const ExprMatrix& m) {
    ExprMatrix r = m;
    for (auto& e : r.a) e = simplify(e);
    return r;
}

namespace {

ExprMatrix minor_of(const ExprMatrix& m, int row, int col) {
    ExprMatrix r(m.rows - 1, m.cols - 1);
    for (int i = 0, ri = 0; i < m.rows; ++i) {
        if (i == row) continue;
        for (int j = 0, rj = 0; j < m.cols; ++j) {
            if (j == col) continue;
            r(ri, rj++) = m(i, j);
        }
        ++ri;
    }
    return r;
}

Expr det_raw(const ExprMatrix& m) {
    if (m.rows == 0) return Expr::integer(1);
    if (m.rows == 1) return m(0, 0);
    if (m.rows == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    Expr s;
    for (int j = 0; j < m.cols; ++j) {
        if (m(0, j).is_zero()) continue;
        Expr t = m(0, j) * det_raw(minor_of(m, 0, j));
        s = (j % 2 == 0) ? s + t : s - t;
    }
    return s;
}

}  // namespace

Expr det(const ExprMatrix& m) {
    if (m.rows != m.cols) throw Error(ErrorCode::InvalidArgument, "determinant of a non-square matrix");
    return simplify(det_raw(m));
}

ExprMatrix adjugate(const ExprMatrix& m) {
    if (m.rows != m.cols) throw Error(ErrorCode::InvalidArgument, "adjugate of a non-square matrix");
    const int n = m.rows;
    ExprMatrix r(n, n);
    if (n == 1) {
        r(0, 0) = Expr::integer(1);
        return r;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Expr c = simplify(det_raw(minor_of(m, j, i)));
            r(i, j) = ((i + j) % 2 == 0) ? c : -c;
        }
    return r;
}

std::vector<Expr> cramer_solve(const ExprMatrix& m, std::span<const Expr> b) {
    if (m.rows != m.cols || static_cast<int>(b.size()) != m.rows)
        throw Error(ErrorCode::InvalidArgument, "linear system shape mismatch");
    Expr d = det(m);
    ExprMatrix adj = adjugate(m);
    std::vector<Expr> x(b.size());
    for (int i = 0; i < m.rows; ++i) {
        Expr s;
        for (int j = 0; j < m.cols; ++j) s += adj(i, j) * b[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = simplify(s / d);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Endomorphisms

VectorField EndoField::column(int j) const {
    VectorField v(m.rows);
    for (int i = 0; i < m.rows; ++i) v[i] = m(i, j);
    return v;
}

VectorField apply(const EndoField& e, const VectorField& v) {
    same_dim(e.dim(), v.dim(), "endomorphism application");
    VectorField r(v.dim());
    for (int i = 0; i < v.dim(); ++i) {
        Expr s;
        for (int j = 0; j < v.dim(); ++j) s += e.m(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

EndoField compose(const EndoField& a, const EndoField& b) {
    same_dim(a.dim(), b.dim(), "endomorphism composition");
    return EndoField(a.m * b.m);
}

EndoField operator+(const EndoField& a, const EndoField& b) {
    same_dim(a.dim(), b.dim(), "endomorphism sum");
    return EndoField(a.m + b.m);
}

EndoField operator-(const EndoField& a, const EndoField& b) {
    same_dim(a.dim(), b.dim(), "endomorphism difference");
    return EndoField(a.m - b.m);
}

EndoField simplify(const EndoField& e) { return EndoField(simplify(e.m)); }

// ---------------------------------------------------------------------------
// Multi-indices and forms

std::vector<int> mask_indices(unsigned mask) {
    std::vector<int> out;
    for (int i = 0; mask; ++i, mask >>= 1)
        if (mask & 1u) out.push_back(i);
    return out;
}

const std::vector<unsigned>& multi_indices(int n, int k) {
    if (n < 0 || n > kMaxDim || k < 0 || k > n)
        throw Error(ErrorCode::DegreeError, "no multi-indices of length " + std::to_string(k) + " in dimension " +
                                                std::to_string(n));
    return index_table().lists[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

int multi_index_position(int n, int k, unsigned mask) {
    const auto& l = multi_indices(n, k);
    auto it = std::find(l.begin(), l.end(), mask);
    if (it == l.end()) throw Error(ErrorCode::DegreeError, "multi-index does not match the form degree");
    return static_cast<int>(it - l.begin());
}

DiffForm::DiffForm(int dim, int degree) : n(dim), k(degree) {
    if (degree < 0 || degree > dim) throw Error(ErrorCode::DegreeOverflow, "form degree exceeds chart dimension");
    c.resize(multi_indices(dim, degree).size());
}

DiffForm DiffForm::function(int dim, const Expr& f) {
    DiffForm r(dim, 0);
    r.c[0] = f;
    return r;
}

DiffForm DiffForm::coordinate(int dim, int i) {
    DiffForm r(dim, 1);
    r.at(1u << i) = Expr::integer(1);
    return r;
}

Expr& DiffForm::at(unsigned mask) { return c[static_cast<std::size_t>(multi_index_position(n, k, mask))]; }

const Expr& DiffForm::at(unsigned mask) const {
    return c[static_cast<std::size_t>(multi_index_position(n, k, mask))];
}

Expr DiffForm::coefficient(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != k) throw Error(ErrorCode::DegreeError, "wrong number of indices");
    unsigned mask = 0;
    int inversions = 0;
    for (std::size_t p = 0; p < idx.size(); ++p) {
        unsigned bit = 1u << idx[p];
        if (mask & bit) return Expr();
        mask |= bit;
        for (std::size_t q = p + 1; q < idx.size(); ++q)
            if (idx[q] < idx[p]) ++inversions;
    }
    const Expr& v = at(mask);
    return inversions % 2 ? -v : v;
}

DiffForm operator+(const DiffForm& a, const DiffForm& b) {
    same_dim(a.n, b.n, "form sum");
    if (a.k != b.k) throw Error(ErrorCode::DegreeError, "adding forms of different degree");
    DiffForm r(a.n, a.k);
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
}

DiffForm operator-(const DiffForm& a, const DiffForm& b) {
    same_dim(a.n, b.n, "form difference");
    if (a.k != b.k) throw Error(ErrorCode::DegreeError, "subtracting forms of different degree");
    DiffForm r(a.n, a.k);
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
}

DiffForm operator*(const Expr& f, const DiffForm& a) {
    DiffForm r(a.n, a.k);
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = f * a.c[i];
    return r;
}

DiffForm simplify(const DiffForm& f) {
    DiffForm r = f;
    for (auto& e : r.c) e = simplify(e);
    return r;
}

bool is_zero(const DiffForm& f) {
    return std::all_of(f.c.begin(), f.c.end(), [](const Expr& e) { return simplify(e).is_zero(); });
}

VectorValued2Form::VectorValued2Form(int dim) : n(dim) {
    c.assign(multi_indices(dim, 2).size(), VectorField(dim));
}

VectorField VectorValued2Form::on_basis(int a, int b) const {
    if (a == b) return VectorField(n);
    const VectorField& v = c[static_cast<std::size_t>(multi_index_position(n, 2, (1u << a) | (1u << b)))];
    return a < b ? v : -v;
}

VectorField evaluate(const VectorValued2Form& t, const VectorField& x, const VectorField& y) {
    same_dim(t.n, x.dim(), "vector 2-form evaluation");
    same_dim(t.n, y.dim(), "vector 2-form evaluation");
    VectorField r(t.n);
    const auto& idx = multi_indices(t.n, 2);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        auto ab = mask_indices(idx[p]);
        Expr w = x[ab[0]] * y[ab[1]] - x[ab[1]] * y[ab[0]];
        if (w.is_zero()) continue;
        r = r + w * t.c[p];
    }
    return r;
}

VectorValued2Form simplify(const VectorValued2Form& t) {
    VectorValued2Form r = t;
    for (auto& v : r.c) v = simplify(v);
    return r;
}

}  // namespace dg4
