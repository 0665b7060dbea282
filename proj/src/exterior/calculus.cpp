#include <algorithm>
#include <bit>

#include "dg4/exterior.hpp"
#include "dg4/numeric.hpp"

namespace dg4 {

namespace {

void same_dim(int a, int b, const char* what) {
    if (a != b)
        throw Error(ErrorCode::ChartMismatch, std::string(what) + ": chart dimensions " + std::to_string(a) +
                                                  " and " + std::to_string(b) + " differ");
}

int bits_below(unsigned mask, int i) { return std::popcount(mask & ((1u << i) - 1u)); }

Expr symbolic_det(std::vector<std::vector<Expr>> m) {
    const std::size_t k = m.size();
    if (k == 0) return Expr::integer(1);
    if (k == 1) return m[0][0];
    if (k == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Expr s;
    for (std::size_t j = 0; j < k; ++j) {
        if (m[0][j].is_zero()) continue;
        std::vector<std::vector<Expr>> sub;
        for (std::size_t i = 1; i < k; ++i) {
            std::vector<Expr> row;
            for (std::size_t c = 0; c < k; ++c)
                if (c != j) row.push_back(m[i][c]);
            sub.push_back(std::move(row));
        }
        Expr t = m[0][j] * symbolic_det(std::move(sub));
        s = j % 2 == 0 ? s + t : s - t;
    }
    return s;
}

[[noreturn]] void degenerate(const std::string& msg, const Point* witness = nullptr) {
    if (witness) throw Error(ErrorCode::DegenerateSymplectic, msg, *witness);
    throw Error(ErrorCode::DegenerateSymplectic, msg);
}

}  // namespace

VectorField lie_bracket(const VectorField& v, const VectorField& w) {
    same_dim(v.dim(), w.dim(), "lie_bracket");
    const int n = v.dim();
    VectorField r(n);
    for (int i = 0; i < n; ++i) {
        Expr s;
        for (int k = 0; k < n; ++k) {
            if (!v[k].is_zero()) s += v[k] * diff(w[i], k);
            if (!w[k].is_zero()) s -= w[k] * diff(v[i], k);
        }
        r[i] = simplify(s);
    }
    return r;
}

DiffForm ext_d(const DiffForm& phi) {
    if (phi.k >= phi.n) throw Error(ErrorCode::DegreeOverflow, "exterior derivative of a top-degree form");
    DiffForm r(phi.n, phi.k + 1);
    const auto& src = multi_indices(phi.n, phi.k);
    std::vector<Expr> acc(r.c.size());
    for (std::size_t p = 0; p < src.size(); ++p) {
        const unsigned I = src[p];
        if (phi.c[p].is_zero()) continue;
        for (int i = 0; i < phi.n; ++i) {
            if (I & (1u << i)) continue;
            Expr d = diff(phi.c[p], i);
            if (d.is_zero()) continue;
            auto pos = static_cast<std::size_t>(multi_index_position(phi.n, phi.k + 1, I | (1u << i)));
            acc[pos] = bits_below(I, i) % 2 ? acc[pos] - d : acc[pos] + d;
        }
    }
    for (std::size_t q = 0; q < acc.size(); ++q) r.c[q] = simplify(acc[q]);
    return r;
}

DiffForm wedge(const DiffForm& a, const DiffForm& b) {
    same_dim(a.n, b.n, "wedge");
    if (a.k + b.k > a.n) throw Error(ErrorCode::DegreeOverflow, "wedge degree exceeds chart dimension");
    DiffForm r(a.n, a.k + b.k);
    const auto& ia = multi_indices(a.n, a.k);
    const auto& ib = multi_indices(b.n, b.k);
    for (std::size_t p = 0; p < ia.size(); ++p) {
        if (a.c[p].is_zero()) continue;
        for (std::size_t q = 0; q < ib.size(); ++q) {
            if (b.c[q].is_zero() || (ia[p] & ib[q])) continue;
            int inv = 0;
            for (int j : mask_indices(ib[q])) inv += std::popcount(ia[p] >> (j + 1));
            Expr t = a.c[p] * b.c[q];
            Expr& slot = r.at(ia[p] | ib[q]);
            slot = inv % 2 ? slot - t : slot + t;
        }
    }
    return simplify(r);
}

DiffForm interior(const VectorField& v, const DiffForm& phi) {
    same_dim(v.dim(), phi.n, "interior");
    if (phi.k == 0) throw Error(ErrorCode::DegreeError, "interior product of a 0-form");
    DiffForm r(phi.n, phi.k - 1);
    const auto& idx = multi_indices(phi.n, phi.k - 1);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        Expr s;
        for (int m = 0; m < phi.n; ++m) {
            if ((idx[p] & (1u << m)) || v[m].is_zero()) continue;
            Expr t = v[m] * phi.at(idx[p] | (1u << m));
            s = bits_below(idx[p], m) % 2 ? s - t : s + t;
        }
        r.c[p] = simplify(s);
    }
    return r;
}

Expr evaluate(const DiffForm& phi, std::span<const VectorField> vs) {
    if (static_cast<int>(vs.size()) != phi.k) throw Error(ErrorCode::DegreeError, "form evaluated on wrong number of vectors");
    for (const auto& v : vs) same_dim(v.dim(), phi.n, "form evaluation");
    const auto& idx = multi_indices(phi.n, phi.k);
    Expr s;
    for (std::size_t p = 0; p < idx.size(); ++p) {
        if (phi.c[p].is_zero()) continue;
        auto rows = mask_indices(idx[p]);
        std::vector<std::vector<Expr>> m(rows.size(), std::vector<Expr>(vs.size()));
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = 0; b < vs.size(); ++b) m[a][b] = vs[b][rows[a]];
        s += phi.c[p] * symbolic_det(std::move(m));
    }
    return s;
}

Expr evaluate(const DiffForm& phi, const VectorField& v) { return evaluate(phi, std::span<const VectorField>(&v, 1)); }

Expr evaluate(const DiffForm& phi, const VectorField& v, const VectorField& w) {
    const VectorField vs[2] = {v, w};
    return evaluate(phi, std::span<const VectorField>(vs, 2));
}

DiffForm lie_derivative(const VectorField& v, const DiffForm& phi) {
    same_dim(v.dim(), phi.n, "lie_derivative");
    DiffForm r(phi.n, phi.k);
    const auto& idx = multi_indices(phi.n, phi.k);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        Expr s;
        for (int k = 0; k < phi.n; ++k)
            if (!v[k].is_zero()) s += v[k] * diff(phi.c[p], k);
        std::vector<int> I = mask_indices(idx[p]);
        for (std::size_t slot = 0; slot < I.size(); ++slot) {
            for (int k = 0; k < phi.n; ++k) {
                Expr dv = diff(v[k], I[slot]);
                if (dv.is_zero()) continue;
                std::vector<int> J = I;
                J[slot] = k;
                Expr c = phi.coefficient(J);
                if (!c.is_zero()) s += dv * c;
            }
        }
        r.c[p] = simplify(s);
    }
    return r;
}

EndoField lie_derivative(const VectorField& v, const EndoField& e) {
    same_dim(v.dim(), e.dim(), "lie_derivative");
    const int n = v.dim();
    ExprMatrix m(n, n);
    for (int j = 0; j < n; ++j) {
        VectorField col = lie_bracket(v, e.column(j));
        for (int k = 0; k < n; ++k) {
            Expr dv = diff(v[k], j);
            if (dv.is_zero()) continue;
            col = col + dv * e.column(k);
        }
        for (int i = 0; i < n; ++i) m(i, j) = simplify(col[i]);
    }
    return EndoField(std::move(m));
}

ExprMatrix form_matrix(const DiffForm& omega) {
    if (omega.k != 2) throw Error(ErrorCode::DegreeError, "form_matrix needs a 2-form");
    ExprMatrix w(omega.n, omega.n);
    for (int i = 0; i < omega.n; ++i)
        for (int j = 0; j < omega.n; ++j) {
            const int ij[2] = {i, j};
            w(i, j) = omega.coefficient(ij);
        }
    return w;
}

void require_nondegenerate(const DiffForm& omega, std::span<const Point> grid, double rel_tol) {
    ExprMatrix w = form_matrix(omega);
    if (det(w).is_zero()) degenerate("2-form is degenerate identically");
    for (const Point& x : grid) {
        Eigen::MatrixXd wx = value(w, x);
        if (numeric_rank(wx, rel_tol) < omega.n) degenerate("2-form is degenerate at a sample point", &x);
    }
}

Expr pfaffian(const DiffForm& theta, const DiffForm& omega, std::span<const Point> grid) {
    if (theta.n != 4 || omega.n != 4 || theta.k != 2 || omega.k != 2)
        throw Error(ErrorCode::DegreeError, "pfaffian needs two 2-forms on a 4-chart");
    Expr vol = wedge(omega, omega).c[0];
    if (vol.is_zero()) degenerate("omega ^ omega vanishes identically");
    if (!grid.empty()) {
        Evaluator ev(std::vector<Expr>{vol});
        for (const Point& x : grid) {
            auto b = ev.evaluate(x);
            if (!b.ok() || b.values[0] == 0.0) degenerate("omega ^ omega vanishes at a sample point", &x);
        }
    }
    return simplify(wedge(theta, theta).c[0] / vol);
}

VectorField sharp(const DiffForm& omega, const DiffForm& alpha, std::span<const Point> grid) {
    same_dim(omega.n, alpha.n, "sharp");
    if (omega.k != 2 || alpha.k != 1) throw Error(ErrorCode::DegreeError, "sharp needs a 2-form and a 1-form");
    require_nondegenerate(omega, grid);
    // i_X omega = alpha  <=>  W^T X = alpha.
    return VectorField(cramer_solve(transpose(form_matrix(omega)), alpha.c));
}

DiffForm lepage_divide(const DiffForm& big_omega, const DiffForm& omega, std::span<const Point> grid) {
    if (omega.n != 4 || big_omega.n != 4 || omega.k != 2 || big_omega.k != 3)
        throw Error(ErrorCode::DegreeError, "lepage_divide needs a 3-form and a 2-form on a 4-chart");
    require_nondegenerate(omega, grid);
    ExprMatrix m(4, 4);
    for (int i = 0; i < 4; ++i) {
        DiffForm col = wedge(omega, DiffForm::coordinate(4, i));
        for (int r = 0; r < 4; ++r) m(r, i) = col.c[static_cast<std::size_t>(r)];
    }
    DiffForm alpha(4, 1);
    alpha.c = cramer_solve(m, big_omega.c);
    return alpha;
}

EndoField endo_from_pair(const DiffForm& omega, const DiffForm& theta, std::span<const Point> grid) {
    same_dim(omega.n, theta.n, "endo_from_pair");
    if (omega.k != 2 || theta.k != 2) throw Error(ErrorCode::DegreeError, "endo_from_pair needs two 2-forms");
    require_nondegenerate(omega, grid);
    // theta(X,Y) = omega(jX,Y) gives Theta = J^T W, i.e. J = W^{-1} Theta for antisymmetric W, Theta.
    ExprMatrix w = form_matrix(omega);
    ExprMatrix t = form_matrix(theta);
    Expr d = det(w);
    ExprMatrix adj_t = adjugate(w) * t;
    ExprMatrix j(omega.n, omega.n);
    for (std::size_t i = 0; i < j.a.size(); ++i) j.a[i] = simplify(adj_t.a[i] / d);
    return EndoField(std::move(j));
}

}  // namespace dg4
