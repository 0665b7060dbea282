#include <algorithm>
#include <cmath>

#include "dg4/almost_complex.hpp"
#include "dg4/numeric.hpp"

namespace dg4 {

namespace {

constexpr int kT = 3;  // variable index of t in slice expressions

ExprMatrix outer(const VectorField& w, const DiffForm& a) {
    const int n = w.dim();
    ExprMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) m(i, k) = w[i] * a.c[static_cast<std::size_t>(k)];
    return m;
}

ExprMatrix simplified(const ExprMatrix& m) {
    ExprMatrix r = m;
    for (auto& e : r.a) e = simplify(e);
    return r;
}

ExprMatrix projector_c(const ProcomplexStructure& p) {
    return simplified(ExprMatrix::identity(3) - outer(p.w, p.alpha));
}

double frob_residual(const Eigen::MatrixXd& q, const Eigen::MatrixXd& cols) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < cols.cols(); ++k) s += orthogonal_part(q, cols.col(k)).squaredNorm();
    return std::sqrt(s);
}

}  // namespace

Point ProcomplexStructure::slice_point(const Point& x) const {
    if (t_axis < 0) return x;
    if (x.size() != 4) throw Error(ErrorCode::ChartMismatch, "procomplex source points live on a 4-chart");
    Point r(4);
    for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(q_axes[static_cast<std::size_t>(i)])];
    r[3] = x[static_cast<std::size_t>(t_axis)];
    return r;
}

ProcomplexStructure procomplex_from_acs(const EndoField& j, int t_axis, std::span<const Point> grid) {
    if (j.dim() != 4) throw Error(ErrorCode::InvalidArgument, "procomplex reduction needs a 4-chart");
    if (t_axis < 0 || t_axis > 3) throw Error(ErrorCode::InvalidArgument, "t axis must be a coordinate index 0..3");
    ProcomplexStructure p;
    p.t_axis = t_axis;
    for (int i = 0; i < 4; ++i)
        if (i != t_axis) p.q_axes.push_back(i);
    std::vector<int> perm = p.q_axes;
    perm.push_back(t_axis);

    std::vector<Expr> sub(4);
    for (int k = 0; k < 4; ++k) sub[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = Expr::var(k);
    ExprMatrix k4(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) k4(r, c) = substitute(j.m(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]), sub);

    // w = pr(j d_t); C = TQ cap j TQ = ker beta with beta(v) = (j v)_t.
    VectorField w(3);
    DiffForm beta(3, 1);
    ExprMatrix jqq(3, 3);
    for (int r = 0; r < 3; ++r) {
        w[r] = simplify(k4(r, kT));
        beta.c[static_cast<std::size_t>(r)] = k4(kT, r);
        for (int c = 0; c < 3; ++c) jqq(r, c) = k4(r, c);
    }
    Expr bw = simplify(evaluate(beta, w));
    for (const Point& x : grid) {
        Point s = p.slice_point(x);
        Evaluator ev(std::vector<Expr>{bw});
        auto b = ev.evaluate(s);
        if (!b.ok() || std::abs(b.values[0]) <= 1e-12 || value(w, s).norm() <= 1e-12)
            throw Error(ErrorCode::ProjectionDegenerate, "projection of j d_t degenerates at a sample point", x);
    }
    p.w = w;
    p.alpha = DiffForm(3, 1);
    for (int r = 0; r < 3; ++r) p.alpha.c[static_cast<std::size_t>(r)] = simplify(beta.c[static_cast<std::size_t>(r)] / bw);
    p.J = EndoField(simplified(jqq * projector_c(p)));
    return p;
}

EndoField nijenhuis_operator(const ProcomplexStructure& p) {
    EndoField l = lie_derivative(p.w, p.J);
    ExprMatrix dj(3, 3);
    for (std::size_t i = 0; i < dj.a.size(); ++i) dj.a[i] = diff(p.J.m.a[i], kT);
    ExprMatrix a = (l.m - p.J.m * dj) * projector_c(p);
    return EndoField(simplified(a));
}

ProcomplexCheck check_procomplex(const ProcomplexStructure& p, std::span<const Point> points, double rank_tol) {
    EndoField a = nijenhuis_operator(p);
    DiffForm la = lie_derivative(p.w, p.alpha);
    ProcomplexCheck c;
    for (const Point& x : points) {
        ++c.samples;
        Eigen::MatrixXd jx = value(p.J, x);
        Eigen::MatrixXd ax = value(a, x);
        Eigen::VectorXd wx = value(p.w, x);
        Eigen::VectorXd lax = value(la, x);
        c.spectrum_residual = std::max(c.spectrum_residual, (jx * jx * jx + jx).cwiseAbs().maxCoeff());
        c.kernel_residual = std::max(c.kernel_residual, (jx * wx).norm());
        int r = numeric_rank(jx, rank_tol);
        c.min_rank = std::min(c.min_rank, r);
        c.max_rank = std::max(c.max_rank, r);
        Eigen::MatrixXd id = ax * jx + jx * ax - wx * lax.transpose();
        c.anticommutation = std::max(c.anticommutation, id.cwiseAbs().maxCoeff());
    }
    return c;
}

CocomplexReport cocomplex_realize(const DiffForm& alpha, const VectorField& w, const ExprMatrix& seed,
                                  std::span<const Point> grid, double zero_tol, double rank_tol, double symmetry_tol,
                                  double image_tol) {
    if (alpha.n != 3 || alpha.k != 1 || w.dim() != 3)
        throw Error(ErrorCode::InvalidArgument, "cocomplex realization needs a 1-form and a field on a 3-chart");
    if (seed.rows != 2 || seed.cols != 2) throw Error(ErrorCode::InvalidArgument, "seed must be a 2x2 matrix");

    std::vector<Point> pts;
    for (const Point& x : grid) pts.emplace_back(x.begin(), x.begin() + std::min<std::ptrdiff_t>(3, static_cast<std::ptrdiff_t>(x.size())));

    Expr aw = simplify(evaluate(alpha, w) - Expr::integer(1));
    if (!aw.is_zero()) {
        Evaluator ev(std::vector<Expr>{aw});
        for (const Point& x : pts) {
            auto b = ev.evaluate(x);
            if (!b.ok() || std::abs(b.values[0]) > 1e-12) throw Error(ErrorCode::NotNormalized, "alpha(w) differs from 1", x);
        }
    }
    Distribution pi = kernel_distribution({alpha}, pts, rank_tol);
    SymmetryReport sr = verify_symmetry(w, pi, pts, symmetry_tol, rank_tol);
    if (!sr.symmetry) {
        if (!sr.witnesses.empty()) throw Error(ErrorCode::NotASymmetry, "w is not a symmetry of ker alpha", sr.witnesses[0]);
        throw Error(ErrorCode::NotASymmetry, "w is not a symmetry of ker alpha");
    }
    for (const Point& x : pts) {
        Eigen::MatrixXd s = value(seed, x);
        if ((s * s + Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, s.squaredNorm()))
            throw Error(ErrorCode::InvalidStructure, "seed does not square to -1", x);
    }

    ExprMatrix g(3, 3), d(3, 3);
    const VectorField* cols[3] = {&pi.span[0], &pi.span[1], &w};
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) g(r, c) = (*cols[c])[r];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) d(r, c) = seed(r, c);
    Expr dg = simplify(det(g));
    ExprMatrix num = g * d * adjugate(g);
    ExprMatrix jm(3, 3);
    for (std::size_t i = 0; i < jm.a.size(); ++i) jm.a[i] = simplify(num.a[i] / dg);

    CocomplexReport rep;
    rep.structure.J = EndoField(std::move(jm));
    rep.structure.w = w;
    rep.structure.alpha = alpha;
    rep.structure.q_axes = {0, 1, 2};

    EndoField a = nijenhuis_operator(rep.structure);
    DiffForm la = lie_derivative(w, alpha);
    FieldBatch pb(pi.span);
    for (const Point& x : pts) {
        ++rep.samples;
        rep.lie_alpha = std::max(rep.lie_alpha, value(la, x).norm());
        Eigen::MatrixXd ax = value(a, x);
        if (ax.cwiseAbs().maxCoeff() <= zero_tol) {
            rep.vanishing.push_back(x);
            continue;
        }
        Eigen::MatrixXd qa = orthonormal_span(ax, rank_tol);
        Eigen::MatrixXd qp = orthonormal_span(pb(x), rank_tol);
        double res = frob_residual(qp, qa);
        rep.image_residual = std::max(rep.image_residual, res);
        if (qa.cols() == 2 && res <= image_tol) ++rep.image_equal;
        else rep.mismatch.push_back(x);
    }
    return rep;
}

}  // namespace dg4
