#include <algorithm>
#include <cmath>
#include <limits>

#include "dg4/almost_complex.hpp"
#include "dg4/numeric.hpp"

namespace dg4 {

namespace {

Eigen::MatrixXd complement(const Eigen::MatrixXd& q) {
    const auto n = q.rows();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(q, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(n - q.cols());
}

double frob_residual(const Eigen::MatrixXd& q, const Eigen::MatrixXd& cols) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < cols.cols(); ++k) s += orthogonal_part(q, cols.col(k)).squaredNorm();
    return std::sqrt(s);
}

void sign_normalize(Eigen::Ref<Eigen::VectorXd> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0) v = -v;
            return;
        }
}

}  // namespace

AlmostComplexStructure::AlmostComplexStructure(EndoField endo, std::span<const Point> grid, double tol)
    : j(std::move(endo)) {
    const int n = j.dim();
    if (n % 2 != 0 || j.m.cols != n) throw Error(ErrorCode::InvalidStructure, "almost complex structure needs an even square matrix");
    for (const Point& x : grid) {
        Eigen::MatrixXd jx = value(j, x);
        Eigen::MatrixXd r = jx * jx + Eigen::MatrixXd::Identity(n, n);
        if (r.cwiseAbs().maxCoeff() > tol * std::max(1.0, jx.squaredNorm()))
            throw Error(ErrorCode::InvalidStructure, "j^2 differs from -1 at a sample point", x);
    }
}

VectorValued2Form nijenhuis(const EndoField& j) {
    const int n = j.dim();
    VectorValued2Form t(n);
    const auto& idx = multi_indices(n, 2);
    std::vector<VectorField> cols;
    for (int a = 0; a < n; ++a) cols.push_back(j.column(a));
    auto partial = [n](const VectorField& v, int k) {
        VectorField r(n);
        for (int i = 0; i < n; ++i) r[i] = diff(v[i], k);
        return r;
    };
    for (std::size_t p = 0; p < idx.size(); ++p) {
        auto ab = mask_indices(idx[p]);
        const int a = ab[0], b = ab[1];
        // [j d_a, d_b] = -d_b(j d_a) and [d_a, j d_b] = d_a(j d_b).
        VectorField v = lie_bracket(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]) +
                        apply(j, partial(cols[static_cast<std::size_t>(a)], b)) -
                        apply(j, partial(cols[static_cast<std::size_t>(b)], a));
        t.c[p] = simplify(v);
    }
    return t;
}

VectorField nijenhuis(const EndoField& j, const VectorField& x, const VectorField& y) {
    VectorField jx = apply(j, x), jy = apply(j, y);
    return simplify(lie_bracket(jx, jy) - apply(j, lie_bracket(jx, y)) - apply(j, lie_bracket(x, jy)) -
                    lie_bracket(x, y));
}

Eigen::VectorXd TensorAt::operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    const auto& idx = multi_indices(n, 2);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        auto ab = mask_indices(idx[p]);
        double w = u(ab[0]) * v(ab[1]) - u(ab[1]) * v(ab[0]);
        if (w != 0.0) r += w * pairs.col(static_cast<Eigen::Index>(p));
    }
    return r;
}

TensorAt value(const VectorValued2Form& t, const Point& x) {
    TensorAt r;
    r.n = t.n;
    r.pairs = FieldBatch(t.c)(x);
    return r;
}

ImageReport image_distribution(const EndoField& j, std::span<const Point> grid, double zero_tol, double rank_tol) {
    VectorValued2Form nt = nijenhuis(j);
    bool all_zero = std::all_of(nt.c.begin(), nt.c.end(), [](const VectorField& v) { return is_zero(v); });
    if (all_zero) throw Error(ErrorCode::NijenhuisVanishes, "Nijenhuis tensor vanishes identically");

    FieldBatch batch(nt.c);
    const auto npairs = static_cast<Eigen::Index>(nt.c.size());
    std::vector<Eigen::MatrixXd> vals;
    ImageReport rep;
    std::vector<double> worst(static_cast<std::size_t>(npairs), std::numeric_limits<double>::infinity());
    std::vector<bool> live(grid.size(), false);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::MatrixXd v = batch(grid[i]);
        vals.push_back(v);
        double mx = v.colwise().norm().maxCoeff();
        if (mx <= zero_tol) {
            rep.vanishing.push_back(grid[i]);
            continue;
        }
        live[i] = true;
        rep.max_rank = std::max(rep.max_rank, numeric_rank(v, rank_tol));
        for (Eigen::Index p = 0; p < npairs; ++p)
            worst[static_cast<std::size_t>(p)] = std::min(worst[static_cast<std::size_t>(p)], v.col(p).norm() / mx);
    }
    if (rep.vanishing.size() == grid.size() && !grid.empty())
        throw Error(ErrorCode::NijenhuisVanishes, "Nijenhuis tensor vanishes at every sample point", grid[0]);

    std::size_t best = 0;
    for (std::size_t p = 0; p < worst.size(); ++p) {
        if (is_zero(nt.c[p])) continue;
        if (is_zero(nt.c[best]) || worst[p] > worst[best] + 1e-12) best = p;
    }
    auto ab = mask_indices(multi_indices(j.dim(), 2)[best]);
    rep.pair = {ab[0], ab[1]};
    rep.image = Distribution(std::vector<VectorField>{nt.c[best], simplify(apply(j, nt.c[best]))});

    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!live[i]) continue;
        const Eigen::MatrixXd& v = vals[i];
        double mx = v.colwise().norm().maxCoeff();
        if (v.col(static_cast<Eigen::Index>(best)).norm() <= rank_tol * mx) rep.chart_degenerate.push_back(grid[i]);
        Eigen::MatrixXd q = orthonormal_span(v, rank_tol);
        Eigen::MatrixXd jq = value(j, grid[i]) * q;
        rep.invariance_residual = std::max(rep.invariance_residual, frob_residual(q, jq));
    }
    return rep;
}

UTXiInvariant utxi_invariant(const EndoField& j, const Point& x, const UTXiOptions& opt) {
    if (j.dim() != 4) throw Error(ErrorCode::InvalidArgument, "UTXi invariant is defined on a 4-chart");
    VectorValued2Form nt = nijenhuis(j);
    TensorAt nx = value(nt, x);
    if (nx.norm() <= opt.zero_tol) throw Error(ErrorCode::NijenhuisVanishes, "Nijenhuis tensor vanishes at the point", x);
    Eigen::MatrixXd jx = value(j, x);

    Eigen::Index best = 0;
    nx.pairs.colwise().norm().maxCoeff(&best);
    const VectorField& s1 = nt.c[static_cast<std::size_t>(best)];
    VectorField s2 = simplify(apply(j, s1));
    VectorField b = lie_bracket(s1, s2);
    std::vector<VectorField> fields = {s1, s2, b, lie_bracket(s1, b), lie_bracket(s2, b)};
    Eigen::MatrixXd fv = FieldBatch(fields)(x);

    Eigen::MatrixXd sig = fv.leftCols(2);
    Eigen::MatrixXd e2 = orthonormal_span(sig, opt.rank_tol);
    if (e2.cols() != 2) throw Error(ErrorCode::InvalidStructure, "image of N is not two-dimensional", x);
    Eigen::VectorXd bx = fv.col(2);
    Eigen::VectorXd r = orthogonal_part(e2, bx);
    if (r.norm() <= opt.rank_tol * std::max(1.0, bx.norm()))
        throw Error(ErrorCode::DerivedDegenerate, "first derived system of Im N equals Im N at the point", x);

    UTXiInvariant u;
    u.x = x;
    Eigen::VectorXd xi3p = opt.flip_xi3 ? Eigen::VectorXd(-bx) : bx;
    Eigen::Matrix2d bm;
    for (int k = 0; k < 2; ++k) bm.col(k) = e2.transpose() * nx(e2.col(k), xi3p);

    const double tr = bm.trace(), det = bm.determinant();
    const double disc = tr * tr / 4.0 - det;
    const double scale = std::max(1e-300, bm.squaredNorm());
    if (disc < -opt.rank_tol * scale)
        throw Error(ErrorCode::ComplexEigenvalues, "eta -> N(eta, xi3) has no real invariant line", x);
    const double root = std::sqrt(std::max(0.0, disc));
    const double lam = opt.swap_labels ? tr / 2.0 - root : tr / 2.0 + root;
    if (std::abs(lam) <= opt.rank_tol * std::sqrt(scale) || root <= opt.rank_tol * std::sqrt(scale))
        throw Error(ErrorCode::DegeneratePoint, "eigenvalues of eta -> N(eta, xi3) are not separated", x);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(bm - lam * Eigen::Matrix2d::Identity(), Eigen::ComputeFullV);
    Eigen::VectorXd v1 = e2 * svd.matrixV().col(1);
    v1.normalize();
    sign_normalize(v1);

    u.f = lam;
    u.xi1 = v1;
    u.xi2 = jx * v1;
    u.xi3 = xi3p / lam;

    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i) m.col(i) = nx(u.xi1, Eigen::Vector4d::Unit(i));
    Eigen::MatrixXd perp = complement(e2);
    Eigen::VectorXd c = (m * perp).completeOrthogonalDecomposition().solve(Eigen::VectorXd(u.xi2));
    u.xi4 = perp * c;

    Eigen::MatrixXd e3(4, 3);
    e3 << e2, r / r.norm();
    Eigen::VectorXd xi4p = orthogonal_part(e3, u.xi4);
    if (xi4p.norm() <= opt.rank_tol * std::max(1.0, u.xi4.norm()))
        throw Error(ErrorCode::InvalidStructure, "no solution of N(xi1, xi4) = xi2 outside the derived system", x);

    u.residuals[0] = (nx(u.xi1, u.xi3) - u.xi1).norm();
    u.residuals[1] = (nx(u.xi2, u.xi3) + u.xi2).norm();
    u.residuals[2] = (nx(u.xi1, u.xi4) - u.xi2).norm();
    u.residuals[3] = (nx(u.xi2, u.xi4) + u.xi1).norm();
    u.antilinear_residual = (nx(u.xi2, u.xi4) - u.xi1).norm();

    Eigen::VectorXd xi3p_cls = orthogonal_part(e2, u.xi3);
    u.t_metric = xi3p_cls.norm();
    u.xi_metric = xi4p.norm();
    u.t_orientation = u.xi3.dot(r) >= 0 ? 1 : -1;
    Eigen::Matrix4d frame;
    frame << u.xi1, u.xi2, u.xi3, u.xi4;
    u.xi_orientation = frame.determinant() >= 0 ? 1 : -1;

    // Bracket forms from frozen coefficients; both brackets are tensorial modulo the lower system.
    auto coords2 = [&](const Eigen::VectorXd& v) -> Eigen::Vector2d {
        return sig.completeOrthogonalDecomposition().solve(v);
    };
    Eigen::Vector2d a1 = coords2(u.xi1), a2 = coords2(u.xi2);
    const double wedge = a1(0) * a2(1) - a1(1) * a2(0);
    u.omega2 = wedge * r.dot(xi3p_cls) / xi3p_cls.squaredNorm();

    Eigen::MatrixXd s3 = fv.leftCols(3);
    Eigen::Vector3d c3 = s3.completeOrthogonalDecomposition().solve(Eigen::VectorXd(u.xi3));
    for (int i = 0; i < 2; ++i) {
        const Eigen::Vector2d& a = i == 0 ? a1 : a2;
        Eigen::VectorXd br = c3(2) * (a(0) * fv.col(3) + a(1) * fv.col(4));
        u.omega1(i) = orthogonal_part(e3, br).dot(xi4p) / xi4p.squaredNorm();
    }
    return u;
}

double lie_derivative_residual(const EndoField& j, const VectorField& w, const Distribution& pi,
                               std::span<const Point> grid, double rank_tol) {
    EndoField l = lie_derivative(w, j);
    std::vector<VectorField> fields = pi.span;
    for (const auto& xi : pi.span) fields.push_back(simplify(apply(l, xi)));
    FieldBatch batch(fields);
    const auto p = static_cast<Eigen::Index>(pi.rank());
    double worst = 0.0;
    for (const Point& x : grid) {
        Eigen::MatrixXd v = batch(x);
        Eigen::MatrixXd q = orthonormal_span(v.leftCols(p), rank_tol);
        worst = std::max(worst, frob_residual(q, v.rightCols(p)));
    }
    return worst;
}

RealizationReport realize_distribution(const Distribution& pi2, const VectorField& s1, const VectorField& s2,
                                       std::span<const Point> grid, const RealizeOptions& opt) {
    const double zero_tol = opt.zero_tol, rank_tol = opt.rank_tol, image_tol = opt.image_tol;
    if (pi2.n != 4 || pi2.rank() != 2)
        throw Error(ErrorCode::InvalidArgument, "realization needs a rank-2 distribution on a 4-chart");
    for (const VectorField* s : {&s1, &s2}) {
        SymmetryReport sr = verify_symmetry(*s, pi2, grid, opt.symmetry_tol, rank_tol);
        if (!sr.symmetry) {
            if (!sr.witnesses.empty()) throw Error(ErrorCode::NotASymmetry, "field is not a symmetry of the distribution", sr.witnesses[0]);
            throw Error(ErrorCode::NotASymmetry, "field is not a symmetry of the distribution");
        }
    }
    VectorField sec2 = simplify(opt.section_weight * pi2.span[1]);
    ExprMatrix f(4, 4);
    const VectorField* cols[4] = {&pi2.span[0], &sec2, &s1, &s2};
    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < 4; ++r) f(r, c) = (*cols[c])[r];
    for (const Point& x : grid)
        if (condition_ratio(value(f, x)) <= rank_tol)
            throw Error(ErrorCode::FrameDependent, "distribution and symmetries are dependent at a sample point", x);

    ExprMatrix j0(4, 4);
    j0(1, 0) = Expr::integer(1);
    j0(0, 1) = Expr::integer(-1);
    j0(3, 2) = Expr::integer(1);
    j0(2, 3) = Expr::integer(-1);
    Expr d = simplify(det(f));
    ExprMatrix num = f * j0 * adjugate(f);
    ExprMatrix jm(4, 4);
    for (std::size_t i = 0; i < jm.a.size(); ++i) jm.a[i] = simplify(num.a[i] / d);
    EndoField j(std::move(jm));

    RealizationReport rep;
    rep.j = AlmostComplexStructure(j, {}, 0.0);
    EndoField sq = simplify(compose(j, j) + EndoField::identity(4));
    rep.jsquare_structural = std::all_of(sq.m.a.begin(), sq.m.a.end(), [](const Expr& e) { return e.is_zero(); });

    VectorValued2Form nt = nijenhuis(j);
    rep.nijenhuis_zero = std::all_of(nt.c.begin(), nt.c.end(), [](const VectorField& v) { return is_zero(v); });
    FieldBatch nb(nt.c);
    FieldBatch pb(pi2.span);
    for (const Point& x : grid) {
        ++rep.samples;
        Eigen::MatrixXd jx = value(j, x);
        rep.jsquare_residual = std::max(rep.jsquare_residual, (jx * jx + Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff());
        Eigen::MatrixXd nv = nb(x);
        if (nv.colwise().norm().maxCoeff() <= zero_tol) {
            rep.vanishing.push_back(x);
            continue;
        }
        Eigen::MatrixXd qn = orthonormal_span(nv, rank_tol);
        Eigen::MatrixXd qp = orthonormal_span(pb(x), rank_tol);
        double res = frob_residual(qp, qn);
        rep.image_residual = std::max(rep.image_residual, res);
        if (qn.cols() == 2 && res <= image_tol) ++rep.image_equal;
        else rep.mismatch.push_back(x);
    }
    for (const VectorField* s : {&s1, &s2}) {
        VectorField w = simplify(apply(j, *s));
        rep.lie_residual = std::max(rep.lie_residual, lie_derivative_residual(j, w, pi2, grid, rank_tol));
    }
    return rep;
}

}  // namespace dg4
