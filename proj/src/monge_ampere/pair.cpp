#include <algorithm>
#include <cmath>
#include <map>

#include "context.hpp"

namespace dg4 {

const char* ma_type_name(MAType t) {
    switch (t) {
        case MAType::Elliptic: return "elliptic";
        case MAType::Hyperbolic: return "hyperbolic";
        case MAType::Parabolic: return "parabolic";
        case MAType::NotEffective: return "not-effective";
        case MAType::Mixed: return "mixed";
    }
    return "?";
}

namespace {

void require_4form_pair(const DiffForm& omega, const DiffForm& theta) {
    if (omega.n != 4 || theta.n != 4 || omega.k != 2 || theta.k != 2)
        throw Error(ErrorCode::DegreeError, "a Monge-Ampere pair is two 2-forms on a 4-chart");
}

Eigen::Matrix4d skew_matrix(const Eigen::VectorXd& c) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    const auto& idx = multi_indices(4, 2);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        auto ab = mask_indices(idx[p]);
        m(ab[0], ab[1]) = c(static_cast<Eigen::Index>(p));
        m(ab[1], ab[0]) = -c(static_cast<Eigen::Index>(p));
    }
    return m;
}

}  // namespace

PairClassification classify_pair(const DiffForm& omega, const DiffForm& theta, std::span<const Point> grid,
                                 const MATolerances& tol) {
    require_4form_pair(omega, theta);
    require_nondegenerate(omega, grid, tol.rank);
    Expr pf = simplify(pfaffian(theta, omega, grid));
    DiffForm tw = simplify(wedge(theta, omega));

    PairClassification c;
    c.pf_min = std::numeric_limits<double>::infinity();
    c.pf_max = -std::numeric_limits<double>::infinity();
    std::vector<int> kind(grid.size());
    std::map<int, int> counts;
    Evaluator pev(std::vector<Expr>{pf});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point& x = grid[i];
        Eigen::VectorXd th = value(theta, x), om = value(omega, x);
        double eff = value(tw, x).norm() / std::max(th.norm() * om.norm(), 1e-300);
        if (th.norm() == 0.0) eff = 0.0;
        c.max_effective = std::max(c.max_effective, eff);
        auto b = pev.evaluate(x);
        double p = b.ok() ? b.values[0] : std::nan("");
        if (b.ok()) {
            c.pf_min = std::min(c.pf_min, p);
            c.pf_max = std::max(c.pf_max, p);
        }
        int k;
        if (!b.ok()) k = -1;
        else if (eff > tol.effective) k = static_cast<int>(MAType::NotEffective);
        else if (p > tol.pfaffian) k = static_cast<int>(MAType::Elliptic);
        else if (p < -tol.pfaffian) k = static_cast<int>(MAType::Hyperbolic);
        else if (numeric_rank(skew_matrix(th), tol.rank) == 2) k = static_cast<int>(MAType::Parabolic);
        else k = -2;  // theta vanishes
        kind[i] = k;
        ++counts[k];
    }
    if (counts.count(static_cast<int>(MAType::NotEffective))) {
        c.type = MAType::NotEffective;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (kind[i] == static_cast<int>(MAType::NotEffective) && c.witnesses.size() < 8) c.witnesses.push_back(grid[i]);
        c.reasons.push_back("theta ^ omega does not vanish");
        return c;
    }
    if (counts.size() == 1 && counts.begin()->first >= 0) {
        c.type = static_cast<MAType>(counts.begin()->first);
        return c;
    }
    c.type = MAType::Mixed;
    int common = std::max_element(counts.begin(), counts.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (kind[i] == common && common >= 0) continue;
        if (c.witnesses.size() < 8) c.witnesses.push_back(grid[i]);
    }
    if (counts.count(-1)) c.reasons.push_back("Pfaffian does not evaluate at some points");
    if (counts.count(-2)) c.reasons.push_back("theta vanishes at some points");
    if (counts.size() > 1) c.reasons.push_back("the sign of the Pfaffian changes over the grid");
    return c;
}

MongeAmperePair normalize_elliptic(const DiffForm& omega, const DiffForm& theta, std::span<const Point> grid,
                                   const MATolerances& tol) {
    require_4form_pair(omega, theta);
    DiffForm dw = simplify(ext_d(omega));
    if (!is_zero(dw)) {
        for (const Point& x : grid)
            if (value(dw, x).cwiseAbs().maxCoeff() > tol.closed) throw Error(ErrorCode::NotClosed, "d omega does not vanish", x);
    }
    PairClassification cls = classify_pair(omega, theta, grid, tol);
    if (cls.type != MAType::Elliptic) {
        Point w = cls.witnesses.empty() ? Point{} : cls.witnesses[0];
        throw Error(ErrorCode::TypeMismatch, std::string("the pair is ") + ma_type_name(cls.type) + ", not elliptic", w);
    }

    MongeAmperePair p;
    p.omega = omega;
    p.theta_in = theta;
    p.pf = simplify(pfaffian(theta, omega, grid));
    if (p.pf.is_one()) {
        p.theta = theta;
    } else {
        Expr s = Expr::integer(1) / sqrt(p.pf);
        p.theta = simplify(s * theta);
    }
    p.j = simplify(endo_from_pair(omega, p.theta, grid));
    (void)AlmostComplexStructure(p.j, grid, tol.jsquare);
    p.alpha = simplify(lepage_divide(ext_d(p.theta), omega, grid));
    p.x_alpha = simplify(sharp(omega, p.alpha, grid));
    return p;
}

VectorValued2Form r_tensor(const MongeAmperePair& p) {
    VectorValued2Form n = nijenhuis(p.j);
    VectorValued2Form r(4);
    const auto& idx = multi_indices(4, 2);
    auto ajd = [&](int b) {
        Expr s;
        for (int i = 0; i < 4; ++i) s += p.alpha.c[static_cast<std::size_t>(i)] * p.j.m(i, b);
        return s;
    };
    for (std::size_t q = 0; q < idx.size(); ++q) {
        auto ab = mask_indices(idx[q]);
        const int a = ab[0], b = ab[1];
        VectorField ea = VectorField::coordinate(4, a), eb = VectorField::coordinate(4, b);
        VectorField v = n.c[q] - ajd(b) * ea + ajd(a) * eb - p.alpha.c[static_cast<std::size_t>(b)] * p.j.column(a) +
                        p.alpha.c[static_cast<std::size_t>(a)] * p.j.column(b);
        r.c[q] = simplify(v);
    }
    return r;
}

namespace ma_detail {

namespace {

VectorField as_field(const DiffForm& f) { return VectorField(f.c); }

std::vector<VectorField> batch_fields(const MongeAmperePair& p, const VectorValued2Form& n, const VectorValued2Form& r) {
    std::vector<VectorField> fs;
    for (const auto& v : n.c) fs.push_back(v);
    for (const auto& v : r.c) fs.push_back(v);
    for (int a = 0; a < 4; ++a) fs.push_back(p.j.column(a));
    ExprMatrix w = form_matrix(p.omega);
    for (int a = 0; a < 4; ++a) {
        VectorField col(4);
        for (int i = 0; i < 4; ++i) col[i] = w(i, a);
        fs.push_back(col);
    }
    fs.push_back(as_field(p.alpha));
    fs.push_back(p.x_alpha);
    return fs;
}

}  // namespace

PairContext::PairContext(const MongeAmperePair& p)
    : n_(nijenhuis(p.j)), r_(r_tensor(p)), batch_(batch_fields(p, n_, r_)),
      dalpha_(std::vector<VectorField>{as_field(simplify(ext_d(p.alpha)))}) {}

PairValues PairContext::at(const Point& x) const {
    Eigen::MatrixXd b = batch_(x);
    PairValues v;
    v.n.n = v.r.n = 4;
    v.n.pairs = b.leftCols(6);
    v.r.pairs = b.middleCols(6, 6);
    v.j = b.middleCols(12, 4);
    v.w = b.middleCols(16, 4);
    v.alpha = b.col(20);
    v.x_alpha = b.col(21);
    v.dalpha = dalpha_(x).col(0);
    return v;
}

NondegeneracyVerdict verdict(const PairValues& v, const Point& x, double cutoff, double rank_tol) {
    NondegeneracyVerdict r;
    r.x = x;
    r.n_norm = v.n.norm();
    r.nijenhuis_ok = r.n_norm > cutoff;
    const double rn = v.r.norm();
    r.r_detects_n = rn > cutoff || r.n_norm <= cutoff;
    for (Eigen::Index q = 0; q < 6; ++q) r.alpha_jn = std::max(r.alpha_jn, std::abs(v.alpha.dot(v.j * v.n.pairs.col(q))));

    if (v.alpha.norm() > cutoff) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(v.alpha.transpose()), Eigen::ComputeFullV);
        Eigen::MatrixXd k = svd.matrixV().rightCols(3);
        Eigen::MatrixXd both(4, 6);
        both << k, v.j * k;
        r.kernel_intersection_dim = 6 - numeric_rank(both, rank_tol);
    }
    if (!r.nijenhuis_ok) return r;
    Eigen::MatrixXd q = orthonormal_span(v.n.pairs, rank_tol);
    if (q.cols() >= 2) {
        r.dalpha = std::abs(form_value(v.dalpha, 4, 2, q.leftCols(2)));
        for (Eigen::Index c = 0; c < q.cols(); ++c) r.alpha_on_image = std::max(r.alpha_on_image, std::abs(v.alpha.dot(q.col(c))));
    }
    r.dalpha_ok = q.cols() == 2 && r.dalpha > cutoff;
    r.xalpha_in_image = orthogonal_part(q, v.x_alpha).norm();
    r.overall = r.nijenhuis_ok && r.dalpha_ok;
    return r;
}

}  // namespace ma_detail

PairIdentities check_identities(const MongeAmperePair& p, std::span<const Point> grid, int random_pairs,
                                std::uint64_t seed) {
    ma_detail::PairContext ctx(p);
    DiffForm lep = simplify(wedge(p.omega, p.alpha) - ext_d(p.theta));
    UnitRng rng(seed);
    PairIdentities r;
    for (const Point& x : grid) {
        ma_detail::PairValues v = ctx.at(x);
        r.lepage = std::max(r.lepage, value(lep, x).cwiseAbs().maxCoeff());
        auto check = [&](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
            Eigen::Vector4d rab = v.r(a, b);
            double om = a.dot(v.w * b);
            r.jr = std::max(r.jr, (v.j * rab - 2 * om * v.x_alpha).cwiseAbs().maxCoeff());
            r.r_antilinear = std::max(r.r_antilinear, (v.r(v.j * a, v.j * b) + rab).cwiseAbs().maxCoeff());
            r.j_symmetry = std::max(r.j_symmetry, std::abs((v.j * a).dot(v.w * b) - a.dot(v.w * (v.j * b))));
            ++r.samples;
        };
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) check(Eigen::Vector4d::Unit(a), Eigen::Vector4d::Unit(b));
        for (int k = 0; k < random_pairs; ++k) {
            Eigen::Vector4d a, b;
            for (int i = 0; i < 4; ++i) a(i) = rng.uniform(-1, 1);
            for (int i = 0; i < 4; ++i) b(i) = rng.uniform(-1, 1);
            check(a, b);
        }
    }
    return r;
}

NondegeneracyVerdict nondegenerate(const MongeAmperePair& p, const Point& x, double cutoff, double rank_tol) {
    ma_detail::PairContext ctx(p);
    return ma_detail::verdict(ctx.at(x), x, cutoff, rank_tol);
}

}  // namespace dg4
