#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "context.hpp"

namespace dg4 {

namespace {

using ma_detail::PairContext;
using ma_detail::PairValues;

Expr scalar(double v) {
    if (v == std::round(v) && std::abs(v) < 1e15) return Expr::integer(static_cast<std::int64_t>(v));
    return Expr::real(v);
}

Expr pairing(const DiffForm& a, const VectorField& v) { return evaluate(a, v); }

Expr dot(const VectorField& a, const VectorField& b) {
    Expr s;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

/// Z0 at a point, symbolic or by finite differences of (P1, P2).
using Z0Source = std::function<Eigen::Vector4d(const Point&)>;

FramePoint frame_at(const PairContext& ctx, const Z0Source& z0_at, const Point& x, const FrameOptions& opt) {
    FramePoint f;
    f.x = x;
    auto fail = [&](const char* step, std::string msg) {
        f.failed_step = step;
        f.message = std::move(msg);
        return f;
    };
    PairValues v;
    try {
        v = ctx.at(x);
    } catch (const Error& e) {
        return fail("X0", e.what());
    }
    const double cut = opt.cutoff;
    Eigen::Vector4d x0 = opt.lambda * v.x_alpha;
    if (x0.norm() <= cut) return fail("X0", "X_alpha vanishes");
    NondegeneracyVerdict nd = ma_detail::verdict(v, x, cut, opt.rank_tol);
    if (!nd.overall) return fail("nondegeneracy", nd.nijenhuis_ok ? "d alpha vanishes on Im N" : "N vanishes");

    // N(X0, Y0) = X0 read on Pi2 = <X0, jX0>, with Y0 orthogonal to Pi2.
    Eigen::Vector4d jx0 = v.j * x0;
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i) m.col(i) = v.n(x0, Eigen::Vector4d::Unit(i));
    Eigen::Matrix4d a;
    a.row(0) = x0.transpose() * m;
    a.row(1) = jx0.transpose() * m;
    a.row(2) = x0.transpose();
    a.row(3) = jx0.transpose();
    Eigen::Vector4d rhs(x0.squaredNorm(), jx0.dot(x0), 0.0, 0.0);
    if (condition_ratio(a) <= opt.rank_tol) return fail("Y0", "the system for Y0 is singular");
    Eigen::Vector4d y0 = a.fullPivLu().solve(rhs);
    y0 += opt.y0_shift(0) * x0 + opt.y0_shift(1) * jx0;
    f.y0 = y0;
    const double scale = std::max(1.0, x0.norm());
    if ((v.n(x0, y0) - x0).norm() > opt.frame_tol * scale * std::max(1.0, y0.norm()))
        return fail("Y0", "N(X0, .) does not reach X0");

    Eigen::Vector4d jy0 = v.j * y0;
    f.alpha_frame = {v.alpha.dot(x0), v.alpha.dot(jx0), v.alpha.dot(y0), v.alpha.dot(jy0) - 1.0};
    for (double r : f.alpha_frame)
        if (std::abs(r) > opt.frame_tol * scale * std::max(1.0, y0.norm())) return fail("alpha-frame", "alpha on X0, jX0, Y0, jY0 is off");

    double c = x0.dot(v.w * jy0);
    if (std::abs(c) <= cut) return fail("Y0", "omega(X0, jY0) vanishes");
    Eigen::Vector4d p1 = x0 / c;
    Eigen::Vector4d p2 = v.j * p1;
    f.omega_p1_jy0 = p1.dot(v.w * jy0);

    Eigen::Vector4d z0;
    try {
        z0 = z0_at(x);
    } catch (const Error& e) {
        return fail("Z0", e.what());
    }
    Eigen::MatrixXd pp(4, 2);
    pp << p1, p2;
    Eigen::MatrixXd q = orthonormal_span(pp, opt.rank_tol);
    if (q.cols() != 2 || orthogonal_part(q, z0).norm() <= opt.rank_tol * std::max(1.0, z0.norm()))
        return fail("Z0", "[P1, P2] lies in Pi2");

    Eigen::Vector4d jz0 = v.j * z0;
    const double az = v.alpha.dot(z0), ajz = v.alpha.dot(jz0);
    Eigen::Vector4d u = ajz * z0 - az * jz0;
    if (u.norm() <= cut * std::max(1.0, z0.norm() * z0.norm())) return fail("L1", "alpha vanishes on <Z0, jZ0>");
    double lq = v.n(p1, u).dot(p1) / p1.squaredNorm();
    if (std::abs(lq) <= cut) return fail("Q2", "N(P1, .) vanishes on L1");
    Eigen::Vector4d q2 = u / lq;
    Eigen::Vector4d q1 = v.j * q2;

    std::complex<double> w(ajz, -az);
    w /= std::abs(w);
    if (w.real() < 0 || (w.real() == 0 && w.imag() < 0)) w = -w;
    f.w = w;
    f.phi = 0.5 * std::atan2(w.imag(), w.real());
    f.p1 = p1;
    f.p2 = p2;
    f.q1 = q1;
    f.q2 = q2;
    f.ok = true;
    return f;
}

struct FrameMachinery {
    PairContext ctx;
    FieldBatch p_pair;
    FieldBatch z0;
    bool symbolic;

    FrameMachinery(const MongeAmperePair& p, const CanonicalFrame& f)
        : ctx(p), p_pair(std::vector<VectorField>{f.p1, f.p2}), symbolic(f.symbolic) {
        if (symbolic) z0 = FieldBatch(std::vector<VectorField>{f.z0});
    }

    Z0Source source() const {
        if (symbolic) return [this](const Point& x) { return Eigen::Vector4d(z0(x).col(0)); };
        return [this](const Point& x) { return Eigen::Vector4d(fd_bracket(p_pair, x)); };
    }
};

}  // namespace

CanonicalFrame canonical_frame(const MongeAmperePair& p, std::span<const Point> grid, const FrameOptions& opt) {
    if (opt.lambda == 0.0) throw Error(ErrorCode::InvalidArgument, "the gauge factor lambda must be nonzero");
    CanonicalFrame f;
    f.lambda = opt.lambda;
    f.symbolic = !opt.numeric_bracket;
    f.x0 = simplify(scalar(opt.lambda) * p.x_alpha);
    // omega(X0, jY0) = lambda alpha(jY0) = lambda, so P1 = X_alpha for every admissible X0 and Y0.
    f.p1 = p.x_alpha;
    f.p2 = simplify(apply(p.j, f.p1));
    if (f.symbolic) {
        f.z0 = lie_bracket(f.p1, f.p2);
        VectorField jz = simplify(apply(p.j, f.z0));
        VectorField u = simplify(pairing(p.alpha, jz) * f.z0 - pairing(p.alpha, f.z0) * jz);
        VectorField npu = evaluate(nijenhuis(p.j), f.p1, u);
        Expr lq = simplify(dot(npu, f.p1) / dot(f.p1, f.p1));
        f.q2 = simplify((Expr::integer(1) / lq) * u);
        f.q1 = simplify(apply(p.j, f.q2));
    }
    FrameMachinery mach(p, f);
    Z0Source src = mach.source();
    for (const Point& x : grid) f.points.push_back(frame_at(mach.ctx, src, x, opt));
    return f;
}

Theorem5Report verify_theorem5(const CanonicalFrame& f, const MongeAmperePair& p, double tol) {
    PairContext ctx(p);
    Theorem5Report rep;
    // Rows and columns in the order P1, P2, Q1, Q2; entry (a, b) is omega(f_a, f_b).
    Eigen::Matrix4d e_omega;
    e_omega << 0, 0, 1, 0,
               0, 0, 0, 1,
              -1, 0, 0, 0,
               0, -1, 0, 0;
    // N(f_a, f_b) as coefficients on the frame, for a < b.
    struct Entry { int a, b; Eigen::Vector4d coeff; };
    const Entry e_n[] = {
        {0, 1, {0, 0, 0, 0}},  {0, 2, {0, -1, 0, 0}}, {0, 3, {1, 0, 0, 0}},
        {1, 2, {-1, 0, 0, 0}}, {1, 3, {0, -1, 0, 0}}, {2, 3, {0, 0, 0, 0}},
    };
    const Eigen::Vector4d e_alpha(0, 0, 1, 0);

    bool all = true;
    for (const FramePoint& fp : f.points) {
        TableResiduals t;
        t.x = fp.x;
        if (!fp.ok) {
            t.provenance = "frame undefined at " + fp.failed_step + ": " + fp.message;
            rep.points.push_back(t);
            continue;
        }
        PairValues v = ctx.at(fp.x);
        Eigen::Matrix4d fr;
        fr << fp.p1, fp.p2, fp.q1, fp.q2;
        t.applicable = true;
        t.omega = (fr.transpose() * v.w * fr - e_omega).cwiseAbs().maxCoeff();
        for (const Entry& e : e_n)
            t.nij = std::max(t.nij, (v.n(fr.col(e.a), fr.col(e.b)) - fr * e.coeff).cwiseAbs().maxCoeff());
        Eigen::Matrix4d jf = v.j * fr;
        t.jrow = std::max({(jf.col(0) - fr.col(1)).cwiseAbs().maxCoeff(), (jf.col(1) + fr.col(0)).cwiseAbs().maxCoeff(),
                           (jf.col(2) + fr.col(3)).cwiseAbs().maxCoeff(), (jf.col(3) - fr.col(2)).cwiseAbs().maxCoeff()});
        t.alpha = (fr.transpose() * v.alpha - e_alpha).cwiseAbs().maxCoeff();
        t.pass = t.omega <= tol && t.nij <= tol && t.jrow <= tol && t.alpha <= tol;
        all = all && t.pass;
        ++rep.applicable;
        rep.max_omega = std::max(rep.max_omega, t.omega);
        rep.max_nij = std::max(rep.max_nij, t.nij);
        rep.max_jrow = std::max(rep.max_jrow, t.jrow);
        rep.max_alpha = std::max(rep.max_alpha, t.alpha);
        rep.points.push_back(t);
    }
    rep.pass = all && rep.applicable > 0;
    return rep;
}

double StructurePoint::coefficient(int i, int j, int k) const {
    if (i == j) return 0.0;
    static const int pos[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
    double s = c[static_cast<std::size_t>(pos[i][j])][static_cast<std::size_t>(k)];
    return i < j ? s : -s;
}

std::vector<StructurePoint> structure_functions(const CanonicalFrame& f, const MongeAmperePair& p,
                                                std::span<const Point> grid, bool numeric, double rank_tol) {
    const bool use_fd = numeric || !f.symbolic;
    FrameMachinery mach(p, f);
    Z0Source src = mach.source();
    FrameOptions opt;
    opt.lambda = f.lambda;
    opt.numeric_bracket = !f.symbolic;
    opt.rank_tol = rank_tol;

    FieldBatch sym_frame, sym_brackets;
    if (!use_fd) {
        std::vector<VectorField> fs = f.fields(), br;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) br.push_back(lie_bracket(fs[static_cast<std::size_t>(a)], fs[static_cast<std::size_t>(b)]));
        sym_frame = FieldBatch(fs);
        sym_brackets = FieldBatch(br);
    }
    auto numeric_frame = [&](const Point& x) {
        FramePoint fp = frame_at(mach.ctx, src, x, opt);
        if (!fp.ok) throw Error(ErrorCode::DegeneratePoint, "frame undefined at " + fp.failed_step, x);
        Eigen::Matrix4d m;
        m << fp.p1, fp.p2, fp.q1, fp.q2;
        return m;
    };

    std::vector<StructurePoint> out;
    for (const Point& x : grid) {
        StructurePoint sp;
        sp.x = x;
        try {
            Eigen::Matrix4d fr;
            Eigen::Matrix<double, 4, 6> br;
            if (!use_fd) {
                fr = sym_frame(x);
                br = sym_brackets(x);
            } else {
                fr = numeric_frame(x);
                const double h = 1e-3;
                std::array<Eigen::Matrix4d, 4> d;
                for (int k = 0; k < 4; ++k) {
                    auto central = [&](double step) {
                        Point a = x, b = x;
                        a[static_cast<std::size_t>(k)] += step;
                        b[static_cast<std::size_t>(k)] -= step;
                        return Eigen::Matrix4d((numeric_frame(a) - numeric_frame(b)) / (2 * step));
                    };
                    d[static_cast<std::size_t>(k)] = (4 * central(h / 2) - central(h)) / 3;
                }
                // Column c of d[k] is d/dx_k of field c; [A, B] = DB A - DA B.
                auto jac = [&](int c) {
                    Eigen::Matrix4d jm;
                    for (int k = 0; k < 4; ++k) jm.col(k) = d[static_cast<std::size_t>(k)].col(c);
                    return jm;
                };
                int q = 0;
                for (int a = 0; a < 4; ++a)
                    for (int b = a + 1; b < 4; ++b) br.col(q++) = jac(b) * fr.col(a) - jac(a) * fr.col(b);
            }
            if (condition_ratio(fr) <= rank_tol) throw Error(ErrorCode::FrameSingular, "frame is singular", x);
            Eigen::Matrix<double, 4, 6> cm = fr.fullPivLu().solve(br);
            sp.residual = (fr * cm - br).cwiseAbs().maxCoeff();
            for (int q = 0; q < 6; ++q)
                for (int k = 0; k < 4; ++k) sp.c[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)] = cm(k, q);
            sp.ok = true;
        } catch (const Error& e) {
            sp.message = e.what();
        }
        out.push_back(sp);
    }
    return out;
}

SlopeReport slope(const CanonicalFrame& f, const MongeAmperePair& p, const GridSpec& spec, bool with_u1, double jump) {
    SlopeReport rep;
    for (const FramePoint& fp : f.points) {
        if (!fp.ok) continue;
        SlopeEntry e;
        e.x = fp.x;
        e.w = fp.w;
        e.phi = fp.phi;
        if (with_u1) {
            try {
                UTXiInvariant ut = utxi_invariant(p.j, fp.x);
                Eigen::MatrixXd b(4, 2);
                b << fp.p1, fp.p2;
                Eigen::Vector2d cf = b.colPivHouseholderQr().solve(Eigen::VectorXd(ut.xi1));
                double ang = std::atan2(cf(1), cf(0));
                if (ang < 0) ang += std::numbers::pi;
                if (ang >= std::numbers::pi) ang -= std::numbers::pi;
                e.u1 = ang;
            } catch (const Error&) {
            }
        }
        rep.entries.push_back(e);
    }

    std::size_t lattice = 1;
    for (int c : spec.counts) lattice *= static_cast<std::size_t>(c);
    lattice = std::min(lattice, f.points.size());
    const int n = spec.dim();
    std::vector<std::size_t> stride(static_cast<std::size_t>(n), 1);
    for (int k = n - 2; k >= 0; --k)
        stride[static_cast<std::size_t>(k)] = stride[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(spec.counts[static_cast<std::size_t>(k + 1)]);
    for (std::size_t i = 0; i < lattice; ++i) {
        for (int k = 0; k < n; ++k) {
            const std::size_t s = stride[static_cast<std::size_t>(k)];
            const std::size_t coord = (i / s) % static_cast<std::size_t>(spec.counts[static_cast<std::size_t>(k)]);
            if (coord + 1 >= static_cast<std::size_t>(spec.counts[static_cast<std::size_t>(k)])) continue;
            const FramePoint& a = f.points[i];
            const FramePoint& b = f.points[i + s];
            if (a.ok && b.ok && std::abs(a.w - b.w) > jump) rep.discontinuities.emplace_back(a.x, b.x);
        }
    }
    return rep;
}

}  // namespace dg4
