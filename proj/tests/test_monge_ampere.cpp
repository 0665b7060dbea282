#include <chrono>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dg4/monge_ampere.hpp"
#include "dg4/numeric.hpp"

using namespace dg4;

namespace {

Expr p(const char* s) { return parse(s, 4); }

// Terms like {"12", "x3"} for x3 dx1^dx2.
DiffForm form2(std::initializer_list<std::pair<const char*, Expr>> terms) {
    DiffForm f(4, 2);
    for (const auto& [ij, c] : terms) {
        unsigned mask = (1u << (ij[0] - '1')) | (1u << (ij[1] - '1'));
        f.at(mask) = f.at(mask) + (ij[0] < ij[1] ? c : -c);
    }
    return f;
}

DiffForm omega0() { return form2({{"12", p("1")}, {"34", p("1")}}); }
DiffForm beta1() { return form2({{"14", p("1")}, {"23", p("1")}}); }
DiffForm beta2() { return form2({{"13", p("1")}, {"24", p("-1")}}); }

DiffForm family_theta() {
    Expr phi = p("x1 + x2*x3");
    return simplify(cos(phi) * beta1() + sin(phi) * beta2());
}

DiffForm closed_theta() { return simplify(beta1() + form2({{"13", p("x1^2 + x3")}})); }

std::vector<Point> std_grid() { return make_grid(GridSpec::standard(4)); }

MongeAmperePair family() {
    static MongeAmperePair m = normalize_elliptic(omega0(), family_theta(), std_grid());
    return m;
}

const CanonicalFrame& family_frame() {
    static CanonicalFrame f = canonical_frame(family(), std_grid());
    return f;
}

}  // namespace

TEST_CASE("pair classification by the Pfaffian") {
    auto g = std_grid();
    CHECK(classify_pair(omega0(), beta1(), g).type == MAType::Elliptic);
    CHECK(classify_pair(omega0(), form2({{"14", p("1")}, {"23", p("-1")}}), g).type == MAType::Hyperbolic);
    CHECK(classify_pair(omega0(), form2({{"13", p("1")}}), g).type == MAType::Parabolic);
    auto ne = classify_pair(omega0(), form2({{"12", p("1")}}), g);
    CHECK(ne.type == MAType::NotEffective);
    CHECK(!ne.witnesses.empty());
    auto mixed = classify_pair(omega0(), simplify(p("x1") * beta1() + form2({{"13", p("1")}})), g);
    CHECK(mixed.type == MAType::Mixed);
    CHECK(!mixed.witnesses.empty());
    CHECK(classify_pair(omega0(), family_theta(), g).type == MAType::Elliptic);
}

TEST_CASE("normalization errors") {
    auto g = std_grid();
    CHECK_THROWS_AS(normalize_elliptic(form2({{"12", p("x3")}, {"34", p("1")}}), beta1(), g), Error);
    try {
        normalize_elliptic(form2({{"12", p("x3")}, {"34", p("1")}}), beta1(), g);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotClosed);
    }
    try {
        normalize_elliptic(omega0(), form2({{"13", p("1")}}), g);
        FAIL("parabolic pair accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TypeMismatch);
    }
}

TEST_CASE("normalized pair: j, alpha and the R identity on random elliptic pairs") {
    auto g = std_grid();
    UnitRng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> r(8);
        for (double& v : r) v = rng.uniform(-0.3, 0.3);
        Expr a1 = Expr::integer(2) + Expr::real(r[0]) * p("x1") + Expr::real(r[1]) * p("x2*x3");
        Expr a2 = Expr::real(r[2]) * p("x4") + Expr::real(r[3]) * p("sin(x1)");
        Expr a3 = Expr::real(r[4]) * p("x2");
        Expr a4 = Expr::real(r[5]) * p("cos(x3)");
        Expr a5 = Expr::real(r[6]) * p("x1*x4") + Expr::real(r[7]);
        DiffForm theta = simplify(a1 * beta1() + a2 * beta2() + a3 * form2({{"12", p("1")}, {"34", p("-1")}}) +
                                  a4 * form2({{"13", p("1")}, {"24", p("1")}}) + a5 * form2({{"14", p("1")}, {"23", p("-1")}}));
        MongeAmperePair m = normalize_elliptic(omega0(), theta, g);
        PairIdentities id = check_identities(m, g, 16);
        CHECK(id.lepage <= 1e-10);
        CHECK(id.jr <= 1e-9);
        CHECK(id.r_antilinear <= 1e-9);
        CHECK(id.j_symmetry <= 1e-9);
    }
}

TEST_CASE("rescaling by a positive function") {
    auto g = std_grid();
    MongeAmperePair m = normalize_elliptic(omega0(), simplify(p("exp(x1)") * family_theta()), g);
    const MongeAmperePair& base = family();
    for (std::size_t i = 0; i < g.size(); i += 7) {
        CHECK((value(m.theta, g[i]) - value(base.theta, g[i])).norm() <= 1e-12);
        CHECK((value(m.alpha, g[i]) - value(base.alpha, g[i])).norm() <= 1e-10);
        CHECK(std::abs(eval(m.pf, g[i]) - std::exp(2 * g[i][0])) <= 1e-9 * std::exp(2 * g[i][0]));
    }
    CHECK(!is_zero(base.alpha));
}

TEST_CASE("closed theta gives an integrable structure") {
    auto g = std_grid();
    MongeAmperePair m = normalize_elliptic(omega0(), closed_theta(), g);
    CHECK(is_zero(m.alpha));
    VectorValued2Form n = nijenhuis(m.j);
    for (const Point& x : g) {
        CHECK(value(n, x).norm() <= 1e-9);
        NondegeneracyVerdict v = nondegenerate(m, x);
        CHECK(!v.overall);
        CHECK(!v.nijenhuis_ok);
    }
}

TEST_CASE("nondegenerate family") {
    auto g = std_grid();
    const MongeAmperePair& m = family();
    int good = 0;
    for (const Point& x : g) {
        NondegeneracyVerdict v = nondegenerate(m, x);
        if (v.overall) ++good;
        CHECK(v.nijenhuis_ok);
        CHECK(v.r_detects_n);
        CHECK(v.alpha_on_image <= 1e-9);
        CHECK(v.xalpha_in_image <= 1e-9 * std::max(1.0, value(m.x_alpha, x).norm()));
        CHECK(v.alpha_jn <= 1e-9);
        CHECK(v.kernel_intersection_dim == 2);
    }
    CHECK(good == static_cast<int>(g.size()));
}

TEST_CASE("canonical frame satisfies the structure tables") {
    auto t0 = std::chrono::steady_clock::now();
    const CanonicalFrame& f = family_frame();
    MESSAGE("frame seconds: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    int ok = 0;
    for (const FramePoint& fp : f.points) {
        if (!fp.ok) {
            MESSAGE("frame fails at step " << fp.failed_step << ": " << fp.message);
            continue;
        }
        ++ok;
        CHECK(std::abs(fp.omega_p1_jy0 - 1.0) <= 1e-9);
    }
    CHECK(ok >= static_cast<int>(f.points.size()) * 9 / 10);
    Theorem5Report rep = verify_theorem5(f, family());
    MESSAGE("table residuals " << rep.max_omega << " " << rep.max_nij << " " << rep.max_jrow << " " << rep.max_alpha);
    CHECK(rep.pass);
    CHECK(rep.applicable == ok);

    // Symbolic fields agree with the pointwise construction.
    FieldBatch fb(f.fields());
    for (const FramePoint& fp : f.points) {
        if (!fp.ok) continue;
        Eigen::MatrixXd v = fb(fp.x);
        CHECK((v.col(0) - fp.p1).norm() <= 1e-9);
        CHECK((v.col(2) - fp.q1).norm() <= 1e-8 * std::max(1.0, fp.q1.norm()));
        CHECK((v.col(3) - fp.q2).norm() <= 1e-8 * std::max(1.0, fp.q2.norm()));
    }
}

TEST_CASE("frame does not depend on the gauge of X0 and Y0") {
    auto g = std_grid();
    const CanonicalFrame& base = family_frame();
    for (double lambda : {2.0, -3.0}) {
        FrameOptions opt;
        opt.lambda = lambda;
        opt.y0_shift = Eigen::Vector2d(0.7, -1.3);
        CanonicalFrame f = canonical_frame(family(), g, opt);
        REQUIRE(f.points.size() == base.points.size());
        for (std::size_t i = 0; i < f.points.size(); ++i) {
            const FramePoint &a = f.points[i], &b = base.points[i];
            REQUIRE(a.ok == b.ok);
            if (!a.ok) continue;
            Eigen::Matrix4d fa, fb;
            fa << a.p1, a.p2, a.q1, a.q2;
            fb << b.p1, b.p2, b.q1, b.q2;
            CHECK((fa - fb).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK(std::abs(a.w - b.w) <= 1e-8);
        }
    }
}

TEST_CASE("perturbed frame fails the tables") {
    CanonicalFrame f = family_frame();
    for (FramePoint& fp : f.points) fp.p1 *= 1.01;
    Theorem5Report rep = verify_theorem5(f, family());
    CHECK(!rep.pass);
    CHECK(rep.max_omega >= 0.005);
}

TEST_CASE("frame fails with a named step on integrable structures") {
    auto g = std_grid();
    MongeAmperePair m = normalize_elliptic(omega0(), closed_theta(), g);
    CanonicalFrame f = canonical_frame(m, g);
    for (const FramePoint& fp : f.points) {
        CHECK(!fp.ok);
        CHECK(fp.failed_step == "X0");
    }
    CHECK(verify_theorem5(f, m).pass == false);
    CHECK(verify_theorem5(f, m).applicable == 0);
}

TEST_CASE("structure functions") {
    auto g = std_grid();
    std::vector<Point> few(g.begin(), g.begin() + 12);
    const CanonicalFrame& f = family_frame();
    auto sym = structure_functions(f, family(), few);
    auto fd = structure_functions(f, family(), few, true);
    REQUIRE(sym.size() == few.size());
    for (std::size_t i = 0; i < few.size(); ++i) {
        REQUIRE(sym[i].ok);
        REQUIRE(fd[i].ok);
        CHECK(sym[i].residual <= 1e-9);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int k = 0; k < 4; ++k) {
                    CHECK(sym[i].coefficient(a, b, k) == -sym[i].coefficient(b, a, k));
                    CHECK(std::abs(sym[i].coefficient(a, b, k) - fd[i].coefficient(a, b, k)) <=
                          1e-4 * std::max(1.0, std::abs(sym[i].coefficient(a, b, k))));
                }
    }
}

TEST_CASE("structure functions are invariant under a linear symplectic change of chart") {
    // y = A x with A^T W A = W: the shear (x1, x2, x3, x4) -> (x1, x2 + x1/2, x3, x4) composed with a rotation in (x3, x4).
    auto g = std_grid();
    const double c = std::cos(0.4), s = std::sin(0.4);
    Eigen::Matrix4d a;
    a << 1, 0, 0, 0,
         0.5, 1, 0, 0,
         0, 0, c, -s,
         0, 0, s, c;
    Eigen::Matrix4d w = Eigen::Matrix4d::Zero();
    w(0, 1) = 1;
    w(1, 0) = -1;
    w(2, 3) = 1;
    w(3, 2) = -1;
    REQUIRE((a.transpose() * w * a - w).cwiseAbs().maxCoeff() <= 1e-15);

    // theta' = (A^-1)^* theta, so that A maps the pair (omega, theta) to (omega, theta').
    Eigen::Matrix4d ai = a.inverse();
    std::vector<Expr> sub(4);
    for (int i = 0; i < 4; ++i) {
        Expr e;
        for (int k = 0; k < 4; ++k) e += Expr::real(ai(i, k)) * Expr::var(k);
        sub[static_cast<std::size_t>(i)] = e;
    }
    DiffForm th = family_theta();
    DiffForm moved(4, 2);
    const auto& idx = multi_indices(4, 2);
    for (std::size_t q = 0; q < idx.size(); ++q) {
        auto kl = mask_indices(idx[q]);
        Expr coeff;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            auto ij = mask_indices(idx[r]);
            double minor = ai(ij[0], kl[0]) * ai(ij[1], kl[1]) - ai(ij[0], kl[1]) * ai(ij[1], kl[0]);
            if (std::abs(minor) > 1e-15) coeff += Expr::real(minor) * substitute(th.c[r], sub);
        }
        moved.c[q] = simplify(coeff);
    }
    MongeAmperePair m2 = normalize_elliptic(omega0(), moved, g);
    std::vector<Point> xs(g.begin(), g.begin() + 6), ys;
    for (const Point& x : xs) {
        Eigen::Vector4d y = a * Eigen::Map<const Eigen::Vector4d>(x.data());
        ys.push_back(Point(y.data(), y.data() + 4));
    }
    CanonicalFrame f1 = canonical_frame(family(), xs);
    CanonicalFrame f2 = canonical_frame(m2, ys);
    auto s1 = structure_functions(f1, family(), xs);
    auto s2 = structure_functions(f2, m2, ys);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        REQUIRE(s1[i].ok);
        REQUIRE(s2[i].ok);
        // Frames correspond under A.
        CHECK((a * f1.points[i].q2 - f2.points[i].q2).norm() <= 1e-8 * std::max(1.0, f2.points[i].q2.norm()));
        for (std::size_t q = 0; q < 6; ++q)
            for (std::size_t k = 0; k < 4; ++k)
                CHECK(std::abs(s1[i].c[q][k] - s2[i].c[q][k]) <= 1e-7 * std::max(1.0, std::abs(s1[i].c[q][k])));
    }
}

TEST_CASE("slope of the frame") {
    GridSpec spec = GridSpec::standard(4);
    const CanonicalFrame& f = family_frame();
    SlopeReport r = slope(f, family(), spec, true);
    REQUIRE(!r.entries.empty());
    for (const SlopeEntry& e : r.entries) {
        CHECK(std::abs(std::abs(e.w) - 1.0) <= 1e-12);
        CHECK((e.w.real() > 0 || (e.w.real() == 0 && e.w.imag() > 0)));
        CHECK(e.phi > -std::numbers::pi / 4 - 1e-12);
        CHECK(e.phi <= std::numbers::pi / 4 + 1e-12);
        if (e.u1) {
            CHECK(*e.u1 >= 0.0);
            CHECK(*e.u1 < std::numbers::pi);
        }
    }
}

TEST_CASE("tables on a generic elliptic pair") {
    auto g = std_grid();
    DiffForm th = simplify(p("2 + 0.2*x1 + 0.1*x2*x3") * beta1() + p("0.25*x4 - 0.1*sin(x1)") * beta2() +
                           p("0.2*x2") * form2({{"12", p("1")}, {"34", p("-1")}}));
    MongeAmperePair m = normalize_elliptic(omega0(), th, g);
    CanonicalFrame f = canonical_frame(m, g);
    int ok = 0;
    for (const FramePoint& fp : f.points) {
        if (fp.ok) ++ok;
        else CHECK(fp.failed_step == "Q2");
    }
    CHECK(ok >= 90);
    Theorem5Report rep = verify_theorem5(f, m);
    CHECK(rep.pass);
    CHECK(rep.applicable == ok);
}
