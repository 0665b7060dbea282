#include <cmath>

#include "doctest.h"
#include "dg4/almost_complex.hpp"
#include "dg4/numeric.hpp"
#include "support.hpp"

using namespace dg4;

namespace {

Expr p(const char* s, int n = 4) { return parse(s, n); }

VectorField field(std::initializer_list<const char*> comps) {
    VectorField v;
    for (const char* s : comps) v.c.push_back(p(s, static_cast<int>(comps.size())));
    return v;
}

EndoField j0() {
    ExprMatrix m(4, 4);
    m(1, 0) = Expr::integer(1);
    m(0, 1) = Expr::integer(-1);
    m(3, 2) = Expr::integer(1);
    m(2, 3) = Expr::integer(-1);
    return EndoField(m);
}

// j = P j0 P^-1 for unipotent upper-triangular P, so entries stay polynomial-like.
EndoField conjugated(const std::vector<Expr>& upper) {
    ExprMatrix pm = ExprMatrix::identity(4);
    std::size_t k = 0;
    for (int r = 0; r < 4; ++r)
        for (int c = r + 1; c < 4; ++c) pm(r, c) = upper[k++];
    ExprMatrix adj = adjugate(pm);
    ExprMatrix m = pm * j0().m * adj;
    for (auto& e : m.a) e = simplify(e);
    return EndoField(m);
}

EndoField sample_j() {
    return conjugated({p("x3"), p("x1*x2"), Expr(), p("sin(x4)"), p("x1"), p("x2^2")});
}

std::vector<Point> engel_grid() {
    GridSpec g = GridSpec::standard(4);
    g.min[2] = 0.5;
    g.max[2] = 1.5;
    return make_grid(g);
}

Distribution engel(std::span<const Point> g) {
    DiffForm a(4, 1), b(4, 1);
    a.c = {p("1"), p("0"), p("0"), p("x2")};
    b.c = {p("0"), p("1"), p("0"), p("x3")};
    return kernel_distribution({a, b}, g);
}

}  // namespace

TEST_CASE("Nijenhuis tensor of the standard structure vanishes") {
    VectorValued2Form n = nijenhuis(j0());
    for (const auto& v : n.c) CHECK(is_zero(v));
    auto g = make_grid(GridSpec::standard(4));
    CHECK_THROWS_AS(image_distribution(j0(), g), Error);
    try {
        utxi_invariant(j0(), {0, 0, 0, 0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NijenhuisVanishes);
    }
}

TEST_CASE("Nijenhuis tensor is tensorial, antisymmetric and antilinear") {
    EndoField j = sample_j();
    auto g = make_grid(GridSpec::standard(4));
    CHECK_NOTHROW(AlmostComplexStructure(j, g));
    VectorValued2Form n = nijenhuis(j);
    CHECK_FALSE(std::all_of(n.c.begin(), n.c.end(), [](const VectorField& v) { return is_zero(v); }));

    testing::ExprGen gen(4, 11, true);
    VectorField x = field({"1", "x2", "0", "x1^2"});
    VectorField y = field({"x4", "0", "1", "sin(x3)"});
    Expr f = p("1 + x1*x3 + cos(x2)");
    VectorField nxy = nijenhuis(j, x, y);
    VectorField nyx = nijenhuis(j, y, x);
    VectorField nfx = nijenhuis(j, f * x, y);
    VectorField njx = nijenhuis(j, apply(j, x), y);
    std::vector<VectorField> all = {nxy, nyx, nfx, njx, x, y};
    FieldBatch batch(all);
    Evaluator fe(std::vector<Expr>{f});
    double worst = 0.0;
    for (int s = 0; s < 200; ++s) {
        Point pt = gen.point();
        Eigen::MatrixXd v = batch(pt);
        TensorAt t = value(n, pt);
        Eigen::MatrixXd jx = value(j, pt);
        double fv = fe(pt)[0];
        worst = std::max(worst, (v.col(0) + v.col(1)).norm());
        worst = std::max(worst, (v.col(2) - fv * v.col(0)).norm());
        worst = std::max(worst, (v.col(3) + jx * v.col(0)).norm());
        worst = std::max(worst, (t(v.col(4), v.col(5)) - v.col(0)).norm());
        worst = std::max(worst, t(v.col(4), v.col(4)).norm());
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("image of the Nijenhuis tensor") {
    EndoField j = sample_j();
    auto g = make_grid(GridSpec::standard(4));
    ImageReport r = image_distribution(j, g);
    CHECK(r.max_rank <= 2);
    CHECK(r.max_rank == 2);
    CHECK(r.invariance_residual <= 1e-9);
    CHECK(r.image.rank() == 2);
}

TEST_CASE("realization of the Engel distribution") {
    auto g = engel_grid();
    Distribution e = engel(g);
    RealizeOptions opt;
    opt.section_weight = p("exp(x1)");
    RealizationReport r = realize_distribution(e, field({"1", "0", "0", "1"}), field({"1", "0", "0", "-1"}), g, opt);
    CHECK(r.jsquare_structural);
    CHECK_FALSE(r.nijenhuis_zero);
    CHECK(r.jsquare_residual <= 1e-12);
    CHECK(r.mismatch.empty());
    CHECK(r.image_equal + static_cast<int>(r.vanishing.size()) == r.samples);
    CHECK(r.image_equal >= 0.95 * r.samples);
    CHECK(r.image_residual <= 1e-8);
    CHECK(r.lie_residual <= 1e-9);

    // The kernel fields themselves commute with d1 +- d4, which forces N = 0.
    RealizationReport plain = realize_distribution(e, field({"1", "0", "0", "1"}), field({"1", "0", "0", "-1"}), g);
    CHECK(plain.nijenhuis_zero);
    CHECK(plain.vanishing.size() == g.size());

    // On the unshifted lattice the symmetries fall into the distribution on x3 = 0.
    auto std_grid = make_grid(GridSpec::standard(4));
    try {
        realize_distribution(engel(std_grid), field({"1", "0", "0", "1"}), field({"1", "0", "0", "-1"}), std_grid);
        FAIL("expected FrameDependent");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::FrameDependent);
    }
    try {
        realize_distribution(e, field({"x3", "0", "0", "0"}), field({"1", "0", "0", "-1"}), g);
        FAIL("expected NotASymmetry");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NotASymmetry);
    }
}

TEST_CASE("realization of an integrable distribution is integrable") {
    auto g = make_grid(GridSpec::standard(4));
    Distribution flat(std::vector<VectorField>{field({"1", "0", "0", "0"}), field({"0", "1", "0", "0"})});
    RealizationReport r = realize_distribution(flat, field({"0", "0", "1", "0"}), field({"0", "0", "0", "1"}), g);
    CHECK(r.jsquare_structural);
    CHECK(r.nijenhuis_zero);
    CHECK(r.vanishing.size() == g.size());
    CHECK(r.mismatch.empty());
}

TEST_CASE("UTXi frame on the realized Engel structure") {
    auto g = engel_grid();
    Distribution e = engel(g);
    RealizeOptions opt;
    opt.section_weight = p("exp(x1)");
    RealizationReport r = realize_distribution(e, field({"1", "0", "0", "1"}), field({"1", "0", "0", "-1"}), g, opt);
    const EndoField& j = r.j.j;
    Point x = {0.2, -0.3, 0.9, 0.4};
    UTXiInvariant u = utxi_invariant(j, x);
    CHECK(u.residuals[0] <= 1e-8);
    CHECK(u.residuals[1] <= 1e-8);
    CHECK(u.residuals[2] <= 1e-8);
    // N(j xi1, xi4) = -j N(xi1, xi4) = xi1, so the fourth relation holds with the opposite sign.
    CHECK(u.antilinear_residual <= 1e-8);
    CHECK(u.residuals[3] == doctest::Approx(2.0 * u.xi1.norm()).epsilon(1e-6));
    CHECK((u.xi2 - value(j, x) * u.xi1).norm() <= 1e-12);
    CHECK(u.f > 0);
    CHECK(u.t_metric > 0);
    CHECK(u.xi_metric > 0);

    // xi1, xi2 span the Engel plane.
    Eigen::MatrixXd q = orthonormal_span(FieldBatch(e.span)(x), 1e-8);
    CHECK(orthogonal_part(q, u.xi1).norm() <= 1e-8);
    CHECK(orthogonal_part(q, u.xi2).norm() <= 1e-8);

    UTXiOptions flip;
    flip.flip_xi3 = true;
    UTXiInvariant v = utxi_invariant(j, x, flip);
    CHECK(v.t_orientation == -u.t_orientation);
    // U1 and U2 trade places.
    CHECK(std::abs(std::abs(v.xi1.normalized().dot(u.xi2.normalized())) - 1.0) <= 1e-8);
    CHECK(std::abs(std::abs(v.xi2.normalized().dot(u.xi1.normalized())) - 1.0) <= 1e-8);
    CHECK(v.residuals[0] <= 1e-8);

    // The Engel Tanaka algebra is not abelian, so both bracket forms are nonzero.
    CHECK(std::abs(u.omega2) > 1e-6);
    CHECK(u.omega1.norm() > 1e-6);

    double worst = 0.0;
    for (const Point& y : g) {
        UTXiInvariant w = utxi_invariant(j, y);
        worst = std::max({worst, w.residuals[0], w.residuals[1], w.residuals[2], w.antilinear_residual});
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("procomplex reduction of the standard structure") {
    auto g = make_grid(GridSpec::standard(4));
    ProcomplexStructure pc = procomplex_from_acs(j0(), 0, g);
    Point s = pc.slice_point({0.1, 0.2, 0.3, 0.4});
    CHECK(s == Point{0.2, 0.3, 0.4, 0.1});
    Eigen::VectorXd w = value(pc.w, s);
    CHECK(w(0) == doctest::Approx(1.0));
    CHECK(std::abs(w(1)) + std::abs(w(2)) == 0.0);
    std::vector<Point> pts;
    for (const auto& x : g) pts.push_back(pc.slice_point(x));
    ProcomplexCheck c = check_procomplex(pc, pts);
    CHECK(c.spectrum_residual <= 1e-12);
    CHECK(c.kernel_residual <= 1e-12);
    CHECK(c.min_rank == 2);
    CHECK(c.max_rank == 2);
    EndoField a = nijenhuis_operator(pc);
    for (const auto& e : a.m.a) CHECK(e.is_zero());
}

TEST_CASE("Nijenhuis operator anticommutes with J up to L_w alpha") {
    testing::ExprGen gen(4, 5);
    std::vector<Point> pts;
    for (int i = 0; i < 64; ++i) pts.push_back(gen.point());

    SUBCASE("t-dependent family") {
        EndoField j = conjugated({p("x1*x3"), p("x2"), p("sin(x1)"), p("x4*x1"), p("x3^2"), p("cos(x2 + x1)")});
        for (int t = 0; t < 4; ++t) {
            ProcomplexStructure pc = procomplex_from_acs(j, t);
            std::vector<Point> sp;
            for (const auto& x : pts) sp.push_back(pc.slice_point(x));
            ProcomplexCheck c = check_procomplex(pc, sp);
            CHECK(c.anticommutation <= 1e-9);
            CHECK(c.spectrum_residual <= 1e-9);
            CHECK(c.kernel_residual <= 1e-9);
            CHECK(c.min_rank == 2);
        }
    }
    SUBCASE("contact cocomplex structure") {
        DiffForm alpha(3, 1);
        alpha.c = {p("x2", 3), p("0", 3), p("-1", 3)};
        VectorField w(std::vector<Expr>{Expr(), Expr(), Expr::integer(-1)});
        ExprMatrix seed(2, 2);
        seed(0, 0) = p("x3", 3);
        seed(0, 1) = p("-(1 + x3^2)", 3);
        seed(1, 0) = Expr::integer(1);
        seed(1, 1) = p("-x3", 3);
        std::vector<Point> g3;
        for (const auto& x : pts) g3.push_back({x[0], x[1], x[2]});
        CocomplexReport r = cocomplex_realize(alpha, w, seed, g3);
        CHECK(r.lie_alpha <= 1e-12);
        CHECK(r.mismatch.empty());
        CHECK(r.image_equal > 0);
        ProcomplexCheck c = check_procomplex(r.structure, g3);
        CHECK(c.anticommutation <= 1e-9);
        CHECK(c.min_rank == 2);

        VectorField bad(std::vector<Expr>{Expr(), Expr(), Expr::integer(-2)});
        try {
            cocomplex_realize(alpha, bad, seed, g3);
            FAIL("expected NotNormalized");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NotNormalized);
        }
    }
}
