#include <cmath>

#include "doctest.h"
#include "dg4/distributions.hpp"
#include "dg4/numeric.hpp"

using namespace dg4;

namespace {

Expr p(const char* s) { return parse(s, 4); }

VectorField field(std::initializer_list<const char*> comps) {
    VectorField v;
    for (const char* s : comps) v.c.push_back(p(s));
    return v;
}

DiffForm form1(std::initializer_list<const char*> comps) {
    DiffForm f(4, 1);
    std::size_t i = 0;
    for (const char* s : comps) f.c[i++] = p(s);
    return f;
}

std::vector<Point> grid4() { return make_grid(GridSpec::standard(4)); }

Distribution engel(const std::vector<Point>& g) {
    return kernel_distribution({form1({"1", "0", "0", "x2"}), form1({"0", "1", "0", "x3"})}, g);
}

Distribution contact(const std::vector<Point>& g) {
    return kernel_distribution({form1({"1", "0", "0", "0"}), form1({"0", "0", "x2", "-1"})}, g);
}

Distribution integrable(const std::vector<Point>& g) {
    return kernel_distribution({form1({"1", "0", "0", "0"}), form1({"0", "1", "0", "0"})}, g);
}

// Pushforward of a field under y = A x (A constant, invertible).
VectorField push(const VectorField& v, const Eigen::Matrix4d& a) {
    Eigen::Matrix4d inv = a.inverse();
    std::vector<Expr> sub(4);
    for (int i = 0; i < 4; ++i) {
        Expr s;
        for (int k = 0; k < 4; ++k) s += Expr::real(inv(i, k)) * Expr::var(k);
        sub[static_cast<std::size_t>(i)] = s;
    }
    VectorField r(4);
    for (int i = 0; i < 4; ++i) {
        Expr s;
        for (int k = 0; k < 4; ++k) s += Expr::real(a(i, k)) * substitute(v[k], sub);
        r[i] = simplify(s);
    }
    return r;
}

}  // namespace

TEST_CASE("kernel distribution of the Engel forms") {
    auto g = grid4();
    Distribution d = engel(g);
    REQUIRE(d.rank() == 2);
    CHECK(d.span[0][2] == Expr::integer(1));
    // Fields annihilate both forms identically.
    for (const auto& v : d.span) {
        CHECK(simplify(v[0] + p("x2") * v[3]).is_zero());
        CHECK(simplify(v[1] + p("x3") * v[3]).is_zero());
    }
    CHECK_NOTHROW(require_independent(d, g));
    CHECK_THROWS_AS(kernel_distribution({form1({"1", "0", "0", "0"}), form1({"2", "0", "0", "0"})}, g), Error);
}

TEST_CASE("growth vectors of the three normal forms") {
    auto g = grid4();
    struct Case {
        Distribution d;
        std::vector<int> growth;
        RegularityClass cls;
    };
    std::vector<Case> cases = {{integrable(g), {2, 2}, RegularityClass::Integrable},
                               {contact(g), {2, 3, 3}, RegularityClass::ContactCylinder},
                               {engel(g), {2, 3, 4}, RegularityClass::EngelGeneralPosition}};
    for (const auto& c : cases) {
        DerivedFlag f = derived_flag(c.d, g);
        REQUIRE(f.points.size() == g.size());
        for (const auto& pt : f.points) {
            CHECK_FALSE(pt.fault.has_value());
            CHECK(pt.growth == c.growth);
        }
        Classification cl = classify_2dist_r4(c.d, g);
        CHECK(cl.cls == c.cls);
        CHECK(cl.growth == c.growth);
    }
    // Contact cylinder in the (q, p, u) reading: <d_p, p d_u + d_q>.
    Distribution cyl(std::vector<VectorField>{field({"0", "1", "0", "0"}), field({"1", "0", "x2", "0"})});
    CHECK(classify_2dist_r4(cyl, g).cls == RegularityClass::ContactCylinder);
}

TEST_CASE("irregular distributions are reported with witnesses") {
    auto g = grid4();
    // <d3, d4 + x3^2 d2>: the bracket 2 x3 d2 vanishes on x3 = 0.
    Distribution d(std::vector<VectorField>{field({"0", "0", "1", "0"}), field({"0", "x3^2", "0", "1"})});
    Classification c = classify_2dist_r4(d, g);
    CHECK(c.cls == RegularityClass::NonRegular);
    CHECK_FALSE(c.witnesses.empty());

    Distribution bad(std::vector<VectorField>{field({"1", "0", "0", "0"}), field({"x1", "0", "0", "0"})});
    Classification cb = classify_2dist_r4(bad, g);
    CHECK(cb.cls == RegularityClass::NonRegular);
    REQUIRE_FALSE(cb.reasons.empty());
    CHECK(cb.reasons[0].find("RankDrop") != std::string::npos);
    CHECK_THROWS_AS(require_independent(bad, g), Error);
}

TEST_CASE("growth is invariant under constant re-spanning") {
    auto g = grid4();
    for (const Distribution& d : {contact(g), engel(g)}) {
        Distribution r(std::vector<VectorField>{simplify(d.span[0] + Expr::integer(3) * d.span[1]),
                                                simplify(Expr::integer(2) * d.span[0] - d.span[1])});
        auto f0 = derived_flag(d, g);
        auto f1 = derived_flag(r, g);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(f0.points[i].growth == f1.points[i].growth);
    }
}

TEST_CASE("symmetry verification") {
    auto g = grid4();
    Distribution e = engel(g);
    for (const char* s4 : {"1", "-1"}) {
        SymmetryReport r = verify_symmetry(field({"1", "0", "0", s4}), e, g);
        CHECK(r.symmetry);
        CHECK(r.transversal);
        CHECK_FALSE(r.characteristic);
        CHECK(r.max_residual <= 1e-12);
        // Tangent only on the line x2 = -+1, x3 = 0.
        CHECK(r.tangent_points < static_cast<int>(g.size()) / 5);
    }
    SymmetryReport bad = verify_symmetry(field({"x3", "0", "0", "0"}), e, g);
    CHECK_FALSE(bad.symmetry);
    CHECK_FALSE(bad.witnesses.empty());
    CHECK(bad.max_residual > 1e-3);

    Distribution flat(std::vector<VectorField>{field({"1", "0", "0", "0"}), field({"0", "1", "0", "0"})});
    SymmetryReport t = verify_symmetry(field({"0", "0", "1", "0"}), flat, g);
    CHECK(t.symmetry);
    CHECK(t.transversal);
    SymmetryReport c = verify_symmetry(field({"1", "0", "0", "0"}), flat, g);
    CHECK(c.symmetry);
    CHECK(c.characteristic);
}

TEST_CASE("symmetries of the Engel form close under brackets") {
    auto g = grid4();
    Distribution e = engel(g);
    std::vector<VectorField> sym = {field({"1", "0", "0", "0"}), field({"0", "0", "0", "1"}),
                                    field({"-x4", "1", "0", "0"}), field({"1", "0", "0", "1"})};
    for (const auto& v : sym) REQUIRE(verify_symmetry(v, e, g).symmetry);
    for (const auto& v : sym)
        for (const auto& w : sym) CHECK(verify_symmetry(lie_bracket(v, w), e, g).symmetry);
}

TEST_CASE("canonical line") {
    auto g = grid4();
    Distribution e = engel(g);
    Eigen::VectorXd l = canonical_line(e, {0, 0, 0, 0});
    CHECK(l(2) == doctest::Approx(1.0));
    CHECK(std::abs(l(0)) + std::abs(l(1)) + std::abs(l(3)) < 1e-12);

    Point x = {0.3, -0.2, 0.5, 0.7};
    Eigen::VectorXd lx = canonical_line(e, x);
    CHECK(lx.norm() == doctest::Approx(1.0));

    // Re-spanning leaves the line unchanged.
    Distribution r(std::vector<VectorField>{simplify(e.span[1] + e.span[0]), simplify(e.span[0] - Expr::integer(2) * e.span[1])});
    Eigen::VectorXd lr = canonical_line(r, x);
    CHECK((lr - lx).norm() < 1e-10);

    // Covariance under a linear change of coordinates.
    Eigen::Matrix4d a;
    a << 2, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 1, 3;
    Distribution pe(std::vector<VectorField>{push(e.span[0], a), push(e.span[1], a)});
    Eigen::Vector4d xv(x.data());
    Eigen::Vector4d y = a * xv;
    Eigen::VectorXd ly = canonical_line(pe, Point(y.data(), y.data() + 4));
    Eigen::VectorXd mapped = (a * lx).normalized();
    CHECK(std::abs(std::abs(mapped.dot(ly)) - 1.0) < 1e-10);

    CHECK_THROWS_AS(canonical_line(integrable(g), {0, 0, 0, 0}), Error);
    try {
        canonical_line(contact(g), {0.1, 0.2, 0.3, 0.4});
        FAIL("expected NotGeneralPosition");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NotGeneralPosition);
    }
}

TEST_CASE("canonical line brackets stay in the derived system") {
    auto g = grid4();
    Distribution e = engel(g);
    Point x = {0.3, -0.2, 0.5, 0.7};
    Eigen::VectorXd l = canonical_line(e, x);
    // On the Engel form the line is d3, which is a spanning field itself.
    Eigen::MatrixXd span = FieldBatch(e.span)(x);
    Eigen::VectorXd ab = span.colPivHouseholderQr().solve(l);
    CHECK((span * ab - l).norm() < 1e-12);
    VectorField v = Expr::real(ab(0)) * e.span[0] + Expr::real(ab(1)) * e.span[1];
    VectorField b = lie_bracket(e.span[0], e.span[1]);
    std::vector<VectorField> pi3 = {e.span[0], e.span[1], b};
    Eigen::MatrixXd q = orthonormal_span(FieldBatch(pi3)(x), 1e-8);
    for (const auto& eta : pi3) CHECK(orthogonal_part(q, value(lie_bracket(v, eta), x)).norm() < 1e-10);
}

TEST_CASE("tanaka data") {
    auto g = grid4();
    TanakaData te = tanaka_data(engel(g), {0, 0, 0, 0});
    CHECK(te.dims == std::vector<int>{2, 1, 1});
    REQUIRE(te.two_form.size() == 1);
    CHECK(te.two_form[0].norm() > 0.5);
    CHECK((te.two_form[0] + te.two_form[0].transpose()).norm() < 1e-12);
    REQUIRE(te.one_form.has_value());
    CHECK(te.one_form->norm() > 0.5);
    CHECK(te.basis_note.find("[xi1,xi2]") != std::string::npos);

    TanakaData tc = tanaka_data(contact(g), {0.1, 0.2, 0.3, 0.4});
    CHECK(tc.dims == std::vector<int>{2, 1});
    CHECK(tc.two_form.size() == 1);
    CHECK_FALSE(tc.one_form.has_value());

    TanakaData ti = tanaka_data(integrable(g), {0, 0, 0, 0});
    CHECK(ti.dims == std::vector<int>{2});
    CHECK(ti.two_form.empty());
    CHECK_FALSE(ti.one_form.has_value());
}
