#include <limits>
#include <algorithm>
#include <map>
#include <numeric>

#include "dg4/distributions.hpp"
#include "dg4/numeric.hpp"

namespace dg4 {

Distribution::Distribution(std::vector<VectorField> fields) : span(std::move(fields)) {
    if (span.empty()) throw Error(ErrorCode::InvalidArgument, "distribution needs at least one spanning field");
    n = span[0].dim();
    for (const auto& f : span)
        if (f.dim() != n) throw Error(ErrorCode::ChartMismatch, "spanning fields live on different charts");
}

namespace {

Point centroid(std::span<const Point> grid, int n) {
    Point c(static_cast<std::size_t>(n), 0.0);
    if (grid.empty()) return c;
    for (const Point& x : grid) {
        if (static_cast<int>(x.size()) != n) throw Error(ErrorCode::ChartMismatch, "grid point has wrong dimension");
        for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] += x[static_cast<std::size_t>(i)];
    }
    for (double& v : c) v /= static_cast<double>(grid.size());
    return c;
}

void combinations(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < n; ++i) {
        cur.push_back(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

bool same_field(const VectorField& a, const VectorField& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

void check_point(const Point& x, int n) {
    if (static_cast<int>(x.size()) != n)
        throw Error(ErrorCode::ChartMismatch, "point has dimension " + std::to_string(x.size()) + ", chart has " +
                                                  std::to_string(n));
}

// Symbolic candidate generation shared by the flag computations.
struct CandidateSet {
    const Distribution& d;
    std::vector<VectorField> fields;
    std::vector<int> level;
    std::vector<std::pair<int, int>> origin;
    int levels = 0;

    explicit CandidateSet(const Distribution& dist) : d(dist) {
        for (const auto& f : d.span) {
            fields.push_back(f);
            level.push_back(1);
            origin.emplace_back(-1, -1);
        }
        levels = 1;
    }

    // Adds level `levels + 1`; returns the index range of the new candidates.
    std::pair<int, int> extend() {
        const int first = static_cast<int>(fields.size());
        const int prev = levels;
        const int p = d.rank();
        for (int a = 0; a < p; ++a) {
            for (int c = 0; c < first; ++c) {
                if (level[static_cast<std::size_t>(c)] != prev) continue;
                if (c < p && c <= a) continue;
                VectorField b = lie_bracket(d.span[static_cast<std::size_t>(a)], fields[static_cast<std::size_t>(c)]);
                if (is_zero(b)) continue;
                VectorField nb = simplify(-b);
                bool dup = false;
                for (const auto& f : fields)
                    if (same_field(f, b) || same_field(f, nb)) {
                        dup = true;
                        break;
                    }
                if (dup) continue;
                fields.push_back(std::move(b));
                level.push_back(prev + 1);
                origin.emplace_back(a, c);
            }
        }
        levels = prev + 1;
        return {first, static_cast<int>(fields.size())};
    }
};

struct PointState {
    FlagPoint out;
    Eigen::MatrixXd values;  // n x (#candidates so far)
    Eigen::MatrixXd q;       // orthonormal basis of the current level
    bool done = false;
};

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd r(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) r.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    return r;
}

// Runs the flag computation; `cands` is extended as needed.
std::vector<PointState> run_flag(CandidateSet& cands, std::span<const Point> grid, int max_depth, double rank_tol) {
    const Distribution& d = cands.d;
    const int n = d.n;
    const int p = d.rank();
    std::vector<PointState> st(grid.size());

    FieldBatch base(d.span);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto& s = st[i];
        s.out.x = grid[i];
        check_point(grid[i], n);
        try {
            s.values = base(grid[i]);
        } catch (const Error& e) {
            s.out.fault = e.code();
            s.out.message = e.what();
            s.done = true;
            continue;
        }
        int r = numeric_rank(s.values, rank_tol);
        if (r < p) {
            s.out.fault = ErrorCode::RankDrop;
            s.out.message = "spanning fields are dependent";
            s.done = true;
            continue;
        }
        std::vector<int> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), 0);
        s.out.growth.push_back(p);
        s.out.basis.push_back(all);
        s.q = orthonormal_span(s.values, rank_tol);
        if (p == n) s.done = true;
    }

    for (int depth = 2; depth <= max_depth; ++depth) {
        if (std::all_of(st.begin(), st.end(), [](const PointState& s) { return s.done; })) break;
        while (cands.levels < depth) cands.extend();
        int first = 0;
        while (first < static_cast<int>(cands.level.size()) && cands.level[static_cast<std::size_t>(first)] < depth)
            ++first;
        const int last = static_cast<int>(cands.fields.size());
        std::vector<VectorField> fresh(cands.fields.begin() + first, cands.fields.end());
        FieldBatch batch(fresh);

        for (auto& s : st) {
            if (s.done) continue;
            const int prev = s.out.growth.back();
            Eigen::MatrixXd fv;
            try {
                if (!fresh.empty()) fv = batch(s.out.x);
            } catch (const Error& e) {
                s.out.fault = e.code();
                s.out.message = e.what();
                s.done = true;
                continue;
            }
            Eigen::MatrixXd all(n, last);
            all.leftCols(s.values.cols()) = s.values;
            if (!fresh.empty()) all.rightCols(fv.cols()) = fv;
            s.values = all;
            const int r = numeric_rank(s.values, rank_tol);

            std::vector<int> chosen = s.out.basis.back();
            Eigen::MatrixXd q = s.q;
            std::vector<bool> used(static_cast<std::size_t>(last), false);
            while (static_cast<int>(chosen.size()) < r) {
                int best = -1;
                double best_norm = -1.0;
                Eigen::VectorXd best_res;
                for (int c = first; c < last; ++c) {
                    if (used[static_cast<std::size_t>(c)]) continue;
                    Eigen::VectorXd res = orthogonal_part(q, s.values.col(c));
                    if (q.cols() > 0) res = orthogonal_part(q, res);
                    double nr = res.norm();
                    if (nr > best_norm) {
                        best_norm = nr;
                        best = c;
                        best_res = res;
                    }
                }
                if (best < 0 || best_norm <= 0.0) break;
                used[static_cast<std::size_t>(best)] = true;
                chosen.push_back(best);
                Eigen::MatrixXd nq(n, q.cols() + 1);
                nq.leftCols(q.cols()) = q;
                nq.col(q.cols()) = best_res / best_norm;
                q = nq;
            }
            s.q = q;
            const int got = static_cast<int>(chosen.size());
            s.out.growth.push_back(got);
            s.out.basis.push_back(std::move(chosen));
            if (got == prev || got == n) s.done = true;
        }
    }
    return st;
}

std::string field_name(const CandidateSet& c, int i) {
    auto [a, b] = c.origin[static_cast<std::size_t>(i)];
    if (a < 0) return "xi" + std::to_string(i + 1);
    return "[xi" + std::to_string(a + 1) + "," + field_name(c, b) + "]";
}

// Coordinates of w (mod the span of q_low) in the basis given by the columns of e (mod q_low).
Eigen::VectorXd quotient_coords(const Eigen::MatrixXd& q_low, const Eigen::MatrixXd& e, const Eigen::VectorXd& w) {
    Eigen::MatrixXd pe(e.rows(), e.cols());
    for (Eigen::Index k = 0; k < e.cols(); ++k) pe.col(k) = orthogonal_part(q_low, e.col(k));
    Eigen::VectorXd pw = orthogonal_part(q_low, w);
    return pe.completeOrthogonalDecomposition().solve(pw);
}

}  // namespace

Distribution kernel_distribution(const std::vector<DiffForm>& annihilator, std::span<const Point> grid,
                                 double rank_tol) {
    if (annihilator.empty()) throw Error(ErrorCode::InvalidArgument, "kernel distribution needs at least one 1-form");
    const int n = annihilator[0].n;
    const int m = static_cast<int>(annihilator.size());
    for (const auto& f : annihilator) {
        if (f.n != n) throw Error(ErrorCode::ChartMismatch, "annihilator forms live on different charts");
        if (f.k != 1) throw Error(ErrorCode::DegreeError, "annihilator must consist of 1-forms");
    }
    if (m >= n) throw Error(ErrorCode::RankDrop, "annihilator leaves no kernel");

    ExprMatrix a(m, n);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = annihilator[static_cast<std::size_t>(r)].c[static_cast<std::size_t>(c)];

    Point ctr = centroid(grid, n);
    Eigen::MatrixXd av = value(a, ctr);
    if (numeric_rank(av, rank_tol) < m) throw Error(ErrorCode::RankDrop, "annihilator forms are dependent", ctr);

    std::vector<std::vector<int>> combos;
    std::vector<int> cur;
    combinations(n, m, 0, cur, combos);
    // The pivot minor must stay invertible on the whole grid, not just at the centroid,
    // so score each choice by its worst row-normalized |det| over the samples.
    std::vector<Eigen::MatrixXd> samples{av};
    for (const Point& x : grid) samples.push_back(value(a, x));
    const std::vector<int>* pivots = nullptr;
    double best = -1.0;
    for (const auto& cmb : combos) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& s : samples) {
            double scale = 1.0;
            for (int r = 0; r < m; ++r) scale *= s.row(r).norm();
            double d = scale > 0 && std::isfinite(scale) ? std::abs(columns(s, cmb).determinant()) / scale : 0.0;
            worst = std::min(worst, std::isfinite(d) ? d : 0.0);
        }
        if (worst > best + 1e-12) {
            best = worst;
            pivots = &cmb;
        }
    }

    ExprMatrix ap(m, m);
    for (int r = 0; r < m; ++r)
        for (int k = 0; k < m; ++k) ap(r, k) = a(r, (*pivots)[static_cast<std::size_t>(k)]);

    std::vector<VectorField> span;
    for (int j = 0; j < n; ++j) {
        if (std::find(pivots->begin(), pivots->end(), j) != pivots->end()) continue;
        std::vector<Expr> rhs(static_cast<std::size_t>(m));
        for (int r = 0; r < m; ++r) rhs[static_cast<std::size_t>(r)] = a(r, j);
        std::vector<Expr> sol = cramer_solve(ap, rhs);
        VectorField v = VectorField::coordinate(n, j);
        for (int k = 0; k < m; ++k) v[(*pivots)[static_cast<std::size_t>(k)]] = -sol[static_cast<std::size_t>(k)];
        span.push_back(simplify(v));
    }
    return Distribution(std::move(span));
}

void require_independent(const Distribution& d, std::span<const Point> grid, double rank_tol) {
    FieldBatch batch(d.span);
    for (const Point& x : grid) {
        check_point(x, d.n);
        if (numeric_rank(batch(x), rank_tol) < d.rank())
            throw Error(ErrorCode::RankDrop, "spanning fields are dependent at a sample point", x);
    }
}

DerivedFlag derived_flag(const Distribution& d, std::span<const Point> grid, int max_depth, double rank_tol) {
    CandidateSet cands(d);
    auto st = run_flag(cands, grid, max_depth, rank_tol);
    DerivedFlag f;
    f.base = d;
    f.candidates = cands.fields;
    f.level = cands.level;
    f.origin = cands.origin;
    for (auto& s : st) f.points.push_back(std::move(s.out));
    return f;
}

const char* regularity_name(RegularityClass c) {
    switch (c) {
        case RegularityClass::Integrable: return "Integrable";
        case RegularityClass::ContactCylinder: return "ContactCylinder";
        case RegularityClass::EngelGeneralPosition: return "EngelGeneralPosition";
        case RegularityClass::NonRegular: return "NonRegular";
    }
    return "NonRegular";
}

Classification classify_2dist_r4(const Distribution& d, std::span<const Point> grid, double rank_tol) {
    if (d.n != 4 || d.rank() != 2)
        throw Error(ErrorCode::InvalidArgument, "classification applies to rank-2 distributions on a 4-chart");
    DerivedFlag f = derived_flag(d, grid, 3, rank_tol);

    auto growth_text = [](const std::vector<int>& g) {
        std::string s = "(";
        for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "," : "") + std::to_string(g[i]);
        return s + ")";
    };

    std::map<std::vector<int>, int> freq;
    for (const auto& p : f.points)
        if (!p.fault) ++freq[p.growth];

    Classification c;
    if (freq.size() == 1 && std::none_of(f.points.begin(), f.points.end(), [](const FlagPoint& p) { return p.fault.has_value(); })) {
        c.growth = freq.begin()->first;
        if (c.growth == std::vector<int>{2, 2}) c.cls = RegularityClass::Integrable;
        else if (c.growth == std::vector<int>{2, 3, 3}) c.cls = RegularityClass::ContactCylinder;
        else if (c.growth == std::vector<int>{2, 3, 4}) c.cls = RegularityClass::EngelGeneralPosition;
        if (c.cls != RegularityClass::NonRegular) return c;
    }

    std::vector<int> common;
    int best = -1;
    for (const auto& [g, k] : freq)
        if (k > best) {
            best = k;
            common = g;
        }
    const bool known = common == std::vector<int>{2, 2} || common == std::vector<int>{2, 3, 3} ||
                       common == std::vector<int>{2, 3, 4};
    c.cls = RegularityClass::NonRegular;
    for (const auto& p : f.points) {
        if (p.fault) {
            c.witnesses.push_back(p.x);
            c.reasons.push_back(std::string(error_code_name(*p.fault)) + ": " + p.message);
        } else if (p.growth != common || !known) {
            c.witnesses.push_back(p.x);
            c.reasons.push_back("growth " + growth_text(p.growth));
        }
        if (c.witnesses.size() >= 8) break;
    }
    return c;
}

SymmetryReport verify_symmetry(const VectorField& v, const Distribution& d, std::span<const Point> grid, double tol,
                               double rank_tol) {
    if (v.dim() != d.n) throw Error(ErrorCode::ChartMismatch, "symmetry candidate lives on a different chart");
    std::vector<VectorField> fields = d.span;
    fields.push_back(v);
    for (const auto& xi : d.span) fields.push_back(lie_bracket(v, xi));
    FieldBatch batch(fields);
    const int p = d.rank();

    SymmetryReport r;
    for (const Point& x : grid) {
        check_point(x, d.n);
        Eigen::MatrixXd m;
        try {
            m = batch(x);
        } catch (const Error&) {
            r.symmetry = false;
            r.characteristic = false;
            r.witnesses.push_back(x);
            continue;
        }
        Eigen::MatrixXd q = orthonormal_span(m.leftCols(p), rank_tol);
        double worst = 0.0;
        for (int a = 0; a < p; ++a) worst = std::max(worst, orthogonal_part(q, m.col(p + 1 + a)).norm());
        r.max_residual = std::max(r.max_residual, worst);
        if (worst > tol) {
            if (r.symmetry || r.witnesses.size() < 8) r.witnesses.push_back(x);
            r.symmetry = false;
        }
        Eigen::VectorXd vx = m.col(p);
        bool inside = orthogonal_part(q, vx).norm() <= rank_tol * std::max(1.0, vx.norm());
        if (inside) ++r.tangent_points;
        else r.characteristic = false;
    }
    r.transversal = !grid.empty() && !r.characteristic;
    return r;
}

Eigen::VectorXd canonical_line(const Distribution& d, const Point& x, double rank_tol) {
    check_point(x, d.n);
    if (d.n != 4 || d.rank() != 2)
        throw Error(ErrorCode::InvalidArgument, "canonical line needs a rank-2 distribution on a 4-chart");
    CandidateSet cands(d);
    const Point pts[1] = {x};
    auto st = run_flag(cands, pts, 3, rank_tol);
    const auto& s = st[0];
    if (s.out.fault) throw Error(*s.out.fault, s.out.message, x);
    if (s.out.growth != std::vector<int>{2, 3, 4})
        throw Error(ErrorCode::NotGeneralPosition, "distribution is not in general position at the point", x);

    const auto& b3 = s.out.basis[1];
    std::vector<VectorField> brackets;
    for (int a = 0; a < 2; ++a)
        for (int k : b3) brackets.push_back(lie_bracket(d.span[static_cast<std::size_t>(a)], cands.fields[static_cast<std::size_t>(k)]));
    Eigen::MatrixXd bv = FieldBatch(brackets)(x);
    Eigen::MatrixXd q3 = orthonormal_span(columns(s.values, b3), rank_tol);

    const auto nk = static_cast<Eigen::Index>(b3.size());
    Eigen::MatrixXd m(4 * nk, 2);
    for (int a = 0; a < 2; ++a)
        for (Eigen::Index k = 0; k < nk; ++k) m.block(4 * k, a, 4, 1) = orthogonal_part(q3, bv.col(a * nk + k));

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    Eigen::VectorXd sv = svd.singularValues();
    if (sv(0) == 0.0 || sv(1) > rank_tol * sv(0))
        throw Error(ErrorCode::AmbiguousKernel, "kernel of the bracket map is not one-dimensional", x);
    Eigen::VectorXd ab = svd.matrixV().col(1);
    Eigen::VectorXd line = s.values.col(0) * ab(0) + s.values.col(1) * ab(1);
    line.normalize();
    for (Eigen::Index i = 0; i < line.size(); ++i) {
        if (std::abs(line(i)) > 1e-12) {
            if (line(i) < 0) line = -line;
            break;
        }
    }
    return line;
}

TanakaData tanaka_data(const Distribution& d, const Point& x, double rank_tol) {
    check_point(x, d.n);
    CandidateSet cands(d);
    const Point pts[1] = {x};
    auto st = run_flag(cands, pts, d.n, rank_tol);
    const auto& s = st[0];
    if (s.out.fault) throw Error(*s.out.fault, s.out.message, x);

    TanakaData t;
    t.x = x;
    int prev = 0;
    for (int g : s.out.growth) {
        if (g > prev) t.dims.push_back(g - prev);
        prev = g;
    }
    const int p = d.rank();
    t.basis_note = "Q1: spanning fields";
    for (int a = 0; a < p; ++a) t.basis_note += (a ? ", " : " ") + field_name(cands, a);

    if (t.dims.size() < 2) return t;

    auto new_in = [&](int lvl) {
        const auto& lo = s.out.basis[static_cast<std::size_t>(lvl - 1)];
        const auto& hi = s.out.basis[static_cast<std::size_t>(lvl)];
        return std::vector<int>(hi.begin() + static_cast<std::ptrdiff_t>(lo.size()), hi.end());
    };
    const std::vector<int> e2 = new_in(1);
    Eigen::MatrixXd q1 = orthonormal_span(columns(s.values, s.out.basis[0]), rank_tol);
    Eigen::MatrixXd ev2 = columns(s.values, e2);
    t.basis_note += "; Q2: classes of";
    for (std::size_t k = 0; k < e2.size(); ++k) t.basis_note += (k ? ", " : " ") + field_name(cands, e2[k]);

    std::vector<VectorField> pairs;
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) pairs.push_back(lie_bracket(d.span[static_cast<std::size_t>(a)], d.span[static_cast<std::size_t>(b)]));
    Eigen::MatrixXd pv = FieldBatch(pairs)(x);
    t.two_form.assign(e2.size(), Eigen::MatrixXd::Zero(p, p));
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
            Eigen::VectorXd c = quotient_coords(q1, ev2, pv.col(a * p + b));
            for (std::size_t k = 0; k < e2.size(); ++k) t.two_form[k](a, b) = c(static_cast<Eigen::Index>(k));
        }

    if (t.dims.size() < 3) return t;
    const std::vector<int> e3 = new_in(2);
    Eigen::MatrixXd q2 = orthonormal_span(columns(s.values, s.out.basis[1]), rank_tol);
    Eigen::MatrixXd ev3 = columns(s.values, e3);
    t.basis_note += "; Q3: classes of";
    for (std::size_t k = 0; k < e3.size(); ++k) t.basis_note += (k ? ", " : " ") + field_name(cands, e3[k]);

    std::vector<VectorField> br;
    for (int a = 0; a < p; ++a)
        for (int k : e2) br.push_back(lie_bracket(d.span[static_cast<std::size_t>(a)], cands.fields[static_cast<std::size_t>(k)]));
    Eigen::MatrixXd bv = FieldBatch(br)(x);
    const auto n2 = static_cast<Eigen::Index>(e2.size());
    const auto n3 = static_cast<Eigen::Index>(e3.size());
    Eigen::MatrixXd one(p, n2 * n3);
    for (int a = 0; a < p; ++a)
        for (Eigen::Index k = 0; k < n2; ++k) {
            Eigen::VectorXd c = quotient_coords(q2, ev3, bv.col(a * n2 + k));
            for (Eigen::Index l = 0; l < n3; ++l) one(a, k * n3 + l) = c(l);
        }
    t.one_form = one;
    return t;
}

}  // namespace dg4
