#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>

#include "internal.hpp"

#include "dg4/almost_complex.hpp"
#include "dg4/distributions.hpp"
#include "dg4/monge_ampere.hpp"
#include "dg4/numeric.hpp"

namespace dg4::cli {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace detail {

namespace {

constexpr std::size_t kExprChars = 4000;
constexpr std::size_t kMaxWitnesses = 16;

void dump_to(const ojson& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += inner + ojson(k).dump() + ": ";
                dump_to(v, out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case ojson::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool scalars = std::all_of(j.begin(), j.end(), [](const ojson& e) { return e.is_primitive(); });
            if (scalars) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    dump_to(j[i], out, indent + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                dump_to(j[i], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case ojson::value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            std::string s = buf;
            if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
            out += s;
            return;
        }
        default: out += j.dump();
    }
}

ojson point_json(const Point& x) {
    ojson a = ojson::array();
    for (double v : x) a.push_back(v);
    return a;
}

ojson vec_json(const Eigen::VectorXd& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

ojson mat_json(const Eigen::MatrixXd& m) {
    ojson a = ojson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
    return a;
}

ojson expr_json(const Expr& e) { return render_clipped(e, kExprChars); }

ojson field_json(const VectorField& v) {
    ojson a = ojson::array();
    for (const auto& c : v.c) a.push_back(expr_json(c));
    return a;
}

ojson endo_json(const ExprMatrix& m) {
    ojson a = ojson::array();
    for (int r = 0; r < m.rows; ++r) {
        ojson row = ojson::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(expr_json(m(r, c)));
        a.push_back(row);
    }
    return a;
}

ojson form_json(const DiffForm& f) {
    ojson o = ojson::object();
    const auto& idx = multi_indices(f.n, f.k);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        if (f.c[p].is_zero()) continue;
        std::string key;
        for (int i : mask_indices(idx[p])) key += static_cast<char>('1' + i);
        if (f.k == 0) key = "0";
        o[key] = expr_json(f.c[p]);
    }
    return o;
}

std::string code_name(ErrorCode c) { return error_code_name(c); }

struct Context {
    Model& m;
    const Flags& flags;
    std::map<std::string, EndoField> stored;
    std::map<std::string, MongeAmperePair> pairs;
    std::map<std::string, CanonicalFrame> frames;
};

class TaskOutput {
public:
    ojson result = ojson::object();
    ojson warnings = ojson::array();

    void warn(const std::string& code, const std::string& message, const std::optional<Point>& witness) {
        ojson w = ojson::object();
        w["code"] = code;
        w["message"] = message;
        w["witness"] = witness ? point_json(*witness) : ojson(nullptr);
        warnings.push_back(w);
    }
    void warn_points(const std::string& code, const std::string& message, const std::vector<Point>& pts) {
        for (std::size_t i = 0; i < pts.size() && i < kMaxWitnesses; ++i) warn(code, message, pts[i]);
        if (pts.size() > kMaxWitnesses)
            warn(code, std::to_string(pts.size() - kMaxWitnesses) + " further points omitted", std::nullopt);
    }
};

GridSpec task_grid_spec(const Context& c, const json& t) {
    if (!t.contains("grid")) return c.m.grid;
    GridSpec g = parse_grid(t.at("grid"), c.m.dim, "");
    if (c.flags.grid_counts) g.counts = *c.flags.grid_counts;
    if (c.flags.seed) g.seed = *c.flags.seed;
    return g;
}

std::vector<Point> task_grid(const Context& c, const json& t) { return make_grid(task_grid_spec(c, t)); }

Distribution build_distribution(const Context& c, const std::string& name, std::span<const Point> grid) {
    const auto& spec = std::get<DistSpec>(c.m.objects.at(name));
    if (!spec.fields.empty()) {
        std::vector<VectorField> fs;
        for (const auto& f : spec.fields) fs.push_back(std::get<VectorField>(c.m.objects.at(f)));
        Distribution d(fs);
        require_independent(d, grid, c.m.tol.rank);
        return d;
    }
    std::vector<DiffForm> forms;
    for (const auto& f : spec.annihilator) forms.push_back(std::get<DiffForm>(c.m.objects.at(f)));
    return kernel_distribution(forms, grid, c.m.tol.rank);
}

const EndoField& endo(const Context& c, const std::string& name) {
    auto it = c.stored.find(name);
    if (it != c.stored.end()) return it->second;
    auto ot = c.m.objects.find(name);
    if (ot == c.m.objects.end() || !std::holds_alternative<EndoField>(ot->second))
        throw Error(ErrorCode::InvalidArgument, "structure '" + name + "' is not available (did its realize task fail?)");
    return std::get<EndoField>(ot->second);
}

MATolerances ma_tol(const Tolerances& t) {
    MATolerances r;
    r.effective = t.effective;
    r.pfaffian = t.pfaffian;
    r.closed = t.closed;
    r.jsquare = t.jsquare;
    r.rank = t.rank;
    return r;
}

Point centroid(const GridSpec& g) {
    Point x;
    for (int i = 0; i < g.dim(); ++i) x.push_back(0.5 * (g.min[static_cast<std::size_t>(i)] + g.max[static_cast<std::size_t>(i)]));
    return x;
}

// ---- distributions ----

void task_classify_dist(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    Distribution d = build_distribution(c, t.at("distribution").get<std::string>(), grid);
    out.result["spanning_fields"] = ojson::array();
    for (const auto& f : d.span) out.result["spanning_fields"].push_back(field_json(f));

    DerivedFlag flag = derived_flag(d, grid, 4, c.m.tol.rank);
    std::map<std::vector<int>, int> counts;
    for (const auto& fp : flag.points)
        if (!fp.fault) ++counts[fp.growth];
    ojson gc = ojson::array();
    for (const auto& [g, n] : counts) gc.push_back(ojson{{"growth", g}, {"points", n}});
    out.result["growth_counts"] = gc;
    for (const auto& fp : flag.points)
        if (fp.fault) out.warn(code_name(*fp.fault), fp.message, fp.x);

    if (d.n == 4 && d.rank() == 2) {
        Classification cl = classify_2dist_r4(d, grid, c.m.tol.rank);
        out.result["class"] = regularity_name(cl.cls);
        out.result["growth"] = cl.growth.empty() ? ojson(nullptr) : ojson(cl.growth);
        out.result["reasons"] = cl.reasons;
        if (cl.cls == RegularityClass::NonRegular) out.warn_points("NonRegular", "growth differs from the common growth", cl.witnesses);
        if (cl.cls == RegularityClass::EngelGeneralPosition) {
            Point x = t.contains("canonical_line_at") ? t.at("canonical_line_at").get<std::vector<double>>() : centroid(task_grid_spec(c, t));
            try {
                out.result["canonical_line"] = ojson{{"point", point_json(x)}, {"direction", vec_json(canonical_line(d, x, c.m.tol.rank))}};
            } catch (const Error& e) {
                out.warn(code_name(e.code()), e.what(), x);
            }
        }
    } else {
        out.result["class"] = nullptr;
        out.result["growth"] = counts.size() == 1 ? ojson(counts.begin()->first) : ojson(nullptr);
    }

    if (t.contains("symmetries")) {
        ojson syms = ojson::array();
        for (const auto& name : t.at("symmetries")) {
            const auto& v = std::get<VectorField>(c.m.objects.at(name.get<std::string>()));
            SymmetryReport s = verify_symmetry(v, d, grid, c.m.tol.symmetry, c.m.tol.rank);
            syms.push_back(ojson{{"field", name.get<std::string>()},
                                 {"symmetry", s.symmetry},
                                 {"max_residual", s.max_residual},
                                 {"characteristic", s.characteristic},
                                 {"transversal", s.transversal},
                                 {"tangent_points", s.tangent_points}});
            if (!s.symmetry) out.warn_points("NotASymmetry", name.get<std::string>() + " does not preserve the distribution", s.witnesses);
        }
        out.result["symmetries"] = syms;
    }
}

void task_tanaka(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    Distribution d = build_distribution(c, t.at("distribution").get<std::string>(), grid);
    Point x = t.contains("point") ? t.at("point").get<std::vector<double>>() : centroid(task_grid_spec(c, t));
    TanakaData td = tanaka_data(d, x, c.m.tol.rank);
    out.result["point"] = point_json(td.x);
    out.result["dims"] = td.dims;
    ojson tf = ojson::array();
    for (const auto& m : td.two_form) tf.push_back(mat_json(m));
    out.result["two_form"] = tf;
    out.result["one_form"] = td.one_form ? mat_json(*td.one_form) : ojson(nullptr);
    out.result["basis_note"] = td.basis_note;
}

// ---- almost complex ----

void task_realize(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    Distribution d = build_distribution(c, t.at("distribution").get<std::string>(), grid);
    auto names = t.at("symmetries").get<std::vector<std::string>>();
    RealizeOptions opt;
    if (t.contains("section_weight")) opt.section_weight = parse_expr(c.m, t.at("section_weight").get<std::string>(), "");
    opt.zero_tol = c.m.tol.nijenhuis_zero;
    opt.rank_tol = c.m.tol.rank;
    opt.symmetry_tol = c.m.tol.symmetry;
    opt.image_tol = c.m.tol.frame;
    RealizationReport r = realize_distribution(d, std::get<VectorField>(c.m.objects.at(names[0])),
                                               std::get<VectorField>(c.m.objects.at(names[1])), grid, opt);
    out.result["j"] = endo_json(r.j.j.m);
    out.result["jsquare_structural"] = r.jsquare_structural;
    out.result["jsquare_residual"] = r.jsquare_residual;
    out.result["samples"] = r.samples;
    out.result["image_equal"] = r.image_equal;
    out.result["image_equal_fraction"] = r.samples ? static_cast<double>(r.image_equal) / r.samples : 0.0;
    out.result["vanishing"] = r.vanishing.size();
    out.result["image_residual"] = r.image_residual;
    out.result["lie_residual"] = r.lie_residual;
    out.result["nijenhuis_zero"] = r.nijenhuis_zero;
    out.warn_points("NijenhuisVanishes", "N_j vanishes at this point", r.vanishing);
    out.warn_points("ImageMismatch", "Im N_j differs from the distribution", r.mismatch);
    if (t.contains("store")) c.stored[t.at("store").get<std::string>()] = r.j.j;
}

void task_utxi(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    const EndoField& j = endo(c, t.at("structure").get<std::string>());
    UTXiOptions opt;
    opt.flip_xi3 = t.value("flip_xi3", false);
    opt.swap_labels = c.flags.swap_ut_labels;
    opt.zero_tol = c.m.tol.nijenhuis_zero;
    opt.rank_tol = c.m.tol.rank;
    std::size_t limit = t.contains("points") ? t.at("points").get<std::size_t>() : grid.size();
    ojson pts = ojson::array();
    std::array<double, 4> worst{};
    double antilinear = 0.0;
    int done = 0;
    for (std::size_t i = 0; i < grid.size() && i < limit; ++i) {
        try {
            UTXiInvariant u = utxi_invariant(j, grid[i], opt);
            ojson p = ojson::object();
            p["x"] = point_json(u.x);
            p["xi"] = ojson::array({vec_json(u.xi1), vec_json(u.xi2), vec_json(u.xi3), vec_json(u.xi4)});
            p["f"] = u.f;
            p["t_metric"] = u.t_metric;
            p["xi_metric"] = u.xi_metric;
            p["t_orientation"] = u.t_orientation;
            p["xi_orientation"] = u.xi_orientation;
            p["omega2"] = u.omega2;
            p["omega1"] = vec_json(u.omega1);
            p["residuals"] = ojson::array({u.residuals[0], u.residuals[1], u.residuals[2], u.residuals[3]});
            p["antilinear_residual"] = u.antilinear_residual;
            pts.push_back(p);
            for (int k = 0; k < 4; ++k) worst[static_cast<std::size_t>(k)] = std::max(worst[static_cast<std::size_t>(k)], u.residuals[static_cast<std::size_t>(k)]);
            antilinear = std::max(antilinear, u.antilinear_residual);
            ++done;
            if (u.residuals[3] > c.m.tol.frame && u.antilinear_residual <= c.m.tol.frame)
                out.warn("RelationSign", "N(xi2, xi4) = +xi1 here, as N(jX, Y) = -j N(X, Y) forces", u.x);
        } catch (const Error& e) {
            out.warn(code_name(e.code()), e.what(), grid[i]);
        }
    }
    const char* names[] = {"N(xi1,xi3)=xi1", "N(xi2,xi3)=-xi2", "N(xi1,xi4)=xi2", "N(xi2,xi4)=-xi1"};
    ojson rel = ojson::array();
    for (int k = 0; k < 4; ++k)
        rel.push_back(ojson{{"relation", names[k]},
                            {"max_residual", worst[static_cast<std::size_t>(k)]},
                            {"pass", done > 0 && worst[static_cast<std::size_t>(k)] <= c.m.tol.frame}});
    out.result["points_computed"] = done;
    out.result["relations"] = rel;
    out.result["antilinear_residual"] = antilinear;
    out.result["swap_labels"] = opt.swap_labels;
    out.result["flip_xi3"] = opt.flip_xi3;
    out.result["points"] = pts;
}

std::vector<Point> sample_points(const GridSpec& spec, std::span<const Point> grid, std::size_t n) {
    std::vector<Point> pts(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(std::min(n, grid.size())));
    UnitRng rng(spec.seed + 1);
    while (pts.size() < n) {
        Point x;
        for (int i = 0; i < spec.dim(); ++i) x.push_back(rng.uniform(spec.min[static_cast<std::size_t>(i)], spec.max[static_cast<std::size_t>(i)]));
        pts.push_back(x);
    }
    return pts;
}

ojson procomplex_json(const ProcomplexStructure& p, const ProcomplexCheck& ck) {
    return ojson{{"J", endo_json(p.J.m)},
                 {"w", field_json(p.w)},
                 {"alpha", form_json(p.alpha)},
                 {"samples", ck.samples},
                 {"spectrum_residual", ck.spectrum_residual},
                 {"kernel_residual", ck.kernel_residual},
                 {"min_rank", ck.min_rank},
                 {"max_rank", ck.max_rank},
                 {"anticommutation", ck.anticommutation}};
}

void task_procomplex(Context& c, const json& t, TaskOutput& out) {
    GridSpec spec = task_grid_spec(c, t);
    auto grid = make_grid(spec);
    std::size_t n = t.contains("samples") ? t.at("samples").get<std::size_t>() : 64;
    auto pts = sample_points(spec, grid, n);
    const std::string mode = t.at("mode").get<std::string>();
    ProcomplexStructure ps;
    std::vector<Point> slice;
    if (mode == "from-acs") {
        const EndoField& j = endo(c, t.at("structure").get<std::string>());
        ps = procomplex_from_acs(j, t.at("t_axis").get<int>() - 1, grid);
        for (const Point& x : pts) slice.push_back(ps.slice_point(x));
    } else {
        const auto& alpha = std::get<DiffForm>(c.m.objects.at(t.at("alpha").get<std::string>()));
        const auto& w = std::get<VectorField>(c.m.objects.at(t.at("w").get<std::string>()));
        const auto& seed = endo(c, t.at("seed").get<std::string>());
        CocomplexReport r = cocomplex_realize(alpha, w, seed.m, grid, c.m.tol.nijenhuis_zero, c.m.tol.rank,
                                              c.m.tol.symmetry, c.m.tol.frame);
        ps = r.structure;
        slice = pts;
        out.result["lie_alpha"] = r.lie_alpha;
        out.result["image_equal"] = r.image_equal;
        out.result["image_samples"] = r.samples;
        out.result["image_residual"] = r.image_residual;
        out.warn_points("NijenhuisVanishes", "the Nijenhuis operator vanishes here", r.vanishing);
        out.warn_points("ImageMismatch", "Im A differs from ker alpha", r.mismatch);
    }
    ProcomplexCheck ck = check_procomplex(ps, slice, c.m.tol.rank);
    ojson pj = procomplex_json(ps, ck);
    for (const auto& [k, v] : pj.items()) out.result[k] = v;
    out.result["mode"] = mode;
    out.result["anticommutation_pass"] = ck.anticommutation <= c.m.tol.anticommutation;
}

// ---- Monge-Ampere ----

void task_classify_ma(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    const auto& ps = std::get<PairSpec>(c.m.objects.at(t.at("pair").get<std::string>()));
    const auto& om = std::get<DiffForm>(c.m.objects.at(ps.omega));
    const auto& th = std::get<DiffForm>(c.m.objects.at(ps.theta));
    PairClassification cl = classify_pair(om, th, grid, ma_tol(c.m.tol));
    out.result["type"] = ma_type_name(cl.type);
    MAType flipped = cl.type == MAType::Elliptic ? MAType::Hyperbolic
                     : cl.type == MAType::Hyperbolic ? MAType::Elliptic
                                                     : cl.type;
    out.result["type_negative_pf_convention"] = ma_type_name(flipped);
    out.result["pf"] = expr_json(simplify(pfaffian(th, om, grid)));
    out.result["pf_min"] = cl.pf_min;
    out.result["pf_max"] = cl.pf_max;
    out.result["max_effective"] = cl.max_effective;
    out.result["reasons"] = cl.reasons;
    out.warn_points(cl.type == MAType::NotEffective ? "NotEffective" : "MixedType", "pointwise type differs here", cl.witnesses);
    out.warn("PfConvention",
             "Pf is theta^theta / omega^omega and elliptic pairs are normalized to Pf = +1; "
             "with theta^theta = -Pf omega^omega the sign of every Pf value flips",
             std::nullopt);
}

const MongeAmperePair& ma_pair(Context& c, const std::string& name, std::span<const Point> grid, const std::string& key) {
    auto it = c.pairs.find(key);
    if (it != c.pairs.end()) return it->second;
    const auto& ps = std::get<PairSpec>(c.m.objects.at(name));
    MongeAmperePair p = normalize_elliptic(std::get<DiffForm>(c.m.objects.at(ps.omega)),
                                           std::get<DiffForm>(c.m.objects.at(ps.theta)), grid, ma_tol(c.m.tol));
    return c.pairs.emplace(key, std::move(p)).first->second;
}

FrameOptions frame_options(const Context& c, const json& t) {
    FrameOptions opt;
    opt.lambda = t.value("lambda", 1.0);
    if (t.contains("y0_shift")) {
        auto s = t.at("y0_shift").get<std::vector<double>>();
        opt.y0_shift = Eigen::Vector2d(s[0], s[1]);
    }
    opt.numeric_bracket = c.flags.numeric_bracket;
    opt.cutoff = c.m.tol.nondegenerate;
    opt.rank_tol = c.m.tol.rank;
    opt.frame_tol = c.m.tol.gauge;
    return opt;
}

std::string grid_key(const json& t) { return t.contains("grid") ? t.at("grid").dump() : std::string("*"); }

const CanonicalFrame& ma_frame(Context& c, const json& t, const MongeAmperePair& p, std::span<const Point> grid) {
    FrameOptions opt = frame_options(c, t);
    char buf[128];
    std::snprintf(buf, sizeof buf, "|%.17g|%.17g|%.17g|%d", opt.lambda, opt.y0_shift(0), opt.y0_shift(1),
                  static_cast<int>(opt.numeric_bracket));
    std::string key = t.at("pair").get<std::string>() + grid_key(t) + buf;
    auto it = c.frames.find(key);
    if (it != c.frames.end()) return it->second;
    return c.frames.emplace(key, canonical_frame(p, grid, opt)).first->second;
}

ojson frame_point_json(const FramePoint& fp) {
    ojson o = ojson::object();
    o["x"] = point_json(fp.x);
    o["ok"] = fp.ok;
    if (!fp.ok) {
        o["failed_step"] = fp.failed_step;
        o["message"] = fp.message;
        return o;
    }
    o["y0"] = vec_json(fp.y0);
    o["alpha_frame"] = ojson::array({fp.alpha_frame[0], fp.alpha_frame[1], fp.alpha_frame[2], fp.alpha_frame[3]});
    o["omega_p1_jy0"] = fp.omega_p1_jy0;
    o["P1"] = vec_json(fp.p1);
    o["P2"] = vec_json(fp.p2);
    o["Q1"] = vec_json(fp.q1);
    o["Q2"] = vec_json(fp.q2);
    o["w"] = ojson::array({fp.w.real(), fp.w.imag()});
    o["phi"] = fp.phi;
    return o;
}

void task_ma_frame(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    const std::string name = t.at("pair").get<std::string>();
    const MongeAmperePair& p = ma_pair(c, name, grid, name + grid_key(t));
    out.result["pair"] = ojson{{"pf", expr_json(p.pf)},
                               {"theta", form_json(p.theta)},
                               {"j", endo_json(p.j.m)},
                               {"alpha", form_json(p.alpha)},
                               {"x_alpha", field_json(p.x_alpha)}};
    PairIdentities id = check_identities(p, grid, 16, c.m.grid.seed);
    out.result["identities"] = ojson{{"lepage", id.lepage},
                                     {"lepage_pass", id.lepage <= c.m.tol.lepage},
                                     {"jr", id.jr},
                                     {"jr_pass", id.jr <= c.m.tol.jr},
                                     {"r_antilinear", id.r_antilinear},
                                     {"j_symmetry", id.j_symmetry},
                                     {"samples", id.samples}};
    int nd = 0;
    double nmax = 0.0;
    std::vector<Point> degenerate;
    for (const Point& x : grid) {
        NondegeneracyVerdict v = nondegenerate(p, x, c.m.tol.nondegenerate, c.m.tol.rank);
        nmax = std::max(nmax, v.n_norm);
        if (v.overall) ++nd;
        else degenerate.push_back(x);
    }
    out.result["nondegenerate_points"] = nd;
    out.result["n_max"] = nmax;
    out.result["integrable"] = nmax <= c.m.tol.nijenhuis_zero;
    out.warn_points("Degenerate", "N_j = 0 or d alpha vanishes on Im N_j", degenerate);

    const CanonicalFrame& f = ma_frame(c, t, p, grid);
    ojson fr = ojson::object();
    fr["symbolic"] = f.symbolic;
    fr["lambda"] = f.lambda;
    fr["fields"] = ojson{{"P1", field_json(f.p1)}, {"P2", field_json(f.p2)}};
    if (f.symbolic) {
        fr["fields"]["Q1"] = field_json(f.q1);
        fr["fields"]["Q2"] = field_json(f.q2);
    }
    ojson pts = ojson::array();
    int ok = 0;
    for (const FramePoint& fp : f.points) {
        pts.push_back(frame_point_json(fp));
        if (fp.ok) ++ok;
        else if (fp.failed_step != "X0" && fp.failed_step != "nondegeneracy")
            out.warn("DegeneratePoint", "frame step " + fp.failed_step + ": " + fp.message, fp.x);
    }
    fr["defined_points"] = ok;
    fr["points"] = pts;
    out.result["frame"] = fr;
}

void task_theorem5(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    const std::string name = t.at("pair").get<std::string>();
    const MongeAmperePair& p = ma_pair(c, name, grid, name + grid_key(t));
    const CanonicalFrame& f = ma_frame(c, t, p, grid);
    Theorem5Report r = verify_theorem5(f, p, c.m.tol.table);
    out.result["pass"] = r.pass;
    out.result["tolerance"] = c.m.tol.table;
    out.result["applicable"] = r.applicable;
    out.result["max"] = ojson{{"omega", r.max_omega}, {"nijenhuis", r.max_nij}, {"j", r.max_jrow}, {"alpha", r.max_alpha}};
    ojson pts = ojson::array();
    for (const auto& tr : r.points) {
        ojson o = ojson::object();
        o["x"] = point_json(tr.x);
        o["applicable"] = tr.applicable;
        if (!tr.applicable) {
            o["provenance"] = tr.provenance;
        } else {
            o["omega"] = tr.omega;
            o["nijenhuis"] = tr.nij;
            o["j"] = tr.jrow;
            o["alpha"] = tr.alpha;
            o["pass"] = tr.pass;
            if (!tr.pass) out.warn("TableMismatch", "a structure table residual exceeds the tolerance", tr.x);
        }
        pts.push_back(o);
    }
    out.result["points"] = pts;
}

void task_structure(Context& c, const json& t, TaskOutput& out) {
    auto grid = task_grid(c, t);
    const std::string name = t.at("pair").get<std::string>();
    const MongeAmperePair& p = ma_pair(c, name, grid, name + grid_key(t));
    const CanonicalFrame& f = ma_frame(c, t, p, grid);
    std::size_t limit = t.contains("points") ? t.at("points").get<std::size_t>() : 8;
    std::vector<Point> pts;
    for (const FramePoint& fp : f.points)
        if (fp.ok && pts.size() < limit) pts.push_back(fp.x);
    const bool numeric = c.flags.numeric_bracket || !f.symbolic;
    auto sf = structure_functions(f, p, pts, numeric, c.m.tol.rank);
    static const char* labels[] = {"P1P2", "P1Q1", "P1Q2", "P2Q1", "P2Q2", "Q1Q2"};
    ojson arr = ojson::array();
    for (const auto& s : sf) {
        ojson o = ojson::object();
        o["x"] = point_json(s.x);
        o["ok"] = s.ok;
        if (!s.ok) {
            o["message"] = s.message;
            out.warn("FrameSingular", s.message, s.x);
        } else {
            ojson cc = ojson::object();
            for (std::size_t q = 0; q < 6; ++q)
                cc[labels[q]] = ojson::array({s.c[q][0], s.c[q][1], s.c[q][2], s.c[q][3]});
            o["c"] = cc;
            o["residual"] = s.residual;
        }
        arr.push_back(o);
    }
    out.result["numeric"] = numeric;
    out.result["basis"] = ojson::array({"P1", "P2", "Q1", "Q2"});
    out.result["points"] = arr;
}

void task_slope(Context& c, const json& t, TaskOutput& out) {
    GridSpec spec = task_grid_spec(c, t);
    auto grid = make_grid(spec);
    const std::string name = t.at("pair").get<std::string>();
    const MongeAmperePair& p = ma_pair(c, name, grid, name + grid_key(t));
    const CanonicalFrame& f = ma_frame(c, t, p, grid);
    SlopeReport r = slope(f, p, spec, t.value("with_u1", true));
    ojson es = ojson::array();
    for (const auto& e : r.entries)
        es.push_back(ojson{{"x", point_json(e.x)},
                           {"w", ojson::array({e.w.real(), e.w.imag()})},
                           {"phi", e.phi},
                           {"u1", e.u1 ? ojson(*e.u1) : ojson(nullptr)}});
    out.result["entries"] = es;
    ojson ds = ojson::array();
    for (const auto& [a, b] : r.discontinuities) {
        ds.push_back(ojson{{"a", point_json(a)}, {"b", point_json(b)}});
        out.warn("SlopeJump", "w jumps between lattice neighbours", a);
    }
    out.result["discontinuities"] = ds;
}

}  // namespace

std::string dump(const ojson& j) {
    std::string out;
    dump_to(j, out, 0);
    out += "\n";
    return out;
}

ojson run_tasks(Model& m, const Flags& flags, bool& any_error) {
    Context c{m, flags, {}, {}, {}};
    ojson tasks = ojson::array();
    using Runner = void (*)(Context&, const json&, TaskOutput&);
    static const std::map<std::string, Runner> runners = {
        {"classify-dist", task_classify_dist}, {"tanaka", task_tanaka},
        {"realize", task_realize},             {"utxi", task_utxi},
        {"procomplex-check", task_procomplex}, {"classify-ma", task_classify_ma},
        {"ma-frame", task_ma_frame},           {"verify-theorem5", task_theorem5},
        {"structure-functions", task_structure}, {"slope", task_slope},
    };
    for (std::size_t i = 0; i < m.tasks.size(); ++i) {
        const json& t = m.tasks[i];
        ojson entry = ojson::object();
        entry["index"] = i;
        entry["cmd"] = t.at("cmd");
        if (t.contains("label")) entry["label"] = t.at("label");
        TaskOutput out;
        try {
            runners.at(t.at("cmd").get<std::string>())(c, t, out);
            entry["status"] = "ok";
            entry["result"] = out.result;
        } catch (const Error& e) {
            any_error = true;
            entry["status"] = "error";
            entry["error"] = ojson{{"code", code_name(e.code())},
                                   {"message", e.what()},
                                   {"witness", e.witness() ? point_json(*e.witness()) : ojson(nullptr)}};
        } catch (const std::exception& e) {
            any_error = true;
            entry["status"] = "error";
            entry["error"] = ojson{{"code", "Internal"}, {"message", e.what()}, {"witness", nullptr}};
        }
        entry["warnings"] = out.warnings;
        tasks.push_back(entry);
    }
    return tasks;
}

}  // namespace detail

RunResult run_manifest(const std::string& text, const Flags& flags) {
    RunResult r;
    detail::Model m;
    try {
        m = detail::load_manifest(text, flags);
    } catch (const ManifestError& e) {
        r.exit_code = 2;
        r.error = e.what();
        return r;
    }
    bool any_error = false;
    detail::ojson rep = detail::ojson::object();
    rep["schema"] = 1;
    rep["tool"] = "dg4";
    rep["version"] = kVersion;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a(m.canonical));
    rep["manifest_hash"] = hash;
    rep["grid"] = detail::ojson{{"min", m.grid.min},
                                {"max", m.grid.max},
                                {"counts", m.grid.counts},
                                {"random", m.grid.random},
                                {"seed", m.grid.seed},
                                {"points", make_grid(m.grid).size()}};
    // Expressions in the report use x1..xn for the chart variables in order.
    detail::ojson names = detail::ojson::array();
    for (int i = 1; i <= m.dim; ++i) names.push_back("x" + std::to_string(i));
    rep["chart"] = detail::ojson{{"dim", m.dim}, {"vars", m.vars}, {"expression_names", names}};
    detail::ojson tol = detail::ojson::object();
    for (const auto& [k, v] : m.tol.as_map()) tol[k] = v;
    rep["tolerances"] = tol;
    rep["flags"] = detail::ojson{{"swap_ut_labels", flags.swap_ut_labels}, {"numeric_bracket", flags.numeric_bracket}};
    rep["tasks"] = detail::run_tasks(m, flags, any_error);
    r.report = detail::dump(rep);
    r.exit_code = any_error ? 3 : 0;
    return r;
}

}  // namespace dg4::cli
