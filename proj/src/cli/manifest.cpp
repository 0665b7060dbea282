#include <algorithm>
#include <cctype>
#include <set>

#include "internal.hpp"

namespace dg4::cli::detail {

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional) {
    if (!obj.is_object()) throw ManifestError(path, "expected an object");
    std::set<std::string> allowed;
    for (const char* k : required) {
        allowed.insert(k);
        if (!obj.contains(k)) throw ManifestError(path + "/" + k, "missing field");
    }
    for (const char* k : optional) allowed.insert(k);
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ManifestError(path + "/" + k, "unknown field");
}

const json& field(const json& obj, const char* key) { return obj.at(key); }

std::string get_string(const json& obj, const char* key, const std::string& path) {
    const json& v = field(obj, key);
    if (!v.is_string()) throw ManifestError(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> get_names(const json& obj, const char* key, const std::string& path) {
    const json& v = field(obj, key);
    if (!v.is_array()) throw ManifestError(path + "/" + key, "expected an array of names");
    std::vector<std::string> r;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw ManifestError(path + "/" + key + "/" + std::to_string(i), "expected a string");
        r.push_back(v[i].get<std::string>());
    }
    return r;
}

std::vector<double> get_numbers(const json& v, const std::string& path, std::size_t size) {
    if (!v.is_array() || v.size() != size)
        throw ManifestError(path, "expected an array of " + std::to_string(size) + " numbers");
    std::vector<double> r;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ManifestError(path + "/" + std::to_string(i), "expected a number");
        r.push_back(v[i].get<double>());
    }
    return r;
}

DiffForm parse_form(const Model& m, const json& o, int k, const std::string& path) {
    check_keys(o, path, {"kind", "components"}, {});
    const json& comps = o.at("components");
    if (!comps.is_object()) throw ManifestError(path + "/components", "expected an object keyed by index strings");
    if (k > m.dim) throw ManifestError(path + "/kind", "degree exceeds the chart dimension");
    DiffForm f(m.dim, k);
    for (const auto& [key, val] : comps.items()) {
        const std::string p = path + "/components/" + key;
        if (!val.is_string()) throw ManifestError(p, "expected an expression string");
        unsigned mask = 0;
        if (k == 0) {
            if (key != "0") throw ManifestError(p, "a 0-form has the single component key \"0\"");
        } else {
            if (static_cast<int>(key.size()) != k) throw ManifestError(p, "index string must have one digit per degree");
            int prev = 0;
            for (char ch : key) {
                int d = ch - '0';
                if (!std::isdigit(static_cast<unsigned char>(ch)) || d < 1 || d > m.dim)
                    throw ManifestError(p, "index out of range");
                if (d <= prev) throw ManifestError(p, "indices must be increasing");
                prev = d;
                mask |= 1u << (d - 1);
            }
        }
        f.at(mask) = parse_expr(m, val.get<std::string>(), p);
    }
    return f;
}

Object parse_object(const Model& m, const json& o, const std::string& path) {
    if (!o.is_object() || !o.contains("kind") || !o.at("kind").is_string())
        throw ManifestError(path + "/kind", "missing or invalid kind");
    const std::string kind = o.at("kind").get<std::string>();
    if (kind.size() == 5 && kind.rfind("form", 0) == 0 && kind[4] >= '0' && kind[4] <= '4')
        return parse_form(m, o, kind[4] - '0', path);
    if (kind == "vector") {
        check_keys(o, path, {"kind", "components"}, {});
        const json& c = o.at("components");
        if (!c.is_array() || static_cast<int>(c.size()) != m.dim)
            throw ManifestError(path + "/components", "expected " + std::to_string(m.dim) + " expression strings");
        VectorField v(m.dim);
        for (int i = 0; i < m.dim; ++i) {
            const std::string p = path + "/components/" + std::to_string(i);
            if (!c[static_cast<std::size_t>(i)].is_string()) throw ManifestError(p, "expected an expression string");
            v[i] = parse_expr(m, c[static_cast<std::size_t>(i)].get<std::string>(), p);
        }
        return v;
    }
    if (kind == "endo") {
        check_keys(o, path, {"kind", "matrix"}, {});
        const json& rows = o.at("matrix");
        if (!rows.is_array() || rows.empty()) throw ManifestError(path + "/matrix", "expected a nonempty array of rows");
        const int n = static_cast<int>(rows.size());
        ExprMatrix mat(n, n);
        for (int r = 0; r < n; ++r) {
            const json& row = rows[static_cast<std::size_t>(r)];
            const std::string pr = path + "/matrix/" + std::to_string(r);
            if (!row.is_array() || static_cast<int>(row.size()) != n) throw ManifestError(pr, "matrix must be square");
            for (int c = 0; c < n; ++c) {
                const std::string p = pr + "/" + std::to_string(c);
                if (!row[static_cast<std::size_t>(c)].is_string()) throw ManifestError(p, "expected an expression string");
                mat(r, c) = parse_expr(m, row[static_cast<std::size_t>(c)].get<std::string>(), p);
            }
        }
        return EndoField(mat);
    }
    if (kind == "distribution") {
        check_keys(o, path, {"kind"}, {"fields", "annihilator"});
        DistSpec d;
        if (o.contains("fields") == o.contains("annihilator"))
            throw ManifestError(path, "give exactly one of fields or annihilator");
        if (o.contains("fields")) d.fields = get_names(o, "fields", path);
        else d.annihilator = get_names(o, "annihilator", path);
        const auto& names = d.fields.empty() ? d.annihilator : d.fields;
        const char* key = d.fields.empty() ? "annihilator" : "fields";
        if (names.empty()) throw ManifestError(path + "/" + key, "empty list");
        for (std::size_t i = 0; i < names.size(); ++i) {
            const std::string p = path + "/" + key + "/" + std::to_string(i);
            auto it = m.objects.find(names[i]);
            if (it == m.objects.end()) throw ManifestError(p, "unknown object '" + names[i] + "'");
            if (!d.fields.empty() && !std::holds_alternative<VectorField>(it->second))
                throw ManifestError(p, "expected a vector object");
            if (d.fields.empty()) {
                const auto* f = std::get_if<DiffForm>(&it->second);
                if (!f || f->k != 1) throw ManifestError(p, "expected a form1 object");
            }
        }
        return d;
    }
    if (kind == "pair") {
        check_keys(o, path, {"kind", "omega", "theta"}, {});
        PairSpec ps{get_string(o, "omega", path), get_string(o, "theta", path)};
        for (const char* key : {"omega", "theta"}) {
            const std::string& name = std::string(key) == "omega" ? ps.omega : ps.theta;
            auto it = m.objects.find(name);
            const auto* f = it == m.objects.end() ? nullptr : std::get_if<DiffForm>(&it->second);
            if (!f || f->k != 2) throw ManifestError(path + "/" + key, "expected the name of a form2 object");
        }
        return ps;
    }
    throw ManifestError(path + "/kind", "unknown kind '" + kind + "'");
}

template <class T>
void require_kind(const Model& m, const std::set<std::string>& endos, const json& t, const char* key,
                  const std::string& path, const char* what) {
    const json& v = t.at(key);
    if (!v.is_string()) throw ManifestError(path + "/" + key, "expected an object name");
    const std::string name = v.get<std::string>();
    if constexpr (std::is_same_v<T, EndoField>) {
        if (endos.count(name)) return;
    }
    auto it = m.objects.find(name);
    if (it == m.objects.end() || !std::holds_alternative<T>(it->second))
        throw ManifestError(path + "/" + key, "expected the name of a " + std::string(what) + " object");
}

void check_bool(const json& t, const char* key, const std::string& path) {
    if (t.contains(key) && !t.at(key).is_boolean()) throw ManifestError(path + "/" + key, "expected a boolean");
}

void check_count(const json& t, const char* key, const std::string& path) {
    if (t.contains(key) && (!t.at(key).is_number_integer() || t.at(key).get<long long>() < 1))
        throw ManifestError(path + "/" + key, "expected a positive integer");
}

// "pair": ["omega", "theta"] names the two forms directly; it becomes an anonymous pair object.
void resolve_inline_pair(Model& m, json& t, const std::string& path) {
    json& v = t.at("pair");
    if (!v.is_array()) return;
    if (v.size() != 2 || !v[0].is_string() || !v[1].is_string())
        throw ManifestError(path + "/pair", "expected a pair object name or [omega, theta]");
    PairSpec ps{v[0].get<std::string>(), v[1].get<std::string>()};
    for (int i = 0; i < 2; ++i) {
        auto it = m.objects.find(i == 0 ? ps.omega : ps.theta);
        const auto* f = it == m.objects.end() ? nullptr : std::get_if<DiffForm>(&it->second);
        if (!f || f->k != 2) throw ManifestError(path + "/pair/" + std::to_string(i), "expected the name of a form2 object");
    }
    std::string name = "[" + ps.omega + "," + ps.theta + "]";
    m.objects.emplace(name, ps);
    v = name;
}

void validate_task(Model& m, std::set<std::string>& endos, json& t, const std::string& path) {
    if (!t.is_object() || !t.contains("cmd") || !t.at("cmd").is_string())
        throw ManifestError(path + "/cmd", "missing or invalid cmd");
    const std::string cmd = t.at("cmd").get<std::string>();
    auto keys = [&](std::initializer_list<const char*> req, std::initializer_list<const char*> opt) {
        std::vector<const char*> o(opt);
        o.push_back("label");
        o.push_back("grid");
        std::set<std::string> allowed{"cmd"};
        for (const char* k : req) {
            allowed.insert(k);
            if (!t.contains(k)) throw ManifestError(path + "/" + k, "missing field");
        }
        for (const char* k : o) allowed.insert(k);
        for (const auto& [k, v] : t.items())
            if (!allowed.count(k)) throw ManifestError(path + "/" + k, "unknown field");
    };
    if (t.contains("label") && !t.at("label").is_string()) throw ManifestError(path + "/label", "expected a string");
    if (t.contains("grid")) (void)parse_grid(t.at("grid"), m.dim, path + "/grid");

    if (cmd == "classify-dist") {
        keys({"distribution"}, {"symmetries", "canonical_line_at"});
        require_kind<DistSpec>(m, endos, t, "distribution", path, "distribution");
        if (t.contains("symmetries"))
            for (const auto& s : get_names(t, "symmetries", path))
                if (!m.objects.count(s) || !std::holds_alternative<VectorField>(m.objects.at(s)))
                    throw ManifestError(path + "/symmetries", "unknown vector object '" + s + "'");
        if (t.contains("canonical_line_at")) (void)get_numbers(t.at("canonical_line_at"), path + "/canonical_line_at", static_cast<std::size_t>(m.dim));
    } else if (cmd == "tanaka") {
        keys({"distribution"}, {"point"});
        require_kind<DistSpec>(m, endos, t, "distribution", path, "distribution");
        if (t.contains("point")) (void)get_numbers(t.at("point"), path + "/point", static_cast<std::size_t>(m.dim));
    } else if (cmd == "realize") {
        keys({"distribution", "symmetries"}, {"section_weight", "store"});
        require_kind<DistSpec>(m, endos, t, "distribution", path, "distribution");
        auto s = get_names(t, "symmetries", path);
        if (s.size() != 2) throw ManifestError(path + "/symmetries", "expected two vector names");
        for (const auto& n : s)
            if (!m.objects.count(n) || !std::holds_alternative<VectorField>(m.objects.at(n)))
                throw ManifestError(path + "/symmetries", "unknown vector object '" + n + "'");
        if (t.contains("section_weight")) {
            if (!t.at("section_weight").is_string()) throw ManifestError(path + "/section_weight", "expected an expression string");
            (void)parse_expr(m, t.at("section_weight").get<std::string>(), path + "/section_weight");
        }
        if (t.contains("store")) {
            std::string name = get_string(t, "store", path);
            if (m.objects.count(name) || endos.count(name)) throw ManifestError(path + "/store", "name already in use");
            endos.insert(name);
        }
    } else if (cmd == "utxi") {
        keys({"structure"}, {"flip_xi3", "points"});
        require_kind<EndoField>(m, endos, t, "structure", path, "endo");
        check_bool(t, "flip_xi3", path);
        check_count(t, "points", path);
    } else if (cmd == "procomplex-check") {
        keys({"mode"}, {"structure", "t_axis", "alpha", "w", "seed", "samples"});
        const std::string mode = get_string(t, "mode", path);
        check_count(t, "samples", path);
        if (mode == "from-acs") {
            for (const char* k : {"structure", "t_axis"})
                if (!t.contains(k)) throw ManifestError(path + "/" + k, "missing field");
            for (const char* k : {"alpha", "w", "seed"})
                if (t.contains(k)) throw ManifestError(path + "/" + k, "not used in from-acs mode");
            require_kind<EndoField>(m, endos, t, "structure", path, "endo");
            const json& ta = t.at("t_axis");
            if (!ta.is_number_integer() || ta.get<int>() < 1 || ta.get<int>() > m.dim)
                throw ManifestError(path + "/t_axis", "expected a coordinate number 1.." + std::to_string(m.dim));
        } else if (mode == "cocomplex") {
            for (const char* k : {"alpha", "w", "seed"})
                if (!t.contains(k)) throw ManifestError(path + "/" + k, "missing field");
            for (const char* k : {"structure", "t_axis"})
                if (t.contains(k)) throw ManifestError(path + "/" + k, "not used in cocomplex mode");
            require_kind<DiffForm>(m, endos, t, "alpha", path, "form1");
            require_kind<VectorField>(m, endos, t, "w", path, "vector");
            require_kind<EndoField>(m, endos, t, "seed", path, "endo");
        } else {
            throw ManifestError(path + "/mode", "expected from-acs or cocomplex");
        }
    } else if (cmd == "classify-ma") {
        keys({"pair"}, {});
        resolve_inline_pair(m, t, path);
        require_kind<PairSpec>(m, endos, t, "pair", path, "pair");
    } else if (cmd == "ma-frame" || cmd == "verify-theorem5" || cmd == "structure-functions" || cmd == "slope") {
        if (cmd == "structure-functions") keys({"pair"}, {"lambda", "y0_shift", "points"});
        else if (cmd == "slope") keys({"pair"}, {"lambda", "y0_shift", "with_u1"});
        else keys({"pair"}, {"lambda", "y0_shift"});
        resolve_inline_pair(m, t, path);
        require_kind<PairSpec>(m, endos, t, "pair", path, "pair");
        if (t.contains("lambda") && (!t.at("lambda").is_number() || t.at("lambda").get<double>() == 0.0))
            throw ManifestError(path + "/lambda", "expected a nonzero number");
        if (t.contains("y0_shift")) (void)get_numbers(t.at("y0_shift"), path + "/y0_shift", 2);
        check_count(t, "points", path);
        check_bool(t, "with_u1", path);
    } else {
        throw ManifestError(path + "/cmd", "unknown command '" + cmd + "'");
    }
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

Expr parse_expr(const Model& m, const std::string& text, const std::string& path) {
    // Rename chart variables to x1..xn, keeping a map back to source offsets.
    std::string out;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < text.size();) {
        if (is_ident_start(text[i])) {
            std::size_t j = i;
            while (j < text.size() && is_ident(text[j])) ++j;
            std::string id = text.substr(i, j - i);
            auto it = std::find(m.vars.begin(), m.vars.end(), id);
            if (it != m.vars.end()) id = "x" + std::to_string(it - m.vars.begin() + 1);
            else if (id.size() > 1 && id[0] == 'x' && std::all_of(id.begin() + 1, id.end(), ::isdigit)) id = "_" + id;
            for (char c : id) {
                out.push_back(c);
                origin.push_back(i);
            }
            i = j;
        } else {
            out.push_back(text[i]);
            origin.push_back(i++);
        }
    }
    auto source = [&](std::size_t off) { return off < origin.size() ? origin[off] : text.size(); };
    try {
        return parse(out, m.dim);
    } catch (const SyntaxError& e) {
        std::string msg = e.what();
        msg = msg.substr(0, msg.rfind(" at byte"));
        throw ManifestError(path, "syntax error: " + msg + " at byte " + std::to_string(source(e.offset())));
    } catch (const UnknownVariable& e) {
        std::string name = e.name();
        if (name.size() > 1 && name[0] == '_' && name[1] == 'x') name = name.substr(1);
        throw ManifestError(path, "unknown variable '" + name + "' at byte " + std::to_string(source(e.offset())));
    }
}

GridSpec parse_grid(const json& g, int dim, const std::string& path) {
    check_keys(g, path, {"lattice"}, {"random", "seed"});
    const json& l = g.at("lattice");
    check_keys(l, path + "/lattice", {"min", "max", "counts"}, {});
    GridSpec s;
    s.min = get_numbers(l.at("min"), path + "/lattice/min", static_cast<std::size_t>(dim));
    s.max = get_numbers(l.at("max"), path + "/lattice/max", static_cast<std::size_t>(dim));
    const json& c = l.at("counts");
    if (!c.is_array() || static_cast<int>(c.size()) != dim)
        throw ManifestError(path + "/lattice/counts", "expected " + std::to_string(dim) + " counts");
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!c[i].is_number_integer() || c[i].get<int>() < 1 || c[i].get<int>() > 64)
            throw ManifestError(path + "/lattice/counts/" + std::to_string(i), "expected an integer in 1..64");
        s.counts.push_back(c[i].get<int>());
    }
    for (int i = 0; i < dim; ++i)
        if (!(s.min[static_cast<std::size_t>(i)] <= s.max[static_cast<std::size_t>(i)]))
            throw ManifestError(path + "/lattice", "min exceeds max");
    s.random = 16;
    s.seed = 42;
    if (g.contains("random")) {
        if (!g.at("random").is_number_integer() || g.at("random").get<int>() < 0)
            throw ManifestError(path + "/random", "expected a nonnegative integer");
        s.random = g.at("random").get<int>();
    }
    if (g.contains("seed")) {
        if (!g.at("seed").is_number_unsigned()) throw ManifestError(path + "/seed", "expected a nonnegative integer");
        s.seed = g.at("seed").get<std::uint64_t>();
    }
    return s;
}

Model load_manifest(const std::string& text, const Flags& flags) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError("", std::string("invalid JSON: ") + e.what());
    }
    check_keys(doc, "", {"schema", "chart", "objects", "tasks"}, {"grid", "tolerances"});
    if (!doc.at("schema").is_number_integer() || doc.at("schema").get<int>() != 1)
        throw ManifestError("/schema", "only schema 1 is supported");

    Model m;
    m.canonical = doc.dump();
    const json& chart = doc.at("chart");
    check_keys(chart, "/chart", {"dim"}, {"vars"});
    if (!chart.at("dim").is_number_integer() || chart.at("dim").get<int>() < 1 || chart.at("dim").get<int>() > 9)
        throw ManifestError("/chart/dim", "expected an integer in 1..9");
    m.dim = chart.at("dim").get<int>();
    for (int i = 0; i < m.dim; ++i) m.vars.push_back("x" + std::to_string(i + 1));
    if (chart.contains("vars")) {
        m.vars = get_names(chart, "vars", "/chart");
        if (static_cast<int>(m.vars.size()) != m.dim) throw ManifestError("/chart/vars", "one name per dimension");
        std::set<std::string> seen;
        for (const auto& v : m.vars) {
            if (v.empty() || !is_ident_start(v[0]) || !std::all_of(v.begin(), v.end(), is_ident))
                throw ManifestError("/chart/vars", "'" + v + "' is not an identifier");
            for (const char* fn : {"sin", "cos", "exp", "ln", "sqrt", "atan2"})
                if (v == fn) throw ManifestError("/chart/vars", "'" + v + "' is a function name");
            if (!seen.insert(v).second) throw ManifestError("/chart/vars", "duplicate name '" + v + "'");
        }
    }

    m.grid = GridSpec::standard(m.dim);
    if (doc.contains("grid")) m.grid = parse_grid(doc.at("grid"), m.dim, "/grid");
    if (flags.grid_counts) {
        if (static_cast<int>(flags.grid_counts->size()) != m.dim)
            throw ManifestError("--grid", "expected " + std::to_string(m.dim) + " counts");
        m.grid.counts = *flags.grid_counts;
    }
    if (flags.seed) m.grid.seed = *flags.seed;

    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        if (!t.is_object()) throw ManifestError("/tolerances", "expected an object");
        for (const auto& [k, v] : t.items()) {
            if (!v.is_number() || v.get<double>() <= 0) throw ManifestError("/tolerances/" + k, "expected a positive number");
            if (!m.tol.set(k, v.get<double>())) throw ManifestError("/tolerances/" + k, "unknown tolerance");
        }
    }
    for (const auto& [k, v] : flags.tol) {
        if (!(v > 0)) throw ManifestError("--tol " + k, "expected a positive number");
        if (!m.tol.set(k, v)) throw ManifestError("--tol " + k, "unknown tolerance");
    }

    // Objects may reference earlier ones; the manifest order is kept.
    const json& objs = doc.at("objects");
    if (!objs.is_object()) throw ManifestError("/objects", "expected an object");
    std::vector<std::string> order;
    {
        nlohmann::ordered_json o = nlohmann::ordered_json::parse(text).at("objects");
        for (const auto& [k, v] : o.items()) order.push_back(k);
    }
    for (const auto& name : order) {
        if (name.empty()) throw ManifestError("/objects", "empty object name");
        m.objects.emplace(name, parse_object(m, objs.at(name), "/objects/" + name));
    }

    json tasks = doc.at("tasks");
    if (!tasks.is_array() || tasks.empty()) throw ManifestError("/tasks", "expected a nonempty array");
    std::set<std::string> endos;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        validate_task(m, endos, tasks[i], "/tasks/" + std::to_string(i));
        m.tasks.push_back(tasks[i]);
    }
    if (make_grid(m.grid).empty()) throw ManifestError("/grid", "the grid is empty");
    return m;
}

}  // namespace dg4::cli::detail
