#include "dg4/grid.hpp"

#include "dg4/error.hpp"

namespace dg4 {

GridSpec GridSpec::standard(int n) {
    GridSpec g;
    g.min.assign(static_cast<std::size_t>(n), -1.0);
    g.max.assign(static_cast<std::size_t>(n), 1.0);
    g.counts.assign(static_cast<std::size_t>(n), 3);
    return g;
}

std::vector<Point> make_grid(const GridSpec& spec) {
    const std::size_t n = spec.counts.size();
    if (spec.min.size() != n || spec.max.size() != n)
        throw Error(ErrorCode::InvalidArgument, "grid bounds and counts differ in length");
    std::vector<Point> pts;
    std::size_t total = 1;
    for (int c : spec.counts) {
        if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative lattice count");
        total *= static_cast<std::size_t>(c);
    }
    if (n == 0) total = 0;
    for (std::size_t flat = 0; flat < total; ++flat) {
        Point p(n);
        std::size_t rest = flat;
        for (std::size_t d = n; d-- > 0;) {
            int c = spec.counts[d];
            std::size_t i = rest % static_cast<std::size_t>(c);
            rest /= static_cast<std::size_t>(c);
            p[d] = c == 1 ? 0.5 * (spec.min[d] + spec.max[d])
                          : spec.min[d] + (spec.max[d] - spec.min[d]) * static_cast<double>(i) / (c - 1);
        }
        pts.push_back(std::move(p));
    }
    UnitRng rng(spec.seed);
    for (int k = 0; k < spec.random; ++k) {
        Point p(n);
        for (std::size_t d = 0; d < n; ++d) p[d] = rng.uniform(spec.min[d], spec.max[d]);
        pts.push_back(std::move(p));
    }
    return pts;
}

bool Tolerances::set(const std::string& key, double value) {
    static const std::map<std::string, double Tolerances::*> fields = {
        {"rank", &Tolerances::rank},
        {"symmetry", &Tolerances::symmetry},
        {"jsquare", &Tolerances::jsquare},
        {"frame", &Tolerances::frame},
        {"nondegenerate", &Tolerances::nondegenerate},
        {"table", &Tolerances::table},
        {"effective", &Tolerances::effective},
        {"pfaffian", &Tolerances::pfaffian},
        {"lepage", &Tolerances::lepage},
        {"jr", &Tolerances::jr},
        {"anticommutation", &Tolerances::anticommutation},
        {"gauge", &Tolerances::gauge},
        {"nijenhuis_zero", &Tolerances::nijenhuis_zero},
        {"closed", &Tolerances::closed},
    };
    auto it = fields.find(key);
    if (it == fields.end()) return false;
    this->*(it->second) = value;
    return true;
}

std::map<std::string, double> Tolerances::as_map() const {
    return {{"rank", rank},         {"symmetry", symmetry},
            {"jsquare", jsquare},   {"frame", frame},
            {"nondegenerate", nondegenerate}, {"table", table},
            {"effective", effective}, {"pfaffian", pfaffian},
            {"lepage", lepage},     {"jr", jr},
            {"anticommutation", anticommutation}, {"gauge", gauge},
            {"nijenhuis_zero", nijenhuis_zero}, {"closed", closed}};
}

}  // namespace dg4
