#include <fstream>
#include <stdexcept>

#include "dg4/cli.hpp"

namespace dg4::cli {

std::map<std::string, std::string> example_manifests() {
    std::map<std::string, std::string> m;
    m["normal_integrable.json"] = R"json({
  "schema": 1,
  "chart": {"dim": 4, "vars": ["x1", "x2", "x3", "x4"]},
  "objects": {
    "a1": {"kind": "form1", "components": {"1": "1"}},
    "a2": {"kind": "form1", "components": {"2": "1"}},
    "pi": {"kind": "distribution", "annihilator": ["a1", "a2"]},
    "d3": {"kind": "vector", "components": ["0", "0", "1", "0"]},
    "d1": {"kind": "vector", "components": ["1", "0", "0", "0"]}
  },
  "grid": {"lattice": {"min": [-1, -1, -1, -1], "max": [1, 1, 1, 1], "counts": [3, 3, 3, 3]}, "random": 16, "seed": 42},
  "tasks": [
    {"cmd": "classify-dist", "distribution": "pi", "symmetries": ["d3", "d1"]},
    {"cmd": "tanaka", "distribution": "pi", "point": [0, 0, 0, 0]}
  ]
}
)json";
    m["normal_contact.json"] = R"json({
  "schema": 1,
  "chart": {"dim": 4, "vars": ["x1", "x2", "x3", "x4"]},
  "objects": {
    "a1": {"kind": "form1", "components": {"1": "1"}},
    "a2": {"kind": "form1", "components": {"3": "x2", "4": "-1"}},
    "pi": {"kind": "distribution", "annihilator": ["a1", "a2"]}
  },
  "grid": {"lattice": {"min": [-1, -1, -1, -1], "max": [1, 1, 1, 1], "counts": [3, 3, 3, 3]}, "random": 16, "seed": 42},
  "tasks": [
    {"cmd": "classify-dist", "distribution": "pi"},
    {"cmd": "tanaka", "distribution": "pi", "point": [0, 0, 0, 0]}
  ]
}
)json";
    // x3 stays away from 0, where the realization frame (xi1, xi2, s1, s2) is dependent.
    m["normal_engel.json"] = R"json({
  "schema": 1,
  "chart": {"dim": 4, "vars": ["x1", "x2", "x3", "x4"]},
  "objects": {
    "a1": {"kind": "form1", "components": {"1": "1", "4": "x2"}},
    "a2": {"kind": "form1", "components": {"2": "1", "4": "x3"}},
    "pi": {"kind": "distribution", "annihilator": ["a1", "a2"]},
    "s_plus": {"kind": "vector", "components": ["1", "0", "0", "1"]},
    "s_minus": {"kind": "vector", "components": ["1", "0", "0", "-1"]}
  },
  "grid": {"lattice": {"min": [-1, -1, 0.5, -1], "max": [1, 1, 1.5, 1], "counts": [3, 3, 3, 3]}, "random": 16, "seed": 42},
  "tasks": [
    {"cmd": "classify-dist", "distribution": "pi", "symmetries": ["s_plus", "s_minus"], "canonical_line_at": [0, 0, 0, 0]},
    {"cmd": "tanaka", "distribution": "pi", "point": [0, 0, 0, 0]},
    {"cmd": "realize", "distribution": "pi", "symmetries": ["s_plus", "s_minus"], "section_weight": "exp(x1)", "store": "j_engel"},
    {"cmd": "utxi", "structure": "j_engel"},
    {"cmd": "utxi", "structure": "j_engel", "flip_xi3": true, "points": 8, "label": "opposite half-space"},
    {"cmd": "procomplex-check", "mode": "from-acs", "structure": "j_engel", "t_axis": 1, "samples": 64}
  ]
}
)json";
    m["contact_cocomplex.json"] = R"json({
  "schema": 1,
  "chart": {"dim": 3, "vars": ["q", "p", "u"]},
  "objects": {
    "alpha": {"kind": "form1", "components": {"1": "p", "3": "-1"}},
    "w": {"kind": "vector", "components": ["0", "0", "-1"]},
    "seed": {"kind": "endo", "matrix": [["u", "-(1 + u^2)"], ["1", "-u"]]}
  },
  "grid": {"lattice": {"min": [-1, -1, -1], "max": [1, 1, 1], "counts": [3, 3, 3]}, "random": 16, "seed": 42},
  "tasks": [
    {"cmd": "procomplex-check", "mode": "cocomplex", "alpha": "alpha", "w": "w", "seed": "seed", "samples": 64}
  ]
}
)json";
    m["elliptic_closed.json"] = R"json({
  "schema": 1,
  "chart": {"dim": 4, "vars": ["x1", "x2", "x3", "x4"]},
  "objects": {
    "omega": {"kind": "form2", "components": {"12": "1", "34": "1"}},
    "theta": {"kind": "form2", "components": {"14": "1", "23": "1", "13": "x1^2 + x3"}},
    "pair": {"kind": "pair", "omega": "omega", "theta": "theta"}
  },
  "grid": {"lattice": {"min": [-1, -1, -1, -1], "max": [1, 1, 1, 1], "counts": [3, 3, 3, 3]}, "random": 16, "seed": 42},
  "tasks": [
    {"cmd": "classify-ma", "pair": "pair"},
    {"cmd": "ma-frame", "pair": "pair"}
  ]
}
)json";
    m["elliptic_nondegenerate.json"] = R"json({
  "schema": 1,
  "chart": {"dim": 4, "vars": ["x1", "x2", "x3", "x4"]},
  "objects": {
    "omega": {"kind": "form2", "components": {"12": "1", "34": "1"}},
    "theta": {"kind": "form2", "components": {
      "14": "cos(x1 + x2*x3)", "23": "cos(x1 + x2*x3)",
      "13": "sin(x1 + x2*x3)", "24": "-sin(x1 + x2*x3)"}},
    "pair": {"kind": "pair", "omega": "omega", "theta": "theta"}
  },
  "grid": {"lattice": {"min": [-1, -1, -1, -1], "max": [1, 1, 1, 1], "counts": [3, 3, 3, 3]}, "random": 16, "seed": 42},
  "tasks": [
    {"cmd": "classify-ma", "pair": "pair"},
    {"cmd": "ma-frame", "pair": "pair"},
    {"cmd": "verify-theorem5", "pair": "pair"},
    {"cmd": "verify-theorem5", "pair": "pair", "lambda": -3, "y0_shift": [0.7, -1.3], "label": "gauge rerun"},
    {"cmd": "structure-functions", "pair": "pair", "points": 8},
    {"cmd": "slope", "pair": "pair"}
  ]
}
)json";
    return m;
}

std::vector<std::filesystem::path> emit_example_manifests(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (const auto& [name, text] : example_manifests()) {
        auto path = dir / name;
        std::ofstream f(path, std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error("cannot write " + path.string());
        out.push_back(path);
    }
    return out;
}

}  // namespace dg4::cli
