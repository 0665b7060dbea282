#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dg4/cli.hpp"
#include "dg4/exterior.hpp"
#include "dg4/grid.hpp"

namespace dg4::cli::detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct DistSpec {
    std::vector<std::string> fields;       // vector object names
    std::vector<std::string> annihilator;  // form1 object names
};

struct PairSpec {
    std::string omega, theta;
};

using Object = std::variant<DiffForm, VectorField, EndoField, DistSpec, PairSpec>;

struct Model {
    int dim = 4;
    std::vector<std::string> vars;
    std::map<std::string, Object> objects;
    GridSpec grid;
    Tolerances tol;
    std::vector<json> tasks;  // validated
    std::string canonical;    // sorted-key dump of the manifest, hashed into the report
};

/// Throws ManifestError.
Model load_manifest(const std::string& text, const Flags& flags);

/// Parses a grid object ({"lattice": {...}, "random": k, "seed": s}).
GridSpec parse_grid(const json& g, int dim, const std::string& path);

/// Parses an expression in the chart's variable names; errors name `path`.
Expr parse_expr(const Model& m, const std::string& text, const std::string& path);

/// Pretty JSON with doubles printed as %.17g and non-finite values as null.
std::string dump(const ojson& j);

ojson run_tasks(Model& m, const Flags& flags, bool& any_error);

}  // namespace dg4::cli::detail
