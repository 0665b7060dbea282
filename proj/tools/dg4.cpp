#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"

#include "dg4/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dg4: invariants of distributions, almost complex structures and Monge-Ampere pairs"};
    app.set_version_flag("--version", dg4::cli::kVersion);

    std::string manifest, out_path, grid, emit_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> tols;
    dg4::cli::Flags flags;
    app.add_option("manifest", manifest, "JSON manifest");
    app.add_option("--grid", grid, "lattice counts, e.g. 5x5x5x5");
    auto* seed_opt = app.add_option("--seed", seed, "seed for the random grid points");
    app.add_option("--tol", tols, "tolerance override KEY=VAL (repeatable)");
    app.add_option("--out", out_path, "write the report here instead of stdout");
    app.add_flag("--swap-ut-labels", flags.swap_ut_labels, "put xi1 on the negative eigenline");
    app.add_flag("--numeric-bracket", flags.numeric_bracket, "finite-difference brackets in the Monge-Ampere frame");
    app.add_option("--emit-examples", emit_dir, "write the bundled manifests into DIR and exit");
    CLI11_PARSE(app, argc, argv);

    if (!emit_dir.empty()) {
        try {
            for (const auto& p : dg4::cli::emit_example_manifests(emit_dir)) std::cout << p.string() << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
        return 0;
    }
    if (manifest.empty()) {
        std::cerr << "error: a manifest path is required\n" << app.help();
        return 2;
    }
    if (!grid.empty()) {
        if (!std::regex_match(grid, std::regex("[0-9]+(x[0-9]+)*"))) {
            std::cerr << "error: --grid expects counts like 3x3x3x3\n";
            return 2;
        }
        std::vector<int> counts;
        std::stringstream ss(grid);
        for (std::string part; std::getline(ss, part, 'x');) counts.push_back(std::stoi(part));
        flags.grid_counts = counts;
    }
    if (seed_opt->count()) flags.seed = seed;
    for (const auto& t : tols) {
        auto eq = t.find('=');
        try {
            if (eq == std::string::npos) throw std::invalid_argument(t);
            flags.tol.emplace_back(t.substr(0, eq), std::stod(t.substr(eq + 1)));
        } catch (const std::exception&) {
            std::cerr << "error: --tol expects KEY=VAL, got '" << t << "'\n";
            return 2;
        }
    }

    std::ifstream in(manifest, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read " << manifest << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    dg4::cli::RunResult r = dg4::cli::run_manifest(buf.str(), flags);
    if (r.exit_code == 2) {
        std::cerr << "invalid manifest: " << r.error << "\n";
        return 2;
    }
    if (out_path.empty()) {
        std::cout << r.report;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        out << r.report;
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return 3;
        }
    }
    return r.exit_code;
}
