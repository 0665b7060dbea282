#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace dg4 {

using Point = std::vector<double>;

struct GridSpec {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<int> counts;
    int random = 16;
    std::uint64_t seed = 42;

    /// 3^n lattice on [-1,1]^n plus 16 random points, seed 42.
    static GridSpec standard(int n);
    int dim() const { return static_cast<int>(counts.size()); }
};

/// Lattice points in row-major order (last coordinate fastest), then the
/// random points. Deterministic for a fixed spec on every platform.
std::vector<Point> make_grid(const GridSpec& spec);

/// Uniform doubles in [0,1) derived from mt19937_64 bits, so sequences do not
/// depend on the standard library's distribution implementations.
class UnitRng {
public:
    explicit UnitRng(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

private:
    std::mt19937_64 engine_;
};

/// Named numeric tolerances; every threshold used by the analyses lives here.
struct Tolerances {
    double rank = 1e-8;             // relative singular-value cutoff
    double symmetry = 1e-9;         // bracket residual for symmetry checks
    double jsquare = 1e-9;          // |j^2 + 1|
    double frame = 1e-8;            // UTXi relations, image equality
    double nondegenerate = 1e-8;    // |N|, |d alpha| cutoffs
    double table = 1e-7;            // Theorem-5 table residuals
    double effective = 1e-10;       // relative size of theta ^ omega
    double pfaffian = 1e-10;        // |Pf| below this is parabolic
    double lepage = 1e-10;          // |omega ^ alpha - d theta|
    double jr = 1e-9;               // jR - 2 omega (x) X_alpha
    double anticommutation = 1e-9;  // procomplex identity
    double gauge = 1e-8;            // frame reproducibility
    double nijenhuis_zero = 1e-9;   // |N| for closed theta
    double closed = 1e-12;          // |d omega| at samples

    /// Returns false for an unknown key.
    bool set(const std::string& key, double value);
    std::map<std::string, double> as_map() const;
};

}  // namespace dg4
