#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "dg4/almost_complex.hpp"
#include "dg4/exterior.hpp"
#include "dg4/grid.hpp"

namespace dg4 {

enum class MAType { Elliptic, Hyperbolic, Parabolic, NotEffective, Mixed };
const char* ma_type_name(MAType t);

struct PairClassification {
    MAType type = MAType::Mixed;
    double max_effective = 0.0;  // relative size of theta ^ omega
    double pf_min = 0.0, pf_max = 0.0;
    std::vector<Point> witnesses;
    std::vector<std::string> reasons;
};

struct MATolerances {
    double effective = 1e-10;
    double pfaffian = 1e-10;
    double closed = 1e-12;
    double jsquare = 1e-9;
    double rank = 1e-8;
};

/// Pf = theta^theta / omega^omega and theta^omega decide the type pointwise.
PairClassification classify_pair(const DiffForm& omega, const DiffForm& theta, std::span<const Point> grid,
                                 const MATolerances& tol = {});

struct MongeAmperePair {
    DiffForm omega;
    DiffForm theta;       // normalized, Pf = 1
    DiffForm theta_in;    // as given
    Expr pf;              // Pfaffian of the input theta
    EndoField j;
    DiffForm alpha;       // d theta = omega ^ alpha
    VectorField x_alpha;  // omega(X_alpha, .) = alpha
    MAType type = MAType::Elliptic;
};

/// Throws NotClosed (d omega != 0), DegenerateSymplectic, TypeMismatch
/// (not elliptic) or InvalidStructure (j^2 != -1 after rescaling).
MongeAmperePair normalize_elliptic(const DiffForm& omega, const DiffForm& theta, std::span<const Point> grid,
                                   const MATolerances& tol = {});

/// R(X,Y) = N(X,Y) - X a(jY) + Y a(jX) - jX a(Y) + jY a(X).
VectorValued2Form r_tensor(const MongeAmperePair& p);

struct PairIdentities {
    double lepage = 0.0;       // |omega ^ alpha - d theta|
    double jr = 0.0;           // |j R(X,Y) - 2 omega(X,Y) X_alpha|
    double r_antilinear = 0.0; // |R(jX,jY) + R(X,Y)|
    double j_symmetry = 0.0;   // |omega(jX,Y) - omega(X,jY)|
    int samples = 0;
};

/// Checks on coordinate pairs and `random_pairs` random vector pairs per point.
PairIdentities check_identities(const MongeAmperePair& p, std::span<const Point> grid, int random_pairs = 64,
                                std::uint64_t seed = 7);

struct NondegeneracyVerdict {
    Point x;
    double n_norm = 0.0;
    double dalpha = 0.0;          // |d alpha(z1, z2)| on an orthonormal basis of Im N
    bool nijenhuis_ok = false;
    bool dalpha_ok = false;
    bool overall = false;
    double alpha_on_image = 0.0;  // |alpha| on Im N
    double xalpha_in_image = 0.0; // residual of X_alpha modulo Im N
    double alpha_jn = 0.0;        // |alpha(j N(X,Y))| on coordinate pairs
    int kernel_intersection_dim = -1;  // dim(Ker a cap j Ker a), -1 when alpha = 0
    bool r_detects_n = true;        // R = 0 implies N = 0
};

NondegeneracyVerdict nondegenerate(const MongeAmperePair& p, const Point& x, double cutoff = 1e-8,
                                   double rank_tol = 1e-8);

struct FrameOptions {
    double lambda = 1.0;            // X0 = lambda X_alpha
    Eigen::Vector2d y0_shift{0.0, 0.0};  // Y0 += s0 X0 + s1 j X0
    bool numeric_bracket = false;   // Z0 by finite differences; Q then exists only pointwise
    double cutoff = 1e-8;
    double rank_tol = 1e-8;
    double frame_tol = 1e-8;
};

struct FramePoint {
    Point x;
    bool ok = false;
    std::string failed_step;   // X0, nondegeneracy, Y0, alpha-frame, Z0, L1 or Q2
    std::string message;
    Eigen::Vector4d y0 = Eigen::Vector4d::Zero();
    std::array<double, 4> alpha_frame{};  // alpha(X0), alpha(jX0), alpha(Y0), alpha(jY0) - 1
    double omega_p1_jy0 = 0.0;       // should be 1
    Eigen::Vector4d p1, p2, q1, q2;
    std::complex<double> w;
    double phi = 0.0;                // arg(w) / 2
};

struct CanonicalFrame {
    VectorField x0, p1, p2, z0, q1, q2;  // q1, q2 empty in numeric-bracket mode
    bool symbolic = true;
    double lambda = 1.0;
    std::vector<FramePoint> points;

    /// Frame fields as one batch in the order P1, P2, Q1, Q2.
    std::vector<VectorField> fields() const { return {p1, p2, q1, q2}; }
};

CanonicalFrame canonical_frame(const MongeAmperePair& p, std::span<const Point> grid, const FrameOptions& opt = {});

struct TableResiduals {
    Point x;
    bool applicable = false;
    std::string provenance;  // why not applicable
    double omega = 0.0, nij = 0.0, jrow = 0.0, alpha = 0.0;
    bool pass = false;
};

struct Theorem5Report {
    std::vector<TableResiduals> points;
    double max_omega = 0.0, max_nij = 0.0, max_jrow = 0.0, max_alpha = 0.0;
    int applicable = 0;
    bool pass = false;  // every applicable point passes and at least one is applicable
};

/// Uses the frame's pointwise values, so frames edited by the caller are
/// verified as given.
Theorem5Report verify_theorem5(const CanonicalFrame& f, const MongeAmperePair& p, double tol = 1e-7);

struct StructurePoint {
    Point x;
    bool ok = false;
    std::string message;
    /// c[pair][k] with pairs (12, 13, 14, 23, 24, 34) over (P1, P2, Q1, Q2).
    std::array<std::array<double, 4>, 6> c{};
    double residual = 0.0;
    /// c^k_{ij} with the antisymmetric extension.
    double coefficient(int i, int j, int k) const;
};

/// Symbolic brackets by default; finite differences of the pointwise frame
/// when `numeric` is set or the frame has no symbolic Q fields.
std::vector<StructurePoint> structure_functions(const CanonicalFrame& f, const MongeAmperePair& p,
                                                std::span<const Point> grid, bool numeric = false,
                                                double rank_tol = 1e-8);

struct SlopeEntry {
    Point x;
    std::complex<double> w;
    double phi = 0.0;
    std::optional<double> u1;  // angle of the U1 line in the basis (P1, P2), in [0, pi)
};

struct SlopeReport {
    std::vector<SlopeEntry> entries;  // frame points where the frame is defined
    std::vector<std::pair<Point, Point>> discontinuities;  // lattice neighbours where w jumps
};

/// The frame must have been built on make_grid(spec); continuity is checked
/// along the lattice lines. With `with_u1` the UTXi line U1 is located too.
SlopeReport slope(const CanonicalFrame& f, const MongeAmperePair& p, const GridSpec& spec, bool with_u1 = true,
                  double jump = 1.0);

}  // namespace dg4
