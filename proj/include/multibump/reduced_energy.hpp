#pragma once

#include <cstddef>
#include <vector>

#include "multibump/corrections.hpp"
#include "multibump/interaction.hpp"

namespace multibump {

// Chord factors of two interleaved ell-bump rings: m scales the nearest
// same-ring distance (2 sin(pi/ell) times the radius), n the nearest
// cross-ring distance when both rings share a radius.
struct RingGeometry {
    int ell;
    double m;
    double n;
};

RingGeometry ring_geometry(int ell);

struct Vec3 {
    double x, y, z;
};

// Centers of one bump family in the z = 0 plane. The first family sits at
// angles 2 pi j / ell, the second at the interleaved angles (2j+1) pi / ell.
std::vector<Vec3> ring_positions(int ell, double radius, bool second_family);

// Logarithmic correction exponent (m-n)^2 / (mu (m - n/2)) entering the
// window diagnostics.
double theta_bar(int ell, double mu);

struct Window {
    double lo;
    double hi;
};

// Admissible radius window at coupling eps with margin parameter mu,
// L = |ln eps|:
//   two-component:           [L/(m-n + mu ln L / L), L/(m-n)]
//   three-component, ell=2:  [L/(1 + mu ln L / L),   L]
// Three-component rings with ell >= 3 use the two-component window. Throws
// BadMu when mu fails to clear the variant's threshold (m-n, resp. 1),
// OutOfRange when eps is not inside (0, 1/e).
Window domain_window(SystemKind kind, int ell, double eps, double mu);

// The reduced interaction landscape over the two ring radii. Cross-family
// terms reward proximity of the interleaved rings, same-family terms
// penalize ring crowding; the three-component arrangement adds the
// attraction of its central bump and, for ell = 2, loses the cross term to
// symmetry.
struct ReducedEnergy {
    SystemKind kind;
    int ell;
    double epsilon;
    double mu;
    InteractionConstants constants;
    RingGeometry geom;

    double operator()(double r, double rho) const;
    Window window() const { return domain_window(kind, ell, epsilon, mu); }
};

ReducedEnergy make_reduced_energy(SystemKind kind, int ell, double epsilon, double mu,
                                  const InteractionConstants& constants);

struct Maximizer {
    double r;
    double rho;
    double value;
    bool interior;
    Window window;
};

// Grid scan (ties resolved toward smaller radii) followed by coordinate
// golden-section refinement within one grid cell and a diagonal polish over
// the full window. interior means both coordinates clear the window edges by
// at least one grid cell; strict mode turns a boundary maximum into a
// BoundaryMaximum error.
Maximizer maximize_landscape(const ReducedEnergy& G, std::size_t ngrid = 200,
                             bool strict = false);

// Asymptotic coefficients of the maximizer: radius ~ radius_coeff * |ln eps|
// and nearest-neighbor separation ~ separation_coeff * |ln eps|.
struct RadiusPrediction {
    double radius_coeff;
    double separation_coeff;
};

RadiusPrediction predicted_radius(SystemKind kind, int ell);

// Largest landscape value along the vertical line r = edge_r, scanned over
// the window of the other coordinate.
double edge_maximum(const ReducedEnergy& G, double edge_r, std::size_t nscan = 400);

// Radius of the interior diagnostic point: upper window edge pulled in by
// the logarithmic correction, where the landscape is provably positive.
double diagnostic_radius(SystemKind kind, int ell, double eps, double mu);

// Scale eps^{m/(m-n)} L^{mu theta_bar n / (2 (m-n)^2)} against which the
// upper-edge landscape values stay order one.
double edge_scale(SystemKind kind, int ell, double eps, double mu);

// Least-squares fit of the maximizing radius against [L, ln L, 1] over a
// ladder of couplings. slope_L estimates the radius growth coefficient.
struct ScalingFit {
    double slope_L;
    double slope_logL;
    double intercept;
    std::vector<double> radii;
    bool all_interior;
};

ScalingFit fit_radius_scaling(SystemKind kind, int ell, double mu,
                              const InteractionConstants& constants,
                              const std::vector<double>& eps_ladder);

// Pairwise interaction expansion of the full arrangement with true pair
// multiplicities: every same-family chord class contributes an attraction
// term, every cross-family class a coupling term (for the three-component
// arrangement also the central bump against both rings). nearest_only keeps
// the closest class of each kind, which is what the reduced landscape sees.
double energy_expansion(const ReducedEnergy& G, double r, double rho,
                        bool nearest_only);

}  // namespace multibump
