#pragma once

#include <vector>

#include "multibump/radial.hpp"

namespace multibump {

// Which coupled system the construction targets: two equations with a single
// cross coupling, or three equations coupled pairwise. In the three-equation
// case the last two components coincide by symmetry, so the recursion tracks
// the third one (w) only to confirm that identity.
enum class SystemKind { TwoComponent, ThreeComponent };

// Correction hierarchy on top of a ground state for coupling strength
// epsilon, together with the modified pair it sums to and the Laplacians of
// everything, read off from the defining equations instead of differenced.
struct CorrectionFamily {
    SystemKind kind;
    double epsilon;

    // Correction profiles; index k-1 holds the order-k profile, k = 1..4.
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> v;
    std::vector<std::vector<double>> w;  // ThreeComponent only, else empty

    // First component: ground state plus its corrections, truncated at
    // fourth order. Second component: pure correction series.
    RadialProfile u_eps;
    RadialProfile v_eps;
    RadialProfile lap_u_eps;
    RadialProfile lap_v_eps;
};

// Build the correction family by repeated tridiagonal solves against the
// linearized operator (potential 3U^2) and the free operator. epsilon must
// lie in [0, 0.5]; the series is meaningless beyond that.
CorrectionFamily build_corrections(const GroundState& gs, double epsilon,
                                   SystemKind kind);

struct ResidualNorms {
    double res_u;
    double res_v;
};

// L2 norms (weight 4 pi r^2) of the coupled-equation residuals at the
// modified pair, assembled from the solver's own stencil rows with the
// outflow row dropped, so the reported order in epsilon is not polluted by
// the boundary closure.
ResidualNorms residual_modified(const CorrectionFamily& fam);

}  // namespace multibump
