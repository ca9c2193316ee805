#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "multibump/corrections.hpp"
#include "multibump/reduced_energy.hpp"

namespace multibump {

// Node-centered box grid, symmetric about the origin. Even node counts put
// every mirror plane between nodes, so the reflections x_h -> -x_h act as
// exact index permutations. All reductions over nodes run in a fixed order,
// so results do not depend on how a sweep is partitioned.
struct BoxGrid {
    std::array<double, 3> half;
    std::array<int, 3> n;

    double spacing(int axis) const {
        return 2.0 * half[static_cast<std::size_t>(axis)] /
               (n[static_cast<std::size_t>(axis)] - 1);
    }
    double coord(int axis, int i) const {
        return -half[static_cast<std::size_t>(axis)] + spacing(axis) * i;
    }
    std::size_t size() const {
        return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
               static_cast<std::size_t>(n[2]);
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n[1] + static_cast<std::size_t>(j)) *
                   n[2] +
               static_cast<std::size_t>(k);
    }
    double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
};

BoxGrid make_box(double half_width, int n_per_axis);
BoxGrid make_box(const std::array<double, 3>& half, const std::array<int, 3>& n);

struct Field3D {
    BoxGrid grid;
    std::vector<double> values;
};

// Two interleaved bump rings in the z = 0 plane: the x-family at radius r and
// angles 2 pi j / ell, the y-family at radius rho and angles (2j+1) pi / ell.
struct BumpConfiguration {
    int ell;
    double r;
    double rho;
};

// The multi-bump ansatz and its analytic Laplacian, sampled on a box.
// Two-component:   u = sum_j U_eps(. - x^j) + sum_j v_eps(. - y^j) and v the
// same with the families swapped. Three-component adds the central bumps:
// u and v carry a centered v_eps, the third component carries centered U_eps
// and v_eps rings on both families. far_field_used records that some sample
// radius ran beyond the profile grid and was filled by the fitted decay law
// (or zero where no law exists); that is expected for any box corner and is
// informational, not an error.
struct AssembledFields {
    SystemKind kind;
    double epsilon;
    BumpConfiguration config;
    BoxGrid grid;
    Field3D u, v, w;
    Field3D lap_u, lap_v, lap_w;
    bool far_field_used;
};

// Evaluate one component of the ansatz (0 = u, 1 = v, 2 = w) at an arbitrary
// point, straight from the radial profiles. lap_component evaluates the
// analytically summed Laplacian instead.
double evaluate_component(const CorrectionFamily& pair, const BumpConfiguration& config,
                          int component, const Vec3& p);
double evaluate_component_lap(const CorrectionFamily& pair,
                              const BumpConfiguration& config, int component,
                              const Vec3& p);

// Samples every component (and its Laplacian) on the grid. Requires all bump
// centers to clear every box face by at least eight decay lengths.
AssembledFields assemble_fields(const CorrectionFamily& pair,
                                const BumpConfiguration& config, const BoxGrid& grid);

// Energy of the assembled fields by trapezoidal quadrature with
// central-difference gradients (one-sided at the faces):
//   1/2 int |grad u|^2 + u^2 + ... - 1/4 int u^4 + ... + eps int uv [+ uw + vw]
double energy_box(const AssembledFields& f);

// Radial oracle for a single co-centered pair: the same energy computed by
// weighted quadrature of the profiles.
double energy_radial_pair(const RadialProfile& big, const RadialProfile& small,
                          double epsilon);

// One radial profile sampled around a center, and the single-field energy
// 1/2 int |grad f|^2 + f^2 - 1/4 int f^4 with the same quadrature as
// energy_box. Useful for isolating pairwise interaction energies, where the
// discretization error cancels between sums evaluated on one grid.
Field3D sample_radial(const RadialProfile& profile, const Vec3& center,
                      const BoxGrid& grid);
double energy_scalar_field(const Field3D& f);

struct ResidualNorms3 {
    double u;
    double v;
    double w;
};

// L2 norms of -Delta u + u - u^3 + eps (partner sum) per component. The
// default route discretizes Delta with the 7-point stencil over interior
// nodes; the sharp route uses the analytically assembled Laplacian fields on
// every node, which is the right tool when the true residual sits far below
// the stencil's O(h^2) floor.
ResidualNorms3 residual_norms(const AssembledFields& f, bool sharp = false);

struct SegregationReport {
    double linf_shift_diff;
    double l2_shift_diff;
    double min_cross_distance_over_logeps;
};

// Compares the first component against the second evaluated at points rotated
// by pi / ell about the z-axis (the map carrying the y-family onto the
// x-family), resampling the rotated component exactly from its construction.
SegregationReport segregation_metrics(const AssembledFields& f,
                                      const CorrectionFamily& pair);

struct NewtonReport {
    int steps;
    double initial_residual;
    double final_residual;
    double corrector_h1;
    double ansatz_h1;
};

// Damped Newton iteration on the discrete system with zero Dirichlet ghosts,
// keeping the iterates in the symmetric class (even in x2 and x3, and in x1
// for even ell). Each linear system is solved by Jacobi-preconditioned
// MINRES. Stops when the stencil residual drops by 1e3 (or under 1e-10) or
// after max_iters accepted steps; a step that cannot reduce the residual even
// at the smallest damping throws DivergedNewton. Requires at most 96^3 nodes
// and eps >= 0.02 (or exactly 0, the decoupled limit) so the bumps fit a
// tractable box.
NewtonReport newton_refine(AssembledFields& f, int max_iters);

}  // namespace multibump
