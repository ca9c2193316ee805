#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace multibump {

// Uniform grid for radial profiles: r_i = i*h, i = 0..n-1, h = r_max/(n-1).
// The resolution floor (r_max >= 20, n >= 2000) keeps the exponential tails
// representable and the second-order stencil accurate enough for every
// consumer in this library.
struct RadialGrid {
    double r_max;
    std::size_t n;
    double h;

    RadialGrid(double r_max_, std::size_t n_);
    double r(std::size_t i) const { return h * static_cast<double>(i); }
};

// Parameters of a far-field law amplitude * r^power * exp(-rate*r),
// obtained from a least-squares fit of log(f) against [1, ln r, -r].
struct FarFieldFit {
    double amplitude = 0.0;
    double power = 0.0;
    double rate = 0.0;
    double rms = 0.0;  // rms of the log residual over the fit window
};

// A radial function sampled on a grid. Evaluation uses 4-point Lagrange
// interpolation inside [0, r_max] and, when a tail fit is attached, the
// fitted law beyond r_max (zero otherwise).
struct RadialProfile {
    RadialGrid grid;
    std::vector<double> values;
    std::optional<FarFieldFit> tail;

    RadialProfile(const RadialGrid& g, std::vector<double> v)
        : grid(g), values(std::move(v)) {}

    double operator()(double r) const;
};

// Positive decaying solution of  -phi'' - (2/r) phi' + phi = phi^3,
// phi'(0) = 0, phi -> 0, together with the data the rest of the library
// needs: the shooting height (grid independent) and the residual the
// grid-polished profile achieves in the discrete equation.
struct GroundState {
    RadialProfile profile;
    double peak_value;    // initial height found by shooting, not grid-tied
    double residual_sup;  // sup norm of the discrete nonlinear residual
};

// Outcome of integrating the radial equation from height a at r = 0:
// the trajectory either crosses zero or turns back upward. The dichotomy
// drives the shooting bisection.
enum class ShotOutcome { Crosses, Rebounds };

ShotOutcome classify_shot(double a, double r_stop = 30.0);

// Bisection on the shot classification. Throws NoBracket when both
// endpoints classify the same way.
double shoot_peak(double lo = 1.0, double hi = 10.0, double tol = 1e-12);

// Shooting followed by a finite-difference Newton polish on the grid.
// shoot_tol bounds both the bisection width and the Newton stop target;
// the achieved discrete residual is reported in the result.
GroundState ground_state(const RadialGrid& grid, double shoot_tol = 1e-12);

// Solve  (-Lap_r + 1 - V) phi = rhs  on the grid with phi'(0) = 0 and the
// outflow condition phi' + beta*phi = 0 at r_max, via a tridiagonal solve.
// V and rhs are nodal vectors of length grid.n.
std::vector<double> solve_radial_linear(const RadialGrid& grid,
                                        const std::vector<double>& V,
                                        const std::vector<double>& rhs,
                                        double beta = 1.0);

// Apply the same discrete operator rows used by solve_radial_linear,
// including the outflow row at i = n-1. solve followed by apply reproduces
// the right-hand side to rounding.
std::vector<double> apply_operator(const RadialGrid& grid,
                                   const std::vector<double>& V,
                                   const std::vector<double>& phi,
                                   double beta = 1.0);

// Fit log(f) = log(amplitude) + power*ln r - rate*r over grid points with
// r in [r_lo, r_hi]. Throws DegenerateWindow when the window holds fewer
// than 8 points or any value at or below the underflow guard.
FarFieldFit fit_far_field(const RadialGrid& grid,
                          const std::vector<double>& values,
                          double r_lo, double r_hi);

// Same decay-law fit through explicit positive samples fs at radii rs > 0.
// Throws DegenerateWindow for fewer than 3 samples or non-positive data.
FarFieldFit fit_decay_points(const std::vector<double>& rs,
                             const std::vector<double>& fs);

// Composite Simpson integral of nodal values with spacing h. An odd
// interval count is closed with the standard three-point end correction.
double simpson(double h, const std::vector<double>& f);

// sqrt( integral of f^2 * 4 pi r^2 dr ) over the grid, via simpson().
double norm_l2_weighted(const RadialGrid& grid, const std::vector<double>& f);

// integral of f * 4 pi r^2 dr over the grid, via simpson().
double integrate_radial(const RadialGrid& grid, const std::vector<double>& f);

}  // namespace multibump
