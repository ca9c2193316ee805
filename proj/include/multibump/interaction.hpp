#pragma once

#include <cstddef>
#include <vector>

#include "multibump/radial.hpp"

namespace multibump {

// Overlap of two radially symmetric functions whose centers sit d apart:
//   integral over R^3 of f(|x|) g(|x - d e1|) dx.
// Reduced to nested 1D quadratures in bipolar coordinates, with the inner
// integral taken as a difference of right-anchored cumulatives so the
// exponentially small result survives cancellation. Separations at or below
// one grid spacing collapse to the plain radial overlap integral, which
// requires both profiles to share a grid. Both profiles are treated as zero
// beyond r_max.
double convolve_offset(const RadialProfile& f, const RadialProfile& g, double d,
                       std::size_t nsub = 4000);

// Predicted decay law of convolve_offset(f, g, d) for large d, given the
// far-field laws of the two factors (power, rate). In three dimensions the
// slower factor wins outright; equal rates combine the powers, with a
// logarithmic marginal case.
struct InteractionLaw {
    double power;
    double rate;
    bool log_factor;
};

InteractionLaw classify_interaction(double power_f, double rate_f, double power_g,
                                    double rate_g);

// Overlaps along a ladder of separations plus the free three-parameter decay
// fit through them.
struct LadderFit {
    std::vector<double> separations;
    std::vector<double> values;
    FarFieldFit law;
};

LadderFit study_decay(const RadialProfile& f, const RadialProfile& g, double d_lo,
                      double d_hi, std::size_t count);

// The constant C in  convolve_offset ~ C d^power e^{-rate d}, estimated as
// the mean of the compensated ladder together with its relative scatter.
// Throws PoorFit when the scatter exceeds 5%, which is the signature of a
// mispinned law.
struct ConstantFit {
    double value;
    double rel_rms;
};

ConstantFit extract_constant(const RadialProfile& f, const RadialProfile& g,
                             double power, double rate, double d_lo = 8.0,
                             double d_hi = 14.0, std::size_t count = 25);

// The three interaction constants the reduced energy is built from, plus the
// ground-state tail amplitude they are cross-checked against:
//   attraction: overlap of U^3 with a translated U      ~ C e^{-d}/d
//   cross:      overlap of U with a translated U        ~ C e^{-d}
//   origin:     overlap of U^3 with the translated first
//               response -v1 (equals cross exactly, since (-Lap+1)U = U^3)
struct InteractionConstants {
    double attraction;
    double cross;
    double origin;
    double amplitude;
};

InteractionConstants measure_constants(const GroundState& gs);

}  // namespace multibump
