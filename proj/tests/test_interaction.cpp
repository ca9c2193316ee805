#include "multibump/interaction.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "multibump/errors.hpp"
#include "multibump/radial.hpp"

using namespace multibump;

namespace {

constexpr double kPi = 3.14159265358979323846;

const GroundState& gs() {
    static const GroundState g = ground_state(RadialGrid(25.0, 5000));
    return g;
}

RadialProfile cubed_profile() {
    const RadialGrid& g = gs().profile.grid;
    std::vector<double> c(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double u = gs().profile.values[i];
        c[i] = u * u * u;
    }
    return RadialProfile(g, std::move(c));
}

// Independent check of the bipolar reduction: brute-force Simpson product
// quadrature on a 3D tensor box, first factor centered at the origin and the
// second at (d, 0, 0), both truncated at r_max like the production path.
double box_oracle(const RadialProfile& f, const RadialProfile& g, double d, double L,
                  std::size_t nax) {
    const double hx = 2.0 * L / static_cast<double>(nax - 1);
    std::vector<double> x(nax), w(nax);
    for (std::size_t i = 0; i < nax; ++i) {
        x[i] = -L + hx * static_cast<double>(i);
        const bool edge = (i == 0 || i + 1 == nax);
        w[i] = (edge ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0)) * hx / 3.0;
    }
    const double rmax_f = f.grid.r_max, rmax_g = g.grid.r_max;
    double total = 0.0;
    for (std::size_t i = 0; i < nax; ++i) {
        for (std::size_t j = 0; j < nax; ++j) {
            const double q = x[i] * x[i] + x[j] * x[j];
            double row = 0.0;
            for (std::size_t k = 0; k < nax; ++k) {
                const double r1 = std::sqrt(q + x[k] * x[k]);
                if (r1 > rmax_f) continue;
                const double dx = x[i] - d;
                const double r2 = std::sqrt(dx * dx + x[j] * x[j] + x[k] * x[k]);
                if (r2 > rmax_g) continue;
                row += f(r1) * g(r2) * w[k];
            }
            total += row * w[i] * w[j];
        }
    }
    return total;
}

}  // namespace

TEST_CASE("bipolar reduction matches the 3D box oracle") {
    const RadialProfile u3 = cubed_profile();
    const RadialProfile& u = gs().profile;
    for (double d : {2.0, 4.0, 6.0}) {
        const double b = convolve_offset(u3, u, d);
        const double o = box_oracle(u3, u, d, d / 2.0 + 11.0, 161);
        CHECK(std::abs(b / o - 1.0) < 5e-3);
    }
    const double b10 = convolve_offset(u3, u, 10.0);
    const double o10 = box_oracle(u3, u, 10.0, 16.0, 161);
    CHECK(std::abs(b10 / o10 - 1.0) < 5e-3);
}

TEST_CASE("coincident centers fall back to the radial overlap") {
    const RadialGrid& g = gs().profile.grid;
    std::vector<double> sq(g.n);
    for (std::size_t i = 0; i < g.n; ++i)
        sq[i] = gs().profile.values[i] * gs().profile.values[i];
    const double direct = integrate_radial(g, sq);
    const double via_conv = convolve_offset(gs().profile, gs().profile, 0.0);
    CHECK(std::abs(via_conv / direct - 1.0) < 1e-12);
    CHECK_THROWS_AS(convolve_offset(gs().profile, gs().profile, -1.0), OutOfRange);
}

TEST_CASE("bipolar reduction is symmetric in its factors") {
    const RadialProfile u3 = cubed_profile();
    const double a = convolve_offset(u3, gs().profile, 4.0);
    const double b = convolve_offset(gs().profile, u3, 4.0);
    CHECK(std::abs(a / b - 1.0) < 1e-3);
}

TEST_CASE("interaction law classifier") {
    // Distinct rates: the slower factor dictates the law.
    InteractionLaw law = classify_interaction(-3.0, 3.0, -1.0, 1.0);
    CHECK(law.power == -1.0);
    CHECK(law.rate == 1.0);
    CHECK_FALSE(law.log_factor);
    law = classify_interaction(-1.0, 1.0, -3.0, 3.0);
    CHECK(law.power == -1.0);
    CHECK(law.rate == 1.0);
    law = classify_interaction(0.0, 2.0, -1.0, 1.0);
    CHECK(law.power == -1.0);
    CHECK(law.rate == 1.0);

    // Equal rates: powers combine while above the integrability edge.
    law = classify_interaction(-1.0, 1.0, -1.0, 1.0);
    CHECK(law.power == 0.0);
    CHECK(law.rate == 1.0);
    CHECK_FALSE(law.log_factor);
    law = classify_interaction(-1.0, 1.0, -1.5, 1.0);
    CHECK(law.power == doctest::Approx(-0.5));
    law = classify_interaction(-1.5, 1.0, -1.0, 1.0);
    CHECK(law.power == doctest::Approx(-0.5));

    // At the edge a logarithm appears; below it the heavier tail drops out.
    law = classify_interaction(-1.0, 1.0, -2.0, 1.0);
    CHECK(law.power == -1.0);
    CHECK(law.log_factor);
    law = classify_interaction(-1.0, 1.0, -3.0, 1.0);
    CHECK(law.power == -1.0);
    CHECK_FALSE(law.log_factor);

    CHECK_THROWS_AS(classify_interaction(-1.0, 0.0, -1.0, 1.0), OutOfRange);
}

TEST_CASE("free ladder fits recover the classified laws") {
    const RadialProfile u3 = cubed_profile();
    const LadderFit fa = study_decay(u3, gs().profile, 8.0, 14.0, 25);
    CHECK(std::abs(fa.law.power - (-1.0)) < 0.1);
    CHECK(std::abs(fa.law.rate - 1.0) < 0.01);

    const LadderFit fc = study_decay(gs().profile, gs().profile, 8.0, 14.0, 25);
    CHECK(std::abs(fc.law.power) < 0.1);
    CHECK(std::abs(fc.law.rate - 1.0) < 0.01);
}

TEST_CASE("rate-compensated equal-tail ladder is flat") {
    const LadderFit fc = study_decay(gs().profile, gs().profile, 8.0, 14.0, 25);
    const std::size_t m = fc.values.size();
    std::vector<double> y(m);
    double mean = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        y[k] = std::log(fc.values[k]) + fc.separations[k];
        mean += y[k];
    }
    mean /= static_cast<double>(m);
    double lo = y[0], hi = y[0];
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK((hi - lo) / std::abs(mean) < 0.02);

    // Slope of y against ln d over the ladder: its total contribution across
    // the window must stay under half a percent of the level.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double xk = std::log(fc.separations[k]);
        sx += xk;
        sy += y[k];
        sxx += xk * xk;
        sxy += xk * y[k];
    }
    const double mm = static_cast<double>(m);
    const double b1 = (mm * sxy - sx * sy) / (mm * sxx - sx * sx);
    const double contrib = std::abs(b1) * std::log(14.0 / 8.0) / std::abs(mean);
    CHECK(contrib < 0.005);
}

TEST_CASE("frozen interaction constants and their identities") {
    const InteractionConstants c = measure_constants(gs());
    CHECK(std::abs(c.attraction - 92.46717) < 0.05);
    CHECK(std::abs(c.cross - 44.94266) < 0.05);
    CHECK(std::abs(c.origin / c.cross - 1.0) < 1e-3);
    CHECK(std::abs(c.amplitude - 2.71259528) / 2.71259528 < 1e-3);

    // Equal-tail overlap against the squared tail amplitude.
    const double flat = 2.0 * kPi * c.amplitude * c.amplitude;
    CHECK(std::abs(c.cross / flat - 1.0) < 0.05);

    // Slow-factor overlap against the tail-weighted cubic moment.
    const RadialGrid& g = gs().profile.grid;
    std::vector<double> integ(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double u = gs().profile.values[i];
        const double s = g.r(i);
        integ[i] = u * u * u * s * std::sinh(s);
    }
    const double moment = 4.0 * kPi * c.amplitude * simpson(g.h, integ);
    CHECK(std::abs(moment / c.attraction - 1.0) < 1e-3);
}

TEST_CASE("constant extraction flags a mispinned law") {
    const RadialProfile u3 = cubed_profile();
    CHECK_THROWS_AS(extract_constant(u3, gs().profile, 0.0, 1.0), PoorFit);

    const ConstantFit attr = extract_constant(u3, gs().profile, -1.0, 1.0);
    CHECK(attr.rel_rms < 1e-4);
    const ConstantFit cross = extract_constant(gs().profile, gs().profile, 0.0, 1.0);
    CHECK(cross.rel_rms < 0.01);
}
