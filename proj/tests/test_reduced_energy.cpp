#include "multibump/reduced_energy.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "multibump/errors.hpp"

namespace mb = multibump;

namespace {

mb::InteractionConstants frozen_constants() {
    mb::InteractionConstants c;
    c.attraction = 92.46717;
    c.cross = 44.94266;
    c.origin = 44.94266;
    c.amplitude = 2.71259528;
    return c;
}

std::vector<double> decade_ladder() {
    std::vector<double> eps;
    for (int k = 4; k <= 12; ++k) eps.push_back(std::pow(10.0, -k));
    return eps;
}

}  // namespace

TEST_CASE("ring geometry chord factors") {
    const mb::RingGeometry g2 = mb::ring_geometry(2);
    CHECK(g2.m == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(g2.n == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    const mb::RingGeometry g3 = mb::ring_geometry(3);
    CHECK(g3.m == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    CHECK(g3.n == doctest::Approx(1.0).epsilon(1e-14));

    CHECK(mb::ring_geometry(5).n == doctest::Approx(0.6180339887).epsilon(1e-9));

    for (int ell = 2; ell <= 8; ++ell) {
        const mb::RingGeometry g = mb::ring_geometry(ell);
        CHECK(g.m > g.n);
        CHECK(g.n > 0.0);
        const double ratio = g.m / (g.m - g.n);
        CHECK(ratio > 2.0);
        CHECK(ratio < 4.0);
    }

    CHECK_THROWS_AS(mb::ring_geometry(1), mb::OutOfRange);
    CHECK_THROWS_AS(mb::ring_geometry(0), mb::OutOfRange);
}

TEST_CASE("ring positions land on interleaved circles") {
    const double r = 5.0;
    const auto first = mb::ring_positions(3, r, false);
    const auto second = mb::ring_positions(3, r, true);
    REQUIRE(first.size() == 3);
    REQUIRE(second.size() == 3);
    for (const auto& p : first) {
        CHECK(std::hypot(p.x, p.y) == doctest::Approx(r).epsilon(1e-13));
        CHECK(p.z == 0.0);
    }
    const auto dist = [](const mb::Vec3& a, const mb::Vec3& b) {
        return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
    };
    const mb::RingGeometry g = mb::ring_geometry(3);
    CHECK(dist(first[0], first[1]) == doctest::Approx(g.m * r).epsilon(1e-13));
    CHECK(dist(first[0], second[0]) == doctest::Approx(g.n * r).epsilon(1e-13));
    CHECK_THROWS_AS(mb::ring_positions(3, 0.0, false), mb::OutOfRange);
}

TEST_CASE("logarithmic correction exponent") {
    CHECK(mb::theta_bar(2, 1.0) == doctest::Approx(0.2654126).epsilon(1e-5));
    CHECK(mb::theta_bar(3, 1.0) == doctest::Approx(0.4349644).epsilon(1e-5));
    CHECK(mb::theta_bar(2, 2.0) ==
          doctest::Approx(0.5 * mb::theta_bar(2, 1.0)).epsilon(1e-13));
    // Too small a margin pushes the exponent out of (0, 1).
    CHECK_THROWS_AS(mb::theta_bar(2, 0.0), mb::OutOfRange);
    CHECK_THROWS_AS(mb::theta_bar(2, 0.1), mb::OutOfRange);
}

TEST_CASE("radius window edges and parameter validation") {
    const mb::Window two =
        mb::domain_window(mb::SystemKind::TwoComponent, 2, 1e-8, 1.0);
    CHECK(two.lo == doctest::Approx(24.7605).epsilon(5e-5));
    CHECK(two.hi == doctest::Approx(31.4460).epsilon(5e-5));

    const mb::Window three =
        mb::domain_window(mb::SystemKind::ThreeComponent, 2, 1e-8, 1.5);
    CHECK(three.lo == doctest::Approx(14.8884).epsilon(5e-5));
    CHECK(three.hi == doctest::Approx(18.4207).epsilon(5e-5));

    // Three-component rings with ell >= 3 share the two-component window.
    const mb::Window t3 =
        mb::domain_window(mb::SystemKind::ThreeComponent, 3, 1e-8, 1.0);
    const mb::Window w3 =
        mb::domain_window(mb::SystemKind::TwoComponent, 3, 1e-8, 1.0);
    CHECK(t3.lo == doctest::Approx(w3.lo).epsilon(1e-14));
    CHECK(t3.hi == doctest::Approx(w3.hi).epsilon(1e-14));

    // The margin must clear the variant threshold: m - n, resp. 1.
    CHECK_THROWS_AS(mb::domain_window(mb::SystemKind::TwoComponent, 2, 1e-8, 0.58),
                    mb::BadMu);
    CHECK_THROWS_AS(mb::domain_window(mb::SystemKind::TwoComponent, 2, 1e-8, 0.0),
                    mb::BadMu);
    CHECK_THROWS_AS(mb::domain_window(mb::SystemKind::ThreeComponent, 2, 1e-8, 1.0),
                    mb::BadMu);
    CHECK_NOTHROW(mb::domain_window(mb::SystemKind::TwoComponent, 2, 1e-8, 0.59));
    CHECK_THROWS_AS(mb::domain_window(mb::SystemKind::TwoComponent, 2, 0.368, 1.0),
                    mb::OutOfRange);
    CHECK_THROWS_AS(mb::domain_window(mb::SystemKind::TwoComponent, 2, 0.0, 1.0),
                    mb::OutOfRange);
}

TEST_CASE("landscape rejects non-positive radii") {
    const mb::ReducedEnergy G = mb::make_reduced_energy(
        mb::SystemKind::TwoComponent, 2, 1e-8, 1.0, frozen_constants());
    CHECK_THROWS_AS(G(-1.0, 5.0), mb::OutOfRange);
    CHECK_THROWS_AS(G(5.0, 0.0), mb::OutOfRange);
    CHECK_THROWS_AS(mb::make_reduced_energy(mb::SystemKind::TwoComponent, 1, 1e-8,
                                            1.0, frozen_constants()),
                    mb::OutOfRange);
}

TEST_CASE("two-component maximizers at eps = 1e-8") {
    const mb::InteractionConstants c = frozen_constants();
    struct Golden {
        int ell;
        double radius;
    };
    const Golden goldens[] = {{2, 27.6340}, {3, 22.8551}, {4, 26.0021}};
    for (const auto& g : goldens) {
        const mb::ReducedEnergy G =
            mb::make_reduced_energy(mb::SystemKind::TwoComponent, g.ell, 1e-8, 1.0, c);
        const mb::Maximizer mx = mb::maximize_landscape(G);
        CAPTURE(g.ell);
        CHECK(mx.r == doctest::Approx(g.radius).epsilon(1e-4));
        CHECK(std::fabs(mx.r - mx.rho) < 1e-8);
        CHECK(mx.interior);
        CHECK(mx.value > 0.0);
    }
}

TEST_CASE("three-component maximizers at eps = 1e-8") {
    const mb::InteractionConstants c = frozen_constants();

    const mb::ReducedEnergy g2 =
        mb::make_reduced_energy(mb::SystemKind::ThreeComponent, 2, 1e-8, 1.5, c);
    const mb::Maximizer m2 = mb::maximize_landscape(g2);
    CHECK(m2.r == doctest::Approx(16.37638).epsilon(5e-5));
    CHECK(m2.interior);

    const mb::ReducedEnergy g3 =
        mb::make_reduced_energy(mb::SystemKind::ThreeComponent, 3, 1e-8, 1.0, c);
    const mb::Maximizer m3 = mb::maximize_landscape(g3);
    CHECK(m3.r == doctest::Approx(21.44364).epsilon(5e-5));
    CHECK(m3.interior);

    // By ell = 5 the central bump no longer moves the maximizer.
    const mb::ReducedEnergy t5 =
        mb::make_reduced_energy(mb::SystemKind::ThreeComponent, 5, 1e-8, 1.0, c);
    const mb::ReducedEnergy w5 =
        mb::make_reduced_energy(mb::SystemKind::TwoComponent, 5, 1e-8, 1.0, c);
    const mb::Maximizer mt = mb::maximize_landscape(t5);
    const mb::Maximizer mw = mb::maximize_landscape(w5);
    CHECK(mt.r == doctest::Approx(30.36713).epsilon(5e-5));
    CHECK(std::fabs(mt.r / mw.r - 1.0) < 1e-4);
}

TEST_CASE("maximizer location ignores a common constant rescale") {
    mb::InteractionConstants c = frozen_constants();
    const mb::ReducedEnergy base =
        mb::make_reduced_energy(mb::SystemKind::TwoComponent, 3, 1e-8, 1.0, c);
    c.attraction *= 7.3;
    c.cross *= 7.3;
    c.origin *= 7.3;
    const mb::ReducedEnergy scaled =
        mb::make_reduced_energy(mb::SystemKind::TwoComponent, 3, 1e-8, 1.0, c);
    const mb::Maximizer a = mb::maximize_landscape(base);
    const mb::Maximizer b = mb::maximize_landscape(scaled);
    CHECK(std::fabs(a.r - b.r) < 1e-6);
    CHECK(std::fabs(a.rho - b.rho) < 1e-6);
    CHECK(b.value == doctest::Approx(7.3 * a.value).epsilon(1e-9));
}

TEST_CASE("radius growth coefficients") {
    const mb::RadiusPrediction two = mb::predicted_radius(mb::SystemKind::TwoComponent, 2);
    CHECK(two.radius_coeff == doctest::Approx(1.0 / (2.0 - std::sqrt(2.0))).epsilon(1e-13));
    CHECK(two.separation_coeff == doctest::Approx(2.0 / (2.0 - std::sqrt(2.0))).epsilon(1e-13));

    const mb::RadiusPrediction three = mb::predicted_radius(mb::SystemKind::ThreeComponent, 2);
    CHECK(three.radius_coeff == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(three.separation_coeff == doctest::Approx(2.0).epsilon(1e-14));

    const mb::RadiusPrediction t5 = mb::predicted_radius(mb::SystemKind::ThreeComponent, 5);
    const mb::RadiusPrediction w5 = mb::predicted_radius(mb::SystemKind::TwoComponent, 5);
    CHECK(t5.radius_coeff == doctest::Approx(w5.radius_coeff).epsilon(1e-14));
}

TEST_CASE("separation slope matches the chord-rate prediction") {
    const mb::ScalingFit fit = mb::fit_radius_scaling(
        mb::SystemKind::TwoComponent, 2, 1.0, frozen_constants(), decade_ladder());
    const mb::RingGeometry g = mb::ring_geometry(2);
    const double sep_slope = g.m * fit.slope_L;
    CHECK(sep_slope == doctest::Approx(3.41744).epsilon(1e-3));
    CHECK(std::fabs(sep_slope / 3.4142136 - 1.0) < 0.02);
    CHECK(fit.all_interior);
    CHECK(fit.radii.size() == 9);

    const mb::ScalingFit three = mb::fit_radius_scaling(
        mb::SystemKind::ThreeComponent, 2, 1.5, frozen_constants(), decade_ladder());
    CHECK(three.slope_L == doctest::Approx(1.00083).epsilon(1e-3));
    CHECK(std::fabs(three.slope_L - 1.0) < 0.02);
    CHECK(three.all_interior);

    CHECK_THROWS_AS(mb::fit_radius_scaling(mb::SystemKind::TwoComponent, 2, 1.0,
                                           frozen_constants(), {1e-6, 1e-8}),
                    mb::DegenerateWindow);
}

TEST_CASE("window boundary diagnostics") {
    const mb::InteractionConstants c = frozen_constants();
    for (const int ell : {2, 3, 4}) {
        for (const double eps : {1e-6, 1e-8}) {
            CAPTURE(ell);
            CAPTURE(eps);
            const mb::ReducedEnergy G =
                mb::make_reduced_energy(mb::SystemKind::TwoComponent, ell, eps, 1.0, c);
            const mb::Window win = G.window();

            // Lower edge: attraction still wins everywhere along it.
            CHECK(mb::edge_maximum(G, win.lo) <= 0.0);

            // Pulled-in diagonal point: coupling already wins.
            const double rho_t =
                mb::diagnostic_radius(mb::SystemKind::TwoComponent, ell, eps, 1.0);
            CHECK(rho_t > win.lo);
            CHECK(rho_t < win.hi);
            CHECK(G(rho_t, rho_t) > 0.0);
        }
    }
}

TEST_CASE("diagonal lower bound at the pulled-in point, opposite-pair ring") {
    // The half-coupling lower bound on the diagonal value holds for the
    // two-bump ring; wider rings shave the constant below one half.
    const mb::InteractionConstants c = frozen_constants();
    const mb::RingGeometry g = mb::ring_geometry(2);
    const double gap = g.m - g.n;
    for (const double eps : {1e-6, 1e-8}) {
        CAPTURE(eps);
        const mb::ReducedEnergy G =
            mb::make_reduced_energy(mb::SystemKind::TwoComponent, 2, eps, 1.0, c);
        const double rho_t =
            mb::diagnostic_radius(mb::SystemKind::TwoComponent, 2, eps, 1.0);
        const double L = -std::log(eps);
        const double tb = mb::theta_bar(2, 1.0);
        const double floor = 0.5 * c.cross * std::pow(eps, g.m / gap) *
                             std::pow(L, tb * g.n / (gap * gap));
        CHECK(G(rho_t, rho_t) >= floor);
    }
}

TEST_CASE("upper-edge values stay order one against the edge scale") {
    const mb::InteractionConstants c = frozen_constants();
    double c1[2];
    int idx = 0;
    for (const double eps : {1e-6, 1e-8}) {
        const mb::ReducedEnergy G =
            mb::make_reduced_energy(mb::SystemKind::TwoComponent, 2, eps, 1.0, c);
        const double hi = G.window().hi;
        const double scale = mb::edge_scale(mb::SystemKind::TwoComponent, 2, eps, 1.0);
        c1[idx] = mb::edge_maximum(G, hi) / scale;
        CHECK(c1[idx] > 0.0);
        CHECK(std::isfinite(c1[idx]));
        ++idx;
    }
    const double ratio = c1[0] / c1[1];
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
}

TEST_CASE("strict mode flags a boundary maximum") {
    // Without coupling the landscape increases monotonically toward the
    // upper corner of the window.
    mb::InteractionConstants c = frozen_constants();
    c.cross = 0.0;
    c.origin = 0.0;
    const mb::ReducedEnergy G =
        mb::make_reduced_energy(mb::SystemKind::TwoComponent, 2, 1e-8, 1.0, c);
    const mb::Maximizer mx = mb::maximize_landscape(G);
    CHECK_FALSE(mx.interior);
    CHECK_THROWS_AS(mb::maximize_landscape(G, 200, true), mb::BoundaryMaximum);
}

TEST_CASE("pairwise expansion with true multiplicities") {
    const mb::InteractionConstants c = frozen_constants();

    // Two opposite-pair rings: every class is already nearest.
    const mb::ReducedEnergy g2 =
        mb::make_reduced_energy(mb::SystemKind::TwoComponent, 2, 1e-8, 1.0, c);
    const mb::Maximizer m2 = mb::maximize_landscape(g2);
    const double nn2 = mb::energy_expansion(g2, m2.r, m2.rho, true);
    const double all2 = mb::energy_expansion(g2, m2.r, m2.rho, false);
    CHECK(all2 == doctest::Approx(nn2).epsilon(1e-10));
    CHECK(nn2 > 0.0);

    // Square rings: diametral chords and far cross classes change the total
    // by well under two percent at the maximizer.
    const mb::ReducedEnergy g4 =
        mb::make_reduced_energy(mb::SystemKind::TwoComponent, 4, 1e-8, 1.0, c);
    const mb::Maximizer m4 = mb::maximize_landscape(g4);
    const double nn4 = mb::energy_expansion(g4, m4.r, m4.rho, true);
    const double all4 = mb::energy_expansion(g4, m4.r, m4.rho, false);
    CHECK(nn4 != all4);
    CHECK(std::fabs(all4 / nn4 - 1.0) < 0.02);

    // Central bump doubles its pair count on two-bump rings.
    const mb::ReducedEnergy t2 =
        mb::make_reduced_energy(mb::SystemKind::ThreeComponent, 2, 1e-8, 1.5, c);
    const mb::Maximizer mt = mb::maximize_landscape(t2);
    const double nnt = mb::energy_expansion(t2, mt.r, mt.rho, true);
    const double allt = mb::energy_expansion(t2, mt.r, mt.rho, false);
    CHECK(allt == doctest::Approx(nnt).epsilon(1e-12));
    CHECK(nnt > t2(mt.r, mt.rho));

    CHECK_THROWS_AS(mb::energy_expansion(g2, -1.0, 5.0, true), mb::OutOfRange);
}
