#include "multibump/corrections.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "multibump/errors.hpp"

namespace multibump {

namespace {

// A solve together with the Laplacian of its solution. From
// (-Lap + 1 - V) x = rhs one reads Lap x = x - V x - rhs directly, which is
// exact for the discrete solution and spares a noisy second difference.
struct Solved {
    std::vector<double> x;
    std::vector<double> lap;
};

Solved solve_with_lap(const RadialGrid& g, const std::vector<double>& V,
                      const std::vector<double>& rhs) {
    Solved s;
    s.x = solve_radial_linear(g, V, rhs);
    s.lap.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) s.lap[i] = s.x[i] - V[i] * s.x[i] - rhs[i];
    return s;
}

// Tail fit that tolerates a negative-valued profile by fitting its modulus
// and carrying the sign in the amplitude. Windows with mixed signs or zeros
// get no tail; every consumer treats a missing tail as zero far field, which
// is harmless at the e^{-r_max} scales involved.
std::optional<FarFieldFit> try_fit_signed(const RadialGrid& g,
                                          const std::vector<double>& vals,
                                          double r_lo, double r_hi) {
    bool any = false, pos = false, neg = false;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double r = g.r(i);
        if (r < r_lo || r > r_hi) continue;
        any = true;
        if (vals[i] > 1e-300) pos = true;
        else if (vals[i] < -1e-300) neg = true;
        else return std::nullopt;
    }
    if (!any || pos == neg) return std::nullopt;
    std::vector<double> mag(g.n, 0.0);
    for (std::size_t i = 0; i < g.n; ++i) mag[i] = std::abs(vals[i]);
    FarFieldFit fit = fit_far_field(g, mag, r_lo, r_hi);
    if (neg) fit.amplitude = -fit.amplitude;
    return fit;
}

}  // namespace

CorrectionFamily build_corrections(const GroundState& gs, double epsilon,
                                   SystemKind kind) {
    if (!(epsilon >= 0.0) || epsilon > 0.5)
        throw OutOfRange("build_corrections: epsilon " + std::to_string(epsilon) +
                         " outside [0, 0.5]");
    const RadialGrid& g = gs.profile.grid;
    const std::size_t n = g.n;
    const std::vector<double>& U = gs.profile.values;

    std::vector<double> zero(n, 0.0), V3(n), negU(n);
    for (std::size_t i = 0; i < n; ++i) {
        V3[i] = 3.0 * U[i] * U[i];
        negU[i] = -U[i];
    }

    // First order. The second component starts from the response to the
    // ground state; the cubic counterterm c removes the order-3 residual
    // its own cube would otherwise leave behind.
    const Solved vt1 = solve_with_lap(g, zero, negU);
    std::vector<double> vt1cube(n);
    for (std::size_t i = 0; i < n; ++i) vt1cube[i] = vt1.x[i] * vt1.x[i] * vt1.x[i];
    const Solved c = solve_with_lap(g, zero, vt1cube);

    const double e2 = epsilon * epsilon;
    Solved v1;
    v1.x.resize(n);
    v1.lap.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        v1.x[i] = vt1.x[i] + e2 * c.x[i];
        v1.lap[i] = vt1.lap[i] + e2 * c.lap[i];
    }
    Solved u1 = solve_with_lap(g, V3, zero);

    auto scaled_sum = [n](double a, const std::vector<double>& x, double b,
                          const std::vector<double>& y) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
        return out;
    };

    std::vector<Solved> su{u1}, sv{v1}, sw;
    if (kind == SystemKind::TwoComponent) {
        for (int k = 2; k <= 4; ++k) {
            const double kk = static_cast<double>(k);
            su.push_back(solve_with_lap(g, V3, scaled_sum(-kk, sv[k - 2].x, 0.0, zero)));
            sv.push_back(solve_with_lap(g, zero, scaled_sum(-kk, su[k - 2].x, 0.0, zero)));
        }
    } else {
        sw.push_back(v1);
        for (int k = 2; k <= 4; ++k) {
            const double kk = static_cast<double>(k);
            su.push_back(solve_with_lap(
                g, V3, scaled_sum(-kk, sv[k - 2].x, -kk, sw[k - 2].x)));
            sv.push_back(solve_with_lap(
                g, zero, scaled_sum(-kk, su[k - 2].x, -kk, sw[k - 2].x)));
            sw.push_back(solve_with_lap(
                g, zero, scaled_sum(-kk, su[k - 2].x, -kk, sv[k - 2].x)));
        }
    }

    static const double fact[5] = {1.0, 1.0, 2.0, 6.0, 24.0};
    std::vector<double> ue = U, ve(n, 0.0);
    std::vector<double> lue(n), lve(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) lue[i] = U[i] - U[i] * U[i] * U[i];
    for (int k = 1; k <= 4; ++k) {
        const double coef = std::pow(epsilon, k) / fact[k];
        for (std::size_t i = 0; i < n; ++i) {
            ue[i] += coef * su[k - 1].x[i];
            lue[i] += coef * su[k - 1].lap[i];
            ve[i] += coef * sv[k - 1].x[i];
            lve[i] += coef * sv[k - 1].lap[i];
        }
    }

    CorrectionFamily fam{kind,
                         epsilon,
                         {},
                         {},
                         {},
                         RadialProfile(g, std::move(ue)),
                         RadialProfile(g, std::move(ve)),
                         RadialProfile(g, std::move(lue)),
                         RadialProfile(g, std::move(lve))};
    for (int k = 0; k < 4; ++k) {
        fam.u.push_back(std::move(su[k].x));
        fam.v.push_back(std::move(sv[k].x));
        if (kind == SystemKind::ThreeComponent) fam.w.push_back(std::move(sw[k].x));
    }

    const double r_lo = 0.4 * g.r_max, r_hi = 0.7 * g.r_max;
    fam.u_eps.tail = try_fit_signed(g, fam.u_eps.values, r_lo, r_hi);
    fam.v_eps.tail = try_fit_signed(g, fam.v_eps.values, r_lo, r_hi);
    fam.lap_u_eps.tail = try_fit_signed(g, fam.lap_u_eps.values, r_lo, r_hi);
    fam.lap_v_eps.tail = try_fit_signed(g, fam.lap_v_eps.values, r_lo, r_hi);
    return fam;
}

ResidualNorms residual_modified(const CorrectionFamily& fam) {
    const RadialGrid& g = fam.u_eps.grid;
    const std::size_t n = g.n;
    const std::vector<double> zero(n, 0.0);
    const std::vector<double>& ue = fam.u_eps.values;
    const std::vector<double>& ve = fam.v_eps.values;
    const double eps = fam.epsilon;

    std::vector<double> ru = apply_operator(g, zero, ue, 1.0);
    std::vector<double> rv = apply_operator(g, zero, ve, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        ru[i] -= ue[i] * ue[i] * ue[i];
        rv[i] -= ve[i] * ve[i] * ve[i];
        if (fam.kind == SystemKind::TwoComponent) {
            ru[i] += eps * ve[i];
            rv[i] += eps * ue[i];
        } else {
            ru[i] += 2.0 * eps * ve[i];
            rv[i] += eps * (ue[i] + ve[i]);
        }
    }
    ru[n - 1] = 0.0;
    rv[n - 1] = 0.0;
    return {norm_l2_weighted(g, ru), norm_l2_weighted(g, rv)};
}

}  // namespace multibump
