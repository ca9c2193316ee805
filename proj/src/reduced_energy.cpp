#include "multibump/reduced_energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "multibump/errors.hpp"

namespace multibump {

namespace {

constexpr double kGolden = 0.6180339887498949;

// Maximize a unimodal-ish function on [a, b] by golden section. Returns the
// midpoint of the final bracket.
template <typename F>
double golden_max(F&& f, double a, double b, double tol) {
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 300 && b - a > tol; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

void solve3(std::array<std::array<double, 3>, 3>& A, std::array<double, 3>& b) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::fabs(A[row][col]) > std::fabs(A[piv][col])) piv = row;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        if (std::fabs(A[col][col]) < 1e-300)
            throw DegenerateWindow("scaling fit normal equations are singular");
        for (int row = col + 1; row < 3; ++row) {
            const double f = A[row][col] / A[col][col];
            for (int k = col; k < 3; ++k) A[row][k] -= f * A[col][k];
            b[row] -= f * b[col];
        }
    }
    for (int col = 2; col >= 0; --col) {
        for (int k = col + 1; k < 3; ++k) b[col] -= A[col][k] * b[k];
        b[col] /= A[col][col];
    }
}

// Decay rates that control the window: the same-family attraction falls at
// rate m and the dominant coupling term at rate n, except the ell = 2
// three-component arrangement where the central bump (rate 1) replaces the
// ring coupling and the opposite-bump attraction falls at rate 2.
void effective_rates(SystemKind kind, const RingGeometry& geom, double& me, double& ne) {
    if (kind == SystemKind::ThreeComponent && geom.ell == 2) {
        me = 2.0;
        ne = 1.0;
    } else {
        me = geom.m;
        ne = geom.n;
    }
}

double attraction_term(double c_attr, double m, double t) {
    return (c_attr / (m * t)) * std::exp(-m * t);
}

}  // namespace

RingGeometry ring_geometry(int ell) {
    if (ell < 2) throw OutOfRange("ring needs at least two bumps per family");
    const double ang = M_PI / ell;
    RingGeometry g;
    g.ell = ell;
    g.m = 2.0 * std::sin(ang);
    g.n = std::sqrt(2.0 * (1.0 - std::cos(ang)));
    return g;
}

std::vector<Vec3> ring_positions(int ell, double radius, bool second_family) {
    ring_geometry(ell);
    if (!(radius > 0.0)) throw OutOfRange("ring radius must be positive");
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(ell));
    for (int j = 0; j < ell; ++j) {
        const double ang = second_family ? (2.0 * j + 1.0) * M_PI / ell
                                         : 2.0 * M_PI * j / ell;
        pts.push_back({radius * std::cos(ang), radius * std::sin(ang), 0.0});
    }
    return pts;
}

double theta_bar(int ell, double mu) {
    const RingGeometry g = ring_geometry(ell);
    const double gap = g.m - g.n;
    const double tb = gap * gap / (mu * (g.m - 0.5 * g.n));
    if (!(tb > 0.0 && tb < 1.0))
        throw OutOfRange("log-correction exponent left (0, 1); margin parameter too small");
    return tb;
}

Window domain_window(SystemKind kind, int ell, double eps, double mu) {
    ring_geometry(ell);
    if (!(eps > 0.0) || eps >= std::exp(-1.0))
        throw OutOfRange("coupling must lie in (0, 1/e)");
    const double L = -std::log(eps);
    const double lnL = std::log(L);
    if (kind == SystemKind::ThreeComponent && ell == 2) {
        if (!(mu > 1.0)) throw BadMu("margin parameter must exceed 1");
        return {L / (1.0 + mu * lnL / L), L};
    }
    const RingGeometry g = ring_geometry(ell);
    const double gap = g.m - g.n;
    if (!(mu > gap)) throw BadMu("margin parameter must exceed m - n");
    return {L / (gap + mu * lnL / L), L / gap};
}

double ReducedEnergy::operator()(double r, double rho) const {
    if (!(r > 0.0) || !(rho > 0.0))
        throw OutOfRange("ring radii must be positive");
    const double cosang = std::cos(M_PI / ell);
    const double D = std::sqrt(r * r + rho * rho - 2.0 * r * rho * cosang);
    const double attr = attraction_term(constants.attraction, geom.m, r) +
                        attraction_term(constants.attraction, geom.m, rho);
    if (kind == SystemKind::TwoComponent)
        return constants.cross * epsilon * std::exp(-D) - attr;
    double val = -attr + constants.origin * epsilon * (std::exp(-r) + std::exp(-rho));
    if (ell >= 3) val += constants.cross * epsilon * std::exp(-D);
    return val;
}

ReducedEnergy make_reduced_energy(SystemKind kind, int ell, double epsilon, double mu,
                                  const InteractionConstants& constants) {
    ReducedEnergy G;
    G.kind = kind;
    G.ell = ell;
    G.epsilon = epsilon;
    G.mu = mu;
    G.constants = constants;
    G.geom = ring_geometry(ell);
    domain_window(kind, ell, epsilon, mu);
    return G;
}

Maximizer maximize_landscape(const ReducedEnergy& G, std::size_t ngrid, bool strict) {
    const Window win = G.window();
    if (ngrid < 2) throw OutOfRange("grid scan needs at least two points");
    if (!(win.hi > win.lo)) throw DegenerateWindow("empty radius window");

    std::vector<double> xs(ngrid);
    const double cell = (win.hi - win.lo) / static_cast<double>(ngrid - 1);
    for (std::size_t i = 0; i < ngrid; ++i)
        xs[i] = win.lo + cell * static_cast<double>(i);

    double best = -std::numeric_limits<double>::infinity();
    double rr = xs[0], pp = xs[0];
    for (std::size_t i = 0; i < ngrid; ++i) {
        for (std::size_t j = 0; j < ngrid; ++j) {
            const double v = G(xs[i], xs[j]);
            if (v > best) {
                best = v;
                rr = xs[i];
                pp = xs[j];
            }
        }
    }

    for (int sweep = 0; sweep < 300; ++sweep) {
        const double r2 =
            golden_max([&](double t) { return G(t, pp); },
                       std::max(win.lo, rr - cell), std::min(win.hi, rr + cell), 1e-12);
        const double p2 =
            golden_max([&](double t) { return G(r2, t); },
                       std::max(win.lo, pp - cell), std::min(win.hi, pp + cell), 1e-12);
        const bool settled = std::fabs(r2 - rr) < 1e-11 && std::fabs(p2 - pp) < 1e-11;
        rr = r2;
        pp = p2;
        if (settled) break;
    }

    const double t = golden_max([&](double s) { return G(s, s); }, win.lo, win.hi, 1e-12);
    if (G(t, t) >= G(rr, pp)) rr = pp = t;

    Maximizer out;
    out.r = rr;
    out.rho = pp;
    out.value = G(rr, pp);
    out.window = win;
    out.interior = rr > win.lo + cell && rr < win.hi - cell && pp > win.lo + cell &&
                   pp < win.hi - cell;
    if (strict && !out.interior)
        throw BoundaryMaximum("landscape maximum sits within one cell of the window edge");
    return out;
}

RadiusPrediction predicted_radius(SystemKind kind, int ell) {
    const RingGeometry g = ring_geometry(ell);
    if (kind == SystemKind::ThreeComponent && ell == 2) return {1.0, 2.0};
    const double gap = g.m - g.n;
    return {1.0 / gap, g.m / gap};
}

double edge_maximum(const ReducedEnergy& G, double edge_r, std::size_t nscan) {
    const Window win = G.window();
    if (nscan < 2) throw OutOfRange("edge scan needs at least two points");
    double best = -std::numeric_limits<double>::infinity();
    const double step = (win.hi - win.lo) / static_cast<double>(nscan - 1);
    for (std::size_t i = 0; i < nscan; ++i)
        best = std::max(best, G(edge_r, win.lo + step * static_cast<double>(i)));
    return best;
}

double diagnostic_radius(SystemKind kind, int ell, double eps, double mu) {
    domain_window(kind, ell, eps, mu);
    const RingGeometry g = ring_geometry(ell);
    double me, ne;
    effective_rates(kind, g, me, ne);
    const double gap = me - ne;
    const double tb = gap * gap / (mu * (me - 0.5 * ne));
    const double L = -std::log(eps);
    return L / gap - mu * tb * std::log(L) / (gap * gap);
}

double edge_scale(SystemKind kind, int ell, double eps, double mu) {
    domain_window(kind, ell, eps, mu);
    const RingGeometry g = ring_geometry(ell);
    double me, ne;
    effective_rates(kind, g, me, ne);
    const double gap = me - ne;
    const double tb = gap * gap / (mu * (me - 0.5 * ne));
    const double L = -std::log(eps);
    return std::pow(eps, me / gap) *
           std::pow(L, mu * tb * ne / (2.0 * gap * gap));
}

ScalingFit fit_radius_scaling(SystemKind kind, int ell, double mu,
                              const InteractionConstants& constants,
                              const std::vector<double>& eps_ladder) {
    if (eps_ladder.size() < 3)
        throw DegenerateWindow("scaling fit needs at least three couplings");
    ScalingFit fit;
    fit.all_interior = true;
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> atb{};
    for (const double eps : eps_ladder) {
        const ReducedEnergy G = make_reduced_energy(kind, ell, eps, mu, constants);
        const Maximizer mx = maximize_landscape(G);
        fit.radii.push_back(mx.r);
        fit.all_interior = fit.all_interior && mx.interior;
        const double L = -std::log(eps);
        const std::array<double, 3> row{L, std::log(L), 1.0};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) ata[a][b] += row[a] * row[b];
            atb[a] += row[a] * mx.r;
        }
    }
    solve3(ata, atb);
    fit.slope_L = atb[0];
    fit.slope_logL = atb[1];
    fit.intercept = atb[2];
    return fit;
}

double energy_expansion(const ReducedEnergy& G, double r, double rho,
                        bool nearest_only) {
    if (!(r > 0.0) || !(rho > 0.0))
        throw OutOfRange("ring radii must be positive");
    const int ell = G.ell;
    const double eps = G.epsilon;
    double total = 0.0;

    // Same-family chords d_k = 2 t sin(pi k / ell), ell pairs per class
    // except the diametral class which has ell / 2.
    for (const double t : {r, rho}) {
        const int kmax = nearest_only ? 1 : ell / 2;
        for (int k = 1; k <= kmax; ++k) {
            const double d = 2.0 * t * std::sin(M_PI * k / ell);
            const double mult = (2 * k == ell) ? 0.5 * ell : ell;
            total -= mult * G.constants.attraction * std::exp(-d) / d;
        }
    }

    // Cross-family classes at angle offsets (2c+1) pi / ell, ell pairs each;
    // the two classes c and ell-1-c share a distance, so the nearest class
    // contributes 2 ell pairs. The ell = 2 three-component arrangement has no
    // cross term.
    if (!(G.kind == SystemKind::ThreeComponent && ell == 2)) {
        const int cmax = nearest_only ? 0 : ell - 1;
        for (int c = 0; c <= cmax; ++c) {
            const double ang = (2.0 * c + 1.0) * M_PI / ell;
            const double D =
                std::sqrt(r * r + rho * rho - 2.0 * r * rho * std::cos(ang));
            const double mult = nearest_only ? 2.0 * ell : ell;
            total += mult * G.constants.cross * eps * std::exp(-D);
        }
    }

    // Central bump of the three-component arrangement against both rings.
    if (G.kind == SystemKind::ThreeComponent)
        total += ell * G.constants.origin * eps * (std::exp(-r) + std::exp(-rho));
    return total;
}

}  // namespace multibump
