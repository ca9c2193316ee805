#include "multibump/field3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multibump/errors.hpp"

namespace multibump {

namespace {

void check_axis(double half, int n) {
    if (!(half > 0.0)) throw OutOfRange("box half-width must be positive");
    if (n < 8 || n % 2 != 0)
        throw OutOfRange("nodes per axis must be even and at least 8");
}

// One bump: a radial profile anchored at a center.
struct Bump {
    const RadialProfile* profile;
    const RadialProfile* lap;
    Vec3 center;
};

// The ansatz of one component as a bump list. Component 2 exists only for
// the three-component system.
std::vector<Bump> component_bumps(const CorrectionFamily& pair,
                                  const BumpConfiguration& config, int component) {
    const bool three = pair.kind == SystemKind::ThreeComponent;
    if (component < 0 || component >= (three ? 3 : 2))
        throw OutOfRange("no such component");
    const auto xs = ring_positions(config.ell, config.r, false);
    const auto ys = ring_positions(config.ell, config.rho, true);
    const RadialProfile* big = &pair.u_eps;
    const RadialProfile* small = &pair.v_eps;
    const RadialProfile* big_lap = &pair.lap_u_eps;
    const RadialProfile* small_lap = &pair.lap_v_eps;

    std::vector<Bump> bumps;
    const auto add_ring = [&](const std::vector<Vec3>& centers, const RadialProfile* p,
                              const RadialProfile* lp) {
        for (const Vec3& c : centers) bumps.push_back({p, lp, c});
    };
    if (component == 0) {
        add_ring(xs, big, big_lap);
        add_ring(ys, small, small_lap);
        if (three) bumps.push_back({small, small_lap, {0.0, 0.0, 0.0}});
    } else if (component == 1) {
        add_ring(xs, small, small_lap);
        add_ring(ys, big, big_lap);
        if (three) bumps.push_back({small, small_lap, {0.0, 0.0, 0.0}});
    } else {
        add_ring(xs, small, small_lap);
        add_ring(ys, small, small_lap);
        bumps.push_back({big, big_lap, {0.0, 0.0, 0.0}});
    }
    return bumps;
}

double eval_bumps(const std::vector<Bump>& bumps, const Vec3& p, bool laplacian) {
    double total = 0.0;
    for (const Bump& b : bumps) {
        const double dx = p.x - b.center.x;
        const double dy = p.y - b.center.y;
        const double dz = p.z - b.center.z;
        const double rr = std::sqrt(dx * dx + dy * dy + dz * dz);
        total += laplacian ? (*b.lap)(rr) : (*b.profile)(rr);
    }
    return total;
}

int component_count(const AssembledFields& f) {
    return f.kind == SystemKind::ThreeComponent ? 3 : 2;
}

const Field3D& component(const AssembledFields& f, int c) {
    return c == 0 ? f.u : (c == 1 ? f.v : f.w);
}

const Field3D& component_lap(const AssembledFields& f, int c) {
    return c == 0 ? f.lap_u : (c == 1 ? f.lap_v : f.lap_w);
}

// Trapezoid weight: half at the first and last node of an axis.
double axis_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

// d/dx along one axis: central in the interior, second-order one-sided at
// the faces (the fields are near zero there by the margin precondition).
double axis_derivative(const Field3D& fld, int i, int j, int k, int axis) {
    const BoxGrid& g = fld.grid;
    const double h = g.spacing(axis);
    const int idx3[3] = {i, j, k};
    const int n = g.n[static_cast<std::size_t>(axis)];
    const int c = idx3[axis];
    const auto at = [&](int q) {
        int ii = i, jj = j, kk = k;
        (axis == 0 ? ii : axis == 1 ? jj : kk) = q;
        return fld.values[g.index(ii, jj, kk)];
    };
    if (c == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (c == n - 1)
        return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(c + 1) - at(c - 1)) / (2.0 * h);
}

double coupling_sum(const AssembledFields& f, std::size_t idx) {
    if (f.kind == SystemKind::ThreeComponent)
        return f.u.values[idx] * f.v.values[idx] + f.u.values[idx] * f.w.values[idx] +
               f.v.values[idx] * f.w.values[idx];
    return f.u.values[idx] * f.v.values[idx];
}

double partner_sum(const AssembledFields& f, int c, std::size_t idx) {
    if (f.kind == SystemKind::ThreeComponent) {
        if (c == 0) return f.v.values[idx] + f.w.values[idx];
        if (c == 1) return f.u.values[idx] + f.w.values[idx];
        return f.u.values[idx] + f.v.values[idx];
    }
    return c == 0 ? f.v.values[idx] : f.u.values[idx];
}

}  // namespace

BoxGrid make_box(double half_width, int n_per_axis) {
    return make_box({half_width, half_width, half_width},
                    {n_per_axis, n_per_axis, n_per_axis});
}

BoxGrid make_box(const std::array<double, 3>& half, const std::array<int, 3>& n) {
    for (int a = 0; a < 3; ++a)
        check_axis(half[static_cast<std::size_t>(a)], n[static_cast<std::size_t>(a)]);
    BoxGrid g;
    g.half = half;
    g.n = n;
    return g;
}

double evaluate_component(const CorrectionFamily& pair, const BumpConfiguration& config,
                          int component, const Vec3& p) {
    return eval_bumps(component_bumps(pair, config, component), p, false);
}

double evaluate_component_lap(const CorrectionFamily& pair,
                              const BumpConfiguration& config, int component,
                              const Vec3& p) {
    return eval_bumps(component_bumps(pair, config, component), p, true);
}

AssembledFields assemble_fields(const CorrectionFamily& pair,
                                const BumpConfiguration& config, const BoxGrid& grid) {
    AssembledFields f;
    f.kind = pair.kind;
    f.epsilon = pair.epsilon;
    f.config = config;
    f.grid = grid;
    f.far_field_used = false;

    const int ncomp = pair.kind == SystemKind::ThreeComponent ? 3 : 2;
    std::vector<std::vector<Bump>> bumps;
    for (int c = 0; c < ncomp; ++c) bumps.push_back(component_bumps(pair, config, c));

    double reach[3] = {0.0, 0.0, 0.0};
    for (const auto& comp : bumps)
        for (const Bump& b : comp) {
            reach[0] = std::max(reach[0], std::fabs(b.center.x));
            reach[1] = std::max(reach[1], std::fabs(b.center.y));
            reach[2] = std::max(reach[2], std::fabs(b.center.z));
        }
    for (int a = 0; a < 3; ++a)
        if (grid.half[static_cast<std::size_t>(a)] - reach[a] < 8.0)
            throw OutOfRange("box must clear every bump center by eight decay lengths");

    const double r_max = pair.u_eps.grid.r_max;
    Field3D* vals[3] = {&f.u, &f.v, &f.w};
    Field3D* laps[3] = {&f.lap_u, &f.lap_v, &f.lap_w};
    for (int c = 0; c < ncomp; ++c) {
        vals[c]->grid = grid;
        vals[c]->values.assign(grid.size(), 0.0);
        laps[c]->grid = grid;
        laps[c]->values.assign(grid.size(), 0.0);
    }

    for (int i = 0; i < grid.n[0]; ++i) {
        const double px = grid.coord(0, i);
        for (int j = 0; j < grid.n[1]; ++j) {
            const double py = grid.coord(1, j);
            for (int k = 0; k < grid.n[2]; ++k) {
                const Vec3 p{px, py, grid.coord(2, k)};
                const std::size_t idx = grid.index(i, j, k);
                for (int c = 0; c < ncomp; ++c) {
                    double val = 0.0, lap = 0.0;
                    for (const Bump& b : bumps[static_cast<std::size_t>(c)]) {
                        const double dx = p.x - b.center.x;
                        const double dy = p.y - b.center.y;
                        const double dz = p.z - b.center.z;
                        const double rr = std::sqrt(dx * dx + dy * dy + dz * dz);
                        if (rr > r_max) f.far_field_used = true;
                        val += (*b.profile)(rr);
                        lap += (*b.lap)(rr);
                    }
                    vals[c]->values[idx] = val;
                    laps[c]->values[idx] = lap;
                }
            }
        }
    }
    return f;
}

double energy_box(const AssembledFields& f) {
    const BoxGrid& g = f.grid;
    const double vol = g.cell_volume();
    const int ncomp = component_count(f);
    double total = 0.0;
    for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t idx = g.index(i, j, k);
                const double wt = axis_weight(i, g.n[0]) * axis_weight(j, g.n[1]) *
                                  axis_weight(k, g.n[2]) * vol;
                double dens = 0.0;
                for (int c = 0; c < ncomp; ++c) {
                    const Field3D& fc = component(f, c);
                    const double val = fc.values[idx];
                    double grad2 = 0.0;
                    for (int axis = 0; axis < 3; ++axis) {
                        const double d = axis_derivative(fc, i, j, k, axis);
                        grad2 += d * d;
                    }
                    dens += 0.5 * (grad2 + val * val) - 0.25 * val * val * val * val;
                }
                dens += f.epsilon * coupling_sum(f, idx);
                total += wt * dens;
            }
        }
    }
    return total;
}

double energy_radial_pair(const RadialProfile& big, const RadialProfile& small,
                          double epsilon) {
    const RadialGrid& g = big.grid;
    if (small.grid.n != g.n || small.grid.r_max != g.r_max)
        throw OutOfRange("profiles must share a grid");
    const std::size_t n = g.n;
    const double h = g.h;
    const auto diff = [&](const std::vector<double>& y, std::size_t i) {
        if (i == 0) return (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
        if (i == n - 1)
            return (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
        return (y[i + 1] - y[i - 1]) / (2.0 * h);
    };
    std::vector<double> dens(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = big.values[i];
        const double b = small.values[i];
        const double da = diff(big.values, i);
        const double db = diff(small.values, i);
        dens[i] = 0.5 * (da * da + a * a + db * db + b * b) -
                  0.25 * (a * a * a * a + b * b * b * b) + epsilon * a * b;
    }
    return integrate_radial(g, dens);
}

Field3D sample_radial(const RadialProfile& profile, const Vec3& center,
                      const BoxGrid& grid) {
    Field3D fld;
    fld.grid = grid;
    fld.values.assign(grid.size(), 0.0);
    for (int i = 0; i < grid.n[0]; ++i) {
        const double dx = grid.coord(0, i) - center.x;
        for (int j = 0; j < grid.n[1]; ++j) {
            const double dy = grid.coord(1, j) - center.y;
            for (int k = 0; k < grid.n[2]; ++k) {
                const double dz = grid.coord(2, k) - center.z;
                fld.values[grid.index(i, j, k)] =
                    profile(std::sqrt(dx * dx + dy * dy + dz * dz));
            }
        }
    }
    return fld;
}

double energy_scalar_field(const Field3D& f) {
    const BoxGrid& g = f.grid;
    const double vol = g.cell_volume();
    double total = 0.0;
    for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
            for (int k = 0; k < g.n[2]; ++k) {
                const double wt = axis_weight(i, g.n[0]) * axis_weight(j, g.n[1]) *
                                  axis_weight(k, g.n[2]) * vol;
                const double val = f.values[g.index(i, j, k)];
                double grad2 = 0.0;
                for (int axis = 0; axis < 3; ++axis) {
                    const double d = axis_derivative(f, i, j, k, axis);
                    grad2 += d * d;
                }
                total += wt * (0.5 * (grad2 + val * val) - 0.25 * val * val * val * val);
            }
        }
    }
    return total;
}

ResidualNorms3 residual_norms(const AssembledFields& f, bool sharp) {
    const BoxGrid& g = f.grid;
    const double vol = g.cell_volume();
    const int ncomp = component_count(f);
    const double hx2 = g.spacing(0) * g.spacing(0);
    const double hy2 = g.spacing(1) * g.spacing(1);
    const double hz2 = g.spacing(2) * g.spacing(2);

    double acc[3] = {0.0, 0.0, 0.0};
    const int i_lo = sharp ? 0 : 1;
    for (int i = i_lo; i < g.n[0] - i_lo; ++i) {
        for (int j = i_lo; j < g.n[1] - i_lo; ++j) {
            for (int k = i_lo; k < g.n[2] - i_lo; ++k) {
                const std::size_t idx = g.index(i, j, k);
                for (int c = 0; c < ncomp; ++c) {
                    const Field3D& fc = component(f, c);
                    const double val = fc.values[idx];
                    double lap;
                    if (sharp) {
                        lap = component_lap(f, c).values[idx];
                    } else {
                        const auto& v = fc.values;
                        lap = (v[g.index(i + 1, j, k)] - 2.0 * val +
                               v[g.index(i - 1, j, k)]) /
                                  hx2 +
                              (v[g.index(i, j + 1, k)] - 2.0 * val +
                               v[g.index(i, j - 1, k)]) /
                                  hy2 +
                              (v[g.index(i, j, k + 1)] - 2.0 * val +
                               v[g.index(i, j, k - 1)]) /
                                  hz2;
                    }
                    const double res = -lap + val - val * val * val +
                                       f.epsilon * partner_sum(f, c, idx);
                    acc[c] += res * res;
                }
            }
        }
    }
    ResidualNorms3 out;
    out.u = std::sqrt(acc[0] * vol);
    out.v = std::sqrt(acc[1] * vol);
    out.w = ncomp == 3 ? std::sqrt(acc[2] * vol) : 0.0;
    return out;
}

SegregationReport segregation_metrics(const AssembledFields& f,
                                      const CorrectionFamily& pair) {
    const BoxGrid& g = f.grid;
    const double ang = M_PI / f.config.ell;
    const double ca = std::cos(ang);
    const double sa = std::sin(ang);
    const double vol = g.cell_volume();

    double sup = 0.0;
    double acc = 0.0;
    for (int i = 0; i < g.n[0]; ++i) {
        const double px = g.coord(0, i);
        for (int j = 0; j < g.n[1]; ++j) {
            const double py = g.coord(1, j);
            for (int k = 0; k < g.n[2]; ++k) {
                const Vec3 rp{ca * px - sa * py, sa * px + ca * py, g.coord(2, k)};
                const double diff =
                    f.u.values[g.index(i, j, k)] - evaluate_component(pair, f.config, 1, rp);
                sup = std::max(sup, std::fabs(diff));
                acc += diff * diff;
            }
        }
    }

    const auto xs = ring_positions(f.config.ell, f.config.r, false);
    const auto ys = ring_positions(f.config.ell, f.config.rho, true);
    double dmin = std::numeric_limits<double>::infinity();
    for (const Vec3& a : xs)
        for (const Vec3& b : ys)
            dmin = std::min(dmin, std::hypot(a.x - b.x, a.y - b.y, a.z - b.z));

    SegregationReport rep;
    rep.linf_shift_diff = sup;
    rep.l2_shift_diff = std::sqrt(acc * vol);
    rep.min_cross_distance_over_logeps = dmin / std::fabs(std::log(f.epsilon));
    return rep;
}

namespace {

// Stacked vectors over all components for the Newton solve.
struct Stacked {
    std::vector<double> x;
    int ncomp;
    std::size_t per;
};

// y = J x with J = [-Delta + 1 - 3 u_c^2] on the diagonal blocks and eps on
// every off-diagonal pair, zero Dirichlet ghosts.
void apply_jacobian(const AssembledFields& f, const std::vector<double>& x,
                    std::vector<double>& y) {
    const BoxGrid& g = f.grid;
    const int ncomp = component_count(f);
    const std::size_t per = g.size();
    const double ihx2 = 1.0 / (g.spacing(0) * g.spacing(0));
    const double ihy2 = 1.0 / (g.spacing(1) * g.spacing(1));
    const double ihz2 = 1.0 / (g.spacing(2) * g.spacing(2));

    for (int c = 0; c < ncomp; ++c) {
        const double* xc = x.data() + static_cast<std::size_t>(c) * per;
        double* yc = y.data() + static_cast<std::size_t>(c) * per;
        const Field3D& fc = component(f, c);
        for (int i = 0; i < g.n[0]; ++i) {
            for (int j = 0; j < g.n[1]; ++j) {
                for (int k = 0; k < g.n[2]; ++k) {
                    const std::size_t idx = g.index(i, j, k);
                    const double xv = xc[idx];
                    const double xm = i > 0 ? xc[g.index(i - 1, j, k)] : 0.0;
                    const double xp = i + 1 < g.n[0] ? xc[g.index(i + 1, j, k)] : 0.0;
                    const double ym = j > 0 ? xc[g.index(i, j - 1, k)] : 0.0;
                    const double yp = j + 1 < g.n[1] ? xc[g.index(i, j + 1, k)] : 0.0;
                    const double zm = k > 0 ? xc[g.index(i, j, k - 1)] : 0.0;
                    const double zp = k + 1 < g.n[2] ? xc[g.index(i, j, k + 1)] : 0.0;
                    const double lap = (xp - 2.0 * xv + xm) * ihx2 +
                                       (yp - 2.0 * xv + ym) * ihy2 +
                                       (zp - 2.0 * xv + zm) * ihz2;
                    const double uval = fc.values[idx];
                    double out = -lap + (1.0 - 3.0 * uval * uval) * xv;
                    for (int o = 0; o < ncomp; ++o)
                        if (o != c)
                            out += f.epsilon * x[static_cast<std::size_t>(o) * per + idx];
                    yc[idx] = out;
                }
            }
        }
    }
}

// Residual of the discrete system (stencil Laplacian, zero ghosts) into a
// stacked vector; returns its plain L2 norm.
double stacked_residual(const AssembledFields& f, std::vector<double>& out) {
    const BoxGrid& g = f.grid;
    const int ncomp = component_count(f);
    const std::size_t per = g.size();
    const double ihx2 = 1.0 / (g.spacing(0) * g.spacing(0));
    const double ihy2 = 1.0 / (g.spacing(1) * g.spacing(1));
    const double ihz2 = 1.0 / (g.spacing(2) * g.spacing(2));
    double acc = 0.0;
    for (int c = 0; c < ncomp; ++c) {
        const Field3D& fc = component(f, c);
        const auto& v = fc.values;
        double* oc = out.data() + static_cast<std::size_t>(c) * per;
        for (int i = 0; i < g.n[0]; ++i) {
            for (int j = 0; j < g.n[1]; ++j) {
                for (int k = 0; k < g.n[2]; ++k) {
                    const std::size_t idx = g.index(i, j, k);
                    const double val = v[idx];
                    const double xm = i > 0 ? v[g.index(i - 1, j, k)] : 0.0;
                    const double xp = i + 1 < g.n[0] ? v[g.index(i + 1, j, k)] : 0.0;
                    const double ym = j > 0 ? v[g.index(i, j - 1, k)] : 0.0;
                    const double yp = j + 1 < g.n[1] ? v[g.index(i, j + 1, k)] : 0.0;
                    const double zm = k > 0 ? v[g.index(i, j, k - 1)] : 0.0;
                    const double zp = k + 1 < g.n[2] ? v[g.index(i, j, k + 1)] : 0.0;
                    const double lap = (xp - 2.0 * val + xm) * ihx2 +
                                       (yp - 2.0 * val + ym) * ihy2 +
                                       (zp - 2.0 * val + zm) * ihz2;
                    const double res = -lap + val - val * val * val +
                                       f.epsilon * partner_sum(f, c, idx);
                    oc[idx] = res;
                    acc += res * res;
                }
            }
        }
    }
    return std::sqrt(acc);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Preconditioned MINRES (Paige-Saunders) for the symmetric indefinite
// Jacobian, with the absolute-value Jacobi preconditioner.
void minres_solve(const AssembledFields& f, const std::vector<double>& rhs,
                  std::vector<double>& x, double rel_tol, int max_iters) {
    const std::size_t nn = rhs.size();
    const BoxGrid& g = f.grid;
    const int ncomp = component_count(f);
    const std::size_t per = g.size();
    const double diag0 = 2.0 / (g.spacing(0) * g.spacing(0)) +
                         2.0 / (g.spacing(1) * g.spacing(1)) +
                         2.0 / (g.spacing(2) * g.spacing(2));
    std::vector<double> minv(nn);
    for (int c = 0; c < ncomp; ++c) {
        const Field3D& fc = component(f, c);
        for (std::size_t i = 0; i < per; ++i) {
            const double d = diag0 + 1.0 - 3.0 * fc.values[i] * fc.values[i];
            minv[static_cast<std::size_t>(c) * per + i] =
                1.0 / std::max(std::fabs(d), 1e-8);
        }
    }

    x.assign(nn, 0.0);
    std::vector<double> v_prev(nn, 0.0), v(rhs), v_next(nn), z(nn), z_new(nn);
    std::vector<double> w(nn, 0.0), w_prev(nn, 0.0), tmp(nn);
    for (std::size_t i = 0; i < nn; ++i) z[i] = minv[i] * v[i];
    double gamma = std::sqrt(dot(z, v));
    if (gamma == 0.0) return;
    double gamma_prev = gamma;
    double eta = gamma;
    const double eta0 = std::fabs(eta);
    double c0 = 1.0, c1 = 1.0, s0 = 0.0, s1 = 0.0;

    for (int it = 0; it < max_iters; ++it) {
        for (std::size_t i = 0; i < nn; ++i) tmp[i] = z[i] / gamma;
        apply_jacobian(f, tmp, v_next);
        const double delta = dot(tmp, v_next);
        for (std::size_t i = 0; i < nn; ++i)
            v_next[i] -= (delta / gamma) * v[i] + (gamma / gamma_prev) * v_prev[i];
        for (std::size_t i = 0; i < nn; ++i) z_new[i] = minv[i] * v_next[i];
        const double gamma_next = std::sqrt(std::max(dot(z_new, v_next), 0.0));

        const double a0 = c1 * delta - c0 * s1 * gamma;
        const double a1 = std::sqrt(a0 * a0 + gamma_next * gamma_next);
        const double a2 = s1 * delta + c0 * c1 * gamma;
        const double a3 = s0 * gamma;
        c0 = c1;
        s0 = s1;
        c1 = a0 / a1;
        s1 = gamma_next / a1;
        for (std::size_t i = 0; i < nn; ++i) {
            const double wn = (z[i] / gamma - a3 * w_prev[i] - a2 * w[i]) / a1;
            w_prev[i] = w[i];
            w[i] = wn;
            x[i] += c1 * eta * wn;
        }
        eta = -s1 * eta;
        if (gamma_next == 0.0 || std::fabs(eta) < rel_tol * eta0) break;
        gamma_prev = gamma;
        gamma = gamma_next;
        std::swap(v_prev, v);
        std::swap(v, v_next);
        std::swap(z, z_new);
    }
}

// Average over the grid-exact mirror group: x2 and x3 always, x1 when the
// ring count is even (rotation by pi then belongs to the symmetry class).
void symmetrize(const BoxGrid& g, int ell, std::vector<double>& vals, int ncomp) {
    const std::size_t per = g.size();
    const bool mirror_x = ell % 2 == 0;
    for (int c = 0; c < ncomp; ++c) {
        double* vc = vals.data() + static_cast<std::size_t>(c) * per;
        for (int i = 0; i < g.n[0]; ++i) {
            const int im = mirror_x ? g.n[0] - 1 - i : i;
            if (im < i) continue;
            for (int j = 0; j < g.n[1]; ++j) {
                const int jm = g.n[1] - 1 - j;
                if (jm < j) continue;
                for (int k = 0; k < g.n[2]; ++k) {
                    const int km = g.n[2] - 1 - k;
                    if (km < k) continue;
                    double s = 0.0;
                    int cnt = 0;
                    const int is[2] = {i, im};
                    const int js[2] = {j, jm};
                    const int ks[2] = {k, km};
                    const int ni = im == i ? 1 : 2;
                    const int nj = jm == j ? 1 : 2;
                    const int nk = km == k ? 1 : 2;
                    for (int a = 0; a < ni; ++a)
                        for (int b = 0; b < nj; ++b)
                            for (int d = 0; d < nk; ++d) {
                                s += vc[g.index(is[a], js[b], ks[d])];
                                ++cnt;
                            }
                    const double avg = s / cnt;
                    for (int a = 0; a < ni; ++a)
                        for (int b = 0; b < nj; ++b)
                            for (int d = 0; d < nk; ++d)
                                vc[g.index(is[a], js[b], ks[d])] = avg;
                }
            }
        }
    }
}

// Discrete H1 norm of a stacked correction.
double stacked_h1(const BoxGrid& g, const std::vector<double>& vals, int ncomp) {
    const std::size_t per = g.size();
    double acc = 0.0;
    for (int c = 0; c < ncomp; ++c) {
        Field3D fld;
        fld.grid = g;
        fld.values.assign(vals.begin() + static_cast<std::ptrdiff_t>(c * per),
                          vals.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j)
                for (int k = 0; k < g.n[2]; ++k) {
                    const double val = fld.values[g.index(i, j, k)];
                    double grad2 = 0.0;
                    for (int axis = 0; axis < 3; ++axis) {
                        const double d = axis_derivative(fld, i, j, k, axis);
                        grad2 += d * d;
                    }
                    acc += grad2 + val * val;
                }
    }
    return std::sqrt(acc * g.cell_volume());
}

}  // namespace

NewtonReport newton_refine(AssembledFields& f, int max_iters) {
    const BoxGrid& g = f.grid;
    if (g.size() > 884736) throw OutOfRange("refinement grid capped at 96^3 nodes");
    if (f.epsilon < 0.02 && f.epsilon != 0.0)
        throw OutOfRange("refinement needs eps >= 0.02 (or the decoupled limit)");

    const int ncomp = component_count(f);
    const std::size_t per = g.size();
    const std::size_t nn = static_cast<std::size_t>(ncomp) * per;

    std::vector<double> start(nn);
    Field3D* comps[3] = {&f.u, &f.v, &f.w};
    for (int c = 0; c < ncomp; ++c)
        std::copy(comps[c]->values.begin(), comps[c]->values.end(),
                  start.begin() + static_cast<std::ptrdiff_t>(c * per));

    std::vector<double> res(nn), rhs(nn), step(nn), trial(nn), base(nn);
    double rnorm = stacked_residual(f, res);
    NewtonReport rep;
    rep.initial_residual = rnorm;
    rep.steps = 0;
    const double target = std::max(rnorm * 1e-3, 1e-10);

    while (rnorm > target && rep.steps < max_iters) {
        for (std::size_t i = 0; i < nn; ++i) rhs[i] = -res[i];
        minres_solve(f, rhs, step, 1e-6, 400);
        symmetrize(g, f.config.ell, step, ncomp);
        for (int c = 0; c < ncomp; ++c)
            std::copy(comps[c]->values.begin(), comps[c]->values.end(),
                      base.begin() + static_cast<std::ptrdiff_t>(c * per));

        bool accepted = false;
        for (double damp = 1.0; damp >= 1.0 / 64.0 - 1e-12; damp *= 0.5) {
            for (int c = 0; c < ncomp; ++c) {
                double* vc = comps[c]->values.data();
                const double* bc = base.data() + static_cast<std::size_t>(c) * per;
                const double* sc = step.data() + static_cast<std::size_t>(c) * per;
                for (std::size_t i = 0; i < per; ++i) vc[i] = bc[i] + damp * sc[i];
            }
            const double rnew = stacked_residual(f, trial);
            if (rnew < rnorm) {
                res = trial;
                rnorm = rnew;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            for (int c = 0; c < ncomp; ++c) {
                const double* bc = base.data() + static_cast<std::size_t>(c) * per;
                std::copy(bc, bc + per, comps[c]->values.begin());
            }
            throw DivergedNewton("no damping level reduced the residual");
        }
        ++rep.steps;
    }

    rep.final_residual = rnorm;
    std::vector<double> corr(nn);
    for (int c = 0; c < ncomp; ++c)
        for (std::size_t i = 0; i < per; ++i)
            corr[static_cast<std::size_t>(c) * per + i] =
                comps[c]->values[i] - start[static_cast<std::size_t>(c) * per + i];
    rep.corrector_h1 = stacked_h1(g, corr, ncomp);
    rep.ansatz_h1 = stacked_h1(g, start, ncomp);
    return rep;
}

}  // namespace multibump
