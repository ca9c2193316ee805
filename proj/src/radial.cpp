#include "multibump/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <lapacke.h>

#include "multibump/errors.hpp"

namespace multibump {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct State {
    double u;
    double w;  // u'
};

State eval_rhs(double r, const State& y) {
    const double cubic = y.u - y.u * y.u * y.u;
    double upp;
    if (r < 1e-12) {
        // u'' + (2/r)u' -> 3u'' as r -> 0
        upp = cubic / 3.0;
    } else {
        upp = cubic - 2.0 / r * y.w;
    }
    return {y.w, upp};
}

// Dormand-Prince 5(4) stepper with the usual embedded error estimate.
class Dp45 {
  public:
    Dp45() : h_next_(1e-3) {}

    // Advance y from r to r_target, never overshooting.
    void integrate_to(double& r, State& y, double r_target) {
        while (r < r_target) {
            double h = std::min(h_next_, r_target - r);
            for (;;) {
                State y_new;
                double err = attempt(r, y, h, y_new);
                double scale =
                    std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
                if (err <= 1.0) {
                    r += h;
                    y = y_new;
                    h_next_ = std::min(h * scale, kMaxStep);
                    break;
                }
                h *= scale;
            }
        }
    }

  private:
    static constexpr double kMaxStep = 0.05;
    static constexpr double kAtol = 1e-14;
    static constexpr double kRtol = 1e-12;

    double h_next_;

    // One trial step of size h. Fills y_new with the 5th order result and
    // returns the scaled error norm (accept when <= 1).
    double attempt(double r, const State& y, double h, State& y_new) const {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                                a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

        const State k1 = eval_rhs(r, y);
        const State k2 = eval_rhs(r + h * a21, axpy(y, h, {a21 * k1.u, a21 * k1.w}));
        const State k3 =
            eval_rhs(r + h * 0.3, axpy(y, h,
                                       {a31 * k1.u + a32 * k2.u, a31 * k1.w + a32 * k2.w}));
        const State k4 = eval_rhs(
            r + h * 0.8,
            axpy(y, h,
                 {a41 * k1.u + a42 * k2.u + a43 * k3.u,
                  a41 * k1.w + a42 * k2.w + a43 * k3.w}));
        const State k5 = eval_rhs(
            r + h * 8.0 / 9.0,
            axpy(y, h,
                 {a51 * k1.u + a52 * k2.u + a53 * k3.u + a54 * k4.u,
                  a51 * k1.w + a52 * k2.w + a53 * k3.w + a54 * k4.w}));
        const State k6 = eval_rhs(
            r + h,
            axpy(y, h,
                 {a61 * k1.u + a62 * k2.u + a63 * k3.u + a64 * k4.u + a65 * k5.u,
                  a61 * k1.w + a62 * k2.w + a63 * k3.w + a64 * k4.w + a65 * k5.w}));

        y_new = axpy(y, h,
                     {b1 * k1.u + b3 * k3.u + b4 * k4.u + b5 * k5.u + b6 * k6.u,
                      b1 * k1.w + b3 * k3.w + b4 * k4.w + b5 * k5.w + b6 * k6.w});
        const State k7 = eval_rhs(r + h, y_new);

        const double eu =
            h * (e1 * k1.u + e3 * k3.u + e4 * k4.u + e5 * k5.u + e6 * k6.u + e7 * k7.u);
        const double ew =
            h * (e1 * k1.w + e3 * k3.w + e4 * k4.w + e5 * k5.w + e6 * k6.w + e7 * k7.w);
        const double su = kAtol + kRtol * std::max(std::abs(y.u), std::abs(y_new.u));
        const double sw = kAtol + kRtol * std::max(std::abs(y.w), std::abs(y_new.w));
        const double ru = eu / su;
        const double rw = ew / sw;
        return std::sqrt(0.5 * (ru * ru + rw * rw));
    }

    static State axpy(const State& y, double h, const State& d) {
        return {y.u + h * d.u, y.w + h * d.w};
    }
};

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Solve a 3x3 linear system in place by Gaussian elimination with partial
// pivoting. Used only for the far-field normal equations.
void solve3(double A[3][3], double b[3]) {
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int k = c + 1; k < 3; ++k)
            if (std::abs(A[k][c]) > std::abs(A[p][c])) p = k;
        if (std::abs(A[p][c]) < 1e-300)
            throw DegenerateWindow("far-field fit: singular normal equations");
        if (p != c) {
            for (int k = 0; k < 3; ++k) std::swap(A[c][k], A[p][k]);
            std::swap(b[c], b[p]);
        }
        for (int k = c + 1; k < 3; ++k) {
            const double f = A[k][c] / A[c][c];
            for (int j = c; j < 3; ++j) A[k][j] -= f * A[c][j];
            b[k] -= f * b[c];
        }
    }
    for (int c = 2; c >= 0; --c) {
        for (int k = c + 1; k < 3; ++k) b[c] -= A[c][k] * b[k];
        b[c] /= A[c][c];
    }
}

}  // namespace

RadialGrid::RadialGrid(double r_max_, std::size_t n_) : r_max(r_max_), n(n_) {
    if (!(r_max >= 20.0))
        throw OutOfRange("RadialGrid: r_max must be at least 20, got " +
                         std::to_string(r_max));
    if (n < 2000)
        throw OutOfRange("RadialGrid: need at least 2000 points, got " +
                         std::to_string(n));
    h = r_max / static_cast<double>(n - 1);
}

double RadialProfile::operator()(double r) const {
    if (r < 0.0) throw OutOfRange("RadialProfile: negative radius");
    if (r > grid.r_max) {
        if (!tail) return 0.0;
        return tail->amplitude * std::pow(r, tail->power) * std::exp(-tail->rate * r);
    }
    const std::size_t n = grid.n;
    auto i = static_cast<std::size_t>(r / grid.h);
    if (i >= n - 1) i = n - 2;
    const std::size_t j = (i == 0) ? 0 : std::min(i - 1, n - 4);
    const double s = (r - grid.r(j)) / grid.h;
    const double w0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
    const double w1 = s * (s - 2) * (s - 3) / 2.0;
    const double w2 = -s * (s - 1) * (s - 3) / 2.0;
    const double w3 = s * (s - 1) * (s - 2) / 6.0;
    return w0 * values[j] + w1 * values[j + 1] + w2 * values[j + 2] + w3 * values[j + 3];
}

ShotOutcome classify_shot(double a, double r_stop) {
    Dp45 stepper;
    double r = 0.0;
    State y{a, 0.0};
    while (r < r_stop) {
        stepper.integrate_to(r, y, std::min(r + 0.05, r_stop));
        if (y.u <= 0.0) return ShotOutcome::Crosses;
        if (y.w > 0.0 && y.u > 0.05) return ShotOutcome::Rebounds;
    }
    if (y.u > 0.05) return ShotOutcome::Rebounds;
    return y.w > 0.0 ? ShotOutcome::Rebounds : ShotOutcome::Crosses;
}

double shoot_peak(double lo, double hi, double tol) {
    if (lo > hi) std::swap(lo, hi);
    const ShotOutcome clo = classify_shot(lo);
    const ShotOutcome chi = classify_shot(hi);
    if (clo == chi)
        throw NoBracket("shoot_peak: [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "] does not bracket the decaying height");
    // The dichotomy is monotone, so the rebounding side is always the lower one.
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (classify_shot(mid) == ShotOutcome::Rebounds)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

GroundState ground_state(const RadialGrid& grid, double shoot_tol) {
    const double a = shoot_peak(1.0, 10.0, shoot_tol);

    // Sample the shot trajectory on the grid up to r_switch, then continue
    // with the decay law fitted from the trajectory itself. The switch keeps
    // the exponentially unstable shot away from the region where rounding in
    // the bisected height would be amplified.
    const double r_switch = 12.0;
    std::vector<double> U(grid.n, 0.0);
    U[0] = a;
    Dp45 stepper;
    double r = 0.0;
    State y{a, 0.0};
    std::size_t i_switch = 0;
    double amp_sum = 0.0;
    std::size_t amp_count = 0;
    for (std::size_t i = 1; i < grid.n && grid.r(i) <= r_switch; ++i) {
        stepper.integrate_to(r, y, grid.r(i));
        U[i] = y.u;
        i_switch = i;
        const double ri = grid.r(i);
        if (ri >= 9.0 && ri <= 11.0) {
            amp_sum += y.u * ri * std::exp(ri);
            ++amp_count;
        }
    }
    const double amp = amp_sum / static_cast<double>(amp_count);
    for (std::size_t i = i_switch + 1; i < grid.n; ++i) {
        const double ri = grid.r(i);
        U[i] = amp * std::exp(-ri) / ri;
    }

    // Newton polish of the discrete equation. The outflow rate matches the
    // next correction of the decay law, (e^{-r}/r)'/(e^{-r}/r) = -(1 + 1/r).
    const double beta_gs = 1.0 + 1.0 / grid.r_max;
    const std::vector<double> zero_v(grid.n, 0.0);
    auto residual = [&](const std::vector<double>& u) {
        std::vector<double> f = apply_operator(grid, zero_v, u, beta_gs);
        for (std::size_t i = 0; i < grid.n; ++i) f[i] -= u[i] * u[i] * u[i];
        return f;
    };

    std::vector<double> best = U;
    double best_sup = sup_norm(residual(U));
    double prev_sup = best_sup;
    for (int iter = 0; iter < 30; ++iter) {
        std::vector<double> f = residual(U);
        const double s = sup_norm(f);
        if (s < best_sup) {
            best_sup = s;
            best = U;
        }
        if (s <= shoot_tol) break;
        if (iter >= 3 && s >= 0.5 * prev_sup) break;  // rounding floor reached
        prev_sup = s;
        std::vector<double> V(grid.n);
        for (std::size_t i = 0; i < grid.n; ++i) V[i] = 3.0 * U[i] * U[i];
        for (double& x : f) x = -x;
        const std::vector<double> delta = solve_radial_linear(grid, V, f, beta_gs);
        for (std::size_t i = 0; i < grid.n; ++i) U[i] += delta[i];
    }
    if (best_sup > 1e-8)
        throw GridTooCoarse("ground_state: discrete residual " +
                            std::to_string(best_sup) + " exceeds 1e-8");

    RadialProfile profile(grid, std::move(best));
    profile.tail = fit_far_field(grid, profile.values, 0.4 * grid.r_max, 0.7 * grid.r_max);
    return GroundState{std::move(profile), a, best_sup};
}

std::vector<double> solve_radial_linear(const RadialGrid& grid,
                                        const std::vector<double>& V,
                                        const std::vector<double>& rhs,
                                        double beta) {
    const std::size_t n = grid.n;
    if (V.size() != n || rhs.size() != n)
        throw OutOfRange("solve_radial_linear: vector length does not match grid");
    const double h = grid.h;
    const double ih2 = 1.0 / (h * h);

    std::vector<double> dl(n - 1), d(n), du(n - 1), b = rhs;
    d[0] = 6.0 * ih2 + 1.0 - V[0];
    du[0] = -6.0 * ih2;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ri = grid.r(i);
        dl[i - 1] = -ih2 + 1.0 / (ri * h);
        d[i] = 2.0 * ih2 + 1.0 - V[i];
        du[i] = -ih2 - 1.0 / (ri * h);
    }
    {
        const std::size_t i = n - 1;
        const double ri = grid.r(i);
        dl[i - 1] = -2.0 * ih2;
        d[i] = 2.0 * beta / h + 2.0 * ih2 + 2.0 * beta / ri + 1.0 - V[i];
    }

    const auto ln = static_cast<lapack_int>(n);
    const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, ln, 1, dl.data(), d.data(),
                                          du.data(), b.data(), ln);
    if (info != 0)
        throw SingularOperator("solve_radial_linear: dgtsv info = " +
                               std::to_string(info));
    for (double x : b)
        if (!std::isfinite(x))
            throw SingularOperator("solve_radial_linear: non-finite solution");
    return b;
}

std::vector<double> apply_operator(const RadialGrid& grid,
                                   const std::vector<double>& V,
                                   const std::vector<double>& phi,
                                   double beta) {
    const std::size_t n = grid.n;
    if (V.size() != n || phi.size() != n)
        throw OutOfRange("apply_operator: vector length does not match grid");
    const double h = grid.h;
    const double ih2 = 1.0 / (h * h);

    std::vector<double> out(n);
    out[0] = 6.0 * ih2 * (phi[0] - phi[1]) + (1.0 - V[0]) * phi[0];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ri = grid.r(i);
        out[i] = (-ih2 + 1.0 / (ri * h)) * phi[i - 1] +
                 (2.0 * ih2 + 1.0 - V[i]) * phi[i] +
                 (-ih2 - 1.0 / (ri * h)) * phi[i + 1];
    }
    {
        const std::size_t i = n - 1;
        const double ri = grid.r(i);
        out[i] = -2.0 * ih2 * phi[i - 1] +
                 (2.0 * beta / h + 2.0 * ih2 + 2.0 * beta / ri + 1.0 - V[i]) * phi[i];
    }
    return out;
}

FarFieldFit fit_far_field(const RadialGrid& grid, const std::vector<double>& values,
                          double r_lo, double r_hi) {
    if (values.size() != grid.n)
        throw OutOfRange("fit_far_field: vector length does not match grid");
    std::vector<double> rs, fs;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double ri = grid.r(i);
        if (ri < r_lo || ri > r_hi) continue;
        rs.push_back(ri);
        fs.push_back(values[i]);
    }
    if (rs.size() < 8)
        throw DegenerateWindow("fit_far_field: window [" + std::to_string(r_lo) + ", " +
                               std::to_string(r_hi) + "] holds only " +
                               std::to_string(rs.size()) + " points");
    return fit_decay_points(rs, fs);
}

FarFieldFit fit_decay_points(const std::vector<double>& rs,
                             const std::vector<double>& fs) {
    const std::size_t m = rs.size();
    if (m != fs.size() || m < 3)
        throw DegenerateWindow("fit_decay_points: need at least 3 matched samples");
    std::vector<double> lr(m), mr(m), ly(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (rs[k] <= 0.0 || fs[k] <= 1e-300)
            throw DegenerateWindow("fit_decay_points: non-positive sample at r = " +
                                   std::to_string(rs[k]));
        lr[k] = std::log(rs[k]);
        mr[k] = -rs[k];
        ly[k] = std::log(fs[k]);
    }

    double A[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double b[3] = {0, 0, 0};
    for (std::size_t k = 0; k < m; ++k) {
        const double x[3] = {1.0, lr[k], mr[k]};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) A[i][j] += x[i] * x[j];
            b[i] += x[i] * ly[k];
        }
    }
    solve3(A, b);

    double ss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double pred = b[0] + b[1] * lr[k] + b[2] * mr[k];
        ss += (ly[k] - pred) * (ly[k] - pred);
    }
    FarFieldFit fit;
    fit.amplitude = std::exp(b[0]);
    fit.power = b[1];
    fit.rate = b[2];
    fit.rms = std::sqrt(ss / static_cast<double>(m));
    return fit;
}

double simpson(double h, const std::vector<double>& f) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (f[0] + f[1]);
    const std::size_t intervals = n - 1;
    const std::size_t main_end = (intervals % 2 == 0) ? n - 1 : n - 2;
    double s = f[0] + f[main_end];
    for (std::size_t i = 1; i < main_end; ++i) s += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
    s *= h / 3.0;
    if (intervals % 2 != 0)
        s += h * (5.0 * f[n - 1] + 8.0 * f[n - 2] - f[n - 3]) / 12.0;
    return s;
}

double norm_l2_weighted(const RadialGrid& grid, const std::vector<double>& f) {
    if (f.size() != grid.n)
        throw OutOfRange("norm_l2_weighted: vector length does not match grid");
    std::vector<double> g(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double ri = grid.r(i);
        g[i] = 4.0 * kPi * ri * ri * f[i] * f[i];
    }
    return std::sqrt(simpson(grid.h, g));
}

double integrate_radial(const RadialGrid& grid, const std::vector<double>& f) {
    if (f.size() != grid.n)
        throw OutOfRange("integrate_radial: vector length does not match grid");
    std::vector<double> g(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double ri = grid.r(i);
        g[i] = 4.0 * kPi * ri * ri * f[i];
    }
    return simpson(grid.h, g);
}

}  // namespace multibump
