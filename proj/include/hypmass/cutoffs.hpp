#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "flow.hpp"
#include "hypgeom.hpp"
#include "massfun.hpp"
#include "metrics.hpp"

namespace hypmass {

// ---------------------------------------------------------------------------
// time-dependent cutoff: backward heat equation with potential, solved forward in tau = theta - t

struct CutoffOptions {
    int levels = 512;          // stored time levels per theta
    double hx = 1e-3;          // spacing in ln s
    double lo_factor = 0.6;    // grid [lo_factor r, hi_factor r], Dirichlet at both ends
    double hi_factor = 1.6;
    double blend_lo = 0.8;     // potential is 2n-3 below blend_lo r, the formula above blend_hi r
    double blend_hi = 0.9;
};

// admissible theta for a cutoff with support (a, b)
inline double cutoff_theta_limit(const CutoffFunction& phi, int n) {
    const double d = phi.d_ab();
    return 2 * d * d / n;
}

inline double cutoff_potential_formula(int n, double s) {
    return 2 * n - 2 + (n - 1) / (s * s) - 2 / (1 + s * s);
}

inline double cutoff_potential(int n, double s, double r, const CutoffOptions& opt = {}) {
    const double lo = opt.blend_lo * r, hi = opt.blend_hi * r;
    if (s >= hi) return cutoff_potential_formula(n, s);
    if (s <= lo) return 2 * n - 3;
    const double z = (s - lo) / (hi - lo);
    const double sig = 0.5 * (1 - std::cos(pi * z));
    return sig * cutoff_potential_formula(n, s) + (1 - sig) * (2 * n - 3);
}

// Lap(1/s) in closed form
inline double inverse_radius_laplacian(int n, double s) {
    return (2.0 - n) / s + (3.0 - n) / (s * s * s);
}

struct CutoffProfile {
    int n = 3;
    double r = 0, theta = 0;
    CutoffFunction phi;
    CutoffOptions options;
    RadialGrid grid;                           // log grid
    std::vector<double> times;                 // ascending, times.front() = 0, times.back() = theta
    std::vector<std::vector<double>> phi1;     // [level][node]
    std::vector<double> f;                     // potential at the nodes
    int substeps = 1;                          // solver steps between stored levels

    std::size_t levels() const { return times.size(); }
    double v0(std::size_t i) const { return static_potential(grid[i]); }
    // V0 phi1
    double lifted(std::size_t j, std::size_t i) const { return v0(i) * phi1[j][i]; }
    // (1 + l^2 r^2)^-1 lifted(l r) at l = s_i / r
    double normalized(std::size_t j, std::size_t i) const {
        const double s = grid[i];
        return lifted(j, i) / (1 + s * s);
    }
    std::vector<double> lifted_level(std::size_t j) const {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = lifted(j, i);
        return v;
    }
    std::vector<double> normalized_level(std::size_t j) const {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = normalized(j, i);
        return v;
    }
    std::size_t level_of(double t, double tol = 1e-9) const {
        const double pos = t / theta * (levels() - 1);
        const double j = std::round(pos);
        if (std::abs(pos - j) > tol * (levels() - 1) || j < 0 || j > levels() - 1)
            throw DomainError("cutoff: time " + io::format_double(t) + " is not a stored level of theta = " +
                              io::format_double(theta));
        return static_cast<std::size_t>(j);
    }
    // r * int_{0.9}^{1.1} varphi_theta(l, t) dl
    double normalizer(std::size_t j) const;
};

namespace detail {
// Thomas solve of a tridiagonal system; sub[0] and sup[N-1] are ignored
inline void thomas(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup, std::vector<double>& rhs) {
    const std::size_t N = diag.size();
    for (std::size_t i = 1; i < N; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[N - 1] /= diag[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

inline double level_integral(const RadialGrid& g, const std::vector<double>& u, double lo, double hi) {
    SampledProfile p(g, u, Regularity::C2);
    return integrate([&](double s) { return p(s).v; }, lo, hi, {}, 1e-12);
}
}  // namespace detail

inline double CutoffProfile::normalizer(std::size_t j) const {
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = phi1[j][i] / v0(i);
    return detail::level_integral(grid, w, 0.9 * r, 1.1 * r);
}

inline CutoffProfile solve_cutoff(const CutoffFunction& phi, double r, double theta, int n, const CutoffOptions& opt = {}) {
    if (n < 3) throw DomainError("solve_cutoff: dimension must be at least 3");
    if (!phi.compact) throw DomainError("solve_cutoff: cutoff must have compact support in (0.9, 1.1)");
    const double limit = cutoff_theta_limit(phi, n);
    if (!(theta > 0 && theta < limit))
        throw DomainError("solve_cutoff: theta = " + io::format_double(theta) + " outside (0, 2 d_ab^2 / n) = (0, " +
                          io::format_double(limit) + ")");
    if (!(r > std::sqrt(n - 1.0) / 0.9))
        throw DomainError("solve_cutoff: r = " + io::format_double(r) + " must exceed sqrt(n-1)/0.9");
    if (opt.levels < 8) throw DomainError("solve_cutoff: need at least 8 time levels");
    if (!(opt.lo_factor < opt.blend_lo && opt.blend_lo < opt.blend_hi && opt.blend_hi <= 0.9 && opt.hi_factor > 1.1))
        throw DomainError("solve_cutoff: grid must contain the blend zone and the annulus");

    CutoffProfile P;
    P.n = n;
    P.r = r;
    P.theta = theta;
    P.phi = phi;
    P.options = opt;
    P.grid = RadialGrid::log_step(n, opt.lo_factor * r, opt.hi_factor * r, opt.hx);
    const RadialGrid& g = P.grid;
    const std::size_t N = g.size();
    const double h = g.hx();

    // Lap = k2 d_xx + c d_x in x = ln s
    std::vector<double> k2(N), c(N);
    P.f.resize(N);
    double rate = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const double s = g[i];
        k2[i] = (1 + s * s) / (s * s);
        c[i] = (n - 1) + (n - 2) / (s * s);
        P.f[i] = cutoff_potential(n, s, r, opt);
        if (k2[i] / h < 0.5 * std::abs(c[i]))
            throw DomainError("solve_cutoff: grid too coarse for a monotone stencil");
        rate = std::max(rate, 2 * k2[i] / (h * h) + P.f[i]);
    }
    // explicit half of Crank-Nicolson stays nonnegative for dt <= 2 / rate
    const double level_dt = theta / opt.levels;
    P.substeps = std::max(1, static_cast<int>(std::ceil(level_dt * rate / 2 * (1 + 1e-12))));
    const double dt = level_dt / P.substeps;

    std::vector<double> lo(N), md(N), up(N);
    for (std::size_t i = 0; i < N; ++i) {
        lo[i] = k2[i] / (h * h) - c[i] / (2 * h);
        up[i] = k2[i] / (h * h) + c[i] / (2 * h);
        md[i] = -2 * k2[i] / (h * h) - P.f[i];
    }
    std::vector<double> Isub(N, 0.0), Idiag(N, 1.0), Isup(N, 0.0);
    for (std::size_t i = 1; i + 1 < N; ++i) {
        Isub[i] = -0.5 * dt * lo[i];
        Idiag[i] = 1 - 0.5 * dt * md[i];
        Isup[i] = -0.5 * dt * up[i];
    }

    std::vector<double> u(N);
    for (std::size_t i = 0; i < N; ++i) u[i] = static_potential(g[i]) * phi.phi(g[i] / r);
    u.front() = u.back() = 0.0;

    std::vector<std::vector<double>> by_tau{u};
    std::vector<double> rhs(N);
    for (int j = 0; j < opt.levels; ++j) {
        for (int m = 0; m < P.substeps; ++m) {
            rhs[0] = rhs[N - 1] = 0.0;
            for (std::size_t i = 1; i + 1 < N; ++i)
                rhs[i] = u[i] + 0.5 * dt * (lo[i] * u[i - 1] + md[i] * u[i] + up[i] * u[i + 1]);
            detail::thomas(Isub, Idiag, Isup, rhs);
            u = rhs;
        }
        by_tau.push_back(u);
    }
    P.times.resize(opt.levels + 1);
    P.phi1.resize(opt.levels + 1);
    for (int j = 0; j <= opt.levels; ++j) {
        P.times[j] = theta * j / opt.levels;
        P.phi1[j] = std::move(by_tau[opt.levels - j]);
    }
    P.times.back() = theta;
    return P;
}

inline CutoffProfile solve_cutoff_eta(const CutoffFunction& phi, double r, double eta, int n, const CutoffOptions& opt = {}) {
    return solve_cutoff(phi, r, std::pow(r, -eta), n, opt);
}

// ---------------------------------------------------------------------------
// invariants of a profile

struct CutoffChecks {
    double final_data_error = 0;    // max |phi1(s, theta) - V0 phi(s/r)|
    double normalized_final_error = 0;  // max over (0.9r, 1.1r) of |varphi(l, theta) - phi(l)|
    double min_value = 0;           // min phi1 over space-time
    double max_value = 0;           // sup phi1
    double max_final = 0;           // sup of the final data
};

inline CutoffChecks check_profile(const CutoffProfile& P) {
    CutoffChecks c;
    const auto& g = P.grid;
    const std::size_t J = P.levels() - 1;
    c.min_value = P.phi1[0][0];
    for (const auto& level : P.phi1)
        for (double v : level) {
            c.min_value = std::min(c.min_value, v);
            c.max_value = std::max(c.max_value, v);
        }
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double s = g[i];
        const double want = static_potential(s) * P.phi.phi(s / P.r);
        c.max_final = std::max(c.max_final, want);
        c.final_data_error = std::max(c.final_data_error, std::abs(P.phi1[J][i] - want));
        if (s > 0.9 * P.r && s < 1.1 * P.r)
            c.normalized_final_error = std::max(c.normalized_final_error, std::abs(P.normalized(J, i) - P.phi.phi(s / P.r)));
    }
    return c;
}

// sup over t of |phi1(frac r, t)|, by cubic interpolation in s
inline double boundary_value(const CutoffProfile& P, double frac = 0.9) {
    double m = 0;
    for (const auto& level : P.phi1) m = std::max(m, std::abs(SampledProfile(P.grid, level, Regularity::C2)(frac * P.r).v));
    return m;
}

// sup |phi1|, sup |d_s phi1|, sup |d_ss phi1| over space-time
struct BoundTriplet {
    double value = 0, slope = 0, curvature = 0;
};

inline BoundTriplet bound_triplet(const CutoffProfile& P) {
    BoundTriplet b;
    for (const auto& level : P.phi1) {
        const auto d1 = P.grid.d1(level), d2 = P.grid.d2(level);
        for (std::size_t i = 2; i + 2 < level.size(); ++i) {
            b.value = std::max(b.value, std::abs(level[i]));
            b.slope = std::max(b.slope, std::abs(d1[i]));
            b.curvature = std::max(b.curvature, std::abs(d2[i]));
        }
    }
    return b;
}

// fit of sup_t |phi1(0.9 r, t)| <= C theta^{-n/2} exp(-d^2 r^2 / (c theta)) r^n over (r, theta) samples
struct BoundarySample {
    double r = 0, theta = 0, value = 0;
};

struct BoundaryFit {
    double log_C = 0, inv_c = 0;     // least-squares fit of the log model
    double c = 0;                    // 1 / inv_c, infinite if inv_c <= 0
    double envelope_log_C = 0;       // smallest log C making the bound hold at every sample with the fitted c
    double max_log_residual = 0;     // max |log value - log model|
    bool consistent = false;         // c > 0 and every sample within a decade of the fitted model
};

inline BoundaryFit fit_boundary(const std::vector<BoundarySample>& samples, int n, double d) {
    if (samples.size() < 3) throw DomainError("fit_boundary: need at least 3 samples");
    // y = log C - inv_c * x
    std::vector<double> xs, ys;
    for (const auto& b : samples) {
        if (!(b.value > 0)) throw NumericalError("fit_boundary: boundary value must be positive");
        xs.push_back(d * d * b.r * b.r / b.theta);
        ys.push_back(std::log(b.value) + 0.5 * n * std::log(b.theta) - n * std::log(b.r));
    }
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    BoundaryFit f;
    f.inv_c = -slope;
    f.log_C = (sy - slope * sx) / m;
    f.c = f.inv_c > 0 ? 1 / f.inv_c : std::numeric_limits<double>::infinity();
    f.envelope_log_C = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double res = ys[i] - (f.log_C - f.inv_c * xs[i]);
        f.max_log_residual = std::max(f.max_log_residual, std::abs(res));
        f.envelope_log_C = std::max(f.envelope_log_C, ys[i] + f.inv_c * xs[i]);
    }
    f.consistent = f.inv_c > 0 && f.max_log_residual <= std::log(10.0);
    return f;
}

// ---------------------------------------------------------------------------
// the cancellation A = B = 0 for the lifted profile phi = V0 phi1

struct CancellationReport {
    double A_residual = 0, B_residual = 0, phi_prime_pde_residual = 0;
    double phi1_pde_residual = 0;   // (d_t + Lap) phi1 - f phi1
    double scale = 0;               // max |phi'| s^-1 + |phi| s^-2 over the same set, for relative reading
    double inverse_laplacian_mismatch = 0;  // closed form Lap(1/s) against the radial Laplacian of 1/s
};

// right-hand sides the lifted profile is expected to satisfy
inline double lifted_pde_rhs(int n, double s, double phi, double dphi) {
    return 2 * s * dphi + phi * (3 * n - 4 + (n - 1) / (s * s));
}
inline double lifted_derivative_rhs(int n, double s, double phi, double dphi) {
    return dphi * (2.0 * (n - 1) + 2.0 * (n - 1) / (s * s)) - 2.0 * (n - 1) / (s * s * s) * phi;
}

struct CancellationTerms {
    double A = 0, B = 0, phi_prime_pde = 0;
};

// X = (d_t + Lap) phi and Xp = (d_t + Lap) phi' at radius s
inline CancellationTerms cancellation_terms(int n, double s, double phi, double dphi, double X, double Xp) {
    const double inv = inverse_radius_laplacian(n, s);
    const double s2 = s * s, s3 = s2 * s;
    CancellationTerms c;
    c.A = Xp + (n - 2) / s * X + phi * (2.0 * (n - 2) * (1 - n) / s + (n - 2) * inv + 2 / s3) +
          dphi * (2.0 * (1 - n) - 2.0 * (n - 2) * (1 + 1 / s2) - 2 / s2);
    c.B = -Xp + X / s + phi * (inv + 2.0 * (1 - n) / s - 2.0 * n / s3) + dphi * (2.0 * (n - 1) + 2.0 * n / s2 - 2 - 2 / s2);
    c.phi_prime_pde = Xp - lifted_derivative_rhs(n, s, phi, dphi);
    return c;
}

struct CancellationOptions {
    bool freeze_time = false;  // negative control: every level replaced by the final data
    int level_stride = 8;
};

namespace detail {
// second-order central differences in x, converted to s
struct Derivs {
    std::vector<double> d1, lap;
};

inline Derivs central2(const RadialGrid& g, const std::vector<double>& u) {
    const int n = g.dimension();
    const double h = g.hx();
    Derivs d;
    d.d1.assign(u.size(), 0.0);
    d.lap.assign(u.size(), 0.0);
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double s = g[i];
        const double ux = (u[i + 1] - u[i - 1]) / (2 * h);
        const double uxx = (u[i + 1] - 2 * u[i] + u[i - 1]) / (h * h);
        d.d1[i] = ux / s;
        const double uss = (uxx - ux) / (s * s);
        d.lap[i] = (1 + s * s) * uss + (n * s + (n - 1) / s) * d.d1[i];
    }
    return d;
}
}  // namespace detail

inline CancellationReport cancellation_residual(const CutoffProfile& P, const CancellationOptions& opt = {}) {
    const std::size_t J = P.levels();
    if (J < 9) throw DomainError("cancellation_residual: time sampling too coarse for a 4th-order time derivative");
    const auto& g = P.grid;
    const int n = P.n;
    const double dt = P.theta / (J - 1);
    auto level = [&](std::size_t j) { return opt.freeze_time ? P.lifted_level(J - 1) : P.lifted_level(j); };
    auto level1 = [&](std::size_t j) { return opt.freeze_time ? P.phi1[J - 1] : P.phi1[j]; };

    std::vector<std::size_t> idx;
    for (std::size_t i = 2; i + 2 < g.size(); ++i)
        if (g[i] >= 0.9 * P.r && g[i] <= 1.1 * P.r) idx.push_back(i);

    CancellationReport rep;
    for (std::size_t i : idx) {
        const double s = g[i];
        const Jet inv{1 / s, -1 / (s * s), 2 / (s * s * s)};
        const double m = std::abs(laplacian(n, s, inv) - inverse_radius_laplacian(n, s)) / std::abs(inverse_radius_laplacian(n, s));
        rep.inverse_laplacian_mismatch = std::max(rep.inverse_laplacian_mismatch, m);
    }

    const int stride = std::max(1, opt.level_stride);
    for (std::size_t j = 2; j + 2 < J; j += stride) {
        std::vector<std::vector<double>> u, u1, up;
        for (int k = -2; k <= 2; ++k) {
            u.push_back(level(j + k));
            u1.push_back(level1(j + k));
            up.push_back(detail::central2(g, u.back()).d1);
        }
        auto ddt = [&](const std::vector<std::vector<double>>& v, std::size_t i) {
            return (-v[4][i] + 8 * v[3][i] - 8 * v[1][i] + v[0][i]) / (12 * dt);
        };
        const auto D = detail::central2(g, u[2]);
        const auto Dp = detail::central2(g, up[2]);
        const auto D1 = detail::central2(g, u1[2]);
        for (std::size_t i : idx) {
            const double s = g[i];
            const double phi = u[2][i], dphi = D.d1[i];
            const double X = ddt(u, i) + D.lap[i];       // (d_t + Lap) phi
            const double Xp = ddt(up, i) + Dp.lap[i];    // (d_t + Lap) phi'
            const auto c = cancellation_terms(n, s, phi, dphi, X, Xp);
            const double P1 = ddt(u1, i) + D1.lap[i] - P.f[i] * u1[2][i];
            rep.A_residual = std::max(rep.A_residual, std::abs(c.A));
            rep.B_residual = std::max(rep.B_residual, std::abs(c.B));
            rep.phi_prime_pde_residual = std::max(rep.phi_prime_pde_residual, std::abs(c.phi_prime_pde));
            rep.phi1_pde_residual = std::max(rep.phi1_pde_residual, std::abs(P1));
            rep.scale = std::max(rep.scale, std::abs(dphi) / s + std::abs(phi) / (s * s));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// mass drift along a flow with the time-dependent cutoff

enum class CutoffWeight {
    Verbatim,  // w = varphi_theta(s/r, t) = phi1 / V0, the weight of the unlifted functional
    Lifted     // w = V0 varphi_theta(s/r, t) = phi1, the weight of mass_c0
};

inline const char* to_string(CutoffWeight w) { return w == CutoffWeight::Verbatim ? "verbatim" : "lifted"; }

// raw functional (mass times normalizer) at level j of the profile
inline double cutoff_functional(const RadialPerturbation& e, const CutoffProfile& P, std::size_t j, CutoffWeight weight) {
    if (e.n != P.n) throw DomainError("cutoff functional: dimension mismatch");
    std::vector<double> w(P.grid.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = weight == CutoffWeight::Lifted ? P.phi1[j][i] : P.phi1[j][i] / P.v0(i);
    SampledProfile sw(P.grid, std::move(w), Regularity::C2);
    std::vector<double> knots;
    for (double s : P.grid.nodes())
        if (s > 0.9 * P.r && s < 1.1 * P.r) knots.push_back(s);
    return weighted_terms(e, P.r, [&](double s) { return sw(s).v; }, [&](double s) { return sw(s).d1; }, knots).total();
}

inline double cutoff_mass(const RadialPerturbation& e, const CutoffProfile& P, std::size_t j, CutoffWeight weight) {
    return cutoff_functional(e, P, j, weight) / P.normalizer(j);
}

struct DriftReport {
    double r = 0, theta = 0;
    CutoffWeight weight = CutoffWeight::Verbatim;
    std::vector<double> times, functional, mass;
    double drift = 0;             // int |d/dt (mass * normalizer)| dt
    double normalized_drift = 0;  // int |d/dt mass| dt
};

namespace detail {
// three-point derivative on a nonuniform grid, one-sided at the ends
inline std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t K = t.size();
    std::vector<double> d(K);
    auto three = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
        const double x = t[at];
        const double wa = (2 * x - t[b] - t[c]) / ((t[a] - t[b]) * (t[a] - t[c]));
        const double wb = (2 * x - t[a] - t[c]) / ((t[b] - t[a]) * (t[b] - t[c]));
        const double wc = (2 * x - t[a] - t[b]) / ((t[c] - t[a]) * (t[c] - t[b]));
        return wa * y[a] + wb * y[b] + wc * y[c];
    };
    d[0] = three(0, 1, 2, 0);
    for (std::size_t k = 1; k + 1 < K; ++k) d[k] = three(k - 1, k, k + 1, k);
    d[K - 1] = three(K - 3, K - 2, K - 1, K - 1);
    return d;
}

inline double trapezoid_abs(const std::vector<double>& t, const std::vector<double>& y) {
    double s = 0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) s += 0.5 * (t[k + 1] - t[k]) * (std::abs(y[k]) + std::abs(y[k + 1]));
    return s;
}
}  // namespace detail

inline DriftReport mass_drift(const FlowHistory& H, const CutoffProfile& P, CutoffWeight weight = CutoffWeight::Verbatim) {
    if (H.dimension() != P.n) throw DomainError("mass_drift: dimension mismatch");
    DriftReport d;
    d.r = P.r;
    d.theta = P.theta;
    d.weight = weight;
    for (std::size_t k = 0; k < H.states.size(); ++k) {
        const double t = H.states[k].t;
        if (t > P.theta * (1 + 1e-12)) break;
        const std::size_t j = P.level_of(t);
        const auto e = H.perturbation(k);
        d.times.push_back(t);
        d.functional.push_back(cutoff_functional(e, P, j, weight));
        d.mass.push_back(d.functional.back() / P.normalizer(j));
    }
    if (d.times.size() < 3 || std::abs(d.times.back() - P.theta) > 1e-9 * P.theta)
        throw DomainError("mass_drift: flow snapshots must cover [0, theta] with at least 3 samples");
    d.drift = detail::trapezoid_abs(d.times, detail::time_derivative(d.times, d.functional));
    d.normalized_drift = detail::trapezoid_abs(d.times, detail::time_derivative(d.times, d.mass));
    return d;
}

// every stride-th level of the profile, as flow output times (t = 0 excluded)
inline std::vector<double> drift_times(const CutoffProfile& P, int stride) {
    std::vector<double> t;
    for (std::size_t j = stride; j < P.levels(); j += stride) t.push_back(P.times[j]);
    if (t.empty() || t.back() != P.theta) t.push_back(P.theta);
    return t;
}

// ---------------------------------------------------------------------------
// gap between the t = 0 cutoff masses at two radii

struct TwoRadiusGap {
    double r = 0, rprime = 0, eta = 0, theta = 0, theta_prime = 0;
    double mass_r = 0, mass_rprime = 0, gap = 0;
};

inline TwoRadiusGap two_radius_gap(const RadialPerturbation& e0, const CutoffFunction& phi, const CutoffFunction& phibar,
                                   double r, double rprime, double eta, CutoffWeight weight = CutoffWeight::Lifted,
                                   double horizon = 0.05, const CutoffOptions& opt = {}) {
    const double tau = e0.tau;
    if (!(rprime >= 1.1 / 0.9 * r * (1 - 1e-12) && rprime <= 10 * r))
        throw DomainError("two_radius_gap: r' must lie in [(1.1/0.9) r, 10 r]");
    if (std::isfinite(tau) && !(eta >= 0.5 * (tau - 1) && eta < 2 * tau - e0.n))
        throw DomainError("two_radius_gap: eta = " + io::format_double(eta) + " outside [(tau-1)/2, 2 tau - n)");
    TwoRadiusGap g;
    g.r = r;
    g.rprime = rprime;
    g.eta = eta;
    g.theta = std::pow(r, -eta);
    g.theta_prime = std::pow(rprime, -eta);
    if (!(g.theta < horizon)) throw DomainError("two_radius_gap: r^-eta must be below the flow horizon");
    const auto P = solve_cutoff(phi, r, g.theta, e0.n, opt);
    const auto Q = solve_cutoff(phibar, rprime, g.theta_prime, e0.n, opt);
    g.mass_r = cutoff_mass(e0, P, 0, weight);
    g.mass_rprime = cutoff_mass(e0, Q, 0, weight);
    g.gap = g.mass_rprime - g.mass_r;
    return g;
}

}  // namespace hypmass
