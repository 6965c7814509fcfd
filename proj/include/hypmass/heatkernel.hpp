#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "core.hpp"
#include "hypgeom.hpp"

namespace hypmass {

// ---------------------------------------------------------------------------
// radial heat kernel of b, source at the origin

struct KernelOptions {
    double cells_per_width = 8;   // geodesic cells per source width
    double trusted_factor = 4;    // samples with t >= trusted_factor * sigma0^2 are trusted
    // backward Euler step budget: relative error about tail_tolerance in the Gaussian tail at
    // (tail_distance, tail_time), where the dominant decay rate is (d / 2t)^2
    double tail_distance = 3.0, tail_time = 0.05, tail_tolerance = 5e-3;
    double max_step_ratio = 2e-3;  // dt <= max_step_ratio * t
    double ladder = 1.05;          // step sizes are floor * ladder^k so factorizations are reused
};

struct KernelRun {
    int n = 3;
    double sigma0 = 0, h = 0;
    KernelOptions options;
    std::vector<double> d;               // cell centres in geodesic distance
    std::vector<double> volume;          // b-volume of each cell
    std::vector<double> times;
    std::vector<std::vector<double>> K;  // [time][cell]
    std::vector<double> mass;            // sum volume * K
    long steps = 0;

    double trusted_time() const { return options.trusted_factor * sigma0 * sigma0; }
    double sup(std::size_t k) const { return *std::max_element(K[k].begin(), K[k].end()); }
    // b-mass outside the geodesic ball of radius r, with linear interpolation of the cumulative mass
    double tail(std::size_t k, double r) const;
};

// source age: the Gaussian of width sigma0 matches the kernel at t = sigma0^2 / 2
inline double source_age(double sigma0) { return 0.5 * sigma0 * sigma0; }

// (4 pi t)^{-3/2} e^{-t} (d / sinh d) e^{-d^2/(4t)}
inline double hyperbolic3_kernel(double d, double t) {
    const double ratio = d < 1e-8 ? 1.0 : d / std::sinh(d);
    return std::pow(4 * pi * t, -1.5) * std::exp(-t) * ratio * std::exp(-d * d / (4 * t));
}

namespace detail {
struct KernelGrid {
    double h = 0;
    std::vector<double> d, volume, face;  // face[i] = area of the sphere at i h
};

inline KernelGrid kernel_grid(int n, double h, std::size_t N) {
    const double om = sphere_volume(n);
    KernelGrid g;
    g.h = h;
    g.d.resize(N);
    g.volume.resize(N);
    g.face.resize(N + 1);
    using Gauss = boost::math::quadrature::gauss<double, 7>;
    for (std::size_t i = 0; i < N; ++i) {
        g.d[i] = (i + 0.5) * h;
        g.volume[i] = om * Gauss::integrate([n](double x) { return std::pow(std::sinh(x), n - 1); }, i * h, (i + 1) * h);
    }
    for (std::size_t i = 0; i <= N; ++i) g.face[i] = om * std::pow(std::sinh(i * h), n - 1);
    g.face[N] = 0.0;  // no flux through the outer wall
    return g;
}

// backward Euler for V du/dt = div flux with a fixed dt; M-matrix, so positivity and mass are kept
class KernelStepper {
public:
    KernelStepper(const KernelGrid& g, double dt) : g_(&g), sup_(g.d.size()), inv_(g.d.size()), mult_(g.d.size()) {
        const std::size_t N = g.d.size();
        const double h = g.h;
        std::vector<double> sub(N), diag(N);
        for (std::size_t i = 0; i < N; ++i) {
            const double w = g.face[i] / h, e = g.face[i + 1] / h;
            sub[i] = -dt * w;
            sup_[i] = -dt * e;
            diag[i] = g.volume[i] + dt * (w + e);
        }
        inv_[0] = 1 / diag[0];
        for (std::size_t i = 1; i < N; ++i) {
            mult_[i] = sub[i] * inv_[i - 1];
            inv_[i] = 1 / (diag[i] - mult_[i] * sup_[i - 1]);
        }
    }
    void step(std::vector<double>& u) const {
        const std::size_t N = u.size();
        const auto& V = g_->volume;
        u[0] *= V[0];
        for (std::size_t i = 1; i < N; ++i) u[i] = V[i] * u[i] - mult_[i] * u[i - 1];
        u[N - 1] *= inv_[N - 1];
        for (std::size_t i = N - 1; i-- > 0;) u[i] = (u[i] - sup_[i] * u[i + 1]) * inv_[i];
    }

private:
    const KernelGrid* g_;
    std::vector<double> sup_, inv_, mult_;
};

inline double kernel_mass(const KernelGrid& g, const std::vector<double>& u) {
    double m = 0;
    for (std::size_t i = 0; i < u.size(); ++i) m += g.volume[i] * u[i];
    return m;
}

struct StepBudget {
    double floor = 0, kappa = 0, ratio = 0, ladder = 1.05;
    double at(double elapsed) const {
        const double want = std::min(std::max(floor, kappa * std::pow(elapsed, 4)), std::max(floor, ratio * elapsed));
        const double k = std::floor(std::log(want / floor) / std::log(ladder) + 1e-9);
        return floor * std::pow(ladder, std::max(0.0, k));
    }
};

inline StepBudget step_budget(const KernelOptions& opt) {
    const double T = opt.tail_time, lam = std::pow(opt.tail_distance / (2 * T), 2);
    StepBudget b;
    b.floor = 2 * opt.tail_tolerance / (lam * lam * T);
    b.kappa = b.floor / std::pow(T, 4);
    b.ratio = opt.max_step_ratio;
    b.ladder = opt.ladder;
    return b;
}

// evolve u from t0 to each of the (ascending) output times; steps follow the time elapsed since t0
inline std::vector<std::vector<double>> kernel_evolve(const KernelGrid& g, std::vector<double> u, double t0,
                                                      const std::vector<double>& outputs, const StepBudget& budget,
                                                      long& steps) {
    std::vector<std::vector<double>> out;
    std::vector<std::pair<double, std::shared_ptr<KernelStepper>>> cache;
    auto stepper = [&](double dt) {
        for (auto& [key, st] : cache)
            if (key == dt) return st;
        if (cache.size() > 4) cache.erase(cache.begin());
        cache.emplace_back(dt, std::make_shared<KernelStepper>(g, dt));
        return cache.back().second;
    };
    double t = t0;
    for (double target : outputs) {
        while (t < target * (1 - 1e-14)) {
            double dt = budget.at(t - t0);
            if (t + dt > target * (1 - 1e-14)) dt = target - t;
            stepper(dt)->step(u);
            t += dt;
            ++steps;
        }
        t = target;
        out.push_back(u);
    }
    return out;
}
}  // namespace detail

inline KernelRun solve_kernel(int n, const std::vector<double>& times, double sigma0 = 1e-2, const KernelOptions& opt = {},
                              double d_max = 0) {
    if (n < 2) throw DomainError("solve_kernel: dimension must be at least 2");
    if (!(sigma0 > 0 && sigma0 <= 0.1)) throw DomainError("solve_kernel: source width must lie in (0, 0.1]");
    if (opt.cells_per_width < 8) throw DomainError("solve_kernel: source under-resolved, need >= 8 cells per width");
    if (times.empty()) throw DomainError("solve_kernel: no output times");
    for (std::size_t k = 0; k < times.size(); ++k)
        if (!(times[k] > 0) || (k > 0 && !(times[k] > times[k - 1])))
            throw DomainError("solve_kernel: output times must be positive and increasing");
    const double t_max = times.back();
    if (d_max <= 0) d_max = (n - 1) * t_max + 12 * std::sqrt(t_max) + 1;

    KernelRun run;
    run.n = n;
    run.sigma0 = sigma0;
    run.options = opt;
    run.h = sigma0 / opt.cells_per_width;
    const auto g = detail::kernel_grid(n, run.h, static_cast<std::size_t>(std::ceil(d_max / run.h)));
    run.d = g.d;
    run.volume = g.volume;

    std::vector<double> u(g.d.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(-g.d[i] * g.d[i] / (2 * sigma0 * sigma0));
    const double m0 = detail::kernel_mass(g, u);
    for (double& v : u) v /= m0;

    run.times = times;
    run.K = detail::kernel_evolve(g, u, 0.0, times, detail::step_budget(opt), run.steps);
    for (const auto& k : run.K) run.mass.push_back(detail::kernel_mass(g, k));
    return run;
}

inline double KernelRun::tail(std::size_t k, double r) const {
    double total = 0;
    for (std::size_t i = 0; i < d.size(); ++i) total += volume[i] * K[k][i];
    double inside = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double lo = i * h, hi = (i + 1) * h;
        if (hi <= r) inside += volume[i] * K[k][i];
        else {
            if (lo < r) inside += volume[i] * K[k][i] * (r - lo) / h;
            break;
        }
    }
    return total - inside;
}

// continue from the slice at index k for an extra duration
inline std::vector<double> kernel_continue(const KernelRun& run, std::size_t k, double duration) {
    const auto g = detail::kernel_grid(run.n, run.h, run.d.size());
    long steps = 0;
    const double t0 = run.times.at(k);
    return detail::kernel_evolve(g, run.K[k], t0, {t0 + duration}, detail::step_budget(run.options), steps).front();
}

// ---------------------------------------------------------------------------
// Gaussian upper bound K <= C t^{-n/2} exp(-d^2/(D t))

struct TailCheck {
    double t = 0, r = 0;
    double tail = 0;       // b-mass outside B(0, r)
    double bound = 0;      // the pointwise bound integrated over the same region
    double gaussian = 0;   // C_tail exp(-r^2/(D t))
    bool holds = false;
};

struct GaussianFit {
    double C = 0, D = 0;
    double on_diagonal = 0;   // sup_t K(0, t) t^{n/2}
    double C_tail = 0;        // smallest C with tail <= C exp(-r^2/(D t)) over the checks
    std::size_t samples = 0;
    std::vector<TailCheck> tails;
};

struct GaussianFitOptions {
    double D_min = 1.0, D_max = 16.0, D_step = 0.01;
    double prefactor_slack = 2.0;   // accepted C is at most this times the on-diagonal constant
    double relative_floor = 1e-12;  // samples below this fraction of K(0, t) are skipped
    std::vector<double> tail_radii{1, 2, 3, 4, 5};  // in units of sqrt(t)
};

inline double gaussian_bound_tail(int n, double C, double D, double t, double r) {
    const double om = sphere_volume(n);
    const double hi = r + 40 * std::sqrt(D * t) + 1;
    return C * std::pow(t, -0.5 * n) * om *
           integrate([&](double x) { return std::exp(-x * x / (D * t)) * std::pow(std::sinh(x), n - 1); }, r, hi, {}, 1e-10);
}

inline GaussianFit gaussian_bound_fit(const KernelRun& run, const GaussianFitOptions& opt = {}) {
    const int n = run.n;
    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k < run.times.size(); ++k)
        if (run.times[k] >= run.trusted_time()) ks.push_back(k);
    if (ks.size() < 2 || run.times[ks.back()] < 10 * run.times[ks.front()] * (1 - 1e-12))
        throw DomainError("gaussian_bound_fit: trusted samples must span at least one decade of t");

    GaussianFit fit;
    struct Sample {
        double logv, x;  // log(K t^{n/2}), d^2 / t
    };
    std::vector<Sample> S;
    for (std::size_t k : ks) {
        const double t = run.times[k];
        const double k0 = run.K[k][0];
        fit.on_diagonal = std::max(fit.on_diagonal, k0 * std::pow(t, 0.5 * n));
        for (std::size_t i = 0; i < run.d.size(); ++i) {
            const double v = run.K[k][i];
            if (!(v > opt.relative_floor * k0)) continue;
            S.push_back({std::log(v) + 0.5 * n * std::log(t), run.d[i] * run.d[i] / t});
        }
    }
    fit.samples = S.size();
    auto C_of = [&](double D) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& s : S) m = std::max(m, s.logv + s.x / D);
        return std::exp(m);
    };
    const double cap = opt.prefactor_slack * fit.on_diagonal;
    for (double D = opt.D_min; D <= opt.D_max + 1e-12; D += opt.D_step) {
        const double C = C_of(D);
        if (C <= cap) {
            fit.C = C;
            fit.D = D;
            break;
        }
    }
    if (fit.D == 0) throw NumericalError("gaussian_bound_fit: no feasible (C, D) on the candidate grid");

    for (std::size_t k : ks) {
        const double t = run.times[k];
        for (double a : opt.tail_radii) {
            TailCheck c;
            c.t = t;
            c.r = a * std::sqrt(t);
            c.tail = run.tail(k, c.r);
            c.bound = gaussian_bound_tail(n, fit.C, fit.D, t, c.r);
            c.holds = c.tail <= c.bound;
            fit.C_tail = std::max(fit.C_tail, c.tail * std::exp(c.r * c.r / (fit.D * t)));
            fit.tails.push_back(c);
        }
    }
    for (auto& c : fit.tails) c.gaussian = fit.C_tail * std::exp(-c.r * c.r / (fit.D * c.t));
    return fit;
}

// ---------------------------------------------------------------------------
// rescaled kernel along the flow launched at b: the unnormalized flow is (1 + 2(n-1)t) b, so the
// kernel in unnormalized time is the b-kernel at elapsed normalized time tbar - sbar

struct RescaledIdentity {
    double lhs = 0, rhs = 0, error = 0;  // error is relative
};

inline RescaledIdentity rescaled_kernel_identity(int n, double tbar, double sbar, double sigma0 = 1e-2,
                                                 const KernelOptions& opt = {}) {
    if (!(tbar > sbar)) throw DomainError("rescaled_kernel_identity: need tbar > sbar");
    if (sbar < 0) throw DomainError("rescaled_kernel_identity: sbar must be nonnegative");
    const double elapsed = tbar - sbar;
    const auto run = solve_kernel(n, {elapsed}, sigma0, opt);
    if (elapsed < run.trusted_time())
        throw DomainError("rescaled_kernel_identity: elapsed time below the trusted window of the source");
    // K(x, t; y, s) = e^{-n(n-1) sbar} K_b(elapsed) against d mu_{gbar(s)}; g(sbar) = b for this family
    const double K_mass_b = run.mass.front() * std::exp(-n * (n - 1.0) * sbar);
    RescaledIdentity r;
    r.lhs = std::exp(2 * (n - 1.0) * elapsed) * K_mass_b;
    r.rhs = std::exp(2 * (n - 1.0) * elapsed - n * (n - 1.0) * sbar);
    r.error = std::abs(r.lhs - r.rhs) / r.rhs;
    return r;
}

}  // namespace hypmass
