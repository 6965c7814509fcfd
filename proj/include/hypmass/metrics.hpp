#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "core.hpp"
#include "hypgeom.hpp"
#include "io/csv.hpp"

namespace hypmass {

// value and first two s-derivatives of f at s via forward-mode autodiff
template <class F>
Jet autodiff_jet(F&& f, double s) {
    using boost::math::differentiation::make_fvar;
    auto x = make_fvar<double, 2>(s);
    auto y = f(x);
    return {static_cast<double>(y.derivative(0)), static_cast<double>(y.derivative(1)),
            static_cast<double>(y.derivative(2))};
}

using ProfileFn = std::function<Jet(double)>;

// e = g - b in the b-orthonormal radial frame: alpha = e(N,N), beta = tangential eigenvalue
struct RadialPerturbation {
    int n = 3;
    double tau = 0.0;
    Regularity regularity = Regularity::Analytic;
    std::string family = "zero";
    std::map<std::string, double> params;
    double s_lo = 0.0;
    double s_hi = std::numeric_limits<double>::infinity();
    ProfileFn alpha_fn;
    ProfileFn beta_fn;
    // points in (a,b) where the profiles fail to be smooth
    std::function<std::vector<double>(double, double)> corners_fn;

    Jet alpha(double s) const { check_range(s); return alpha_fn(s); }
    Jet beta(double s) const { check_range(s); return beta_fn(s); }
    std::vector<double> corners(double a, double b) const {
        return corners_fn ? corners_fn(a, b) : std::vector<double>{};
    }
    bool contains(double s) const { return s >= s_lo * (1 - 1e-14) && s <= s_hi * (1 + 1e-14); }
    void check_range(double s) const {
        if (!contains(s))
            throw DomainError("perturbation '" + family + "' evaluated outside its range at s = " +
                              io::format_double(s));
    }
    void require(Regularity need, const std::string& who) const {
        if (!at_least(regularity, need))
            throw RegularityError(who + ": needs a " + to_string(need) + " perturbation, got " +
                                  to_string(regularity) + " ('" + family + "'); mollify it with the flow first");
    }
};

struct PointValues {
    double alpha, beta, trace, radial_quadratic, norm_b;
};

inline PointValues evaluate(const RadialPerturbation& e, double s) {
    const double a = e.alpha(s).v, b = e.beta(s).v;
    return {a, b, a + (e.n - 1) * b, a, std::sqrt(a * a + (e.n - 1) * b * b)};
}

// representative sample points for invariant checks
inline std::vector<double> probe_points(const RadialPerturbation& e, double lo = 1e-3, double hi = 1e5,
                                        int count = 2001) {
    const double a = std::max(lo, e.s_lo), b = std::min(hi, e.s_hi);
    std::vector<double> pts;
    if (!(a < b)) return {a};
    for (int i = 0; i < count; ++i) pts.push_back(a * std::pow(b / a, double(i) / (count - 1)));
    return pts;
}

inline void check_positivity(const RadialPerturbation& e) {
    for (double s : probe_points(e)) {
        const double a = e.alpha_fn(s).v, b = e.beta_fn(s).v;
        if (!(1 + a > 0 && 1 + b > 0))
            throw DomainError("perturbation '" + e.family + "' makes g degenerate at s = " +
                              io::format_double(s) + " (amplitude too large)");
    }
}

// sup over s >= 10 of s^tau (|alpha| + |beta|)
inline double decay_constant(const RadialPerturbation& e, double s_max = 1e5) {
    double c = 0.0;
    for (double s : probe_points(e, 10.0, s_max)) {
        if (s < 10.0) continue;
        c = std::max(c, std::pow(s, e.tau) * (std::abs(e.alpha_fn(s).v) + std::abs(e.beta_fn(s).v)));
    }
    return c;
}

inline RadialPerturbation zero_perturbation(int n) {
    RadialPerturbation e;
    e.n = n;
    e.tau = std::numeric_limits<double>::infinity();
    e.alpha_fn = e.beta_fn = [](double) { return Jet{}; };
    return e;
}

inline double schwarzschild_horizon(double m, int n) {
    if (m <= 0) return 0.0;
    // root of 1 + s^2 - 2 m s^{2-n}; the left side increases in s
    auto f = [m, n](double s) { return 1 + s * s - 2 * m * std::pow(s, 2 - n); };
    double lo = 0.0, hi = 1.0;
    while (f(hi) <= 0) hi *= 2;
    lo = hi;
    while (lo > 1e-300 && f(lo) > 0) lo /= 2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? hi : lo) = mid;
    }
    return hi;
}

// s_min <= 0 picks max(0.5, 1.5 * horizon)
inline RadialPerturbation schwarzschild_ads(double m, int n, double s_min = 0.0) {
    if (m < 0) throw DomainError("schwarzschild_ads: mass must be nonnegative");
    if (n < 3) throw DomainError("schwarzschild_ads: dimension must be >= 3");
    const double horizon = schwarzschild_horizon(m, n);
    if (s_min <= 0.0) s_min = std::max(0.5, 1.5 * horizon);
    if (s_min <= horizon)
        throw DomainError("schwarzschild_ads: working domain reaches the horizon; minimal admissible s is " +
                          io::format_double(horizon));
    RadialPerturbation e;
    e.n = n;
    e.tau = n;
    e.family = "schwarzschild_ads";
    e.params = {{"m", m}, {"s_min", s_min}};
    e.s_lo = m > 0 ? s_min : 0.0;
    e.alpha_fn = [m, n](double s) {
        return autodiff_jet([m, n](auto x) {
            auto q = 2 * m * pow(x, 2 - n);
            return q / (1 + x * x - q);
        }, s);
    };
    e.beta_fn = [](double) { return Jet{}; };
    return e;
}

// e = eps * b
inline RadialPerturbation conformal(double eps, int n) {
    if (!(1 + eps > 0)) throw DomainError("conformal: 1 + eps must be positive");
    RadialPerturbation e;
    e.n = n;
    e.tau = 0.0;
    e.family = "conformal";
    e.params = {{"eps", eps}};
    e.alpha_fn = e.beta_fn = [eps](double) { return Jet{eps, 0.0, 0.0}; };
    return e;
}

// periodic piecewise-linear wave: -1 -> 1 over [0, rise), 1 -> -1 over [rise, 1)
inline double skew_triangle(double x, double rise) {
    double u = x - std::floor(x);
    return u < rise ? -1.0 + 2.0 * u / rise : 1.0 - 2.0 * (u - rise) / (1.0 - rise);
}

// alpha = A <s>^{-tau} (1 + w(s)), with w a skewed triangle in ln s / ln k, frozen for s <= 1
inline RadialPerturbation c0_kink(double amplitude, double tau, double kink_scale, int n, double rise = 0.5) {
    if (!(kink_scale > 1.0)) throw DomainError("c0_kink: kink_scale must exceed 1");
    if (!(rise > 0.0 && rise < 1.0)) throw DomainError("c0_kink: rise fraction must lie in (0,1)");
    constexpr double lambda = 0.5;
    const double lk = std::log(kink_scale);
    auto wave = [=](double s, double phase) {
        const double x = std::log(std::max(s, 1.0)) / lk + phase;
        return 1.0 + lambda * skew_triangle(x, rise);
    };
    RadialPerturbation e;
    e.n = n;
    e.tau = tau;
    e.regularity = Regularity::C0;
    e.family = "c0_kink";
    e.params = {{"amplitude", amplitude}, {"tau", tau}, {"kink_scale", kink_scale}, {"rise", rise}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    e.alpha_fn = [=](double s) { return Jet{amplitude * std::pow(1 + s * s, -0.5 * tau) * wave(s, 0.0), nan, nan}; };
    e.beta_fn = [=](double s) { return Jet{amplitude * std::pow(1 + s * s, -0.5 * tau) * wave(s, 0.25), nan, nan}; };
    e.corners_fn = [=](double a, double b) {
        std::vector<double> c;
        if (b <= 1.0) return c;
        const double xa = std::log(std::max(a, 1.0)) / lk, xb = std::log(b) / lk;
        for (double phase : {0.0, 0.25}) {
            for (double base : {0.0, rise}) {
                // corners where x + phase = k + base
                for (double k = std::floor(xa + phase) - 1; k <= xb + phase + 1; k += 1.0) {
                    const double x = k + base - phase;
                    const double s = std::exp(x * lk);
                    if (s > a && s < b && s > 1.0) c.push_back(s);
                }
            }
        }
        if (a < 1.0 && b > 1.0) c.push_back(1.0);
        std::sort(c.begin(), c.end());
        return c;
    };
    if (amplitude != 0.0) check_positivity(e);
    return e;
}

// analytic alpha = A cos(ln s) s^{-n}: the mass aspect oscillates without a limit
inline RadialPerturbation log_oscillation(double amplitude, int n, double s_min = 0.5) {
    RadialPerturbation e;
    e.n = n;
    e.tau = n;
    e.family = "log_oscillation";
    e.params = {{"amplitude", amplitude}, {"s_min", s_min}};
    e.s_lo = s_min;
    e.alpha_fn = [amplitude, n](double s) {
        return autodiff_jet([amplitude, n](auto x) { return amplitude * cos(log(x)) * pow(x, -n); }, s);
    };
    e.beta_fn = [](double) { return Jet{}; };
    check_positivity(e);
    return e;
}

// alpha = beta = A psi((ln s - ln c)/w), psi the standard smooth bump
inline RadialPerturbation c2_bump(double amplitude, double center, double width, int n) {
    RadialPerturbation e;
    e.n = n;
    e.tau = std::numeric_limits<double>::infinity();
    e.regularity = Regularity::C2;
    e.family = "c2_bump";
    e.params = {{"amplitude", amplitude}, {"center", center}, {"width", width}};
    const double lc = std::log(center);
    auto fn = [=](double s) {
        const double z = (std::log(s) - lc) / width;
        if (std::abs(z) >= 1.0) return Jet{};
        return autodiff_jet([=](auto x) {
            auto y = (log(x) - lc) / width;
            return amplitude * exp(-1.0 / (1.0 - y * y));
        }, s);
    };
    e.alpha_fn = fn;
    e.beta_fn = fn;
    check_positivity(e);
    return e;
}

inline RadialPerturbation scaled(const RadialPerturbation& e, double lambda) {
    RadialPerturbation out = e;
    auto a = e.alpha_fn, b = e.beta_fn;
    out.alpha_fn = [a, lambda](double s) { Jet j = a(s); return Jet{lambda * j.v, lambda * j.d1, lambda * j.d2}; };
    out.beta_fn = [b, lambda](double s) { Jet j = b(s); return Jet{lambda * j.v, lambda * j.d1, lambda * j.d2}; };
    out.params["scale"] = lambda * (e.params.count("scale") ? e.params.at("scale") : 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// sampled profiles on a RadialGrid

class SampledProfile {
public:
    SampledProfile(const RadialGrid& g, std::vector<double> values, Regularity reg)
        : spacing_(g.spacing()), x0_(g.x0()), hx_(g.hx()), values_(std::move(values)), reg_(reg) {
        g.check_size(values_);
        if (at_least(reg, Regularity::C1))
            spline_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
                values_.begin(), values_.end(), x0_, hx_);
    }

    Jet operator()(double s) const {
        const double x = to_x(s);
        if (!spline_) {
            const double pos = (x - x0_) / hx_;
            const std::size_t last = values_.size() - 1;
            std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, double(last - 1)));
            double f = std::clamp(pos - double(i), 0.0, 1.0);
            if (f < 1e-9) f = 0.0;
            else if (f > 1.0 - 1e-9) f = 1.0;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            return {values_[i] * (1 - f) + values_[i + 1] * f, nan, nan};
        }
        const double ux = spline_->prime(x), uxx = spline_->double_prime(x);
        double sx = 1, sxx = 0;
        if (spacing_ == Spacing::Log) { sx = sxx = s; }
        else if (spacing_ == Spacing::Geodesic) { sx = std::cosh(x); sxx = std::sinh(x); }
        const double us = ux / sx;
        return {(*spline_)(x), us, (uxx - sxx * us) / (sx * sx)};
    }

private:
    double to_x(double s) const {
        switch (spacing_) {
            case Spacing::Uniform: return s;
            case Spacing::Log: return std::log(s);
            case Spacing::Geodesic: return std::asinh(s);
        }
        return s;
    }
    Spacing spacing_;
    double x0_, hx_;
    std::vector<double> values_;
    Regularity reg_;
    std::shared_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

inline RadialPerturbation from_samples(const RadialGrid& g, std::vector<double> alpha, std::vector<double> beta,
                                       Regularity reg, double tau, std::string family = "sampled") {
    RadialPerturbation e;
    e.n = g.dimension();
    e.tau = tau;
    e.regularity = reg == Regularity::Analytic ? Regularity::C2 : reg;
    e.family = std::move(family);
    e.s_lo = g.front();
    e.s_hi = g.back();
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (!(1 + alpha[i] > 0 && 1 + beta.at(i) > 0))
            throw DomainError("from_samples: g degenerate at s = " + io::format_double(g[i]));
    SampledProfile pa(g, std::move(alpha), e.regularity), pb(g, std::move(beta), e.regularity);
    e.alpha_fn = pa;
    e.beta_fn = pb;
    if (e.regularity == Regularity::C0) {
        auto nodes = g.nodes();
        e.corners_fn = [nodes](double a, double b) {
            std::vector<double> c;
            for (double s : nodes) if (s > a && s < b) c.push_back(s);
            return c;
        };
    }
    return e;
}

inline std::vector<double> sample_alpha(const RadialPerturbation& e, const RadialGrid& g) {
    return sample(g, [&e](double s) { return e.alpha(s).v; });
}
inline std::vector<double> sample_beta(const RadialPerturbation& e, const RadialGrid& g) {
    return sample(g, [&e](double s) { return e.beta(s).v; });
}

inline void export_profile_csv(const RadialPerturbation& e, const RadialGrid& g, const std::string& alpha_path,
                               const std::string& beta_path) {
    io::CsvWriter wa({"s", "alpha"}), wb({"s", "beta"});
    for (std::size_t i = 0; i < g.size(); ++i) {
        wa.row({g[i], e.alpha(g[i]).v});
        wb.row({g[i], e.beta(g[i]).v});
    }
    wa.save(alpha_path);
    wb.save(beta_path);
}

// imported nodes must sit on a uniform or log-uniform lattice
inline RadialPerturbation import_profile_csv(const std::string& alpha_path, const std::string& beta_path, int n,
                                             Regularity reg, double tau) {
    auto ta = io::read_csv_file(alpha_path), tb = io::read_csv_file(beta_path);
    if (ta.header != std::vector<std::string>{"s", "alpha"} || tb.header != std::vector<std::string>{"s", "beta"})
        throw std::runtime_error("import_profile_csv: expected headers 's,alpha' and 's,beta'");
    const auto& s = ta.columns[0];
    if (s != tb.columns[0]) throw std::runtime_error("import_profile_csv: node columns differ");
    const std::size_t N = s.size();
    if (N < 16) throw DomainError("import_profile_csv: at least 16 nodes required");
    auto uniform_in = [&](auto&& f) {
        const double h = (f(s.back()) - f(s.front())) / double(N - 1);
        for (std::size_t i = 0; i < N; ++i)
            if (std::abs(f(s[i]) - (f(s.front()) + h * double(i))) > 1e-9 * std::max(1.0, std::abs(h) * N))
                return false;
        return true;
    };
    RadialGrid g;
    if (uniform_in([](double v) { return v; })) g = RadialGrid::uniform(n, s.front(), s.back(), int(N));
    else if (s.front() > 0 && uniform_in([](double v) { return std::log(v); }))
        g = RadialGrid::log(n, s.front(), s.back(), int(N));
    else throw DomainError("import_profile_csv: nodes are neither uniform nor log-uniform");
    return from_samples(g, ta.columns[1], tb.columns[1], reg, tau, "imported");
}

}  // namespace hypmass
