#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "core.hpp"
#include "curvature.hpp"
#include "hypgeom.hpp"
#include "metrics.hpp"
#include "quadrature.hpp"

namespace hypmass {

// test function phi on [0.9, 1.1]
struct CutoffFunction {
    std::string name;
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    double a = 0.9, b = 1.1;  // support
    bool compact = true;
    double integral = 0.0;

    double d_ab() const { return std::min(a - 0.9, 1.1 - b); }
};

inline CutoffFunction bump_cutoff(double center = 1.0, double width = 0.05) {
    if (!(center - width > 0.9 && center + width < 1.1))
        throw DomainError("bump_cutoff: support must sit inside (0.9, 1.1)");
    CutoffFunction c;
    c.name = "bump";
    c.phi = [center, width](double l) {
        const double z = (l - center) / width;
        return std::abs(z) < 1 ? std::exp(-1 / (1 - z * z)) : 0.0;
    };
    c.dphi = [center, width](double l) {
        const double z = (l - center) / width;
        if (std::abs(z) >= 1) return 0.0;
        const double q = 1 - z * z;
        return std::exp(-1 / q) * (-2 * z / (q * q)) / width;
    };
    c.a = center - width;
    c.b = center + width;
    c.integral = integrate(c.phi, c.a, c.b, {center}, 1e-14);
    return c;
}

// phi = 1 on [0.9, 1.1]: the boundary term survives
inline CutoffFunction constant_cutoff() {
    CutoffFunction c;
    c.name = "constant";
    c.phi = [](double) { return 1.0; };
    c.dphi = [](double) { return 0.0; };
    c.compact = false;
    c.integral = 0.2;
    return c;
}

// ---------------------------------------------------------------------------

// M_C2(r) with V = V0, reduced to the radial profiles
inline double mass_c2(int n, double r, const Jet& a, const Jet& b) {
    const double q = 1 + r * r;
    return (n - 1) * sphere_volume(n) * std::pow(r, n - 1) * (q / r * (a.v - b.v) - q * b.d1 + r * b.v);
}

inline double mass_c2(const RadialPerturbation& e, double r) {
    e.require(Regularity::C1, "mass_c2");
    return mass_c2(e.n, r, e.alpha(r), e.beta(r));
}

struct MassBreakdown {
    double r = 0.0;
    double boundary_term = 0.0;
    double bulk_trace_term = 0.0;
    double bulk_radial_term = 0.0;
    double normalizer = 0.0;
    double mass_c0 = 0.0;
    std::vector<std::pair<double, double>> c2_samples;  // (radius, M_C2), only for C1 or better

    double mass_c2_mid() const {
        for (auto& [rad, v] : c2_samples) if (rad == r) return v;
        return std::nan("");
    }
};

// Integrates the C0 mass bracket with a general radial weight w(s) in place of phi(s/r)
// (and dw/ds in place of phi'(s/r)/r). The result equals the integral of w(s) M_C2(s) / V0(s)
// over [0.9r, 1.1r] for C1 data.
struct WeightedTerms {
    double boundary = 0.0, bulk_trace = 0.0, bulk_radial = 0.0;
    double total() const { return boundary + bulk_trace + bulk_radial; }
};

inline WeightedTerms weighted_terms(const RadialPerturbation& e, double r, const std::function<double(double)>& w,
                                    const std::function<double(double)>& dw, std::vector<double> breaks = {},
                                    double lo_frac = 0.9, double hi_frac = 1.1) {
    const int n = e.n;
    const double om = sphere_volume(n);
    const double lo = lo_frac * r, hi = hi_frac * r;
    if (!e.contains(lo) || !e.contains(hi))
        throw DomainError("mass functional: annulus (" + io::format_double(lo) + ", " + io::format_double(hi) +
                          ") leaves the perturbation's range");
    for (double c : e.corners(lo, hi)) breaks.push_back(c);
    WeightedTerms t;
    auto shell = [&](double s) {
        const double v0 = std::sqrt(1 + s * s);
        const double a = e.alpha(s).v, b = e.beta(s).v;
        return om * std::pow(s, n - 1) * v0 * w(s) * (a - (a + (n - 1) * b));
    };
    t.boundary = shell(hi) - shell(lo);
    auto dmu = [&](double s) { return om * std::pow(s, n - 1) / std::sqrt(1 + s * s); };
    t.bulk_trace = integrate([&](double s) {
        const double a = e.alpha(s).v, b = e.beta(s).v;
        return ((1 + s * s) * dw(s) + w(s) * (n * s + (n - 2) / s)) * (a + (n - 1) * b) * dmu(s);
    }, lo, hi, breaks);
    t.bulk_radial = integrate([&](double s) {
        const double a = e.alpha(s).v;
        return (w(s) * (1 / s - s) - (1 + s * s) * dw(s)) * a * dmu(s);
    }, lo, hi, breaks);
    return t;
}

namespace detail {
inline std::vector<double> cutoff_breaks(const CutoffFunction& phi, double r) {
    return phi.compact ? std::vector<double>{phi.a * r, 0.5 * (phi.a + phi.b) * r, phi.b * r} : std::vector<double>{};
}

inline MassBreakdown finish(const RadialPerturbation& e, const CutoffFunction& phi, double r, const WeightedTerms& t) {
    if (phi.integral == 0.0) throw DomainError("mass_c0: cutoff integrates to zero");
    MassBreakdown m;
    m.r = r;
    m.boundary_term = t.boundary;
    m.bulk_trace_term = t.bulk_trace;
    m.bulk_radial_term = t.bulk_radial;
    m.normalizer = r * phi.integral;
    m.mass_c0 = t.total() / m.normalizer;
    if (at_least(e.regularity, Regularity::C1))
        for (double f : {0.9, 0.95, 1.0, 1.05, 1.1}) m.c2_samples.emplace_back(f == 1.0 ? r : f * r, mass_c2(e, f * r));
    return m;
}
}  // namespace detail

// C0 local mass with the cutoff lifted by V0, so that it is the phi-average of M_C2 over [0.9r, 1.1r]
inline MassBreakdown mass_c0(const RadialPerturbation& e, const CutoffFunction& phi, double r) {
    if (phi.integral == 0.0) throw DomainError("mass_c0: cutoff integrates to zero");
    auto w = [&](double s) { return std::sqrt(1 + s * s) * phi.phi(s / r); };
    auto dw = [&](double s) {
        const double v0 = std::sqrt(1 + s * s);
        return s / v0 * phi.phi(s / r) + v0 * phi.dphi(s / r) / r;
    };
    return detail::finish(e, phi, r, weighted_terms(e, r, w, dw, detail::cutoff_breaks(phi, r)));
}

// C0 mass with the verbatim weight phi(s/r)
inline MassBreakdown mass_c0_literal(const RadialPerturbation& e, const CutoffFunction& phi, double r) {
    if (phi.integral == 0.0) throw DomainError("mass_c0: cutoff integrates to zero");
    auto w = [&](double s) { return phi.phi(s / r); };
    auto dw = [&](double s) { return phi.dphi(s / r) / r; };
    return detail::finish(e, phi, r, weighted_terms(e, r, w, dw, detail::cutoff_breaks(phi, r)));
}

// (int phi(l) M_C2(r l) dl) / (int phi)
inline double averaged_mass_c2(const RadialPerturbation& e, const CutoffFunction& phi, double r) {
    e.require(Regularity::C1, "averaged_mass_c2");
    std::vector<double> br;
    for (double c : e.corners(0.9 * r, 1.1 * r)) br.push_back(c / r);
    if (phi.compact) br.insert(br.end(), {phi.a, 0.5 * (phi.a + phi.b), phi.b});
    return integrate([&](double l) { return phi.phi(l) * mass_c2(e, r * l); }, 0.9, 1.1, br) / phi.integral;
}

// ---------------------------------------------------------------------------

enum class AspectStatus { Converged, NonConvergent, Divergent };

inline const char* to_string(AspectStatus s) {
    switch (s) {
        case AspectStatus::Converged: return "converged";
        case AspectStatus::NonConvergent: return "non_convergent";
        case AspectStatus::Divergent: return "divergent";
    }
    return "?";
}

struct MassAspect {
    std::vector<double> radii, values;
    double extrapolated_limit = std::nan("");
    double convergence_order = std::nan("");  // p in M(r) = L + C r^-p
    AspectStatus status = AspectStatus::NonConvergent;
};

// fit M = L + C r^-p through the last three samples
inline MassAspect fit_mass_aspect(std::vector<double> radii, std::vector<double> values) {
    if (radii.size() < 3 || radii.size() != values.size()) throw DomainError("mass_aspect: need at least 3 radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw DomainError("mass_aspect: radii must increase");
    MassAspect out;
    out.radii = radii;
    out.values = values;
    const std::size_t k = radii.size() - 3;
    const double r1 = radii[k], r2 = radii[k + 1], r3 = radii[k + 2];
    const double m1 = values[k], m2 = values[k + 1], m3 = values[k + 2];

    std::vector<double> mags;
    for (double v : values) mags.push_back(std::abs(v));
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    const double median = mags[mags.size() / 2];
    bool monotone_growth = true;
    for (std::size_t i = 1; i < values.size(); ++i)
        monotone_growth = monotone_growth && std::abs(values[i]) > std::abs(values[i - 1]);
    if (monotone_growth && std::abs(values.back()) > 10 * median) {
        out.status = AspectStatus::Divergent;
        return out;
    }

    const double d12 = m1 - m2, d23 = m2 - m3;
    const double scale = std::max({std::abs(m1), std::abs(m2), std::abs(m3), 1e-300});
    if (std::abs(d12) <= 1e-13 * scale && std::abs(d23) <= 1e-13 * scale) {
        out.extrapolated_limit = m3;
        out.status = AspectStatus::Converged;
        return out;
    }
    const double ratio = d12 / d23;
    // ratio(p) = (r1^-p - r2^-p) / (r2^-p - r3^-p) increases with p
    auto model = [&](double p) { return (std::pow(r1, -p) - std::pow(r2, -p)) / (std::pow(r2, -p) - std::pow(r3, -p)); };
    const double pmin = 0.25, pmax = 12.0;
    if (!(ratio > model(pmin) && ratio < model(pmax))) return out;
    double lo = pmin, hi = pmax;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (model(mid) < ratio ? lo : hi) = mid;
    }
    const double p = 0.5 * (lo + hi);
    const double C = d23 / (std::pow(r2, -p) - std::pow(r3, -p));
    out.convergence_order = p;
    out.extrapolated_limit = m3 - C * std::pow(r3, -p);
    out.status = AspectStatus::Converged;
    // earlier samples must follow the fitted trend
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if ((values[i] - values[i + 1]) * d23 < 0) out.status = AspectStatus::NonConvergent;
    return out;
}

inline MassAspect mass_aspect(const RadialPerturbation& e, const std::vector<double>& radii) {
    if (radii.size() < 3) throw DomainError("mass_aspect: need at least 3 radii");
    std::vector<double> v;
    for (double r : radii) v.push_back(mass_c2(e, r));
    return fit_mass_aspect(radii, v);
}

// ---------------------------------------------------------------------------

struct QuadraticDefectReport {
    double lhs = 0.0;             // M_C2(r2) - M_C2(r1)
    double scalar_integral = 0.0; // int V0 (R + n(n-1)) dmu_b
    double defect = 0.0;          // lhs - scalar_integral: the integral of Q
    double linear_integral = 0.0; // int V0 * (first variation of R) dmu_b
    double bound_integral = 0.0;  // int (V0 + |dV0|)(|De|^2 + |e|^2) + V0 |e| |D^2 e|
    double bound_ratio = 0.0;
};

inline QuadraticDefectReport quadratic_defect(const RadialPerturbation& e, double r1, double r2) {
    e.require(Regularity::C2, "quadratic_defect");
    if (!(r1 < r2)) throw DomainError("quadratic_defect: need r1 < r2");
    const int n = e.n;
    const double om = sphere_volume(n);
    auto dmu = [&](double s) { return om * std::pow(s, n - 1) / std::sqrt(1 + s * s); };
    std::vector<double> br = e.corners(r1, r2);
    QuadraticDefectReport rep;
    rep.lhs = mass_c2(e, r2) - mass_c2(e, r1);
    // R + n(n-1) is a difference of O(1) numbers; measure tolerance against the curvature scale
    const double scale = n * (n - 1) * integrate([&](double s) { return std::sqrt(1 + s * s) * dmu(s); }, r1, r2);
    rep.scalar_integral = integrate([&](double s) {
        return std::sqrt(1 + s * s) * (scalar_curvature(n, s, e.alpha(s), e.beta(s)) + n * (n - 1)) * dmu(s);
    }, r1, r2, br, 1e-12, 1e-13 * scale);
    rep.linear_integral = integrate([&](double s) {
        return std::sqrt(1 + s * s) * linearized_scalar(n, s, e.alpha(s), e.beta(s)) * dmu(s);
    }, r1, r2, br, 1e-12, 1e-13 * scale);
    rep.bound_integral = integrate([&](double s) {
        const Jet a = e.alpha(s), b = e.beta(s);
        const double v0 = std::sqrt(1 + s * s);
        const double e2 = norm_sq(n, a, b);
        return ((v0 + s) * (gradient_norm_sq(n, s, a, b) + e2) + v0 * std::sqrt(e2) * hessian_norm_proxy(n, s, a, b)) *
               dmu(s);
    }, r1, r2, br);
    rep.defect = rep.lhs - rep.scalar_integral;
    rep.bound_ratio = rep.bound_integral > 0 ? rep.defect / rep.bound_integral : 0.0;
    return rep;
}

}  // namespace hypmass
