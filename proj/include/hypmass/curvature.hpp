#pragma once

#include <cmath>
#include <vector>

#include "core.hpp"
#include "metrics.hpp"

namespace hypmass {

// g = A ds^2 + B^2 (round sphere), with derivatives in s
struct WarpedMetric {
    double s;
    double A, A1, A2;
    double B, B1, B2;

    static WarpedMetric from_perturbation(double s, const Jet& alpha, const Jet& beta) {
        const double q = 1 + s * s;
        const double a = 1 + alpha.v;
        WarpedMetric w;
        w.s = s;
        w.A = a / q;
        w.A1 = alpha.d1 / q - 2 * s * a / (q * q);
        w.A2 = alpha.d2 / q - 4 * s * alpha.d1 / (q * q) - 2 * a / (q * q) + 8 * s * s * a / (q * q * q);
        const double c2 = 1 + beta.v;
        if (!(w.A > 0 && c2 > 0)) throw DomainError("warped metric is degenerate at s = " + io::format_double(s));
        const double c = std::sqrt(c2);
        const double c1 = beta.d1 / (2 * c);
        const double cc = beta.d2 / (2 * c) - beta.d1 * beta.d1 / (4 * c * c2);
        w.B = s * c;
        w.B1 = c + s * c1;
        w.B2 = 2 * c1 + s * cc;
        return w;
    }

    // g = p ds^2 + s^2 (round sphere)
    static WarpedMetric from_radial_coefficient(double s, const Jet& p) {
        if (!(p.v > 0)) throw DomainError("radial coefficient must be positive");
        return {s, p.v, p.d1, p.d2, s, 1.0, 0.0};
    }
};

// curvature of the warped metric in its orthonormal frame
struct WarpedCurvature {
    double R;
    double ric_radial;
    double ric_tangential;
    double f_sigma;       // dB/d(arclength)
    double f_sigmasigma;  // second arclength derivative of B
};

inline WarpedCurvature warped_curvature(int n, const WarpedMetric& w) {
    const double fs2 = w.B1 * w.B1 / w.A;
    const double fss = w.B2 / w.A - w.B1 * w.A1 / (2 * w.A * w.A);
    const double f = w.B;
    WarpedCurvature c;
    c.f_sigma = std::sqrt(fs2);
    c.f_sigmasigma = fss;
    c.ric_radial = -(n - 1) * fss / f;
    c.ric_tangential = -fss / f + (n - 2) * (1 - fs2) / (f * f);
    c.R = c.ric_radial + (n - 1) * c.ric_tangential;
    return c;
}

inline double scalar_curvature(int n, double s, const Jet& alpha, const Jet& beta) {
    return warped_curvature(n, WarpedMetric::from_perturbation(s, alpha, beta)).R;
}

inline double scalar_curvature(const RadialPerturbation& e, double s) {
    e.require(Regularity::C2, "scalar_curvature");
    return scalar_curvature(e.n, s, e.alpha(s), e.beta(s));
}

// first variation of R at b in the direction e
inline double linearized_scalar(int n, double s, const Jet& a, const Jet& b) {
    const double s2 = s * s;
    const double lap_b = laplacian(n, s, b);
    return (n - 1) * (a.v + (n - 1) * b.v) - (n - 1) * lap_b + (n - 1) * (s + 1 / s) * (a.d1 - b.d1) +
           (n - 1) * ((n - 1) * (1 + s2) - 1) / s2 * (a.v - b.v);
}

inline double linearized_scalar(const RadialPerturbation& e, double s) {
    e.require(Regularity::C2, "linearized_scalar");
    return linearized_scalar(e.n, s, e.alpha(s), e.beta(s));
}

inline double norm_sq(int n, const Jet& a, const Jet& b) { return a.v * a.v + (n - 1) * b.v * b.v; }

// |De|_b^2 for e = (alpha - beta) NN + beta b
inline double gradient_norm_sq(int n, double s, const Jet& a, const Jet& b) {
    const double v = std::sqrt(1 + s * s);
    const double k2 = (1 + s * s) / (s * s);
    const double ad = v * a.d1, bd = v * b.d1, g = a.v - b.v;
    return ad * ad + (n - 1) * bd * bd + 2 * (n - 1) * k2 * g * g;
}

// radial part of |D^2 e|_b: second derivatives along unit-speed radial geodesics
inline double hessian_norm_proxy(int n, double s, const Jet& a, const Jet& b) {
    const double q = 1 + s * s;
    const double add = q * a.d2 + s * a.d1, bdd = q * b.d2 + s * b.d1;
    return std::sqrt(add * add + (n - 1) * bdd * bdd);
}

struct ScalarCurvatureReport {
    std::vector<double> s, R, linear, remainder;
    double c_q = 0.0;  // sup |q| / (|e|^2 + |De|^2)
};

inline ScalarCurvatureReport curvature_report(const RadialPerturbation& e, const std::vector<double>& nodes) {
    e.require(Regularity::C2, "curvature_report");
    const int n = e.n;
    ScalarCurvatureReport rep;
    for (double s : nodes) {
        const Jet a = e.alpha(s), b = e.beta(s);
        const double R = scalar_curvature(n, s, a, b);
        const double l = linearized_scalar(n, s, a, b);
        const double q = R + n * (n - 1) - l;
        rep.s.push_back(s);
        rep.R.push_back(R);
        rep.linear.push_back(l);
        rep.remainder.push_back(q);
        const double den = norm_sq(n, a, b) + gradient_norm_sq(n, s, a, b);
        if (den > 1e-14) rep.c_q = std::max(rep.c_q, std::abs(q) / den);
    }
    return rep;
}

}  // namespace hypmass
