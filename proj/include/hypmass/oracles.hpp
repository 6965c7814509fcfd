#pragma once

#include <array>
#include <cmath>

#include "metrics.hpp"

namespace hypmass::oracle {

using Vec = std::array<double, 3>;
using Mat = std::array<std::array<double, 3>, 3>;

inline Mat coord_e(const RadialPerturbation& e, const Vec& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double rho = (1 - r2) / 2, s = 2 * std::sqrt(r2) / (1 - r2);
    const double a = e.alpha(s).v, b = e.beta(s).v;
    Mat m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double xx = x[i] * x[j] / r2, d = i == j;
            m[i][j] = (a * xx + b * (d - xx)) / (rho * rho);
        }
    return m;
}

// sphere quadrature of the coordinate C2 mass integrand on S(r), 200-point Fibonacci rule, n = 3 only
inline double brute_force_mass_c2(const RadialPerturbation& e, double r) {
    if (e.n != 3) throw DomainError("brute_force_mass_c2: three dimensions only");
    const double R = (std::sqrt(1 + r * r) - 1) / r;  // Euclidean radius
    const int npts = 200;
    const double golden = pi * (3 - std::sqrt(5.0));
    double total = 0;
    for (int p = 0; p < npts; ++p) {
        const double z = 1 - (2 * p + 1.0) / npts, rad = std::sqrt(1 - z * z), ph = golden * p;
        Vec u{rad * std::cos(ph), rad * std::sin(ph), z};
        Vec x{R * u[0], R * u[1], R * u[2]};
        const double rho = (1 - R * R) / 2;
        const double h = 1e-6;
        std::array<Mat, 3> de;
        for (int k = 0; k < 3; ++k) {
            Vec xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            auto ep = coord_e(e, xp), em = coord_e(e, xm);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) de[k][i][j] = (ep[i][j] - em[i][j]) / (2 * h);
        }
        auto E = coord_e(e, x);
        auto Gam = [&](int l, int k, int j) {
            return (x[j] * (k == l) + x[k] * (j == l) - x[l] * (k == j)) / rho;
        };
        auto D = [&](int k, int i, int j) {
            double v = de[k][i][j];
            for (int l = 0; l < 3; ++l) v -= Gam(l, k, i) * E[l][j] + Gam(l, k, j) * E[i][l];
            return v;
        };
        const double V = 1 / rho - 1;
        Vec dV, nu;
        for (int k = 0; k < 3; ++k) { dV[k] = x[k] / (rho * rho); nu[k] = rho * u[k]; }
        const double binv = rho * rho;
        double f = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) {
                    const double bjk = j == k ? binv : 0, bij = i == j ? binv : 0;
                    f += V * (bjk * nu[i] - bij * nu[k]) * D(k, i, j) + (bij * nu[k] - bjk * nu[i]) * E[i][j] * dV[k];
                }
        total += f;
    }
    return total * 4 * pi / npts * std::pow(r, 2);
}


// smooth non-conformal direction for linearization checks
inline Jet direction_alpha(double s) {
    return autodiff_jet([](auto x) { return 0.8 * exp(-0.5 * log(x) * log(x)) * (1 + 0.3 * sin(x)); }, s);
}
inline Jet direction_beta(double s) {
    return autodiff_jet([](auto x) { return -0.5 * exp(-0.3 * (log(x) - 0.5) * (log(x) - 0.5)); }, s);
}

}  // namespace hypmass::oracle
