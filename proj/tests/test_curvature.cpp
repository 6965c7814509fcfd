#include <gtest/gtest.h>

#include <array>
#include <random>

#include "hypmass/curvature.hpp"

using namespace hypmass;

namespace {

using Mat = std::array<std::array<double, 3>, 3>;
using Vec = std::array<double, 3>;

Mat inverse(const Mat& m) {
    Mat r;
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
            r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / det;
        }
    return r;
}

// ball-model coordinate metric b + e for a radial perturbation
Mat coordinate_metric(const RadialPerturbation& e, const Vec& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double r = std::sqrt(r2);
    const double rho = (1 - r2) / 2;
    const double s = 2 * r / (1 - r2);
    const double a = e.alpha(s).v, b = e.beta(s).v;
    Mat g;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double xx = x[i] * x[j] / r2;
            const double d = i == j ? 1.0 : 0.0;
            g[i][j] = (d + a * xx + b * (d - xx)) / (rho * rho);
        }
    return g;
}

// Christoffel symbols by central differences of the metric
std::array<Mat, 3> christoffel(const RadialPerturbation& e, const Vec& x, double h) {
    std::array<Mat, 3> dg;
    for (int k = 0; k < 3; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        auto gp = coordinate_metric(e, xp), gm = coordinate_metric(e, xm);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) dg[k][i][j] = (gp[i][j] - gm[i][j]) / (2 * h);
    }
    auto gi = inverse(coordinate_metric(e, x));
    std::array<Mat, 3> G{};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = 0;
                for (int l = 0; l < 3; ++l) v += gi[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]);
                G[k][i][j] = 0.5 * v;
            }
    return G;
}

double brute_force_R(const RadialPerturbation& e, const Vec& x) {
    const double h = 1e-4;
    auto G = christoffel(e, x, h);
    std::array<std::array<Mat, 3>, 3> dG;  // dG[m][k][i][j] = d_m Gamma^k_ij
    for (int m = 0; m < 3; ++m) {
        Vec xp = x, xm = x;
        xp[m] += h;
        xm[m] -= h;
        auto Gp = christoffel(e, xp, h), Gm = christoffel(e, xm, h);
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) dG[m][k][i][j] = (Gp[k][i][j] - Gm[k][i][j]) / (2 * h);
    }
    auto gi = inverse(coordinate_metric(e, x));
    double R = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double ric = 0;
            for (int k = 0; k < 3; ++k) {
                ric += dG[k][k][i][j] - dG[j][k][i][k];
                for (int l = 0; l < 3; ++l) ric += G[k][k][l] * G[l][i][j] - G[k][j][l] * G[l][i][k];
            }
            R += gi[i][j] * ric;
        }
    return R;
}

}  // namespace

TEST(Curvature, HyperbolicSpace) {
    for (int n : {3, 4, 5})
        for (double s : {0.1, 1.0, 30.0, 1e3})
            EXPECT_NEAR(scalar_curvature(n, s, Jet{}, Jet{}), -n * (n - 1), 1e-9 * n * n);
    auto w = WarpedMetric::from_radial_coefficient(2.0, Jet{1.0 / 5, -4.0 / 25, 2 * (3 * 4 - 1) / 125.0});
    EXPECT_NEAR(warped_curvature(3, w).R, -6.0, 1e-12);
}

TEST(Curvature, ConstantScaling) {
    for (double eps : {0.1, -0.3, 1.0, -0.5}) {
        auto e = conformal(eps, 4);
        EXPECT_NEAR(scalar_curvature(e, 2.0), -12.0 / (1 + eps), 1e-12);
    }
}

TEST(Curvature, ScalingLaw) {
    auto e = schwarzschild_ads(0.2, 3);
    for (double c : {2.0, 0.5}) {
        // c g has alpha_c = c (1 + alpha) - 1, beta_c = c (1 + beta) - 1
        for (double s : {0.9, 3.0, 12.0}) {
            Jet a = e.alpha(s), b = e.beta(s);
            Jet ac{c * (1 + a.v) - 1, c * a.d1, c * a.d2}, bc{c * (1 + b.v) - 1, c * b.d1, c * b.d2};
            EXPECT_NEAR(scalar_curvature(3, s, ac, bc), scalar_curvature(3, s, a, b) / c, 1e-10);
        }
    }
}

TEST(Curvature, SchwarzschildHasConstantScalarCurvature) {
    for (int n : {3, 4})
        for (double m : {0.05, 0.1, 0.5}) {
            auto e = schwarzschild_ads(m, n);
            for (double s : probe_points(e, 0.0, 1e3, 101))
                EXPECT_NEAR(scalar_curvature(e, s), -n * (n - 1), 1e-8) << "m=" << m << " s=" << s;
        }
}

TEST(Curvature, RejectsDegenerateAndRough) {
    EXPECT_THROW(scalar_curvature(3, 1.0, Jet{-1.5, 0, 0}, Jet{}), DomainError);
    EXPECT_THROW(WarpedMetric::from_radial_coefficient(1.0, Jet{0.0, 0, 0}), DomainError);
    auto k = c0_kink(0.05, 1.0, 2.0, 3);
    EXPECT_THROW(scalar_curvature(k, 2.0), RegularityError);
    EXPECT_THROW(linearized_scalar(k, 2.0), RegularityError);
}

TEST(Curvature, BruteForceCoordinateOracle) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0), rad(0.3, 0.75);
    const std::array<RadialPerturbation, 3> cases = {schwarzschild_ads(0.3, 3), c2_bump(0.2, 2.0, 0.8, 3),
                                                    conformal(0.1, 3)};
    int checked = 0;
    for (int k = 0; k < 20; ++k) {
        const auto& e = cases[k % 3];
        Vec dir{u(rng), u(rng), u(rng)};
        const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
        const double r = rad(rng);
        Vec x{dir[0] / len * r, dir[1] / len * r, dir[2] / len * r};
        const double s = 2 * r / (1 - r * r);
        if (!e.contains(s)) continue;
        const double want = scalar_curvature(e, s);
        EXPECT_NEAR(brute_force_R(e, x), want, 0.02 * std::abs(want)) << e.family << " s=" << s;
        ++checked;
    }
    EXPECT_GE(checked, 18);
}

TEST(Linearization, ZeroAndConstant) {
    EXPECT_EQ(linearized_scalar(3, 1.5, Jet{}, Jet{}), 0.0);
    for (int n : {3, 4}) {
        const double eps = 0.01;
        auto e = conformal(eps, n);
        EXPECT_NEAR(linearized_scalar(e, 2.0), n * (n - 1) * eps, 1e-14);
        auto rep = curvature_report(e, {1.0, 2.0});
        EXPECT_NEAR(rep.remainder[0], -n * (n - 1) * eps * eps / (1 + eps), 1e-14);
    }
}

TEST(Linearization, MatchesDirectionalDerivative) {
    // oracle: (R(b + h e) - R(b - h e)) / 2h at small h
    for (auto e : {schwarzschild_ads(0.3, 3), c2_bump(0.5, 3.0, 0.7, 4), log_oscillation(1.0, 4)}) {
        for (double s : {1.2, 2.5, 4.0}) {
            if (!e.contains(s)) continue;
            Jet a = e.alpha(s), b = e.beta(s);
            const double h = 1e-5;
            auto R = [&](double t) {
                return scalar_curvature(e.n, s, Jet{t * a.v, t * a.d1, t * a.d2}, Jet{t * b.v, t * b.d1, t * b.d2});
            };
            const double fd = (R(h) - R(-h)) / (2 * h);
            EXPECT_NEAR(linearized_scalar(e.n, s, a, b), fd, 1e-5 * (1 + std::abs(fd))) << e.family;
        }
    }
}

TEST(Remainder, BookkeepingAndSmallEpsilonLimit) {
    for (int n : {3, 4}) {
        // q = -n(n-1) eps^2/(1+eps) and |e|^2 = n eps^2, |De| = 0, so c_q -> n - 1
        auto rep = curvature_report(conformal(1e-4, n), {1.0, 5.0});
        EXPECT_NEAR(rep.c_q, n - 1, 1e-3);
        auto e = schwarzschild_ads(0.1, n);
        auto r2 = curvature_report(e, probe_points(e, 0.0, 100.0, 50));
        for (std::size_t i = 0; i < r2.s.size(); ++i)
            EXPECT_NEAR(r2.R[i] + n * (n - 1), r2.linear[i] + r2.remainder[i], 1e-12);
    }
    auto z = curvature_report(zero_perturbation(3), {1.0, 2.0});
    EXPECT_EQ(z.remainder[0], 0.0);
    EXPECT_EQ(z.c_q, 0.0);
}

TEST(Remainder, QuadraticScaling) {
    auto base = c2_bump(0.2, 3.0, 0.7, 3);
    std::vector<double> sup;
    for (double lambda : {1.0, 0.5, 0.25}) {
        auto rep = curvature_report(scaled(base, lambda), probe_points(base, 1.0, 10.0, 400));
        double m = 0;
        for (double q : rep.remainder) m = std::max(m, std::abs(q));
        sup.push_back(m);
    }
    EXPECT_NEAR(sup[0] / sup[1], 4.0, 0.8);
    EXPECT_NEAR(sup[1] / sup[2], 4.0, 0.8);
}

TEST(Remainder, OneConstantAcrossSchwarzschildFamily) {
    std::vector<double> cs;
    for (double m : {0.05, 0.1, 0.5}) {
        auto e = schwarzschild_ads(m, 3);
        cs.push_back(curvature_report(e, probe_points(e, 0.0, 1e3, 300)).c_q);
    }
    const double c = *std::max_element(cs.begin(), cs.end());
    EXPECT_TRUE(std::isfinite(c));
    for (double m : {0.05, 0.1, 0.5}) {
        auto e = schwarzschild_ads(m, 3);
        auto rep = curvature_report(e, probe_points(e, 0.0, 1e3, 977));
        for (std::size_t i = 0; i < rep.s.size(); ++i) {
            Jet a = e.alpha(rep.s[i]), b = e.beta(rep.s[i]);
            const double den = norm_sq(3, a, b) + gradient_norm_sq(3, rep.s[i], a, b);
            // below this R itself is at round-off and q carries no information
            if (den < 1e-10) continue;
            EXPECT_LE(std::abs(rep.remainder[i]), 1.5 * c * den);
        }
    }
}
