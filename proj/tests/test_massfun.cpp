#include <gtest/gtest.h>

#include <array>

#include "hypmass/massfun.hpp"
#include "hypmass/oracles.hpp"

using namespace hypmass;
using oracle::brute_force_mass_c2;

namespace {

// alpha and beta with different shapes, both decaying like s^-3
RadialPerturbation mixed_profile(double amp) {
    RadialPerturbation e = zero_perturbation(3);
    e.family = "mixed";
    e.tau = 3;
    e.s_lo = 0.3;
    e.alpha_fn = [amp](double s) { return autodiff_jet([amp](auto x) { return amp * (1 + 0.5 * sin(x)) / (x * x * x); }, s); };
    e.beta_fn = [amp](double s) { return autodiff_jet([amp](auto x) { return amp * 0.7 * exp(-0.1 * x) / (1 + x * x); }, s); };
    return e;
}

}  // namespace

TEST(MassC2, Zero) { EXPECT_EQ(mass_c2(zero_perturbation(3), 10.0), 0.0); }

TEST(MassC2, Linear) {
    auto e = mixed_profile(0.2);
    for (double r : {2.0, 10.0}) EXPECT_NEAR(mass_c2(scaled(e, -3.0), r), -3.0 * mass_c2(e, r), 1e-13 * std::abs(mass_c2(e, r)));
}

TEST(MassC2, RadialReductionMatchesSphereQuadrature) {
    for (auto e : {schwarzschild_ads(0.1, 3), mixed_profile(0.3), c2_bump(0.1, 10.0, 1.0, 3)}) {
        for (double r : {5.0, 20.0}) {
            const double want = brute_force_mass_c2(e, r), got = mass_c2(e, r);
            EXPECT_NEAR(got, want, 0.005 * std::abs(want)) << e.family << " r=" << r;
        }
    }
}

TEST(MassC2, SchwarzschildLimit) {
    for (double m : {0.1, 0.2}) {
        auto e = schwarzschild_ads(m, 3);
        EXPECT_NEAR(mass_c2(e, 1e3), 16 * pi * m, 0.005 * 16 * pi * m);
        // the closed form (n-1) omega 2m (1+r^2)/(1+r^2-2m r^{2-n})
        const double r = 50;
        EXPECT_NEAR(mass_c2(e, r), 2 * 4 * pi * 2 * m * (1 + r * r) / (1 + r * r - 2 * m / r), 1e-12);
        double prev = mass_c2(e, 50);
        for (double r2 = 100; r2 <= 1600; r2 *= 2) {
            const double v = mass_c2(e, r2);
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
    EXPECT_NEAR(mass_c2(schwarzschild_ads(0.2, 3), 1e3) / mass_c2(schwarzschild_ads(0.1, 3), 1e3), 2.0, 2e-3);
    for (int n : {4, 5}) {
        auto e = schwarzschild_ads(0.1, n);
        EXPECT_NEAR(mass_c2(e, 1e3), 2 * (n - 1) * sphere_volume(n) * 0.1, 1e-4);
    }
}

TEST(MassC2, RejectsRoughData) {
    EXPECT_THROW(mass_c2(c0_kink(0.05, 2, 2, 3), 10.0), RegularityError);
}

TEST(Cutoff, Bump) {
    auto c = bump_cutoff();
    EXPECT_NEAR(c.d_ab(), 0.05, 1e-15);
    EXPECT_GT(c.integral, 0);
    EXPECT_EQ(c.phi(0.94), 0.0);
    EXPECT_NEAR(c.dphi(1.02), (c.phi(1.02 + 1e-6) - c.phi(1.02 - 1e-6)) / 2e-6, 1e-6);
    EXPECT_THROW(bump_cutoff(1.0, 0.2), DomainError);
}

TEST(MassC0, ZeroAndLinear) {
    auto c = bump_cutoff();
    EXPECT_EQ(mass_c0(zero_perturbation(3), c, 10.0).mass_c0, 0.0);
    auto k = c0_kink(0.05, 3.0, 2.0, 3);
    const double m1 = mass_c0(k, c, 40.0).mass_c0;
    EXPECT_NEAR(mass_c0(scaled(k, 0.5), c, 40.0).mass_c0, 0.5 * m1, 1e-12 * std::abs(m1));
    EXPECT_TRUE(mass_c0(k, c, 40.0).c2_samples.empty());
}

TEST(MassC0, BoundaryTermOnlyForNonCompactCutoff) {
    auto e = schwarzschild_ads(0.1, 3);
    auto b = mass_c0(e, bump_cutoff(), 30.0);
    EXPECT_EQ(b.boundary_term, 0.0);
    EXPECT_NEAR(b.mass_c0, (b.boundary_term + b.bulk_trace_term + b.bulk_radial_term) / b.normalizer, 1e-15);
    auto k = c0_kink(0.05, 2.0, 2.0, 3);
    EXPECT_NE(mass_c0(k, constant_cutoff(), 30.0).boundary_term, 0.0);
}

TEST(MassC0, AveragingIdentity) {
    auto e = schwarzschild_ads(0.1, 3);
    for (auto phi : {bump_cutoff(), bump_cutoff(0.98, 0.06), bump_cutoff(1.03, 0.04), constant_cutoff()})
        for (double r : {5.0, 50.0, 200.0}) {
            const double avg = averaged_mass_c2(e, phi, r);
            EXPECT_NEAR(mass_c0(e, phi, r).mass_c0, avg, 1e-9 * std::abs(avg)) << phi.name << " r=" << r;
        }
    auto mix = mixed_profile(0.4);
    for (double r : {3.0, 12.0}) {
        const double avg = averaged_mass_c2(mix, bump_cutoff(), r);
        EXPECT_NEAR(mass_c0(mix, bump_cutoff(), r).mass_c0, avg, 1e-9 * std::abs(avg));
    }
}

TEST(MassC0, VerbatimWeightsCarryInverseStaticPotential) {
    // r * int(phi) * M_literal = int phi(s/r) M_C2(s) / V0(s) ds
    auto e = mixed_profile(0.4);
    auto phi = bump_cutoff();
    for (double r : {3.0, 30.0}) {
        const double lhs = mass_c0_literal(e, phi, r).mass_c0 * r * phi.integral;
        const double rhs = integrate([&](double s) { return phi.phi(s / r) * mass_c2(e, s) / std::sqrt(1 + s * s); },
                                     0.9 * r, 1.1 * r, {phi.a * r, r, phi.b * r});
        EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(rhs));
    }
    // so the verbatim functional decays like M / r
    auto sch = schwarzschild_ads(0.1, 3);
    EXPECT_NEAR(mass_c0_literal(sch, phi, 200.0).mass_c0 * 200.0, 16 * pi * 0.1, 0.02);
}

TEST(MassC0, SchwarzschildAtLargeRadius) {
    auto m = mass_c0(schwarzschild_ads(0.1, 3), bump_cutoff(1.0, 0.05), 200.0);
    EXPECT_NEAR(m.mass_c0, 16 * pi * 0.1, 0.01 * 16 * pi * 0.1);
    EXPECT_NEAR(m.mass_c2_mid(), 16 * pi * 0.1, 0.01 * 16 * pi * 0.1);
}

TEST(MassC0, Errors) {
    CutoffFunction z = bump_cutoff();
    z.integral = 0;
    EXPECT_THROW(mass_c0(schwarzschild_ads(0.1, 3), z, 20.0), DomainError);
    auto sampled_grid = RadialGrid::log(3, 1.0, 50.0, 64);
    auto s = from_samples(sampled_grid, std::vector<double>(64, 0.01), std::vector<double>(64, 0.0), Regularity::C0, 0);
    EXPECT_THROW(mass_c0(s, bump_cutoff(), 50.0), DomainError);
}

TEST(Aspect, ZeroAndSchwarzschild) {
    auto z = mass_aspect(zero_perturbation(3), {10, 20, 40});
    EXPECT_EQ(z.extrapolated_limit, 0.0);
    for (int n : {3, 4}) {
        const double m = 0.1;
        auto a = mass_aspect(schwarzschild_ads(m, n), {10, 20, 40, 80});
        const double want = 2 * (n - 1) * sphere_volume(n) * m;
        EXPECT_EQ(a.status, AspectStatus::Converged);
        EXPECT_NEAR(a.extrapolated_limit, want, 0.005 * want);
        // correction is 2m r^{2-n} / (1+r^2): order n in r
        EXPECT_NEAR(a.convergence_order, n, 0.1);
    }
    EXPECT_THROW(mass_aspect(zero_perturbation(3), {10, 20}), DomainError);
}

TEST(Aspect, FlagsOscillationAndGrowth) {
    auto osc = mass_aspect(log_oscillation(0.5, 3), {10, 20, 40, 80, 160, 320, 640, 1280});
    EXPECT_NE(osc.status, AspectStatus::Converged);
    auto grow = fit_mass_aspect({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
    EXPECT_EQ(grow.status, AspectStatus::Divergent);
}

TEST(QuadraticDefect, Zero) {
    auto r = quadratic_defect(zero_perturbation(3), 2, 5);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_NEAR(r.scalar_integral, 0.0, 1e-12);
    EXPECT_NEAR(r.defect, 0.0, 1e-12);
}

TEST(QuadraticDefect, LinearPartIsExactDivergence) {
    // M_C2(r2) - M_C2(r1) equals the integral of V0 times the first variation of R
    for (auto e : {mixed_profile(0.3), c2_bump(0.1, 4.0, 0.6, 4), schwarzschild_ads(0.2, 3)}) {
        auto r = quadratic_defect(e, 1.5, 9.0);
        EXPECT_NEAR(r.linear_integral, r.lhs, 1e-8 * std::abs(r.lhs) + 1e-9) << e.family;
    }
}

TEST(QuadraticDefect, SchwarzschildDefectIsQuadratic) {
    auto a = quadratic_defect(schwarzschild_ads(0.1, 3), 2.0, 20.0);
    auto b = quadratic_defect(schwarzschild_ads(0.05, 3), 2.0, 20.0);
    EXPECT_NEAR(a.scalar_integral, 0.0, 1e-10);
    EXPECT_NEAR(a.defect, a.lhs, 1e-10);
    EXPECT_GE(a.defect / b.defect, 3.5);
    EXPECT_LE(a.defect / b.defect, 4.5);
    auto e = schwarzschild_ads(0.2, 3);
    auto l1 = quadratic_defect(e, 2.0, 20.0), l2 = quadratic_defect(scaled(e, 0.5), 2.0, 20.0);
    EXPECT_NEAR(l1.lhs / l2.lhs, 2.0, 1e-9);
    EXPECT_NEAR(l1.defect / l2.defect, 4.0, 0.6);
    EXPECT_TRUE(std::isfinite(l1.bound_ratio));
    EXPECT_THROW(quadratic_defect(e, 5.0, 2.0), DomainError);
}
