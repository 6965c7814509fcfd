#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "hypmass/metrics.hpp"

using namespace hypmass;

TEST(Schwarzschild, ZeroMassIsHyperbolic) {
    auto e = schwarzschild_ads(0.0, 3);
    for (double s : {0.01, 1.0, 50.0}) {
        EXPECT_EQ(e.alpha(s).v, 0.0);
        EXPECT_EQ(e.beta(s).v, 0.0);
    }
}

TEST(Schwarzschild, SpotValue) {
    const long double s = 10, m = 0.1L;
    const long double oracle = (1 + s * s) / (1 + s * s - 2 * m / s) - 1;
    auto e = schwarzschild_ads(0.1, 3);
    EXPECT_NEAR(e.alpha(10.0).v, static_cast<double>(oracle), 1e-17);
    EXPECT_NEAR(e.alpha(10.0).v, 1.9806e-4, 1e-8);
    EXPECT_NEAR(e.alpha(10.0).v * 1000, 0.2, 0.002);
}

TEST(Schwarzschild, JetMatchesDifferences) {
    auto e = schwarzschild_ads(0.3, 4);
    for (double s : {1.0, 2.0, 7.0}) {
        const double h = 1e-4 * s;
        auto j = e.alpha(s);
        const double d1 = (e.alpha(s + h).v - e.alpha(s - h).v) / (2 * h);
        const double d2 = (e.alpha(s + h).v - 2 * j.v + e.alpha(s - h).v) / (h * h);
        EXPECT_NEAR(j.d1, d1, 1e-7 * std::abs(d1) + 1e-12);
        EXPECT_NEAR(j.d2, d2, 1e-4 * std::abs(d2) + 1e-9);
    }
}

TEST(Schwarzschild, DecayConstant) {
    for (int n : {3, 4, 5}) {
        const double m = 0.1;
        auto e = schwarzschild_ads(m, n);
        // s^n alpha -> 2m from the quotient's first-order expansion
        EXPECT_NEAR(std::pow(1e4, n) * e.alpha(1e4).v, 2 * m, 1e-6);
        double sup = 0;
        for (double s : probe_points(e, 20.0, 1e5)) sup = std::max(sup, std::pow(s, n) * std::abs(e.alpha(s).v));
        EXPECT_GE(sup, 2 * m * 0.95);
        EXPECT_LE(sup, 2 * m * 1.05);
        EXPECT_LT(decay_constant(e), 2 * m * 1.05);
    }
}

TEST(Schwarzschild, HorizonGate) {
    const double h = schwarzschild_horizon(1.0, 3);
    EXPECT_NEAR(1 + h * h - 2.0 / h, 0.0, 1e-12);
    try {
        schwarzschild_ads(1.0, 3, 0.5);
        FAIL();
    } catch (const DomainError& err) {
        EXPECT_NE(std::string(err.what()).find("minimal admissible"), std::string::npos);
    }
    EXPECT_NO_THROW(schwarzschild_ads(1.0, 3, h * 1.01));
    EXPECT_THROW(schwarzschild_ads(1.0, 3).alpha(0.1), DomainError);
}

TEST(Kink, ZeroAmplitude) {
    auto e = c0_kink(0.0, 2.0, std::exp(1.0), 3);
    for (double s : {0.1, 3.0, 30.0}) {
        EXPECT_EQ(e.alpha(s).v, 0.0);
        EXPECT_EQ(e.beta(s).v, 0.0);
    }
}

TEST(Kink, Continuous) {
    auto e = c0_kink(0.05, 1.0, 3.0, 3, 0.3);
    // max jump across a shrinking interval around every corner goes to zero
    auto corners = e.corners(0.5, 200.0);
    ASSERT_GT(corners.size(), 5u);
    double prev = 1.0;
    for (double h : {1e-3, 1e-5, 1e-7}) {
        double jump = 0;
        for (double c : corners)
            jump = std::max({jump, std::abs(e.alpha(c * (1 + h)).v - e.alpha(c * (1 - h)).v),
                             std::abs(e.beta(c * (1 + h)).v - e.beta(c * (1 - h)).v)});
        EXPECT_LT(jump, prev * 0.1 + 1e-15);
        prev = jump;
    }
}

TEST(Kink, CornerSlopesDiffer) {
    auto e = c0_kink(0.05, 1.0, 3.0, 3);
    const double c = 9.0;  // ln 9 / ln 3 = 2: alpha wave restarts its rise here
    double last = 0;
    for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const double right = (e.alpha(c + h).v - e.alpha(c).v) / h;
        const double left = (e.alpha(c).v - e.alpha(c - h).v) / h;
        last = right - left;
        EXPECT_GT(std::abs(last), 1e-3);
    }
    // one-sided slope jump of A <c>^-tau * lambda * (2/rise + 2/(1-rise)) / (c ln k)
    const double oracle = 0.05 / std::sqrt(1 + c * c) * 0.5 * 8.0 / (c * std::log(3.0));
    EXPECT_NEAR(last, oracle, 1e-3 * oracle);
}

TEST(Kink, PositivityGate) {
    EXPECT_THROW(c0_kink(-3.0, 1.0, 3.0, 3), DomainError);
    EXPECT_THROW(c0_kink(0.1, 1.0, 1.0, 3), DomainError);
}

TEST(Evaluate, FrameAlgebra) {
    auto z = evaluate(zero_perturbation(3), 2.0);
    EXPECT_EQ(z.trace, 0.0);
    EXPECT_EQ(z.norm_b, 0.0);
    RadialPerturbation e = zero_perturbation(3);
    e.alpha_fn = [](double) { return Jet{0.3, 0, 0}; };
    e.beta_fn = [](double) { return Jet{-0.1, 0, 0}; };
    auto p = evaluate(e, 1.0);
    EXPECT_EQ(p.trace, 0.3 + 2 * -0.1);
    EXPECT_EQ(p.radial_quadratic, 0.3);
    EXPECT_DOUBLE_EQ(p.norm_b, std::sqrt(0.09 + 2 * 0.01));
    auto sc = evaluate(schwarzschild_ads(0.1, 3), 10.0);
    EXPECT_EQ(sc.trace, sc.alpha);
    EXPECT_EQ(sc.radial_quadratic, sc.alpha);
    EXPECT_NEAR(sc.trace, 1.9806e-4, 1e-8);
}

TEST(Evaluate, TraceIdentityExact) {
    for (auto e : {c0_kink(0.04, 1.5, 2.0, 4), schwarzschild_ads(0.2, 4), conformal(0.05, 5)}) {
        for (double s : probe_points(e, 0.6, 100.0, 57)) {
            auto p = evaluate(e, s);
            EXPECT_EQ(p.trace, p.alpha + (e.n - 1) * p.beta);
        }
    }
}

TEST(Sampled, LinearInterpolationDoesNotOvershoot) {
    auto g = RadialGrid::log(3, 0.5, 100.0, 200);
    auto k = c0_kink(0.05, 1.0, 2.0, 3);
    auto e = from_samples(g, sample_alpha(k, g), sample_beta(k, g), Regularity::C0, 1.0);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double mid = std::sqrt(g[i] * g[i + 1]);
        const double v = e.alpha(mid).v;
        const double lo = std::min(e.alpha(g[i]).v, e.alpha(g[i + 1]).v);
        const double hi = std::max(e.alpha(g[i]).v, e.alpha(g[i + 1]).v);
        EXPECT_GE(v, lo - 1e-16);
        EXPECT_LE(v, hi + 1e-16);
    }
    EXPECT_THROW(e.alpha(200.0), DomainError);
    EXPECT_THROW(e.alpha(0.1), DomainError);
}

TEST(Sampled, CubicReproducesSmoothProfile) {
    auto g = RadialGrid::log(3, 0.5, 200.0, 800);
    auto sc = schwarzschild_ads(0.1, 3);
    auto e = from_samples(g, sample_alpha(sc, g), sample_beta(sc, g), Regularity::C2, 3.0);
    for (double s : {1.0, 3.3, 20.0}) {
        EXPECT_NEAR(e.alpha(s).v, sc.alpha(s).v, 1e-7 * std::abs(sc.alpha(s).v));
        EXPECT_NEAR(e.alpha(s).d1, sc.alpha(s).d1, 1e-4 * std::abs(sc.alpha(s).d1));
    }
}

TEST(Csv, RoundTrip) {
    auto dir = std::filesystem::temp_directory_path() / "hypmass_metrics_csv";
    std::filesystem::create_directories(dir);
    auto g = RadialGrid::log(3, 0.7, 50.0, 64);
    auto k = c0_kink(0.03, 1.0, 2.5, 3);
    export_profile_csv(k, g, (dir / "a.csv").string(), (dir / "b.csv").string());
    auto e = import_profile_csv((dir / "a.csv").string(), (dir / "b.csv").string(), 3, Regularity::C0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(e.alpha(g[i]).v, k.alpha(g[i]).v);
        EXPECT_EQ(e.beta(g[i]).v, k.beta(g[i]).v);
    }
    std::FILE* f = std::fopen((dir / "a.csv").c_str(), "r");
    char head[16] = {};
    ASSERT_EQ(std::fread(head, 1, 8, f), 8u);
    std::fclose(f);
    EXPECT_EQ(std::string(head, 8), "s,alpha\n");
}

TEST(Invariants, ConstructorsRespectPositivity) {
    for (auto e : {schwarzschild_ads(0.5, 3), c0_kink(0.08, 1.0, 2.0, 3), log_oscillation(0.1, 3),
                   c2_bump(-0.2, 3.0, 0.5, 3), conformal(-0.05, 4)}) {
        for (double s : probe_points(e)) {
            EXPECT_GT(1 + e.alpha(s).v, 0.0);
            EXPECT_GT(1 + e.beta(s).v, 0.0);
        }
        EXPECT_TRUE(std::isfinite(decay_constant(e)));
    }
}
