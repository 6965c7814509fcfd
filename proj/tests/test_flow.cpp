#include <gtest/gtest.h>

#include "hypmass/flow.hpp"

using namespace hypmass;

namespace {

// smooth, non-conformal test direction
Jet dir_alpha(double s) {
    return autodiff_jet([](auto x) { return 0.8 * exp(-0.5 * log(x) * log(x)) * (1 + 0.3 * sin(x)); }, s);
}
Jet dir_beta(double s) {
    return autodiff_jet([](auto x) { return -0.5 * exp(-0.3 * (log(x) - 0.5) * (log(x) - 0.5)); }, s);
}
Jet times(double l, const Jet& j) { return {l * j.v, l * j.d1, l * j.d2}; }

FlowOptions quiet() {
    FlowOptions o;
    o.t_max = 0.2;
    return o;
}

}  // namespace

TEST(FlowRate, HyperbolicMetricIsStationary) {
    for (int n : {3, 4, 5})
        for (double s : {0.1, 0.7, 3.0, 40.0, 900.0}) {
            const FlowPoint p = flow_point(n, s, {}, {});
            EXPECT_NEAR(p.rate_alpha, 0.0, 1e-12) << n << " " << s;
            EXPECT_NEAR(p.rate_beta, 0.0, 1e-12);
            EXPECT_NEAR(p.w, 0.0, 1e-12 * (1 + s));
            EXPECT_NEAR(p.curv.R, -n * (n - 1.0), 1e-12);
        }
}

TEST(FlowRate, ConstantScalingDecays) {
    for (int n : {3, 4})
        for (double eps : {0.05, -0.03})
            for (double s : {0.4, 2.0, 30.0}) {
                const TensorRate r = flow_rate(n, s, {eps, 0, 0}, {eps, 0, 0});
                EXPECT_NEAR(r.alpha, -2.0 * (n - 1) * eps, 1e-12);
                EXPECT_NEAR(r.beta, -2.0 * (n - 1) * eps, 1e-12);
            }
}

TEST(FlowRate, AgreesWithLinearOperatorToSecondOrder) {
    for (int n : {3, 4}) {
        std::vector<double> ratio;
        for (double lam : {1e-2, 1e-3, 1e-4}) {
            double worst = 0;
            for (double s = 0.3; s < 20; s *= 1.17) {
                const Jet a = dir_alpha(s), b = dir_beta(s);
                const TensorRate full = flow_rate(n, s, times(lam, a), times(lam, b));
                const TensorRate lin = minus_L(n, s, a, b);
                worst = std::max({worst, std::abs(full.alpha - lam * lin.alpha) / (lam * lam),
                                  std::abs(full.beta - lam * lin.beta) / (lam * lam)});
            }
            ratio.push_back(worst);
        }
        EXPECT_GT(ratio[0], 1e-3);
        EXPECT_NEAR(ratio[1] / ratio[0], 1.0, 0.1) << n;
        EXPECT_NEAR(ratio[2] / ratio[0], 1.0, 0.1) << n;
    }
}

TEST(FlowRate, DeturckDerivativeMatchesDifferenceQuotient) {
    const int n = 3;
    auto at = [&](double s) { return flow_point(n, s, times(0.2, dir_alpha(s)), times(0.2, dir_beta(s))); };
    for (double s : {0.5, 1.3, 4.0, 12.0}) {
        const double h = 1e-5 * s;
        const double fd = (at(s + h).w - at(s - h).w) / (2 * h);
        EXPECT_NEAR(at(s).dw, fd, 1e-6 * (1 + std::abs(fd)));
    }
}

TEST(FlowRate, DegenerateMetricThrows) {
    EXPECT_THROW(flow_point(3, 1.0, {-1.2, 0, 0}, {}), DomainError);
}

TEST(FlowRhs, DiscreteOperatorMatchesAnalyticLinearization) {
    const auto g = RadialGrid::log(3, 0.5, 50.0, 801);
    std::vector<double> a(g.size()), b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        a[i] = dir_alpha(g[i]).v;
        b[i] = dir_beta(g[i]).v;
    }
    auto T = detail::minus_L_triplets(g, 0, g.size());
    detail::SpMat P(2 * g.size(), 2 * g.size());
    P.setFromTriplets(T.begin(), T.end());
    const Eigen::VectorXd r = P * detail::pack(a, b);
    for (std::size_t i = 5; i + 5 < g.size(); i += 37) {
        const TensorRate lin = minus_L(3, g[i], dir_alpha(g[i]), dir_beta(g[i]));
        EXPECT_NEAR(r[2 * i], lin.alpha, 1e-4 * (1 + std::abs(lin.alpha)));
        EXPECT_NEAR(r[2 * i + 1], lin.beta, 1e-4 * (1 + std::abs(lin.beta)));
    }
}

TEST(FlowIntegrate, ZeroStaysZero) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 200);
    const auto H = flow_integrate(zero_perturbation(3), g, {1e-6, 1e-3}, quiet());
    ASSERT_EQ(H.states.size(), 3u);
    for (const auto& st : H.states)
        for (std::size_t i = 0; i < g.size(); ++i) {
            EXPECT_NEAR(st.alpha[i], 0.0, 1e-12);
            EXPECT_NEAR(st.beta[i], 0.0, 1e-12);
        }
}

TEST(FlowIntegrate, InitialSnapshotReproducesSmoothData) {
    const auto e = c2_bump(0.05, 3.0, 0.6, 3);
    const auto g = RadialGrid::log(3, 0.5, 100.0, 400);
    const auto H = flow_integrate(e, g, {1e-4}, quiet());
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(H.states[0].alpha[i], e.alpha(g[i]).v, 1e-12);
        EXPECT_NEAR(H.states[0].beta[i], e.beta(g[i]).v, 1e-12);
    }
}

TEST(FlowIntegrate, ConformalDataFollowsScalarOde) {
    for (int n : {3, 4}) {
        const double eps = 0.04;
        const auto g = RadialGrid::log_step(n, 0.5, 1e4, 0.02);
        const std::vector<double> ts = {0.01, 0.02, 0.05};
        const auto H = flow_integrate(conformal(eps, n), g, ts, quiet());
        for (std::size_t k = 1; k < H.states.size(); ++k) {
            const double exact = eps * std::exp(-2.0 * (n - 1) * H.states[k].t);
            for (std::size_t i = 0; i < g.size() && g[i] <= 100; ++i) {
                EXPECT_NEAR(H.states[k].alpha[i], exact, 1e-6) << n << " " << k << " " << g[i];
                EXPECT_NEAR(H.states[k].beta[i], exact, 1e-6);
            }
        }
    }
}

TEST(FlowIntegrate, GatesAndErrors) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 200);
    EXPECT_THROW(flow_integrate(conformal(0.2, 3), g, {1e-3}), DomainError);
    EXPECT_THROW(flow_integrate(zero_perturbation(3), g, {0.5}), DomainError);
    EXPECT_THROW(flow_integrate(zero_perturbation(3), g, {}), DomainError);
    EXPECT_THROW(flow_integrate(zero_perturbation(4), g, {1e-3}), DomainError);
}

TEST(FlowIntegrate, SmallDataSupNormDoesNotGrow) {
    const auto e = c2_bump(0.03, 4.0, 0.8, 3);
    const auto g = RadialGrid::log_step(3, 0.5, 200.0, 0.01);
    const auto H = flow_integrate(e, g, log_times(1e-4, 0.05, 12), quiet());
    for (std::size_t k = 1; k < H.states.size(); ++k)
        EXPECT_LE(H.states[k].diag.sup_h, H.states[k - 1].diag.sup_h * 1.01);
}

TEST(FlowIntegrate, RescaledMetricReturnsToInitialData) {
    const auto e = c0_kink(0.03, 0.5, 3.0, 3);
    const auto g = RadialGrid::log_step(3, 0.5, 100.0, 0.005);
    const auto H = flow_integrate(e, g, log_times(1e-5, 1e-2, 7), quiet());
    const auto d = rescaled_initial_defect(H, 1.5, 40.0);
    EXPECT_EQ(d.front(), 0.0);
    for (std::size_t k = 2; k < d.size(); ++k) EXPECT_GT(d[k], d[k - 1] * 0.999);
    EXPECT_LT(d[1], 0.1 * d.back());
}

TEST(Reparametrization, ResidualShrinksUnderRefinement) {
    const auto e = c2_bump(0.05, 3.0, 0.6, 3);
    std::vector<double> res;
    for (int level = 0; level < 3; ++level) {
        const double f = std::pow(0.5, level);
        const auto g = RadialGrid::log_step(3, 0.5, 60.0, 0.02 * f);
        FlowOptions o = quiet();
        o.dt_max = 4e-4 * f;
        const auto rep = reparametrization_residual(e, g, 2e-3 * f, int(5 / f), o, 4e-3);
        res.push_back(rep.max_residual);
        EXPECT_LT(rep.max_residual, 1e-2 * rep.rate_scale);
    }
    EXPECT_GT(res[0] / res[1], 1.5);
    EXPECT_GT(res[1] / res[2], 1.5);
}

TEST(ScalarEvolution, ExactAtHyperbolicMetric) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 300);
    const auto H = flow_integrate(zero_perturbation(3), g, {1e-3, 2e-3, 3e-3}, quiet());
    const auto rep = scalar_evolution_residual(H);
    EXPECT_LT(rep.max_residual, 1e-10);
}

TEST(ScalarEvolution, ConformalStates) {
    const auto g = RadialGrid::log_step(3, 0.5, 1e4, 0.02);
    FlowOptions o = quiet();
    o.roi_hi_fraction = 0.01;  // keep clear of the pinned outer zone
    const auto H = flow_integrate(conformal(0.05, 3), g, {0.009, 0.01, 0.011}, o);
    const auto rep = scalar_evolution_residual(H);
    // dR/dt itself is about 0.6 here
    EXPECT_LT(rep.max_residual, 1e-5);
}

TEST(ScalarEvolution, ResidualConvergesForBumpData) {
    const auto e = c2_bump(0.05, 3.0, 0.6, 3);
    std::vector<double> res;
    for (int level = 0; level < 2; ++level) {
        const double f = std::pow(0.5, level);
        const auto g = RadialGrid::log_step(3, 0.5, 60.0, 0.02 * f);
        FlowOptions o = quiet();
        o.dt_max = 4e-4 * f;
        const auto H = flow_integrate(e, g, {0.01 - 1e-3 * f, 0.01, 0.01 + 1e-3 * f}, o);
        res.push_back(scalar_evolution_residual(H).max_residual);
    }
    EXPECT_GT(res[0] / res[1], 2.0);
}

TEST(Certificate, FirstRecurrenceStep) {
    const long double t1 = std::log((std::exp(0.4L) + 1) / 2) / 4;
    const auto ev = curvature_certificate(0.1, 3, 0.25, -6.0, 1.0, 1.0);
    ASSERT_GE(ev.t_k.size(), 2u);
    EXPECT_NEAR(ev.t_k[1], double(t1), 1e-15);
    EXPECT_NEAR(ev.t_k[1], 0.054967018, 1e-9);
    EXPECT_LT(ev.t_k[1], 0.075);
}

TEST(Certificate, InequalitiesOnLattice) {
    for (int n : {3, 4, 5}) {
        const double tmax = std::log(1.5) / (2.0 * (n - 1));
        for (double frac : {0.1, 0.5, 1.0}) {
            const double t = frac * tmax;
            const auto ev = curvature_certificate(t, n, 0.3, -n * (n - 1.0), 1.0, 2.0);
            for (std::size_t k = 1; k < ev.t_k.size(); ++k) EXPECT_LT(ev.t_k[k], 0.75 * ev.t_k[k - 1]);
            EXPECT_LT(ev.t_k.back(), 1e-16 * 2.1);
            EXPECT_LT(ev.sum_t, 4 * t);
            const double pp = ev.prefactor * ev.product;
            EXPECT_LT(pp, 1.0);
            EXPECT_GT(pp, std::exp((2.0 - 3 * n) * (n - 1) * t));
            EXPECT_GT(ev.tail, 0.0);
            EXPECT_NEAR(ev.bound, ev.a_inf * pp - ev.C * ev.tail, 1e-12 * (1 + std::abs(ev.bound)));
        }
    }
}

TEST(Certificate, TailMatchesDirectSum) {
    const double t = 0.05, beta = 0.3, D = 2.0;
    const int n = 3;
    const double E = std::exp(4 * t) - 1;
    long double direct = 0;
    for (int i = 1; i < 200; ++i)
        direct += std::pow(2.0L, i) / E * std::exp(-std::pow(E, 2 * beta - 1) * std::pow(2.0L, (1 - 2 * beta) * i) / D);
    const auto ev = curvature_certificate(t, n, beta, 0.0, 1.0, D);
    EXPECT_NEAR(ev.tail, double(direct), 1e-10 * double(direct));
}

TEST(Certificate, RejectsBadInputs) {
    EXPECT_THROW(curvature_certificate(0.1, 3, 0.5, 0, 1, 1), DomainError);
    EXPECT_THROW(curvature_certificate(0.1, 3, 0.0, 0, 1, 1), DomainError);
    EXPECT_THROW(curvature_certificate(0.2, 3, 0.2, 0, 1, 1), DomainError);
    EXPECT_THROW(curvature_certificate(0.0, 3, 0.2, 0, 1, 1), DomainError);
}

TEST(LocalNorms, BallWeightsGiveHyperbolicVolume) {
    const auto g = RadialGrid::log(3, 0.2, 50.0, 6001);
    for (double s0 : {1.0, 5.0})
        for (double r : {0.1, 0.3}) {
            const auto bw = ball_weights(g, std::asinh(s0), r);
            double vol = 0;
            for (double w : bw.w) vol += w;
            const double exact = pi * (std::sinh(2 * r) - 2 * r);
            EXPECT_NEAR(vol / exact, 1.0, 2e-3) << s0 << " " << r;
        }
}

TEST(LocalNorms, CapFractionLimits) {
    EXPECT_DOUBLE_EQ(cap_fraction(3, 1.0, 1.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(cap_fraction(3, 1.0, 5.0, 0.5), 0.0);
    // n = 3: the cap fraction is (1 - c)/2
    const double d = 1.2, d0 = 1.0, r = 0.3;
    const double c = (std::cosh(d) * std::cosh(d0) - std::cosh(r)) / (std::sinh(d) * std::sinh(d0));
    EXPECT_NEAR(cap_fraction(3, d, d0, r), 0.5 * (1 - c), 1e-14);
}

TEST(LocalNorms, ZeroHistoryHasZeroNorm) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 400);
    const auto H = flow_integrate(zero_perturbation(3), g, log_times(1e-5, 0.01, 24), quiet());
    const auto rep = xt_norms(H, 0.01);
    EXPECT_NEAR(rep.xt, 0.0, 1e-14);
    EXPECT_NEAR(rep.sup_term, 0.0, 1e-14);
    EXPECT_THROW(xt_norms(H, 1e-4), DomainError);
}

TEST(LocalNorms, ComponentsNonnegativeAndLinearForSmallData) {
    const auto g = RadialGrid::log_step(3, 0.5, 100.0, 0.01);
    std::vector<double> xt;
    for (double amp : {0.01, 0.02}) {
        const auto H = flow_integrate(c2_bump(amp, 4.0, 0.5, 3), g, log_times(1e-5, 0.01, 24), quiet());
        const auto rep = xt_norms(H, 0.01);
        EXPECT_GE(rep.gradient.full, 0.0);
        EXPECT_GE(rep.gradient.half, 0.0);
        EXPECT_GT(rep.xt, rep.sup_term);
        xt.push_back(rep.xt);
    }
    EXPECT_NEAR(xt[1] / xt[0], 2.0, 0.05);
}

TEST(LocalNorms, SourceNormOfConstantField) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 2000);
    std::vector<double> ts = log_times(1e-6, 0.04, 30);
    ts.insert(ts.begin(), 0.0);
    std::vector<std::vector<double>> f0(ts.size(), std::vector<double>(g.size(), 1.0)), f1 = f0;
    for (auto& v : f1) std::fill(v.begin(), v.end(), 0.0);
    const auto rep = yt_norms(g, ts, f0, f1, 0.04, 100, 1500);
    // r^{-n} |B_r| r^2 + r^{4/(n+4)} (|B_r| r^2/2)^{2/(n+4)}, largest at the largest r
    const double r = std::sqrt(0.02);
    const double vol = pi * (std::sinh(2 * r) - 2 * r);
    const double expect = std::pow(r, -3) * vol * r * r + std::pow(r, 4.0 / 7) * std::pow(vol * r * r / 2, 2.0 / 7);
    EXPECT_NEAR(rep.yt / expect, 1.0, 5e-3);
    EXPECT_EQ(rep.y1->value, 0.0);
}

TEST(Smoothing, SmoothDataKeepsDerivativesBounded) {
    const auto e = schwarzschild_ads(0.01, 3);
    const auto g = RadialGrid::log_step(3, e.s_lo, 150.0, 0.01);
    const auto H = flow_integrate(e, g, log_times(1e-4, 1e-2, 12), quiet());
    const auto f = smoothing_exponents(H, 1e-4, 1e-2);
    EXPECT_FALSE(f.applicable);
    EXPECT_GT(f.slope1, -0.15);
    EXPECT_LT(f.slope1, 0.05);
}

TEST(Smoothing, RejectsShortHistory) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 200);
    const auto H = flow_integrate(zero_perturbation(3), g, log_times(1e-3, 1e-2, 5), quiet());
    EXPECT_THROW(smoothing_exponents(H, 1e-3, 1e-2), DomainError);
}

TEST(WeakScalar, HyperbolicMetricHoldsWithEquality) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 400);
    const auto H = flow_integrate(zero_perturbation(3), g, log_times(1e-6, 1e-3, 10), quiet());
    const auto rep = weak_scalar_lower_bound(H, 2.0, 10.0, 0.25);
    EXPECT_TRUE(rep.holds);
    EXPECT_NEAR(rep.liminf, -6.0, 1e-12);
}

TEST(WeakScalar, SchwarzschildHolds) {
    const auto e = schwarzschild_ads(0.01, 3);
    const auto g = RadialGrid::log_step(3, e.s_lo, 150.0, 0.01);
    const auto H = flow_integrate(e, g, log_times(1e-6, 1e-3, 10), quiet());
    const auto rep = weak_scalar_lower_bound(H, 2.0, 20.0, 0.25);
    EXPECT_TRUE(rep.holds) << rep.liminf;
}

TEST(WeakScalar, NegativeBumpFails) {
    const auto e = c2_bump(-0.05, 4.0, 0.5, 3);
    const auto g = RadialGrid::log_step(3, 0.5, 150.0, 0.01);
    const auto H = flow_integrate(e, g, log_times(1e-6, 1e-3, 10), quiet());
    const auto rep = weak_scalar_lower_bound(H, 2.0, 20.0, 0.25);
    EXPECT_FALSE(rep.holds);
    EXPECT_LT(rep.liminf, -6.0 - 1e-2);
}

TEST(WeakScalar, WindowOutsideGridThrows) {
    const auto g = RadialGrid::log(3, 0.5, 100.0, 400);
    const auto H = flow_integrate(zero_perturbation(3), g, log_times(1e-6, 1e-3, 10), quiet());
    EXPECT_THROW(weak_scalar_lower_bound(H, 0.6, 10.0, 0.25), DomainError);
}
