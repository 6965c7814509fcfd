#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cutoffs.hpp"
#include "io/csv.hpp"
#include "heatkernel.hpp"
#include "oracles.hpp"

// the verification suite: one entry per acceptance criterion
namespace hypmass::suite {

struct Value {
    std::string key;
    double value = 0;
};

struct Check {
    std::string name;
    bool pass = false;
    std::vector<Value> values;
    std::string note;
    bool informational = false;  // reported, not counted
};

struct Criterion {
    int id = 0;
    std::string title;
    double budget_seconds = 0;  // runtime budget, 0 when none
    std::vector<Check> checks;

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.informational || c.pass; });
    }
};

struct Settings {
    unsigned long long seed = 1;
};

namespace detail {

inline Check check(std::string name, bool pass, std::vector<Value> values, std::string note = {}) {
    return {std::move(name), pass, std::move(values), std::move(note), false};
}

inline Check info(std::string name, std::vector<Value> values, std::string note = {}) {
    return {std::move(name), true, std::move(values), std::move(note), true};
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    double slope = 0, icpt = 0;
    least_squares(lx, ly, slope, icpt);
    return slope;
}

inline double pair_slope(double x0, double y0, double x1, double y1) {
    return std::log(std::abs(y1 / y0)) / std::log(x1 / x0);
}

inline double spread(const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline Criterion laplacian_identities(const Settings&) {
    using detail::check;
    Criterion c{1, "radial Laplacian identities", 1.0, {}};
    for (int n : {3, 4}) {
        const auto g = RadialGrid::log(n, 0.1, 1000.0, 4001);
        const auto V = sample(g, static_potential);
        const auto lapV = radial_laplacian(g, V);
        const auto inv = sample(g, [](double s) { return 1.0 / s; });
        const auto lapI = radial_laplacian(g, inv);
        double eV = 0, eI = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = g[i], want = (2.0 - n) / s + (3.0 - n) / (s * s * s);
            eV = std::max(eV, std::abs(lapV[i] / (n * V[i]) - 1));
            eI = std::max(eI, std::abs(lapI[i] - want) / (std::abs(want) + 1 / s));
        }
        const std::string tag = " n=" + std::to_string(n);
        c.checks.push_back(check("Lap V0 = n V0" + tag, eV <= 1e-6, {{"max_rel_error", eV}}));
        c.checks.push_back(check("Lap(1/s) closed form" + tag, eI <= 1e-6, {{"max_rel_error", eI}}));

        for (int which : {0, 1}) {
            std::vector<double> hs, errs;
            for (int N : {126, 251, 501, 1001}) {
                const auto gr = RadialGrid::log(n, 0.1, 1000.0, N);
                const auto u = sample(gr, [which](double s) { return which ? 1.0 / s : static_potential(s); });
                const auto lap = radial_laplacian(gr, u);
                double e = 0;
                for (std::size_t i = 0; i < gr.size(); ++i) {
                    const double s = gr[i];
                    const double want = which ? (2.0 - n) / s + (3.0 - n) / (s * s * s) : n * static_potential(s);
                    e = std::max(e, std::abs(lap[i] - want) / (std::abs(want) + (which ? 1 / s : 0.0)));
                }
                hs.push_back(gr.hx());
                errs.push_back(e);
            }
            const double order = detail::loglog_slope(hs, errs);
            c.checks.push_back(check(std::string("observed order ") + (which ? "Lap(1/s)" : "Lap V0") + tag, order >= 3.5,
                                     {{"order", order}, {"finest_error", errs.back()}}));
        }
    }
    return c;
}

inline Criterion mass_averaging(const Settings&) {
    Criterion c{2, "mass-averaging identity", 10.0, {}};
    const auto e = schwarzschild_ads(0.1, 3);
    for (const auto& phi : {bump_cutoff(), bump_cutoff(0.98, 0.06), bump_cutoff(1.03, 0.04)})
        for (double r : {50.0, 200.0}) {
            const double m0 = mass_c0(e, phi, r).mass_c0, avg = averaged_mass_c2(e, phi, r);
            const double rel = std::abs(m0 - avg) / std::abs(mass_c2(e, r));
            c.checks.push_back(detail::check(phi.name + " r=" + io::format_double(r), rel <= 1e-6,
                                             {{"mass_c0", m0}, {"average_c2", avg}, {"rel_error", rel}}));
        }
    return c;
}

inline Criterion mass_limit(const Settings&) {
    using detail::check;
    Criterion c{3, "mass limit", 0, {}};
    const int n = 3;
    for (double r : {5.0, 20.0}) {
        const auto e = schwarzschild_ads(0.1, n);
        const double brute = oracle::brute_force_mass_c2(e, r), radial = mass_c2(e, r);
        const double rel = std::abs(radial - brute) / std::abs(brute);
        c.checks.push_back(check("radial reduction vs sphere quadrature r=" + io::format_double(r), rel <= 5e-3,
                                 {{"radial", radial}, {"sphere_quadrature", brute}, {"rel_error", rel}}));
    }
    const double want = 2 * (n - 1) * sphere_volume(n) * 0.1;
    const double got = mass_c2(schwarzschild_ads(0.1, n), 1e3);
    const double rel = std::abs(got - want) / want;
    c.checks.push_back(check("M_C2(1000) vs 2(n-1) omega m", rel <= 5e-3, {{"mass", got}, {"limit", want}, {"rel_error", rel}}));
    const double doubled = mass_c2(schwarzschild_ads(0.2, n), 1e3);
    const double ratio = doubled / got;
    c.checks.push_back(check("doubling m doubles the limit", std::abs(ratio / 2 - 1) <= 1e-3, {{"ratio", ratio}}));
    return c;
}

inline Criterion curvature_bookkeeping(const Settings&) {
    using detail::check;
    Criterion c{4, "scalar-curvature bookkeeping", 0, {}};
    const auto e = schwarzschild_ads(0.2, 3);
    const auto full = quadratic_defect(e, 2.0, 20.0), half = quadratic_defect(scaled(e, 0.5), 2.0, 20.0);
    const double tol = 1e-10 * (1 + std::abs(full.lhs));
    c.checks.push_back(check("scalar integral vanishes", std::abs(full.scalar_integral) <= tol,
                             {{"scalar_integral", full.scalar_integral}, {"lhs", full.lhs}}));
    const double ratio = full.defect / half.defect;
    c.checks.push_back(check("defect ratio under e -> e/2", std::abs(ratio - 4) <= 0.6,
                             {{"defect", full.defect}, {"defect_half", half.defect}, {"ratio", ratio}}));
    return c;
}

inline Criterion flow_linearization(const Settings&) {
    using detail::check;
    Criterion c{5, "flow fixed point and linearization", 5.0, {}};
    for (int n : {3, 4}) {
        const auto g = RadialGrid::log(n, 0.5, 100.0, 400);
        const std::vector<double> z(g.size(), 0.0);
        const auto r = flow_rhs(g, z, z);
        double m = 0;
        for (std::size_t i = 0; i < g.size(); ++i) m = std::max({m, std::abs(r.alpha[i]), std::abs(r.beta[i])});
        const std::string tag = " n=" + std::to_string(n);
        c.checks.push_back(check("flow_rhs(b) = 0" + tag, m <= 1e-12, {{"max_abs", m}}));

        std::vector<double> ratio;
        for (double lam : {1e-2, 1e-3, 1e-4}) {
            double worst = 0;
            for (double s = 0.3; s < 20; s *= 1.17) {
                const Jet a = oracle::direction_alpha(s), b = oracle::direction_beta(s);
                const Jet la{lam * a.v, lam * a.d1, lam * a.d2}, lb{lam * b.v, lam * b.d1, lam * b.d2};
                const TensorRate full = flow_rate(n, s, la, lb);
                const TensorRate lin = minus_L(n, s, a, b);
                worst = std::max({worst, std::abs(full.alpha - lam * lin.alpha) / (lam * lam),
                                  std::abs(full.beta - lam * lin.beta) / (lam * lam)});
            }
            ratio.push_back(worst);
        }
        const double sp = detail::spread(ratio);
        c.checks.push_back(check("defect / lambda^2 bounded" + tag, sp <= 1.1 && ratio[0] > 0,
                                 {{"lambda_1e-2", ratio[0]}, {"lambda_1e-3", ratio[1]}, {"lambda_1e-4", ratio[2]}, {"spread", sp}}));
    }
    return c;
}

inline Criterion reparametrization(const Settings&) {
    Criterion c{6, "normalized / unnormalized conjugation", 0, {}};
    const auto e = c2_bump(0.05, 3.0, 0.6, 3);
    std::vector<double> res;
    for (int level = 0; level < 3; ++level) {
        const double f = std::pow(0.5, level);
        const auto g = RadialGrid::log_step(3, 0.5, 60.0, 0.02 * f);
        FlowOptions o;
        o.t_max = 0.2;
        o.dt_max = 4e-4 * f;
        res.push_back(reparametrization_residual(e, g, 2e-3 * f, int(5 / f), o, 4e-3).max_residual);
    }
    for (int k = 0; k < 2; ++k) {
        const double ratio = res[k] / res[k + 1];
        c.checks.push_back(detail::check("refinement " + std::to_string(k) + " -> " + std::to_string(k + 1), ratio >= 1.5,
                                         {{"coarse", res[k]}, {"fine", res[k + 1]}, {"ratio", ratio}}));
    }
    return c;
}

inline Criterion smoothing_rates(const Settings&) {
    using detail::check;
    Criterion c{7, "smoothing rates", 120.0, {}};
    const int n = 3;
    const auto g = RadialGrid::log_step(n, 0.5, 150.0, 0.002);
    {
        const auto H = flow_integrate(c0_kink(0.05, 0.5, std::exp(1.0), n, 0.01), g, log_times(1e-5, 1e-2, 31));
        const auto f = smoothing_exponents(H, 3e-4, 1e-2);
        c.checks.push_back(check("slope of log sup|Dh| vs log t", f.slope1 >= -0.65 && f.slope1 <= -0.35,
                                 {{"slope1", f.slope1}, {"slope2", f.slope2}, {"samples", double(f.samples)}}));
    }
    const auto unit = c0_kink(1.0, 0.5, std::exp(1.0), n, 0.01);
    const double sup1 = sup_norm_h(n, sample_alpha(unit, g), sample_beta(unit, g), 0, g.size());
    std::vector<double> C;
    std::vector<Value> vals;
    for (double a : {0.01, 0.03, 0.1}) {
        const auto H = flow_integrate(c0_kink(a / sup1 * (1 - 1e-12), 0.5, std::exp(1.0), n, 0.01), g, log_times(1e-6, 1e-2, 40));
        const auto rep = xt_norms(H, 1e-2);
        C.push_back(rep.xt / a);
        vals.push_back({"C_at_" + io::format_double(a), C.back()});
    }
    const double sp = detail::spread(C);
    vals.push_back({"spread", sp});
    c.checks.push_back(check("X_T <= C sup|e0| with one C", sp < 2.0, vals));
    return c;
}

inline Criterion scalar_evolution(const Settings&) {
    using detail::check;
    Criterion c{8, "scalar evolution identity", 0, {}};
    FlowOptions o;
    o.t_max = 0.2;
    {
        const auto g = RadialGrid::log(3, 0.5, 100.0, 300);
        const auto rep = scalar_evolution_residual(flow_integrate(zero_perturbation(3), g, {1e-3, 2e-3, 3e-3}, o));
        c.checks.push_back(check("exact at g = b", rep.max_residual <= 1e-10, {{"residual", rep.max_residual}}));
    }
    const auto e = c2_bump(0.05, 3.0, 0.6, 3);
    std::vector<double> res;
    for (int level = 0; level < 3; ++level) {
        const double f = std::pow(0.5, level);
        const auto g = RadialGrid::log_step(3, 0.5, 60.0, 0.02 * f);
        FlowOptions of = o;
        of.dt_max = 4e-4 * f;
        const auto H = flow_integrate(e, g, {0.01 - 1e-3 * f, 0.01, 0.01 + 1e-3 * f}, of);
        res.push_back(scalar_evolution_residual(H).max_residual);
    }
    for (int k = 0; k < 2; ++k) {
        const double order = std::log2(res[k] / res[k + 1]);
        c.checks.push_back(check("order " + std::to_string(k) + " -> " + std::to_string(k + 1), order >= 1,
                                 {{"coarse", res[k]}, {"fine", res[k + 1]}, {"order", order}}));
    }
    return c;
}

inline Criterion certificate(const Settings&) {
    using detail::check;
    Criterion c{9, "lower-bound certificate", 1.0, {}};
    const double oracle_t1 = double(std::log((std::exp(0.4L) + 1) / 2) / 4);
    const auto ev = curvature_certificate(0.1, 3, 0.3, -6.0, 1.0, 2.0);
    const double t1 = ev.t_k.at(1);
    c.checks.push_back(check("t1(n=3, t=0.1)", std::abs(t1 - oracle_t1) <= 1e-6,
                             {{"t1", t1}, {"oracle", oracle_t1}, {"stated", 0.0549741}, {"stated_minus_oracle", 0.0549741 - oracle_t1}},
                             "checked against the closed-form recurrence; the stated value differs by 7.1e-6"));
    for (int n : {3, 4, 5}) {
        const double tmax = std::log(1.5) / (2.0 * (n - 1));
        for (double frac : {0.1, 0.5, 1.0}) {
            const double t = frac * tmax;
            const auto e = curvature_certificate(t, n, 0.3, -n * (n - 1.0), 1.0, 2.0);
            const double pp = e.prefactor * e.product, lo = std::exp((2.0 - 3 * n) * (n - 1) * t);
            const bool ok = e.sum_t < 4 * t && pp < 1 && pp > lo;
            c.checks.push_back(check("n=" + std::to_string(n) + " t=" + io::format_double(t), ok,
                                     {{"sum_t_over_t", e.sum_t / t}, {"prefactor_product", pp}, {"lower", lo}}));
        }
    }
    return c;
}

inline Criterion cutoff_solver(const Settings&) {
    using detail::check;
    Criterion c{10, "cutoff solver", 0, {}};
    const int n = 3;
    const auto phi = bump_cutoff();
    std::vector<double> val, slope, curv;
    for (double r : {20.0, 40.0, 80.0}) {
        const auto P = solve_cutoff(phi, r, 8e-4, n);
        const auto ch = check_profile(P);
        const std::string tag = " r=" + io::format_double(r);
        c.checks.push_back(check("positivity" + tag, ch.min_value >= 0, {{"min_value", ch.min_value}}));
        c.checks.push_back(check("final data" + tag, ch.final_data_error <= 1e-12, {{"error", ch.final_data_error}}));
        const auto t = bound_triplet(P);
        val.push_back(t.value / r);
        slope.push_back(t.slope);
        curv.push_back(t.curvature * r);
    }
    const double s0 = detail::spread(val), s1 = detail::spread(slope), s2 = detail::spread(curv);
    c.checks.push_back(check("bound triplet with one C", s0 <= 1.05 && s1 <= 1.05 && s2 <= 1.05,
                             {{"C_value", *std::max_element(val.begin(), val.end())},
                              {"C_slope", *std::max_element(slope.begin(), slope.end())},
                              {"C_curvature", *std::max_element(curv.begin(), curv.end())},
                              {"spread_value", s0},
                              {"spread_slope", s1},
                              {"spread_curvature", s2}}));
    std::vector<BoundarySample> S;
    for (double r : {20.0, 40.0})
        for (double th : {2e-4, 4e-4, 8e-4, 1.6e-3}) S.push_back({r, th, boundary_value(solve_cutoff(phi, r, th, n))});
    const auto f = fit_boundary(S, n, phi.d_ab());
    c.checks.push_back(check("boundary smallness fits one (C, c)", f.consistent,
                             {{"log_C", f.log_C}, {"c", f.c}, {"max_log_residual", f.max_log_residual}},
                             "the boundary value decays over a fixed distance in ln s, not over d r"));
    return c;
}

inline Criterion cancellation(const Settings& st) {
    using detail::check;
    Criterion c{11, "cancellation A = B = 0", 0, {}};
    {
        std::mt19937_64 rng(st.seed);
        std::uniform_real_distribution<double> U(-1, 1);
        double worst = 0;
        for (int n : {3, 4})
            for (int k = 0; k < 100; ++k) {
                const double s = 2 + 100 * std::abs(U(rng)), p = U(rng), dp = U(rng);
                const double X = lifted_pde_rhs(n, s, p, dp), Xp = lifted_derivative_rhs(n, s, p, dp);
                const auto t = cancellation_terms(n, s, p, dp, X, Xp);
                const double scale = std::abs(X) + std::abs(Xp) + std::abs(p) + std::abs(dp);
                worst = std::max({worst, std::abs(t.A) / scale, std::abs(t.B) / scale});
            }
        c.checks.push_back(check("transcribed A, B vanish on the lifted equation", worst <= 1e-13, {{"max_rel", worst}}));
    }
    const auto phi = bump_cutoff();
    std::vector<CancellationReport> R;
    CutoffProfile finest;
    const std::vector<std::pair<double, int>> ladder{{2e-3, 512}, {1e-3, 2048}, {5e-4, 8192}};
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        CutoffOptions o;
        o.hx = ladder[k].first;
        o.levels = ladder[k].second;
        CancellationOptions co;
        co.level_stride = ladder[k].second / 64;
        auto P = solve_cutoff(phi, 20, 8e-4, 3, o);
        R.push_back(cancellation_residual(P, co));
        if (k + 1 == ladder.size()) finest = std::move(P);
    }
    for (std::size_t k = 0; k + 1 < R.size(); ++k) {
        const double ra = R[k].A_residual / R[k + 1].A_residual, rb = R[k].B_residual / R[k + 1].B_residual;
        c.checks.push_back(check("halving " + std::to_string(k) + " -> " + std::to_string(k + 1), ra >= 3 && rb >= 3,
                                 {{"A_coarse", R[k].A_residual}, {"A_fine", R[k + 1].A_residual}, {"A_ratio", ra},
                                  {"B_coarse", R[k].B_residual}, {"B_fine", R[k + 1].B_residual}, {"B_ratio", rb}}));
    }
    CancellationOptions frozen;
    frozen.freeze_time = true;
    frozen.level_stride = 128;
    const auto F = cancellation_residual(finest, frozen);
    const double fa = F.A_residual / R.back().A_residual, fb = F.B_residual / R.back().B_residual;
    c.checks.push_back(check("static-data control", fa >= 100 && fb >= 100, {{"A_factor", fa}, {"B_factor", fb}}));
    return c;
}

struct DriftSetup {
    CutoffFunction phi = bump_cutoff();
    double theta = 0;  // 0: theta = r^-eta
    double eta = 1;
    double flow_s_min = 2.0, flow_hx = 0.005;
    int stride = 8;
    double rprime_factor = 2;
    CutoffOptions options;
};

struct DriftRow {
    double r = 0, theta = 0;
    DriftReport verbatim, lifted;
    TwoRadiusGap gap_verbatim, gap_lifted;
    CutoffChecks checks;
};

inline double drift_theta(const DriftSetup& s, double r) { return s.theta > 0 ? s.theta : std::pow(r, -s.eta); }

inline DriftRow drift_row(const RadialPerturbation& e0, const DriftSetup& s, double r, bool with_gap = true,
                          CutoffProfile* keep = nullptr) {
    const int n = e0.n;
    DriftRow row;
    row.r = r;
    row.theta = drift_theta(s, r);
    auto P = solve_cutoff(s.phi, r, row.theta, n, s.options);
    row.checks = check_profile(P);
    const auto grid = RadialGrid::log_step(n, s.flow_s_min, 1.1 * r / 0.8 * 1.1, s.flow_hx);
    const auto H = flow_integrate(e0, grid, drift_times(P, s.stride));
    row.verbatim = mass_drift(H, P, CutoffWeight::Verbatim);
    row.lifted = mass_drift(H, P, CutoffWeight::Lifted);
    if (with_gap) {
        row.gap_verbatim = two_radius_gap(e0, s.phi, s.phi, r, s.rprime_factor * r, s.eta, CutoffWeight::Verbatim, 0.05, s.options);
        row.gap_lifted = two_radius_gap(e0, s.phi, s.phi, r, s.rprime_factor * r, s.eta, CutoffWeight::Lifted, 0.05, s.options);
    }
    if (keep) *keep = std::move(P);
    return row;
}

inline Criterion drift_scaling(const Settings&) {
    Criterion c{12, "mass drift scaling", 600.0, {}};
    const int n = 3;
    const double tau = n, eta = 0.5 * (tau - 1);
    const double drift_cap = n - 2 * tau + 0.7, gap_cap = n - 2 * tau + eta + 0.7;
    const auto e0 = schwarzschild_ads(0.1, n, 0.0);
    DriftSetup setup;
    setup.eta = eta;
    std::vector<double> r{800, 1600, 3200}, dv, dl, gv, gl;
    for (double rad : r) {
        const auto row = drift_row(e0, setup, rad);
        dv.push_back(row.verbatim.drift);
        dl.push_back(row.lifted.drift);
        gv.push_back(row.gap_verbatim.gap);
        gl.push_back(row.gap_lifted.gap);
    }
    auto summarize = [&](const std::string& w, const std::vector<double>& drift, const std::vector<double>& gap) {
        const double s01 = detail::pair_slope(r[0], drift[0], r[1], drift[1]);
        const double s12 = detail::pair_slope(r[1], drift[1], r[2], drift[2]);
        const double ge = detail::loglog_slope(r, gap);
        c.checks.push_back(detail::info(w + " weight", {{"drift_slope_800_1600", s01},
                                                         {"drift_slope_1600_3200", s12},
                                                         {"drift_cap", drift_cap},
                                                         {"gap_exponent", ge},
                                                         {"gap_cap", gap_cap}}));
        return std::pair{s12 <= drift_cap, ge <= gap_cap};
    };
    const auto [vd, vg] = summarize("verbatim", dv, gv);
    const auto [ld, lg] = summarize("lifted", dl, gl);
    c.checks.push_back(detail::check("one functional meets both bounds", (vd && vg) || (ld && lg),
                                     {{"verbatim_drift_ok", double(vd)}, {"verbatim_gap_ok", double(vg)},
                                      {"lifted_drift_ok", double(ld)}, {"lifted_gap_ok", double(lg)}},
                                     "the verbatim weight meets the drift bound and misses the gap bound; the lifted weight the reverse"));
    return c;
}

inline Criterion heat_kernel(const Settings&) {
    using detail::check;
    Criterion c{13, "heat kernel", 0, {}};
    {
        const auto run = solve_kernel(3, {0.05, 0.1, 0.2, 0.3, 0.5}, 1e-2, {}, 6.0);
        const double age = source_age(run.sigma0);
        double worst = 0, mass_err = 0, min_v = 0;
        bool decreasing = true;
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            mass_err = std::max(mass_err, std::abs(run.mass[k] - 1));
            if (k > 0 && !(run.sup(k) < run.sup(k - 1))) decreasing = false;
            for (std::size_t i = 0; i < run.d.size(); ++i) {
                min_v = std::min(min_v, run.K[k][i]);
                const double dd = run.d[i];
                if (dd < 0.1 || dd > 3.0) continue;
                worst = std::max(worst, std::abs(run.K[k][i] / hyperbolic3_kernel(dd, run.times[k] + age) - 1));
            }
        }
        c.checks.push_back(check("mass conservation", mass_err <= 1e-3, {{"max_mass_error", mass_err}}));
        c.checks.push_back(check("positivity and decreasing sup", min_v >= 0 && decreasing, {{"min_value", min_v}}));
        c.checks.push_back(check("n=3 closed form", worst < 0.02, {{"max_rel_error", worst}, {"steps", double(run.steps)}}));
    }
    {
        std::vector<double> ts;
        for (int k = 0; k <= 8; ++k) ts.push_back(4e-4 * std::pow(2.0, k / 2.0));
        KernelOptions fine;
        fine.cells_per_width = 16;
        fine.tail_tolerance = 2.5e-3;
        const auto a = gaussian_bound_fit(solve_kernel(3, ts, 1e-2));
        const auto b = gaussian_bound_fit(solve_kernel(3, ts, 1e-2, fine));
        const double dD = std::abs(a.D - b.D) / b.D, dC = std::abs(a.C - b.C) / b.C;
        bool tails = true;
        for (const auto& t : a.tails) tails = tails && t.holds;
        c.checks.push_back(check("feasible Gaussian bound", a.D <= 8 && tails, {{"C", a.C}, {"D", a.D}}));
        c.checks.push_back(check("refinement-stable fit", dD <= 0.2 && dC <= 0.2,
                                 {{"C_fine", b.C}, {"D_fine", b.D}, {"dC", dC}, {"dD", dD}}));
    }
    for (auto [tbar, sbar] : {std::pair{1e-3, 0.0}, std::pair{0.01, 0.0}, std::pair{0.1, 0.06}}) {
        KernelOptions quick;
        quick.tail_distance = 2.0;
        const auto r = rescaled_kernel_identity(3, tbar, sbar, 1e-2, quick);
        c.checks.push_back(check("rescaled identity tbar=" + io::format_double(tbar) + " sbar=" + io::format_double(sbar),
                                 r.error <= 1e-2, {{"lhs", r.lhs}, {"rhs", r.rhs}, {"rel_error", r.error}}));
    }
    return c;
}

using Runner = std::function<Criterion(const Settings&)>;

inline const std::vector<Runner>& runners() {
    static const std::vector<Runner> all{laplacian_identities, mass_averaging,      mass_limit,   curvature_bookkeeping,
                                         flow_linearization,   reparametrization,   smoothing_rates, scalar_evolution,
                                         certificate,          cutoff_solver,       cancellation, drift_scaling,
                                         heat_kernel};
    return all;
}

inline int criterion_count() { return static_cast<int>(runners().size()); }

inline Criterion run(int id, const Settings& s) {
    if (id < 1 || id > criterion_count()) throw DomainError("suite: no criterion " + std::to_string(id));
    return runners()[id - 1](s);
}

}  // namespace hypmass::suite
