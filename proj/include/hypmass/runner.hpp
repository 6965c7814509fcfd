#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "suite.hpp"

// Experiment dispatch for the command line tool: validation, execution, artifacts.
namespace hypmass::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using config::Config;
using config::ConfigError;

inline const std::vector<std::string>& experiments() {
    static const std::vector<std::string> all{"mass_table", "flow_run",    "cutoff_drift", "two_radius",
                                              "kernel",     "certificate", "verify_all"};
    return all;
}

inline const std::vector<std::string>& families() {
    static const std::vector<std::string> all{"schwarzschild", "zero", "conformal", "c0_kink", "c2_bump",
                                              "log_oscillation"};
    return all;
}

// Runs body(0..count-1) on up to `jobs` threads. Each index owns its output slot, so results do
// not depend on scheduling. The first failing index (in index order) is rethrown.
template <class F>
void parallel_for(std::size_t count, int jobs, F&& body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < count;) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Invariant {
    std::string name;
    bool pass = false;
    json values = json::object();
    bool counted = true;  // informational lines are reported but never fail the run
    std::string note;
};

struct Series {
    std::string name;
    std::vector<double> x, y;
    json meta = json::object();
};

// Everything an experiment produces. Files land in `dir` immediately; the rest is written at the end.
class Report {
public:
    explicit Report(fs::path dir) : dir_(std::move(dir)) {}

    json results = json::object();
    std::vector<Invariant> invariants;
    std::vector<Series> series;

    void invariant(std::string name, bool pass, json values = json::object(), std::string note = {}) {
        invariants.push_back({std::move(name), pass, std::move(values), true, std::move(note)});
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        f << content;
        files_.push_back(name);
    }
    void csv(const std::string& name, const io::CsvWriter& w) { write(name, w.str()); }

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// metric and cutoff from the configuration

inline RadialPerturbation make_metric(const Config& c) {
    const int n = static_cast<int>(c.integer("n"));
    const std::string fam = c.text("metric.family");
    const double amp = c.real("metric.amplitude");
    if (fam == "schwarzschild") return schwarzschild_ads(c.real("metric.m"), n);
    if (fam == "zero") return zero_perturbation(n);
    if (fam == "conformal") return conformal(amp, n);
    if (fam == "c0_kink")
        return c0_kink(amp, c.real("metric.tau"), c.real("metric.kink_scale"), n, c.real("metric.rise"));
    if (fam == "c2_bump") return c2_bump(amp, c.real("metric.center"), c.real("metric.width"), n);
    if (fam == "log_oscillation") return log_oscillation(amp, n, c.real("grid.s_min"));
    throw c.error("metric.family", "unknown family");
}

inline CutoffFunction make_cutoff(const Config& c) {
    return bump_cutoff(c.real("mass.cutoff_center"), c.real("mass.cutoff_width"));
}

inline RadialGrid make_grid(const Config& c) {
    return RadialGrid::log_step(static_cast<int>(c.integer("n")), c.real("grid.s_min"), c.real("grid.s_max"),
                                c.real("grid.hx"));
}

inline suite::DriftSetup drift_setup(const Config& c) {
    suite::DriftSetup s;
    s.phi = make_cutoff(c);
    s.theta = c.real("cutoff.theta");
    s.eta = c.real("cutoff.eta");
    s.flow_s_min = c.real("cutoff.flow_s_min");
    s.flow_hx = c.real("cutoff.flow_hx");
    s.stride = static_cast<int>(c.integer("cutoff.drift_stride"));
    s.rprime_factor = c.real("cutoff.rprime_factor");
    s.options.levels = static_cast<int>(c.integer("cutoff.levels"));
    s.options.hx = c.real("cutoff.hx");
    return s;
}

// ---------------------------------------------------------------------------
// validation: every gate a module would enforce, reported against the offending key

inline void validate(const Config& c) {
    auto need = [&](const std::string& key, bool ok, const std::string& what) {
        if (!ok) throw c.error(key, what);
    };
    auto increasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1])) return false;
        return true;
    };
    const std::string exp = c.text("experiment");
    need("experiment", std::count(experiments().begin(), experiments().end(), exp) > 0,
         "unknown experiment (mass_table, flow_run, cutoff_drift, two_radius, kernel, certificate, verify_all)");
    if (exp == "verify_all") {
        for (long long id : c.integers("verify.criteria"))
            need("verify.criteria", id >= 1 && id <= suite::criterion_count(),
                 "criterion ids run from 1 to " + std::to_string(suite::criterion_count()));
        return;
    }
    const long long n = c.integer("n");
    need("n", n >= 3 && n <= 10, "dimension must lie in [3, 10]");
    need("seed", c.integer("seed") >= 0, "seed must be nonnegative");

    const std::string fam = c.text("metric.family");
    need("metric.family", std::count(families().begin(), families().end(), fam) > 0,
         "unknown family (schwarzschild, zero, conformal, c0_kink, c2_bump, log_oscillation)");
    need("metric.m", c.real("metric.m") >= 0, "mass parameter must be nonnegative");
    need("metric.amplitude", std::isfinite(c.real("metric.amplitude")), "amplitude must be finite");
    need("metric.tau", c.real("metric.tau") > 0, "decay rate must be positive");
    need("metric.kink_scale", c.real("metric.kink_scale") > 1, "kink period must exceed 1");
    need("metric.rise", c.real("metric.rise") > 0 && c.real("metric.rise") < 1, "rise fraction must lie in (0, 1)");
    need("metric.width", c.real("metric.width") > 0, "bump width must be positive");
    need("metric.center", c.real("metric.center") > 0, "bump centre must be positive");
    need("grid.s_min", c.real("grid.s_min") > 0, "grid must start at positive s");
    need("grid.s_max", c.real("grid.s_max") > 4 * c.real("grid.s_min"), "grid.s_max must exceed 4 grid.s_min");
    need("grid.hx", c.real("grid.hx") > 0 && c.real("grid.hx") <= 0.05, "ln s step must lie in (0, 0.05]");

    const double cc = c.real("mass.cutoff_center"), cw = c.real("mass.cutoff_width");
    need("mass.cutoff_width", cw > 0 && cc - cw > 0.9 && cc + cw < 1.1,
         "bump support (center - width, center + width) must sit inside (0.9, 1.1)");

    if (exp == "mass_table") {
        const auto radii = c.reals("mass.radii");
        need("mass.radii", radii.front() > 0 && increasing(radii), "radii must be positive and increasing");
    }
    if (exp == "flow_run") {
        const double T = c.real("flow.horizon");
        need("flow.t_max", c.real("flow.t_max") > 0, "T_max must be positive");
        need("flow.horizon", T > 0 && T <= c.real("flow.t_max"), "horizon must lie in (0, flow.t_max]");
        need("flow.t_first", c.real("flow.t_first") > 0 && c.real("flow.t_first") < T,
             "first snapshot must lie in (0, flow.horizon)");
        need("flow.snapshots", c.integer("flow.snapshots") >= 20, "norms need at least 20 snapshots");
        need("flow.dt_max", c.real("flow.dt_max") > 0, "largest step must be positive");
        need("flow.eps_max", c.real("flow.eps_max") > 0 && c.real("flow.eps_max") < 1, "eps_max must lie in (0, 1)");
    }
    if (exp == "cutoff_drift" || exp == "two_radius") {
        const auto radii = c.reals("cutoff.radii");
        need("cutoff.radii", increasing(radii), "radii must increase");
        need("cutoff.radii", radii.front() > std::sqrt(n - 1.0) / 0.9, "radii must exceed sqrt(n-1)/0.9");
        need("cutoff.levels", c.integer("cutoff.levels") >= 8, "need at least 8 time levels");
        need("cutoff.hx", c.real("cutoff.hx") > 0 && c.real("cutoff.hx") <= 0.01, "ln s step must lie in (0, 0.01]");
        need("cutoff.flow_hx", c.real("cutoff.flow_hx") > 0 && c.real("cutoff.flow_hx") <= 0.05,
             "flow ln s step must lie in (0, 0.05]");
        need("cutoff.flow_s_min", c.real("cutoff.flow_s_min") > 0, "flow grid must start at positive s");
        need("cutoff.drift_stride", c.integer("cutoff.drift_stride") >= 1, "stride must be positive");
        need("cutoff.profile_stride", c.integer("cutoff.profile_stride") >= 1, "stride must be positive");
        for (const char* key : {"cutoff.drift_annulus", "cutoff.gap_annulus"}) {
            const auto a = c.reals(key);
            need(key, a.size() == 2 && a[0] > 0 && a[0] < 0.9 && a[1] > 1.1, "annulus must be (lo < 0.9, hi > 1.1)");
        }
        const double theta = c.real("cutoff.theta"), eta = c.real("cutoff.eta");
        const double limit = cutoff_theta_limit(make_cutoff(c), static_cast<int>(n));
        const std::string range = "cutoff PDE admissible range 0 < theta < 2 d_ab^2/n = " + io::format_double(limit);
        if (exp == "cutoff_drift") {
            need("cutoff.theta", theta >= 0, "theta must be 0 (theta = r^-eta) or positive");
            if (theta > 0) need("cutoff.theta", theta < limit, "outside the " + range);
            else
                for (double r : radii)
                    need("cutoff.eta", std::pow(r, -eta) < limit,
                         "theta = r^-eta = " + io::format_double(std::pow(r, -eta)) + " at r = " +
                             io::format_double(r) + " is outside the " + range);
        } else {
            const double f = c.real("cutoff.rprime_factor");
            need("cutoff.rprime_factor", f >= 1.1 / 0.9 && f <= 10, "r'/r must lie in [1.1/0.9, 10]");
            const double tau = make_metric(c).tau;
            if (std::isfinite(tau))
                need("cutoff.eta", eta >= 0.5 * (tau - 1) && eta < 2 * tau - n,
                     "eta must lie in [(tau-1)/2, 2 tau - n) = [" + io::format_double(0.5 * (tau - 1)) + ", " +
                         io::format_double(2 * tau - n) + ")");
            const double horizon = c.real("flow.horizon");
            for (double r : radii) {
                need("cutoff.eta", std::pow(r, -eta) < horizon,
                     "r^-eta = " + io::format_double(std::pow(r, -eta)) + " at r = " + io::format_double(r) +
                         " must stay below flow.horizon");
                need("cutoff.eta", std::pow(r, -eta) < limit,
                     "theta = r^-eta at r = " + io::format_double(r) + " is outside the " + range);
            }
        }
    }
    if (exp == "kernel") {
        const double sigma0 = c.real("kernel.sigma0");
        need("kernel.sigma0", sigma0 > 0 && sigma0 <= 0.1, "source width must lie in (0, 0.1]");
        need("kernel.cells_per_width", c.real("kernel.cells_per_width") >= 8, "source must be resolved by >= 8 cells");
        need("kernel.tail_tolerance", c.real("kernel.tail_tolerance") > 0, "tolerance must be positive");
        need("kernel.d_max", c.real("kernel.d_max") > 1, "outer wall must exceed 1");
        need("kernel.output_stride", c.integer("kernel.output_stride") >= 1, "stride must be positive");
        const auto times = c.reals("kernel.times");
        need("kernel.times", times.front() > 0 && increasing(times), "times must be positive and increasing");
        const double trusted = KernelOptions{}.trusted_factor * sigma0 * sigma0;
        const auto first = std::find_if(times.begin(), times.end(), [&](double t) { return t >= trusted; });
        need("kernel.times", first != times.end() && times.back() >= 10 * *first,
             "the fit needs a decade of times at or after 4 sigma0^2 = " + io::format_double(trusted));
    }
    if (exp == "certificate") {
        const double t = c.real("certificate.t"), tmax = std::log(1.5) / (2.0 * (n - 1));
        need("certificate.t", t > 0 && t <= tmax, "t must lie in (0, ln(3/2)/(2(n-1))] = (0, " + io::format_double(tmax) + "]");
        need("certificate.beta", c.real("certificate.beta") > 0 && c.real("certificate.beta") < 0.5,
             "beta must lie in (0, 1/2)");
        need("certificate.D", c.real("certificate.D") > 0, "D must be positive");
        need("certificate.C", c.real("certificate.C") >= 0, "C must be nonnegative");
    }
}

// ---------------------------------------------------------------------------
// experiments

namespace detail {

inline double loglog_slope_positive(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0 && y[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 2) return std::nan("");
    double slope, icpt;
    least_squares(lx, ly, slope, icpt);
    return slope;
}

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline void mass_table(const Config& c, Report& rep, int jobs) {
    const auto e = make_metric(c);
    const auto phi = make_cutoff(c);
    const auto radii = c.reals("mass.radii");
    const bool smooth = at_least(e.regularity, Regularity::C1);
    std::vector<MassBreakdown> rows(radii.size());
    std::vector<double> literal(radii.size()), averaged(radii.size(), std::nan(""));
    parallel_for(radii.size(), jobs, [&](std::size_t i) {
        rows[i] = mass_c0(e, phi, radii[i]);
        literal[i] = mass_c0_literal(e, phi, radii[i]).mass_c0;
        if (smooth) averaged[i] = averaged_mass_c2(e, phi, radii[i]);
    });

    io::CsvWriter table({"r", "mass_c0", "mass_c2_mid", "boundary_term", "bulk_trace_term", "bulk_radial_term"});
    io::CsvWriter compare({"r", "mass_c0_literal", "averaged_mass_c2"});
    Series s{"mass_c2_vs_r", {}, {}, {{"quantity", smooth ? "mass_c2_mid" : "mass_c0"}}};
    double worst_avg = 0, largest = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const auto& m = rows[i];
        table.row({radii[i], m.mass_c0, m.mass_c2_mid(), m.boundary_term, m.bulk_trace_term, m.bulk_radial_term});
        compare.row({radii[i], literal[i], averaged[i]});
        s.x.push_back(radii[i]);
        s.y.push_back(smooth ? m.mass_c2_mid() : m.mass_c0);
        if (smooth) worst_avg = std::max(worst_avg, std::abs(m.mass_c0 - averaged[i]) / (std::abs(averaged[i]) + 1e-12));
        largest = std::max({largest, std::abs(m.mass_c0), std::abs(literal[i]), smooth ? std::abs(m.mass_c2_mid()) : 0.0});
    }
    rep.csv("mass_table.csv", table);
    rep.csv("mass_compare.csv", compare);

    rep.results["regularity"] = to_string(e.regularity);
    rep.results["cutoff"] = {{"family", "bump"}, {"center", c.real("mass.cutoff_center")},
                             {"width", c.real("mass.cutoff_width")}, {"integral", phi.integral}};
    rep.results["mass_c0_at_largest_r"] = rows.back().mass_c0;
    if (smooth) {
        rep.results["mass_c2_at_largest_r"] = detail::num(rows.back().mass_c2_mid());
        rep.invariant("mass_c0 equals the phi-average of mass_c2", worst_avg <= 1e-6, {{"max_rel_error", worst_avg}});
        if (radii.size() >= 3) {
            const auto a = fit_mass_aspect(radii, s.y);
            rep.results["mass_aspect"] = {{"status", to_string(a.status)},
                                          {"extrapolated_limit", detail::num(a.extrapolated_limit)},
                                          {"convergence_order", detail::num(a.convergence_order)}};
        }
    }
    const bool zero = c.text("metric.family") == "zero" || (c.text("metric.family") == "schwarzschild" && c.real("metric.m") == 0);
    if (zero) rep.invariant("zero perturbation has zero mass", largest == 0, {{"max_abs_mass", largest}});
    rep.series.push_back(std::move(s));
}

inline void flow_run(const Config& c, Report& rep, int jobs) {
    const auto e0 = make_metric(c);
    const auto grid = make_grid(c);
    FlowOptions opt;
    opt.dt_max = c.real("flow.dt_max");
    opt.eps_max = c.real("flow.eps_max");
    opt.t_max = c.real("flow.t_max");
    const double T = c.real("flow.horizon");
    const auto H = flow_integrate(e0, grid, log_times(c.real("flow.t_first"), T, static_cast<int>(c.integer("flow.snapshots"))), opt);

    const std::size_t K = H.states.size();
    std::vector<double> xt(K, std::nan(""));
    parallel_for(K, jobs, [&](std::size_t k) {
        const double t = H.states[k].t;
        if (t > 0 && hypmass::detail::count_in_horizon(H, t) >= 20) xt[k] = xt_norms(H, t).xt;
    });

    io::CsvWriter diag({"t", "sup_h", "sup_Dh", "sup_D2h", "inf_R", "X_T_partial"});
    Series s{"sup_Dh_vs_t", {}, {}, {{"axes", "log-log"}}};
    bool nonincreasing = true, xt_ok = true;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& st = H.states[k];
        diag.row({st.t, st.diag.sup_h, st.diag.sup_Dh, st.diag.sup_D2h, st.diag.inf_R, xt[k]});
        if (k > 1 && st.diag.sup_h > 1.01 * H.states[k - 1].diag.sup_h) nonincreasing = false;
        if (std::isfinite(xt[k]) && xt[k] < 0) xt_ok = false;
        if (st.t > 0) {
            s.x.push_back(st.t);
            s.y.push_back(st.diag.sup_Dh);
        }
        io::CsvWriter a({"s", "alpha"}), b({"s", "beta"});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            a.row({grid[i], st.alpha[i]});
            b.row({grid[i], st.beta[i]});
        }
        const std::string tag = io::format_double(st.t);
        rep.csv("profiles/alpha_t" + tag + ".csv", a);
        rep.csv("profiles/beta_t" + tag + ".csv", b);
    }
    rep.csv("flow_diag.csv", diag);
    s.meta["slope"] = detail::num(detail::loglog_slope_positive(s.x, s.y));

    rep.results["steps"] = H.steps;
    rep.results["nodes"] = grid.size();
    rep.results["sup_h_initial"] = H.states.front().diag.sup_h;
    rep.results["sup_h_final"] = H.states.back().diag.sup_h;
    rep.results["X_T"] = detail::num(xt.back());
    rep.results["sup_h_nonincreasing_within_1pct"] = nonincreasing;
    try {
        const auto fit = smoothing_exponents(H, c.real("flow.t_first"), T);
        rep.results["smoothing"] = {{"applicable", fit.applicable}, {"slope1", fit.slope1}, {"slope2", fit.slope2},
                                    {"c1", fit.c1}, {"c2", fit.c2}, {"samples", fit.samples}};
    } catch (const DomainError& err) {
        rep.results["smoothing"] = {{"applicable", false}, {"reason", err.what()}};
    }
    rep.invariant("snapshots reach the horizon", std::abs(H.states.back().t - T) <= 1e-12 * T, {{"t_last", H.states.back().t}});
    rep.invariant("X_T components nonnegative", xt_ok, {{"X_T", detail::num(xt.back())}});
    rep.series.push_back(std::move(s));
}

inline void cutoff_drift(const Config& c, Report& rep, int jobs) {
    const auto e0 = make_metric(c);
    const auto setup = drift_setup(c);
    const auto radii = c.reals("cutoff.radii");
    const int n = e0.n;
    std::vector<suite::DriftRow> rows(radii.size());
    CutoffProfile first;
    parallel_for(radii.size(), jobs, [&](std::size_t i) {
        rows[i] = suite::drift_row(e0, setup, radii[i], false, i == 0 ? &first : nullptr);
    });

    const std::size_t stride = static_cast<std::size_t>(c.integer("cutoff.profile_stride"));
    io::CsvWriter profile({"s", "t", "phi1", "phi", "varphi_theta"});
    for (std::size_t j = 0; j < first.levels(); ++j) {
        if (j % stride != 0 && j + 1 != first.levels()) continue;
        for (std::size_t i = 0; i < first.grid.size(); i += stride)
            profile.row({first.grid[i], first.times[j], first.phi1[j][i], first.lifted(j, i), first.normalized(j, i)});
    }
    rep.csv("cutoff_profile.csv", profile);

    io::CsvWriter verbatim({"r", "theta", "drift", "normalized_drift"}), lifted({"r", "theta", "drift", "normalized_drift"});
    Series sv{"drift_vs_r", {}, {}, {{"weight", "verbatim"}}}, sl{"drift_lifted_vs_r", {}, {}, {{"weight", "lifted"}}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        verbatim.row({r.r, r.theta, r.verbatim.drift, r.verbatim.normalized_drift});
        lifted.row({r.r, r.theta, r.lifted.drift, r.lifted.normalized_drift});
        sv.x.push_back(r.r);
        sv.y.push_back(r.verbatim.drift);
        sl.x.push_back(r.r);
        sl.y.push_back(r.lifted.drift);
        const auto& k = r.checks;
        const std::string at = " r=" + io::format_double(r.r);
        rep.invariant("phi1 nonnegative" + at, k.min_value >= 0, {{"min_value", k.min_value}});
        rep.invariant("final data reproduced" + at, k.final_data_error <= 1e-12 * std::max(1.0, k.max_final),
                      {{"error", k.final_data_error}});
        rep.invariant("sup phi1 bounded by final data" + at, k.max_value <= k.max_final * (1 + 1e-12),
                      {{"sup", k.max_value}, {"sup_final", k.max_final}});
    }
    rep.csv("drift.csv", verbatim);
    rep.csv("drift_lifted.csv", lifted);
    const double cap = n - 2 * e0.tau + 0.7;
    for (Series* s : {&sv, &sl}) {
        s->meta["slope"] = detail::num(detail::loglog_slope_positive(s->x, s->y));
        s->meta["slope_cap"] = detail::num(cap);
    }
    rep.results["tau"] = detail::num(e0.tau);
    rep.results["potential_extension"] = {{"below", "2n-3"},
                                          {"blend", "cosine smoothstep"},
                                          {"blend_lo", setup.options.blend_lo},
                                          {"blend_hi", setup.options.blend_hi},
                                          {"grid_lo", setup.options.lo_factor},
                                          {"grid_hi", setup.options.hi_factor}};
    rep.results["annuli"] = {{"drift", c.reals("cutoff.drift_annulus")}, {"gap", c.reals("cutoff.gap_annulus")}};
    rep.series.push_back(std::move(sv));
    rep.series.push_back(std::move(sl));
}

inline void two_radius(const Config& c, Report& rep, int jobs) {
    const auto e0 = make_metric(c);
    const auto setup = drift_setup(c);
    const auto radii = c.reals("cutoff.radii");
    const double horizon = c.real("flow.horizon");
    std::vector<TwoRadiusGap> gv(radii.size()), gl(radii.size());
    parallel_for(radii.size(), jobs, [&](std::size_t i) {
        const double r = radii[i], rp = setup.rprime_factor * r;
        gv[i] = two_radius_gap(e0, setup.phi, setup.phi, r, rp, setup.eta, CutoffWeight::Verbatim, horizon, setup.options);
        gl[i] = two_radius_gap(e0, setup.phi, setup.phi, r, rp, setup.eta, CutoffWeight::Lifted, horizon, setup.options);
    });
    io::CsvWriter out({"r", "rprime", "theta", "theta_prime", "mass_r_verbatim", "mass_rprime_verbatim", "gap_verbatim",
                       "mass_r_lifted", "mass_rprime_lifted", "gap_lifted"});
    Series sv{"gap_vs_r", {}, {}, {{"weight", "verbatim"}, {"y", "|gap|"}}};
    Series sl{"gap_lifted_vs_r", {}, {}, {{"weight", "lifted"}, {"y", "|gap|"}}};
    for (std::size_t i = 0; i < radii.size(); ++i) {
        out.row({gv[i].r, gv[i].rprime, gv[i].theta, gv[i].theta_prime, gv[i].mass_r, gv[i].mass_rprime, gv[i].gap,
                 gl[i].mass_r, gl[i].mass_rprime, gl[i].gap});
        sv.x.push_back(radii[i]);
        sv.y.push_back(std::abs(gv[i].gap));
        sl.x.push_back(radii[i]);
        sl.y.push_back(std::abs(gl[i].gap));
    }
    rep.csv("two_radius.csv", out);
    const double cap = e0.n - 2 * e0.tau + setup.eta + 0.7;
    for (Series* s : {&sv, &sl}) {
        s->meta["exponent"] = detail::num(detail::loglog_slope_positive(s->x, s->y));
        s->meta["exponent_cap"] = detail::num(cap);
    }
    rep.results["tau"] = detail::num(e0.tau);
    rep.results["eta"] = setup.eta;
    rep.results["annuli"] = {{"drift", c.reals("cutoff.drift_annulus")}, {"gap", c.reals("cutoff.gap_annulus")}};
    rep.series.push_back(std::move(sv));
    rep.series.push_back(std::move(sl));
}

inline void kernel(const Config& c, Report& rep, int) {
    const int n = static_cast<int>(c.integer("n"));
    KernelOptions opt;
    opt.cells_per_width = c.real("kernel.cells_per_width");
    opt.tail_tolerance = c.real("kernel.tail_tolerance");
    const auto run = solve_kernel(n, c.reals("kernel.times"), c.real("kernel.sigma0"), opt, c.real("kernel.d_max"));
    const auto fit = gaussian_bound_fit(run);

    const std::size_t stride = static_cast<std::size_t>(c.integer("kernel.output_stride"));
    io::CsvWriter out({"t", "s", "K"});
    Series s{"sup_K_vs_t", {}, {}, {{"axes", "log-log"}}};
    double mass_err = 0, min_v = 0, worst = 0;
    bool decreasing = true, compared = false;
    const double age = source_age(run.sigma0);
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        for (std::size_t i = 0; i < run.d.size(); i += stride) out.row({run.times[k], std::sinh(run.d[i]), run.K[k][i]});
        mass_err = std::max(mass_err, std::abs(run.mass[k] - 1));
        if (k > 0 && !(run.sup(k) < run.sup(k - 1))) decreasing = false;
        for (double v : run.K[k]) min_v = std::min(min_v, v);
        s.x.push_back(run.times[k]);
        s.y.push_back(run.sup(k));
        if (n != 3 || run.times[k] < 0.05 || run.times[k] > 0.5) continue;
        for (std::size_t i = 0; i < run.d.size(); ++i) {
            if (run.d[i] < 0.1 || run.d[i] > 3.0) continue;
            compared = true;
            worst = std::max(worst, std::abs(run.K[k][i] / hyperbolic3_kernel(run.d[i], run.times[k] + age) - 1));
        }
    }
    rep.csv("kernel.csv", out);
    s.meta["slope"] = detail::num(detail::loglog_slope_positive(s.x, s.y));

    json tails = json::array();
    bool tails_ok = true;
    for (const auto& t : fit.tails) {
        tails.push_back({{"t", t.t}, {"r", t.r}, {"tail", t.tail}, {"bound", t.bound}, {"gaussian", t.gaussian},
                         {"holds", t.holds}});
        tails_ok = tails_ok && t.holds;
    }
    json fj = {{"C", fit.C}, {"D", fit.D}, {"on_diagonal", fit.on_diagonal}, {"C_tail", fit.C_tail},
               {"samples", fit.samples}, {"tail_checks", tails}};
    rep.write("kernel_fit.json", fj.dump(2) + "\n");

    rep.results["steps"] = run.steps;
    rep.results["cells"] = run.d.size();
    rep.results["trusted_time"] = run.trusted_time();
    rep.results["source_age"] = age;
    rep.results["C"] = fit.C;
    rep.results["D"] = fit.D;
    rep.invariant("mass conservation", mass_err <= 1e-3, {{"max_mass_error", mass_err}});
    rep.invariant("positivity", min_v >= 0, {{"min_value", min_v}});
    rep.invariant("sup strictly decreasing", decreasing);
    rep.invariant("tail checks hold", tails_ok, {{"checks", fit.tails.size()}});
    if (compared) rep.invariant("n=3 closed form within 2%", worst < 0.02, {{"max_rel_error", worst}});
    rep.series.push_back(std::move(s));
}

inline void certificate(const Config& c, Report& rep, int) {
    const int n = static_cast<int>(c.integer("n"));
    const double t = c.real("certificate.t");
    const auto ev = curvature_certificate(t, n, c.real("certificate.beta"), c.real("certificate.a_inf"),
                                          c.real("certificate.C"), c.real("certificate.D"));
    io::CsvWriter out({"k", "t_k"});
    bool contract = true;
    for (std::size_t k = 0; k < ev.t_k.size(); ++k) {
        out.row({double(k), ev.t_k[k]});
        if (k > 0 && !(ev.t_k[k] < 0.75 * ev.t_k[k - 1])) contract = false;
    }
    rep.csv("certificate.csv", out);
    const double pp = ev.prefactor * ev.product, floor = std::exp((2.0 - 3 * n) * (n - 1) * t);
    rep.results["terms"] = ev.t_k.size();
    rep.results["sum_t"] = ev.sum_t;
    rep.results["product"] = ev.product;
    rep.results["prefactor"] = ev.prefactor;
    rep.results["tail"] = ev.tail;
    rep.results["bound"] = ev.bound;
    rep.invariant("t_k < (3/4) t_{k-1}", contract, {{"t_1", ev.t_k.size() > 1 ? ev.t_k[1] : 0.0}});
    rep.invariant("sum t_i < 4 t", ev.sum_t < 4 * t, {{"sum_t", ev.sum_t}, {"four_t", 4 * t}});
    rep.invariant("prefactor*product in (e^{(2-3n)(n-1)t}, 1)", pp > floor && pp < 1, {{"value", pp}, {"lower", floor}});
}

inline void verify_all(const Config& c, Report& rep, int jobs) {
    const auto ids = c.integers("verify.criteria");
    suite::Settings st;
    st.seed = static_cast<unsigned long long>(c.integer("seed"));
    std::vector<suite::Criterion> crit(ids.size());
    parallel_for(ids.size(), jobs, [&](std::size_t i) {
        try {
            crit[i] = suite::run(static_cast<int>(ids[i]), st);
        } catch (const std::exception& e) {
            crit[i].id = static_cast<int>(ids[i]);
            crit[i].title = "error";
            crit[i].checks.push_back({"threw", false, {}, e.what(), false});
        }
    });
    io::CsvWriter out({"criterion", "title", "check", "status", "key", "value"});
    json list = json::array();
    for (const auto& cr : crit) {
        list.push_back({{"id", cr.id}, {"title", cr.title}, {"pass", cr.pass()}});
        for (const auto& k : cr.checks) {
            const std::string status = k.informational ? "info" : (k.pass ? "ok" : "fail");
            json values = json::object();
            for (const auto& v : k.values) {
                values[v.key] = detail::num(v.value);
                out.row_text({std::to_string(cr.id), cr.title, k.name, status, v.key, io::format_double(v.value)});
            }
            if (k.values.empty()) out.row_text({std::to_string(cr.id), cr.title, k.name, status, "", ""});
            rep.invariants.push_back({"criterion " + std::to_string(cr.id) + " (" + cr.title + "): " + k.name,
                                      k.informational || k.pass, values, !k.informational, k.note});
        }
    }
    rep.csv("verify.csv", out);
    rep.results["criteria"] = list;
}

// ---------------------------------------------------------------------------
// artifacts shared by all experiments

inline json typed_echo(const Config& c) {
    json out = json::object();
    for (const auto& k : config::keys()) {
        switch (k.kind) {
            case config::Kind::Real: out[k.key] = c.real(k.key); break;
            case config::Kind::Integer: out[k.key] = c.integer(k.key); break;
            case config::Kind::Text: out[k.key] = c.text(k.key); break;
            case config::Kind::RealList: out[k.key] = c.reals(k.key); break;
            case config::Kind::IntList: out[k.key] = c.integers(k.key); break;
        }
    }
    return out;
}

inline const std::map<std::string, std::string>& column_docs() {
    static const std::map<std::string, std::string> docs{
        {"mass_table.csv", "r: cutoff radius; mass_c0: C0 local mass with the V0-lifted cutoff; mass_c2_mid: M_C2 at r "
                           "(nan for C0 data); boundary_term, bulk_trace_term, bulk_radial_term: the three parts of the "
                           "C0 functional before division by r * int(phi)"},
        {"mass_compare.csv", "r; mass_c0_literal: C0 functional with the unlifted weight phi(s/r); averaged_mass_c2: "
                             "phi-average of M_C2 over [0.9r, 1.1r] (nan for C0 data)"},
        {"flow_diag.csv", "t: flow time; sup_h, sup_Dh, sup_D2h: b-norm sups over the region of interest; inf_R: "
                          "infimum of scalar curvature; X_T_partial: X_T norm over (0, t] (nan while fewer than 20 "
                          "snapshots are available)"},
        {"cutoff_profile.csv", "profile of the smallest radius, subsampled by cutoff.profile_stride in t and s. s; t; "
                               "phi1: solution of the cutoff PDE; phi: V0 * phi1; varphi_theta: phi / (1 + s^2)"},
        {"drift.csv", "r; theta; drift: int |d/dt (mass * normalizer)| dt; normalized_drift: int |d/dt mass| dt. "
                      "Weight phi1 / V0"},
        {"drift_lifted.csv", "as drift.csv with the lifted weight phi1"},
        {"two_radius.csv", "r; rprime = cutoff.rprime_factor * r; theta = r^-eta; theta_prime = rprime^-eta; t = 0 "
                           "cutoff masses at both radii and their gap, for the verbatim and lifted weights"},
        {"kernel.csv", "t; s = sinh(d) for the cell centre at geodesic distance d, subsampled by kernel.output_stride; "
                       "K: kernel value"},
        {"kernel_fit.json", "C, D: Gaussian bound constants; on_diagonal: sup_t K(0,t) t^{n/2}; C_tail; tail_checks: "
                            "b-mass outside r = k sqrt(t) against the integrated bound"},
        {"certificate.csv", "k; t_k of the recurrence"},
        {"verify.csv", "criterion; title; check; status (ok, fail, info); key; value"},
        {"series.csv", "series; x; y: long-format plot data, one block per series listed in summary.json"},
        {"effective.conf", "the effective configuration, defaults included, in config syntax"},
    };
    return docs;
}

inline std::string columns_markdown(const std::vector<std::string>& files) {
    std::string out = "# Output columns\n\n";
    bool profiles = false;
    for (const auto& f : files) {
        if (f.rfind("profiles/", 0) == 0) {
            profiles = true;
            continue;
        }
        if (auto it = column_docs().find(f); it != column_docs().end()) out += "- `" + f + "`: " + it->second + "\n";
    }
    if (profiles)
        out += "- `profiles/alpha_t<t>.csv`, `profiles/beta_t<t>.csv`: snapshot profiles (s, alpha) and (s, beta) at "
               "flow time t\n";
    out += "- `summary.json`: experiment, every configuration key, results, series metadata, invariants, status\n";
    return out;
}

inline json invariant_json(const Invariant& v) {
    json j = {{"name", v.name}, {"pass", v.pass}, {"values", v.values}};
    if (!v.counted) j["informational"] = true;
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

struct Outcome {
    int exit_code = 0;
    std::size_t invariants = 0, failed = 0;
};

// Runs a validated configuration and writes every artifact into the configured output directory.
inline Outcome execute(const Config& c, int jobs) {
    static const std::map<std::string, void (*)(const Config&, Report&, int)> table{
        {"mass_table", mass_table}, {"flow_run", flow_run}, {"cutoff_drift", cutoff_drift},
        {"two_radius", two_radius}, {"kernel", kernel},     {"certificate", certificate},
        {"verify_all", verify_all}};
    const std::string exp = c.text("experiment");
    Report rep(c.text("out"));
    std::error_code ec;
    fs::create_directories(rep.dir(), ec);
    if (ec || !fs::is_directory(rep.dir())) throw c.error("out", "output directory is not writable");

    table.at(exp)(c, rep, jobs);

    io::CsvWriter series({"series", "x", "y"});
    json series_meta = json::array();
    for (const auto& s : rep.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
            series.row_text({s.name, io::format_double(s.x[i]), io::format_double(s.y[i])});
        series_meta.push_back({{"name", s.name}, {"points", s.x.size()}, {"meta", s.meta}});
    }
    rep.csv("series.csv", series);
    rep.write("effective.conf", config::serialize(c));
    rep.write("columns.md", columns_markdown(rep.files()));

    Outcome o;
    json inv = json::array();
    for (const auto& v : rep.invariants) {
        inv.push_back(invariant_json(v));
        if (!v.counted) continue;
        ++o.invariants;
        if (!v.pass) ++o.failed;
    }
    std::vector<std::string> missing;
    for (const auto& f : rep.files())
        if (!fs::is_regular_file(rep.dir() / f)) missing.push_back(f);
    o.exit_code = (o.failed == 0 && missing.empty()) ? 0 : 1;

    json summary = {{"experiment", exp},
                    {"config", typed_echo(c)},
                    {"results", rep.results},
                    {"series", series_meta},
                    {"invariants", inv},
                    {"status", o.exit_code == 0 ? "pass" : "fail"},
                    {"files", rep.files()}};
    if (!missing.empty()) summary["missing_outputs"] = missing;
    std::ofstream(rep.dir() / "summary.json", std::ios::binary) << summary.dump(2) << "\n";
    if (!fs::is_regular_file(rep.dir() / "summary.json")) o.exit_code = 1;
    return o;
}

// ---------------------------------------------------------------------------
// command line entry

struct Invocation {
    std::string experiment;  // empty: take it from the configuration
    std::string config_path;
    std::optional<std::string> out;
    std::optional<long long> seed;
    int jobs = 1;
};

inline Config load(const Invocation& inv) {
    Config c;
    if (!inv.config_path.empty()) {
        std::ifstream f(inv.config_path);
        if (!f) throw ConfigError(0, "cannot read config file '" + inv.config_path + "'");
        c = config::parse(f);
    }
    if (!inv.experiment.empty()) {
        const bool cutoff_pair = inv.experiment == "cutoff_drift" && c.text("experiment") == "two_radius";
        if (c.explicitly_set("experiment") && c.text("experiment") != inv.experiment && !cutoff_pair)
            throw c.error("experiment", "does not match the subcommand (expects " + inv.experiment + ")");
        if (!cutoff_pair) c.set("experiment", inv.experiment);
    }
    if (inv.out) c.set("out", *inv.out);
    if (inv.seed) c.set("seed", std::to_string(*inv.seed));
    validate(c);
    return c;
}

// exit code: 2 for configuration problems, 1 for failed invariants or errors, 0 otherwise
inline int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
    try {
        const Config c = load(inv);
        const Outcome o = execute(c, inv.jobs);
        out << c.text("experiment") << ": " << (o.exit_code == 0 ? "pass" : "fail") << " (" << o.invariants - o.failed
            << "/" << o.invariants << " invariants), outputs in " << c.text("out") << "\n";
        return o.exit_code;
    } catch (const ConfigError& e) {
        err << "hypmass: config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "hypmass: parameters outside the module's domain: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "hypmass: error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hypmass::runner
