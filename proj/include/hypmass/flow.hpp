#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/special_functions/beta.hpp>

#include "core.hpp"
#include "curvature.hpp"
#include "hypgeom.hpp"
#include "metrics.hpp"

namespace hypmass {

// ---------------------------------------------------------------------------
// pointwise right-hand side of the normalized DeTurck flow

struct FlowPoint {
    double rate_alpha = 0, rate_beta = 0;
    double w = 0, dw = 0;  // radial DeTurck component W^s and its s-derivative
    WarpedCurvature curv{};
};

inline FlowPoint flow_point(int n, double s, const Jet& a, const Jet& b) {
    const WarpedMetric g = WarpedMetric::from_perturbation(s, a, b);
    const double q = 1 + s * s;
    const double A = g.A, A1 = g.A1, A2 = g.A2, B = g.B, B1 = g.B1, B2 = g.B2;
    const double A0 = 1 / q, A01 = -2 * s / (q * q), A02 = (6 * s * s - 2) / (q * q * q);
    const int m = n - 1;

    FlowPoint p;
    p.curv = warped_curvature(n, g);
    p.w = A1 / (2 * A * A) - m * B1 / (A * B) - A01 / (2 * A * A0) + m * s / (A0 * B * B);
    const double t1 = A2 / (2 * A * A) - A1 * A1 / (A * A * A);
    const double t2 = -m * (B2 / (A * B) - B1 * A1 / (A * A * B) - B1 * B1 / (A * B * B));
    const double t3 = -(A02 / (2 * A * A0) - A01 * A1 / (2 * A * A * A0) - A01 * A01 / (2 * A * A0 * A0));
    const double t4 = m * (1 / (A0 * B * B) - s * A01 / (A0 * A0 * B * B) - 2 * s * B1 / (A0 * B * B * B));
    p.dw = t1 + t2 + t3 + t4;

    const double dA = -2 * A * p.curv.ric_radial - 2 * m * A + p.w * A1 + 2 * A * p.dw;
    const double dB2 = -2 * p.curv.ric_tangential * B * B - 2 * m * B * B + 2 * p.w * B * B1;
    p.rate_alpha = q * dA;
    p.rate_beta = dB2 / (s * s);
    return p;
}

struct TensorRate {
    double alpha = 0, beta = 0;
};

inline TensorRate flow_rate(int n, double s, const Jet& a, const Jet& b) {
    const FlowPoint p = flow_point(n, s, a, b);
    return {p.rate_alpha, p.rate_beta};
}

// -L e with L h = -Lap h - 2h + 2 tr_b(h) b
inline TensorRate minus_L(int n, double s, const Jet& a, const Jet& b) {
    const double k2 = (1 + s * s) / (s * s);
    const double tr = a.v + (n - 1) * b.v;
    return {laplacian(n, s, a) - 2 * (n - 1) * k2 * (a.v - b.v) + 2 * a.v - 2 * tr,
            laplacian(n, s, b) + 2 * k2 * (a.v - b.v) + 2 * b.v - 2 * tr};
}

// ---------------------------------------------------------------------------
// grid evaluation

struct FlowDiagnostics {
    double sup_h = 0, sup_Dh = 0, sup_D2h = 0, inf_R = 0;
};

struct FlowState {
    double t = 0;
    std::vector<double> alpha, beta;
    std::vector<double> deturck_w;
    FlowDiagnostics diag;
};

struct GridRates {
    std::vector<double> alpha, beta, w, R;
};

inline GridRates flow_rhs(const RadialGrid& g, const std::vector<double>& alpha, const std::vector<double>& beta) {
    const int n = g.dimension();
    const auto a1 = g.d1(alpha), a2 = g.d2(alpha), b1 = g.d1(beta), b2 = g.d2(beta);
    GridRates r;
    const std::size_t N = g.size();
    r.alpha.resize(N);
    r.beta.resize(N);
    r.w.resize(N);
    r.R.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const FlowPoint p = flow_point(n, g[i], {alpha[i], a1[i], a2[i]}, {beta[i], b1[i], b2[i]});
        r.alpha[i] = p.rate_alpha;
        r.beta[i] = p.rate_beta;
        r.w[i] = p.w;
        r.R[i] = p.curv.R;
    }
    return r;
}

// ---------------------------------------------------------------------------
// integrator

struct FlowOptions {
    double dt_initial = 1e-8;
    double dt_growth = 1.1;
    double dt_max = 1e-3;
    double cfl = 2.0;
    double sponge_fraction = 0.95;
    double roi_lo_factor = 2.0;    // region of interest starts at this multiple of s_min
    double roi_hi_fraction = 0.8;  // and ends at this fraction of s_max
    double eps_max = 0.1;
    double t_max = 0.05;
    double blowup_factor = 4.0;
};

struct FlowHistory {
    RadialGrid grid;
    FlowOptions options;
    Regularity initial_regularity = Regularity::C2;
    std::vector<FlowState> states;
    std::size_t roi_begin = 0, roi_end = 0;  // [begin, end) node range
    std::size_t sponge_begin = 0;
    long steps = 0;

    int dimension() const { return grid.dimension(); }
    std::vector<double> times() const {
        std::vector<double> t;
        for (const auto& s : states) t.push_back(s.t);
        return t;
    }
    RadialPerturbation perturbation(std::size_t k) const {
        const auto& st = states.at(k);
        const Regularity reg = (k == 0) ? initial_regularity : Regularity::C2;
        return from_samples(grid, st.alpha, st.beta, reg, std::numeric_limits<double>::quiet_NaN(), "flow");
    }
};

inline double sup_norm_h(int n, const std::vector<double>& a, const std::vector<double>& b, std::size_t lo,
                         std::size_t hi) {
    double m = 0;
    for (std::size_t i = lo; i < hi; ++i) m = std::max(m, std::sqrt(a[i] * a[i] + (n - 1) * b[i] * b[i]));
    return m;
}

inline FlowDiagnostics diagnostics(const RadialGrid& g, const std::vector<double>& alpha,
                                   const std::vector<double>& beta, const std::vector<double>& R, std::size_t lo,
                                   std::size_t hi) {
    const int n = g.dimension();
    const auto a1 = g.d1(alpha), a2 = g.d2(alpha), b1 = g.d1(beta), b2 = g.d2(beta);
    FlowDiagnostics d;
    d.sup_h = sup_norm_h(n, alpha, beta, lo, hi);
    d.inf_R = std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i < hi; ++i) {
        const Jet a{alpha[i], a1[i], a2[i]}, b{beta[i], b1[i], b2[i]};
        d.sup_Dh = std::max(d.sup_Dh, std::sqrt(gradient_norm_sq(n, g[i], a, b)));
        d.sup_D2h = std::max(d.sup_D2h, hessian_norm_proxy(n, g[i], a, b));
        d.inf_R = std::min(d.inf_R, R[i]);
    }
    return d;
}

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;

// discrete -L with interleaved unknowns (alpha_i, beta_i) -> (2i, 2i+1)
inline std::vector<Eigen::Triplet<double>> minus_L_triplets(const RadialGrid& g, std::size_t lo, std::size_t hi) {
    const int n = g.dimension();
    const int N = static_cast<int>(g.size());
    const double h = g.hx();
    const auto& st = stencil4();
    std::vector<Eigen::Triplet<double>> T;
    for (std::size_t ii = lo; ii < hi; ++ii) {
        const int i = static_cast<int>(ii);
        const double s = g[ii], sx = g.sx(ii), sxx = g.sxx(ii);
        const double c2 = (1 + s * s) / (sx * sx);
        const double c1 = (n * s + (n - 1) / s) / sx - (1 + s * s) * sxx / (sx * sx * sx);
        const auto r1 = st.row(1, i, N), r2 = st.row(2, i, N);
        for (int comp = 0; comp < 2; ++comp) {
            for (std::size_t j = 0; j < r1.w.size(); ++j)
                T.emplace_back(2 * i + comp, 2 * (r1.offset + int(j)) + comp, c1 * r1.w[j] / h);
            for (std::size_t j = 0; j < r2.w.size(); ++j)
                T.emplace_back(2 * i + comp, 2 * (r2.offset + int(j)) + comp, c2 * r2.w[j] / (h * h));
        }
        const double k2 = (1 + s * s) / (s * s);
        T.emplace_back(2 * i, 2 * i, -2.0 * (n - 1) * k2);
        T.emplace_back(2 * i, 2 * i + 1, 2.0 * (n - 1) * k2 - 2.0 * (n - 1));
        T.emplace_back(2 * i + 1, 2 * i, 2 * k2 - 2.0);
        T.emplace_back(2 * i + 1, 2 * i + 1, -2 * k2 + 2.0 - 2.0 * (n - 1));
    }
    return T;
}

class ImexSolver {
public:
    ImexSolver(const RadialGrid& g, std::size_t sponge_begin) : g_(g), sponge_(sponge_begin) {
        const int N2 = 2 * static_cast<int>(g.size());
        auto T = minus_L_triplets(g, 1, sponge_begin);
        P_.resize(N2, N2);
        P_.setFromTriplets(T.begin(), T.end());
    }

    Eigen::VectorXd apply_P(const Eigen::VectorXd& u) const { return P_ * u; }

    // solve (I - c P) u = rhs on interior rows, constraint rows carried in rhs
    Eigen::VectorXd solve(double c, const Eigen::VectorXd& rhs) {
        Factor* f = nullptr;
        for (auto& cand : cache_)
            if (cand.c == c) f = &cand;
        if (!f) {
            if (cache_.size() >= 4) cache_.erase(cache_.begin());
            cache_.push_back(Factor{c, build(c)});
            f = &cache_.back();
        }
        Eigen::VectorXd x = f->lu->solve(rhs);
        if (f->lu->info() != Eigen::Success) throw NumericalError("flow: linear solve failed");
        return x;
    }

private:
    struct Factor {
        double c;
        std::shared_ptr<Eigen::SparseLU<SpMat>> lu;
    };

    std::shared_ptr<Eigen::SparseLU<SpMat>> build(double c) {
        const int N = static_cast<int>(g_.size());
        std::vector<Eigen::Triplet<double>> T;
        for (int k = 0; k < P_.outerSize(); ++k)
            for (SpMat::InnerIterator it(P_, k); it; ++it) T.emplace_back(it.row(), it.col(), -c * it.value());
        const auto r = stencil4().row(1, 0, N);
        for (int comp = 0; comp < 2; ++comp)
            for (std::size_t j = 0; j < r.w.size(); ++j) T.emplace_back(comp, 2 * (r.offset + int(j)) + comp, r.w[j]);
        for (int i = 2; i < 2 * N; ++i) T.emplace_back(i, i, 1.0);
        SpMat M(2 * N, 2 * N);
        M.setFromTriplets(T.begin(), T.end());
        M.makeCompressed();
        auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
        lu->compute(M);
        if (lu->info() != Eigen::Success) throw NumericalError("flow: factorization failed");
        return lu;
    }

    const RadialGrid& g_;
    std::size_t sponge_;
    SpMat P_;
    std::vector<Factor> cache_;
};

inline Eigen::VectorXd pack(const std::vector<double>& a, const std::vector<double>& b) {
    Eigen::VectorXd u(2 * a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        u[2 * i] = a[i];
        u[2 * i + 1] = b[i];
    }
    return u;
}

inline void unpack(const Eigen::VectorXd& u, std::vector<double>& a, std::vector<double>& b) {
    const std::size_t N = u.size() / 2;
    a.resize(N);
    b.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        a[i] = u[2 * i];
        b[i] = u[2 * i + 1];
    }
}

}  // namespace detail

inline FlowState make_state(const FlowHistory& H, double t, std::vector<double> alpha, std::vector<double> beta) {
    FlowState st;
    st.t = t;
    auto r = flow_rhs(H.grid, alpha, beta);
    st.deturck_w = std::move(r.w);
    st.diag = diagnostics(H.grid, alpha, beta, r.R, H.roi_begin, H.roi_end);
    st.alpha = std::move(alpha);
    st.beta = std::move(beta);
    return st;
}

// Snapshots at t = 0 and at each requested time.
inline FlowHistory flow_integrate(const RadialPerturbation& e0, const RadialGrid& grid, std::vector<double> times,
                                  const FlowOptions& opt = {}) {
    if (e0.n != grid.dimension()) throw DomainError("flow_integrate: dimension mismatch");
    if (!(grid.front() >= e0.s_lo && grid.back() <= e0.s_hi))
        throw DomainError("flow_integrate: grid leaves the domain of the initial data");
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.empty() || !(times.front() > 0))
        throw DomainError("flow_integrate: output times must be positive");
    if (times.back() > opt.t_max * (1 + 1e-12))
        throw DomainError("flow_integrate: horizon " + io::format_double(times.back()) + " exceeds T_max = " +
                          io::format_double(opt.t_max));

    const int n = grid.dimension();
    const std::size_t N = grid.size();
    FlowHistory H;
    H.grid = grid;
    H.options = opt;
    H.initial_regularity = e0.regularity;
    H.sponge_begin = N;
    H.roi_begin = N;
    H.roi_end = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (grid[i] >= opt.sponge_fraction * grid.back() && H.sponge_begin == N) H.sponge_begin = i;
        if (grid[i] >= opt.roi_lo_factor * grid.front() && grid[i] <= opt.roi_hi_fraction * grid.back()) {
            H.roi_begin = std::min(H.roi_begin, i);
            H.roi_end = i + 1;
        }
    }
    if (H.roi_end <= H.roi_begin) throw DomainError("flow_integrate: empty region of interest");
    if (H.sponge_begin < 8) throw DomainError("flow_integrate: grid too short for the sponge");

    std::vector<double> a0 = sample_alpha(e0, grid), b0 = sample_beta(e0, grid);
    const double sup0 = sup_norm_h(n, a0, b0, 0, N);
    if (sup0 > opt.eps_max * (1 + 1e-12))
        throw DomainError("flow_integrate: sup|e0| = " + io::format_double(sup0) + " exceeds eps_max = " +
                          io::format_double(opt.eps_max));

    H.states.push_back(make_state(H, 0.0, a0, b0));

    double lam = 0;
    for (std::size_t i = 1; i < H.sponge_begin; ++i) {
        const double s = grid[i];
        lam = std::max(lam, 4 * (1 + s * s) / (grid.sx(i) * grid.sx(i)) / (grid.hx() * grid.hx()));
    }

    detail::ImexSolver solver(grid, H.sponge_begin);
    const Eigen::VectorXd u0 = detail::pack(a0, b0);
    Eigen::VectorXd u = u0;
    std::vector<double> a = a0, b = b0;

    auto explicit_part = [&](const Eigen::VectorXd& v) {
        std::vector<double> va, vb;
        detail::unpack(v, va, vb);
        auto r = flow_rhs(grid, va, vb);
        Eigen::VectorXd F = detail::pack(r.alpha, r.beta);
        return Eigen::VectorXd(F - solver.apply_P(v));
    };
    auto impose = [&](Eigen::VectorXd& rhs) {
        rhs[0] = rhs[1] = 0.0;
        for (std::size_t i = H.sponge_begin; i < N; ++i) {
            rhs[2 * i] = u0[2 * i];
            rhs[2 * i + 1] = u0[2 * i + 1];
        }
    };

    // step sizes live on the ladder dt_initial * growth^k so that factorizations are reused
    double t = 0;
    int rung = 0;
    auto ladder = [&](int k) { return opt.dt_initial * std::pow(opt.dt_growth, k); };
    for (double target : times) {
        while (t < target * (1 - 1e-14)) {
            const double sup_now = sup_norm_h(n, a, b, 0, N);
            const double cap = sup_now > 0 ? std::min(opt.dt_max, opt.cfl / (sup_now * lam)) : opt.dt_max;
            while (rung > 0 && ladder(rung) > cap) --rung;
            const double dt = ladder(rung);
            const double rem = target - t;
            double step = dt;
            if (rem <= step) step = rem;
            else if (rem < 2 * step) step = 0.5 * rem;

            const Eigen::VectorXd E0 = explicit_part(u);
            Eigen::VectorXd rhs = u + step * E0;
            impose(rhs);
            const Eigen::VectorXd us = solver.solve(step, rhs);
            const Eigen::VectorXd Es = explicit_part(us);
            rhs = u + 0.5 * step * (solver.apply_P(u) + E0 + Es);
            impose(rhs);
            u = solver.solve(0.5 * step, rhs);
            t = (step == rem) ? target : t + step;
            ++H.steps;

            detail::unpack(u, a, b);
            for (std::size_t i = 0; i < N; ++i)
                if (!(1 + a[i] > 0 && 1 + b[i] > 0) || !std::isfinite(a[i]) || !std::isfinite(b[i]))
                    throw NumericalError("flow: positivity lost at t = " + io::format_double(t));
            if (sup_norm_h(n, a, b, 0, N) > opt.blowup_factor * std::max(sup0, 1e-300) && sup0 > 0)
                throw NumericalError("flow: sup-norm growth beyond " + io::format_double(opt.blowup_factor) +
                                     "x at t = " + io::format_double(t));
            if (ladder(rung + 1) <= cap) ++rung;
        }
        H.states.push_back(make_state(H, target, a, b));
    }
    return H;
}

// sup over [s_lo, s_hi] of |e^{2(n-1)t} (1 + h) - (1 + h_0)| over both components, for each snapshot
inline std::vector<double> rescaled_initial_defect(const FlowHistory& H, double s_lo, double s_hi) {
    const int n = H.dimension();
    const auto& z = H.states.front();
    std::vector<double> out;
    for (const auto& st : H.states) {
        const double c = std::exp(2.0 * (n - 1) * st.t);
        double m = 0;
        for (std::size_t i = 0; i < H.grid.size(); ++i) {
            if (H.grid[i] < s_lo || H.grid[i] > s_hi) continue;
            m = std::max(m, std::abs(c * (1 + st.alpha[i]) - (1 + z.alpha[i])));
            m = std::max(m, std::abs(c * (1 + st.beta[i]) - (1 + z.beta[i])));
        }
        out.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// unnormalized flow via the time change

struct ReparametrizationReport {
    std::vector<double> times;     // unnormalized times t_j where the residual is evaluated
    std::vector<double> residual;  // RMS over the region of interest
    double max_residual = 0;
    double rate_scale = 0;  // RMS size of the unnormalized rate, for reference
};

// Runs the normalized flow at t_bar(t_j), t_j = j*delta, and checks that
// (1 + 2(n-1)t) g(t_bar) solves the unnormalized DeTurck flow at the levels t_j >= t_from.
inline ReparametrizationReport reparametrization_residual(const RadialPerturbation& e0, const RadialGrid& grid,
                                                          double delta, int J, const FlowOptions& opt = {},
                                                          double t_from = 0.0) {
    if (J < 3) throw DomainError("reparametrization_residual: need at least 3 time levels");
    const int n = grid.dimension();
    const double k = 2.0 * (n - 1);
    std::vector<double> tbar;
    for (int j = 1; j <= J; ++j) tbar.push_back(std::log1p(k * j * delta) / k);
    const FlowHistory H = flow_integrate(e0, grid, tbar, opt);

    ReparametrizationReport rep;
    std::vector<std::vector<double>> ga(J + 1), gb(J + 1);
    for (int j = 0; j <= J; ++j) {
        const double c = 1 + k * j * delta;
        const auto& st = H.states[j];
        ga[j].resize(grid.size());
        gb[j].resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ga[j][i] = c * (1 + st.alpha[i]) - 1;
            gb[j][i] = c * (1 + st.beta[i]) - 1;
        }
    }
    double scale = 0;
    std::size_t count = 0;
    for (int j = 1; j < J; ++j) {
        if (j * delta < t_from * (1 - 1e-12)) continue;
        const auto r = flow_rhs(grid, ga[j], gb[j]);
        double acc = 0;
        std::size_t m = 0;
        for (std::size_t i = H.roi_begin; i < H.roi_end; ++i) {
            const double ua = r.alpha[i] + k * (1 + ga[j][i]);
            const double ub = r.beta[i] + k * (1 + gb[j][i]);
            const double da = (ga[j + 1][i] - ga[j - 1][i]) / (2 * delta) - ua;
            const double db = (gb[j + 1][i] - gb[j - 1][i]) / (2 * delta) - ub;
            acc += da * da + (n - 1) * db * db;
            scale += ua * ua + (n - 1) * ub * ub;
            ++m;
            ++count;
        }
        rep.times.push_back(j * delta);
        rep.residual.push_back(std::sqrt(acc / m));
        rep.max_residual = std::max(rep.max_residual, rep.residual.back());
    }
    if (rep.residual.empty()) throw DomainError("reparametrization_residual: no level at or after t_from");
    rep.rate_scale = std::sqrt(scale / std::max<std::size_t>(count, 1));
    return rep;
}

// ---------------------------------------------------------------------------
// scalar curvature evolution  dR/dt = Lap_g R + 2(n-1)R + W(R) + 2|Ric|^2

struct ScalarEvolutionReport {
    std::vector<double> times;
    std::vector<double> residual;  // RMS over the region of interest
    double max_residual = 0;
};

namespace detail {
struct CurvatureProfile {
    std::vector<double> R, ric_r, ric_t, w, A, A1, B, B1;
};
inline CurvatureProfile curvature_profile(const RadialGrid& g, const std::vector<double>& alpha,
                                          const std::vector<double>& beta) {
    const int n = g.dimension();
    const auto a1 = g.d1(alpha), a2 = g.d2(alpha), b1 = g.d1(beta), b2 = g.d2(beta);
    CurvatureProfile c;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Jet a{alpha[i], a1[i], a2[i]}, b{beta[i], b1[i], b2[i]};
        const FlowPoint p = flow_point(n, g[i], a, b);
        const WarpedMetric m = WarpedMetric::from_perturbation(g[i], a, b);
        c.R.push_back(p.curv.R);
        c.ric_r.push_back(p.curv.ric_radial);
        c.ric_t.push_back(p.curv.ric_tangential);
        c.w.push_back(p.w);
        c.A.push_back(m.A);
        c.A1.push_back(m.A1);
        c.B.push_back(m.B);
        c.B1.push_back(m.B1);
    }
    return c;
}
}  // namespace detail

// Residual at every interior snapshot whose neighbours are equally spaced in t.
inline ScalarEvolutionReport scalar_evolution_residual(const FlowHistory& H) {
    const std::size_t K = H.states.size();
    if (K < 3) throw DomainError("scalar_evolution_residual: need at least 3 snapshots");
    const auto& g = H.grid;
    const int n = g.dimension();
    std::vector<std::optional<detail::CurvatureProfile>> prof(K);
    auto get = [&](std::size_t k) -> const detail::CurvatureProfile& {
        if (!prof[k]) prof[k] = detail::curvature_profile(g, H.states[k].alpha, H.states[k].beta);
        return *prof[k];
    };
    ScalarEvolutionReport rep;
    for (std::size_t k = 1; k + 1 < K; ++k) {
        const double t0 = H.states[k - 1].t, t1 = H.states[k].t, t2 = H.states[k + 1].t;
        if (k == 1 && H.initial_regularity == Regularity::C0) continue;
        if (std::abs((t2 - t1) - (t1 - t0)) > 1e-9 * (t2 - t0)) continue;
        const auto& pm = get(k - 1);
        const auto& pp = get(k + 1);
        const auto& c = get(k);
        const auto R1 = g.d1(c.R), R2 = g.d2(c.R);
        double acc = 0;
        std::size_t m = 0;
        for (std::size_t i = H.roi_begin; i < H.roi_end; ++i) {
            const double A = c.A[i], A1 = c.A1[i], B = c.B[i], B1 = c.B1[i];
            const double lap = R2[i] / A + R1[i] * ((n - 1) * B1 / (A * B) - A1 / (2 * A * A));
            const double ric2 = c.ric_r[i] * c.ric_r[i] + (n - 1) * c.ric_t[i] * c.ric_t[i];
            const double rhs = lap + 2.0 * (n - 1) * c.R[i] + c.w[i] * R1[i] + 2 * ric2;
            const double dt = (pp.R[i] - pm.R[i]) / (t2 - t0);
            acc += (dt - rhs) * (dt - rhs);
            ++m;
        }
        rep.times.push_back(t1);
        rep.residual.push_back(std::sqrt(acc / m));
        rep.max_residual = std::max(rep.max_residual, rep.residual.back());
        prof[k - 1].reset();
    }
    if (rep.times.empty()) throw DomainError("scalar_evolution_residual: no equally spaced snapshot triple");
    return rep;
}

// ---------------------------------------------------------------------------
// local parabolic norms on a lattice of centres and dyadic radii

// fraction of the sphere S(0, d) inside the geodesic ball B(x, r), |x| = d0
inline double cap_fraction(int n, double d, double d0, double r) {
    if (d0 == 0.0 || d == 0.0) return std::abs(d - d0) <= r ? 1.0 : 0.0;
    const double c = (std::cosh(d) * std::cosh(d0) - std::cosh(r)) / (std::sinh(d) * std::sinh(d0));
    if (c >= 1) return 0.0;
    if (c <= -1) return 1.0;
    const double half = 0.5 * boost::math::ibeta(0.5 * (n - 1), 0.5, 1 - c * c);
    return c >= 0 ? half : 1 - half;
}

struct BallWeights {
    std::size_t first = 0;
    std::vector<double> w;  // quadrature weights for nodes first, first+1, ...
};

// trapezoid in geodesic distance; the integrand weight vanishes at the ball edge
inline BallWeights ball_weights(const RadialGrid& g, double d0, double r) {
    const int n = g.dimension();
    const double omega = g.omega();
    BallWeights bw;
    std::vector<std::size_t> idx;
    std::vector<double> d;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double di = std::asinh(g[i]);
        if (std::abs(di - d0) < r) {
            idx.push_back(i);
            d.push_back(di);
        }
    }
    if (idx.empty()) return bw;
    bw.first = idx.front();
    bw.w.assign(idx.size(), 0.0);
    auto dens = [&](std::size_t k) {
        return cap_fraction(n, d[k], d0, r) * omega * std::pow(std::sinh(d[k]), n - 1);
    };
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        const double h = d[k + 1] - d[k];
        bw.w[k] += 0.5 * h * dens(k);
        bw.w[k + 1] += 0.5 * h * dens(k + 1);
    }
    bw.w.front() += 0.5 * (d.front() - std::max(0.0, d0 - r)) * dens(0);
    bw.w.back() += 0.5 * (d0 + r - d.back()) * dens(idx.size() - 1);
    return bw;
}

// integral over [lo, hi] of the piecewise-linear interpolant of (t_k, y_k)
inline double integrate_piecewise_linear(const std::vector<double>& t, const std::vector<double>& y, double lo,
                                         double hi) {
    double acc = 0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double a = std::max(lo, t[k]), b = std::min(hi, t[k + 1]);
        if (!(b > a)) continue;
        const double h = t[k + 1] - t[k];
        auto at = [&](double x) { return y[k] + (y[k + 1] - y[k]) * (x - t[k]) / h; };
        acc += 0.5 * (b - a) * (at(a) + at(b));
    }
    return acc;
}

// r^{e_full} ||f||_{L^p(B_r x (0,r^2))} + r^{e_half} ||f||_{L^q(B_r x (r^2/2,r^2))}
struct LocalNormSpec {
    double p, e_full, q, e_half;
};

inline LocalNormSpec gradient_norm_spec(int n) { return {2.0, -0.5 * n, n + 4.0, 2.0 / (n + 4.0)}; }
inline LocalNormSpec source_norm_spec(int n) { return {1.0, -1.0 * n, 0.5 * (n + 4.0), 4.0 / (n + 4.0)}; }

struct LatticeOptions {
    std::size_t center_stride = 0;  // 0: about 40 centres across the region of interest
    int max_levels = 8;
    double min_radius_nodes = 4;  // smallest radius in units of the local node spacing
};

struct LocalNormValue {
    double value = 0, full = 0, half = 0;
    double center = 0, radius = 0;
};

// sup over lattice centres and dyadic r (r^2 = T 2^{-k}) of the local parabolic norm of |f|
inline LocalNormValue local_parabolic_norm(const RadialGrid& g, const std::vector<double>& times,
                                           const std::vector<std::vector<double>>& field, double T, std::size_t lo,
                                           std::size_t hi, const LocalNormSpec& spec, const LatticeOptions& lat = {}) {
    LocalNormValue best;
    if (hi <= lo) return best;
    const std::size_t stride = lat.center_stride ? lat.center_stride : std::max<std::size_t>(1, (hi - lo) / 40);
    const double d_lo = std::asinh(g[lo]), d_hi = std::asinh(g[hi - 1]);
    for (int k = 1; k <= lat.max_levels; ++k) {
        const double r = std::sqrt(T * std::pow(2.0, -k));
        for (std::size_t c = lo; c < hi; c += stride) {
            const double d0 = std::asinh(g[c]);
            if (d0 - r < d_lo || d0 + r > d_hi) continue;
            const double dd = std::asinh(g[std::min(c + 1, g.size() - 1)]) - d0;
            if (r < lat.min_radius_nodes * dd) continue;
            const BallWeights bw = ball_weights(g, d0, r);
            std::vector<double> Gp(times.size()), Gq(times.size());
            for (std::size_t j = 0; j < times.size(); ++j) {
                if (times[j] > r * r && j > 0 && times[j - 1] >= r * r) break;
                double sp = 0, sq = 0;
                for (std::size_t m = 0; m < bw.w.size(); ++m) {
                    const double f = std::abs(field[j][bw.first + m]);
                    sp += bw.w[m] * std::pow(f, spec.p);
                    sq += bw.w[m] * std::pow(f, spec.q);
                }
                Gp[j] = sp;
                Gq[j] = sq;
            }
            const double Ip = integrate_piecewise_linear(times, Gp, 0.0, r * r);
            const double Iq = integrate_piecewise_linear(times, Gq, 0.5 * r * r, r * r);
            const double full = std::pow(r, spec.e_full) * std::pow(Ip, 1.0 / spec.p);
            const double half = std::pow(r, spec.e_half) * std::pow(Iq, 1.0 / spec.q);
            if (full + half > best.value) best = {full + half, full, half, g[c], r};
        }
    }
    return best;
}

struct NormReport {
    double T = 0;
    double sup_term = 0;
    LocalNormValue gradient;  // X_T local part
    double xt = 0;
    std::optional<LocalNormValue> y0, y1;
    double yt = 0;
};

inline std::vector<double> gradient_field(const RadialGrid& g, const FlowState& st) {
    const int n = g.dimension();
    const auto a1 = g.d1(st.alpha), b1 = g.d1(st.beta);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        f[i] = std::sqrt(gradient_norm_sq(n, g[i], {st.alpha[i], a1[i], 0}, {st.beta[i], b1[i], 0}));
    return f;
}

namespace detail {
inline std::size_t count_in_horizon(const FlowHistory& H, double T) {
    std::size_t c = 0;
    for (const auto& s : H.states)
        if (s.t > 0 && s.t <= T * (1 + 1e-12)) ++c;
    return c;
}
}  // namespace detail

inline NormReport xt_norms(const FlowHistory& H, double T, const LatticeOptions& lat = {}) {
    if (detail::count_in_horizon(H, T) < 20)
        throw DomainError("xt_norms: fewer than 20 snapshots in (0, T]");
    NormReport rep;
    rep.T = T;
    std::vector<double> times;
    std::vector<std::vector<double>> field;
    for (const auto& st : H.states) {
        if (st.t > T * (1 + 1e-12)) break;
        times.push_back(st.t);
        field.push_back(gradient_field(H.grid, st));
        if (st.t > 0) rep.sup_term = std::max(rep.sup_term, st.diag.sup_h);
    }
    rep.gradient = local_parabolic_norm(H.grid, times, field, T, H.roi_begin, H.roi_end,
                                        gradient_norm_spec(H.dimension()), lat);
    rep.xt = rep.sup_term + rep.gradient.value;
    return rep;
}

// Y_T norm of f = f0 + D f1 for sampled sources (one profile per time)
inline NormReport yt_norms(const RadialGrid& g, const std::vector<double>& times,
                           const std::vector<std::vector<double>>& f0, const std::vector<std::vector<double>>& f1,
                           double T, std::size_t lo, std::size_t hi, const LatticeOptions& lat = {}) {
    std::size_t inside = 0;
    for (double t : times)
        if (t > 0 && t <= T * (1 + 1e-12)) ++inside;
    if (inside < 20) throw DomainError("yt_norms: fewer than 20 snapshots in (0, T]");
    NormReport rep;
    rep.T = T;
    const int n = g.dimension();
    rep.y0 = local_parabolic_norm(g, times, f0, T, lo, hi, source_norm_spec(n), lat);
    rep.y1 = local_parabolic_norm(g, times, f1, T, lo, hi, gradient_norm_spec(n), lat);
    rep.yt = rep.y0->value + rep.y1->value;
    return rep;
}

// ---------------------------------------------------------------------------
// smoothing rates  sup|D^k h| ~ c_k t^{-k/2}

struct SmoothingFit {
    double slope1 = 0, slope2 = 0;
    double c1 = 0, c2 = 0;  // exp(intercept) of the fits
    std::size_t samples = 0;
    bool applicable = true;  // false for smooth initial data
};

inline void least_squares(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& icpt) {
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    slope = sxy / sxx;
    icpt = my - slope * mx;
}

inline SmoothingFit smoothing_exponents(const FlowHistory& H, double t_lo, double t_hi) {
    std::vector<double> lt, l1, l2;
    for (const auto& st : H.states) {
        if (st.t < t_lo || st.t > t_hi || st.t <= 0) continue;
        lt.push_back(std::log(st.t));
        l1.push_back(std::log(st.diag.sup_Dh));
        l2.push_back(std::log(st.diag.sup_D2h));
    }
    if (lt.size() < 3 || !(lt.back() - lt.front() >= 1.5 * std::log(10.0) * (1 - 1e-9)))
        throw DomainError("smoothing_exponents: need at least 1.5 decades of snapshots");
    SmoothingFit f;
    f.samples = lt.size();
    f.applicable = H.initial_regularity == Regularity::C0;
    double i1, i2;
    least_squares(lt, l1, f.slope1, i1);
    least_squares(lt, l2, f.slope2, i2);
    f.c1 = std::exp(i1);
    f.c2 = std::exp(i2);
    return f;
}

// geometric snapshot times covering [lo, hi]
inline std::vector<double> log_times(double lo, double hi, int count) {
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i) t[i] = lo * std::pow(hi / lo, double(i) / (count - 1));
    t.back() = hi;
    return t;
}

// ---------------------------------------------------------------------------
// lower bound certificate for R along the flow

struct CertificateEvaluation {
    double t = 0, beta = 0, a_inf = 0, C = 0, D = 0;
    int n = 3;
    std::vector<double> t_k;
    double sum_t = 0;
    double product = 1;
    double prefactor = 1;
    double tail = 0;
    double bound = 0;
};

inline CertificateEvaluation curvature_certificate(double t, int n, double beta, double a_inf, double C, double D) {
    if (n < 2) throw DomainError("certificate: n must be >= 2");
    const double k = 2.0 * (n - 1);
    if (!(t > 0 && t <= std::log(1.5) / k * (1 + 1e-12)))
        throw DomainError("certificate: t must lie in (0, ln(3/2)/(2(n-1))]");
    if (!(beta > 0 && beta < 0.5)) throw DomainError("certificate: beta must lie in (0, 1/2)");
    if (!(D > 0)) throw DomainError("certificate: D must be positive");
    CertificateEvaluation ev;
    ev.t = t;
    ev.n = n;
    ev.beta = beta;
    ev.a_inf = a_inf;
    ev.C = C;
    ev.D = D;
    double tk = t;
    double log_prod = 0;
    while (tk >= 1e-16) {
        ev.t_k.push_back(tk);
        ev.sum_t += tk;
        const double half = std::log1p(0.5 * std::expm1(k * tk));  // ln((e^{k t}+1)/2)
        log_prod += -(1 + 0.5 * n) * half;
        tk = half / k;
    }
    ev.product = std::exp(log_prod);
    ev.prefactor = std::exp(k * ev.sum_t);

    const double E = std::expm1(k * t);
    const double Eb = std::pow(E, 2 * beta - 1);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 4000; ++i) {
        const double term = std::exp(i * std::log(2.0) - std::log(E) - Eb * std::pow(2.0, (1 - 2 * beta) * i) / D);
        ev.tail += term;
        if (term < prev && term <= 1e-17 * ev.tail) break;
        prev = term;
    }
    ev.bound = a_inf * ev.prefactor * ev.product - C * ev.tail;
    return ev;
}

// ---------------------------------------------------------------------------
// weak scalar curvature lower bound

struct WeakScalarReport {
    std::vector<double> times;
    std::vector<double> inf_R;  // inf over centres, C and shrinking balls at each t
    std::vector<double> C_values;
    std::vector<double> liminf_by_C;
    double liminf = 0;
    double kappa = 0;
    bool holds = false;
};

inline WeakScalarReport weak_scalar_lower_bound(const FlowHistory& H, double s_lo, double s_hi, double beta,
                                                std::vector<double> C_values = {0.5, 1.0, 2.0},
                                                double rel_tol = 1e-4) {
    const auto& g = H.grid;
    const int n = g.dimension();
    WeakScalarReport rep;
    rep.kappa = -n * (n - 1.0);
    rep.C_values = C_values;
    const double t_last = H.states.back().t;
    const double Cmax = *std::max_element(C_values.begin(), C_values.end());
    const double reach = Cmax * std::pow(t_last, beta);
    const double dlo = std::asinh(s_lo) - reach, dhi = std::asinh(s_hi) + reach;
    if (dlo < std::asinh(g[H.roi_begin]) || dhi > std::asinh(g[H.roi_end - 1]))
        throw DomainError("weak_scalar_lower_bound: window leaves the grid region of interest");

    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = std::asinh(g[i]);
    std::vector<std::size_t> centres;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] >= s_lo && g[i] <= s_hi) centres.push_back(i);
    if (centres.empty()) throw DomainError("weak_scalar_lower_bound: no grid node inside the window");

    std::vector<std::vector<double>> by_C(C_values.size());
    for (std::size_t k = 0; k < H.states.size(); ++k) {
        const auto& st = H.states[k];
        if (st.t == 0 && H.initial_regularity == Regularity::C0) continue;
        const auto prof = detail::curvature_profile(g, st.alpha, st.beta);
        double overall = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < C_values.size(); ++c) {
            const double rad = C_values[c] * std::pow(st.t, beta);
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t i : centres) {
                for (std::size_t j = i;; --j) {
                    if (d[i] - d[j] > rad) break;
                    m = std::min(m, prof.R[j]);
                    if (j == 0) break;
                }
                for (std::size_t j = i + 1; j < g.size() && d[j] - d[i] <= rad; ++j) m = std::min(m, prof.R[j]);
            }
            by_C[c].push_back(m);
            overall = std::min(overall, m);
        }
        rep.times.push_back(st.t);
        rep.inf_R.push_back(overall);
    }
    if (rep.times.size() < 3) throw DomainError("weak_scalar_lower_bound: need at least 3 usable snapshots");

    // liminf t -> 0: linear extrapolation from the three earliest snapshots, capped by the earliest value
    for (auto& series : by_C) {
        std::vector<double> x(rep.times.begin(), rep.times.begin() + 3), y(series.begin(), series.begin() + 3);
        double sl, ic;
        least_squares(x, y, sl, ic);
        rep.liminf_by_C.push_back(std::min(ic, series.front()));
    }
    rep.liminf = *std::min_element(rep.liminf_by_C.begin(), rep.liminf_by_C.end());
    rep.holds = rep.liminf >= rep.kappa - rel_tol * std::abs(rep.kappa);
    return rep;
}

}  // namespace hypmass
