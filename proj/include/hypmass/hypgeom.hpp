#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"

namespace hypmass {

struct ChartPoint {
    double euclidean_radius;
    double rho;
    double s;
    double v0;
};

inline ChartPoint chart_point(double euclidean_radius) {
    if (!(euclidean_radius >= 0.0 && euclidean_radius < 1.0))
        throw DomainError("chart_point: euclidean radius must lie in [0,1)");
    const double x = euclidean_radius;
    const double q = 1.0 - x * x;
    ChartPoint p;
    p.euclidean_radius = x;
    p.rho = q / 2.0;
    p.s = 2.0 * x / q;
    p.v0 = std::sqrt(1.0 + p.s * p.s);
    return p;
}

// |x| recovered from s; written to avoid cancellation at small s
inline double euclidean_radius_of(double s) {
    if (s < 0.0) throw DomainError("euclidean_radius_of: s must be nonnegative");
    return s / (std::sqrt(1.0 + s * s) + 1.0);
}

inline double geodesic_distance(double euclidean_radius) {
    return std::log((1.0 + euclidean_radius) / (1.0 - euclidean_radius));
}

inline double static_potential(double s) { return std::sqrt(1.0 + s * s); }

inline double sphere_volume(int n) {
    return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline double sphere_area(double s, int n) { return sphere_volume(n) * std::pow(s, n - 1); }

// b-volume density in s: omega * s^{n-1} / sqrt(1+s^2)
inline double volume_density(double s, int n) {
    return sphere_volume(n) * std::pow(s, n - 1) / std::sqrt(1.0 + s * s);
}

inline double annulus_measure(double r1, double r2, int n) {
    if (r1 == r2) return 0.0;
    if (!(r1 > 0.0 && r1 < r2)) throw DomainError("annulus_measure: need 0 < r1 < r2");
    const double om = sphere_volume(n);
    auto f = [n](double s) { return std::pow(s, n - 1) / std::sqrt(1.0 + s * s); };
    return om * integrate(f, r1, r2, {}, 1e-13);
}

// Laplacian of a radial function from its jet
inline double laplacian(int n, double s, const Jet& u) {
    return (1.0 + s * s) * u.d2 + (n * s + (n - 1) / s) * u.d1;
}

// ---------------------------------------------------------------------------
// finite differences

// Fornberg weights: w[k][j] for the k-th derivative at z using nodes x[j]
inline std::vector<std::vector<double>> fornberg_weights(double z, const std::vector<double>& x,
                                                         int mmax) {
    const int np = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(mmax + 1, std::vector<double>(np, 0.0));
    double c1 = 1.0, c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < np; ++i) {
        const int mn = std::min(i, mmax);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

// Fourth-order stencils on a unit-spaced index line.
class Stencil4 {
public:
    struct Row {
        int offset;  // index of the first stencil node relative to i
        std::vector<double> w;
    };

    Stencil4() {
        interior1_ = make(0, {-2, -1, 0, 1, 2}, 1);
        interior2_ = make(0, {-2, -1, 0, 1, 2}, 2);
        edge1_[0] = make(0, {0, 1, 2, 3, 4}, 1);
        edge1_[1] = make(0, {-1, 0, 1, 2, 3}, 1);
        edge2_[0] = make(0, {0, 1, 2, 3, 4, 5}, 2);
        edge2_[1] = make(0, {-1, 0, 1, 2, 3, 4}, 2);
    }

    // stencil for derivative `order` (1 or 2) at index i of an N-point line
    Row row(int order, int i, int N) const {
        const Row* base;
        bool mirror = false;
        int k = -1;
        if (i < 2) k = i;
        else if (i > N - 3) { k = N - 1 - i; mirror = true; }
        if (k < 0) base = order == 1 ? &interior1_ : &interior2_;
        else base = order == 1 ? &edge1_[k] : &edge2_[k];
        if (!mirror) return {i + base->offset, base->w};
        // reflect: offsets o -> -o, odd derivatives change sign
        Row r;
        const int len = static_cast<int>(base->w.size());
        r.offset = i - (base->offset + len - 1);
        r.w.resize(len);
        const double sg = (order % 2 == 1) ? -1.0 : 1.0;
        for (int j = 0; j < len; ++j) r.w[j] = sg * base->w[len - 1 - j];
        return r;
    }

private:
    static Row make(double z, std::vector<int> offs, int order) {
        std::vector<double> x(offs.begin(), offs.end());
        auto c = fornberg_weights(z, x, order);
        return {offs.front(), c[order]};
    }
    Row interior1_, interior2_;
    std::array<Row, 2> edge1_, edge2_;
};

inline const Stencil4& stencil4() {
    static const Stencil4 s;
    return s;
}

enum class Spacing { Uniform, Log, Geodesic };

inline const char* to_string(Spacing sp) {
    switch (sp) {
        case Spacing::Uniform: return "uniform";
        case Spacing::Log: return "log";
        case Spacing::Geodesic: return "geodesic";
    }
    return "?";
}

// Nodes s_i = map(x0 + i*hx). Uniform: map = id; Log: map = exp; Geodesic: map = sinh.
class RadialGrid {
public:
    RadialGrid() = default;

    static RadialGrid uniform(int n, double s_min, double s_max, int N) {
        return RadialGrid(n, Spacing::Uniform, s_min, (s_max - s_min) / (N - 1), N);
    }
    static RadialGrid log(int n, double s_min, double s_max, int N) {
        if (!(s_min > 0.0)) throw DomainError("RadialGrid: nodes must be positive");
        return RadialGrid(n, Spacing::Log, std::log(s_min),
                          (std::log(s_max) - std::log(s_min)) / (N - 1), N);
    }
    // log grid with a target spacing in ln s
    static RadialGrid log_step(int n, double s_min, double s_max, double hx) {
        const int N = static_cast<int>(std::ceil((std::log(s_max) - std::log(s_min)) / hx)) + 1;
        return log(n, s_min, s_max, N);
    }
    static RadialGrid geodesic(int n, double d_min, double d_max, int N) {
        return RadialGrid(n, Spacing::Geodesic, d_min, (d_max - d_min) / (N - 1), N);
    }

    int dimension() const { return n_; }
    Spacing spacing() const { return spacing_; }
    std::size_t size() const { return s_.size(); }
    const std::vector<double>& nodes() const { return s_; }
    double operator[](std::size_t i) const { return s_[i]; }
    double front() const { return s_.front(); }
    double back() const { return s_.back(); }
    double hx() const { return hx_; }
    double x0() const { return x0_; }
    double omega() const { return omega_; }
    double x_at(std::size_t i) const { return x0_ + hx_ * static_cast<double>(i); }

    double map(double x) const {
        switch (spacing_) {
            case Spacing::Uniform: return x;
            case Spacing::Log: return std::exp(x);
            case Spacing::Geodesic: return std::sinh(x);
        }
        return x;
    }
    double inverse_map(double s) const {
        switch (spacing_) {
            case Spacing::Uniform: return s;
            case Spacing::Log: return std::log(s);
            case Spacing::Geodesic: return std::asinh(s);
        }
        return s;
    }
    // ds/dx and d2s/dx2 at node i
    double sx(std::size_t i) const { return sx_[i]; }
    double sxx(std::size_t i) const { return sxx_[i]; }

    // 4th-order first and second s-derivatives of nodal samples
    std::vector<double> d1(const std::vector<double>& u) const {
        auto ux = dx(u, 1);
        for (std::size_t i = 0; i < ux.size(); ++i) ux[i] /= sx_[i];
        return ux;
    }
    std::vector<double> d2(const std::vector<double>& u) const {
        auto ux = dx(u, 1);
        auto uxx = dx(u, 2);
        for (std::size_t i = 0; i < uxx.size(); ++i) {
            const double us = ux[i] / sx_[i];
            uxx[i] = (uxx[i] - sxx_[i] * us) / (sx_[i] * sx_[i]);
        }
        return uxx;
    }

    // raw index-space derivative (unit spacing hx)
    std::vector<double> dx(const std::vector<double>& u, int order) const {
        check_size(u);
        const int N = static_cast<int>(u.size());
        const double scale = order == 1 ? 1.0 / hx_ : 1.0 / (hx_ * hx_);
        std::vector<double> out(N);
        const auto& st = stencil4();
        auto apply = [&](int i) {
            const auto r = st.row(order, i, N);
            double acc = 0.0;
            for (std::size_t j = 0; j < r.w.size(); ++j) acc += r.w[j] * u[r.offset + j];
            out[i] = acc * scale;
        };
        for (int i = 0; i < 2; ++i) apply(i);
        for (int i = N - 2; i < N; ++i) apply(i);
        const auto c = st.row(order, 2, 5).w;
        const double c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3], c4 = c[4];
        for (int i = 2; i < N - 2; ++i)
            out[i] = (c0 * u[i - 2] + c1 * u[i - 1] + c2 * u[i] + c3 * u[i + 1] + c4 * u[i + 2]) * scale;
        return out;
    }

    void check_size(const std::vector<double>& u) const {
        if (u.size() != s_.size()) throw DomainError("RadialGrid: profile size does not match grid");
        if (s_.size() < 6) throw DomainError("RadialGrid: stencil needs at least 6 nodes");
    }

private:
    RadialGrid(int n, Spacing sp, double x0, double hx, int N)
        : n_(n), spacing_(sp), x0_(x0), hx_(hx) {
        if (n < 2) throw DomainError("RadialGrid: dimension must be >= 2");
        if (N < 16) throw DomainError("RadialGrid: at least 16 nodes required");
        if (!(hx > 0.0)) throw DomainError("RadialGrid: nodes must be strictly increasing");
        s_.resize(N);
        sx_.resize(N);
        sxx_.resize(N);
        for (int i = 0; i < N; ++i) {
            const double x = x0 + hx * i;
            s_[i] = map(x);
            switch (sp) {
                case Spacing::Uniform: sx_[i] = 1.0; sxx_[i] = 0.0; break;
                case Spacing::Log: sx_[i] = s_[i]; sxx_[i] = s_[i]; break;
                case Spacing::Geodesic: sx_[i] = std::cosh(x); sxx_[i] = std::sinh(x); break;
            }
        }
        if (!(s_.front() > 0.0)) throw DomainError("RadialGrid: nodes must be positive (s = 0 excluded)");
        omega_ = sphere_volume(n);
    }

    int n_ = 3;
    Spacing spacing_ = Spacing::Log;
    double x0_ = 0.0, hx_ = 1.0, omega_ = 0.0;
    std::vector<double> s_, sx_, sxx_;
};

inline std::vector<double> radial_laplacian(const RadialGrid& g, const std::vector<double>& u) {
    g.check_size(u);
    const int n = g.dimension();
    auto u1 = g.d1(u);
    auto u2 = g.d2(u);
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double s = g[i];
        out[i] = (1.0 + s * s) * u2[i] + (n * s + (n - 1) / s) * u1[i];
    }
    return out;
}

// Residual of  Lap(u') = (Lap u)' - 2 s u'' - [n - (n-1) s^-2] u'  evaluated on the grid
inline std::vector<double> laplacian_commutator_residual(const RadialGrid& g,
                                                         const std::vector<double>& u) {
    const int n = g.dimension();
    auto u1 = g.d1(u);
    auto u2 = g.d2(u);
    auto lap_u1 = radial_laplacian(g, u1);
    auto lap_u = radial_laplacian(g, u);
    auto dlap = g.d1(lap_u);
    std::vector<double> r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double s = g[i];
        r[i] = lap_u1[i] - (dlap[i] - 2.0 * s * u2[i] - (n - (n - 1) / (s * s)) * u1[i]);
    }
    return r;
}

template <class F>
std::vector<double> sample(const RadialGrid& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
    return v;
}

}  // namespace hypmass
