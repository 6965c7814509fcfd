#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hypmass {

struct QuadratureOptions {
    double rel_tol = 1e-12;
    double abs_tol = 0.0;
    int max_panels = 4000;
};

// Globally adaptive G7K15 on [a,b]. Interior breakpoints seed the panel list so that
// piecewise-smooth integrands keep full order. Stops when the summed error estimate
// falls below max(rel_tol |I|, abs_tol) or the panel budget runs out.
template <class F>
double integrate(F&& f, double a, double b, const std::vector<double>& breaks, QuadratureOptions opt) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<double> pts{a};
    for (double p : breaks)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    struct Panel {
        double lo, hi, value, err;
        bool operator<(const Panel& o) const { return err < o.err; }
    };
    auto eval = [&f](double lo, double hi) {
        double err = 0.0;
        const double v = GK::integrate(f, lo, hi, 0, 0.0, &err);
        return Panel{lo, hi, v, err};
    };
    std::priority_queue<Panel> heap;
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        Panel p = eval(pts[i], pts[i + 1]);
        total += p.value;
        err += p.err;
        heap.push(p);
    }
    int panels = static_cast<int>(heap.size());
    const double eps = std::numeric_limits<double>::epsilon();
    while (!heap.empty() && err > std::max(opt.rel_tol * std::abs(total), opt.abs_tol) && panels < opt.max_panels) {
        Panel p = heap.top();
        const double mid = 0.5 * (p.lo + p.hi);
        if (!(mid > p.lo && mid < p.hi) || p.err <= 50 * eps * std::abs(p.value)) break;
        heap.pop();
        Panel l = eval(p.lo, mid), r = eval(mid, p.hi);
        total += l.value + r.value - p.value;
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
        ++panels;
    }
    return sign * total;
}

template <class F>
double integrate(F&& f, double a, double b, const std::vector<double>& breaks = {}, double rel_tol = 1e-12,
                 double abs_tol = 0.0) {
    return integrate(std::forward<F>(f), a, b, breaks, QuadratureOptions{rel_tol, abs_tol, 4000});
}

}  // namespace hypmass
