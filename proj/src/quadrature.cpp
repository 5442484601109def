#include "iml/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "iml/errors.hpp"

namespace iml {

namespace {

// Raw Gauss-Legendre computation on [-1,1].
Quad compute_gl(int n) {
    if (n < 1) throw input_error("gauss_legendre: need n >= 1");
    Quad q;
    q.x.resize(n);
    q.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n(z).
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        q.x[i] = -z;
        q.x[n - 1 - i] = z;
        q.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        q.w[n - 1 - i] = q.w[i];
    }
    return q;
}

}  // namespace

Quad gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, Quad> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

Quad gl_on(double a, double b, int n) {
    const Quad base = gauss_legendre(n);
    Quad q;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    q.x = (base.x.array() * half + mid).matrix();
    q.w = base.w * half;
    return q;
}

Quad composite_gl(double a, double b, int panels, int nodes_per_panel) {
    if (panels < 1) throw input_error("composite_gl: need panels >= 1");
    Quad q;
    q.x.resize(panels * nodes_per_panel);
    q.w.resize(panels * nodes_per_panel);
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const Quad part = gl_on(a + p * width, a + (p + 1) * width, nodes_per_panel);
        q.x.segment(p * nodes_per_panel, nodes_per_panel) = part.x;
        q.w.segment(p * nodes_per_panel, nodes_per_panel) = part.w;
    }
    return q;
}

Quad graded_gl(double a, double b, int levels, int nodes_per_panel, bool grade_lo, bool grade_hi) {
    if (!(b > a)) throw input_error("graded_gl: need b > a");
    if (!grade_lo && !grade_hi) return composite_gl(a, b, 2, nodes_per_panel);
    // Build breakpoints in [0,1], then map.
    std::vector<double> bp;
    bp.push_back(0.0);
    if (grade_lo && grade_hi) {
        for (int j = levels; j >= 1; --j) bp.push_back(0.5 * std::pow(2.0, -j));
        bp.push_back(0.5);
        for (int j = 1; j <= levels; ++j) bp.push_back(1.0 - 0.5 * std::pow(2.0, -j));
    } else if (grade_lo) {
        for (int j = levels; j >= 1; --j) bp.push_back(std::pow(2.0, -j));
    } else {
        for (int j = 1; j <= levels; ++j) bp.push_back(1.0 - std::pow(2.0, -j));
    }
    bp.push_back(1.0);
    const int panels = int(bp.size()) - 1;
    Quad q;
    q.x.resize(panels * nodes_per_panel);
    q.w.resize(panels * nodes_per_panel);
    for (int p = 0; p < panels; ++p) {
        const double lo = a + (b - a) * bp[p], hi = a + (b - a) * bp[p + 1];
        const Quad part = gl_on(lo, hi, nodes_per_panel);
        q.x.segment(p * nodes_per_panel, nodes_per_panel) = part.x;
        q.w.segment(p * nodes_per_panel, nodes_per_panel) = part.w;
    }
    return q;
}

}  // namespace iml
