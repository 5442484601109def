#include "iml/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iml/quadrature.hpp"

namespace iml {

namespace {

constexpr double kPi = std::numbers::pi;

void check_time(double t) {
    if (!(t > 0)) throw input_error("kernel time must be positive");
}

}  // namespace

double gauss1(double t, double u) {
    return std::exp(-u * u / (2.0 * t)) / std::sqrt(2.0 * kPi * t);
}

double free_kernel(int d, double t, const Vec& x, const Vec& y) {
    check_time(t);
    if (x.size() != d || y.size() != d) throw input_error("free_kernel: dimension mismatch");
    const double r2 = (x - y).squaredNorm();
    return std::exp(-r2 / (2.0 * t)) / std::pow(2.0 * kPi * t, 0.5 * d);
}

// int_0^T (2 pi s)^{-1/2} exp(-u^2/2s) ds
//   = sqrt(2T/pi) exp(-u^2/2T) - |u| erfc(|u| / sqrt(2T)).
double gauss1_time_integral(double T, double u) {
    check_time(T);
    const double a = std::abs(u);
    return std::sqrt(2.0 * T / kPi) * std::exp(-a * a / (2.0 * T)) -
           a * std::erfc(a / std::sqrt(2.0 * T));
}

// int_0^inf e^-s gauss1(s,u) ds = exp(-sqrt2 |u|) / sqrt2.
double resolvent_g1(double u) {
    return std::exp(-std::sqrt(2.0) * std::abs(u)) / std::sqrt(2.0);
}

namespace {

// Sum f(+-n shell) of a reflection series until the shell contribution is
// negligible against the running sum.
template <typename Shell>
double image_sum(Shell&& shell, double rel_tol, int max_shells) {
    double sum = shell(0);
    for (int n = 1; n <= max_shells; ++n) {
        const double s = shell(n) + shell(-n);
        sum += s;
        if (std::abs(s) <= rel_tol * (std::abs(sum) + 1e-300)) return sum;
    }
    throw accuracy_error("image series did not converge within its shell budget");
}

}  // namespace

double interval_kernel_images(double a, double b, double t, double x, double y, double rel_tol,
                              int max_terms) {
    check_time(t);
    const double L = b - a, xr = x - a, yr = y - a;
    const double dx = xr - yr, sx = xr + yr;
    return image_sum(
        [&](int n) { return gauss1(t, dx + 2.0 * n * L) - gauss1(t, sx + 2.0 * n * L); },
        rel_tol, max_terms);
}

double interval_kernel_eigen(double a, double b, double t, double x, double y, double cutoff,
                             int max_terms) {
    check_time(t);
    const double L = b - a, xr = x - a, yr = y - a;
    double sum = 0.0;
    for (int n = 1;; ++n) {
        const double lambda = 0.5 * (n * kPi / L) * (n * kPi / L);
        const double damp = std::exp(-lambda * t);
        if (damp < cutoff) break;
        if (n > max_terms)
            throw accuracy_error("interval eigen series did not reach its cutoff in budget");
        sum += damp * std::sin(n * kPi * xr / L) * std::sin(n * kPi * yr / L);
    }
    return 2.0 / L * sum;
}

namespace {

// int_0^T interval kernel via images of the closed-form gauss1_time_integral.
double interval_time_integral_images(double a, double b, double T, double x, double y,
                                     double rel_tol, int max_terms) {
    const double L = b - a, xr = x - a, yr = y - a;
    const double dx = xr - yr, sx = xr + yr;
    return image_sum(
        [&](int n) {
            return gauss1_time_integral(T, dx + 2.0 * n * L) -
                   gauss1_time_integral(T, sx + 2.0 * n * L);
        },
        rel_tol, max_terms);
}

double interval_resolvent_images(double a, double b, double x, double y, double rel_tol,
                                 int max_terms) {
    const double L = b - a, xr = x - a, yr = y - a;
    const double dx = xr - yr, sx = xr + yr;
    return image_sum(
        [&](int n) { return resolvent_g1(dx + 2.0 * n * L) - resolvent_g1(sx + 2.0 * n * L); },
        rel_tol, max_terms);
}

}  // namespace

// ---------------------------------------------------------------------------
// Disk eigen-expansion
// ---------------------------------------------------------------------------

namespace detail {

struct DiskTerm {
    int m;
    double j;      // Bessel zero j_{m,k}
    double coeff;  // (m==0 ? 1 : 2) / (pi R^2 J_{m+1}(j)^2)
};

struct DiskSeries {
    double R = 1.0;
    Vec center;
    double jcap = 0.0;
    int max_order = 0;
    std::vector<DiskTerm> terms;  // sorted by ascending j

    double jmax_for(double t, double cutoff) const {
        return std::sqrt(2.0 * R * R * (-std::log(cutoff)) / t);
    }
};

}  // namespace detail

namespace {

double bessel_j(int m, double x) { return std::cyl_bessel_j(double(m), x); }

double bessel_j_prime(int m, double x) {
    if (m == 0) return -bessel_j(1, x);
    return bessel_j(m - 1, x) - m / x * bessel_j(m, x);
}

double newton_bessel_zero(int m, double guess) {
    double j = guess;
    for (int it = 0; it < 60; ++it) {
        const double f = bessel_j(m, j);
        const double fp = bessel_j_prime(m, j);
        const double dz = f / fp;
        j -= dz;
        if (std::abs(dz) < 1e-14 * j) break;
    }
    return j;
}

// Zeros of J_m up to jext, row by row: J_0 via McMahon starts, J_m bracketed
// by the interlacing property between consecutive zeros of J_{m-1}.
std::vector<std::vector<double>> bessel_zero_rows(double jext) {
    std::vector<std::vector<double>> rows;
    {
        std::vector<double> row0;
        for (int k = 1;; ++k) {
            const double beta = (k - 0.25) * kPi;  // McMahon leading term for J_0
            const double j = newton_bessel_zero(0, beta + 1.0 / (8.0 * beta));
            row0.push_back(j);
            if (j > jext) break;
        }
        rows.push_back(std::move(row0));
    }
    for (int m = 1;; ++m) {
        const auto& prev = rows[m - 1];
        if (prev.size() < 2 || prev[0] > jext) break;
        std::vector<double> row;
        for (size_t k = 0; k + 1 < prev.size(); ++k) {
            double lo = prev[k], hi = prev[k + 1];
            // One sign change of J_m inside (lo, hi).
            double flo = bessel_j(m, lo + 1e-12 * lo);
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = bessel_j(m, mid);
                if ((flo < 0) == (fm < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if (hi - lo < 1e-10) break;
            }
            const double j = newton_bessel_zero(m, 0.5 * (lo + hi));
            row.push_back(j);
            if (j > jext) break;
        }
        if (row.empty()) break;
        rows.push_back(std::move(row));
        if (rows.back()[0] > jext) break;
    }
    return rows;
}

std::unique_ptr<detail::DiskSeries> build_disk_series(const Domain& dom,
                                                      const KernelOptions& opt) {
    auto ds = std::make_unique<detail::DiskSeries>();
    ds->R = dom.radius;
    ds->center = dom.center;
    ds->jcap = ds->jmax_for(opt.disk_t_min, opt.eigen_cutoff);
    const auto rows = bessel_zero_rows(ds->jcap + kPi + 2.0);
    const double norm = kPi * ds->R * ds->R;
    for (size_t m = 0; m < rows.size(); ++m) {
        for (double j : rows[m]) {
            if (j > ds->jcap) break;
            const double jn = bessel_j(int(m) + 1, j);
            ds->terms.push_back({int(m), j, (m == 0 ? 1.0 : 2.0) / (norm * jn * jn)});
        }
    }
    std::sort(ds->terms.begin(), ds->terms.end(),
              [](const detail::DiskTerm& a, const detail::DiskTerm& b) { return a.j < b.j; });
    if (ds->terms.empty()) throw accuracy_error("disk eigen table came out empty");
    ds->max_order = 0;
    for (const auto& t : ds->terms) ds->max_order = std::max(ds->max_order, t.m);
    return ds;
}

}  // namespace

// ---------------------------------------------------------------------------
// KernelEval
// ---------------------------------------------------------------------------

KernelEval::KernelEval(Domain dom, KernelOptions opt) : dom_(std::move(dom)), opt_(opt) {
    if (dom_.kind == DomainKind::disk) disk_ = build_disk_series(dom_, opt_);
}

KernelEval::~KernelEval() = default;
KernelEval::KernelEval(KernelEval&&) noexcept = default;

double KernelEval::killed_axis(int k, double t, double xk, double yk) const {
    switch (dom_.kind) {
        case DomainKind::whole_space:
            return gauss1(t, xk - yk);
        case DomainKind::half_space:
            if (k != dom_.axis) return gauss1(t, xk - yk);
            return gauss1(t, xk - yk) - gauss1(t, xk + yk - 2.0 * dom_.offset);
        case DomainKind::box: {
            const double L = dom_.b[k] - dom_.a[k];
            // Images converge fastest for small t, the eigen series for large.
            if (t <= 0.35 * L * L)
                return interval_kernel_images(dom_.a[k], dom_.b[k], t, xk, yk, opt_.image_rel_tol,
                                              opt_.max_terms);
            return interval_kernel_eigen(dom_.a[k], dom_.b[k], t, xk, yk, opt_.eigen_cutoff,
                                         opt_.max_terms);
        }
        case DomainKind::disk:
            break;
    }
    throw input_error("killed_axis: unsupported domain");
}

double KernelEval::disk_kernel(double t, const Vec& x, const Vec& y) const {
    const auto& ds = *disk_;
    const double jmax = ds.jmax_for(t, opt_.eigen_cutoff);
    if (jmax > ds.jcap)
        throw accuracy_error(
            "disk kernel: requested time is below the table horizon (disk_t_min)");
    const double rx = (x - ds.center).norm(), ry = (y - ds.center).norm();
    const double tx = std::atan2(x[1] - ds.center[1], x[0] - ds.center[0]);
    const double ty = std::atan2(y[1] - ds.center[1], y[0] - ds.center[0]);
    const double dth = tx - ty;
    double sum = 0.0;
    for (const auto& term : ds.terms) {
        if (term.j > jmax) break;
        const double damp = std::exp(-0.5 * term.j * term.j * t / (ds.R * ds.R));
        const double radial =
            bessel_j(term.m, term.j * rx / ds.R) * bessel_j(term.m, term.j * ry / ds.R);
        const double ang = term.m == 0 ? 1.0 : std::cos(term.m * dth);
        sum += term.coeff * damp * radial * ang;
    }
    return sum;
}

double KernelEval::operator()(double t, const Vec& x, const Vec& y) const {
    check_time(t);
    if (x.size() != dom_.d || y.size() != dom_.d)
        throw input_error("killed kernel: dimension mismatch");
    if (!contains(dom_, x) || !contains(dom_, y)) return 0.0;
    if (dom_.kind == DomainKind::disk) return disk_kernel(t, x, y);
    double prod = 1.0;
    for (int k = 0; k < dom_.d; ++k) prod *= killed_axis(k, t, x[k], y[k]);
    return prod;
}

namespace {

// Boundary-layer surrogate for very small times on the disk: free kernel
// times the half-space crossing factor of the nearest boundary points.
double small_time_surrogate(const Domain& dom, double t, const Vec& x, const Vec& y) {
    const double dx = boundary_distance(dom, x), dy = boundary_distance(dom, y);
    const double cross = std::exp(-2.0 * dx * dy / t);
    return free_kernel(dom.d, t, x, y) * (1.0 - cross);
}

}  // namespace

double KernelEval::time_integral(double T, const Vec& x, const Vec& y) const {
    check_time(T);
    if (!contains(dom_, x) || !contains(dom_, y)) return 0.0;
    if (dom_.d == 1) {
        switch (dom_.kind) {
            case DomainKind::whole_space:
                return gauss1_time_integral(T, x[0] - y[0]);
            case DomainKind::half_space:
                return gauss1_time_integral(T, x[0] - y[0]) -
                       gauss1_time_integral(T, x[0] + y[0] - 2.0 * dom_.offset);
            case DomainKind::box:
                return interval_time_integral_images(dom_.a[0], dom_.b[0], T, x[0], y[0],
                                                     opt_.image_rel_tol, opt_.max_terms);
            default:
                break;
        }
        throw input_error("time_integral: unsupported 1-d domain");
    }
    if ((x - y).norm() == 0.0) return std::numeric_limits<double>::infinity();
    // s = T v^2; dyadic grading toward v=0 resolves the near-coincidence peak.
    const Quad q = graded_gl(0.0, 1.0, 30, opt_.time_quad_nodes, true, false);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < q.x.size(); ++i) {
        const double v = q.x[i], s = T * v * v;
        double ps;
        if (dom_.kind == DomainKind::disk && s < opt_.disk_t_min)
            ps = small_time_surrogate(dom_, s, x, y);
        else
            ps = (*this)(s, x, y);
        acc += q.w[i] * 2.0 * T * v * ps;
    }
    return acc;
}

double KernelEval::time_integral_cell_avg(double T, const Vec& x, double h) const {
    if (dom_.d == 1) {
        Vec y = x;
        return time_integral(T, x, y);
    }
    // Even-count tensor Gauss rule over the cell (no node hits the center).
    const Quad q1 = gl_on(-0.5 * h, 0.5 * h, 8);
    double acc = 0.0;
    if (dom_.d == 2) {
        for (Eigen::Index i = 0; i < q1.x.size(); ++i)
            for (Eigen::Index j = 0; j < q1.x.size(); ++j) {
                Vec z = x;
                z[0] += q1.x[i];
                z[1] += q1.x[j];
                const double kz = contains(dom_, z) ? time_integral(T, x, z) : 0.0;
                acc += q1.w[i] * q1.w[j] * kz;
            }
        return acc / (h * h);
    }
    for (Eigen::Index i = 0; i < q1.x.size(); ++i)
        for (Eigen::Index j = 0; j < q1.x.size(); ++j)
            for (Eigen::Index k = 0; k < q1.x.size(); ++k) {
                Vec z = x;
                z[0] += q1.x[i];
                z[1] += q1.x[j];
                z[2] += q1.x[k];
                const double kz = contains(dom_, z) ? time_integral(T, x, z) : 0.0;
                acc += q1.w[i] * q1.w[j] * q1.w[k] * kz;
            }
    return acc / (h * h * h);
}

double KernelEval::resolvent(const Vec& x, const Vec& y) const {
    if (!contains(dom_, x) || !contains(dom_, y)) return 0.0;
    if (dom_.d == 1) {
        switch (dom_.kind) {
            case DomainKind::whole_space:
                return resolvent_g1(x[0] - y[0]);
            case DomainKind::half_space:
                return resolvent_g1(x[0] - y[0]) - resolvent_g1(x[0] + y[0] - 2.0 * dom_.offset);
            case DomainKind::box:
                return interval_resolvent_images(dom_.a[0], dom_.b[0], x[0], y[0],
                                                 opt_.image_rel_tol, opt_.max_terms);
            default:
                break;
        }
        throw input_error("resolvent: unsupported 1-d domain");
    }
    const double r = (x - y).norm();
    if (dom_.kind == DomainKind::whole_space) {
        if (r == 0.0) return std::numeric_limits<double>::infinity();
        if (dom_.d == 2) return std::cyl_bessel_k(0.0, std::sqrt(2.0) * r) / kPi;
        return std::exp(-std::sqrt(2.0) * r) / (2.0 * kPi * r);
    }
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    // Split at s0 ~ r^2 (transition scale of the Gaussian factor).
    const double s0 = std::clamp(r * r, 1e-3, 1.0);
    const auto eval = [&](double s) {
        if (dom_.kind == DomainKind::disk && s < opt_.disk_t_min)
            return small_time_surrogate(dom_, s, x, y);
        return (*this)(s, x, y);
    };
    const Quad head = graded_gl(0.0, 1.0, 25, 10, true, false);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < head.x.size(); ++i) {
        const double v = head.x[i], s = s0 * v * v;
        acc += head.w[i] * 2.0 * s0 * v * std::exp(-s) * eval(s);
    }
    const Quad tail = graded_gl(s0, 45.0, 22, 12, true, false);
    for (Eigen::Index i = 0; i < tail.x.size(); ++i) {
        const double s = tail.x[i];
        acc += tail.w[i] * std::exp(-s) * eval(s);
    }
    return acc;
}

double killed_kernel(const Domain& dom, double t, const Vec& x, const Vec& y) {
    return KernelEval(dom)(t, x, y);
}

double resolvent_r1(const Domain& dom, const Vec& x, const Vec& y) {
    return KernelEval(dom).resolvent(x, y);
}

// ---------------------------------------------------------------------------
// Chapman-Kolmogorov residual and kernel mass
// ---------------------------------------------------------------------------

namespace {

Quad axis_rule(const Domain& dom, int k, double s, double t, double xk, double yk) {
    const double spread = 8.0 * std::sqrt(s + t);
    double lo = std::min(xk, yk) - spread, hi = std::max(xk, yk) + spread;
    if (dom.kind == DomainKind::box) {
        lo = dom.a[k];
        hi = dom.b[k];
    } else if (dom.kind == DomainKind::half_space && k == dom.axis) {
        lo = dom.offset;
        hi = std::max(xk, yk) + spread;
    }
    const double scale = 0.7 * std::sqrt(std::min(s, t));
    const int panels = std::clamp(int(std::ceil((hi - lo) / scale)), 6, 80);
    return composite_gl(lo, hi, panels, 12);
}

struct PolarRule {
    Quad rho;
    int ntheta = 0;
    Eigen::VectorXd theta;
    double wtheta = 0;
};

PolarRule polar_rule(const detail::DiskSeries& ds, double smin, double jmax) {
    PolarRule pr;
    const int panels = std::clamp(int(std::ceil(ds.R / (0.7 * std::sqrt(smin)))), 8, 24);
    pr.rho = composite_gl(0.0, ds.R, panels, 10);
    int mmax = 0;
    for (const auto& term : ds.terms)
        if (term.j <= jmax) mmax = std::max(mmax, term.m);
    pr.ntheta = std::max(64, 4 * (mmax / 2) + 2 * mmax + 16);
    pr.theta.resize(pr.ntheta);
    for (int i = 0; i < pr.ntheta; ++i) pr.theta[i] = 2.0 * kPi * i / pr.ntheta;
    pr.wtheta = 2.0 * kPi / pr.ntheta;
    return pr;
}

// Kernel values p_tau(w, z) for z on the polar grid, assembled per angular
// order from radial tables (batched; two Bessel evaluations per term-node).
Eigen::MatrixXd disk_kernel_on_grid(const detail::DiskSeries& ds, double cutoff, double tau,
                                    const Vec& w, const PolarRule& pr) {
    const double jmax = ds.jmax_for(tau, cutoff);
    const double rw = (w - ds.center).norm();
    const double thw = std::atan2(w[1] - ds.center[1], w[0] - ds.center[0]);
    const long nr = pr.rho.x.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nr, pr.ntheta);
    std::vector<std::vector<const detail::DiskTerm*>> by_m(size_t(ds.max_order) + 1);
    for (const auto& term : ds.terms)
        if (term.j <= jmax) by_m[size_t(term.m)].push_back(&term);
    Eigen::VectorXd amp(nr);
    Eigen::RowVectorXd ang(pr.ntheta);
    for (int m = 0; m <= ds.max_order; ++m) {
        if (by_m[size_t(m)].empty()) continue;
        amp.setZero();
        for (const auto* term : by_m[size_t(m)]) {
            const double damp = std::exp(-0.5 * term->j * term->j * tau / (ds.R * ds.R));
            const double c = term->coeff * damp * bessel_j(m, term->j * rw / ds.R);
            if (c == 0.0) continue;
            for (long i = 0; i < nr; ++i) amp[i] += c * bessel_j(m, term->j * pr.rho.x[i] / ds.R);
        }
        for (int i = 0; i < pr.ntheta; ++i)
            ang[i] = m == 0 ? 1.0 : std::cos(m * (thw - pr.theta[i]));
        out.noalias() += amp * ang;
    }
    return out;
}

}  // namespace

double ck_residual(const KernelEval& ke, double s, double t, const Vec& x, const Vec& y) {
    check_time(s);
    check_time(t);
    const Domain& dom = ke.domain();
    const double direct = ke(s + t, x, y);
    if (!contains(dom, x) || !contains(dom, y)) return 0.0;
    if (dom.kind == DomainKind::disk) {
        const auto& ds = *ke.disk_series();
        const double smin = std::min(s, t);
        const PolarRule pr = polar_rule(ds, smin, ds.jmax_for(smin, ke.options().eigen_cutoff));
        const Eigen::MatrixXd ka = disk_kernel_on_grid(ds, ke.options().eigen_cutoff, s, x, pr);
        const Eigen::MatrixXd kb = disk_kernel_on_grid(ds, ke.options().eigen_cutoff, t, y, pr);
        double acc = 0.0;
        for (long i = 0; i < pr.rho.x.size(); ++i) {
            const double wr = pr.rho.w[i] * pr.rho.x[i] * pr.wtheta;
            acc += wr * (ka.row(i).array() * kb.row(i).array()).sum();
        }
        return std::abs(direct - acc);
    }
    // Product domains: the z-integral factorizes per axis.
    double integral = 1.0;
    for (int k = 0; k < dom.d; ++k) {
        const Quad q = axis_rule(dom, k, s, t, x[k], y[k]);
        double axis = 0.0;
        for (Eigen::Index i = 0; i < q.x.size(); ++i) {
            // KernelEval::killed_axis is private; rebuild per-axis factors here.
            const double z = q.x[i];
            double pa, pb;
            if (dom.kind == DomainKind::box) {
                const double lo = dom.a[k], hi = dom.b[k], L = hi - lo;
                pa = (s <= 0.35 * L * L)
                         ? interval_kernel_images(lo, hi, s, x[k], z)
                         : interval_kernel_eigen(lo, hi, s, x[k], z);
                pb = (t <= 0.35 * L * L)
                         ? interval_kernel_images(lo, hi, t, z, y[k])
                         : interval_kernel_eigen(lo, hi, t, z, y[k]);
            } else if (dom.kind == DomainKind::half_space && k == dom.axis) {
                pa = gauss1(s, x[k] - z) - gauss1(s, x[k] + z - 2.0 * dom.offset);
                pb = gauss1(t, z - y[k]) - gauss1(t, z + y[k] - 2.0 * dom.offset);
            } else {
                pa = gauss1(s, x[k] - z);
                pb = gauss1(t, z - y[k]);
            }
            axis += q.w[i] * pa * pb;
        }
        integral *= axis;
    }
    return std::abs(direct - integral);
}

double kernel_mass(const KernelEval& ke, double t, const Vec& x) {
    check_time(t);
    const Domain& dom = ke.domain();
    if (!contains(dom, x)) return 0.0;
    if (dom.kind == DomainKind::disk) {
        const auto& ds = *ke.disk_series();
        const PolarRule pr = polar_rule(ds, t, ds.jmax_for(t, ke.options().eigen_cutoff));
        const Eigen::MatrixXd ka = disk_kernel_on_grid(ds, ke.options().eigen_cutoff, t, x, pr);
        double acc = 0.0;
        for (long i = 0; i < pr.rho.x.size(); ++i)
            acc += pr.rho.w[i] * pr.rho.x[i] * pr.wtheta * ka.row(i).sum();
        return acc;
    }
    double mass = 1.0;
    for (int k = 0; k < dom.d; ++k) {
        const Quad q = axis_rule(dom, k, t, t, x[k], x[k]);
        double axis = 0.0;
        for (Eigen::Index i = 0; i < q.x.size(); ++i) {
            const double z = q.x[i];
            double p;
            if (dom.kind == DomainKind::box) {
                const double lo = dom.a[k], hi = dom.b[k], L = hi - lo;
                p = (t <= 0.35 * L * L) ? interval_kernel_images(lo, hi, t, x[k], z)
                                        : interval_kernel_eigen(lo, hi, t, x[k], z);
            } else if (dom.kind == DomainKind::half_space && k == dom.axis) {
                p = gauss1(t, x[k] - z) - gauss1(t, x[k] + z - 2.0 * dom.offset);
            } else {
                p = gauss1(t, x[k] - z);
            }
            axis += q.w[i] * p;
        }
        mass *= axis;
    }
    return mass;
}

}  // namespace iml
