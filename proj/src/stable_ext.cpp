#include "iml/stable_ext.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "iml/errors.hpp"
#include "iml/path_sim.hpp"
#include "iml/rng.hpp"

namespace iml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStableGrowthCap = 1.05;

GridField sqrt_density(const GridField& rho) {
    GridField psi;
    psi.lat = rho.lat;
    psi.v = rho.v.max(0.0).sqrt();
    for (long i = 0; i < psi.lat->node_count; ++i)
        if (!psi.lat->interior[size_t(i)]) psi.v[i] = 0.0;
    return psi;
}

// integral of |grad psi|^2 over the lattice box: one forward link per axis
// per cell, with the zero extension supplying virtual neighbors outside
double grad_square_integral(const GridField& psi) {
    const Lattice& lat = psi.lattice();
    std::vector<long> stride(size_t(lat.d), 1);
    for (int k = lat.d - 2; k >= 0; --k)
        stride[size_t(k)] = stride[size_t(k + 1)] * lat.nodes[k + 1];

    double acc = 0.0;
    for (long i = 0; i < lat.node_count; ++i) {
        const Eigen::VectorXi mi = lat.multi_index(i);
        for (int k = 0; k < lat.d; ++k) {
            const double right =
                (mi[k] + 1 < lat.nodes[k]) ? psi.v[i + stride[size_t(k)]] : 0.0;
            const double diff = right - psi.v[i];
            acc += diff * diff;
            if (mi[k] == 0) acc += psi.v[i] * psi.v[i];
        }
    }
    return acc * std::pow(lat.h, lat.d - 2);
}

void require_stable_gate(const StableParams& sp) {
    if (!(sp.alpha > 0.0) || !(sp.alpha < 2.0))
        throw input_error("stable rate: alpha must lie in (0,2)");
    if (sp.p < 1) throw input_error("stable rate: p must be >= 1");
    if (!(double(sp.d) - double(sp.p) * (double(sp.d) - sp.alpha) > 0.0))
        throw input_error("stable rate: intersection condition d - p(d - alpha) > 0 violated");
}

bool fractional_member(double e_coarse, const GridField* refined_rho, double alpha,
                       double* e_out) {
    *e_out = e_coarse;
    if (!std::isfinite(e_coarse)) return false;
    if (refined_rho != nullptr) {
        const double e_fine = fractional_energy(sqrt_density(*refined_rho), alpha);
        if (!std::isfinite(e_fine) || e_fine >= kStableGrowthCap * e_coarse) return false;
    }
    return true;
}

double stable_rate_core(const MeasureTuple& mt, const MeasureTuple* refined,
                        const StableParams& sp, double compat_tol) {
    require_stable_gate(sp);
    validate_tuple(mt);
    if (refined != nullptr) {
        validate_tuple(*refined);
        if (refined->mus.size() != mt.mus.size())
            throw input_error("stable rate: refinement pair has a different component count");
        if (std::abs(refined->mu.lat->h - 0.5 * mt.mu.lat->h) > 1e-12 * mt.mu.lat->h)
            throw input_error("stable rate: refinement pair must halve the spacing");
    }
    const Lattice& lat = mt.mu.lattice();
    if (lat.d != sp.d) throw input_error("stable rate: tuple dimension does not match params");
    if (mt.mus.size() != size_t(sp.p))
        throw input_error("stable rate: component count does not match params");
    const double tol = compat_tol > 0.0 ? compat_tol : 10.0 * lat.h;

    Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(lat.node_count);
    for (const GridField& rho : mt.mus) prod *= rho.v;
    double drift = 0.0;
    for (long i = 0; i < lat.node_count; ++i)
        if (lat.interior[size_t(i)]) drift += std::abs(mt.mu.v[i] - prod[i]);
    if (drift * lat.cell_measure > tol) return kInf;

    double total = 0.0;
    for (size_t i = 0; i < mt.mus.size(); ++i) {
        const double e = fractional_energy(sqrt_density(mt.mus[i]), sp.alpha);
        double scored = 0.0;
        const GridField* fine = refined ? &refined->mus[i] : nullptr;
        if (!fractional_member(e, fine, sp.alpha, &scored)) return kInf;
        total += scored;
    }
    return total;
}

}  // namespace

bool admissible(const StableParams& sp) {
    if (!(sp.alpha > 0.0) || !(sp.alpha < 2.0)) return false;
    if (sp.p < 1) return false;
    if (!(sp.alpha < double(sp.d))) return false;
    return double(sp.d) - double(sp.p) * (double(sp.d) - sp.alpha) > 0.0;
}

double kanter_stable(double beta, double u, double w) {
    if (!(beta > 0.0) || !(beta < 1.0))
        throw input_error("stable transform: beta must lie in (0,1)");
    if (!(u > 0.0) || !(u < 1.0) || !(w > 0.0))
        throw input_error("stable transform: u must lie in (0,1) and w must be positive");
    const double theta = std::numbers::pi * u;
    const double a = std::pow(std::sin(beta * theta), beta / (1.0 - beta)) *
                     std::sin((1.0 - beta) * theta) /
                     std::pow(std::sin(theta), 1.0 / (1.0 - beta));
    return std::pow(a / w, (1.0 - beta) / beta);
}

Vec sample_stable_increment(double alpha, int d, double dt, std::uint64_t seed,
                            std::uint64_t index) {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw input_error("stable increment: alpha must lie in (0,2]");
    if (d < 1 || d > 3) throw input_error("stable increment: dimension must be 1, 2, or 3");
    if (!(dt > 0.0)) throw input_error("stable increment: time step must be positive");

    const CounterRng rng(seed, index);
    double s = 1.0;
    if (alpha < 2.0) {
        const auto uv = rng.u01_pair(0, 1);
        s = kanter_stable(0.5 * alpha, uv[0], -std::log(uv[1]));
    }
    const double scale = std::sqrt(2.0 * std::pow(dt, 2.0 / alpha) * s);
    Vec x(d);
    for (int j = 0; j < d; ++j)
        x[j] = scale * rng.normal_pair(std::uint64_t(j / 2), 0)[size_t(j % 2)];
    return x;
}

double fractional_energy(const GridField& psi, double alpha) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw input_error("fractional energy: alpha must lie in (0,2)");
    const Lattice& lat = psi.lattice();
    for (long i = 0; i < lat.node_count; ++i)
        if (!lat.interior[size_t(i)] && psi.v[i] != 0.0)
            throw input_error("fractional energy: nonzero boundary trace");

    const int d = lat.d;
    const long n = lat.node_count;

    // kernel values depend only on the per-axis offset magnitudes, which live
    // in the same index space as the nodes themselves
    Eigen::ArrayXd kernel(n);
    kernel[0] = 0.0;
    const double scale = std::pow(lat.h, double(d) - alpha);
    for (long o = 1; o < n; ++o) {
        const Eigen::VectorXi mi = lat.multi_index(o);
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) r2 += double(mi[k]) * double(mi[k]);
        kernel[o] = scale * std::pow(r2, -0.5 * (double(d) + alpha));
    }

    std::vector<Eigen::VectorXi> multi;
    multi.reserve(size_t(n));
    for (long i = 0; i < n; ++i) multi.push_back(lat.multi_index(i));

    double far = 0.0;
    Eigen::VectorXi off(d);
    for (long i = 0; i < n; ++i) {
        const double vi = psi.v[i];
        for (long j = i + 1; j < n; ++j) {
            const double diff = vi - psi.v[j];
            if (diff == 0.0) continue;
            for (int k = 0; k < d; ++k) off[k] = std::abs(multi[size_t(i)][k] - multi[size_t(j)][k]);
            far += diff * diff * kernel[lat.index(off)];
        }
    }
    far *= 2.0;  // the double integral runs over ordered pairs

    const double shell =
        unit_ball_volume(d) * std::pow(lat.h, 2.0 - alpha) / (2.0 - alpha);
    return far + shell * grad_square_integral(psi);
}

double rate_I_stable(const MeasureTuple& mt, const StableParams& sp, double compat_tol) {
    return stable_rate_core(mt, nullptr, sp, compat_tol);
}

double rate_I_stable(const MeasureTuple& mt, const MeasureTuple& refined, const StableParams& sp,
                     double compat_tol) {
    return stable_rate_core(mt, &refined, sp, compat_tol);
}

StableEndpoints simulate_stable_endpoints(const Domain& dom, double alpha, const Vec& x0,
                                          double t, double dt, std::int64_t n_samples,
                                          std::uint64_t seed, int workers) {
    if (dom.kind != DomainKind::whole_space && dom.kind != DomainKind::half_space)
        throw input_error(
            "stable simulation: only the whole space and half-spaces are supported");
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw input_error("stable simulation: alpha must lie in (0,2]");
    if (x0.size() != dom.d) throw input_error("stable simulation: start point has wrong dimension");
    if (!contains(dom, x0)) throw input_error("stable simulation: start point outside the domain");
    if (!(t > 0.0) || !(dt > 0.0)) throw input_error("stable simulation: t and dt must be positive");
    if (n_samples < 1) throw input_error("stable simulation: need at least one sample");

    const std::int64_t n_steps = std::max<std::int64_t>(1, std::llround(t / dt));
    const double step = t / double(n_steps);
    const double step_pow = std::pow(step, 2.0 / alpha);
    const int d = dom.d;
    const double beta = 0.5 * alpha;

    StableEndpoints out;
    out.x.resize(n_samples, d);
    out.alive.assign(size_t(n_samples), 0);

    struct Partial {
        std::int64_t alive = 0;
    };
    const auto partials = detail::parallel_blocks<Partial>(
        n_samples, workers, [&](std::int64_t, std::int64_t lo, std::int64_t hi, Partial& acc) {
            Vec x(d);
            for (std::int64_t sidx = lo; sidx < hi; ++sidx) {
                const CounterRng rng(seed, std::uint64_t(sidx));
                x = x0;
                bool alive = true;
                for (std::int64_t k = 0; k < n_steps && alive; ++k) {
                    double sub = 1.0;
                    if (alpha < 2.0) {
                        const auto uv = rng.u01_pair(std::uint64_t(k), 1);
                        sub = kanter_stable(beta, uv[0], -std::log(uv[1]));
                    }
                    const double scale = std::sqrt(2.0 * step_pow * sub);
                    for (int j = 0; j < d; ++j)
                        x[j] += scale *
                                rng.normal_pair(2 * std::uint64_t(k) + std::uint64_t(j / 2),
                                                0)[size_t(j % 2)];
                    if (!contains(dom, x)) alive = false;
                }
                out.x.row(sidx) = x.transpose();
                if (alive) {
                    out.alive[size_t(sidx)] = 1;
                    ++acc.alive;
                }
            }
        });

    std::int64_t alive_total = 0;
    for (const Partial& p : partials) alive_total += p.alive;
    out.survival = double(alive_total) / double(n_samples);
    return out;
}

}  // namespace iml
