#include "doctest.h"

#include <cmath>
#include <vector>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"
#include "iml/heat_kernel.hpp"
#include "iml/quadrature.hpp"
#include "iml/path_sim.hpp"
#include "iml/rng.hpp"

using namespace iml;

namespace {

Vec point1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

// Survival mass of the killed interval (0,1) kernel from x0, by odd-mode
// series: S_u(y) = sum_{n odd} (4/(n pi)) exp(-n^2 pi^2 u / 2) sin(n pi y).
double interval_survival_series(double u, double y) {
    double s = 0.0;
    for (int n = 1; n < 400; n += 2) {
        const double term = 4.0 / (n * M_PI) * std::exp(-0.5 * n * n * M_PI * M_PI * u) *
                            std::sin(n * M_PI * y);
        s += term;
        if (n > 5 && std::abs(term) < 1e-17) break;
    }
    return s;
}

}  // namespace

TEST_SUITE("path_sim") {
    TEST_CASE("whole space paths are never killed and deposit unit mass") {
        const Domain dom = make_whole_space(1);
        const KilledPath path = sample_path(dom, point1(0.0), 1.0, 1e-3, 99, 0);
        CHECK(!path.killed);
        CHECK(path.alive_until == path.n_steps());
        CHECK(std::isinf(path.exit_time_estimate));

        // margin 10 >> typical |B_s| for s <= 1: no deposit is dropped
        const auto lat = make_shared_lattice(dom, 0.05, 10.0);
        const OccupationField occ = occupation_field(path, lat, 1.0);
        CHECK(occ.total_mass == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(occ.total_mass ==
              doctest::Approx(lat->cell_measure * occ.field.v.sum()).epsilon(1e-12));
    }

    TEST_CASE("paths are deterministic in (seed, stream) and streams decorrelate") {
        const Domain dom = make_interval(0.0, 1.0);
        const KilledPath a = sample_path(dom, point1(0.5), 0.5, 1e-3, 1234, 7);
        const KilledPath b = sample_path(dom, point1(0.5), 0.5, 1e-3, 1234, 7);
        CHECK(a.killed == b.killed);
        CHECK(a.alive_until == b.alive_until);
        CHECK((a.positions - b.positions).cwiseAbs().maxCoeff() == 0.0);

        const KilledPath c = sample_path(dom, point1(0.5), 0.5, 1e-3, 1234, 8);
        CHECK(a.positions.row(1) != c.positions.row(1));
    }

    TEST_CASE("starting point outside the domain is rejected") {
        const Domain dom = make_interval(0.0, 1.0);
        CHECK_THROWS_AS(sample_path(dom, point1(1.5), 1.0, 1e-3, 1), input_error);
        CHECK_THROWS_AS(sample_path(dom, point1(0.5), 1.0, 2.0, 1), input_error);
        CHECK_THROWS_AS(survival_probability(dom, point1(-1.0), 1.0, 1e-3, 10, 1),
                        input_error);
    }

    TEST_CASE("killed path deposits exactly its surviving fraction") {
        const Domain dom = make_interval(0.0, 1.0);
        const auto lat = make_shared_lattice(dom, 1.0 / 64, 0.0);
        // scan streams for a path killed near the middle of the horizon
        bool found = false;
        for (std::uint64_t s = 0; s < 400 && !found; ++s) {
            const KilledPath path = sample_path(dom, point1(0.5), 1.0, 1e-3, 42, s);
            if (!path.killed) continue;
            const double frac = path.exit_time_estimate / path.t;
            if (frac < 0.4 || frac > 0.6) continue;
            found = true;
            const OccupationField occ = occupation_field(path, lat, 1.0);
            // interval lattice covers every in-domain position: no deposit drops
            CHECK(occ.total_mass ==
                  doctest::Approx(double(path.alive_until) * path.dt / path.t)
                      .epsilon(1e-12));
            CHECK(occ.total_mass == doctest::Approx(frac).epsilon(0.01));
            CHECK(occ.total_mass < 1.0 + 1e-9);
        }
        CHECK(found);
    }

    TEST_CASE("occupation horizon must match the path") {
        const Domain dom = make_whole_space(1);
        const auto lat = make_shared_lattice(dom, 0.1, 2.0);
        const KilledPath path = sample_path(dom, point1(0.0), 0.5, 1e-2, 3);
        CHECK_THROWS_AS(occupation_field(path, lat, 1.0), input_error);
    }

    TEST_CASE("interval survival matches the killed-kernel mass oracle") {
        // oracle: integral of p_1(0.5, .) over (0,1) = 0.00915661 (odd-mode series)
        const double oracle = interval_survival_series(1.0, 0.5);
        CHECK(oracle == doctest::Approx(0.00915661).epsilon(1e-5));

        const Domain dom = make_interval(0.0, 1.0);
        const auto est = survival_probability(dom, point1(0.5), 1.0, 1e-3, 100000, 2024);
        CHECK(std::abs(est.estimate - oracle) < 3.0 * est.std_error + 1e-4);
        CHECK(est.std_error == doctest::Approx(std::sqrt(est.estimate * (1 - est.estimate) / 1e5))
                                   .epsilon(1e-12));
    }

    TEST_CASE("bridge correction removes the step-size bias") {
        const Domain dom = make_interval(0.0, 1.0);
        const std::int64_t n = 20000;
        const auto coarse = survival_probability(dom, point1(0.5), 1.0, 2e-3, n, 5);
        const auto fine = survival_probability(dom, point1(0.5), 1.0, 5e-4, n, 6);
        const double mc = std::sqrt(coarse.std_error * coarse.std_error +
                                    fine.std_error * fine.std_error);
        CHECK(std::abs(coarse.estimate - fine.estimate) < 3.0 * mc + 1e-4);
    }

    TEST_CASE("joint survival of p copies factorizes") {
        const Domain dom = make_interval(0.0, 1.0);
        const double t = 0.5, dt = 1e-3;
        const auto single = survival_probability(dom, point1(0.5), t, dt, 40000, 11);
        const auto joint = joint_survival_probability(dom, point1(0.5), 2, t, dt, 20000, 12);
        const double expect = single.estimate * single.estimate;
        const double se = std::sqrt(joint.std_error * joint.std_error +
                                    4.0 * expect * single.std_error * single.std_error);
        CHECK(std::abs(joint.estimate - expect) < 3.0 * se + 1e-4);
    }

    TEST_CASE("survival curve agrees exactly with a direct run at the same step") {
        const Domain dom = make_interval(0.0, 1.0);
        const auto curve =
            survival_curve(dom, point1(0.5), {0.5, 1.0}, 1e-3, 20000, 77);
        const auto direct = survival_probability(dom, point1(0.5), 0.5, 1e-3, 20000, 77);
        // identical streams and step size: the same paths are simulated
        CHECK(curve[0].estimate == direct.estimate);
        CHECK(curve[1].estimate <= curve[0].estimate);
    }

    TEST_CASE("ensemble mean occupation matches the time-integrated kernel") {
        const Domain dom = make_interval(0.0, 1.0);
        const KernelEval ke(dom);
        const auto lat = make_shared_lattice(dom, 1.0 / 16, 0.0);
        const auto ens =
            ensemble_occupation(dom, point1(0.5), 1.0, 1e-3, 20000, 31, lat, false);
        CHECK(ens.n_paths == 20000);

        // oracle density: cell average over y of int_0^t p_s(x0, y) ds / t
        GridField oracle = zero_field(lat);
        Vec x0v = point1(0.5), yv(1);
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) {
            const double c = lat->node(i)[0];
            const double lo = std::max(0.0, c - lat->h / 2);
            const double hi = std::min(1.0, c + lat->h / 2);
            // split at the node: the time integral has a kink at y = x0
            double acc = 0.0;
            for (const auto& seg : {std::pair{lo, c}, std::pair{c, hi}}) {
                const Quad q = gl_on(seg.first, seg.second, 8);
                for (Eigen::Index k = 0; k < q.x.size(); ++k) {
                    yv[0] = q.x[k];
                    acc += q.w[k] * ke.time_integral(1.0, x0v, yv);
                }
            }
            oracle.v[i] = acc / lat->h;
        }
        double l1 = 0.0, tot = 0.0;
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) {
            l1 += std::abs(ens.mean_field.v[i] - oracle.v[i]) * lat->cell_measure;
            tot += oracle.v[i] * lat->cell_measure;
        }
        CHECK(l1 / tot < 0.05);

        // integrated mass against (1/t) int_0^t S_s(x0) ds by fine trapezoid
        double mass = 0.0;
        const int nq = 400;
        for (int q = 0; q <= nq; ++q) {
            const double s = (double(q) / nq);
            const double val = (s == 0.0) ? 1.0 : interval_survival_series(s, 0.5);
            mass += val * ((q == 0 || q == nq) ? 0.5 : 1.0) / nq;
        }
        CHECK(ens.mean_total_mass == doctest::Approx(mass).epsilon(0.02));
    }

    TEST_CASE("conditioning flag keeps only surviving paths") {
        const Domain dom = make_interval(0.0, 1.0);
        const auto lat = make_shared_lattice(dom, 1.0 / 32, 0.0);
        const auto ens =
            ensemble_occupation(dom, point1(0.5), 0.25, 1e-3, 4000, 8, lat, true);
        CHECK(ens.n_paths == ens.n_surviving);
        CHECK(ens.n_surviving > 0);
        // every surviving interval path deposits full mass on this lattice
        CHECK(ens.mean_total_mass == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("worker count does not change results") {
        const Domain dom = make_interval(0.0, 1.0);
        const auto s1 = survival_probability(dom, point1(0.5), 0.5, 1e-3, 30000, 9, 1);
        const auto s4 = survival_probability(dom, point1(0.5), 0.5, 1e-3, 30000, 9, 4);
        CHECK(s1.estimate == s4.estimate);

        const auto lat = make_shared_lattice(dom, 1.0 / 32, 0.0);
        const auto e1 =
            ensemble_occupation(dom, point1(0.5), 0.5, 1e-3, 10000, 10, lat, false, 1);
        const auto e3 =
            ensemble_occupation(dom, point1(0.5), 0.5, 1e-3, 10000, 10, lat, false, 3);
        CHECK((e1.mean_field.v - e3.mean_field.v).abs().maxCoeff() == 0.0);
    }

    TEST_CASE("occupation of survival-conditioned paths approaches the ground state") {
        // Direct conditioning by rejection is hopeless at t = 5 (survival
        // ~ 2e-11), so positions are drawn from the exact killed-kernel
        // transition conditioned on survival, step by step, and fed through
        // the production occupation/binning code.
        const Domain dom = make_interval(0.0, 1.0);
        const KernelEval ke(dom);
        const double t = 5.0, dt = 0.05;
        const int n_steps = 100;
        const int ny = 511;  // interior sampling grid at spacing 1/512
        const double hy = 1.0 / 512;

        // base one-step kernel on the sampling grid
        Eigen::MatrixXd P(ny, ny);
        for (int i = 0; i < ny; ++i)
            for (int j = 0; j < ny; ++j)
                P(i, j) = interval_kernel_eigen(0.0, 1.0, dt, (i + 1) * hy, (j + 1) * hy);
        // survival weights S_{t - j dt}(y) for each step j = 1..n
        Eigen::MatrixXd S(n_steps + 1, ny);
        for (int j = 1; j <= n_steps; ++j) {
            const double u = t - j * dt;
            for (int iy = 0; iy < ny; ++iy)
                S(j, iy) = (u <= 1e-14) ? 1.0 : interval_survival_series(u, (iy + 1) * hy);
        }

        const auto lat = make_shared_lattice(dom, 1.0 / 64, 0.0);
        Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(lat->node_count);
        const int n_paths = 8000;
        const CounterRng rng(2468, 0);
        Eigen::VectorXd w(ny);
        KilledPath path;
        path.t = t;
        path.dt = dt;
        path.killed = false;
        path.exit_time_estimate = std::numeric_limits<double>::infinity();
        path.positions = Eigen::MatrixXd::Zero(n_steps + 1, 1);
        path.alive_until = n_steps;
        for (int m = 0; m < n_paths; ++m) {
            int ix = 255;  // x0 = 0.5
            path.positions(0, 0) = 0.5;
            for (int j = 1; j <= n_steps; ++j) {
                w = P.row(ix).transpose().cwiseProduct(S.row(j).transpose());
                const double total = w.sum();
                const double u = rng.u01(std::uint64_t(m) * 128 + j, 3) * total;
                double acc = 0.0;
                int pick = ny - 1;
                for (int iy = 0; iy < ny; ++iy) {
                    acc += w[iy];
                    if (acc >= u) {
                        pick = iy;
                        break;
                    }
                }
                ix = pick;
                path.positions(j, 0) = (pick + 1) * hy;
            }
            const OccupationField occ = occupation_field(path, lat, t);
            mean += occ.field.v;
        }
        mean /= double(n_paths);

        double l1 = 0.0;
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) {
            const double x = lat->node(i)[0];
            const double target = 2.0 * std::sin(M_PI * x) * std::sin(M_PI * x);
            l1 += std::abs(mean[i] - target) * lat->cell_measure;
        }
        CHECK(l1 < 0.05);
    }
}
