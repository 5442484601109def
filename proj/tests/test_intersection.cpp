#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"
#include "iml/heat_kernel.hpp"
#include "iml/intersection.hpp"
#include "iml/path_sim.hpp"
#include "iml/rng.hpp"

using namespace iml;

namespace {

Vec point1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

Vec point2(double x, double y) {
    Vec v(2);
    v[0] = x;
    v[1] = y;
    return v;
}

double bump(double x, double c, double w) {
    const double u = (x - c) / w;
    return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
}

}  // namespace

TEST_SUITE("intersection") {
    TEST_CASE("ball kernel values and normalization") {
        CHECK(ball_kernel_q(2, 0.1, point2(0, 0), point2(0.05, 0)) ==
              doctest::Approx(31.83099).epsilon(1e-6));
        // open ball: boundary point gets 0
        CHECK(ball_kernel_q(1, 0.5, point1(0.0), point1(0.5)) == 0.0);
        CHECK(ball_kernel_q(1, 0.5, point1(0.0), point1(0.499)) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ball_kernel_q(3, 0.2, point1(0.0).replicate(3, 1), point1(0.0).replicate(3, 1)) ==
              doctest::Approx(1.0 / (4.0 * M_PI / 3.0 * 0.008)).epsilon(1e-12));
        CHECK_THROWS_AS(ball_kernel_q(1, 0.0, point1(0), point1(0)), input_error);

        // lattice quadrature of q_eps integrates to 1 within O(h/eps)
        const Domain dom = make_whole_space(2);
        const auto lat = make_shared_lattice(dom, 0.02, 1.0);
        const Vec c = point2(0.0, 0.0);
        double mass = 0.0;
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i)
            mass += ball_kernel_q(2, 0.3, c, lat->node(i)) * lat->cell_measure;
        CHECK(mass == doctest::Approx(1.0).epsilon(0.02 / 0.3));
    }

    TEST_CASE("ball average preserves constants away from the box edge") {
        const Domain dom = make_whole_space(1);
        const auto lat = make_shared_lattice(dom, 0.01, 1.0);
        GridField f = zero_field(lat);
        f.v.setConstant(3.7);
        const double eps = 0.1;
        const GridField g = apply_T_eps(f, eps);
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) {
            const double x = lat->node(i)[0];
            if (std::abs(x) < 1.0 - eps - lat->h)
                CHECK(g.v[i] == doctest::Approx(3.7).epsilon(1e-13));
        }
        // near the box edge the zero extension bites
        CHECK(g.v[0] < 3.7);
    }

    TEST_CASE("unresolvable ball radius is rejected") {
        const auto lat = make_shared_lattice(make_interval(0.0, 1.0), 1.0 / 16, 0.0);
        GridField f = zero_field(lat);
        CHECK_THROWS_AS(apply_T_eps(f, 1.0 / 32), resolution_error);
    }

    TEST_CASE("ball average is an L^r contraction") {
        const auto lat = make_shared_lattice(make_interval(0.0, 1.0), 1.0 / 128, 0.0);
        GridField f = zero_field(lat);
        const CounterRng rng(555, 0);
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i)
            f.v[i] = rng.u01(std::uint64_t(i), 0);
        for (const double eps : {0.05, 0.125}) {
            const GridField g = apply_T_eps(f, eps);
            for (const double r : {1.0, 2.0, 4.0}) {
                CHECK(lp_norm(g, r) <= lp_norm(f, r) * (1.0 + 1e-12));
            }
        }
    }

    TEST_CASE("ball average converges to the identity as eps shrinks") {
        const auto lat = make_shared_lattice(make_interval(0.0, 1.0), 1.0 / 512, 0.0);
        const GridField f =
            sample_field(lat, [](const Vec& x) { return bump(x[0], 0.5, 0.3); }, false);
        double prev = std::numeric_limits<double>::infinity();
        for (const double eps : {0.4, 0.2, 0.1, 0.05}) {
            GridField diff = apply_T_eps(f, eps);
            diff.v -= f.v;
            const double err = lp_norm(diff, 2.0);
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev < 1e-2);
    }

    TEST_CASE("intersection field is the product of averaged occupations") {
        const Domain dom = make_interval(0.0, 1.0);
        const auto lat = make_shared_lattice(dom, 1.0 / 64, 0.0);
        const double t = 0.4, dt = 1e-3, eps = 0.1;
        std::vector<OccupationField> occs;
        for (int i = 0; i < 2; ++i)
            occs.push_back(
                occupation_field(sample_path(dom, point1(0.5), t, dt, 17, i), lat, t));
        const IntersectionField isf = intersection_field(occs, eps, t);
        CHECK(isf.p == 2);
        CHECK(isf.field.v.minCoeff() >= 0.0);
        // definitional identity, recomputed
        const GridField a = apply_T_eps(occs[0].field, eps);
        const GridField b = apply_T_eps(occs[1].field, eps);
        CHECK((isf.field.v - a.v * b.v).abs().maxCoeff() == 0.0);

        // product with an instantly-dead process vanishes
        occs[1].field.v.setZero();
        const IntersectionField dead = intersection_field(occs, eps, t);
        CHECK(dead.field.v.abs().maxCoeff() == 0.0);

        // mismatched lattices are rejected
        const auto lat2 = make_shared_lattice(dom, 1.0 / 32, 0.0);
        std::vector<OccupationField> bad;
        bad.push_back(occs[0]);
        bad.push_back(OccupationField{zero_field(lat2), 0.0});
        CHECK_THROWS_AS(intersection_field(bad, eps, t), input_error);
    }

    TEST_CASE("pairing reproduces mass and rejects mismatches") {
        const Domain dom = make_interval(0.0, 1.0);
        const auto lat = make_shared_lattice(dom, 1.0 / 64, 0.0);
        const OccupationField occ =
            occupation_field(sample_path(dom, point1(0.5), 0.4, 1e-3, 23, 0), lat, 0.4);
        GridField ones = zero_field(lat);
        ones.v.setOnes();
        CHECK(pair_with_test(occ, ones) == doctest::Approx(occ.total_mass).epsilon(1e-12));
        GridField zeros = zero_field(lat);
        CHECK(pair_with_test(occ, zeros) == 0.0);
        const auto lat2 = make_shared_lattice(dom, 1.0 / 32, 0.0);
        CHECK_THROWS_AS(pair_with_test(occ.field, zero_field(lat2)), input_error);
    }

    TEST_CASE("pairing is stable under lattice refinement") {
        const Domain dom = make_interval(0.0, 1.0);
        const double t = 0.5, dt = 1e-4, eps = 0.1;
        const KilledPath p1 = sample_path(dom, point1(0.5), t, dt, 41, 0);
        const KilledPath p2 = sample_path(dom, point1(0.5), t, dt, 41, 1);
        double vals[2];
        int idx = 0;
        for (const double h : {1.0 / 128, 1.0 / 256}) {
            const auto lat = make_shared_lattice(dom, h, 0.0);
            std::vector<OccupationField> occs{occupation_field(p1, lat, t),
                                              occupation_field(p2, lat, t)};
            const GridField f =
                sample_field(lat, [](const Vec& x) { return bump(x[0], 0.5, 0.35); }, false);
            vals[idx++] = pair_with_test(intersection_field(occs, eps, t), f);
        }
        CHECK(std::abs(vals[0] - vals[1]) < 0.02 * std::abs(vals[1]));
    }

    TEST_CASE("pairings form a Cauchy sequence along dyadic ball radii") {
        const Domain dom = make_whole_space(1);
        const double t = 0.3, dt = 1e-4;
        const auto lat = make_shared_lattice(dom, 1.0 / 512, 3.0);
        const KilledPath p1 = sample_path(dom, point1(0.0), t, dt, 91, 0);
        const KilledPath p2 = sample_path(dom, point1(0.0), t, dt, 91, 1);
        std::vector<OccupationField> occs{occupation_field(p1, lat, t),
                                          occupation_field(p2, lat, t)};
        const GridField f =
            sample_field(lat, [](const Vec& x) { return bump(x[0], 0.0, 1.0); }, false);
        std::vector<double> v;
        for (const double eps : {0.4, 0.2, 0.1, 0.05, 0.025})
            v.push_back(pair_with_test(intersection_field(occs, eps, t), f));
        const double g1 = std::abs(v[1] - v[0]);
        const double g2 = std::abs(v[2] - v[1]);
        const double g3 = std::abs(v[3] - v[2]);
        const double g4 = std::abs(v[4] - v[3]);
        CHECK(g2 < g1);
        CHECK(g3 < g2);
        CHECK(g4 < g3);
    }

    TEST_CASE("single-process mean pairing matches the kernel oracle") {
        // p=1: E<l_{t,eps}, f> = t * integral of (1/t) K_t-bar (T_eps f),
        // with K the time-integrated killed kernel from x0
        const Domain dom = make_interval(0.0, 1.0);
        const KernelEval ke(dom);
        const double t = 0.5, dt = 2e-4, eps = 0.05;
        const auto lat = make_shared_lattice(dom, 1.0 / 100, 0.0);
        const GridField f =
            sample_field(lat, [](const Vec& x) { return bump(x[0], 0.5, 0.4); }, false);

        const auto stats = mc_intersection_moments(dom, point1(0.5), 1, t, dt, eps,
                                                   20000, 4096, lat, f);
        // oracle: <K_t(x0, .), T_eps f> on the lattice (T_eps self-adjoint)
        const GridField tf = apply_T_eps(f, eps);
        Vec x0 = point1(0.5), y(1);
        double oracle = 0.0;
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) {
            y[0] = lat->node(i)[0];
            if (y[0] <= 0.0 || y[0] >= 1.0) continue;
            oracle += ke.time_integral(t, x0, y) * tf.v[i] * lat->cell_measure;
        }
        CHECK(std::abs(stats.moment[0] - oracle) < 3.0 * stats.std_error[0] + 2e-4);
        // second moment dominates the squared first moment
        CHECK(stats.moment[1] >= stats.moment[0] * stats.moment[0]);
    }

    TEST_CASE("field serialization round-trips") {
        const auto lat = make_shared_lattice(make_interval(0.0, 1.0), 0.25, 0.0);
        GridField f = zero_field(lat);
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) f.v[i] = 0.5 + double(i);

        write_field_csv("/tmp/iml_test_field.csv", f);
        std::ifstream csv("/tmp/iml_test_field.csv");
        std::string line;
        int rows = 0;
        while (std::getline(csv, line)) ++rows;
        CHECK(rows == int(lat->node_count) + 1);

        write_field_binary("/tmp/iml_test_field", f);
        std::ifstream bin("/tmp/iml_test_field.bin", std::ios::binary);
        std::vector<double> back(std::size_t(lat->node_count));
        bin.read(reinterpret_cast<char*>(back.data()),
                 std::streamsize(sizeof(double)) * lat->node_count);
        CHECK(bin.gcount() == std::streamsize(sizeof(double)) * lat->node_count);
        for (std::ptrdiff_t i = 0; i < lat->node_count; ++i) CHECK(back[std::size_t(i)] == f.v[i]);
        std::ifstream hdr("/tmp/iml_test_field.json");
        std::string text((std::istreambuf_iterator<char>(hdr)),
                         std::istreambuf_iterator<char>());
        CHECK(text.find("\"spacing\"") != std::string::npos);
        std::remove("/tmp/iml_test_field.csv");
        std::remove("/tmp/iml_test_field.bin");
        std::remove("/tmp/iml_test_field.json");
    }
}
