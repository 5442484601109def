#include <cmath>

#include "doctest.h"
#include "iml/heat_kernel.hpp"
#include "iml/quadrature.hpp"
#include "iml/rng.hpp"

using namespace iml;

namespace {
Vec pt1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}
Vec pt2(double x, double y) {
    Vec v(2);
    v[0] = x;
    v[1] = y;
    return v;
}
}  // namespace

TEST_SUITE("heat_kernel") {
    TEST_CASE("free kernel closed-form values") {
        CHECK(free_kernel(1, 1.0, pt1(0), pt1(0)) ==
              doctest::Approx(0.3989422804014327).epsilon(1e-12));
        CHECK(free_kernel(2, 0.5, pt2(0, 0), pt2(1, 0)) ==
              doctest::Approx(std::exp(-1.0) / M_PI).epsilon(1e-12));
        // normalization: mass 1 on the whole line
        const Quad q = composite_gl(-12.0, 12.0, 24, 12);
        CHECK(integrate(q, [](double y) { return gauss1(1.0, y); }) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("half-space kernel is one reflection") {
        const KernelEval ke(make_half_space(1, 0, 0.0));
        CHECK(ke(1.0, pt1(1), pt1(1)) == doctest::Approx(0.3449513).epsilon(1e-6));
        CHECK(ke(1.0, pt1(1), pt1(1)) ==
              doctest::Approx(gauss1(1.0, 0.0) - gauss1(1.0, 2.0)).epsilon(1e-14));
        // vanishes at the wall
        CHECK(ke(1.0, pt1(0.0), pt1(1)) == 0.0);
        CHECK(ke(0.5, pt1(1e-8), pt1(0.7)) < 1e-6);
    }

    TEST_CASE("interval kernel: images and eigen representations agree") {
        const double vals_t[] = {0.05, 0.2, 1.0, 3.0};
        CounterRng rng(7, 0);
        for (double t : vals_t) {
            for (int i = 0; i < 20; ++i) {
                const double x = rng.u01(std::uint64_t(i), 0);
                const double y = rng.u01(std::uint64_t(i), 1);
                const double a = interval_kernel_images(0.0, 1.0, t, x, y);
                const double b = interval_kernel_eigen(0.0, 1.0, t, x, y);
                CHECK(std::abs(a - b) < 1e-10);
            }
        }
        CHECK(interval_kernel_eigen(0.0, 1.0, 1.0, 0.5, 0.5) ==
              doctest::Approx(0.0143837).epsilon(2e-5));
        // frozen against 2*(exp(-pi^2/2) + exp(-9 pi^2/2))
        const double exact = 2.0 * (std::exp(-0.5 * M_PI * M_PI) + std::exp(-4.5 * M_PI * M_PI));
        CHECK(interval_kernel_images(0.0, 1.0, 1.0, 0.5, 0.5) ==
              doctest::Approx(exact).epsilon(1e-12));
    }

    TEST_CASE("killed kernels are dominated by the free kernel") {
        const KernelEval box(make_box(pt2(0, 0), pt2(1, 2)));
        const KernelEval disk(make_disk(pt2(0, 0), 1.0));
        CounterRng rng(11, 0);
        for (int i = 0; i < 2000; ++i) {
            const double t = 0.05 + 1.95 * rng.u01(std::uint64_t(i), 0);
            const Vec x = pt2(rng.u01(std::uint64_t(i), 1), 2.0 * rng.u01(std::uint64_t(i), 2));
            const Vec y = pt2(rng.u01(std::uint64_t(i), 3), 2.0 * rng.u01(std::uint64_t(i), 4));
            const double kb = box(t, x, y);
            CHECK(kb <= free_kernel(2, t, x, y) + 1e-12);
            CHECK(kb >= -1e-12);
            const Vec xd = 0.999 * (x - pt2(0.5, 1.0));
            const Vec yd = 0.999 * (y - pt2(0.5, 1.0));
            const double kd = disk(t, xd, yd);
            CHECK(kd <= free_kernel(2, t, xd, yd) + 1e-10);
        }
    }

    TEST_CASE("Chapman-Kolmogorov residuals are tiny") {
        const KernelEval interval(make_interval(0.0, 1.0));
        CHECK(ck_residual(interval, 0.3, 0.4, pt1(0.25), pt1(0.7)) < 1e-10);
        const KernelEval half(make_half_space(2, 0, 0.0));
        CHECK(ck_residual(half, 0.2, 0.3, pt2(0.5, 0.0), pt2(1.5, 1.0)) < 1e-9);
        const KernelEval whole(make_whole_space(1));
        CHECK(ck_residual(whole, 0.5, 0.5, pt1(-1), pt1(1)) < 1e-12);
        const KernelEval disk(make_disk(pt2(0, 0), 1.0));
        CHECK(ck_residual(disk, 0.2, 0.3, pt2(0.3, 0.1), pt2(-0.2, 0.4)) < 1e-7);
    }

    TEST_CASE("disk kernel symmetry and rotation invariance") {
        const KernelEval disk(make_disk(pt2(0, 0), 1.0));
        const double a = disk(0.4, pt2(0.3, 0.2), pt2(-0.1, 0.5));
        const double b = disk(0.4, pt2(-0.1, 0.5), pt2(0.3, 0.2));
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        // rotate both points by 90 degrees
        const double c = disk(0.4, pt2(-0.2, 0.3), pt2(-0.5, -0.1));
        CHECK(a == doctest::Approx(c).epsilon(1e-11));
        CHECK(a > 0.0);
    }

    TEST_CASE("sub-Markov mass and interval survival value") {
        const KernelEval interval(make_interval(0.0, 1.0));
        // sum_{n odd} (4/(n pi)) sin(n pi/2) exp(-n^2 pi^2/2) = 0.009156609...
        CHECK(kernel_mass(interval, 1.0, pt1(0.5)) ==
              doctest::Approx(0.00915661).epsilon(1e-5));
        CHECK(kernel_mass(interval, 0.1, pt1(0.5)) < 1.0);
        const KernelEval disk(make_disk(pt2(0, 0), 1.0));
        const double m = kernel_mass(disk, 0.3, pt2(0.2, 0.1));
        CHECK(m < 1.0);
        CHECK(m > 0.0);
    }

    TEST_CASE("time integral: closed form matches quadrature and exact value") {
        // H_t(x0,x0) on the whole line at t=1 equals sqrt(2/pi)
        const KernelEval whole(make_whole_space(1));
        CHECK(whole.time_integral(1.0, pt1(0), pt1(0)) ==
              doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
        // generic u: compare closed-form F to direct graded quadrature
        for (double u : {0.1, 0.7, 2.0}) {
            const Quad g = graded_gl(0.0, 1.0, 40, 14, true, false);
            const double direct =
                integrate(g, [&](double v) { return 2.0 * v * gauss1(v * v, u); });
            CHECK(gauss1_time_integral(1.0, u) == doctest::Approx(direct).epsilon(1e-10));
        }
        // interval: integral of the kernel over time, cross-checked by quadrature
        const KernelEval interval(make_interval(0.0, 1.0));
        const Quad g = graded_gl(0.0, 1.0, 40, 14, true, false);
        const double direct = integrate(g, [&](double v) {
            return 2.0 * 0.5 * v * interval_kernel_images(0, 1, 0.5 * v * v, 0.3, 0.6);
        });
        CHECK(interval.time_integral(0.5, pt1(0.3), pt1(0.6)) ==
              doctest::Approx(direct).epsilon(1e-10));
    }

    TEST_CASE("resolvent closed forms") {
        const KernelEval whole(make_whole_space(1));
        CHECK(whole.resolvent(pt1(3), pt1(3)) ==
              doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        // oracle value e^{-sqrt2}/sqrt2 = 0.17190934... (closed form)
        CHECK(whole.resolvent(pt1(0), pt1(1)) == doctest::Approx(0.1719093).epsilon(1e-6));
        const KernelEval half(make_half_space(1, 0, 0.0));
        CHECK(half.resolvent(pt1(1), pt1(1)) ==
              doctest::Approx((1.0 - std::exp(-2.0 * std::sqrt(2.0))) / std::sqrt(2.0))
                  .epsilon(1e-12));
        // interval resolvent: images closed form vs direct time quadrature
        const KernelEval interval(make_interval(0.0, 1.0));
        const Quad tail = graded_gl(0.0, 45.0, 40, 14, true, false);
        const double direct = integrate(tail, [&](double s) {
            return std::exp(-s) * interval_kernel_images(0, 1, s, 0.4, 0.7);
        });
        CHECK(interval.resolvent(pt1(0.4), pt1(0.7)) == doctest::Approx(direct).epsilon(1e-9));
    }

    TEST_CASE("whole-space resolvent in d=2,3") {
        const KernelEval w2(make_whole_space(2));
        CHECK(w2.resolvent(pt2(0, 0), pt2(1, 0)) ==
              doctest::Approx(std::cyl_bessel_k(0.0, std::sqrt(2.0)) / M_PI).epsilon(1e-13));
        CHECK(std::isinf(w2.resolvent(pt2(0, 0), pt2(0, 0))));
        // d=3 closed form at r=0.5
        const KernelEval w3(make_whole_space(3));
        Vec a(3), b(3);
        a.setZero();
        b.setZero();
        b[0] = 0.5;
        CHECK(w3.resolvent(a, b) ==
              doctest::Approx(std::exp(-std::sqrt(2.0) * 0.5) / (2.0 * M_PI * 0.5))
                  .epsilon(1e-13));
    }

    TEST_CASE("boundary decay and continuity") {
        const KernelEval interval(make_interval(0.0, 1.0));
        double prev = interval(0.5, pt1(0.4), pt1(0.5));
        for (double x : {0.2, 0.05, 0.01, 0.001}) {
            const double v = interval(0.5, pt1(x), pt1(0.5));
            CHECK(v < prev);
            prev = v;
        }
        CHECK(prev < 1e-2);
        // small perturbations move the value smoothly
        const double base = interval(0.5, pt1(0.3), pt1(0.6));
        CHECK(std::abs(interval(0.5, pt1(0.3 + 1e-7), pt1(0.6)) - base) < 1e-5);
    }

    TEST_CASE("bad inputs are rejected") {
        const KernelEval interval(make_interval(0.0, 1.0));
        CHECK_THROWS_AS(interval(0.0, pt1(0.5), pt1(0.5)), input_error);
        CHECK_THROWS_AS(interval(-1.0, pt1(0.5), pt1(0.5)), input_error);
        CHECK_THROWS_AS(interval(1.0, pt2(0.5, 0.5), pt2(0.5, 0.5)), input_error);
        CHECK(interval(1.0, pt1(-0.5), pt1(0.5)) == 0.0);  // outside -> dead
        const KernelEval disk(make_disk(pt2(0, 0), 1.0));
        CHECK_THROWS_AS(disk(1e-4, pt2(0, 0), pt2(0.1, 0)), accuracy_error);
    }
}
