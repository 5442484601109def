#include "doctest.h"
#include "iml/geometry.hpp"
#include "iml/grid_field.hpp"

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

TEST_SUITE("geometry") {
    TEST_CASE("interval lattice node and interior counts") {
        const Lattice lat = make_lattice(make_interval(0.0, 1.0), 0.25);
        CHECK(lat.node_count == 5);
        int interior = 0;
        for (char c : lat.interior) interior += c;
        CHECK(interior == 3);
        CHECK(lat.cell_measure == doctest::Approx(0.25));
    }

    TEST_CASE("disk lattice interior count") {
        const Lattice lat = make_lattice(make_disk(pt2(0, 0), 1.0), 0.5);
        CHECK(lat.node_count == 25);
        int interior = 0;
        for (char c : lat.interior) interior += c;
        CHECK(interior == 9);  // all |x|<1 nodes of the 5x5 grid
    }

    TEST_CASE("whole-space lattice needs a margin and covers it") {
        CHECK_THROWS_AS(make_lattice(make_whole_space(1), 0.1), input_error);
        const Lattice lat = make_lattice(make_whole_space(1), 0.1, 5.0);
        CHECK(lat.node_count == 101);
        for (char c : lat.interior) CHECK(c == 1);
        CHECK(lat.node(0)[0] == doctest::Approx(-5.0));
        CHECK(lat.node(100)[0] == doctest::Approx(5.0));
    }

    TEST_CASE("spacing must divide the box") {
        CHECK_THROWS_AS(make_lattice(make_interval(0.0, 1.0), 0.3), input_error);
        CHECK_NOTHROW(make_lattice(make_interval(0.0, 1.0), 0.2));
    }

    TEST_CASE("membership and boundary distance") {
        const Domain hs = make_half_space(2, 0, 0.5);
        CHECK(contains(hs, pt2(0.6, -3.0)));
        CHECK(!contains(hs, pt2(0.5, 0.0)));  // boundary excluded (open set)
        CHECK(boundary_distance(hs, pt2(2.0, 7.0)) == doctest::Approx(1.5));

        const Domain box = make_box(pt2(0, 0), pt2(2, 1));
        CHECK(boundary_distance(box, pt2(0.3, 0.6)) == doctest::Approx(0.3));
        CHECK(boundary_distance(box, pt2(1.9, 0.5)) == doctest::Approx(0.1));

        const Domain disk = make_disk(pt2(1, 1), 2.0);
        CHECK(boundary_distance(disk, pt2(1, 1)) == doctest::Approx(2.0));
        CHECK(contains(disk, pt2(2.9, 1.0)));
        CHECK(!contains(disk, pt2(3.1, 1.0)));

        CHECK(boundary_distance(make_whole_space(1), pt1(3.0)) ==
              std::numeric_limits<double>::infinity());
    }

    TEST_CASE("nearest node binning") {
        const Lattice lat = make_lattice(make_interval(0.0, 1.0), 0.25);
        CHECK(lat.nearest_node(pt1(0.52)) == 2);
        CHECK(lat.nearest_node(pt1(0.13)) == 1);
        CHECK(lat.nearest_node(pt1(1.4)) == -1);
    }

    TEST_CASE("grid fields pair and measure correctly") {
        auto lat = make_shared_lattice(make_interval(0.0, 1.0), 1.0 / 256);
        const GridField one = sample_field(lat, [](const Vec&) { return 1.0; }, false);
        CHECK(integral(one) == doctest::Approx(1.0 + 1.0 / 256));  // node cells cover [..] + h
        const GridField s = sample_field(lat, [](const Vec& x) { return std::sin(M_PI * x[0]); });
        // int_0^1 sin^2(pi x) dx = 1/2 (masked boundary nodes contribute 0 anyway)
        CHECK(pair_fields(s, s) == doctest::Approx(0.5).epsilon(1e-4));
        CHECK(lp_norm(s, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
    }

    TEST_CASE("unit ball volumes") {
        CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
        CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
        CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
    }
}
