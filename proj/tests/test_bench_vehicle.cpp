#include <doctest.h>

#include "cssmpc/bench_vehicle.hpp"

using namespace cssmpc;
using namespace cssmpc::bench_vehicle;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("linearization entries") {
    VehicleParams params;  // lf = lr = 2.4, dt = 0.1, thetas = 0.1

    SUBCASE("straight road has no drift") {
        auto sys = linearize(params, 7.0, 0.0);
        CHECK(sys.r.norm() == 0.0);
    }
    SUBCASE("slow-speed entries") {
        auto sys = linearize(params, 1.0, 0.0);
        CHECK(sys.A(1, 0) == doctest::Approx(0.1 / 4.8).epsilon(1e-12));
        CHECK(sys.B(1, 0) == doctest::Approx(0.05).epsilon(1e-12));
        CHECK(sys.A(2, 1) == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("noise block") {
        auto sys = linearize(params, 3.0, 0.01);
        CHECK((sys.D - 0.01 * MatrixXd::Identity(3, 3)).norm() == 0.0);
    }
    SUBCASE("drift is -rho nu dt on the heading row") {
        auto sys = linearize(params, 10.0, 0.02);
        CHECK(sys.r[0] == 0.0);
        CHECK(sys.r[1] == doctest::Approx(-0.02 * 10.0 * 0.1));
        CHECK(sys.r[2] == 0.0);
    }
}

TEST_CASE("linearization is affine in speed and curvature") {
    VehicleParams params;
    auto collinear = [](double a, double b, double c) {
        return std::abs((b - a) - (c - b)) < 1e-12;
    };
    // A entries along nu at fixed rho.
    auto s1 = linearize(params, 2.0, 0.01);
    auto s2 = linearize(params, 4.0, 0.01);
    auto s3 = linearize(params, 6.0, 0.01);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(collinear(s1.A(i, j), s2.A(i, j), s3.A(i, j)));
    CHECK(collinear(s1.r[1], s2.r[1], s3.r[1]));
    // r along rho at fixed nu.
    auto r1 = linearize(params, 5.0, -0.02);
    auto r2 = linearize(params, 5.0, 0.0);
    auto r3 = linearize(params, 5.0, 0.02);
    CHECK(collinear(r1.r[1], r2.r[1], r3.r[1]));
}

TEST_CASE("hull construction") {
    VehicleParams params;
    SUBCASE("four corners") {
        auto hull = build_hull(params, {1.0, 20.0}, {-0.025, 0.025});
        CHECK(hull.vertices.size() == 4);
        hull.check_shapes();
    }
    SUBCASE("degenerate bounds collapse to one realization") {
        auto hull = build_hull(params, {5.0, 5.0}, {0.01, 0.01});
        CHECK(hull.vertices.size() == 4);
        for (const auto& v : hull.vertices) {
            CHECK((v.A - hull.vertices[0].A).norm() == 0.0);
            CHECK((v.r - hull.vertices[0].r).norm() == 0.0);
        }
    }
}

TEST_CASE("hull membership") {
    VehicleParams params;
    auto hull = build_hull(params, {1.0, 20.0}, {-0.025, 0.025});

    SUBCASE("corner-valued speeds are members") {
        CHECK(hull_membership(hull, linearize(params, 1.0, -0.025)));
        CHECK(hull_membership(hull, linearize(params, 20.0, 0.025)));
        CHECK(hull_membership(hull, linearize(params, 1.0, 0.013)));
    }
    SUBCASE("interior speed on a straight road is a member") {
        // With rho = 0 the bilinear drift vanishes and symmetric curvature
        // weights cancel it.
        CHECK(hull_membership(hull, linearize(params, 10.5, 0.0)));
    }
    SUBCASE("interior speed-curvature pairs fail in general") {
        CHECK(!hull_membership(hull, linearize(params, 10.5, 0.02)));
    }
    SUBCASE("A and B blocks alone are always covered") {
        // Membership restricted to the speed-affine blocks.
        auto probe = linearize(params, 13.7, 0.0);
        ParameterHull ab_hull = hull;
        for (auto& v : ab_hull.vertices) v.r.setZero();
        auto ab_probe = probe;
        ab_probe.r.setZero();
        CHECK(hull_membership(ab_hull, ab_probe));
    }
}

TEST_CASE("scenario defaults reproduce the benchmark block") {
    VehicleParams params;
    auto profile = default_profile(60, 4);
    auto scenario = build_scenario(params, profile, 60);

    CHECK(scenario.horizon == 4);
    CHECK(scenario.trial_length == 60);
    CHECK(scenario.chance.state_rows.size() == 6);
    CHECK(scenario.chance.control_rows.size() == 2);
    for (const auto& row : scenario.chance.state_rows) CHECK(row.risk == 0.025);
    for (const auto& row : scenario.chance.control_rows) CHECK(row.risk == 0.05);
    CHECK(scenario.cost.Q == MatrixXd::Identity(3, 3));
    CHECK(scenario.cost.R(0, 0) == 100.0);
    CHECK(scenario.cost.goal.norm() == 0.0);
    CHECK(scenario.x0.norm() == 0.0);

    // Constraint box: |delta|, |e_psi| <= pi/4, |e_y| <= 2, |u| <= 1.
    VectorXd probe(3);
    probe << M_PI / 4 - 1e-9, -M_PI / 4 + 1e-9, 1.999;
    CHECK(contains_point(scenario.state_set, probe));
    probe[2] = 2.001;
    CHECK(!contains_point(scenario.state_set, probe));
    CHECK(contains_point(scenario.control_set, VectorXd::Constant(1, 0.999)));
    CHECK(!contains_point(scenario.control_set, VectorXd::Constant(1, 1.001)));

    SUBCASE("profile respects hull bounds") {
        profile.check_bounds({1.0, 20.0}, {-0.025, 0.025});
        CHECK(profile.length() >= 63);
    }
    SUBCASE("out-of-bounds profile is rejected") {
        ReferenceProfile bad = profile;
        bad.nu[3] = 25.0;
        CHECK_THROWS(build_scenario(params, bad, 60));
    }
}

TEST_CASE("nominal hull sits at the schedule means") {
    VehicleParams params;
    auto profile = default_profile(20, 4);
    auto hull = nominal_hull(params, profile);
    REQUIRE(hull.vertices.size() == 1);
    double mean_nu = 0.0;
    for (double v : profile.nu) mean_nu += v;
    mean_nu /= profile.nu.size();
    CHECK(hull.vertices[0].A(1, 0) == doctest::Approx(mean_nu * 0.1 / 4.8));
}
