#include <doctest.h>

#include <random>

#include "cssmpc/lp.hpp"
#include "oracles.hpp"

using namespace cssmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd rows(std::initializer_list<std::initializer_list<double>> data) {
    const int m = static_cast<int>(data.size());
    const int n = static_cast<int>(data.begin()->size());
    MatrixXd out(m, n);
    int i = 0;
    for (const auto& row : data) {
        int j = 0;
        for (double v : row) out(i, j++) = v;
        ++i;
    }
    return out;
}

VectorXd vec(std::initializer_list<double> data) {
    VectorXd out(static_cast<int>(data.size()));
    int i = 0;
    for (double v : data) out[i++] = v;
    return out;
}

}  // namespace

TEST_CASE("scalar maximize") {
    auto res = lp::maximize(rows({{1.0}}), vec({3.0}), vec({1.0}));
    REQUIRE(res.status == lp::Status::Optimal);
    CHECK(res.value == doctest::Approx(3.0).epsilon(1e-10));
    REQUIRE(res.x.size() == 1);
    CHECK(res.x[0] == doctest::Approx(3.0));
}

TEST_CASE("box corner") {
    // max x + y over the unit box
    auto res = lp::maximize(rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), vec({1, 1, 1, 1}),
                            vec({1, 1}));
    REQUIRE(res.status == lp::Status::Optimal);
    CHECK(res.value == doctest::Approx(2.0));
    CHECK((res.x - vec({1, 1})).norm() < 1e-8);
}

TEST_CASE("unbounded direction") {
    auto res = lp::maximize(rows({{-1.0}}), vec({0.0}), vec({1.0}));
    CHECK(res.status == lp::Status::Unbounded);
}

TEST_CASE("infeasible rows") {
    auto res = lp::maximize(rows({{1.0}, {-1.0}}), vec({0.0, -1.0}), vec({1.0}));
    CHECK(res.status == lp::Status::Infeasible);
}

TEST_CASE("redundant rows do not disturb the optimum") {
    auto res = lp::maximize(rows({{1.0}, {1.0}, {1.0}}), vec({2.0, 5.0, 2.0}), vec({1.0}));
    REQUIRE(res.status == lp::Status::Optimal);
    CHECK(res.value == doctest::Approx(2.0));
}

TEST_CASE("random bounded LPs match vertex enumeration") {
    std::mt19937 gen(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(trial % 2);
        const int extra = 4;
        MatrixXd A(2 * n + extra, n);
        VectorXd b(2 * n + extra);
        A.setZero();
        for (int i = 0; i < n; ++i) {
            A(2 * i, i) = 1.0;
            b[2 * i] = 1.0 + std::abs(normal(gen));
            A(2 * i + 1, i) = -1.0;
            b[2 * i + 1] = 1.0 + std::abs(normal(gen));
        }
        for (int i = 0; i < extra; ++i) {
            for (int j = 0; j < n; ++j) A(2 * n + i, j) = normal(gen);
            b[2 * n + i] = 0.5 + std::abs(normal(gen));
        }
        VectorXd c(n);
        for (int j = 0; j < n; ++j) c[j] = normal(gen);

        auto res = lp::maximize(A, b, c);
        REQUIRE(res.status == lp::Status::Optimal);

        double best = -1e300;
        for (const auto& v : oracles::enumerate_vertices(A, b)) best = std::max(best, c.dot(v));
        CHECK(res.value == doctest::Approx(best).epsilon(1e-7));
    }
}

TEST_CASE("find_point") {
    auto p = lp::find_point(rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), vec({1, 1, 1, -0.5}));
    REQUIRE(p.has_value());
    CHECK((*p)[1] >= 0.5 - 1e-9);

    auto none = lp::find_point(rows({{1.0}, {-1.0}}), vec({0.0, -1.0}));
    CHECK(!none.has_value());
}
