#include <doctest.h>

#include <random>

#include "cssmpc/conic.hpp"
#include "cssmpc/lp.hpp"

using namespace cssmpc;
using namespace cssmpc::conic;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("dump/parse round trip is bitwise") {
    ConicProgram p(3);
    VectorXd c(3);
    c << 1.0 / 3.0, -2.7182818284590452, 0.1;
    p.set_objective(c);
    MatrixXd F(2, 3);
    F << 0.3333333333333333, 1e-17, -5.5, 2.0, 0.0, 1.0;
    VectorXd g(2);
    g << -1.0, 0.25;
    p.add_nonnegative(F, g);
    MatrixXd S(3, 3);
    S << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    VectorXd s0(3);
    s0 << 0.1, -0.2, 0.3;
    p.add_psd(S, s0, 2);

    auto q = ConicProgram::parse(p.dump());
    CHECK(q.dump() == p.dump());
    REQUIRE(q.blocks().size() == p.blocks().size());
    for (size_t i = 0; i < q.blocks().size(); ++i) {
        CHECK(q.blocks()[i].coeffs == p.blocks()[i].coeffs);
        CHECK(q.blocks()[i].constants == p.blocks()[i].constants);
    }
    CHECK(q.objective() == p.objective());
}

TEST_CASE("svec is an isometry") {
    std::mt19937 gen(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + trial % 6;
        MatrixXd m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = normal(gen);
        MatrixXd sym = symmetrize(m);
        CHECK(std::abs(svec(sym).norm() - sym.norm()) < 1e-12 * std::max(1.0, sym.norm()));
        CHECK((smat(svec(sym), d) - sym).norm() < 1e-14);
    }
}

TEST_CASE("adapter conformance: LP") {
    ConicProgram p(1);
    p.set_objective(VectorXd::Ones(1));
    p.add_nonnegative(MatrixXd::Ones(1, 1), VectorXd::Constant(1, -1.0));  // x - 1 >= 0
    auto out = solve(p);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(out.objective == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(out.primal[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("adapter conformance: SOC") {
    // min t s.t. ||(3,4)|| <= t
    ConicProgram p(1);
    p.set_objective(VectorXd::Ones(1));
    MatrixXd F(3, 1);
    F << 1, 0, 0;
    VectorXd g(3);
    g << 0, 3, 4;
    p.add_second_order(F, g);
    auto out = solve(p);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(out.objective == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("adapter conformance: SDP") {
    // min tr(X) s.t. X >= I_2, vars = svec(X)
    ConicProgram p(3);
    VectorXd c(3);
    c << 1.0, 0.0, 1.0;
    p.set_objective(c);
    MatrixXd F = MatrixXd::Identity(3, 3);
    VectorXd g = -svec(MatrixXd::Identity(2, 2));
    p.add_psd(F, g, 2);
    auto out = solve(p);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(out.objective == doctest::Approx(2.0).epsilon(1e-7));
    MatrixXd X = smat(out.primal, 2);
    CHECK(min_eigenvalue(X - MatrixXd::Identity(2, 2)) > -1e-7);
}

TEST_CASE("adapter conformance: infeasible LP") {
    ConicProgram p(1);
    p.set_objective(VectorXd::Ones(1));
    MatrixXd F(2, 1);
    F << 1.0, -1.0;  // x - 1 >= 0 and -x >= 0
    VectorXd g(2);
    g << -1.0, 0.0;
    p.add_nonnegative(F, g);
    auto out = solve(p);
    CHECK(out.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded LP") {
    ConicProgram p(1);
    VectorXd c(1);
    c << -1.0;
    p.set_objective(c);
    p.add_nonnegative(MatrixXd::Ones(1, 1), VectorXd::Zero(1));  // x >= 0
    auto out = solve(p);
    CHECK(out.status == SolveStatus::Unbounded);
}

TEST_CASE("zero cone equalities") {
    // min t s.t. ||x - p|| <= t, a'x = d: distance from p to the hyperplane.
    Eigen::Vector2d point(1.0, 2.0);
    Eigen::Vector2d a(1.0, 1.0);
    const double d = 0.0;
    ConicProgram prog(3);  // vars: x (2), t
    VectorXd c = VectorXd::Zero(3);
    c[2] = 1.0;
    prog.set_objective(c);
    MatrixXd eq(1, 3);
    eq << a[0], a[1], 0.0;
    prog.add_zero(eq, VectorXd::Constant(1, -d));
    MatrixXd soc(3, 3);
    soc << 0, 0, 1, 1, 0, 0, 0, 1, 0;
    VectorXd g(3);
    g << 0, -point[0], -point[1];
    prog.add_second_order(soc, g);
    auto out = solve(prog);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(out.objective ==
          doctest::Approx(std::abs(a.dot(point) - d) / a.norm()).epsilon(1e-7));
}

TEST_CASE("random LPs agree with the simplex") {
    std::mt19937 gen(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + trial % 3;
        const int extra = 5;
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

        // Conic form: minimize c'x with b - Ax >= 0.
        ConicProgram prog(n);
        prog.set_objective(c);
        prog.add_nonnegative(-A, b);
        auto out = solve(prog);
        REQUIRE(out.status == SolveStatus::Optimal);

        auto ref = cssmpc::lp::maximize(A, b, VectorXd(-c));
        REQUIRE(ref.status == cssmpc::lp::Status::Optimal);
        CHECK(out.objective == doctest::Approx(-ref.value).epsilon(1e-7));
    }
}

TEST_CASE("min trace above a random symmetric floor") {
    std::mt19937 gen(41);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 2 + trial % 3;
        MatrixXd raw(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) raw(i, j) = normal(gen);
        MatrixXd floor = symmetrize(raw);

        const int nv = svec_size(d);
        ConicProgram prog(nv);
        VectorXd c = svec(MatrixXd::Identity(d, d));  // svec inner product = trace
        prog.set_objective(c);
        prog.add_psd(MatrixXd::Identity(nv, nv), -svec(floor), d);
        auto out = solve(prog);
        REQUIRE(out.status == SolveStatus::Optimal);
        CHECK(out.objective == doctest::Approx(floor.trace()).epsilon(1e-6));
    }
}
