#include <doctest.h>

#include <random>

#include "cssmpc/polytope.hpp"
#include "cssmpc/lp.hpp"
#include "oracles.hpp"

using namespace cssmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Polytope from_rows(std::initializer_list<std::initializer_list<double>> normals,
                   std::initializer_list<double> offsets) {
    const int m = static_cast<int>(normals.size());
    const int n = static_cast<int>(normals.begin()->size());
    MatrixXd A(m, n);
    VectorXd b(m);
    int i = 0;
    for (const auto& row : normals) {
        int j = 0;
        for (double v : row) A(i, j++) = v;
        ++i;
    }
    i = 0;
    for (double v : offsets) b[i++] = v;
    return Polytope(A, b);
}

bool same_set(const Polytope& p, const Polytope& q, double tol = 1e-7) {
    return is_subset(p, q, tol) && is_subset(q, p, tol);
}

VectorXd vec2(double v) { return VectorXd::Constant(2, v); }
VectorXd vec3(double v) { return VectorXd::Constant(3, v); }

SystemRealization scalar_system(double a, double b) {
    SystemRealization sys;
    sys.A = MatrixXd::Constant(1, 1, a);
    sys.B = MatrixXd::Constant(1, 1, b);
    sys.D = MatrixXd::Zero(1, 1);
    sys.r = VectorXd::Zero(1);
    return sys;
}

}  // namespace

TEST_CASE("duplicate rows merge") {
    auto p = from_rows({{1.0}, {1.0}}, {1.0, 1.0});
    CHECK(p.num_rows() == 1);
    auto r = remove_redundancy(p);
    REQUIRE(r.num_rows() == 1);
    CHECK(r.normals()(0, 0) == doctest::Approx(1.0));
    CHECK(r.offsets()[0] == doctest::Approx(1.0));
}

TEST_CASE("dominated row removed") {
    auto p = from_rows({{1.0}, {1.0}, {-1.0}}, {1.0, 2.0, 0.0});
    CHECK(p.num_rows() == 2);  // {x<=1, x<=2} merge to the tighter offset
    auto r = remove_redundancy(from_rows({{1.0}, {0.9999999999}, {-1.0}}, {1.0, 2.0, 0.0}));
    CHECK(same_set(r, Polytope::interval(0.0, 1.0)));
}

TEST_CASE("redundant rows against a box, vertex oracle") {
    std::mt19937 gen(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Polytope box = Polytope::box(vec3(-1.0 - 0.2 * trial), vec3(1.0 + 0.1 * trial));
        auto vertices = oracles::enumerate_vertices(box);
        REQUIRE(vertices.size() == 8);

        // Collect random rows strictly slack at every vertex: redundant by
        // the oracle's criterion.
        MatrixXd extra(5, 3);
        VectorXd extra_b(5);
        int found = 0;
        while (found < 5) {
            Eigen::Vector3d a(normal(gen), normal(gen), normal(gen));
            if (a.norm() < 0.3) continue;
            double support = -1e300;
            for (const auto& v : vertices) support = std::max(support, a.dot(v));
            const double offset = support + 0.05 + std::abs(normal(gen));
            extra.row(found) = a.transpose();
            extra_b[found] = offset;
            ++found;
        }
        MatrixXd all(box.num_rows() + 5, 3);
        VectorXd all_b(box.num_rows() + 5);
        all << box.normals(), extra;
        all_b << box.offsets(), extra_b;

        auto reduced = remove_redundancy(Polytope(all, all_b));
        CHECK(reduced.num_rows() == box.num_rows());
        CHECK(same_set(reduced, box));
    }
}

TEST_CASE("intersect basics") {
    auto a = Polytope::interval(-2.0, 2.0);
    auto b = Polytope::interval(0.0, 3.0);
    CHECK(same_set(intersect(a, a), a));
    CHECK(same_set(intersect(a, b), Polytope::interval(0.0, 2.0)));

    auto disjoint = intersect(Polytope::interval(-1.0, 0.0), Polytope::interval(1.0, 2.0));
    CHECK(disjoint.flagged_empty());
}

TEST_CASE("subset basics") {
    CHECK(is_subset(Polytope::interval(-1, 1), Polytope::interval(-2, 2)));
    CHECK(!is_subset(Polytope::interval(-2, 2), Polytope::interval(-1, 1)));
    CHECK(is_subset(Polytope::empty(2), Polytope::box(vec2(-1), vec2(1))));
}

TEST_CASE("contains_point basics") {
    auto box = Polytope::box(vec2(-1), vec2(1));
    CHECK(contains_point(box, Eigen::Vector2d(0, 0)));
    CHECK(!contains_point(box, Eigen::Vector2d(3, 0)));
    CHECK(contains_point(Polytope::interval(-1e30, 1.0), VectorXd::Constant(1, 1.0)));
}

TEST_CASE("projection of a separable box") {
    auto p = Polytope::box(vec2(-1), vec2(1));
    auto proj = project_eliminate(p, {0});
    CHECK(same_set(proj, Polytope::interval(-1, 1)));
}

TEST_CASE("projection pairs coupled rows") {
    // {x + v <= 2, -x - v <= 2, |v| <= 1} projected onto x -> [-3, 3]
    auto p = from_rows({{1, 1}, {-1, -1}, {0, 1}, {0, -1}}, {2, 2, 1, 1});
    auto proj = project_eliminate(p, {0});
    CHECK(same_set(proj, Polytope::interval(-3, 3)));
}

TEST_CASE("random 3-D projections match the vertex+hull oracle") {
    std::mt19937 gen(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        MatrixXd A(6 + 4, 3);
        VectorXd b(10);
        A.topRows(6) << MatrixXd::Identity(3, 3), -MatrixXd::Identity(3, 3);
        b.head(6).setConstant(1.0);
        for (int i = 6; i < 10; ++i) {
            for (int j = 0; j < 3; ++j) A(i, j) = normal(gen);
            b[i] = 0.3 + std::abs(normal(gen));
        }
        Polytope p(A, b);
        auto proj = project_eliminate(p, {0, 1});

        std::vector<Eigen::Vector2d> pts;
        for (const auto& v : oracles::enumerate_vertices(p)) pts.emplace_back(v[0], v[1]);
        REQUIRE(pts.size() >= 3);
        auto expected = oracles::hull_to_polytope(oracles::convex_hull_2d(pts));
        CHECK(same_set(proj, expected));
    }
}

TEST_CASE("projection onto all coordinates is redundancy removal") {
    auto p = from_rows({{1, 0}, {0.5, 0}, {0, 1}, {0, -1}, {-1, 0}}, {1, 2, 1, 1, 1});
    auto proj = project_eliminate(p, {0, 1});
    auto red = remove_redundancy(p);
    CHECK(proj.num_rows() == red.num_rows());
    CHECK(same_set(proj, red));
}

TEST_CASE("pre_set scalar integrator") {
    ParameterHull hull{{scalar_system(1.0, 1.0)}};
    auto pre = pre_set(Polytope::interval(-2, 2), hull, Polytope::interval(-1, 1));
    CHECK(same_set(pre, Polytope::interval(-3, 3)));
}

TEST_CASE("pre_set scalar unstable") {
    ParameterHull hull{{scalar_system(2.0, 1.0)}};
    auto pre = pre_set(Polytope::interval(-2, 2), hull, Polytope::interval(-1, 1));
    CHECK(same_set(pre, Polytope::interval(-1.5, 1.5)));
}

TEST_CASE("pre_set intersects vertex pre-sets") {
    ParameterHull hull{{scalar_system(1.0, 1.0), scalar_system(2.0, 1.0)}};
    auto pre = pre_set(Polytope::interval(-2, 2), hull, Polytope::interval(-1, 1));
    CHECK(same_set(pre, Polytope::interval(-1.5, 1.5)));
}

TEST_CASE("pre_set monotone in the target") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> uni(0.3, 2.0);
    std::normal_distribution<double> normal(0.0, 0.7);
    for (int trial = 0; trial < 20; ++trial) {
        SystemRealization sys;
        sys.A = MatrixXd(2, 2);
        sys.A << 1.0 + normal(gen) * 0.2, normal(gen) * 0.3, normal(gen) * 0.3,
            0.8 + normal(gen) * 0.2;
        sys.B = MatrixXd(2, 1);
        sys.B << 1.0, 0.5;
        sys.D = MatrixXd::Zero(2, 1);
        sys.r = VectorXd::Zero(2);
        ParameterHull hull{{sys}};

        const double small = uni(gen);
        const double big = small + uni(gen);
        auto inner = pre_set(Polytope::box(vec2(-small), vec2(small)), hull,
                             Polytope::interval(-1, 1));
        auto outer = pre_set(Polytope::box(vec2(-big), vec2(big)), hull,
                             Polytope::interval(-1, 1));
        CHECK(is_subset(inner, outer, 1e-7));
    }
}

TEST_CASE("pre_set sampling soundness") {
    // Points inside the pre-set admit a certified control for every vertex;
    // scaled-out boundary points do not.
    ParameterHull hull{{scalar_system(1.0, 1.0), scalar_system(2.0, 1.0)}};
    auto target = Polytope::interval(-2, 2);
    auto controls = Polytope::interval(-1, 1);
    auto pre = pre_set(target, hull, controls);

    auto certified = [&](double mu) {
        // One LP over v: all vertex transitions must land in the target.
        const int rows_per_vertex = target.num_rows();
        const int nv = static_cast<int>(hull.vertices.size());
        MatrixXd A(nv * rows_per_vertex + controls.num_rows(), 1);
        VectorXd b(A.rows());
        int w = 0;
        for (const auto& vert : hull.vertices) {
            for (int i = 0; i < rows_per_vertex; ++i) {
                A(w, 0) = target.normals()(i, 0) * vert.B(0, 0);
                b[w] = target.offsets()[i] -
                       target.normals()(i, 0) * (vert.A(0, 0) * mu + vert.r[0]);
                ++w;
            }
        }
        for (int i = 0; i < controls.num_rows(); ++i) {
            A(w, 0) = controls.normals()(i, 0);
            b[w] = controls.offsets()[i];
            ++w;
        }
        return lp::find_point(A, b).has_value();
    };

    std::mt19937 gen(23);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double hi = 1.5;  // known pre-set boundary
    for (int i = 0; i < 1000; ++i) {
        const double mu = hi * uni(gen);
        REQUIRE(contains_point(pre, VectorXd::Constant(1, mu), 1e-9));
        CHECK(certified(mu));
    }
    for (int i = 0; i < 1000; ++i) {
        const double sign = i % 2 == 0 ? 1.0 : -1.0;
        const double mu = sign * hi * (1.01 + 0.5 * std::abs(uni(gen)));
        CHECK(!certified(mu * (1.0 + 1e-6)));
    }
}

TEST_CASE("intersection is inside both") {
    std::mt19937 gen(29);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        MatrixXd A(6, 2);
        VectorXd b(6);
        for (int i = 0; i < 6; ++i) {
            A(i, 0) = normal(gen);
            A(i, 1) = normal(gen);
            b[i] = 0.5 + std::abs(normal(gen));
        }
        Polytope p(A.topRows(3), b.head(3));
        Polytope q(A.bottomRows(3), b.tail(3));
        auto both = intersect(p, q);
        CHECK(is_subset(both, p));
        CHECK(is_subset(both, q));
    }
}
