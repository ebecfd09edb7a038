#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check: vertex enumeration for low-dimensional polytopes, a planar convex
// hull, and an erf-series normal CDF with bisection inversion.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cssmpc/polytope.hpp"

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// All vertices of {x : A x <= b} by enumerating row subsets (dims <= 4).
inline std::vector<VectorXd> enumerate_vertices(const MatrixXd& A, const VectorXd& b,
                                                double feas_tol = 1e-7) {
    const int n = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    std::vector<VectorXd> vertices;
    std::vector<int> combo(n);

    auto consider = [&](const std::vector<int>& rows) {
        MatrixXd S(n, n);
        VectorXd rhs(n);
        for (int i = 0; i < n; ++i) {
            S.row(i) = A.row(rows[i]);
            rhs[i] = b[rows[i]];
        }
        Eigen::FullPivLU<MatrixXd> lu(S);
        if (!lu.isInvertible()) return;
        VectorXd x = lu.solve(rhs);
        if (((A * x - b).array() > feas_tol).any()) return;
        for (const auto& v : vertices)
            if ((v - x).norm() < 1e-6) return;
        vertices.push_back(x);
    };

    // Iterate over all n-subsets of rows.
    std::vector<int> stack;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(stack.size()) == n) {
            consider(stack);
            return;
        }
        for (int i = start; i < m; ++i) {
            stack.push_back(i);
            rec(i + 1);
            stack.pop_back();
        }
    };
    rec(0);
    return vertices;
}

inline std::vector<VectorXd> enumerate_vertices(const cssmpc::Polytope& p,
                                                double feas_tol = 1e-7) {
    return enumerate_vertices(p.normals(), p.offsets(), feas_tol);
}

// Monotone-chain convex hull of 2-D points, counter-clockwise.
inline std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return (a - b).norm() < 1e-9; }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n < 3) return pts;
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                    const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
        hull[k++] = pts[i];
    }
    for (int i = n - 2, t = k + 1; i >= 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Halfspace representation of a CCW 2-D hull.
inline cssmpc::Polytope hull_to_polytope(const std::vector<Eigen::Vector2d>& hull) {
    const int n = static_cast<int>(hull.size());
    MatrixXd A(n, 2);
    VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d p = hull[i];
        const Eigen::Vector2d q = hull[(i + 1) % n];
        const Eigen::Vector2d edge = q - p;
        Eigen::Vector2d normal(edge.y(), -edge.x());  // outward for CCW order
        A.row(i) = normal.transpose();
        b[i] = normal.dot(p);
    }
    return cssmpc::Polytope(A, b);
}

// erf via its Maclaurin series; adequate for |x| <= 4.
inline double erf_series(double x) {
    const double z = x;
    double term = z;
    double sum = z;
    for (int n = 1; n < 120; ++n) {
        term *= -z * z / n;
        sum += term / (2 * n + 1);
        if (std::abs(term) < 1e-18) break;
    }
    return sum * 2.0 / std::sqrt(M_PI);
}

inline double normal_cdf_series(double x) { return 0.5 * (1.0 + erf_series(x * M_SQRT1_2)); }

// Bisection inverse of the series CDF.
inline double quantile_bisect(double q, double tol = 1e-12) {
    double lo = -6.0, hi = 6.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf_series(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracles
