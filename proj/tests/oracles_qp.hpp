#pragma once

// Brute-force QP oracle: minimize 0.5 x'Hx + g'x + c0 subject to Cx <= d
// with H PD, by enumerating active subsets of size <= dim(x). Every
// candidate produced is feasible, so the minimum over candidates is the
// global optimum (the true active set is among the subsets). Intended for
// small test problems only.

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

struct QpSolution {
    Eigen::VectorXd x;
    double value = 0.0;
};

inline std::optional<QpSolution> qp_enumerate(const Eigen::MatrixXd& H,
                                              const Eigen::VectorXd& g, double c0,
                                              const Eigen::MatrixXd& C,
                                              const Eigen::VectorXd& d,
                                              double feas_tol = 1e-8) {
    const int n = static_cast<int>(H.rows());
    const int m = static_cast<int>(C.rows());
    std::optional<QpSolution> best;

    auto value_at = [&](const Eigen::VectorXd& x) {
        return 0.5 * x.dot(H * x) + g.dot(x) + c0;
    };
    auto consider = [&](const Eigen::VectorXd& x) {
        if (m > 0 && ((C * x - d).array() > feas_tol).any()) return;
        const double v = value_at(x);
        if (!best || v < best->value) best = QpSolution{x, v};
    };

    std::vector<int> subset;
    std::function<void(int)> rec = [&](int start) {
        {
            const int k = static_cast<int>(subset.size());
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
            kkt.topLeftCorner(n, n) = H;
            Eigen::VectorXd rhs(n + k);
            rhs.head(n) = -g;
            for (int i = 0; i < k; ++i) {
                kkt.block(n + i, 0, 1, n) = C.row(subset[i]);
                kkt.block(0, n + i, n, 1) = C.row(subset[i]).transpose();
                rhs[n + i] = d[subset[i]];
            }
            Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            consider(sol.head(n));
        }
        if (static_cast<int>(subset.size()) == n) return;
        for (int i = start; i < m; ++i) {
            subset.push_back(i);
            rec(i + 1);
            subset.pop_back();
        }
    };
    rec(0);
    return best;
}

}  // namespace oracles
