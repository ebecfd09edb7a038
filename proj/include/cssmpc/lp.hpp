#pragma once

#include <Eigen/Dense>
#include <optional>

namespace cssmpc::lp {

enum class Status { Optimal, Unbounded, Infeasible, Error };

struct Result {
    Status status = Status::Error;
    double value = 0.0;   // optimal objective, valid when status == Optimal
    Eigen::VectorXd x;    // a maximizer; may be empty if recovery failed
};

/// max c'x subject to A x <= b, x free.
///
/// Solved as the equality-form dual (min b'y, A'y = c, y >= 0) with a
/// revised simplex, so the basis stays dim(x)-sized no matter how many
/// rows A has. The caller is expected to know the primal is feasible;
/// a dual-unbounded outcome is reported as Infeasible.
Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                const Eigen::VectorXd& c);

/// A point satisfying A x <= b + 1e-9, or nullopt if none exists.
std::optional<Eigen::VectorXd> find_point(const Eigen::MatrixXd& A,
                                          const Eigen::VectorXd& b);

}  // namespace cssmpc::lp
