#include "cssmpc/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace cssmpc::lp {
namespace {

constexpr double kPivotTol = 1e-10;

struct EqualityFormOutcome {
    enum class Kind { Optimal, Unbounded, Infeasible, Error } kind;
    std::vector<int> basis;  // basic column indices, one per active row
    double value = 0.0;
};

bool is_basic(const std::vector<int>& basis, int j) {
    for (int b : basis)
        if (b == j) return true;
    return false;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& w, const std::vector<int>& basis) {
    Eigen::MatrixXd out(w.rows(), basis.size());
    for (size_t i = 0; i < basis.size(); ++i) out.col(i) = w.col(basis[i]);
    return out;
}

void erase_row(Eigen::MatrixXd& m, int r) {
    const int n = static_cast<int>(m.rows());
    for (int i = r; i + 1 < n; ++i) m.row(i) = m.row(i + 1);
    m.conservativeResize(n - 1, Eigen::NoChange);
}

void erase_entry(Eigen::VectorXd& v, int r) {
    const int n = static_cast<int>(v.size());
    for (int i = r; i + 1 < n; ++i) v[i] = v[i + 1];
    v.conservativeResize(n - 1);
}

// Core revised-simplex loop (minimization) for: min cost'y, W y = rhs, y >= 0.
// Columns with index >= allowed_cols never enter the basis.
EqualityFormOutcome iterate(const Eigen::MatrixXd& w, const Eigen::VectorXd& rhs,
                            const Eigen::VectorXd& cost, std::vector<int>& basis,
                            int allowed_cols) {
    const int n = static_cast<int>(w.rows());
    const int max_iter = 50 * (static_cast<int>(w.cols()) + n) + 1000;
    const double opt_tol = 1e-9 * (1.0 + cost.cwiseAbs().maxCoeff());
    const int bland_after = max_iter / 2;

    EqualityFormOutcome out;
    out.kind = EqualityFormOutcome::Kind::Error;
    if (n == 0) {
        out.kind = EqualityFormOutcome::Kind::Optimal;
        out.value = 0.0;
        return out;
    }

    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::MatrixXd bmat = columns(w, basis);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        Eigen::VectorXd yb = lu.solve(rhs);

        Eigen::VectorXd gb(n);
        for (int i = 0; i < n; ++i) gb[i] = cost[basis[i]];
        Eigen::VectorXd pi = lu.adjoint().solve(gb);

        const bool bland = iter >= bland_after;
        int entering = -1;
        double best = -opt_tol;
        for (int j = 0; j < allowed_cols; ++j) {
            if (is_basic(basis, j)) continue;
            const double r = cost[j] - pi.dot(w.col(j));
            if (bland) {
                if (r < -opt_tol) {
                    entering = j;
                    break;
                }
            } else if (r < best) {
                best = r;
                entering = j;
            }
        }
        if (entering < 0) {
            out.kind = EqualityFormOutcome::Kind::Optimal;
            out.basis = basis;
            out.value = gb.dot(yb);
            return out;
        }

        Eigen::VectorXd d = lu.solve(w.col(entering));
        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (d[i] > kPivotTol) {
                const double ratio = std::max(yb[i], 0.0) / d[i];
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && leaving >= 0 && basis[i] < basis[leaving])) {
                    best_ratio = ratio;
                    leaving = i;
                }
            }
        }
        if (leaving < 0) {
            out.kind = EqualityFormOutcome::Kind::Unbounded;
            return out;
        }
        basis[leaving] = entering;
    }
    return out;  // iteration cap hit
}

// min cost'y s.t. W y = rhs, y >= 0, via two-phase revised simplex.
EqualityFormOutcome solve_equality_form(Eigen::MatrixXd w, Eigen::VectorXd rhs,
                                        const Eigen::VectorXd& cost) {
    const int n = static_cast<int>(w.rows());
    const int m = static_cast<int>(w.cols());

    // Phase 1: artificial columns diag(sign(rhs)), unit cost.
    Eigen::MatrixXd ext(n, m + n);
    ext.leftCols(m) = w;
    ext.rightCols(n).setZero();
    for (int i = 0; i < n; ++i) ext(i, m + i) = rhs[i] >= 0.0 ? 1.0 : -1.0;
    Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(m + n);
    cost1.tail(n).setOnes();

    std::vector<int> basis(n);
    for (int i = 0; i < n; ++i) basis[i] = m + i;

    auto phase1 = iterate(ext, rhs, cost1, basis, m + n);
    if (phase1.kind == EqualityFormOutcome::Kind::Error) return phase1;
    if (phase1.kind == EqualityFormOutcome::Kind::Unbounded ||
        phase1.value > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
        phase1.kind = EqualityFormOutcome::Kind::Infeasible;
        return phase1;
    }

    // Pivot basic artificials out; a pivot row with no usable original
    // column marks a dependent equality, which is dropped.
    for (int p = static_cast<int>(basis.size()) - 1; p >= 0; --p) {
        if (basis[p] < m) continue;
        Eigen::MatrixXd bmat = columns(ext, basis);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        bool pivoted = false;
        for (int j = 0; j < m && !pivoted; ++j) {
            if (is_basic(basis, j)) continue;
            Eigen::VectorXd d = lu.solve(ext.col(j));
            if (std::abs(d[p]) > 1e-8) {
                basis[p] = j;
                pivoted = true;
            }
        }
        if (!pivoted) {
            erase_row(ext, p);
            erase_row(w, p);
            erase_entry(rhs, p);
            basis.erase(basis.begin() + p);
        }
    }

    return iterate(w, rhs, cost, basis, m);
}

}  // namespace

Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                const Eigen::VectorXd& c) {
    Result res;
    const int n = static_cast<int>(A.cols());

    auto out = solve_equality_form(A.transpose(), c, b);

    switch (out.kind) {
        case EqualityFormOutcome::Kind::Infeasible:
            res.status = Status::Unbounded;  // dual infeasible, primal assumed feasible
            return res;
        case EqualityFormOutcome::Kind::Unbounded:
            res.status = Status::Infeasible;  // dual unbounded => primal empty
            return res;
        case EqualityFormOutcome::Kind::Error:
            res.status = Status::Error;
            return res;
        case EqualityFormOutcome::Kind::Optimal:
            break;
    }

    res.status = Status::Optimal;
    res.value = out.value;

    // Recover a primal point from the tight rows of the optimal dual basis.
    const int nb = static_cast<int>(out.basis.size());
    Eigen::MatrixXd tight(nb, n);
    Eigen::VectorXd tight_b(nb);
    for (int i = 0; i < nb; ++i) {
        tight.row(i) = A.row(out.basis[i]);
        tight_b[i] = b[out.basis[i]];
    }
    Eigen::VectorXd x = tight.completeOrthogonalDecomposition().solve(tight_b);
    const double scale = 1.0 + b.cwiseAbs().maxCoeff() + x.cwiseAbs().maxCoeff();
    const bool feasible = A.rows() == 0 || ((A * x - b).maxCoeff() <= 1e-6 * scale);
    const bool value_ok = std::abs(c.dot(x) - out.value) <= 1e-6 * (1.0 + std::abs(out.value));
    if (feasible && value_ok) res.x = x;
    return res;
}

std::optional<Eigen::VectorXd> find_point(const Eigen::MatrixXd& A,
                                          const Eigen::VectorXd& b) {
    const int n = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    if (m == 0) return Eigen::VectorXd::Zero(n);

    // max -t subject to A x - 1 t <= b and -t <= 1; always solvable.
    Eigen::MatrixXd ext(m + 1, n + 1);
    ext.topLeftCorner(m, n) = A;
    ext.topRightCorner(m, 1).setConstant(-1.0);
    ext.bottomLeftCorner(1, n).setZero();
    ext(m, n) = -1.0;
    Eigen::VectorXd ext_b(m + 1);
    ext_b.head(m) = b;
    ext_b[m] = 1.0;
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(n + 1);
    obj[n] = -1.0;

    auto res = maximize(ext, ext_b, obj);
    if (res.status != Status::Optimal || res.value < -1e-9) return std::nullopt;
    if (res.x.size() == 0) return std::nullopt;
    Eigen::VectorXd x = res.x.head(n);
    if (((A * x).array() - b.array()).maxCoeff() > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff()))
        return std::nullopt;
    return x;
}

}  // namespace cssmpc::lp
