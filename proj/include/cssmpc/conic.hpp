#pragma once

#include <string>
#include <vector>

#include "cssmpc/linalg.hpp"

namespace cssmpc::conic {

enum class ConeKind { Zero, Nonnegative, SecondOrder, Psd };

/// One cone membership constraint: coeffs * x + constants lies in the cone.
/// Psd blocks store svec rows (order d -> d(d+1)/2 rows, off-diagonals
/// scaled by sqrt(2)).
struct ConeBlock {
    ConeKind kind = ConeKind::Nonnegative;
    int order = 0;  // matrix order for Psd, otherwise the row count
    MatrixXd coeffs;
    VectorXd constants;

    int rows() const { return static_cast<int>(constants.size()); }
};

/// Language-neutral conic program: minimize objective'x subject to the cone
/// blocks. Quadratic costs are expected to be lowered to second-order-cone
/// epigraphs by the caller.
class ConicProgram {
public:
    explicit ConicProgram(int n_vars);

    int n_vars() const { return n_vars_; }
    void set_objective(VectorXd c);
    const VectorXd& objective() const { return objective_; }

    void add_zero(MatrixXd coeffs, VectorXd constants);
    void add_nonnegative(MatrixXd coeffs, VectorXd constants);
    /// z = coeffs x + constants with z0 >= ||z(1:)||.
    void add_second_order(MatrixXd coeffs, VectorXd constants);
    /// svec rows of an order x order symmetric matrix required PSD.
    void add_psd(MatrixXd coeffs, VectorXd constants, int order);

    const std::vector<ConeBlock>& blocks() const { return blocks_; }

    /// Deterministic text dump; parse() reproduces the program bitwise.
    std::string dump() const;
    static ConicProgram parse(const std::string& text);

private:
    void add_block(ConeKind kind, int order, MatrixXd coeffs, VectorXd constants);

    int n_vars_ = 0;
    VectorXd objective_;
    std::vector<ConeBlock> blocks_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct SolverStats {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::NumericalFailure;
    VectorXd primal;  // present iff status == Optimal
    double objective = 0.0;
    SolverStats stats;
};

struct SolveSettings {
    double feas_tol = 1e-8;
    double rel_gap_tol = 1e-8;
    int max_iter = 200;
};

/// Homogeneous self-dual interior-point solve over the program's cones.
/// Infeasibility and unboundedness are reported as statuses.
SolveOutcome solve(const ConicProgram& program, const SolveSettings& settings = {});

}  // namespace cssmpc::conic
