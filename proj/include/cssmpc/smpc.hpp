#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cssmpc/conic.hpp"
#include "cssmpc/sysmodel.hpp"
#include "cssmpc/terminal.hpp"

namespace cssmpc::smpc {

/// Stacked prediction matrices for a window of N scheduled realizations:
/// X = a_bar x0 + b_bar U + d_bar W + r_bar over states x0..xN.
struct BlockMatrices {
    MatrixXd a_bar;  // (N+1)nx x nx
    MatrixXd b_bar;  // (N+1)nx x N nu, block lower triangular
    MatrixXd d_bar;  // (N+1)nx x N nw, block lower triangular
    VectorXd r_bar;  // (N+1)nx
    int horizon = 0;
    int nx = 0, nu = 0, nw = 0;

    int state_rows() const { return (horizon + 1) * nx; }
    int control_rows() const { return horizon * nu; }
};

BlockMatrices build_block_matrices(const std::vector<SystemRealization>& window);

enum class GainMode { Diagonal, LowerTriangular };

/// Feedback blocks K_{t,i} acting on the uncontrolled error process,
/// i <= t < N. Diagonal mode keeps only i == t. The assembled matrix has a
/// zero final block column.
struct GainStack {
    GainMode mode = GainMode::Diagonal;
    int horizon = 0;
    int nu = 0, nx = 0;
    std::vector<std::vector<MatrixXd>> rows;  // rows[t][i], i = 0..t

    static GainStack zero(GainMode mode, int horizon, int nu, int nx);
    MatrixXd assemble() const;  // N nu x (N+1) nx
    const MatrixXd& block(int t, int i) const { return rows[t][i]; }
};

struct SmpcOptions {
    GainMode gain_mode = GainMode::Diagonal;
    bool include_terminal_cost = true;
    conic::SolveSettings solver{1e-8, 1e-8, 200};
};

struct SMPCSolution {
    conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
    VectorXd v_stack;
    GainStack gains;
    std::vector<VectorXd> predicted_means;  // stages 0..N
    std::vector<MatrixXd> predicted_covs;
    double cost = 0.0;
    conic::SolverStats stats;

    bool optimal() const { return status == conic::SolveStatus::Optimal; }
    VectorXd feedforward(int t) const { return v_stack.segment(t * nu(), nu()); }
    int nu() const { return gains.nu; }
};

/// Assembled conic program plus the layout needed to read a solution back.
struct BuiltProgram {
    conic::ConicProgram program;
    BlockMatrices bm;
    MatrixXd cov_y;       // a_bar cov a_bar' + d_bar d_bar'
    MatrixXd s_y;         // symmetric PSD square root of cov_y
    VectorXd xbar_const;  // a_bar mean + r_bar
    int n_v = 0;
    struct KParam {
        int t, i, r, c;
    };
    std::vector<KParam> k_params;
};

/// Convex receding-horizon program: feedforward + error-feedback decision
/// variables, SOC cost epigraphs, quantile-tightened chance rows, terminal
/// mean rows and the terminal covariance LMI. Passing null ingredients
/// drops the terminal constraints.
BuiltProgram build_program(const GaussianBelief& belief,
                           const std::vector<SystemRealization>& window,
                           const std::vector<StageCost>& cost, const ChanceSpec& chance,
                           const terminal::TerminalIngredients* ingredients,
                           const SmpcOptions& options);

SMPCSolution solve_smpc(const GaussianBelief& belief,
                        const std::vector<SystemRealization>& window,
                        const std::vector<StageCost>& cost, const ChanceSpec& chance,
                        const terminal::TerminalIngredients* ingredients,
                        const SmpcOptions& options);

enum class InitializationMode { Static, Dynamic };

struct Initialization {
    GaussianBelief belief;
    std::string tag;  // "start", "static", "reconditioned", "open-loop"
    std::optional<SMPCSolution> probe;  // reconditioned solve, reusable by the caller
};

using ProbeSolver = std::function<std::optional<SMPCSolution>(const GaussianBelief&)>;

/// Belief selection: the one-step prediction of the previous solution, or
/// (measured state, zero covariance) when the dynamic probe stays solvable.
Initialization initialize(const SMPCSolution* prev, const VectorXd& x_measured,
                          InitializationMode mode, const ProbeSolver& probe);

struct CandidatePolicy {
    VectorXd v_stack;
    GainStack gains;  // lower-triangular
};

/// The shifted feasible candidate: previous stages moved up one slot, the
/// terminal stage appended from the invariant-set feedforward certificate
/// and the terminal gain. Built without solving.
CandidatePolicy shift_candidate(const SMPCSolution& prev,
                                const terminal::TerminalIngredients& ingredients,
                                const ParameterHull& hull,
                                const std::vector<SystemRealization>& next_window);

struct PolicyEvaluation {
    double cost = 0.0;
    double max_violation = 0.0;  // <= 0 when every constraint holds
    std::vector<VectorXd> means;
    std::vector<MatrixXd> covs;
};

/// Direct evaluation of the program's constraint functionals and expected
/// cost at a fixed policy (no solve).
PolicyEvaluation evaluate_policy(const GaussianBelief& belief,
                                 const std::vector<SystemRealization>& window,
                                 const std::vector<StageCost>& cost, const ChanceSpec& chance,
                                 const terminal::TerminalIngredients* ingredients,
                                 const VectorXd& v_stack, const GainStack& gains,
                                 const SmpcOptions& options);

}  // namespace cssmpc::smpc
